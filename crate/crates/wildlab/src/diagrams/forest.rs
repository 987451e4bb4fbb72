//! The decorated two-tree forest, its branch structure, the weight `Lambda`,
//! and the saturation/safe-deletion combinatorics.

use serde::Serialize;

use super::{DiagramError, EvalContext};
use crate::exponent::{rat, Exponent, Rat};
use crate::trees::{EdgeLabel, LabelledTree};

/// A contracting edge: an unordered leaf pair with its kernel weight
/// exponent `a_e`.
#[derive(Debug, Clone, Serialize)]
pub struct ContractingEdge {
    pub a: usize,
    pub b: usize,
    pub weight: Exponent,
}

impl ContractingEdge {
    pub fn new(u: usize, v: usize, weight: Exponent) -> Self {
        let (a, b) = if u <= v { (u, v) } else { (v, u) };
        ContractingEdge { a, b, weight }
    }

    pub fn touches(&self, v: usize) -> bool {
        self.a == v || self.b == v
    }

    pub fn other(&self, v: usize) -> usize {
        if self.a == v {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct Vertex {
    alive: bool,
    parent: Option<usize>,
    children: Vec<usize>,
    /// Time-weight exponent `beta_v`.
    beta: Exponent,
    /// Decoration `gamma_e` of the edge to the parent (unused at roots).
    gamma: Exponent,
    /// Multi-index `k_e` of the edge to the parent (unused at roots).
    k: Vec<u16>,
}

/// A forest of two decorated rooted trees with a contraction on its leaves.
///
/// Vertex ids are stable under the reduction steps; removed vertices are
/// tombstoned so traces can refer to them.
#[derive(Debug, Clone, Serialize)]
pub struct DecoratedContractedForest {
    verts: Vec<Vertex>,
    rho: usize,
    rho_bar: usize,
    contraction: Vec<ContractingEdge>,
    n_dim: usize,
}

/// Builder-side description of one tree vertex.
pub struct VertexSpec {
    pub parent: Option<usize>,
    pub beta: Exponent,
    pub gamma: Exponent,
    pub k: Vec<u16>,
}

impl DecoratedContractedForest {
    /// Assemble a forest from explicit vertex specs. Exactly two vertices
    /// must be parentless; the first is `rho`, the second `rho_bar`.
    pub fn from_specs(
        specs: Vec<VertexSpec>,
        contraction: Vec<ContractingEdge>,
        n_dim: usize,
    ) -> Result<Self, DiagramError> {
        let mut verts: Vec<Vertex> = specs
            .iter()
            .map(|s| Vertex {
                alive: true,
                parent: s.parent,
                children: Vec::new(),
                beta: s.beta.clone(),
                gamma: s.gamma.clone(),
                k: s.k.clone(),
            })
            .collect();
        let mut roots = Vec::new();
        for i in 0..verts.len() {
            match verts[i].parent {
                Some(p) => {
                    if p >= verts.len() {
                        return Err(DiagramError::InvalidForest(format!(
                            "parent {p} out of range"
                        )));
                    }
                    verts[p].children.push(i);
                }
                None => roots.push(i),
            }
        }
        if roots.len() != 2 {
            return Err(DiagramError::InvalidForest(format!(
                "expected exactly two roots, found {}",
                roots.len()
            )));
        }
        let f = DecoratedContractedForest {
            verts,
            rho: roots[0],
            rho_bar: roots[1],
            contraction,
            n_dim,
        };
        for e in &f.contraction {
            if !f.is_leaf(e.a) || !f.is_leaf(e.b) || e.a == e.b {
                return Err(DiagramError::InvalidForest(format!(
                    "contracting edge ({}, {}) must pair two distinct leaves",
                    e.a, e.b
                )));
            }
        }
        for v in 0..f.verts.len() {
            if f.pairs_at(v).count() > 1 {
                return Err(DiagramError::InvalidForest(format!(
                    "leaf {v} appears in more than one contracting edge"
                )));
            }
        }
        Ok(f)
    }

    /// Build one undecorated tree of the forest from a singular tree, with
    /// the canonical decorations used by the two-point construction: Dirac
    /// leaves (`beta = -1`), `beta = 0` inner, `gamma = 0`, and `|k| = 1` on
    /// derivative edges (a unit in axis 0).
    pub(crate) fn push_tree(specs: &mut Vec<VertexSpec>, tree: &LabelledTree, n_dim: usize) {
        fn visit(
            specs: &mut Vec<VertexSpec>,
            tree: &LabelledTree,
            v: usize,
            parent: Option<usize>,
            label: Option<EdgeLabel>,
            n_dim: usize,
        ) {
            let is_leaf = tree.is_leaf_vertex(v);
            let mut k = vec![0u16; n_dim];
            if label == Some(EdgeLabel::IPrime) {
                k[0] = 1;
            }
            let id = specs.len();
            specs.push(VertexSpec {
                parent,
                beta: if is_leaf {
                    Exponent::from_int(-1)
                } else {
                    Exponent::zero()
                },
                gamma: Exponent::zero(),
                k,
            });
            for &(l, c) in tree.children(v) {
                visit(specs, tree, c, Some(id), Some(l), n_dim);
            }
        }
        visit(specs, tree, tree.root(), None, None, n_dim);
    }

    pub fn rho(&self) -> usize {
        self.rho
    }

    pub fn rho_bar(&self) -> usize {
        self.rho_bar
    }

    pub fn n_dim(&self) -> usize {
        self.n_dim
    }

    pub fn contraction(&self) -> &[ContractingEdge] {
        &self.contraction
    }

    pub fn is_root(&self, v: usize) -> bool {
        v == self.rho || v == self.rho_bar
    }

    pub fn is_alive(&self, v: usize) -> bool {
        self.verts[v].alive
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.verts[v].alive && self.verts[v].children.is_empty()
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.verts[v].parent
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.verts[v].children
    }

    pub fn beta(&self, v: usize) -> &Exponent {
        &self.verts[v].beta
    }

    pub fn gamma(&self, v: usize) -> &Exponent {
        &self.verts[v].gamma
    }

    pub fn k_abs(&self, v: usize) -> i64 {
        self.verts[v].k.iter().map(|&x| x as i64).sum()
    }

    pub fn set_beta(&mut self, v: usize, beta: Exponent) {
        self.verts[v].beta = beta;
    }

    /// Dirac vertices are non-root leaves with `beta = -1` exactly.
    pub fn is_dirac(&self, v: usize) -> bool {
        self.is_leaf(v) && !self.is_root(v) && self.verts[v].beta == Exponent::from_int(-1)
    }

    pub fn alive_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.verts.len()).filter(|&v| self.verts[v].alive)
    }

    pub fn leaves(&self) -> Vec<usize> {
        self.alive_vertices().filter(|&v| self.is_leaf(v)).collect()
    }

    /// Leaves excluding isolated roots.
    pub fn non_root_leaves(&self) -> Vec<usize> {
        self.leaves().into_iter().filter(|&v| !self.is_root(v)).collect()
    }

    pub fn alive_edge_count(&self) -> usize {
        self.alive_vertices().filter(|&v| self.verts[v].parent.is_some()).count()
    }

    /// Which tree a vertex belongs to: true for the `rho` tree.
    pub fn in_first_tree(&self, mut v: usize) -> bool {
        while let Some(p) = self.verts[v].parent {
            v = p;
        }
        v == self.rho
    }

    /// All vertices of the branch rooted at `v` (descendants including `v`).
    pub fn branch_vertices(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            out.push(u);
            stack.extend_from_slice(&self.verts[u].children);
        }
        out
    }

    pub fn branch_leaves(&self, v: usize) -> Vec<usize> {
        self.branch_vertices(v)
            .into_iter()
            .filter(|&u| self.is_leaf(u))
            .collect()
    }

    fn pairs_at(&self, v: usize) -> impl Iterator<Item = &ContractingEdge> {
        self.contraction.iter().filter(move |e| e.touches(v))
    }

    /// Partner of a leaf in the contraction, if paired.
    pub fn partner(&self, v: usize) -> Option<usize> {
        self.pairs_at(v).next().map(|e| e.other(v))
    }

    pub fn pair_weight(&self, v: usize) -> Option<&Exponent> {
        self.pairs_at(v).next().map(|e| &e.weight)
    }

    /// Contracting edges with exactly one endpoint inside the branch at `v`.
    pub fn cross_boundary_edges(&self, v: usize) -> Vec<&ContractingEdge> {
        let branch = self.branch_vertices(v);
        let inside = |u: usize| branch.contains(&u);
        self.contraction
            .iter()
            .filter(|e| inside(e.a) != inside(e.b))
            .collect()
    }

    /// Contracting edges pairing a leaf of one tree with a leaf of the
    /// other; the admissible range of the spatial exponent `theta` is their
    /// maximal weight.
    pub fn cross_tree_edges(&self) -> Vec<&ContractingEdge> {
        self.contraction
            .iter()
            .filter(|e| self.in_first_tree(e.a) != self.in_first_tree(e.b))
            .collect()
    }

    /// `max { a_e }` over cross-tree contracting edges, with `max {} = 0`.
    pub fn theta_max(&self, ctx: &EvalContext) -> Exponent {
        let mut best: Option<(Rat, Exponent)> = None;
        for e in self.cross_tree_edges() {
            let v = ctx.eval(&e.weight);
            match &best {
                Some((bv, _)) if *bv >= v => {}
                _ => best = Some((v, e.weight.clone())),
            }
        }
        best.map(|(_, e)| e).unwrap_or_else(Exponent::zero)
    }

    /// Leaf weight `b_l`: the weight of the contracting edge at `l`, or 0.
    pub fn leaf_weight(&self, l: usize) -> Exponent {
        self.pair_weight(l).cloned().unwrap_or_else(Exponent::zero)
    }

    /// The branch weight: `|E| + sum over edges of (gamma - |k|/2) + sum of
    /// beta over vertices - 1/4 sum of b_l over leaves`.
    pub fn lambda(&self, v: usize) -> Exponent {
        let mut acc = Exponent::zero();
        for u in self.branch_vertices(v) {
            acc += &self.verts[u].beta;
            if u != v {
                // Edge from the parent of u (inside the branch).
                acc += &(Exponent::from_int(1) + &self.verts[u].gamma
                    - &Exponent::constant(rat(self.k_abs(u), 2)));
            }
            if self.is_leaf(u) {
                acc -= &self.leaf_weight(u).scale(&rat(1, 4));
            }
        }
        acc
    }

    /// The same weight via the child recursion
    /// `Lambda(u) = beta_u + sum over children l of
    /// {Lambda(l) + 1 + gamma - |k|/2}`, with `Lambda(leaf) = beta - a/4`.
    pub fn lambda_recursive(&self, v: usize) -> Exponent {
        if self.is_leaf(v) {
            return self.verts[v].beta.clone() - &self.leaf_weight(v).scale(&rat(1, 4));
        }
        let mut acc = self.verts[v].beta.clone();
        for &c in &self.verts[v].children {
            acc += &(self.lambda_recursive(c) + Exponent::from_int(1) + &self.verts[c].gamma
                - &Exponent::constant(rat(self.k_abs(c), 2)));
        }
        acc
    }

    /// `Lambda` of the whole forest: both root branches.
    pub fn lambda_total(&self) -> Exponent {
        self.lambda(self.rho) + self.lambda(self.rho_bar)
    }

    /// A branch is saturated when it has at least one leaf and each of its
    /// leaves is paired with another leaf of the same branch.
    pub fn is_saturated_branch(&self, v: usize) -> bool {
        let leaves = self.branch_leaves(v);
        !leaves.is_empty()
            && leaves
                .iter()
                .all(|&l| matches!(self.partner(l), Some(p) if leaves.contains(&p)))
    }

    /// Pairs of the contraction with both endpoints inside the branch at `v`.
    pub fn induced_contraction(&self, v: usize) -> Vec<&ContractingEdge> {
        let leaves = self.branch_leaves(v);
        self.contraction
            .iter()
            .filter(|e| leaves.contains(&e.a) && leaves.contains(&e.b))
            .collect()
    }

    /// Scan all branches for a saturation.
    pub fn classify(&self) -> Classification {
        for v in self.alive_vertices() {
            if self.is_saturated_branch(v) {
                return Classification::Unsafe { saturated_root: v };
            }
        }
        Classification::Safe
    }

    /// A branch is minimal when its induced contraction is nonempty and
    /// every strict sub-branch has empty induced contraction.
    pub fn is_minimal_branch(&self, v: usize) -> bool {
        if self.induced_contraction(v).is_empty() {
            return false;
        }
        self.branch_vertices(v)
            .into_iter()
            .filter(|&u| u != v)
            .all(|u| self.induced_contraction(u).is_empty())
    }

    /// Whether the pair `{a, b}` lies inside some minimal branch.
    pub fn is_safe_deletion(&self, a: usize, b: usize) -> bool {
        self.alive_vertices().any(|v| {
            self.is_minimal_branch(v) && {
                let leaves = self.branch_leaves(v);
                leaves.contains(&a) && leaves.contains(&b)
            }
        })
    }

    /// A safe deletion if one exists (ties broken by vertex-id order), else
    /// the contracting edge of minimal weight, or `None` when the
    /// contraction is empty.
    pub fn find_safe_deletion(&self, ctx: &EvalContext) -> Option<SafeDeletion> {
        let mut safe: Vec<(usize, usize)> = Vec::new();
        for v in self.alive_vertices() {
            if self.is_minimal_branch(v) {
                for e in self.induced_contraction(v) {
                    safe.push((e.a, e.b));
                }
            }
        }
        if !safe.is_empty() {
            safe.sort();
            safe.dedup();
            return Some(SafeDeletion { edge: safe[0], is_safe: true });
        }
        let mut best: Option<((usize, usize), Rat)> = None;
        for e in &self.contraction {
            let v = ctx.eval(&e.weight);
            match &best {
                Some((be, bv)) if *bv < v || (*bv == v && *be <= (e.a, e.b)) => {}
                _ => best = Some(((e.a, e.b), v)),
            }
        }
        best.map(|(edge, _)| SafeDeletion { edge, is_safe: false })
    }

    /// Remove a leaf together with its parent edge.
    pub(crate) fn remove_leaf(&mut self, v: usize) {
        debug_assert!(self.is_leaf(v) && !self.is_root(v));
        let p = self.verts[v].parent.expect("non-root leaf has a parent");
        self.verts[p].children.retain(|&c| c != v);
        self.verts[v].alive = false;
        self.verts[v].parent = None;
    }

    pub(crate) fn remove_contracting_edge(&mut self, a: usize, b: usize) {
        self.contraction.retain(|e| !(e.touches(a) && e.touches(b)));
    }

    /// Re-anchor the pair `{v, w}` to `{u, w}`, keeping the weight.
    pub(crate) fn reanchor_pair(&mut self, v: usize, w: usize, u: usize) {
        for e in &mut self.contraction {
            if e.touches(v) && e.touches(w) {
                let weight = e.weight.clone();
                *e = ContractingEdge::new(u, w, weight);
                return;
            }
        }
        panic!("pair ({v}, {w}) not present");
    }
}

/// Safety classification of a contracted forest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    Safe,
    Unsafe { saturated_root: usize },
}

/// The edge chosen for a Case-3 step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SafeDeletion {
    pub edge: (usize, usize),
    pub is_safe: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::rat_from_f64;

    fn ctx(d: f64) -> EvalContext {
        EvalContext::new(rat_from_f64(d).unwrap(), rat(0, 1), 2)
    }

    fn plain_weight() -> Exponent {
        Exponent::d() - Exponent::from_int(2)
    }

    /// Two single-edge trees with the leaves paired (the fundamental
    /// two-edge forest).
    fn two_edge_forest(k1: u16, k2: u16) -> DecoratedContractedForest {
        let mk = |parent: Option<usize>, beta: i64, k: u16| VertexSpec {
            parent,
            beta: Exponent::from_int(beta),
            gamma: Exponent::zero(),
            k: vec![k, 0],
        };
        DecoratedContractedForest::from_specs(
            vec![mk(None, 0, 0), mk(Some(0), -1, k1), mk(None, 0, 0), mk(Some(2), -1, k2)],
            vec![ContractingEdge::new(1, 3, plain_weight())],
            2,
        )
        .unwrap()
    }

    #[test]
    fn lambda_matches_two_edge_formula() {
        let f = two_edge_forest(0, 1);
        // Lambda(rho) = 1 + beta_v + beta_rho + gamma - a/4 - |k|/2
        let expect_rho = Exponent::from_int(1) + Exponent::from_int(-1)
            - plain_weight().scale(&rat(1, 4));
        let expect_rho_bar = expect_rho.clone() - Exponent::constant(rat(1, 2));
        assert_eq!(f.lambda(f.rho()), expect_rho);
        assert_eq!(f.lambda(f.rho_bar()), expect_rho_bar);
        assert_eq!(f.lambda_recursive(f.rho()), expect_rho);
        assert_eq!(f.lambda_recursive(f.rho_bar()), expect_rho_bar);
    }

    #[test]
    fn lambda_of_unpaired_leaf_is_beta() {
        let f = DecoratedContractedForest::from_specs(
            vec![
                VertexSpec {
                    parent: None,
                    beta: Exponent::constant(rat(-1, 2)),
                    gamma: Exponent::zero(),
                    k: vec![0, 0],
                },
                VertexSpec {
                    parent: None,
                    beta: Exponent::from_int(0),
                    gamma: Exponent::zero(),
                    k: vec![0, 0],
                },
            ],
            vec![],
            2,
        )
        .unwrap();
        assert_eq!(f.lambda(0), Exponent::constant(rat(-1, 2)));
        assert_eq!(f.theta_max(&ctx(3.0)), Exponent::zero());
    }

    #[test]
    fn saturation_is_detected() {
        // Single-tree-style check inside a two-tree forest: pair the two
        // leaves of the first tree internally.
        let mut specs = Vec::new();
        let tau = LabelledTree::bilinear(LabelledTree::leaf(), LabelledTree::leaf());
        DecoratedContractedForest::push_tree(&mut specs, &tau, 2);
        DecoratedContractedForest::push_tree(&mut specs, &tau, 2);
        // ids: 0 root, 1/2 leaves; 3 root, 4/5 leaves.
        let internal = DecoratedContractedForest::from_specs(
            specs,
            vec![
                ContractingEdge::new(1, 2, plain_weight()),
                ContractingEdge::new(4, 5, plain_weight()),
            ],
            2,
        )
        .unwrap();
        assert!(matches!(
            internal.classify(),
            Classification::Unsafe { saturated_root: 0 }
        ));

        let mut specs = Vec::new();
        DecoratedContractedForest::push_tree(&mut specs, &tau, 2);
        DecoratedContractedForest::push_tree(&mut specs, &tau, 2);
        let cross = DecoratedContractedForest::from_specs(
            specs,
            vec![
                ContractingEdge::new(1, 4, plain_weight()),
                ContractingEdge::new(2, 5, plain_weight()),
            ],
            2,
        )
        .unwrap();
        assert_eq!(cross.classify(), Classification::Safe);
        assert_eq!(cross.cross_tree_edges().len(), 2);
    }

    #[test]
    fn safe_deletion_follows_minimal_branches() {
        // The nine-vertex contracted tree with three contraction edges, of
        // which the two inside the unique minimal branch are safe and the
        // one spanning the two sub-branches is not. A second bare-root tree
        // makes it a two-tree forest.
        //
        // Root r (id 0) with children: leaf f (1), inner u (2), inner w (3).
        // u has children: leaf d (4), leaf e (5), inner y (6) with leaf
        // children a (7), b (8), c (9). w has leaf children g (10), h (11).
        let v = |parent: Option<usize>, beta: i64| VertexSpec {
            parent,
            beta: Exponent::from_int(beta),
            gamma: Exponent::zero(),
            k: vec![0, 0],
        };
        let mut specs = vec![
            v(None, 0),
            v(Some(0), -1),
            v(Some(0), 0),
            v(Some(0), 0),
            v(Some(2), -1),
            v(Some(2), -1),
            v(Some(2), 0),
            v(Some(6), -1),
            v(Some(6), -1),
            v(Some(6), -1),
            v(Some(3), -1),
            v(Some(3), -1),
        ];
        specs.push(v(None, 0)); // bare second root, id 12
        let f = DecoratedContractedForest::from_specs(
            specs,
            vec![
                // orange: a -- h (crosses u's branch and w's branch)
                ContractingEdge::new(7, 11, plain_weight()),
                // green: b -- e and c -- d (inside u's branch)
                ContractingEdge::new(8, 5, plain_weight()),
                ContractingEdge::new(9, 4, plain_weight()),
            ],
            2,
        )
        .unwrap();
        assert!(f.is_minimal_branch(2));
        assert!(!f.is_minimal_branch(0));
        assert!(!f.is_minimal_branch(6));
        let choice = f.find_safe_deletion(&ctx(3.0)).unwrap();
        assert!(choice.is_safe);
        assert!(choice.edge == (4, 9) || choice.edge == (5, 8));
        // The two green edges are safe deletions; the orange one is not.
        assert!(f.is_safe_deletion(5, 8));
        assert!(f.is_safe_deletion(4, 9));
        assert!(!f.is_safe_deletion(7, 11));
        // Empty contraction: absent.
        let mut g = f.clone();
        g.remove_contracting_edge(8, 5);
        g.remove_contracting_edge(9, 4);
        g.remove_contracting_edge(7, 11);
        assert!(g.find_safe_deletion(&ctx(3.0)).is_none());
        // The figure's forest is safe (no saturated branch).
        assert_eq!(f.classify(), Classification::Safe);
    }
}
