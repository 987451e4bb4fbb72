//! Singular trees: the grammar `X`, `I(t1)I(t2)I(t3)`, `I(t1)I'(t2)`, their
//! enumeration up to a leaf-count bound, canonical forms modulo root- and
//! label-preserving isomorphism, homogeneities, and symmetry factors.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::exponent::{rat, Exponent, Rat};

/// Default cap on the leaf count for enumeration; the combinatorics grow
/// quickly past this.
pub const DEFAULT_NOISE_CAP: usize = 8;

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("malformed tree: {0}")]
    Malformed(String),
    #[error("tree is not generated by the singular-tree grammar: {0}")]
    NotSingular(String),
    #[error("enumeration up to noise {requested} exceeds the configured cap {cap}")]
    CapExceeded { requested: usize, cap: usize },
    #[error("parse error at byte {at}: {msg}")]
    Parse { at: usize, msg: String },
}

/// Edge labels: `I` is heat convolution, `IPrime` carries one spatial
/// derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum EdgeLabel {
    I,
    IPrime,
}

impl fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeLabel::I => f.write_str("I"),
            EdgeLabel::IPrime => f.write_str("I'"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Node {
    parent: Option<usize>,
    children: Vec<(EdgeLabel, usize)>,
}

/// A rooted tree with `I`/`I'`-labelled edges.
///
/// Stored as an arena; vertex ids are indices. Two trees are considered
/// equal when root- and label-preserving isomorphic, which is what
/// [`LabelledTree::canonical_form`] decides.
#[derive(Debug, Clone)]
pub struct LabelledTree {
    nodes: Vec<Node>,
    root: usize,
}

impl LabelledTree {
    /// The single-vertex tree `X` (a noise leaf).
    pub fn leaf() -> Self {
        LabelledTree {
            nodes: vec![Node { parent: None, children: Vec::new() }],
            root: 0,
        }
    }

    /// `I(i_child)I'(ip_child)`.
    pub fn bilinear(i_child: LabelledTree, ip_child: LabelledTree) -> Self {
        Self::assemble(vec![(EdgeLabel::I, i_child), (EdgeLabel::IPrime, ip_child)])
    }

    /// `I(a)I(b)I(c)`.
    pub fn trilinear(a: LabelledTree, b: LabelledTree, c: LabelledTree) -> Self {
        Self::assemble(vec![(EdgeLabel::I, a), (EdgeLabel::I, b), (EdgeLabel::I, c)])
    }

    fn assemble(children: Vec<(EdgeLabel, LabelledTree)>) -> Self {
        let mut nodes = vec![Node { parent: None, children: Vec::new() }];
        for (label, sub) in children {
            let offset = nodes.len();
            for (i, n) in sub.nodes.iter().enumerate() {
                nodes.push(Node {
                    parent: n.parent.map(|p| p + offset).or(if i == sub.root {
                        Some(0)
                    } else {
                        None
                    }),
                    children: n.children.iter().map(|(l, c)| (*l, c + offset)).collect(),
                });
            }
            nodes[0].children.push((label, sub.root + offset));
        }
        LabelledTree { nodes, root: 0 }
    }

    /// Build from an explicit vertex count, root id, and `(parent, child,
    /// label)` edge list, validating that the result is a rooted tree.
    pub fn from_parts(
        n_vertices: usize,
        root: usize,
        edges: &[(usize, usize, EdgeLabel)],
    ) -> Result<Self, TreeError> {
        if n_vertices == 0 {
            return Err(TreeError::Malformed("empty vertex set".into()));
        }
        if root >= n_vertices {
            return Err(TreeError::Malformed(format!("root id {root} out of range")));
        }
        if edges.len() != n_vertices - 1 {
            return Err(TreeError::Malformed(format!(
                "{} edges for {} vertices",
                edges.len(),
                n_vertices
            )));
        }
        let mut nodes = vec![Node { parent: None, children: Vec::new() }; n_vertices];
        for &(p, c, label) in edges {
            if p >= n_vertices || c >= n_vertices {
                return Err(TreeError::Malformed(format!("edge ({p},{c}) out of range")));
            }
            if c == root {
                return Err(TreeError::Malformed("root has a parent".into()));
            }
            if nodes[c].parent.is_some() {
                return Err(TreeError::Malformed(format!("vertex {c} has two parents")));
            }
            nodes[c].parent = Some(p);
            nodes[p].children.push((label, c));
        }
        // Reachability from the root certifies connectedness (and with the
        // edge-count check above, acyclicity).
        let mut seen = vec![false; n_vertices];
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            if seen[v] {
                return Err(TreeError::Malformed("cycle detected".into()));
            }
            seen[v] = true;
            stack.extend(nodes[v].children.iter().map(|&(_, c)| c));
        }
        if seen.iter().any(|s| !s) {
            return Err(TreeError::Malformed("disconnected vertex".into()));
        }
        Ok(LabelledTree { nodes, root })
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn vertex_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn children(&self, v: usize) -> &[(EdgeLabel, usize)] {
        &self.nodes[v].children
    }

    pub fn is_leaf_vertex(&self, v: usize) -> bool {
        self.nodes[v].children.is_empty()
    }

    /// Leaf count `m(tau)` (the single-vertex tree counts as one leaf).
    pub fn noise(&self) -> usize {
        self.nodes.iter().filter(|n| n.children.is_empty()).count()
    }

    /// Number of `I'`-labelled edges.
    pub fn deriv_edges(&self) -> usize {
        self.nodes
            .iter()
            .flat_map(|n| n.children.iter())
            .filter(|(l, _)| *l == EdgeLabel::IPrime)
            .count()
    }

    /// Grammar membership: every inner vertex carries either three
    /// `I`-children or one `I`- and one `I'`-child.
    pub fn is_singular(&self) -> bool {
        self.nodes.iter().all(|n| {
            let labels: Vec<EdgeLabel> = n.children.iter().map(|(l, _)| *l).collect();
            match labels.len() {
                0 => true,
                2 => labels.iter().filter(|l| **l == EdgeLabel::I).count() == 1,
                3 => labels.iter().all(|l| *l == EdgeLabel::I),
                _ => false,
            }
        })
    }

    fn encode(&self, v: usize) -> String {
        let n = &self.nodes[v];
        if n.children.is_empty() {
            return "X".to_string();
        }
        let mut parts: Vec<(EdgeLabel, String)> = n
            .children
            .iter()
            .map(|&(l, c)| (l, self.encode(c)))
            .collect();
        parts.sort();
        let mut out = String::new();
        for (l, enc) in parts {
            out.push_str(&l.to_string());
            out.push('(');
            out.push_str(&enc);
            out.push(')');
        }
        out
    }

    /// Canonical byte string: equal iff the trees are root- and
    /// label-preserving isomorphic. Children are sorted by `(label,
    /// encoding)`, so the encoding doubles as a total order on classes.
    pub fn canonical_form(&self) -> String {
        self.encode(self.root)
    }

    /// Rebuild with children in canonical order.
    pub fn canonicalize(&self) -> LabelledTree {
        Self::parse(&self.canonical_form()).expect("canonical form reparses")
    }

    /// Parse the canonical syntax, e.g. `I(X)I'(X)`.
    pub fn parse(s: &str) -> Result<Self, TreeError> {
        let bytes = s.as_bytes();
        let mut pos = 0usize;
        let t = parse_tree(bytes, &mut pos)?;
        if pos != bytes.len() {
            return Err(TreeError::Parse { at: pos, msg: "trailing input".into() });
        }
        Ok(t)
    }

    /// Homogeneity computed by the structural recursion: a leaf contributes
    /// `(2-d)/2 - 2` and each edge adds 2 (`I`) or 1 (`I'`).
    pub fn homogeneity_affine(&self) -> Exponent {
        self.homogeneity_at(self.root)
    }

    fn homogeneity_at(&self, v: usize) -> Exponent {
        let n = &self.nodes[v];
        if n.children.is_empty() {
            // (2-d)/2 - 2 = -1 - d/2
            return Exponent::from_int(-1) - Exponent::d() * rat(1, 2);
        }
        let mut acc = Exponent::zero();
        for &(l, c) in &n.children {
            let step = match l {
                EdgeLabel::I => 2,
                EdgeLabel::IPrime => 1,
            };
            acc += &(self.homogeneity_at(c) + Exponent::from_int(step));
        }
        acc
    }

    /// Closed form `m(2-d)/2 + m - 3 = (2m - 3) - (m/2) d` of the
    /// homogeneity.
    pub fn homogeneity_closed_form(&self) -> Exponent {
        let m = self.noise() as i64;
        Exponent::from_int(2 * m - 3) - Exponent::d() * rat(m, 2)
    }
}

fn parse_tree(b: &[u8], pos: &mut usize) -> Result<LabelledTree, TreeError> {
    if b.get(*pos) == Some(&b'X') {
        *pos += 1;
        return Ok(LabelledTree::leaf());
    }
    let mut children = Vec::new();
    while *pos < b.len() && b[*pos] == b'I' {
        *pos += 1;
        let label = if b.get(*pos) == Some(&b'\'') {
            *pos += 1;
            EdgeLabel::IPrime
        } else {
            EdgeLabel::I
        };
        if b.get(*pos) != Some(&b'(') {
            return Err(TreeError::Parse { at: *pos, msg: "expected '('".into() });
        }
        *pos += 1;
        let sub = parse_tree(b, pos)?;
        if b.get(*pos) != Some(&b')') {
            return Err(TreeError::Parse { at: *pos, msg: "expected ')'".into() });
        }
        *pos += 1;
        children.push((label, sub));
    }
    if children.is_empty() {
        return Err(TreeError::Parse { at: *pos, msg: "expected 'X' or 'I'".into() });
    }
    Ok(LabelledTree::assemble(children))
}

/// Per-tree bookkeeping for a given dimension `d`.
#[derive(Debug, Clone, Serialize)]
pub struct TreeStats {
    pub noise: usize,
    pub deriv_edges: usize,
    /// `|tau|` evaluated at the given `d`.
    pub homogeneity: f64,
    /// `m + k` is odd for every singular tree.
    pub parity_odd: bool,
}

/// Stats for a singular tree; rejects trees outside the grammar.
pub fn tree_stats(t: &LabelledTree, d: f64) -> Result<TreeStats, TreeError> {
    if !t.is_singular() {
        return Err(TreeError::NotSingular(t.canonical_form()));
    }
    let noise = t.noise();
    let deriv_edges = t.deriv_edges();
    Ok(TreeStats {
        noise,
        deriv_edges,
        homogeneity: t.homogeneity_affine().eval_f64(d, 0.0),
        parity_odd: (noise + deriv_edges) % 2 == 1,
    })
}

/// Exact symmetry factor `c_tau`: `c_X = 1`,
/// `c_{I(t1)I'(t2)} = c_{t1} c_{t2}`, and
/// `c_{I(t1)I(t2)I(t3)} = 3!/(4-t)! * c_{t1} c_{t2} c_{t3}` where `t` is the
/// number of distinct classes among the three subtrees.
pub fn symmetry_factor(t: &LabelledTree) -> Result<Rat, TreeError> {
    if !t.is_singular() {
        return Err(TreeError::NotSingular(t.canonical_form()));
    }
    Ok(symmetry_at(t, t.root))
}

fn symmetry_at(t: &LabelledTree, v: usize) -> Rat {
    let children = t.children(v);
    if children.is_empty() {
        return rat(1, 1);
    }
    let mut prod = rat(1, 1);
    for &(_, c) in children {
        prod *= symmetry_at(t, c);
    }
    if children.len() == 3 {
        let classes: BTreeSet<String> = children
            .iter()
            .map(|&(_, c)| subtree_encoding(t, c))
            .collect();
        let distinct = classes.len() as i64; // 1, 2, or 3
        let factorial = |n: i64| (1..=n).product::<i64>().max(1);
        prod *= rat(6, factorial(4 - distinct));
    }
    prod
}

fn subtree_encoding(t: &LabelledTree, v: usize) -> String {
    let sub = extract_branch(t, v);
    sub.canonical_form()
}

/// Copy the branch rooted at `v` into its own tree.
pub fn extract_branch(t: &LabelledTree, v: usize) -> LabelledTree {
    fn build(t: &LabelledTree, v: usize) -> LabelledTree {
        let children = t.children(v);
        if children.is_empty() {
            return LabelledTree::leaf();
        }
        LabelledTree::assemble(
            children
                .iter()
                .map(|&(l, c)| (l, build(t, c)))
                .collect(),
        )
    }
    build(t, v)
}

/// Enumeration of all isomorphism classes with leaf count up to `n_max`,
/// partitioned by leaf count.
#[derive(Debug, Clone)]
pub struct TreeEnumeration {
    by_noise: Vec<Vec<LabelledTree>>,
}

impl TreeEnumeration {
    /// Classes with exactly `m` leaves.
    pub fn class(&self, m: usize) -> &[LabelledTree] {
        &self.by_noise[m - 1]
    }

    pub fn n_max(&self) -> usize {
        self.by_noise.len()
    }

    /// All trees with noise `<= n_max` (the set `T^N_X`), in canonical order
    /// within each class.
    pub fn all(&self) -> impl Iterator<Item = &LabelledTree> {
        self.by_noise.iter().flatten()
    }

    /// All trees except the bare leaf (the set `T^N`).
    pub fn without_leaf(&self) -> impl Iterator<Item = &LabelledTree> {
        self.all().skip(1)
    }

    pub fn total(&self) -> usize {
        self.by_noise.iter().map(|c| c.len()).sum()
    }
}

/// Enumerate with the default cap.
pub fn enumerate_trees(n_max: usize) -> Result<TreeEnumeration, TreeError> {
    enumerate_trees_with_cap(n_max, DEFAULT_NOISE_CAP)
}

/// Canonical-by-construction enumeration: bilinear nodes range over ordered
/// pairs of canonical subtrees (the two slots carry different labels) and
/// trilinear nodes over non-decreasing triples, so no dedup pass is needed.
pub fn enumerate_trees_with_cap(n_max: usize, cap: usize) -> Result<TreeEnumeration, TreeError> {
    if n_max == 0 {
        return Err(TreeError::Malformed("n_max must be >= 1".into()));
    }
    if n_max > cap {
        return Err(TreeError::CapExceeded { requested: n_max, cap });
    }
    let mut by_noise: Vec<Vec<LabelledTree>> = vec![vec![LabelledTree::leaf()]];
    for m in 2..=n_max {
        let mut class: Vec<LabelledTree> = Vec::new();
        for i in 1..m {
            for t1 in &by_noise[i - 1] {
                for t2 in &by_noise[m - i - 1] {
                    class.push(LabelledTree::bilinear(t1.clone(), t2.clone()));
                }
            }
        }
        // Non-decreasing triples (m1, idx1) <= (m2, idx2) <= (m3, idx3).
        let mut flat: Vec<(usize, usize)> = Vec::new();
        for (mi, cl) in by_noise.iter().enumerate() {
            for idx in 0..cl.len() {
                flat.push((mi + 1, idx));
            }
        }
        for a in 0..flat.len() {
            for b in a..flat.len() {
                for c in b..flat.len() {
                    if flat[a].0 + flat[b].0 + flat[c].0 == m {
                        class.push(LabelledTree::trilinear(
                            by_noise[flat[a].0 - 1][flat[a].1].clone(),
                            by_noise[flat[b].0 - 1][flat[b].1].clone(),
                            by_noise[flat[c].0 - 1][flat[c].1].clone(),
                        ));
                    }
                }
            }
        }
        class.sort_by_key(|t| t.canonical_form());
        by_noise.push(class);
    }
    Ok(TreeEnumeration { by_noise })
}
