//! The inductive reduction behind the two-point bound: repeatedly strip
//! unpaired leaves (Case 1), contract only-child leaves into their parents
//! (Case 2), or delete a contracting edge (Case 3, preferring safe
//! deletions), until one of the two base shapes remains. Every step rewrites
//! the time weight of the touched parent so that the branch weight `Lambda`
//! of both root branches is preserved exactly; the emitted certificate
//! records the trace and re-checks the hypotheses after each step.

use serde::Serialize;

use super::{
    verify_conditions, Classification, DecoratedContractedForest, DiagramError, EvalContext,
};
use crate::exponent::{rat, ratio_to_f64, Exponent, Rat};

/// Which rule a trace step applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StepCase {
    Base1,
    Base2,
    Case1,
    Case2,
    Case3,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceStep {
    pub case: StepCase,
    pub removed_vertices: Vec<usize>,
    pub removed_contracting_edge: Option<(usize, usize)>,
    /// Whether the Case-3 edge was a safe deletion.
    pub safe_deletion: Option<bool>,
    /// Case 2: the pair `(v, w)` re-anchored to `(u, w)`.
    pub reanchored: Option<[(usize, usize); 2]>,
    /// New time-weight exponents, by vertex.
    pub decoration_updates: Vec<(usize, Exponent)>,
    /// Time-increment exponent consumed by this step (time-difference runs).
    pub zeta_consumed: Exponent,
    /// `|E| + |C|` after the step; strictly decreasing along the trace.
    pub measure_after: usize,
}

/// The time-increment query: subsets `U` and `W` of the root children, with
/// at most one `U`-element per tree, and the increment exponents
/// `kappa`, `kappa_bar` in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct TimeDifferenceQuery {
    pub u: Vec<usize>,
    pub w: Vec<usize>,
    pub kappa: Rat,
    pub kappa_bar: Rat,
}

impl TimeDifferenceQuery {
    /// `zeta = kappa 1_{|U cap C_rho| = 1} + kappa_bar 1_{|U cap C_rhobar| = 1}`.
    pub fn zeta(&self, f: &DecoratedContractedForest) -> Rat {
        let mut z = rat(0, 1);
        if self.u.iter().any(|&v| f.in_first_tree(v)) {
            z += &self.kappa;
        }
        if self.u.iter().any(|&v| !f.in_first_tree(v)) {
            z += &self.kappa_bar;
        }
        z
    }
}

/// The certified bound: final exponents, the reduction trace, and the
/// directly computed branch weights the trace must reproduce.
#[derive(Debug, Clone, Serialize)]
pub struct BoundCertificate {
    /// Canonical forms of the two component trees (shape only).
    pub trees: [String; 2],
    pub theta: Exponent,
    /// `Lambda(F_rho)` computed directly on the input forest.
    pub lambda_rho: Exponent,
    pub lambda_rho_bar: Exponent,
    /// Exponent of `t`: `Lambda(F_rho) + theta/4` (plain bound).
    pub time_exponent_rho: Exponent,
    pub time_exponent_rho_bar: Exponent,
    /// Exponent of the spatial separation: `-theta`.
    pub spatial_exponent: Exponent,
    /// Time-difference runs only: the increment exponent `zeta` and the
    /// total time exponent `Lambda(F) + theta/2 - zeta`.
    pub zeta: Option<Exponent>,
    pub time_exponent_total: Option<Exponent>,
    pub classification: Classification,
    /// For unsafe contractions: whether the saturated branch carries an odd
    /// number of derivative edges (the parity behind the vanishing).
    pub saturated_branch_odd_derivatives: Option<bool>,
    pub theta_max_initial: f64,
    pub trace: Vec<TraceStep>,
    pub valid: bool,
    pub failure: Option<String>,
}

fn shape_string(f: &DecoratedContractedForest, root: usize) -> String {
    fn enc(f: &DecoratedContractedForest, v: usize) -> String {
        if f.is_leaf(v) {
            return "X".into();
        }
        // Sort plain edges before derivative edges, as in the canonical
        // tree encoding.
        let mut parts: Vec<(bool, String)> = f
            .children(v)
            .iter()
            .map(|&c| (f.k_abs(c) % 2 == 1, enc(f, c)))
            .collect();
        parts.sort();
        parts
            .into_iter()
            .map(|(prime, e)| format!("{}({e})", if prime { "I'" } else { "I" }))
            .collect()
    }
    enc(f, root)
}

fn deriv_edges_in_branch(f: &DecoratedContractedForest, root: usize) -> usize {
    f.branch_vertices(root)
        .into_iter()
        .filter(|&v| v != root && f.k_abs(v) == 1)
        .count()
}

struct Reducer<'a> {
    f: DecoratedContractedForest,
    ctx: &'a EvalContext,
    /// Pending time-increment adjustments: vertex id -> exponent to consume
    /// when the vertex is integrated out.
    pending: Vec<(usize, Rat)>,
    zeta_consumed: Rat,
    trace: Vec<TraceStep>,
    lambda_target: Exponent,
    prev_theta_max: Rat,
    prev_measure: usize,
    failure: Option<String>,
}

impl<'a> Reducer<'a> {
    fn new(f: &DecoratedContractedForest, ctx: &'a EvalContext, pending: Vec<(usize, Rat)>) -> Self {
        let lambda_target = f.lambda_total();
        let prev_theta_max = ctx.eval(&f.theta_max(ctx));
        let prev_measure = f.alive_edge_count() + f.contraction().len() + 1;
        Reducer {
            f: f.clone(),
            ctx,
            pending,
            zeta_consumed: rat(0, 1),
            trace: Vec::new(),
            lambda_target,
            prev_theta_max,
            prev_measure,
            failure: None,
        }
    }

    fn adjustment(&mut self, v: usize) -> Rat {
        if let Some(i) = self.pending.iter().position(|(u, _)| *u == v) {
            let (_, k) = self.pending.swap_remove(i);
            self.zeta_consumed += &k;
            k
        } else {
            rat(0, 1)
        }
    }

    /// `1 + beta_v + gamma_v - |k_v|/2` — the contribution a removed child
    /// folds into its parent.
    fn fold_in(&self, v: usize) -> Exponent {
        Exponent::from_int(1)
            + self.f.beta(v)
            + self.f.gamma(v)
            - &Exponent::constant(rat(self.f.k_abs(v), 2))
    }

    fn record(&mut self, mut step: TraceStep) {
        // Base steps integrate out everything that remains.
        step.measure_after = match step.case {
            StepCase::Base1 | StepCase::Base2 => 0,
            _ => self.f.alive_edge_count() + self.f.contraction().len(),
        };
        self.trace.push(step);
    }

    /// Post-step validation: hypotheses still hold, `Lambda` is preserved up
    /// to the consumed increments, the admissible `theta` range did not
    /// shrink, and the termination measure decreased.
    fn validate(&mut self) -> bool {
        let measure = self.f.alive_edge_count() + self.f.contraction().len();
        if measure >= self.prev_measure {
            self.failure = Some(format!(
                "termination measure did not decrease ({} -> {})",
                self.prev_measure, measure
            ));
            return false;
        }
        self.prev_measure = measure;
        let want = self.lambda_target.clone()
            - &Exponent::constant(self.zeta_consumed.clone());
        let got = self.f.lambda_total();
        if got != want {
            self.failure = Some(format!(
                "branch weight drifted: expected {want}, got {got}"
            ));
            return false;
        }
        let tm = self.ctx.eval(&self.f.theta_max(self.ctx));
        if tm < self.prev_theta_max {
            self.failure = Some("admissible theta range shrank".into());
            return false;
        }
        self.prev_theta_max = tm;
        match verify_conditions(&self.f, self.ctx) {
            Ok(rep) if rep.pass => true,
            Ok(_) => {
                self.failure = Some(format!(
                    "hypotheses violated after step {}",
                    self.trace.len()
                ));
                false
            }
            Err(e) => {
                self.failure = Some(format!("hypothesis check errored: {e}"));
                false
            }
        }
    }

    /// Run to a base case; returns the per-tree final exponents
    /// (time exponents before adding `theta` contributions).
    fn run(&mut self) -> Option<(Exponent, Exponent)> {
        loop {
            // Base case 1: both trees reduced to bare roots.
            if self.f.is_leaf(self.f.rho()) && self.f.is_leaf(self.f.rho_bar()) {
                let e_rho = self.f.beta(self.f.rho()).clone();
                let e_bar = self.f.beta(self.f.rho_bar()).clone();
                self.record(TraceStep {
                    case: StepCase::Base1,
                    removed_vertices: vec![],
                    removed_contracting_edge: None,
                    safe_deletion: None,
                    reanchored: None,
                    decoration_updates: vec![],
                    zeta_consumed: Exponent::zero(),
                    measure_after: 0,
                });
                if !self.pending.is_empty() {
                    self.failure =
                        Some("time-increment vertices were never integrated".into());
                    return None;
                }
                return Some((e_rho, e_bar));
            }

            // Base case 2: two single-edge trees with the leaves paired.
            let rho = self.f.rho();
            let rho_bar = self.f.rho_bar();
            let single = |r: usize| -> Option<usize> {
                match self.f.children(r) {
                    [v] if self.f.is_leaf(*v) => Some(*v),
                    _ => None,
                }
            };
            if let (Some(v), Some(vb)) = (single(rho), single(rho_bar)) {
                if !self.f.contraction().is_empty() {
                    debug_assert_eq!(self.f.partner(v), Some(vb));
                    let a = self.f.pair_weight(v).cloned().unwrap_or_else(Exponent::zero);
                    let adj_v = self.adjustment(v);
                    let adj_vb = self.adjustment(vb);
                    let e_rho = self.f.beta(rho).clone()
                        + self.fold_in(v)
                        - &a.scale(&rat(1, 4))
                        - &Exponent::constant(adj_v);
                    let e_bar = self.f.beta(rho_bar).clone()
                        + self.fold_in(vb)
                        - &a.scale(&rat(1, 4))
                        - &Exponent::constant(adj_vb);
                    self.record(TraceStep {
                        case: StepCase::Base2,
                        removed_vertices: vec![v, vb],
                        removed_contracting_edge: Some((v.min(vb), v.max(vb))),
                        safe_deletion: None,
                        reanchored: None,
                        decoration_updates: vec![
                            (rho, e_rho.clone()),
                            (rho_bar, e_bar.clone()),
                        ],
                        zeta_consumed: Exponent::constant(self.zeta_consumed.clone()),
                        measure_after: 0,
                    });
                    return Some((e_rho, e_bar));
                }
            }

            // Case 1: an unpaired non-root leaf.
            let unpaired: Option<usize> = self
                .f
                .non_root_leaves()
                .into_iter()
                .find(|&v| self.f.partner(v).is_none());
            if let Some(v) = unpaired {
                let p = self.f.parent(v).expect("non-root leaf has a parent");
                let adj = self.adjustment(v);
                let new_beta = self.f.beta(p).clone() + self.fold_in(v)
                    - &Exponent::constant(adj.clone());
                self.f.set_beta(p, new_beta.clone());
                self.f.remove_leaf(v);
                self.record(TraceStep {
                    case: StepCase::Case1,
                    removed_vertices: vec![v],
                    removed_contracting_edge: None,
                    safe_deletion: None,
                    reanchored: None,
                    decoration_updates: vec![(p, new_beta)],
                    zeta_consumed: Exponent::constant(adj),
                    measure_after: 0,
                });
                if !self.validate() {
                    return None;
                }
                continue;
            }

            // Case 2: an inner non-root vertex whose only child is a leaf.
            let case2: Option<usize> = self.f.alive_vertices().find(|&u| {
                !self.f.is_root(u)
                    && self.f.children(u).len() == 1
                    && self.f.is_leaf(self.f.children(u)[0])
            });
            if let Some(u) = case2 {
                let v = self.f.children(u)[0];
                let w = self.f.partner(v).expect("leaf paired in this case");
                debug_assert!(!self.pending.iter().any(|(x, _)| *x == v));
                let new_beta = self.f.beta(u).clone() + self.fold_in(v);
                self.f.set_beta(u, new_beta.clone());
                self.f.reanchor_pair(v, w, u);
                self.f.remove_leaf(v);
                self.record(TraceStep {
                    case: StepCase::Case2,
                    removed_vertices: vec![v],
                    removed_contracting_edge: None,
                    safe_deletion: None,
                    reanchored: Some([(v.min(w), v.max(w)), (u.min(w), u.max(w))]),
                    decoration_updates: vec![(u, new_beta)],
                    zeta_consumed: Exponent::zero(),
                    measure_after: 0,
                });
                if !self.validate() {
                    return None;
                }
                continue;
            }

            // Case 3: delete a contracting edge.
            let choice = match self.f.find_safe_deletion(self.ctx) {
                Some(c) => c,
                None => {
                    self.failure = Some(
                        "no contracting edge available outside the base cases".into(),
                    );
                    return None;
                }
            };
            let (u, v) = choice.edge;
            let a = self
                .f
                .pair_weight(u)
                .cloned()
                .expect("chosen edge exists");
            let pu = self.f.parent(u).expect("contracted leaves are not roots");
            let pv = self.f.parent(v).expect("contracted leaves are not roots");
            let adj_u = self.adjustment(u);
            let adj_v = self.adjustment(v);
            let mut updates = Vec::new();
            if pu != pv {
                let bu = self.f.beta(pu).clone() + self.fold_in(u)
                    - &a.scale(&rat(1, 4))
                    - &Exponent::constant(adj_u.clone());
                let bv = self.f.beta(pv).clone() + self.fold_in(v)
                    - &a.scale(&rat(1, 4))
                    - &Exponent::constant(adj_v.clone());
                self.f.set_beta(pu, bu.clone());
                self.f.set_beta(pv, bv.clone());
                updates.push((pu, bu));
                updates.push((pv, bv));
            } else {
                let b = self.f.beta(pu).clone()
                    + self.fold_in(u)
                    + self.fold_in(v)
                    - &a.scale(&rat(1, 2))
                    - &Exponent::constant(adj_u.clone() + &adj_v);
                self.f.set_beta(pu, b.clone());
                updates.push((pu, b));
            }
            self.f.remove_contracting_edge(u, v);
            self.f.remove_leaf(u);
            self.f.remove_leaf(v);
            self.record(TraceStep {
                case: StepCase::Case3,
                removed_vertices: vec![u, v],
                removed_contracting_edge: Some((u.min(v), u.max(v))),
                safe_deletion: Some(choice.is_safe),
                reanchored: None,
                decoration_updates: updates,
                zeta_consumed: Exponent::constant(adj_u + &adj_v),
                measure_after: 0,
            });
            if !self.validate() {
                return None;
            }
        }
    }
}

fn check_theta(
    f: &DecoratedContractedForest,
    theta: &Exponent,
    ctx: &EvalContext,
) -> Result<(), DiagramError> {
    let theta_val = ctx.eval(theta);
    let max_val = ctx.eval(&f.theta_max(ctx));
    if theta_val < rat(0, 1) || theta_val > max_val {
        return Err(DiagramError::ThetaOutOfRange {
            theta: ratio_to_f64(&theta_val),
            max: ratio_to_f64(&max_val),
        });
    }
    Ok(())
}

fn base_certificate(
    f: &DecoratedContractedForest,
    theta: &Exponent,
    ctx: &EvalContext,
) -> BoundCertificate {
    let classification = f.classify();
    let saturated_branch_odd_derivatives = match classification {
        Classification::Unsafe { saturated_root } => {
            Some(deriv_edges_in_branch(f, saturated_root) % 2 == 1)
        }
        Classification::Safe => None,
    };
    let lambda_rho = f.lambda(f.rho());
    let lambda_rho_bar = f.lambda(f.rho_bar());
    let quarter = theta.scale(&rat(1, 4));
    BoundCertificate {
        trees: [shape_string(f, f.rho()), shape_string(f, f.rho_bar())],
        theta: theta.clone(),
        time_exponent_rho: lambda_rho.clone() + &quarter,
        time_exponent_rho_bar: lambda_rho_bar.clone() + &quarter,
        spatial_exponent: -theta.clone(),
        lambda_rho,
        lambda_rho_bar,
        zeta: None,
        time_exponent_total: None,
        classification,
        saturated_branch_odd_derivatives,
        theta_max_initial: ratio_to_f64(&ctx.eval(&f.theta_max(ctx))),
        trace: Vec::new(),
        valid: false,
        failure: None,
    }
}

/// Run the reduction and certify the plain two-point bound
/// `t^{Lambda(F_rho) + theta/4} tbar^{Lambda(F_rhobar) + theta/4} |x - xbar|^{-theta}`.
pub fn power_count(
    f: &DecoratedContractedForest,
    theta: &Exponent,
    ctx: &EvalContext,
) -> Result<BoundCertificate, DiagramError> {
    let rep = verify_conditions(f, ctx)?;
    if !rep.pass {
        return Err(DiagramError::ConditionFailed(format!(
            "edges {}, branches {}, weights {}",
            rep.pass_edges, rep.pass_branches, rep.pass_weights
        )));
    }
    check_theta(f, theta, ctx)?;
    let mut cert = base_certificate(f, theta, ctx);
    let mut reducer = Reducer::new(f, ctx, Vec::new());
    match reducer.run() {
        Some((e_rho, e_bar)) => {
            cert.trace = reducer.trace;
            // Soundness: the trace must land on the directly computed
            // branch weights.
            if e_rho == cert.lambda_rho && e_bar == cert.lambda_rho_bar {
                cert.valid = true;
            } else {
                cert.failure = Some(format!(
                    "trace exponents ({e_rho}, {e_bar}) differ from direct weights ({}, {})",
                    cert.lambda_rho, cert.lambda_rho_bar
                ));
            }
        }
        None => {
            cert.trace = reducer.trace;
            cert.failure = reducer.failure;
        }
    }
    Ok(cert)
}

/// Certify the time-increment bound
/// `|t - s|^zeta t^{Lambda(F) + theta/2 - zeta} |x - xbar|^{-theta}`.
pub fn power_count_time_diff(
    f: &DecoratedContractedForest,
    q: &TimeDifferenceQuery,
    theta: &Exponent,
    ctx: &EvalContext,
) -> Result<BoundCertificate, DiagramError> {
    let rep = verify_conditions(f, ctx)?;
    if !rep.pass {
        return Err(DiagramError::ConditionFailed("hypotheses fail".into()));
    }
    check_theta(f, theta, ctx)?;

    // Query validation.
    let root_children = |r: usize| f.children(r).to_vec();
    let c_rho = root_children(f.rho());
    let c_bar = root_children(f.rho_bar());
    for &v in q.u.iter().chain(q.w.iter()) {
        if !c_rho.contains(&v) && !c_bar.contains(&v) {
            return Err(DiagramError::InvalidQuery(format!(
                "vertex {v} is not a child of a root"
            )));
        }
    }
    for &v in &q.u {
        if !q.w.contains(&v) {
            return Err(DiagramError::InvalidQuery("U must be a subset of W".into()));
        }
    }
    let u_rho: Vec<usize> = q.u.iter().copied().filter(|&v| c_rho.contains(&v)).collect();
    let u_bar: Vec<usize> = q.u.iter().copied().filter(|&v| c_bar.contains(&v)).collect();
    if u_rho.len() > 1 || u_bar.len() > 1 {
        return Err(DiagramError::InvalidQuery(
            "at most one U-vertex per tree".into(),
        ));
    }
    let zero = rat(0, 1);
    let one = rat(1, 1);
    for k in [&q.kappa, &q.kappa_bar] {
        if k < &zero || k > &one {
            return Err(DiagramError::InvalidQuery(format!(
                "increment exponent {k} outside [0, 1]"
            )));
        }
    }
    // Admissibility against the edge condition for non-Dirac designated
    // children: kappa < 1 + z_l.
    let check_admissible = |l: usize, k: &Rat| -> Result<(), DiagramError> {
        if f.is_dirac(l) {
            return Ok(());
        }
        let z = rep
            .z
            .iter()
            .find(|e| e.vertex == l)
            .expect("non-root vertex has a z entry");
        let bound = ctx.eval(&z.z) + &one;
        if k >= &bound {
            return Err(DiagramError::InvalidQuery(format!(
                "kappa = {k} is not below 1 + z_{l} = {bound}"
            )));
        }
        Ok(())
    };
    if let Some(&l) = u_rho.first() {
        check_admissible(l, &q.kappa)?;
    }
    if let Some(&l) = u_bar.first() {
        check_admissible(l, &q.kappa_bar)?;
    }

    let zeta = q.zeta(f);
    let mut pending = Vec::new();
    if let Some(&l) = u_rho.first() {
        pending.push((l, q.kappa.clone()));
    }
    if let Some(&l) = u_bar.first() {
        pending.push((l, q.kappa_bar.clone()));
    }

    let mut cert = base_certificate(f, theta, ctx);
    let zeta_e = Exponent::constant(zeta.clone());
    cert.zeta = Some(zeta_e.clone());
    cert.time_exponent_total = Some(
        cert.lambda_rho.clone() + &cert.lambda_rho_bar + &theta.scale(&rat(1, 2)) - &zeta_e,
    );
    let mut reducer = Reducer::new(f, ctx, pending);
    match reducer.run() {
        Some((e_rho, e_bar)) => {
            let consumed = reducer.zeta_consumed.clone();
            cert.trace = reducer.trace;
            let want =
                cert.lambda_rho.clone() + &cert.lambda_rho_bar - &Exponent::constant(zeta.clone());
            let got = e_rho + &e_bar;
            if consumed != zeta {
                cert.failure = Some(format!(
                    "consumed increment exponent {consumed} differs from zeta = {zeta}"
                ));
            } else if got != want {
                cert.failure = Some(format!(
                    "trace total {got} differs from Lambda(F) - zeta = {want}"
                ));
            } else {
                cert.valid = true;
            }
        }
        None => {
            cert.trace = reducer.trace;
            cert.failure = reducer.failure;
        }
    }
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagrams::{build_two_point_forests, TwoPointKind, VertexSpec};
    use crate::exponent::rat_from_f64;
    use crate::trees::LabelledTree;

    fn ctx(d: f64) -> EvalContext {
        EvalContext::new(rat_from_f64(d).unwrap(), rat(0, 1), 2)
    }

    fn sigma() -> LabelledTree {
        LabelledTree::bilinear(LabelledTree::leaf(), LabelledTree::leaf())
    }

    #[test]
    fn base_case_1_yields_the_root_weights() {
        let v = |beta: Exponent| VertexSpec {
            parent: None,
            beta,
            gamma: Exponent::zero(),
            k: vec![0, 0],
        };
        let f = DecoratedContractedForest::from_specs(
            vec![
                v(Exponent::constant(rat(-1, 3))),
                v(Exponent::constant(rat(1, 5))),
            ],
            vec![],
            2,
        )
        .unwrap();
        let cert = power_count(&f, &Exponent::zero(), &ctx(3.0)).unwrap();
        assert!(cert.valid);
        assert_eq!(cert.time_exponent_rho, Exponent::constant(rat(-1, 3)));
        assert_eq!(cert.time_exponent_rho_bar, Exponent::constant(rat(1, 5)));
        assert_eq!(cert.trace.len(), 1);
        assert_eq!(cert.trace[0].case, StepCase::Base1);
    }

    #[test]
    fn cross_pairings_certify_half_homogeneity() {
        let c = ctx(3.0);
        let theta = Exponent::d() - Exponent::from_int(2);
        for f in build_two_point_forests(&sigma(), TwoPointKind::Plain, 2).unwrap() {
            if f.classify() != crate::diagrams::Classification::Safe {
                continue;
            }
            let cert = power_count(&f, &theta, &c).unwrap();
            assert!(cert.valid, "{:?}", cert.failure);
            // Lambda = |tau|/2 per branch.
            let half_hom = sigma().homogeneity_affine().scale(&rat(1, 2));
            assert_eq!(cert.lambda_rho, half_hom);
            assert_eq!(
                cert.time_exponent_rho,
                half_hom.clone() + &theta.scale(&rat(1, 4))
            );
            assert_eq!(cert.spatial_exponent, -theta.clone());
            // The trace ends at a base case.
            let last = cert.trace.last().unwrap().case;
            assert!(last == StepCase::Base1 || last == StepCase::Base2);
        }
    }

    #[test]
    fn saturated_pairing_is_unsafe_with_odd_parity_and_theta_zero() {
        let c = ctx(3.0);
        let fams = build_two_point_forests(&sigma(), TwoPointKind::Plain, 2).unwrap();
        let unsafe_forest = fams
            .iter()
            .find(|f| f.classify() != crate::diagrams::Classification::Safe)
            .expect("the within-tree pairing is unsafe");
        let cert = power_count(unsafe_forest, &Exponent::zero(), &c).unwrap();
        assert!(cert.valid);
        assert_eq!(cert.saturated_branch_odd_derivatives, Some(true));
        assert_eq!(cert.theta_max_initial, 0.0);
        // A positive theta is inadmissible without cross-tree pairs.
        assert!(matches!(
            power_count(unsafe_forest, &Exponent::constant(rat(1, 2)), &c),
            Err(DiagramError::ThetaOutOfRange { .. })
        ));
    }

    #[test]
    fn reduction_terminates_with_decreasing_measure() {
        // Unsafe pairings saturate a strict branch, which violates the
        // branch condition (their summands vanish by parity and never reach
        // the power counting); every safe pairing must certify.
        let c = ctx(3.0);
        let tau = LabelledTree::trilinear(sigma(), LabelledTree::leaf(), LabelledTree::leaf());
        let mut safe_seen = 0;
        for f in build_two_point_forests(&tau, TwoPointKind::Plain, 2).unwrap() {
            if matches!(f.classify(), crate::diagrams::Classification::Unsafe { .. }) {
                continue;
            }
            safe_seen += 1;
            let cert = power_count(&f, &Exponent::zero(), &c).unwrap();
            assert!(cert.valid, "{:?}", cert.failure);
            let mut prev = usize::MAX;
            for step in &cert.trace {
                assert!(step.measure_after < prev);
                prev = step.measure_after;
            }
        }
        assert!(safe_seen > 0);
    }

    #[test]
    fn time_diff_cases_track_zeta() {
        let c = ctx(3.0);
        let theta = Exponent::d() - Exponent::from_int(2);
        let fams = build_two_point_forests(&sigma(), TwoPointKind::TimeDiff, 2).unwrap();
        let f = fams
            .iter()
            .find(|f| f.classify() == crate::diagrams::Classification::Safe)
            .unwrap();
        let c_rho = f.children(f.rho()).to_vec();
        let c_bar = f.children(f.rho_bar()).to_vec();

        // |U| = 0 reduces to the plain bound.
        let q0 = TimeDifferenceQuery {
            u: vec![],
            w: vec![c_rho[0]],
            kappa: rat(1, 2),
            kappa_bar: rat(1, 2),
        };
        let cert0 = power_count_time_diff(f, &q0, &theta, &c).unwrap();
        assert!(cert0.valid, "{:?}", cert0.failure);
        assert_eq!(cert0.zeta, Some(Exponent::zero()));
        let plain_total = f.lambda_total() + &theta.scale(&rat(1, 2));
        assert_eq!(cert0.time_exponent_total, Some(plain_total));

        // |U| = 1: zeta = kappa (Dirac child, any kappa in [0, 1]).
        let q1 = TimeDifferenceQuery {
            u: vec![c_rho[1]],
            w: vec![c_rho[1]],
            kappa: rat(1, 3),
            kappa_bar: rat(0, 1),
        };
        let cert1 = power_count_time_diff(f, &q1, &theta, &c).unwrap();
        assert!(cert1.valid, "{:?}", cert1.failure);
        assert_eq!(cert1.zeta, Some(Exponent::constant(rat(1, 3))));

        // |U| = 2: zeta = kappa + kappa_bar.
        let q2 = TimeDifferenceQuery {
            u: vec![c_rho[0], c_bar[1]],
            w: vec![c_rho[0], c_bar[1]],
            kappa: rat(1, 4),
            kappa_bar: rat(1, 2),
        };
        let cert2 = power_count_time_diff(f, &q2, &theta, &c).unwrap();
        assert!(cert2.valid, "{:?}", cert2.failure);
        assert_eq!(cert2.zeta, Some(Exponent::constant(rat(3, 4))));
        assert_eq!(
            cert2.time_exponent_total,
            Some(f.lambda_total() + &theta.scale(&rat(1, 2)) - &Exponent::constant(rat(3, 4)))
        );

        // U not a subset of W is rejected.
        let bad = TimeDifferenceQuery {
            u: vec![c_rho[0]],
            w: vec![],
            kappa: rat(1, 4),
            kappa_bar: rat(0, 1),
        };
        assert!(power_count_time_diff(f, &bad, &theta, &c).is_err());
    }

    #[test]
    fn non_dirac_designated_child_enforces_the_increment_bound() {
        // Hand-built forest: roots with one non-Dirac leaf child each,
        // paired across. z_l = -(a/4) - |k|/2 + gamma = -(d-2)/4.
        let mk = |parent: Option<usize>, beta: Exponent| VertexSpec {
            parent,
            beta,
            gamma: Exponent::zero(),
            k: vec![0, 0],
        };
        let f = DecoratedContractedForest::from_specs(
            vec![
                mk(None, Exponent::zero()),
                mk(Some(0), Exponent::constant(rat(-1, 2))),
                mk(None, Exponent::zero()),
                mk(Some(2), Exponent::constant(rat(-1, 2))),
            ],
            vec![crate::diagrams::ContractingEdge::new(
                1,
                3,
                Exponent::d() - Exponent::from_int(2),
            )],
            2,
        )
        .unwrap();
        let c = ctx(3.0);
        // 1 + z_l = 1 - 1/4 = 3/4 at d = 3.
        let ok = TimeDifferenceQuery {
            u: vec![1],
            w: vec![1],
            kappa: rat(1, 2),
            kappa_bar: rat(0, 1),
        };
        assert!(power_count_time_diff(&f, &ok, &Exponent::zero(), &c)
            .unwrap()
            .valid);
        let too_big = TimeDifferenceQuery {
            u: vec![1],
            w: vec![1],
            kappa: rat(4, 5),
            kappa_bar: rat(0, 1),
        };
        assert!(matches!(
            power_count_time_diff(&f, &too_big, &Exponent::zero(), &c),
            Err(DiagramError::InvalidQuery(_))
        ));
    }
}
