//! Picard tree terms, the truncated expansion, the initial-data metric, the
//! remainder fixed point, and a direct exponential-time-differencing oracle
//! for the full equation.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::exponent::ratio_to_f64;
use crate::fields::{besov_norm, c1_norm, Field, FieldError};
use crate::heat::{
    duhamel, heat_semigroup, mode_rate, phi1, phi2, HeatError, SpaceTimeField, TimeGrid,
};
use crate::params::{ParamError, ParameterSet, SolverExponents};
use crate::scalar::Real;
use crate::trees::{symmetry_factor,LabelledTree, TreeError};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("only the scalar model space is implemented (dim E = 1, got {0})")]
    UnsupportedModelSpace(usize),
    #[error(
        "horizon {requested} exceeds the admissible bound {max_admissible:.3e}; \
         retry with a smaller horizon"
    )]
    HorizonTooLarge { requested: f64, max_admissible: f64 },
    #[error(
        "fixed point did not converge after {iterations} iterations \
         (residual {residual:.3e}); retry with a smaller horizon"
    )]
    NotConverged { iterations: usize, residual: f64 },
    #[error("bundles are not comparable: {0}")]
    Incompatible(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Heat(#[from] HeatError),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// Coefficients of the nonlinearity
/// `F(A, DA) = b A d1A + p A^3 + q1 A^2 + q2.DA + linear A + constant`
/// on the scalar model space. The trilinear term is symmetric by
/// construction.
#[derive(Debug, Clone, Serialize)]
pub struct Nonlinearity {
    pub dim_e: usize,
    /// Coefficient of the bilinear term `A d1A`.
    pub b: f64,
    /// Coefficient of the trilinear term `A^3`.
    pub p: f64,
    pub q1: f64,
    pub q2: Vec<f64>,
    pub linear: f64,
    pub constant: f64,
}

impl Nonlinearity {
    /// The default model: `F = A d1A - A^3`.
    pub fn scalar_default(n_dim: usize) -> Self {
        Nonlinearity {
            dim_e: 1,
            b: 1.0,
            p: -1.0,
            q1: 0.0,
            q2: vec![0.0; n_dim],
            linear: 0.0,
            constant: 0.0,
        }
    }

    pub fn validate(&self, n_dim: usize) -> Result<(), SolveError> {
        if self.dim_e != 1 {
            return Err(SolveError::UnsupportedModelSpace(self.dim_e));
        }
        if self.q2.len() != n_dim {
            return Err(SolveError::Incompatible(format!(
                "q2 has {} components for dimension {n_dim}",
                self.q2.len()
            )));
        }
        Ok(())
    }

    /// Derivative axes the evaluation actually needs.
    pub fn needed_axes(&self) -> Vec<usize> {
        let mut axes = Vec::new();
        if self.b != 0.0 {
            axes.push(0);
        }
        for (a, &c) in self.q2.iter().enumerate() {
            if c != 0.0 && !axes.contains(&a) {
                axes.push(a);
            }
        }
        axes.sort_unstable();
        axes
    }

    pub fn partials_for<T: Real>(&self, a: &Field<T>) -> BTreeMap<usize, Field<T>> {
        self.needed_axes()
            .into_iter()
            .map(|axis| (axis, a.derivative(axis)))
            .collect()
    }

    pub fn eval<T: Real>(&self, a: &Field<T>, partials: &BTreeMap<usize, Field<T>>) -> Field<T> {
        let n = a.grid().len();
        let b = crate::scalar::real::<T>(self.b);
        let p = crate::scalar::real::<T>(self.p);
        let q1 = crate::scalar::real::<T>(self.q1);
        let lin = crate::scalar::real::<T>(self.linear);
        let cst = crate::scalar::real::<T>(self.constant);
        let da0 = partials.get(&0);
        let mut vals = Vec::with_capacity(n);
        for i in 0..n {
            let x = a.values()[i];
            let mut f = cst + lin * x + q1 * x * x + p * x * x * x;
            if self.b != 0.0 {
                f += b * x * da0.expect("axis 0 partial present").values()[i];
            }
            for (axis, &coef) in self.q2.iter().enumerate() {
                if coef != 0.0 {
                    f += crate::scalar::real::<T>(coef) * partials[&axis].values()[i];
                }
            }
            vals.push(f);
        }
        Field::from_values(a.grid(), vals).expect("same grid")
    }
}

/// All tree terms `X^tau` (and their heat propagations) of a mollified
/// initial field, on a graded time grid.
#[derive(Debug, Clone)]
pub struct PicardBundle<T: Real> {
    pub params: ParameterSet,
    pub xeps: Field<T>,
    pub time_grid: TimeGrid,
    trees: Vec<LabelledTree>,
    canonical: Vec<String>,
    terms: Vec<SpaceTimeField<T>>,
    props: Vec<SpaceTimeField<T>>,
    prop_xi: SpaceTimeField<T>,
}

impl<T: Real> PicardBundle<T> {
    /// Trees of the truncation (excluding the bare leaf), in canonical
    /// order by noise class.
    pub fn trees(&self) -> &[LabelledTree] {
        &self.trees
    }

    pub fn term(&self, canonical: &str) -> Option<&SpaceTimeField<T>> {
        self.canonical
            .iter()
            .position(|c| c == canonical)
            .map(|i| &self.terms[i])
    }

    pub fn propagated(&self, canonical: &str) -> Option<&SpaceTimeField<T>> {
        if canonical == "X" {
            return Some(&self.prop_xi);
        }
        self.canonical
            .iter()
            .position(|c| c == canonical)
            .map(|i| &self.props[i])
    }

    /// The heat flow of the initial field at the grid nodes.
    pub fn prop_xi(&self) -> &SpaceTimeField<T> {
        &self.prop_xi
    }

    fn comparable(&self, other: &Self) -> Result<(), SolveError> {
        if self.params.d != other.params.d
            || self.params.kappa != other.params.kappa
            || self.params.n_trees != other.params.n_trees
        {
            return Err(SolveError::Incompatible("parameter sets differ".into()));
        }
        if self.time_grid.nodes != other.time_grid.nodes
            || self.xeps.grid() != other.xeps.grid()
        {
            return Err(SolveError::Incompatible("grids differ".into()));
        }
        Ok(())
    }
}

/// Evaluate the tree recursion bottom-up: the bilinear node applies
/// `B(P*X^{t1}, d1 P*X^{t2})` and the trilinear node
/// `P(P*X^{t1}, P*X^{t2}, P*X^{t3})` pointwise at every node of the grid;
/// the base case is the heat flow of the initial field.
pub fn picard_terms<T: Real>(
    xeps: &Field<T>,
    params: &ParameterSet,
    nl: &Nonlinearity,
    time_grid: &TimeGrid,
) -> Result<PicardBundle<T>, SolveError> {
    nl.validate(xeps.grid().n_dim)?;
    let enumeration = crate::trees::enumerate_trees(params.n_trees)?;
    let trees: Vec<LabelledTree> = enumeration.without_leaf().cloned().collect();
    let canonical: Vec<String> = trees.iter().map(|t| t.canonical_form()).collect();

    let prop_xi = SpaceTimeField::new(
        time_grid.nodes.clone(),
        time_grid
            .nodes
            .iter()
            .map(|&t| heat_semigroup(xeps, t))
            .collect::<Result<_, _>>()?,
    )?;

    let mut terms: Vec<SpaceTimeField<T>> = Vec::with_capacity(trees.len());
    let mut props: Vec<SpaceTimeField<T>> = Vec::with_capacity(trees.len());
    let lookup = |canonical: &str,
                  terms_done: &[SpaceTimeField<T>],
                  props_done: &[SpaceTimeField<T>]|
     -> SpaceTimeField<T> {
        let _ = terms_done;
        if canonical == "X" {
            prop_xi.clone()
        } else {
            let idx = trees
                .iter()
                .position(|t| t.canonical_form() == canonical)
                .expect("subtrees precede their parents");
            props_done[idx].clone()
        }
    };

    for tree in &trees {
        let root_children = tree.children(tree.root());
        let b = crate::scalar::real::<T>(nl.b);
        let p = crate::scalar::real::<T>(nl.p);
        let term = if root_children.len() == 2 {
            // I(t1) I'(t2): b * (P*X^{t1}) * d1 (P*X^{t2})
            let (i_child, ip_child) = {
                let mut i_c = None;
                let mut ip_c = None;
                for &(l, c) in root_children {
                    let sub = crate::trees::extract_branch(tree, c).canonical_form();
                    match l {
                        crate::trees::EdgeLabel::I => i_c = Some(sub),
                        crate::trees::EdgeLabel::IPrime => ip_c = Some(sub),
                    }
                }
                (i_c.expect("bilinear has an I child"), ip_c.expect("and an I' child"))
            };
            let lhs = lookup(&i_child, &terms, &props);
            let rhs = lookup(&ip_child, &terms, &props);
            let fields: Vec<Field<T>> = lhs
                .fields
                .iter()
                .zip(&rhs.fields)
                .map(|(x, y)| {
                    let dy = y.derivative(0);
                    x.zip_with(&dy, |a, da| b * a * da)
                })
                .collect::<Result<_, _>>()?;
            SpaceTimeField::new(time_grid.nodes.clone(), fields)?
        } else {
            // I(t1) I(t2) I(t3): p * product of the three propagations.
            let subs: Vec<SpaceTimeField<T>> = root_children
                .iter()
                .map(|&(_, c)| {
                    lookup(
                        &crate::trees::extract_branch(tree, c).canonical_form(),
                        &terms,
                        &props,
                    )
                })
                .collect();
            let fields: Vec<Field<T>> = (0..time_grid.len())
                .map(|j| {
                    let prod = subs[0].fields[j]
                        .zip_with(&subs[1].fields[j], |a, x| a * x)?
                        .zip_with(&subs[2].fields[j], |a, x| a * x)?;
                    Ok::<_, FieldError>(prod.scale(p))
                })
                .collect::<Result<_, _>>()?;
            SpaceTimeField::new(time_grid.nodes.clone(), fields)?
        };
        props.push(duhamel(&term)?);
        terms.push(term);
    }

    Ok(PicardBundle {
        params: params.clone(),
        xeps: xeps.clone(),
        time_grid: time_grid.clone(),
        trees,
        canonical,
        terms,
        props,
        prop_xi,
    })
}

/// Evaluate a single tree term on its own grid, memoising propagated
/// subtrees locally. Cheaper than a full bundle when only one tree is
/// needed.
pub fn tree_term<T: Real>(
    xeps: &Field<T>,
    tree: &LabelledTree,
    nl: &Nonlinearity,
    time_grid: &TimeGrid,
) -> Result<SpaceTimeField<T>, SolveError> {
    nl.validate(xeps.grid().n_dim)?;
    if tree.is_leaf_vertex(tree.root()) {
        return Err(SolveError::Incompatible(
            "the bare leaf has no space-time term; use the heat flow".into(),
        ));
    }
    let mut memo: BTreeMap<String, SpaceTimeField<T>> = BTreeMap::new();
    fn prop<T: Real>(
        xeps: &Field<T>,
        tree: &LabelledTree,
        nl: &Nonlinearity,
        tg: &TimeGrid,
        memo: &mut BTreeMap<String, SpaceTimeField<T>>,
    ) -> Result<SpaceTimeField<T>, SolveError> {
        let key = tree.canonical_form();
        if let Some(p) = memo.get(&key) {
            return Ok(p.clone());
        }
        let p = if tree.is_leaf_vertex(tree.root()) {
            SpaceTimeField::new(
                tg.nodes.clone(),
                tg.nodes
                    .iter()
                    .map(|&t| heat_semigroup(xeps, t))
                    .collect::<Result<_, _>>()?,
            )?
        } else {
            duhamel(&term_of(xeps, tree, nl, tg, memo)?)?
        };
        memo.insert(key, p.clone());
        Ok(p)
    }
    fn term_of<T: Real>(
        xeps: &Field<T>,
        tree: &LabelledTree,
        nl: &Nonlinearity,
        tg: &TimeGrid,
        memo: &mut BTreeMap<String, SpaceTimeField<T>>,
    ) -> Result<SpaceTimeField<T>, SolveError> {
        let children = tree.children(tree.root());
        let b = crate::scalar::real::<T>(nl.b);
        let p_coef = crate::scalar::real::<T>(nl.p);
        if children.len() == 2 {
            let mut i_prop = None;
            let mut ip_prop = None;
            for &(l, c) in children {
                let sub = crate::trees::extract_branch(tree, c);
                let pr = prop(xeps, &sub, nl, tg, memo)?;
                match l {
                    crate::trees::EdgeLabel::I => i_prop = Some(pr),
                    crate::trees::EdgeLabel::IPrime => ip_prop = Some(pr),
                }
            }
            let lhs = i_prop.expect("I child");
            let rhs = ip_prop.expect("I' child");
            let fields: Vec<Field<T>> = lhs
                .fields
                .iter()
                .zip(&rhs.fields)
                .map(|(x, y)| x.zip_with(&y.derivative(0), |a, da| b * a * da))
                .collect::<Result<_, _>>()?;
            Ok(SpaceTimeField::new(tg.nodes.clone(), fields)?)
        } else {
            let subs: Vec<SpaceTimeField<T>> = children
                .iter()
                .map(|&(_, c)| prop(xeps, &crate::trees::extract_branch(tree, c), nl, tg, memo))
                .collect::<Result<_, _>>()?;
            let fields: Vec<Field<T>> = (0..tg.len())
                .map(|j| {
                    let prod = subs[0].fields[j]
                        .zip_with(&subs[1].fields[j], |a, x| a * x)?
                        .zip_with(&subs[2].fields[j], |a, x| a * x)?;
                    Ok::<_, FieldError>(prod.scale(p_coef))
                })
                .collect::<Result<_, _>>()?;
            Ok(SpaceTimeField::new(tg.nodes.clone(), fields)?)
        }
    }
    term_of(xeps, tree, nl, time_grid, &mut memo)
}

/// The tree term at a single time. Depth-one trees (all root children are
/// leaves) evaluate directly from the heat flow; deeper trees go through a
/// graded grid ending at `t`.
pub fn tree_term_at<T: Real>(
    xeps: &Field<T>,
    tree: &LabelledTree,
    nl: &Nonlinearity,
    t: f64,
    j_nodes: usize,
) -> Result<Field<T>, SolveError> {
    let depth_one = tree
        .children(tree.root())
        .iter()
        .all(|&(_, c)| tree.is_leaf_vertex(c));
    if depth_one && !tree.is_leaf_vertex(tree.root()) {
        let pt = heat_semigroup(xeps, t)?;
        let children = tree.children(tree.root());
        if children.len() == 2 {
            let b = crate::scalar::real::<T>(nl.b);
            let d1 = pt.derivative(0);
            return Ok(pt.zip_with(&d1, |a, da| b * a * da)?);
        }
        let p = crate::scalar::real::<T>(nl.p);
        return Ok(pt.map(|v| p * v * v * v));
    }
    let tg = TimeGrid::graded(t, j_nodes, 2.0)?;
    let st = tree_term(xeps, tree, nl, &tg)?;
    Ok(st.fields.last().expect("nonempty grid").clone())
}

/// The heat-propagated truncated expansion
/// `sum over tau (including the leaf) of c_tau P*X^tau`.
pub fn truncated_expansion<T: Real>(
    bundle: &PicardBundle<T>,
) -> Result<SpaceTimeField<T>, SolveError> {
    let mut acc = bundle.prop_xi.clone(); // c_X = 1
    for (tree, prop) in bundle.trees.iter().zip(&bundle.props) {
        let c = crate::scalar::real::<T>(ratio_to_f64(&symmetry_factor(tree)?));
        for (a, f) in acc.fields.iter_mut().zip(&prop.fields) {
            a.axpy(c, f);
        }
    }
    Ok(acc)
}

/// The subtracted source `sum over tau != leaf of c_tau P*X^tau`, which the
/// fixed-point map removes from the Duhamel term.
pub fn expansion_remainder_source<T: Real>(
    bundle: &PicardBundle<T>,
) -> Result<SpaceTimeField<T>, SolveError> {
    let grid = bundle.xeps.grid();
    let mut acc = SpaceTimeField::zeros(grid, &bundle.time_grid.nodes);
    for (tree, prop) in bundle.trees.iter().zip(&bundle.props) {
        let c = crate::scalar::real::<T>(ratio_to_f64(&symmetry_factor(tree)?));
        for (a, f) in acc.fields.iter_mut().zip(&prop.fields) {
            a.axpy(c, f);
        }
    }
    Ok(acc)
}

/// The initial-data metric: Besov distance of the fields at regularity
/// `omega_xi` plus the weighted supremum distance of every tree term.
pub fn theta_distance<T: Real>(
    x: &PicardBundle<T>,
    y: &PicardBundle<T>,
) -> Result<f64, SolveError> {
    x.comparable(y)?;
    let mut total = besov_norm(&x.xeps.sub(&y.xeps)?, x.params.omega_xi)?;
    for (i, tree) in x.trees.iter().enumerate() {
        let beta = x.params.beta(tree.noise())?;
        let delta = x.params.delta(tree.noise())?;
        let mut sup = 0.0f64;
        for (j, &t) in x.time_grid.nodes.iter().enumerate() {
            let diff = x.terms[i].fields[j].sub(&y.terms[i].fields[j])?;
            sup = sup.max(t.powf(delta) * besov_norm(&diff, beta)?);
        }
        total += sup;
    }
    Ok(total)
}

/// `Theta(X) = Theta(X, 0)`.
pub fn theta_norm<T: Real>(x: &PicardBundle<T>) -> Result<f64, SolveError> {
    let mut total = besov_norm(&x.xeps, x.params.omega_xi)?;
    for (i, tree) in x.trees.iter().enumerate() {
        let beta = x.params.beta(tree.noise())?;
        let delta = x.params.delta(tree.noise())?;
        let mut sup = 0.0f64;
        for (j, &t) in x.time_grid.nodes.iter().enumerate() {
            sup = sup.max(t.powf(delta) * besov_norm(&x.terms[i].fields[j], beta)?);
        }
        total += sup;
    }
    Ok(total)
}

/// The weighted remainder norm
/// `sup_t t^{-theta} |R_t|_inf + t^{1/2 - theta} |R_t|_{C^1}`.
pub fn bt_norm<T: Real>(r: &SpaceTimeField<T>, theta: f64) -> f64 {
    let mut out = 0.0f64;
    for (j, &t) in r.times.iter().enumerate() {
        let f = &r.fields[j];
        let v = t.powf(-theta) * crate::scalar::to_f64(f.sup_norm()) + t.powf(0.5 - theta) * c1_norm(f);
        out = out.max(v);
    }
    out
}

/// Smallness constant in the horizon bound `T^kappa_hat < eps_c K^{-2}`,
/// calibrated once by bisection on the reference configuration
/// (d = 3, M = 128, default nonlinearity) and stored here.
pub const DEFAULT_EPS_C: f64 = 8.0;

/// Largest admissible horizon for a given data size `K`.
pub fn admissible_horizon(exps: &SolverExponents, k: f64, eps_c: f64) -> f64 {
    let k = k.max(1.0 + 1e-9);
    (eps_c / (k * k)).powf(1.0 / exps.kappa_hat).min(1.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationLog {
    pub iteration: usize,
    pub residual: f64,
    /// Ratio of successive residuals; below one while contracting.
    pub contraction_factor: Option<f64>,
    pub bt_norm: f64,
}

#[derive(Debug, Clone)]
pub struct RemainderSolution<T: Real> {
    pub remainder: SpaceTimeField<T>,
    /// The assembled solution `A = R + P*(truncated expansion)`.
    pub solution: SpaceTimeField<T>,
    pub horizon: f64,
    pub bt_norm: f64,
    pub iterations: Vec<IterationLog>,
}

#[derive(Debug, Clone, Copy)]
pub struct RemainderOptions {
    pub eps_c: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Ball radius `K`; defaults to `max(Theta(X), 1)`.
    pub ball_radius: Option<f64>,
}

impl Default for RemainderOptions {
    fn default() -> Self {
        RemainderOptions {
            eps_c: DEFAULT_EPS_C,
            tol: 1e-9,
            max_iter: 60,
            ball_radius: None,
        }
    }
}

/// Banach iteration of the remainder map
/// `R -> P*F(A, DA) - P*(subtracted source)`, `A = R + P*(expansion)`,
/// on the bundle's own graded grid.
pub fn solve_remainder<T: Real>(
    bundle: &PicardBundle<T>,
    exps: &SolverExponents,
    nl: &Nonlinearity,
    opts: &RemainderOptions,
) -> Result<RemainderSolution<T>, SolveError> {
    nl.validate(bundle.xeps.grid().n_dim)?;
    let horizon = bundle.time_grid.horizon;
    let k = match opts.ball_radius {
        Some(k) => k,
        None => theta_norm(bundle)?.max(1.0),
    };
    let max_t = admissible_horizon(exps, k, opts.eps_c);
    if horizon.powf(exps.kappa_hat) >= opts.eps_c / (k.max(1.0 + 1e-9).powi(2)) {
        return Err(SolveError::HorizonTooLarge {
            requested: horizon,
            max_admissible: max_t,
        });
    }

    let psx = truncated_expansion(bundle)?;
    let src = expansion_remainder_source(bundle)?;
    let grid = bundle.xeps.grid();
    let nodes = &bundle.time_grid.nodes;
    let theta = exps.theta_remainder;

    let mut r = SpaceTimeField::zeros(grid, nodes);
    let mut logs: Vec<IterationLog> = Vec::new();
    let mut prev_residual: Option<f64> = None;
    for it in 0..opts.max_iter {
        // F(A, DA) at every node.
        let mut f_fields = Vec::with_capacity(nodes.len());
        for j in 0..nodes.len() {
            let a = r.fields[j].add(&psx.fields[j])?;
            let partials = nl.partials_for(&a);
            f_fields.push(nl.eval(&a, &partials));
        }
        let f_st = SpaceTimeField::new(nodes.clone(), f_fields)?;
        let r_new = duhamel(&f_st)?.sub(&src)?;

        let residual = bt_norm(&r_new.sub(&r)?, theta);
        let norm = bt_norm(&r_new, theta);
        let contraction = prev_residual.map(|p| if p > 0.0 { residual / p } else { 0.0 });
        logs.push(IterationLog {
            iteration: it + 1,
            residual,
            contraction_factor: contraction,
            bt_norm: norm,
        });
        prev_residual = Some(residual);
        r = r_new;
        if residual <= opts.tol * norm.max(1.0) {
            let solution = r.add(&psx)?;
            return Ok(RemainderSolution {
                remainder: r,
                solution,
                horizon,
                bt_norm: norm,
                iterations: logs,
            });
        }
        if !residual.is_finite() || residual > 1e8 {
            break;
        }
    }
    Err(SolveError::NotConverged {
        iterations: logs.len(),
        residual: prev_residual.unwrap_or(f64::NAN),
    })
}

/// One exponential-time-differencing Runge–Kutta step (exact linear part,
/// second-order explicit nonlinear part).
fn etd2rk_step<T: Real>(
    u: &Field<T>,
    t: f64,
    h: f64,
    nl: &Nonlinearity,
    source: Option<&dyn Fn(f64) -> Field<T>>,
) -> Result<Field<T>, SolveError> {
    let grid = u.grid();
    let rhs = |v: &Field<T>, time: f64| -> Result<Field<T>, SolveError> {
        let partials = nl.partials_for(v);
        let mut f = nl.eval(v, &partials);
        if let Some(g) = source {
            f = f.add(&g(time))?;
        }
        Ok(f)
    };
    let n0 = rhs(u, t)?;
    let decay = |f: &Field<T>| f.apply_multiplier(|i| crate::scalar::real::<T>((-mode_rate(grid, i) * h).exp()));
    let phi1_of = |f: &Field<T>| {
        f.apply_multiplier(|i| crate::scalar::real::<T>(h * phi1(-mode_rate(grid, i) * h)))
    };
    let phi2_of = |f: &Field<T>| {
        f.apply_multiplier(|i| crate::scalar::real::<T>(h * phi2(-mode_rate(grid, i) * h)))
    };
    let pred = decay(u).add(&phi1_of(&n0))?;
    let n1 = rhs(&pred, t + h)?;
    let corr = phi2_of(&n1.sub(&n0)?);
    Ok(pred.add(&corr)?)
}

/// Direct time stepper recording the state at the requested times, taking
/// roughly `total_steps` uniform substeps overall. Used as an oracle for
/// the fixed-point solver.
pub fn reference_timestepper_at<T: Real>(
    x0: &Field<T>,
    times: &[f64],
    nl: &Nonlinearity,
    total_steps: usize,
    source: Option<&dyn Fn(f64) -> Field<T>>,
) -> Result<SpaceTimeField<T>, SolveError> {
    nl.validate(x0.grid().n_dim)?;
    if times.is_empty() || times[0] <= 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SolveError::Heat(HeatError::BadTimeGrid));
    }
    let horizon = *times.last().unwrap();
    let mut u = x0.clone();
    let mut t = 0.0f64;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        let dt = target - t;
        let k = ((total_steps as f64 * dt / horizon).round() as usize).max(1);
        let h = dt / k as f64;
        for _ in 0..k {
            u = etd2rk_step(&u, t, h, nl, source)?;
            t += h;
        }
        t = target;
        out.push(u.clone());
    }
    Ok(SpaceTimeField::new(times.to_vec(), out)?)
}

/// Uniform-grid variant: `steps` equal steps on `(0, horizon]`.
pub fn reference_timestepper<T: Real>(
    x0: &Field<T>,
    horizon: f64,
    nl: &Nonlinearity,
    steps: usize,
) -> Result<SpaceTimeField<T>, SolveError> {
    let times: Vec<f64> = (1..=steps)
        .map(|j| horizon * j as f64 / steps as f64)
        .collect();
    reference_timestepper_at(x0, &times, nl, steps, None)
}
