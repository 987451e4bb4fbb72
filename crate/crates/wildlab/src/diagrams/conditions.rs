//! Hypothesis checks for the two-point bound: the per-vertex edge condition,
//! the per-branch slack condition, and the admissible range of kernel
//! weights.

use serde::Serialize;

use super::{DecoratedContractedForest, DiagramError, EvalContext};
use crate::exponent::{rat, ratio_to_f64, Exponent, Rat};

/// Per-vertex record of the edge condition
/// `z_v = -max{a_e/4 : e crossing the branch at v} - |k|/2 + gamma > -1`.
#[derive(Debug, Clone, Serialize)]
pub struct ZEntry {
    pub vertex: usize,
    pub dirac: bool,
    pub z: Exponent,
    pub z_value: f64,
    /// Whether `z_v > -1`; only non-Dirac vertices gate the pass flag.
    pub ok: bool,
}

/// Per inner non-root vertex record of the branch condition
/// `Lambda(branch) + min{a_e/4 : e crossing} > -1`.
#[derive(Debug, Clone, Serialize)]
pub struct BranchEntry {
    pub vertex: usize,
    pub lhs: Exponent,
    pub lhs_value: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub z: Vec<ZEntry>,
    pub branches: Vec<BranchEntry>,
    pub pass_edges: bool,
    pub pass_branches: bool,
    pub pass_weights: bool,
    pub pass: bool,
    /// Maximal admissible spatial exponent `theta`.
    pub theta_max: Exponent,
    pub theta_max_value: f64,
}

/// `max{a_e/4}` over edges crossing the branch boundary at `v` (0 if none).
fn max_cross_quarter(
    f: &DecoratedContractedForest,
    ctx: &EvalContext,
    v: usize,
) -> Exponent {
    let mut best: Option<(Rat, Exponent)> = None;
    for e in f.cross_boundary_edges(v) {
        let w = e.weight.scale(&rat(1, 4));
        let val = ctx.eval(&w);
        match &best {
            Some((bv, _)) if *bv >= val => {}
            _ => best = Some((val, w)),
        }
    }
    best.map(|(_, e)| e).unwrap_or_else(Exponent::zero)
}

fn min_cross_quarter(
    f: &DecoratedContractedForest,
    ctx: &EvalContext,
    v: usize,
) -> Exponent {
    let mut best: Option<(Rat, Exponent)> = None;
    for e in f.cross_boundary_edges(v) {
        let w = e.weight.scale(&rat(1, 4));
        let val = ctx.eval(&w);
        match &best {
            Some((bv, _)) if *bv <= val => {}
            _ => best = Some((val, w)),
        }
    }
    best.map(|(_, e)| e).unwrap_or_else(Exponent::zero)
}

/// Check the hypotheses for a forest whose contraction avoids the roots.
/// Exponent inequalities are evaluated exactly at the context's `(d, kappa)`.
pub fn verify_conditions(
    f: &DecoratedContractedForest,
    ctx: &EvalContext,
) -> Result<ConditionReport, DiagramError> {
    for e in f.contraction() {
        if f.is_root(e.a) || f.is_root(e.b) {
            return Err(DiagramError::RootContraction);
        }
    }
    let minus_one = rat(-1, 1);

    let mut z = Vec::new();
    let mut pass_edges = true;
    for v in f.alive_vertices() {
        if f.is_root(v) {
            continue;
        }
        let zv = -max_cross_quarter(f, ctx, v)
            - &Exponent::constant(rat(f.k_abs(v), 2))
            + f.gamma(v);
        let ok = ctx.eval(&zv) > minus_one;
        let dirac = f.is_dirac(v);
        if !dirac {
            pass_edges &= ok;
        }
        z.push(ZEntry {
            vertex: v,
            dirac,
            z_value: zv.eval_f64(
                ratio_to_f64(&ctx.d),
                ratio_to_f64(&ctx.kappa),
            ),
            z: zv,
            ok,
        });
    }

    let mut branches = Vec::new();
    let mut pass_branches = true;
    for v in f.alive_vertices() {
        if f.is_root(v) || f.is_leaf(v) {
            continue;
        }
        let lhs = f.lambda(v) + min_cross_quarter(f, ctx, v);
        let ok = ctx.eval(&lhs) > minus_one;
        pass_branches &= ok;
        branches.push(BranchEntry {
            vertex: v,
            lhs_value: lhs.eval_f64(ratio_to_f64(&ctx.d), ratio_to_f64(&ctx.kappa)),
            lhs,
            ok,
        });
    }

    let zero = rat(0, 1);
    let n = rat(ctx.n_dim as i64, 1);
    let pass_weights = f
        .contraction()
        .iter()
        .all(|e| {
            let a = ctx.eval(&e.weight);
            a > zero && a < n
        });

    let theta_max = f.theta_max(ctx);
    let theta_max_value =
        theta_max.eval_f64(ratio_to_f64(&ctx.d), ratio_to_f64(&ctx.kappa));
    let pass = pass_edges && pass_branches && pass_weights;
    Ok(ConditionReport {
        z,
        branches,
        pass_edges,
        pass_branches,
        pass_weights,
        pass,
        theta_max,
        theta_max_value,
    })
}
