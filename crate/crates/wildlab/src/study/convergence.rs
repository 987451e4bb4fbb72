//! Solution convergence along a mollification ladder: solve the equation
//! from `X^eps` for dyadic `eps`, on a common admissible horizon per seed,
//! and check that the Cauchy increments between consecutive scales
//! decrease.

use serde::{Deserialize, Serialize};

use super::{StudyConfig, StudyError};
use crate::fields::{besov_norm, mollify, sample_gff, CovarianceSpec, Field, GridSpec, Mollifier};
use crate::heat::TimeGrid;
use crate::params::{check_ci, kappa_guard, paper_parameters, solver_exponents};
use crate::picard::{
    admissible_horizon, picard_terms, solve_remainder, theta_distance, theta_norm, Nonlinearity,
    RemainderOptions,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergencePair {
    pub eps: f64,
    /// Median over seeds of
    /// `sup_t { |A^eps - A^{eps/2}|_{C^eta} + t^{-eta/2} |.|_inf }`.
    pub median_increment: f64,
    /// Median over seeds of `Theta(X^eps, X^{eps/2})`.
    pub median_theta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub eta: f64,
    pub pairs: Vec<ConvergencePair>,
    pub strictly_decreasing: bool,
    /// Per-seed common horizons and the tail summary of `1/T`.
    pub horizons: Vec<f64>,
    pub inv_horizon_median: f64,
    pub inv_horizon_max: f64,
    pub pass: bool,
}

pub fn solution_convergence_study(cfg: &StudyConfig) -> Result<ConvergenceReport, StudyError> {
    let grid = GridSpec::new(cfg.n_dim, cfg.grid_m)?;
    let cov = CovarianceSpec::new(cfg.d);
    cov.validate(cfg.n_dim)?;
    let kappa = kappa_guard(cfg.d)? / 2.0;
    let params = paper_parameters(cfg.d, kappa)?;
    let report = check_ci(&params);
    if !report.pass {
        return Err(StudyError::BadConfig("admissibility check failed".into()));
    }
    let exps = solver_exponents(&report)?;
    let nl = Nonlinearity::scalar_default(cfg.n_dim);
    let eta = (2.0 - cfg.d) / 2.0 - cfg.eta_offset;

    // The solve set is the ladder together with the halved scales.
    let mut scales: Vec<f64> = cfg.eps_ladder.clone();
    for &e in &cfg.eps_ladder {
        if !scales.iter().any(|&s| (s - e / 2.0).abs() < 1e-15) {
            scales.push(e / 2.0);
        }
    }
    scales.sort_by(|a, b| b.partial_cmp(a).unwrap());
    for &e in &scales {
        Mollifier::new(e)?.check_resolvable(grid)?;
    }

    // Theta is evaluated on a fixed probe grid over (0, 1).
    let theta_grid = TimeGrid::graded(1.0, 16, 2.0)?;

    let mut per_pair_incr: Vec<Vec<f64>> = vec![Vec::new(); cfg.eps_ladder.len()];
    let mut per_pair_theta: Vec<Vec<f64>> = vec![Vec::new(); cfg.eps_ladder.len()];
    let mut horizons = Vec::with_capacity(cfg.seeds);

    for s in 0..cfg.seeds as u64 {
        let x: Field<f64> = sample_gff(grid, &cov, cfg.seed.wrapping_add(s))?;
        let mollified: Vec<Field<f64>> = scales
            .iter()
            .map(|&e| mollify(&x, &Mollifier::new(e).unwrap()))
            .collect::<Result<_, _>>()?;

        // Data sizes on the probe grid set the common admissible horizon.
        let mut ball_radii = Vec::with_capacity(scales.len());
        let mut t_common = cfg.horizon_cap;
        for xe in &mollified {
            let probe = picard_terms(xe, &params, &nl, &theta_grid)?;
            let k = theta_norm(&probe)?.max(1.0);
            t_common = t_common.min(0.9 * admissible_horizon(&exps, k, RemainderOptions::default().eps_c));
            ball_radii.push(k);
        }
        horizons.push(t_common);

        let solve_grid = TimeGrid::graded(t_common, 48, 2.0)?;
        let mut bundles = Vec::with_capacity(scales.len());
        let mut solutions = Vec::with_capacity(scales.len());
        for (xe, &k) in mollified.iter().zip(&ball_radii) {
            let bundle = picard_terms(xe, &params, &nl, &solve_grid)?;
            let opts = RemainderOptions { ball_radius: Some(k), ..Default::default() };
            let sol = solve_remainder(&bundle, &exps, &nl, &opts)?;
            solutions.push(sol.solution);
            bundles.push(bundle);
        }

        for (pi, &eps) in cfg.eps_ladder.iter().enumerate() {
            let i = scales.iter().position(|&s| s == eps).unwrap();
            let j = scales
                .iter()
                .position(|&s| (s - eps / 2.0).abs() < 1e-15)
                .unwrap();
            let mut sup = 0.0f64;
            for (node, &t) in solve_grid.nodes.iter().enumerate() {
                if t <= t_common / cfg.t_floor_divisor {
                    continue;
                }
                let diff = solutions[i].fields[node].sub(&solutions[j].fields[node])?;
                let v = besov_norm(&diff, eta)?
                    + t.powf(-eta / 2.0) * crate::scalar::to_f64(diff.sup_norm());
                sup = sup.max(v);
            }
            per_pair_incr[pi].push(sup);
            per_pair_theta[pi].push(theta_distance(&bundles[i], &bundles[j])?);
        }
    }

    let median = |v: &mut Vec<f64>| -> f64 {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v[v.len() / 2]
    };
    let pairs: Vec<ConvergencePair> = cfg
        .eps_ladder
        .iter()
        .enumerate()
        .map(|(pi, &eps)| ConvergencePair {
            eps,
            median_increment: median(&mut per_pair_incr[pi].clone()),
            median_theta: median(&mut per_pair_theta[pi].clone()),
        })
        .collect();
    let strictly_decreasing = pairs
        .windows(2)
        .all(|w| w[1].median_increment < w[0].median_increment);

    let mut inv: Vec<f64> = horizons.iter().map(|t| 1.0 / t).collect();
    inv.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let inv_horizon_median = inv[inv.len() / 2];
    let inv_horizon_max = *inv.last().unwrap();

    Ok(ConvergenceReport {
        eta,
        strictly_decreasing,
        pass: strictly_decreasing,
        pairs,
        horizons,
        inv_horizon_median,
        inv_horizon_max,
    })
}
