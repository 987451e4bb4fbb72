//! Monte Carlo studies confronting the numerical pipeline with the
//! predicted scaling exponents: test-function scaling of tree terms,
//! mollification differences, time increments, covariance decay,
//! heat-kernel convolution bounds, and solution convergence along a
//! mollification ladder.
//!
//! Every study is a pure function of its seeded configuration: samples draw
//! from per-seed counter streams and aggregation uses fixed-order
//! compensated summation, so reruns are byte-identical.

mod convergence;
mod covariance;
mod fit;
mod heatbound;
mod scaling;

pub use convergence::{solution_convergence_study, ConvergenceReport};
pub use covariance::covariance_decay_study;
pub use fit::fit_loglog;
pub use heatbound::{heat_bound_spotcheck, HeatBoundReport};
pub use scaling::{
    saturated_mean_check, scaling_study_eps, scaling_study_lambda, scaling_study_time,
    VanishingReport,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagrams::DiagramError;
use crate::fields::FieldError;
use crate::heat::HeatError;
use crate::params::ParamError;
use crate::picard::SolveError;
use crate::trees::TreeError;

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("bad study configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Heat(#[from] HeatError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Diagram(#[from] DiagramError),
    #[error("log-log fit needs at least 4 points, got {0}")]
    TooFewPoints(usize),
    #[error("non-positive value in a log-log fit")]
    NonPositive,
}

/// Shared configuration for all studies; studies read the fields they need.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyConfig {
    pub d: f64,
    pub n_dim: usize,
    pub grid_m: usize,
    pub samples: usize,
    pub seed: u64,
    /// Canonical form of the tree under study.
    pub tree: String,
    /// Exponent parameter of the bounds under test.
    pub kappa: f64,
    /// Test regularity for the test-function scaling study, in
    /// `[(2-d)/2, 0]`.
    pub beta: f64,
    pub lambda_ladder: Vec<f64>,
    /// The scaling study ties the evaluation time to the observation scale,
    /// `t = time_factor * lambda^2`.
    pub time_factor: f64,
    /// Fixed mollification scale (scaling and time studies).
    pub eps: f64,
    /// Fixed observation scale (mollification and time studies).
    pub lambda: f64,
    /// Fixed evaluation time (mollification study).
    pub time: f64,
    pub eps_ladder: Vec<f64>,
    /// Base times of the increment pairs `(s, time_ratio * s)`.
    pub s_ladder: Vec<f64>,
    pub time_ratio: f64,
    /// Nodes of the graded evaluation grid for deep trees.
    pub j_nodes: usize,
    pub tolerance: f64,
    pub stderr_cap: f64,
    /// Probe points for the vanishing check and heat-bound grid size.
    pub probes: usize,
    /// Convergence study: number of independent seeds.
    pub seeds: usize,
    /// Convergence study: cap on the common horizon.
    pub horizon_cap: f64,
    /// Convergence study: `eta = (2-d)/2 - eta_offset`.
    pub eta_offset: f64,
    /// Convergence study: measurements start at `T / t_floor_divisor`.
    pub t_floor_divisor: f64,
    /// Covariance fit window in grid units (inclusive).
    pub window_lo: usize,
    pub window_hi: usize,
    /// Matched-scale designs: observation scale per ladder point,
    /// `lambda = match_lambda_factor * eps` (mollification study) or
    /// `lambda = match_lambda_factor * sqrt(s)` (time study).
    pub match_lambda_factor: f64,
    /// Matched-scale time in the mollification study:
    /// `t = match_time_factor * eps^2`.
    pub match_time_factor: f64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            d: 2.5,
            n_dim: 2,
            grid_m: 256,
            samples: 200,
            seed: 1,
            tree: "I(X)I'(X)".into(),
            kappa: 1.0,
            beta: -0.25,
            lambda_ladder: (0..5).map(|i| 2f64.powf(-5.0 + 0.5 * i as f64)).collect(),
            time_factor: 1.0 / 160.0,
            eps: 1.0 / 128.0,
            lambda: 1.0 / 8.0,
            time: 4e-5,
            eps_ladder: (0..5).map(|i| 0.11 * 2f64.powf(-0.25 * i as f64)).collect(),
            s_ladder: (0..6).map(|i| 2f64.powf(-16.0 + i as f64)).collect(),
            time_ratio: 2.0,
            j_nodes: 24,
            tolerance: 0.15,
            stderr_cap: 0.1,
            probes: 3,
            seeds: 20,
            horizon_cap: 0.05,
            eta_offset: 0.1,
            t_floor_divisor: 8.0,
            window_lo: 3,
            window_hi: 24,
            match_lambda_factor: 4.0,
            match_time_factor: 1.0 / 256.0,
        }
    }
}

/// One ladder point of a study series.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub scale: f64,
    pub estimate: f64,
    pub stderr: f64,
}

/// Outcome of a slope-fitting study.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlopeReport {
    pub study: String,
    pub fitted_slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    /// Slope the certificates/parameters predict; never re-typed by hand.
    pub predicted_slope: f64,
    pub tolerance: f64,
    pub stderr_cap: f64,
    pub pass: bool,
    pub series: Vec<SeriesPoint>,
    pub notes: Vec<String>,
}

impl SlopeReport {
    pub(crate) fn assemble(
        study: &str,
        series: Vec<SeriesPoint>,
        predicted: f64,
        tolerance: f64,
        stderr_cap: f64,
        notes: Vec<String>,
    ) -> Result<Self, StudyError> {
        let pts: Vec<(f64, f64)> = series.iter().map(|p| (p.scale, p.estimate)).collect();
        let (slope, stderr, intercept) = fit_loglog(&pts)?;
        let pass = (slope - predicted).abs() <= tolerance && stderr <= stderr_cap;
        Ok(SlopeReport {
            study: study.into(),
            fitted_slope: slope,
            intercept,
            stderr,
            predicted_slope: predicted,
            tolerance,
            stderr_cap,
            pass,
            series,
            notes,
        })
    }
}

/// Neumaier compensated summation in a fixed order.
pub(crate) fn compensated_sum(xs: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Mean and standard error of a sample vector (compensated).
pub(crate) fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = compensated_sum(xs) / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = compensated_sum(&sq) / (n - 1.0);
    (mean, (var / n).sqrt())
}
