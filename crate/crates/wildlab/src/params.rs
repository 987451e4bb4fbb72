//! Exponent bookkeeping for the fixed-point solver: the admissibility
//! condition on `(omega_xi, beta, delta)`, the canonical parameter choice for
//! a given fractional dimension, and the solver exponents derived from a
//! passing report.
//!
//! The canonical parameterisation assigns the same `(beta, delta)` to every
//! tree with the same leaf count, so all maps here are keyed by noise class;
//! reports carry one representative tree per class as witness.

use serde::Serialize;
use thiserror::Error;

use crate::trees::LabelledTree;

/// Tolerance for strict exponent inequalities. The quantities compared are
/// exact affine expressions evaluated in double precision, so anything
/// smaller than this margin is representation noise.
pub const EXPONENT_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ParamError {
    #[error("dimension d = {0} outside (2, 4)")]
    DimensionOutOfRange(f64),
    #[error("kappa = {0} must be positive")]
    NonPositiveKappa(f64),
    #[error("noise class {0} outside the parameterised range")]
    NoiseClassOutOfRange(usize),
    #[error("solver exponents requested for a failing condition report")]
    ConditionFailed,
    #[error("no admissible kappa found below {0}")]
    NoAdmissibleKappa(f64),
}

/// Exponent data `(d, n, N, kappa, omega_xi, beta, delta)` with `beta`,
/// `delta` keyed by noise class `m = 2..=N` and `omega` derived as
/// `beta - 2*delta + 2` (and `omega_xi` for `m = 1`).
#[derive(Debug, Clone, Serialize)]
pub struct ParameterSet {
    pub d: f64,
    pub n_dim: usize,
    /// Truncation level `N` (maximal leaf count).
    pub n_trees: usize,
    pub kappa: f64,
    pub omega_xi: f64,
    beta_by_noise: Vec<f64>,
    delta_by_noise: Vec<f64>,
}

impl ParameterSet {
    /// `beta` for trees with `m >= 2` leaves.
    pub fn beta(&self, m: usize) -> Result<f64, ParamError> {
        self.beta_by_noise
            .get(m.wrapping_sub(2))
            .copied()
            .ok_or(ParamError::NoiseClassOutOfRange(m))
    }

    /// `delta` for trees with `m >= 2` leaves.
    pub fn delta(&self, m: usize) -> Result<f64, ParamError> {
        self.delta_by_noise
            .get(m.wrapping_sub(2))
            .copied()
            .ok_or(ParamError::NoiseClassOutOfRange(m))
    }

    /// `omega` for any noise class `1..=N`.
    pub fn omega(&self, m: usize) -> Result<f64, ParamError> {
        if m == 1 {
            Ok(self.omega_xi)
        } else {
            Ok(self.beta(m)? - 2.0 * self.delta(m)? + 2.0)
        }
    }

    pub fn beta_of(&self, t: &LabelledTree) -> Result<f64, ParamError> {
        self.beta(t.noise())
    }

    pub fn delta_of(&self, t: &LabelledTree) -> Result<f64, ParamError> {
        self.delta(t.noise())
    }

    /// Override a class value (used to probe condition failures).
    pub fn set_beta_class(&mut self, m: usize, value: f64) -> Result<(), ParamError> {
        let slot = self
            .beta_by_noise
            .get_mut(m.wrapping_sub(2))
            .ok_or(ParamError::NoiseClassOutOfRange(m))?;
        *slot = value;
        Ok(())
    }

    pub fn set_delta_class(&mut self, m: usize, value: f64) -> Result<(), ParamError> {
        let slot = self
            .delta_by_noise
            .get_mut(m.wrapping_sub(2))
            .ok_or(ParamError::NoiseClassOutOfRange(m))?;
        *slot = value;
        Ok(())
    }
}

/// Truncation level `N = floor(2/(4-d))`. The floor is taken with a small
/// grace so that decimal inputs like 3.9 (not exactly representable in
/// binary) land on the intended integer.
pub fn truncation_level(d: f64) -> Result<usize, ParamError> {
    if !(2.0 < d && d < 4.0) {
        return Err(ParamError::DimensionOutOfRange(d));
    }
    Ok(((2.0 / (4.0 - d)) + 1e-9).floor() as usize)
}

/// The canonical parameter choice: `N = floor(2/(4-d))`,
/// `omega_xi = (2-d)/2 - kappa`, and for every tree class
/// `beta = (2-d)/2`, `delta = -|tau|/2 + beta/2 + kappa/2`,
/// which gives `omega = m(4-d)/2 - 1 - kappa`.
pub fn paper_parameters(d: f64, kappa: f64) -> Result<ParameterSet, ParamError> {
    paper_parameters_in_dim(d, kappa, 2)
}

pub fn paper_parameters_in_dim(d: f64, kappa: f64, n_dim: usize) -> Result<ParameterSet, ParamError> {
    if kappa <= 0.0 {
        return Err(ParamError::NonPositiveKappa(kappa));
    }
    let n_trees = truncation_level(d)?.max(1);
    let beta = (2.0 - d) / 2.0;
    let mut beta_by_noise = Vec::new();
    let mut delta_by_noise = Vec::new();
    for m in 2..=n_trees {
        let hom = (m as f64) * (2.0 - d) / 2.0 + m as f64 - 3.0;
        beta_by_noise.push(beta);
        delta_by_noise.push(-hom / 2.0 + beta / 2.0 + kappa / 2.0);
    }
    Ok(ParameterSet {
        d,
        n_dim,
        n_trees,
        kappa,
        omega_xi: (2.0 - d) / 2.0 - kappa,
        beta_by_noise,
        delta_by_noise,
    })
}

/// Per-class flags reported by [`check_ci`].
#[derive(Debug, Clone, Serialize)]
pub struct ClassFlags {
    pub noise: usize,
    /// Canonical form of a representative tree of this class.
    pub witness: String,
    pub beta: Option<f64>,
    pub delta: Option<f64>,
    pub omega: f64,
    pub beta_in_range: bool,
    pub delta_below_one: bool,
    pub omega_nonpositive: bool,
}

/// Result of the admissibility check.
#[derive(Debug, Clone, Serialize)]
pub struct CiReport {
    pub d: f64,
    pub kappa: f64,
    pub n_trees: usize,
    /// `min omega_tau` over all classes.
    pub omega_min: f64,
    /// `min omega_{t1} + omega_{t2}` over pairs with noise sum `> N`.
    pub alpha: f64,
    /// `min` over triples with noise sum `> N`.
    pub gamma: f64,
    pub omega_witness: String,
    pub alpha_witness: [String; 2],
    pub gamma_witness: [String; 3],
    pub alpha_witness_noise: [usize; 2],
    pub gamma_witness_noise: [usize; 3],
    pub per_class: Vec<ClassFlags>,
    pub pass: bool,
}

/// Representative tree of a noise class: the comb
/// `I(I(...I(X)I'(X)...)I'(X))`.
pub fn class_witness(m: usize) -> LabelledTree {
    let mut t = LabelledTree::leaf();
    for _ in 1..m {
        t = LabelledTree::bilinear(t, LabelledTree::leaf());
    }
    t
}

fn strictly_greater(a: f64, b: f64) -> bool {
    a > b + EXPONENT_TOL
}

fn nonstrictly_below(a: f64, b: f64) -> bool {
    a <= b + EXPONENT_TOL
}

/// Exhaustive minimisation of the admissibility condition over noise-class
/// tuples, with witnesses.
pub fn check_ci(p: &ParameterSet) -> CiReport {
    let n = p.n_trees;
    let omega = |m: usize| p.omega(m).expect("class in range");

    let mut per_class = Vec::new();
    let mut all_flags = true;
    for m in 1..=n {
        let (beta, delta) = if m == 1 {
            (None, None)
        } else {
            (Some(p.beta(m).unwrap()), Some(p.delta(m).unwrap()))
        };
        let beta_in_range = beta
            .map(|b| strictly_greater(b, -1.0) && strictly_greater(0.0, b))
            .unwrap_or(true);
        let delta_below_one = delta.map(|dl| strictly_greater(1.0, dl)).unwrap_or(true);
        let omega_nonpositive = nonstrictly_below(omega(m), 0.0);
        all_flags &= beta_in_range && delta_below_one && omega_nonpositive;
        per_class.push(ClassFlags {
            noise: m,
            witness: class_witness(m).canonical_form(),
            beta,
            delta,
            omega: omega(m),
            beta_in_range,
            delta_below_one,
            omega_nonpositive,
        });
    }

    let mut omega_min = f64::INFINITY;
    let mut omega_arg = 1;
    for m in 1..=n {
        if omega(m) < omega_min {
            omega_min = omega(m);
            omega_arg = m;
        }
    }

    let mut alpha = f64::INFINITY;
    let mut alpha_arg = [1usize; 2];
    for m1 in 1..=n {
        for m2 in 1..=n {
            if m1 + m2 > n {
                let v = omega(m1) + omega(m2);
                if v < alpha {
                    alpha = v;
                    alpha_arg = [m1, m2];
                }
            }
        }
    }

    let mut gamma = f64::INFINITY;
    let mut gamma_arg = [1usize; 3];
    for m1 in 1..=n {
        for m2 in 1..=n {
            for m3 in 1..=n {
                if m1 + m2 + m3 > n {
                    let v = omega(m1) + omega(m2) + omega(m3);
                    if v < gamma {
                        gamma = v;
                        gamma_arg = [m1, m2, m3];
                    }
                }
            }
        }
    }

    let pass = all_flags
        && strictly_greater(omega_min, -1.0)
        && strictly_greater(alpha, -1.0)
        && strictly_greater(gamma, -2.0);

    CiReport {
        d: p.d,
        kappa: p.kappa,
        n_trees: n,
        omega_min,
        alpha,
        gamma,
        omega_witness: class_witness(omega_arg).canonical_form(),
        alpha_witness: alpha_arg.map(|m| class_witness(m).canonical_form()),
        gamma_witness: gamma_arg.map(|m| class_witness(m).canonical_form()),
        alpha_witness_noise: alpha_arg,
        gamma_witness_noise: gamma_arg,
        per_class,
        pass,
    }
}

/// The exponents feeding the remainder fixed point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SolverExponents {
    /// The weight exponent of the remainder norm (must satisfy the
    /// slack inequalities against `omega`, `alpha`, `gamma`).
    pub theta_remainder: f64,
    /// The contraction exponent; positive whenever the report passes.
    pub kappa_hat: f64,
}

/// Choose the remainder exponent at half the available slack and derive the
/// contraction exponent
/// `kappa_hat = min{(omega+1)/2, 2 theta + 1/2, (alpha+1)/2, gamma/2 + 1} - theta`.
pub fn solver_exponents(report: &CiReport) -> Result<SolverExponents, ParamError> {
    if !report.pass {
        return Err(ParamError::ConditionFailed);
    }
    let slack = [
        report.omega_min / 2.0 + 0.5,
        report.alpha / 2.0 + 0.5,
        report.gamma / 2.0 + 1.0,
    ];
    let theta = 0.5 * slack.iter().cloned().fold(f64::INFINITY, f64::min);
    debug_assert!(theta > 0.0);
    let kappa_hat = [
        (report.omega_min + 1.0) / 2.0,
        2.0 * theta + 0.5,
        (report.alpha + 1.0) / 2.0,
        report.gamma / 2.0 + 1.0,
    ]
    .iter()
    .cloned()
    .fold(f64::INFINITY, f64::min)
        - theta;
    Ok(SolverExponents { theta_remainder: theta, kappa_hat })
}

/// Largest `kappa` in `(0, cap]` for which the canonical parameterisation
/// passes the admissibility check, found by bisection (the pass region is an
/// interval `(0, kappa*)`).
pub fn kappa_guard(d: f64) -> Result<f64, ParamError> {
    kappa_guard_with_cap(d, 0.2)
}

pub fn kappa_guard_with_cap(d: f64, cap: f64) -> Result<f64, ParamError> {
    let passes = |k: f64| -> Result<bool, ParamError> {
        Ok(check_ci(&paper_parameters(d, k)?).pass)
    };
    if passes(cap)? {
        return Ok(cap);
    }
    let mut lo = 1e-9;
    if !passes(lo)? {
        return Err(ParamError::NoAdmissibleKappa(lo));
    }
    let mut hi = cap;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if passes(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}
