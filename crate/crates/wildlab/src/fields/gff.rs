//! Gaussian free field sampling by spectral synthesis, and the exact
//! spectral covariances used as Monte Carlo oracles.
//!
//! The field has covariance operator `(-Delta)^{-(n+2-d)/2}` on mean-zero
//! functions: independent complex Gaussian coefficients with variance
//! `(4 pi^2 |m|^2)^{-(n+2-d)/2}` per mode, conjugate symmetry, and the zero
//! mode removed. Each mode draws from its own counter-based stream, so the
//! sample is independent of evaluation order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use serde::Serialize;

use super::{Field, FieldError, GridSpec, Mollifier};
use crate::scalar::Real;

/// GFF covariance data for fractional dimension `d`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CovarianceSpec {
    pub d: f64,
}

impl CovarianceSpec {
    pub fn new(d: f64) -> Self {
        CovarianceSpec { d }
    }

    /// `beta = (n + 2 - d) / 2`, the inverse-Laplacian power.
    pub fn beta_cov(&self, n_dim: usize) -> f64 {
        (n_dim as f64 + 2.0 - self.d) / 2.0
    }

    pub fn validate(&self, n_dim: usize) -> Result<(), FieldError> {
        let two_beta = n_dim as f64 + 2.0 - self.d;
        if two_beta <= 0.0 || two_beta >= n_dim as f64 {
            return Err(FieldError::InvalidCovariance(two_beta));
        }
        Ok(())
    }

    /// Variance multiplier of mode `m`: `(4 pi^2 |m|^2)^{-beta}`; zero for
    /// the zero mode.
    pub fn multiplier(&self, grid: GridSpec, idx: usize) -> f64 {
        let msq = grid.mode_sq(idx);
        if msq == 0 {
            return 0.0;
        }
        let lambda = 4.0 * std::f64::consts::PI.powi(2) * msq as f64;
        lambda.powf(-self.beta_cov(grid.n_dim))
    }
}

/// Draw one GFF sample. Deterministic in `(grid, cov, seed)`: mode `m`'s
/// coefficient comes from stream `m` of a ChaCha counter RNG seeded with
/// `seed`, independent of iteration order.
pub fn sample_gff<T: Real>(
    grid: GridSpec,
    cov: &CovarianceSpec,
    seed: u64,
) -> Result<Field<T>, FieldError> {
    cov.validate(grid.n_dim)?;
    let n = grid.len();
    let mut spec = vec![Complex::new(T::zero(), T::zero()); n];
    let base = ChaCha8Rng::seed_from_u64(seed);
    let half = std::f64::consts::FRAC_1_SQRT_2;
    for idx in 0..n {
        let conj = grid.conjugate_index(idx);
        if conj < idx {
            continue; // handled together with its representative
        }
        let mult = cov.multiplier(grid, idx);
        if mult == 0.0 {
            continue;
        }
        let sigma = mult.sqrt();
        let mut rng = base.clone();
        rng.set_stream(idx as u64);
        let g1: f64 = rng.sample(StandardNormal);
        if conj == idx {
            // Self-conjugate mode: real Gaussian with the full variance.
            spec[idx] = Complex::new(crate::scalar::real::<T>(sigma * g1), T::zero());
        } else {
            let g2: f64 = rng.sample(StandardNormal);
            let re = crate::scalar::real::<T>(sigma * half * g1);
            let im = crate::scalar::real::<T>(sigma * half * g2);
            spec[idx] = Complex::new(re, im);
            spec[conj] = Complex::new(re, -im);
        }
    }
    Field::from_spectrum(grid, spec)
}

/// Exact covariance function `E[X^eps(x) X^eps(0)]` on the grid, via
/// spectral synthesis of `multiplier * chi_hat^2`. With `moll = None` this
/// is the raw field covariance.
pub fn covariance_mollified<T: Real>(
    grid: GridSpec,
    cov: &CovarianceSpec,
    moll: Option<&Mollifier>,
) -> Result<Field<T>, FieldError> {
    cov.validate(grid.n_dim)?;
    let chi = match moll {
        Some(m) => m.multiplier::<T>(grid)?,
        None => vec![T::one(); grid.len()],
    };
    let spec: Vec<Complex<T>> = (0..grid.len())
        .map(|i| {
            let c = crate::scalar::real::<T>(cov.multiplier(grid, i)) * chi[i] * chi[i];
            Complex::new(c, T::zero())
        })
        .collect();
    Field::from_spectrum(grid, spec)
}

/// Exact cross-covariance `E[X^eps(x) (X^eps - X^epsbar)(0)]`, the
/// difference-part oracle. Identically zero when `eps == eps_bar`.
pub fn covariance_eps_difference<T: Real>(
    grid: GridSpec,
    cov: &CovarianceSpec,
    eps: f64,
    eps_bar: f64,
) -> Result<Field<T>, FieldError> {
    cov.validate(grid.n_dim)?;
    let chi_e = Mollifier::new(eps)?.multiplier::<T>(grid)?;
    let chi_b = Mollifier::new(eps_bar)?.multiplier::<T>(grid)?;
    let spec: Vec<Complex<T>> = (0..grid.len())
        .map(|i| {
            let c = crate::scalar::real::<T>(cov.multiplier(grid, i)) * chi_e[i] * (chi_e[i] - chi_b[i]);
            Complex::new(c, T::zero())
        })
        .collect();
    Field::from_spectrum(grid, spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_are_mean_zero_and_deterministic() {
        let grid = GridSpec::new(2, 32).unwrap();
        let cov = CovarianceSpec::new(3.0);
        let a: Field<f64> = sample_gff(grid, &cov, 7).unwrap();
        let b: Field<f64> = sample_gff(grid, &cov, 7).unwrap();
        let c: Field<f64> = sample_gff(grid, &cov, 8).unwrap();
        assert!(a.mean().abs() < 1e-13);
        assert_eq!(a.values(), b.values());
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn rejects_out_of_range_covariance() {
        let cov = CovarianceSpec::new(4.5);
        assert!(cov.validate(2).is_err());
        assert!(CovarianceSpec::new(2.0).validate(2).is_err());
        assert!(CovarianceSpec::new(3.9).validate(2).is_ok());
    }

    #[test]
    fn spectral_variance_matches_the_multiplier() {
        let grid = GridSpec::new(2, 16).unwrap();
        let cov = CovarianceSpec::new(2.5);
        let n_samples = 600;
        let probes = [
            grid.flat(&[1, 0]),
            grid.flat(&[0, 3]),
            grid.flat(&[2, 2]),
            grid.flat(&[8, 0]), // self-conjugate (Nyquist)
        ];
        let mut acc = vec![0.0f64; probes.len()];
        for s in 0..n_samples {
            let x: Field<f64> = sample_gff(grid, &cov, 1000 + s).unwrap();
            let spec = x.spectrum();
            for (j, &p) in probes.iter().enumerate() {
                acc[j] += spec[p].norm_sqr();
            }
        }
        for (j, &p) in probes.iter().enumerate() {
            let mean = acc[j] / n_samples as f64;
            let mult = cov.multiplier(grid, p);
            // |c|^2 has standard deviation ~ mult, so 3 sigma of the mean
            // estimator is 3 mult / sqrt(n). Self-conjugate modes have
            // var(|c|^2) = 2 mult^2.
            let tol = 3.0 * mult * (2.0f64).sqrt() / (n_samples as f64).sqrt();
            assert!(
                (mean - mult).abs() < tol,
                "mode {:?}: {mean} vs {mult}",
                grid.mode(p)
            );
        }
    }

    #[test]
    fn covariance_decays_with_the_expected_slope() {
        // Zero-mode removal gives the lattice covariance a smooth negative
        // offset, so the singular slope 2 - d is read off the dyadic
        // differences C(r) - C(2r), which cancel the background.
        let grid = GridSpec::new(2, 256).unwrap();
        for &d in &[2.5, 3.0] {
            let cov = CovarianceSpec::new(d);
            let c: Field<f64> = covariance_mollified(grid, &cov, None).unwrap();
            let m = grid.points_per_axis as f64;
            let mut pts = Vec::new();
            for r in 3..=24usize {
                let v = c.values()[grid.flat(&[0, r])] - c.values()[grid.flat(&[0, 2 * r])];
                assert!(v > 0.0);
                pts.push(((r as f64 / m).ln(), v.ln()));
            }
            let n = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
                / pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<f64>();
            assert!(
                (slope - (2.0 - d)).abs() < 0.1,
                "d = {d}: slope {slope} vs {}",
                2.0 - d
            );
        }
    }

    #[test]
    fn eps_difference_vanishes_at_equal_scales() {
        let grid = GridSpec::new(2, 64).unwrap();
        let cov = CovarianceSpec::new(3.0);
        let diff: Field<f64> = covariance_eps_difference(grid, &cov, 0.1, 0.1).unwrap();
        assert!(diff.sup_norm() < 1e-14);
        let diff2: Field<f64> = covariance_eps_difference(grid, &cov, 0.1, 0.05).unwrap();
        assert!(diff2.sup_norm() > 1e-10);
    }
}
