//! Mollification: convolution with an even, smooth, compactly supported
//! bump at scale `eps`, applied as a spectral multiplier.

use rustfft::num_complex::Complex;
use serde::Serialize;

use super::{Field, FieldError, GridSpec};
use crate::scalar::Real;

/// The standard bump `chi(x) propto exp(-1/(1 - |2x|^2))` supported in
/// `|x| < 1/2`, rescaled to `chi^eps = eps^{-n} chi(x/eps)` and normalised
/// so its discrete integral is exactly 1.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Mollifier {
    pub eps: f64,
}

impl Mollifier {
    pub fn new(eps: f64) -> Result<Self, FieldError> {
        if !(0.0 < eps && eps <= 1.0) {
            return Err(FieldError::Invalid(format!(
                "mollification scale {eps} outside (0, 1]"
            )));
        }
        Ok(Mollifier { eps })
    }

    fn profile(r2: f64) -> f64 {
        // r2 = |2x/eps|^2; support |2x/eps| < 1.
        if r2 < 1.0 {
            (-1.0 / (1.0 - r2)).exp()
        } else {
            0.0
        }
    }

    pub fn check_resolvable(&self, grid: GridSpec) -> Result<(), FieldError> {
        if self.eps < 2.0 * grid.spacing() {
            return Err(FieldError::UnresolvedScale {
                scale: self.eps,
                spacing: grid.spacing(),
            });
        }
        Ok(())
    }

    /// The bump sampled on the grid, normalised to unit discrete integral.
    pub fn sample_on_grid<T: Real>(&self, grid: GridSpec) -> Result<Field<T>, FieldError> {
        self.check_resolvable(grid)?;
        let mut vals = vec![0.0f64; grid.len()];
        let inv = 2.0 / self.eps;
        for (i, v) in vals.iter_mut().enumerate() {
            let r2: f64 = grid
                .point(i)
                .iter()
                .map(|x| (x * inv) * (x * inv))
                .sum();
            *v = Self::profile(r2);
        }
        let h_n = grid.spacing().powi(grid.n_dim as i32);
        let total: f64 = vals.iter().sum::<f64>() * h_n;
        if total <= 0.0 {
            return Err(FieldError::UnresolvedScale {
                scale: self.eps,
                spacing: grid.spacing(),
            });
        }
        Field::from_values(
            grid,
            vals.into_iter().map(|v| crate::scalar::real::<T>(v / total)).collect(),
        )
    }

    /// The convolution multiplier: the discrete-integral Fourier transform
    /// of the sampled bump, `sum_j chi(x_j) e^{-2 pi i m.j/M} h^n`, which
    /// equals the normalised spectrum coefficient since `N h^n = 1`. The
    /// bump is even on the grid, so the transform is real; it equals 1 at
    /// the zero mode by normalisation.
    pub fn multiplier<T: Real>(&self, grid: GridSpec) -> Result<Vec<T>, FieldError> {
        let chi = self.sample_on_grid::<T>(grid)?;
        let spec = chi.spectrum();
        Ok(spec.iter().map(|c| c.re).collect())
    }
}

/// Convolve a field with the mollifier (spectral multiplication).
pub fn mollify<T: Real>(x: &Field<T>, m: &Mollifier) -> Result<Field<T>, FieldError> {
    let mult = m.multiplier::<T>(x.grid())?;
    let spec = x.spectrum();
    let new: Vec<Complex<T>> = spec
        .iter()
        .zip(&mult)
        .map(|(c, &g)| *c * g)
        .collect();
    Field::from_spectrum(x.grid(), new)
}
