//! Pairings with rescaled test functions
//! `phi^lambda_z(x) = lambda^{-n} phi((x - z)/lambda)`.

use rustfft::num_complex::Complex;

use super::{Field, FieldError, GridSpec};
use crate::scalar::Real;

/// The fixed smooth bump `phi(x) propto exp(-1/(1 - |4x|^2))` supported in
/// `|x| < 1/4`, discretely normalised to unit integral at each scale.
#[derive(Debug, Clone, Copy)]
pub struct TestFunction {
    pub lambda: f64,
}

impl TestFunction {
    pub fn new(lambda: f64) -> Result<Self, FieldError> {
        if !(0.0 < lambda && lambda <= 1.0) {
            return Err(FieldError::Invalid(format!(
                "test-function scale {lambda} outside (0, 1]"
            )));
        }
        Ok(TestFunction { lambda })
    }

    pub fn check_resolvable(&self, grid: GridSpec) -> Result<(), FieldError> {
        if self.lambda < 4.0 * grid.spacing() {
            return Err(FieldError::UnresolvedScale {
                scale: self.lambda,
                spacing: grid.spacing(),
            });
        }
        Ok(())
    }

    /// `phi^lambda_0` sampled on the grid with unit discrete integral.
    pub fn sample_on_grid<T: Real>(&self, grid: GridSpec) -> Result<Field<T>, FieldError> {
        self.check_resolvable(grid)?;
        let inv = 4.0 / self.lambda;
        let mut vals = vec![0.0f64; grid.len()];
        for (i, v) in vals.iter_mut().enumerate() {
            let r2: f64 = grid.point(i).iter().map(|x| (x * inv) * (x * inv)).sum();
            if r2 < 1.0 {
                *v = (-1.0 / (1.0 - r2)).exp();
            }
        }
        let h_n = grid.spacing().powi(grid.n_dim as i32);
        let total: f64 = vals.iter().sum::<f64>() * h_n;
        Field::from_values(
            grid,
            vals.into_iter().map(|v| crate::scalar::real::<T>(v / total)).collect(),
        )
    }
}

/// `<x, phi^lambda_z>` at a single grid centre `z` (per-axis indices):
/// grid sum times `spacing^n`.
pub fn test_function_pairing<T: Real>(
    x: &Field<T>,
    lambda: f64,
    z: &[usize],
) -> Result<T, FieldError> {
    let grid = x.grid();
    if z.len() != grid.n_dim {
        return Err(FieldError::Invalid("centre has wrong dimension".into()));
    }
    let phi = TestFunction::new(lambda)?.sample_on_grid::<T>(grid)?;
    let m = grid.points_per_axis;
    let mut acc = T::zero();
    for i in 0..grid.len() {
        let c = grid.coords(i);
        let shifted: Vec<usize> = c
            .iter()
            .zip(z)
            .map(|(&ci, &zi)| (ci + m - (zi % m)) % m)
            .collect();
        acc += x.values()[i] * phi.values()[grid.flat(&shifted)];
    }
    Ok(acc * crate::scalar::real::<T>(grid.spacing().powi(grid.n_dim as i32)))
}

/// `<x, phi^lambda_z>` for every centre `z` simultaneously, via spectral
/// convolution (the test function is even). Used by the scaling studies,
/// which average the squared pairing over all centres by stationarity.
pub fn pairing_all_centers<T: Real>(x: &Field<T>, lambda: f64) -> Result<Field<T>, FieldError> {
    let grid = x.grid();
    let phi = TestFunction::new(lambda)?.sample_on_grid::<T>(grid)?;
    let phi_spec = phi.spectrum();
    let x_spec = x.spectrum();
    // Multiplier N h^n = 1, as for the mollifier.
    let new: Vec<Complex<T>> = x_spec
        .iter()
        .zip(phi_spec.iter())
        .map(|(c, p)| *c * p.re)
        .collect();
    Field::from_spectrum(grid, new)
}
