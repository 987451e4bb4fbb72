//! Grid geometry and the field type.

use std::sync::{Arc, OnceLock};

use rustfft::num_complex::Complex;
use serde::Serialize;

use super::fft::fft_nd;
use super::FieldError;
use crate::scalar::Real;

/// The discrete unit torus: `n_dim` axes with `points_per_axis` points,
/// identified with `[-1/2, 1/2)^n` and spacing `1/points_per_axis`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GridSpec {
    pub n_dim: usize,
    pub points_per_axis: usize,
}

impl GridSpec {
    pub fn new(n_dim: usize, points_per_axis: usize) -> Result<Self, FieldError> {
        if n_dim < 2 {
            return Err(FieldError::InvalidGrid(format!(
                "spatial dimension {n_dim} < 2"
            )));
        }
        if points_per_axis < 8 || !points_per_axis.is_power_of_two() {
            return Err(FieldError::InvalidGrid(format!(
                "points per axis {points_per_axis} must be a power of two >= 8"
            )));
        }
        Ok(GridSpec { n_dim, points_per_axis })
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.n_dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.points_per_axis as f64
    }

    /// Per-axis grid indices of a flat index (row-major).
    pub fn coords(&self, mut idx: usize) -> Vec<usize> {
        let m = self.points_per_axis;
        let mut out = vec![0; self.n_dim];
        for a in (0..self.n_dim).rev() {
            out[a] = idx % m;
            idx /= m;
        }
        out
    }

    pub fn flat(&self, coords: &[usize]) -> usize {
        let m = self.points_per_axis;
        coords.iter().fold(0, |acc, &c| acc * m + (c % m))
    }

    /// Signed integer frequency of a per-axis index: `0..m/2-1` map to
    /// themselves, `m/2..m-1` to negative frequencies.
    pub fn freq_of(&self, k: usize) -> i64 {
        let m = self.points_per_axis as i64;
        let k = k as i64;
        if k < m / 2 {
            k
        } else {
            k - m
        }
    }

    /// Integer frequency vector of a flat spectral index.
    pub fn mode(&self, idx: usize) -> Vec<i64> {
        self.coords(idx).into_iter().map(|k| self.freq_of(k)).collect()
    }

    /// `|mode|^2` as an exact integer.
    pub fn mode_sq(&self, idx: usize) -> i64 {
        self.coords(idx)
            .into_iter()
            .map(|k| {
                let f = self.freq_of(k);
                f * f
            })
            .sum()
    }

    /// Flat index of the frequency-negated mode (the conjugate partner of a
    /// real field's coefficient).
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let m = self.points_per_axis;
        let coords: Vec<usize> = self
            .coords(idx)
            .into_iter()
            .map(|k| (m - k) % m)
            .collect();
        self.flat(&coords)
    }

    /// Position of a grid point, wrapped to `[-1/2, 1/2)^n`.
    pub fn point(&self, idx: usize) -> Vec<f64> {
        let m = self.points_per_axis as f64;
        self.coords(idx)
            .into_iter()
            .map(|k| {
                let x = k as f64 / m;
                if x < 0.5 {
                    x
                } else {
                    x - 1.0
                }
            })
            .collect()
    }

    /// Geodesic distance from a grid point to the origin.
    pub fn dist_to_origin(&self, idx: usize) -> f64 {
        self.point(idx).iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// A real field on the grid. The physical values are authoritative; the
/// spectral coefficients are computed on demand and cached.
#[derive(Debug)]
pub struct Field<T: Real> {
    grid: GridSpec,
    values: Vec<T>,
    spectrum: OnceLock<Arc<Vec<Complex<T>>>>,
}

impl<T: Real> Clone for Field<T> {
    fn clone(&self) -> Self {
        Field {
            grid: self.grid,
            values: self.values.clone(),
            spectrum: self.spectrum.clone(),
        }
    }
}

impl<T: Real> Field<T> {
    pub fn from_values(grid: GridSpec, values: Vec<T>) -> Result<Self, FieldError> {
        if values.len() != grid.len() {
            return Err(FieldError::InvalidGrid(format!(
                "{} values for a grid of {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Field { grid, values, spectrum: OnceLock::new() })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Field {
            grid,
            values: vec![T::zero(); grid.len()],
            spectrum: OnceLock::new(),
        }
    }

    pub fn constant(grid: GridSpec, c: T) -> Self {
        Field { grid, values: vec![c; grid.len()], spectrum: OnceLock::new() }
    }

    /// Synthesise the field from normalised Fourier coefficients
    /// `f(x_j) = sum_m c_m exp(2 pi i m.j / M)`. The imaginary residue of
    /// the inverse transform is discarded (callers supply conjugate-
    /// symmetric spectra); the coefficients are not retained.
    pub fn from_spectrum(grid: GridSpec, mut spectrum: Vec<Complex<T>>) -> Result<Self, FieldError> {
        if spectrum.len() != grid.len() {
            return Err(FieldError::InvalidGrid(format!(
                "{} coefficients for a grid of {}",
                spectrum.len(),
                grid.len()
            )));
        }
        fft_nd(&mut spectrum, grid.n_dim, grid.points_per_axis, true);
        let values = spectrum.iter().map(|c| c.re).collect();
        Ok(Field { grid, values, spectrum: OnceLock::new() })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Normalised Fourier coefficients, cached after the first call.
    pub fn spectrum(&self) -> Arc<Vec<Complex<T>>> {
        self.spectrum
            .get_or_init(|| {
                let mut buf: Vec<Complex<T>> = self
                    .values
                    .iter()
                    .map(|&v| Complex::new(v, T::zero()))
                    .collect();
                fft_nd(&mut buf, self.grid.n_dim, self.grid.points_per_axis, false);
                let scale = T::one() / T::from_usize(self.grid.len()).unwrap();
                for c in &mut buf {
                    *c = *c * scale;
                }
                Arc::new(buf)
            })
            .clone()
    }

    /// New field with coefficients `g(m) * c_m` for a real multiplier.
    pub fn apply_multiplier(&self, g: impl Fn(usize) -> T) -> Field<T> {
        let spec = self.spectrum();
        let new: Vec<Complex<T>> = spec
            .iter()
            .enumerate()
            .map(|(i, c)| *c * g(i))
            .collect();
        Field::from_spectrum(self.grid, new).expect("same grid")
    }

    /// Spectral derivative along an axis: multiplier `2 pi i m_axis`.
    pub fn derivative(&self, axis: usize) -> Field<T> {
        let spec = self.spectrum();
        let two_pi = crate::scalar::real::<T>(2.0 * std::f64::consts::PI);
        let new: Vec<Complex<T>> = spec
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let m = crate::scalar::real::<T>(self.grid.mode(i)[axis] as f64);
                Complex::new(T::zero(), two_pi * m) * *c
            })
            .collect();
        Field::from_spectrum(self.grid, new).expect("same grid")
    }

    pub fn gradient(&self) -> Vec<Field<T>> {
        (0..self.grid.n_dim).map(|a| self.derivative(a)).collect()
    }

    pub fn sup_norm(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    pub fn mean(&self) -> T {
        let sum: T = self.values.iter().copied().sum();
        sum / T::from_usize(self.grid.len()).unwrap()
    }

    pub fn zip_with(&self, other: &Field<T>, f: impl Fn(T, T) -> T) -> Result<Field<T>, FieldError> {
        if self.grid != other.grid {
            return Err(FieldError::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Field { grid: self.grid, values, spectrum: OnceLock::new() })
    }

    pub fn add(&self, other: &Field<T>) -> Result<Field<T>, FieldError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field<T>) -> Result<Field<T>, FieldError> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Field<T> {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
            spectrum: OnceLock::new(),
        }
    }

    pub fn scale(&self, s: T) -> Field<T> {
        self.map(|v| v * s)
    }

    /// In-place accumulate `self += s * other`.
    pub fn axpy(&mut self, s: T, other: &Field<T>) {
        debug_assert_eq!(self.grid, other.grid);
        self.spectrum = OnceLock::new();
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * *b;
        }
    }

    /// Circular autocorrelation `(1/N) sum_y f(y) f(y + x)`, computed
    /// spectrally as the synthesis of `|c_m|^2`; the empirical stationary
    /// covariance estimator.
    pub fn autocorrelation(&self) -> Field<T> {
        let spec = self.spectrum();
        let new: Vec<Complex<T>> = spec
            .iter()
            .map(|c| Complex::new(c.norm_sqr(), T::zero()))
            .collect();
        Field::from_spectrum(self.grid, new).expect("same grid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_modes_and_conjugates() {
        let g = GridSpec::new(2, 8).unwrap();
        assert_eq!(g.len(), 64);
        assert_eq!(g.mode(0), vec![0, 0]);
        assert_eq!(g.mode(g.flat(&[1, 7])), vec![1, -1]);
        assert_eq!(g.mode(g.flat(&[4, 0])), vec![-4, 0]);
        let idx = g.flat(&[2, 3]);
        assert_eq!(g.mode(g.conjugate_index(idx)), vec![-2, -3]);
        assert!(GridSpec::new(1, 8).is_err());
        assert!(GridSpec::new(2, 12).is_err());
        assert!(GridSpec::new(2, 4).is_err());
    }

    #[test]
    fn points_wrap_to_centered_box() {
        let g = GridSpec::new(2, 8).unwrap();
        assert_eq!(g.point(0), vec![0.0, 0.0]);
        assert_eq!(g.point(g.flat(&[7, 1])), vec![-0.125, 0.125]);
        assert_eq!(g.point(g.flat(&[4, 4])), vec![-0.5, -0.5]);
    }

    #[test]
    fn spectrum_round_trip_is_tight() {
        let g = GridSpec::new(2, 32).unwrap();
        let vals: Vec<f64> = (0..g.len())
            .map(|i| ((i * 37 % 101) as f64 / 50.0 - 1.0).cos())
            .collect();
        let f = Field::from_values(g, vals.clone()).unwrap();
        let spec = f.spectrum();
        let back = Field::from_spectrum(g, spec.as_ref().clone()).unwrap();
        let mut worst: f64 = 0.0;
        for (a, b) in back.values().iter().zip(&vals) {
            worst = worst.max((a - b).abs());
        }
        assert!(worst < 1e-10, "round trip error {worst}");
    }

    #[test]
    fn derivative_of_a_single_mode() {
        let g = GridSpec::new(2, 16).unwrap();
        let m = g.points_per_axis as f64;
        let vals: Vec<f64> = (0..g.len())
            .map(|i| {
                let c = g.coords(i);
                (2.0 * std::f64::consts::PI * 2.0 * c[0] as f64 / m).sin()
            })
            .collect();
        let f = Field::from_values(g, vals).unwrap();
        let d = f.derivative(0);
        for i in 0..g.len() {
            let c = g.coords(i);
            let expect = 4.0
                * std::f64::consts::PI
                * (2.0 * std::f64::consts::PI * 2.0 * c[0] as f64 / m).cos();
            assert!((d.values()[i] - expect).abs() < 1e-9);
        }
    }
}
