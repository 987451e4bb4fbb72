//! Real scalar fields on the discrete unit torus with cached spectral
//! representations, the Gaussian free field sampler, mollification, Besov
//! norm estimation, and test-function pairings.

mod besov;
mod fft;
mod field;
mod gff;
mod mollifier;
mod pairing;

pub use besov::{besov_norm, c1_norm};
pub use field::{Field, GridSpec};
pub use gff::{
    covariance_eps_difference, covariance_mollified, sample_gff, CovarianceSpec,
};
pub use mollifier::{mollify, Mollifier};
pub use pairing::{pairing_all_centers, test_function_pairing, TestFunction};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("grid: {0}")]
    InvalidGrid(String),
    #[error("covariance exponent 2*beta = {0} outside (0, n); need d in (2, n+2)")]
    InvalidCovariance(f64),
    #[error("scale {scale} is not resolvable on a grid with spacing {spacing}")]
    UnresolvedScale { scale: f64, spacing: f64 },
    #[error("besov regularity {0} outside the supported range (-3, 3)")]
    UnsupportedRegularity(f64),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("{0}")]
    Invalid(String),
}
