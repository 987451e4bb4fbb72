//! Singular-tree calculus, Feynman-forest power counting with bound
//! certificates, a spectral solver for semilinear heat equations on the
//! torus with Gaussian free field initial data, and Monte Carlo scaling
//! studies that confront the solver with the predicted exponents.
//!
//! The symbolic layer (`trees`, `params`, `diagrams`) works in exact
//! rational arithmetic; the numeric layer (`fields`, `heat`, `picard`) is
//! generic over the floating-point scalar via [`scalar::Real`], with `f64`
//! aliases exported at the crate root.

pub mod diagrams;
pub mod exponent;
pub mod fields;
pub mod heat;
pub mod params;
pub mod picard;
pub mod scalar;
pub mod study;
pub mod trees;

pub use exponent::{Exponent, Rat};
pub use trees::LabelledTree;

/// Concrete `f64` aliases for the generic numeric layer.
pub type Field64 = fields::Field<f64>;
pub type SpaceTimeField64 = heat::SpaceTimeField<f64>;
pub type PicardBundle64 = picard::PicardBundle<f64>;
/// Concrete `f32` aliases.
pub type Field32 = fields::Field<f32>;
pub type SpaceTimeField32 = heat::SpaceTimeField<f32>;
