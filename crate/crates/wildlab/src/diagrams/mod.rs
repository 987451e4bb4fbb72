//! Decorated contracted forests and the power-counting machinery: Wick
//! pairing enumeration, saturation/safety classification, the branch weight
//! `Lambda`, hypothesis checking, and the inductive edge-deletion reduction
//! that certifies the two-point bounds.

mod conditions;
mod forest;
mod pairings;
mod reduce;
mod two_point;

pub use conditions::{verify_conditions, ConditionReport, ZEntry};
pub use forest::{
    Classification, ContractingEdge, DecoratedContractedForest, SafeDeletion, VertexSpec,
};
pub use pairings::{enumerate_pairings, pairing_count};
pub use reduce::{
    power_count, power_count_time_diff, BoundCertificate, StepCase, TimeDifferenceQuery,
    TraceStep,
};
pub use two_point::{build_two_point_forests, TwoPointKind};

use thiserror::Error;

use crate::exponent::Rat;

#[derive(Debug, Error)]
pub enum DiagramError {
    #[error("forest has an odd number of leaves ({0}); complete pairings need an even count")]
    OddLeafCount(usize),
    #[error("contraction touches a root; the bounds require root-free contractions")]
    RootContraction,
    #[error("hypothesis check failed: {0}")]
    ConditionFailed(String),
    #[error("theta = {theta} outside [0, {max}]")]
    ThetaOutOfRange { theta: f64, max: f64 },
    #[error("invalid time-difference query: {0}")]
    InvalidQuery(String),
    #[error("invalid forest: {0}")]
    InvalidForest(String),
}

/// Numeric context for evaluating symbolic exponents: exact rational values
/// of `d` and `kappa`, and the spatial dimension `n` of the torus.
#[derive(Debug, Clone)]
pub struct EvalContext {
    pub d: Rat,
    pub kappa: Rat,
    pub n_dim: usize,
}

impl EvalContext {
    pub fn new(d: Rat, kappa: Rat, n_dim: usize) -> Self {
        EvalContext { d, kappa, n_dim }
    }

    /// Context from float inputs (exact: floats are dyadic rationals).
    pub fn from_f64(d: f64, kappa: f64, n_dim: usize) -> Option<Self> {
        Some(EvalContext {
            d: crate::exponent::rat_from_f64(d)?,
            kappa: crate::exponent::rat_from_f64(kappa)?,
            n_dim,
        })
    }

    pub fn eval(&self, e: &crate::exponent::Exponent) -> Rat {
        e.eval(&self.d, &self.kappa)
    }
}
