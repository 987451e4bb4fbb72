//! Canonical two-point forests: for a singular tree `tau`, the family of
//! decorated contracted forests (one per complete Wick pairing) whose
//! integrals dominate the summands of the two-point function of the
//! tree term.
//!
//! Decorations: every leaf is Dirac (`beta = -1`), inner vertices carry
//! `beta = 0`, all `gamma = 0`, and derivative edges carry a unit
//! multi-index. Kernel weights are `d - 2` throughout, except in the
//! mollification-difference variant where the edges meeting the two
//! distinguished leaves absorb the extra `kappa`-dependent decay.

use super::forest::VertexSpec;
use super::{ContractingEdge, DecoratedContractedForest, DiagramError};
use crate::exponent::{rat, Exponent, Rat};
use crate::trees::LabelledTree;

/// Which two-point object the family bounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TwoPointKind {
    /// Covariance of the tree term with itself.
    Plain,
    /// Covariance of the difference between two mollification scales. The
    /// parameter is the (already clamped) exponent `kappa` in `[0, 1]`.
    EpsDiff { kappa: Rat },
    /// Same decorations as `Plain`; the time-increment bookkeeping lives on
    /// the query, not the forest.
    TimeDiff,
}

/// Build the family over all complete pairings of the `2 m(tau)` leaves.
///
/// For `EpsDiff`, the distinguished leaves (the ones carrying the
/// mollification difference) are the first leaf of each copy in vertex
/// order. If they are paired together, that edge gets weight
/// `d - 2 + kappa`; otherwise the two edges meeting them get
/// `d - 2 + kappa/2`.
pub fn build_two_point_forests(
    tau: &LabelledTree,
    kind: TwoPointKind,
    n_dim: usize,
) -> Result<Vec<DecoratedContractedForest>, DiagramError> {
    if let TwoPointKind::EpsDiff { kappa } = &kind {
        let zero = rat(0, 1);
        let one = rat(1, 1);
        if kappa < &zero || kappa > &one {
            return Err(DiagramError::InvalidForest(format!(
                "eps-diff kappa {kappa} outside [0, 1]; clamp before building"
            )));
        }
    }
    let tau = tau.canonicalize();
    let mut specs: Vec<VertexSpec> = Vec::new();
    DecoratedContractedForest::push_tree(&mut specs, &tau, n_dim);
    DecoratedContractedForest::push_tree(&mut specs, &tau, n_dim);
    let bare = DecoratedContractedForest::from_specs(specs, Vec::new(), n_dim)?;

    let leaves = bare.leaves();
    let pairings = super::pairings::pairings_of(&leaves)?;

    let base_weight = Exponent::d() - Exponent::from_int(2);
    let distinguished: Option<(usize, usize)> = match &kind {
        TwoPointKind::EpsDiff { .. } => {
            let first = bare
                .leaves()
                .into_iter()
                .filter(|&l| bare.in_first_tree(l))
                .min()
                .expect("tree has a leaf");
            let second = bare
                .leaves()
                .into_iter()
                .filter(|&l| !bare.in_first_tree(l))
                .min()
                .expect("tree has a leaf");
            Some((first, second))
        }
        _ => None,
    };

    let mut out = Vec::with_capacity(pairings.len());
    for pairing in pairings {
        let mut edges = Vec::with_capacity(pairing.len());
        for (u, v) in pairing {
            let weight = match (&kind, distinguished) {
                (TwoPointKind::EpsDiff { kappa }, Some((x, y))) => {
                    let hits = [u, v].iter().filter(|&&l| l == x || l == y).count();
                    match hits {
                        2 => base_weight.clone() + Exponent::kappa().scale(kappa),
                        1 => base_weight.clone() + Exponent::kappa().scale(&(kappa / rat(2, 1))),
                        _ => base_weight.clone(),
                    }
                }
                _ => base_weight.clone(),
            };
            edges.push(ContractingEdge::new(u, v, weight));
        }
        let mut specs: Vec<VertexSpec> = Vec::new();
        DecoratedContractedForest::push_tree(&mut specs, &tau, n_dim);
        DecoratedContractedForest::push_tree(&mut specs, &tau, n_dim);
        out.push(DecoratedContractedForest::from_specs(specs, edges, n_dim)?);
    }
    Ok(out)
}
