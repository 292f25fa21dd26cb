//! Explicit witness operators and certificates.
//!
//! Three constructions, each paired with an independent verifier:
//!
//! * [`search_tameness_failure`] / [`build_qd_witness`] — hunts index pairs
//!   where a candidate grade map ψ loses to a competitor φ by a factor `n`,
//!   and assembles the quasi-diagonal operator whose norm growth exhibits
//!   the failure.
//! * [`build_infinite_type_witness`] — for an infinite-type pair whose ratio
//!   set reaches every gap of a convex grade map `S`, builds the operator
//!   that is exactly isometric one grade ahead of `S` on each block.
//! * [`linear_tame_certificate`] — conversely, when the finite limit points
//!   of the ratio family stay under a slope `A`, certifies every entry of a
//!   continuous quasi-diagonal operator against the affine map `A·k + B`.

mod failure;
mod infinite;
mod linear;

pub use failure::{
    build_qd_witness, search_over_phi_family, search_tameness_failure, verify_qd_witness,
    FailureCertificate, FailureRow, FamilySearch, PhiAttempt, SearchOutcome,
};
pub use infinite::{
    build_infinite_type_witness, verify_infinite_witness, InfiniteOutcome, InfiniteTypeWitness,
    InfiniteWitnessOptions, WitnessBlock,
};
pub use linear::{
    linear_tame_certificate, verify_linear_certificate, GradeConstant, LinearOutcome,
    LinearTameCertificate,
};

use crate::error::Result;
use crate::operators::QuasiDiagonalOperator;
use serde::{Deserialize, Serialize};

/// On-disk wrapper for any witness or certificate, so a single `verify`
/// entry point can re-check a serialized artifact independently of how it
/// was constructed.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum WitnessDocument {
    #[serde(rename = "qd-witness")]
    QdWitness {
        certificate: FailureCertificate,
        operator: QuasiDiagonalOperator,
    },
    #[serde(rename = "infinite-type-witness")]
    InfiniteType { witness: InfiniteTypeWitness },
    #[serde(rename = "linear-tame-certificate")]
    LinearTame { certificate: LinearTameCertificate },
}

impl WitnessDocument {
    /// Re-check every inequality the document claims. Returns one line per
    /// check family on success.
    pub fn verify(&self) -> Result<Vec<String>> {
        match self {
            WitnessDocument::QdWitness {
                certificate,
                operator,
            } => verify_qd_witness(operator, certificate),
            WitnessDocument::InfiniteType { witness } => verify_infinite_witness(witness),
            WitnessDocument::LinearTame { certificate } => verify_linear_certificate(certificate),
        }
    }
}

/// Relative tolerance for every certificate inequality re-check.
pub(crate) const CHECK_TOL: f64 = 1e-9;
