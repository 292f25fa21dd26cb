//! Desk-scale numerics for tameness of pairs of power series spaces.
//!
//! This crate evaluates exponent sequences, computes graded norms of Köthe
//! and power series spaces in log domain, analyzes finite-limit-point sets of
//! ratio families, checks the Piszczek tameness criterion at truncation,
//! constructs and independently verifies explicit non-tame witness operators,
//! and classifies pairs of power series spaces against the known
//! tame/non-tame catalog.
//!
//! The guide under `book/` walks through each subsystem; its code snippets
//! are compiled and run by `cargo test --doc`.

pub mod classifier;
pub mod error;
pub mod exec;
pub mod maps;
pub mod numeric;
pub mod operators;
pub mod ratio_analysis;
pub mod report;
pub mod sequences;
pub mod spaces;
pub mod verdict;
pub mod witnesses;

pub use error::{Error, Result};
pub use exec::Execution;
pub use maps::{built_in_phi_family, MonotoneIntMap};
pub use numeric::Wide;
pub use sequences::{check_stability, merge, ExponentSequence, MergedSequence, StabilityReport};
pub use spaces::{log_basis_norm, vector_norm, FiniteVector, GradedSpace, KotheMatrix, PNorm};
pub use verdict::{Evidence, Verdict3, VerdictValue};

/// Compile and run every code snippet in the guide as a doctest.
#[cfg(doctest)]
mod booktests {
    macro_rules! booktest {
        ($name:ident) => {
            #[doc = include_str!(concat!("../../../book/src/", stringify!($name), ".md"))]
            mod $name {}
        };
    }
    booktest!(ch01_getting_started);
    booktest!(ch02_exponent_sequences);
    booktest!(ch03_spaces_and_norms);
    booktest!(ch04_operators_and_continuity);
    booktest!(ch05_limit_points);
    booktest!(ch06_piszczek_criterion);
    booktest!(ch07_witness_operators);
    booktest!(ch08_classification);
}
