//! One-dimensional diffusions on an interval, extended to the endpoints by Feller boundary
//! conditions (killing, reflection, stagnancy, jumps).
//!
//! * [`scale`]: scale/speed representation and boundary classification.
//! * [`eigen`]: the increasing/decreasing solutions u, v of 𝓛φ = rφ.
//! * [`minimal`]: resolvent of the process killed on leaving the open interval.
//! * [`boundary`]: boundary data, the functionals Φ_a, Φ_b, and the extended resolvent.
//! * [`sim`]: Monte Carlo by excursions at the endpoints.
//! * [`oracle`]: finite-difference chain with discretized boundary rows.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
pub mod coord;
pub mod eigen;
pub mod expr;
pub mod fixtures;
pub mod grid;
pub mod minimal;
pub mod oracle;
pub mod quad;
pub mod scale;
pub mod sim;
pub mod source;

use thiserror::Error;

/// Any error from the library, with a module-qualified code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("expression: {0}")]
    Parse(#[from] expr::ParseError),
    #[error(transparent)]
    Scale(#[from] scale::ScaleSpeedError),
    #[error(transparent)]
    Eigen(#[from] eigen::EigenError),
    #[error(transparent)]
    Minimal(#[from] minimal::MinimalError),
    #[error(transparent)]
    Boundary(#[from] boundary::BoundaryError),
    #[error(transparent)]
    Oracle(#[from] oracle::OracleError),
    #[error(transparent)]
    Sim(#[from] sim::SimError),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parse(_) => "expr::ParseError",
            Error::Scale(e) => e.code(),
            Error::Eigen(e) => e.code(),
            Error::Minimal(e) => e.code(),
            Error::Boundary(e) => e.code(),
            Error::Oracle(e) => e.code(),
            Error::Sim(e) => e.code(),
        }
    }
}
