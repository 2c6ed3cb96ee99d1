//! Monte Carlo for the extended process: excursions pieced together at the boundary.
//!
//! Two layers share the same excursion structure at the endpoints (killing, reflecting
//! excursions that reach a+ε, jumps):
//!
//! * [`chain`] / [`path`]: timed sample paths on a birth–death chain, with local time and
//!   stagnant time bookkeeping.
//! * [`skeleton`] / [`estimate`]: resolvent and excursion-functional estimators on a coarse
//!   skeleton of marks, where discounting and occupation between consecutive marks are
//!   integrated exactly from the eigenfunctions.

pub mod chain;
pub mod estimate;
pub mod jumps;
pub mod path;
pub mod skeleton;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::boundary::BoundaryError;
use crate::eigen::EigenError;
use crate::scale::{Endpoint, ScaleSpeedError};

pub use chain::{sample_minimal_path, TimedChain};
pub use estimate::{mc_resolvent, resolvent_identity, ExcursionEstimate, McConfig, Method, ResolventEstimate, Value};
pub use path::{assemble_path, sample_excursion, Component, ExcursionSample, PathSample, PathState, Tag, Terminal};
pub use skeleton::Skeleton;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("eps = {0} must lie in (0, 1/2] (fraction of the compact interval)")]
    InvalidEps(f64),
    #[error("cannot start at {0}: not a point of the state space")]
    InvalidStart(f64),
    #[error("no g value at endpoint {0}, needed for the time spent there")]
    MissingEndValue(Endpoint),
    #[error("endpoint {0} has no way to leave or hold (all rates zero)")]
    DegenerateBoundary(Endpoint),
    #[error("endpoint {0} is not accessible; excursion functionals need an accessible endpoint")]
    NotAccessible(Endpoint),
    #[error("invalid Monte Carlo settings: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Scale(#[from] ScaleSpeedError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
}

impl SimError {
    pub fn code(&self) -> &'static str {
        match self {
            SimError::InvalidEps(_) => "excursion_sim::InvalidEps",
            SimError::InvalidStart(_) => "excursion_sim::InvalidStart",
            SimError::MissingEndValue(_) => "excursion_sim::MissingEndValue",
            SimError::DegenerateBoundary(_) => "excursion_sim::DegenerateBoundary",
            SimError::NotAccessible(_) => "excursion_sim::NotAccessible",
            SimError::BadConfig(_) => "excursion_sim::BadConfig",
            SimError::Scale(e) => e.code(),
            SimError::Eigen(e) => e.code(),
            SimError::Boundary(e) => e.code(),
        }
    }
}

pub(crate) fn check_eps(eps: f64) -> Result<f64, SimError> {
    if eps > 0.0 && eps <= 0.5 {
        Ok(eps)
    } else {
        Err(SimError::InvalidEps(eps))
    }
}

/// The random stream for path `index`: same numbers whatever thread runs it.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
