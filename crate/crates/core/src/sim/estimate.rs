//! Monte Carlo estimates of the resolvent and of the excursion functionals ψ, N, n[e^{−rT}].

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::chain::TimedChain;
use super::path::assemble_path;
use super::skeleton::Skeleton;
use super::{stream, SimError};
use crate::boundary::{validated, FellerBoundaryData};
use crate::eigen::{solve, PicardConfig};
use crate::grid::{Grid, GridSpec};
use crate::quad::mean_stderr;
use crate::scale::{DiffusionSpec, Endpoint};
use crate::source::Source;

/// An estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Value {
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolventEstimate {
    pub x0: f64,
    pub r: f64,
    pub value: f64,
    pub stderr: f64,
    pub paths: usize,
}

impl ResolventEstimate {
    pub fn as_value(&self) -> Value {
        Value { value: self.value, stderr: self.stderr }
    }
}

/// Excursion functionals at one endpoint, for the process stopped at the other one.
#[derive(Debug, Clone, Serialize)]
pub struct ExcursionEstimate {
    pub side: Endpoint,
    /// ψ(r) = ς r + n[1 − e^{−rT}]
    pub psi: Value,
    /// N(g) = ς g(e) + n[∫_0^{T} e^{−rt} g(X_t) dt]
    pub n_occupation: Value,
    /// n[e^{−rT_other}; T_other < ∞]
    pub n_hit_other: Value,
    /// Masses of the ε-restricted components: kill, reflect, interior jumps, far end.
    pub masses: [f64; 4],
    /// How many samples fell in each component.
    pub counts: [usize; 4],
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Method {
    /// Skeleton walks with exact conditional discounting (the default).
    Skeleton,
    /// Averages of ∫ e^{−rt} g(X_t) dt over timed paths cut at the horizon ln(100 n)/r.
    Paths,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McConfig {
    pub paths: usize,
    pub seed: u64,
    /// First cell next to an accessible endpoint, as a fraction of the compact interval.
    pub eps: f64,
    /// Skeleton cells (skeleton method).
    pub cells: usize,
    /// Eigenfunction grid (skeleton method).
    pub grid: GridSpec,
    /// Chain step (paths method).
    pub h: f64,
    pub method: Method,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            paths: 100_000,
            seed: 0,
            eps: 0.01,
            cells: 16,
            grid: GridSpec::default(),
            h: 1.0 / 64.0,
            method: Method::Skeleton,
        }
    }
}

impl McConfig {
    /// Horizon at which the e^{−rt} tail is below per-path noise.
    pub fn horizon(&self, r: f64) -> f64 {
        (100.0 * self.paths as f64).ln() / r
    }
}

/// Build the skeleton for (data, r, g) after validating the data.
pub fn skeleton(
    data: &FellerBoundaryData,
    spec: Arc<DiffusionSpec>,
    g: &Source,
    r: f64,
    cfg: &McConfig,
) -> Result<Skeleton, SimError> {
    if !(r > 0.0) {
        return Err(SimError::BadConfig(format!("r must be positive, got {r}")));
    }
    let classes = spec.classify()?;
    validated(data, &spec, classes)?;
    let grid = Arc::new(Grid::build(spec, classes, &cfg.grid));
    let eig = Arc::new(solve(grid, r, &PicardConfig::default())?);
    Skeleton::build(data, eig, g, cfg.eps, cfg.cells)
}

/// E_{x0}[∫_0^∞ e^{−rt} g(X_t) dt] by Monte Carlo; deterministic for a fixed seed.
pub fn mc_resolvent(
    data: &FellerBoundaryData,
    spec: Arc<DiffusionSpec>,
    g: &Source,
    r: f64,
    x0: f64,
    cfg: &McConfig,
) -> Result<ResolventEstimate, SimError> {
    match cfg.method {
        Method::Skeleton => skeleton(data, spec, g, r, cfg)?.resolvent(x0, cfg.paths, cfg.seed),
        Method::Paths => path_resolvent(data, spec, g, r, x0, cfg),
    }
}

fn path_resolvent(
    data: &FellerBoundaryData,
    spec: Arc<DiffusionSpec>,
    g: &Source,
    r: f64,
    x0: f64,
    cfg: &McConfig,
) -> Result<ResolventEstimate, SimError> {
    if !(r > 0.0) || cfg.paths < 2 {
        return Err(SimError::BadConfig(format!("need r > 0 and at least 2 paths (r = {r}, paths = {})", cfg.paths)));
    }
    let classes = spec.classify()?;
    validated(data, &spec, classes)?;
    let chain = TimedChain::new(spec.clone(), classes, cfg.h, cfg.eps, cfg.grid.cut)?;
    let horizon = cfg.horizon(r);
    let ends = [Endpoint::A, Endpoint::B].map(|e| g.at_end(e, &spec));
    let (lo, hi) = (spec.lo(), spec.hi());
    let gf = |x: f64| {
        if x == lo {
            ends[0].unwrap_or(0.0)
        } else if x == hi {
            ends[1].unwrap_or(0.0)
        } else {
            g.eval(x)
        }
    };
    let samples = (0..cfg.paths as u64)
        .into_par_iter()
        .map(|i| assemble_path(&chain, data, x0, horizon, &mut stream(cfg.seed, i)).map(|p| p.discounted_integral(r, &gf)))
        .collect::<Result<Vec<f64>, _>>()?;
    let (value, stderr) = mean_stderr(&samples);
    Ok(ResolventEstimate { x0, r, value, stderr, paths: cfg.paths })
}

/// Combined check of ψ R g(e) = N(g) + n[e^{−rT_other}] R g(other) from independent estimates;
/// returns (residual, combined standard error).
pub fn resolvent_identity(exc: &ExcursionEstimate, at_e: Value, at_other: Value) -> (f64, f64) {
    let (psi, n, hit) = (exc.psi, exc.n_occupation, exc.n_hit_other);
    let residual = psi.value * at_e.value - n.value - hit.value * at_other.value;
    let var = (at_e.value * psi.stderr).powi(2)
        + (psi.value * at_e.stderr).powi(2)
        + n.stderr.powi(2)
        + (at_other.value * hit.stderr).powi(2)
        + (hit.value * at_other.stderr).powi(2);
    (residual, var.sqrt())
}
