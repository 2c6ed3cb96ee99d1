//! The embedded birth–death chain used for timed sample paths.

use std::sync::Arc;

use rand::Rng;
use rand_distr::Exp1;

use super::path::{PathSample, PathState, Tag};
use super::{check_eps, SimError};
use crate::grid::{Grid, GridSpec};
use crate::scale::{BoundaryClass, DiffusionSpec, Endpoint};

/// Nearest-neighbour chain on a grid: from x_i it moves to x_{i−1} with probability
/// s(x_i, x_{i+1}) / s(x_{i−1}, x_{i+1}) after an exponential holding time whose mean is the
/// expected exit time of (x_{i−1}, x_{i+1}) with the speed lumped onto x_i.
///
/// At an accessible endpoint the outermost node stands for the endpoint itself; at an
/// inaccessible one it is a reflecting cut.
#[derive(Debug, Clone)]
pub struct TimedChain {
    pub grid: Arc<Grid>,
    p_left: Vec<f64>,
    hold: Vec<f64>,
    /// Node of a+ε / b−ε (accessible endpoints only).
    pub eps_node: [Option<usize>; 2],
    pub eps: f64,
}

impl TimedChain {
    /// `h`: node spacing as a fraction of the compact interval; `eps` likewise for the first
    /// node inside each accessible endpoint.
    pub fn new(spec: Arc<DiffusionSpec>, classes: [BoundaryClass; 2], h: f64, eps: f64, cut: [f64; 2]) -> Result<Self, SimError> {
        let eps = check_eps(eps)?;
        if !(h > 0.0 && h <= 0.25) {
            return Err(SimError::BadConfig(format!("step h = {h} must lie in (0, 1/4]")));
        }
        let nodes = (1.0 / h).round() as usize + 1;
        let base = Grid::build(spec.clone(), classes, &GridSpec { nodes, cut, ..GridSpec::default() });
        let (ylo, yhi) = spec.y_range();
        let len = yhi - ylo;
        let mut ys = base.y.clone();
        for (k, c) in classes.iter().enumerate() {
            if c.accessible {
                ys.push(if k == 0 { ylo + eps * len } else { yhi - eps * len });
            }
        }
        ys.sort_by(f64::total_cmp);
        ys.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * len);
        let grid = Arc::new(Grid::from_nodes(spec, classes, ys));
        let n = grid.len();
        let mut p_left = vec![0.0; n];
        let mut hold = vec![f64::INFINITY; n];
        let rate = |ds: f64, mass: f64| {
            let r = 1.0 / (ds * mass);
            if r.is_finite() {
                r
            } else {
                0.0
            }
        };
        for i in 0..n {
            let (l, r) = if i == 0 {
                (0.0, rate(grid.ds[0], 0.5 * grid.dm[0]))
            } else if i == n - 1 {
                (rate(grid.ds[n - 2], 0.5 * grid.dm[n - 2]), 0.0)
            } else {
                let mass = 0.5 * (grid.dm[i - 1] + grid.dm[i]);
                (rate(grid.ds[i - 1], mass), rate(grid.ds[i], mass))
            };
            if l + r > 0.0 {
                p_left[i] = l / (l + r);
                hold[i] = 1.0 / (l + r);
            }
        }
        let eps_node = [Endpoint::A, Endpoint::B].map(|e| {
            classes[e.index()].accessible.then(|| {
                let y = if e == Endpoint::A { ylo + eps * len } else { yhi - eps * len };
                nearest(&grid.y, y).clamp(1, n - 2)
            })
        });
        Ok(TimedChain { grid, p_left, hold, eps_node, eps })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Whether the outermost node at `e` represents the (accessible) endpoint.
    pub fn absorbing(&self, e: Endpoint) -> bool {
        self.grid.class(e).accessible
    }

    pub fn end_node(&self, e: Endpoint) -> usize {
        match e {
            Endpoint::A => 0,
            Endpoint::B => self.len() - 1,
        }
    }

    /// s(e, a+ε) at an accessible endpoint.
    pub fn eps_scale_gap(&self, e: Endpoint) -> Option<f64> {
        let j = self.eps_node[e.index()]?;
        let s_end = self.grid.s_end[e.index()]?;
        Some((self.grid.s[j] - s_end).abs())
    }

    /// Interior node nearest to x (never an endpoint node of an accessible endpoint).
    pub fn node_of(&self, x: f64) -> usize {
        let n = self.len();
        let j = nearest(&self.grid.y, self.grid.spec.to_y(x));
        let lo = usize::from(self.absorbing(Endpoint::A));
        let hi = if self.absorbing(Endpoint::B) { n - 2 } else { n - 1 };
        j.clamp(lo, hi)
    }

    /// Position reported for node i (the endpoint itself at an accessible end node).
    pub fn position(&self, i: usize) -> f64 {
        let spec = &self.grid.spec;
        if i == 0 && self.absorbing(Endpoint::A) {
            spec.lo()
        } else if i == self.len() - 1 && self.absorbing(Endpoint::B) {
            spec.hi()
        } else {
            self.grid.x[i]
        }
    }

    pub fn mean_hold(&self, i: usize) -> f64 {
        self.hold[i]
    }

    pub fn p_left(&self, i: usize) -> f64 {
        self.p_left[i]
    }

    /// One move from interior node i: (holding time, next node).
    pub fn step<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> (f64, usize) {
        let dt = self.hold[i] * rng.sample::<f64, _>(Exp1);
        let next = if rng.random::<f64>() < self.p_left[i] { i.saturating_sub(1) } else { (i + 1).min(self.len() - 1) };
        (dt, next)
    }

    /// The minimal process from node i until it reaches an accessible end node (returned) or
    /// `max_time` elapses (None).
    pub fn run_minimal<R: Rng + ?Sized>(
        &self,
        mut i: usize,
        t0: f64,
        max_time: f64,
        tag: Tag,
        path: &mut PathSample,
        rng: &mut R,
    ) -> (f64, Option<Endpoint>) {
        let mut t = t0;
        let n = self.len();
        loop {
            if i == 0 && self.absorbing(Endpoint::A) {
                return (t, Some(Endpoint::A));
            }
            if i == n - 1 && self.absorbing(Endpoint::B) {
                return (t, Some(Endpoint::B));
            }
            path.push(t, PathState::At(self.grid.x[i]), tag);
            let (dt, next) = self.step(i, rng);
            if t + dt >= max_time {
                return (max_time, None);
            }
            t += dt;
            i = next;
        }
    }
}

fn nearest(ys: &[f64], y: f64) -> usize {
    let n = ys.len();
    let j = ys.partition_point(|&v| v <= y).clamp(1, n - 1);
    if (y - ys[j - 1]).abs() <= (ys[j] - y).abs() {
        j - 1
    } else {
        j
    }
}

/// Minimal diffusion from x0 on a chain of step `h`, absorbed at the cells next to an
/// accessible endpoint; stops at `max_time` otherwise.
pub fn sample_minimal_path<R: Rng + ?Sized>(
    spec: Arc<DiffusionSpec>,
    x0: f64,
    h: f64,
    max_time: f64,
    rng: &mut R,
) -> Result<PathSample, SimError> {
    let classes = spec.classify()?;
    let chain = TimedChain::new(spec, classes, h, h.min(0.5), GridSpec::default().cut)?;
    Ok(chain.minimal_path(x0, max_time, rng))
}

impl TimedChain {
    pub fn minimal_path<R: Rng + ?Sized>(&self, x0: f64, max_time: f64, rng: &mut R) -> PathSample {
        let mut path = PathSample::default();
        let (t, hit) = self.run_minimal(self.node_of(x0), 0.0, max_time, Tag::Start, &mut path, rng);
        match hit {
            Some(e) => {
                path.push(t, PathState::At(self.grid.spec.endpoint(e)), Tag::Start);
                path.hit = Some((e, t));
            }
            None => path.truncated = true,
        }
        path.end_time = t;
        path
    }
}
