//! Right-hand sides g for resolvent problems, with explicit endpoint values where needed.

use std::fmt;
use std::sync::Arc;

use crate::expr::Expr;
use crate::grid::Grid;
use crate::scale::{DiffusionSpec, Endpoint, RealFn};

/// A bounded function g on [a, b]. Endpoint values default to g evaluated at a finite
/// endpoint; at infinite endpoints they must be given explicitly.
#[derive(Clone)]
pub struct Source {
    f: RealFn,
    label: String,
    ends: [Option<f64>; 2],
}

impl fmt::Debug for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Source").field("label", &self.label).field("ends", &self.ends).finish()
    }
}

impl Source {
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Source { f: Arc::new(f), label: label.into(), ends: [None, None] }
    }

    pub fn constant(c: f64) -> Self {
        let mut s = Self::new(format!("{c}"), move |_| c);
        s.ends = [Some(c), Some(c)];
        s
    }

    pub fn from_expr(e: Expr) -> Self {
        let label = e.source().to_string();
        let constant = e.constant_value();
        let mut s = Self::new(label, move |x| e.eval(x));
        if let Some(c) = constant {
            s.ends = [Some(c), Some(c)];
        }
        s
    }

    /// Override the value used at an endpoint.
    pub fn with_end(mut self, e: Endpoint, value: f64) -> Self {
        self.ends[e.index()] = Some(value);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    /// g at an endpoint: the explicit value, else g(endpoint) when the endpoint is finite.
    pub fn at_end(&self, e: Endpoint, spec: &DiffusionSpec) -> Option<f64> {
        self.ends[e.index()].or_else(|| {
            let x = spec.endpoint(e);
            let v = (self.f)(x);
            (x.is_finite() && v.is_finite()).then_some(v)
        })
    }

    /// Node values; closed endpoint nodes use the endpoint value when one is set.
    pub fn sample(&self, grid: &Grid) -> Vec<f64> {
        let n = grid.len();
        let mut out: Vec<f64> = grid.x.iter().map(|&x| (self.f)(x)).collect();
        for (k, node) in [(0usize, 0usize), (1, n - 1)] {
            if grid.closed[k] {
                if let Some(v) = self.ends[k] {
                    out[node] = v;
                }
            }
        }
        out
    }

    pub fn as_fn(&self) -> RealFn {
        self.f.clone()
    }
}
