//! Resolvent of the minimal (killed) diffusion: kernel u(x∧y)v(x∨y) against dm.

use std::sync::Arc;

use thiserror::Error;

use crate::eigen::{recip, EigenSolution};
use crate::grid::Grid;
use crate::scale::{BoundaryKind, Endpoint};
use crate::source::Source;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MinimalError {
    #[error("point {0} is not inside the open interval")]
    OutOfDomain(f64),
    #[error("integrand exceeds the bound {bound:e}: |g({x})| = {value:e}")]
    UnboundedIntegrand { x: f64, value: f64, bound: f64 },
    #[error("(f, Lf) is not in the domain of L: {reason} (residual {residual:e}, tolerance {tol:e})")]
    NotInDomain { reason: &'static str, residual: f64, tol: f64 },
}

impl MinimalError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::OutOfDomain(_) => "resolvent_min::OutOfDomain",
            Self::UnboundedIntegrand { .. } => "resolvent_min::UnboundedIntegrand",
            Self::NotInDomain { .. } => "resolvent_min::NotInDomain",
        }
    }
}

/// R⁰_r(x, y) = u_r(x∧y) v_r(x∨y), Wronskian-normalized so that R⁰_r g = ∫ R⁰_r(·, y) g(y) dm(y).
#[derive(Debug, Clone)]
pub struct ResolventKernel {
    eig: Arc<EigenSolution>,
    /// Largest admissible |g| at a node.
    pub bound: f64,
}

/// R⁰_r g on the grid together with the two running integrals it is built from.
#[derive(Debug, Clone)]
pub struct MinimalImage {
    pub r: f64,
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
    /// D_s R⁰_r g at the nodes.
    pub ds: Vec<f64>,
    /// ∫_a^x u g dm.
    pub lower: Vec<f64>,
    /// ∫_x^b v g dm.
    pub upper: Vec<f64>,
    /// Endpoint limits of R⁰_r g (0 at accessible ends).
    pub end_value: [f64; 2],
    /// Endpoint limits of D_s R⁰_r g where finite (enterable ends).
    pub end_ds: [Option<f64>; 2],
}

impl MinimalImage {
    pub fn at(&self, x: f64) -> f64 {
        self.grid.interpolate(&self.values, x)
    }

    /// Sup over interior nodes of |L f − (r f − g)| for this f = R⁰_r g.
    pub fn generator_residual(&self, g: &[f64]) -> f64 {
        let lf = self.grid.generator(&self.values);
        (1..self.values.len() - 1)
            .map(|i| (lf[i] - (self.r * self.values[i] - g[i])).abs())
            .fold(0.0, f64::max)
    }
}

/// Outcome of the two-sided check of R⁰_r L f = r R⁰_r f − f + f(a) v/v(a) + f(b) u/u(b).
#[derive(Debug, Clone)]
pub struct RlReport {
    /// R⁰_r(L f) by quadrature.
    pub direct: Vec<f64>,
    /// The right-hand side of the identity.
    pub identity: Vec<f64>,
    pub max_discrepancy: f64,
    /// Relative sup-norm mismatch between discrete D_m D_s f and the supplied L f.
    pub consistency_residual: f64,
    /// D_s f at entrance endpoints, which must vanish.
    pub entrance_ds: [Option<f64>; 2],
}

impl ResolventKernel {
    pub fn new(eig: Arc<EigenSolution>) -> Self {
        ResolventKernel { eig, bound: 1e12 }
    }

    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = bound;
        self
    }

    pub fn r(&self) -> f64 {
        self.eig.r
    }

    pub fn eigen(&self) -> &EigenSolution {
        &self.eig
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.eig.grid
    }

    pub fn kernel_at(&self, x: f64, y: f64) -> Result<f64, MinimalError> {
        let spec = &self.eig.grid.spec;
        for p in [x, y] {
            if !(p > spec.lo() && p < spec.hi()) {
                return Err(MinimalError::OutOfDomain(p));
            }
        }
        let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
        Ok(self.eig.u_at(lo) * self.eig.v_at(hi))
    }

    /// Kernel on node pairs (exact node values, no interpolation).
    pub fn kernel_nodes(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        self.eig.u[lo] * self.eig.v[hi]
    }

    pub fn apply_minimal(&self, g: &Source) -> Result<MinimalImage, MinimalError> {
        let gv = g.sample(&self.eig.grid);
        self.apply_nodes(&gv)
    }

    /// R⁰_r applied to node values of g (trapezoidal in m).
    pub fn apply_nodes(&self, g: &[f64]) -> Result<MinimalImage, MinimalError> {
        let e = &*self.eig;
        let grid = &e.grid;
        let n = grid.len();
        for (i, &v) in g.iter().enumerate() {
            if !(v.abs() <= self.bound) {
                return Err(MinimalError::UnboundedIntegrand { x: grid.x[i], value: v, bound: self.bound });
            }
        }
        let ug: Vec<f64> = e.u.iter().zip(g).map(|(u, g)| u * g).collect();
        let vg: Vec<f64> = e.v.iter().zip(g).map(|(v, g)| v * g).collect();
        let mut lower = grid.cumulative_dm_from_lo(&ug);
        let mut upper = grid.cumulative_dm_to_hi(&vg);
        // Entrance ends carry finite mass beyond the cut; the integrand is flat there.
        if let (false, Some(me)) = (grid.closed[0], grid.m_end[0]) {
            let stub = ug[0] * (grid.m[0] - me);
            lower.iter_mut().for_each(|x| *x += stub);
        }
        if let (false, Some(me)) = (grid.closed[1], grid.m_end[1]) {
            let stub = vg[n - 1] * (me - grid.m[n - 1]);
            upper.iter_mut().for_each(|x| *x += stub);
        }
        let values: Vec<f64> = (0..n).map(|i| e.v[i] * lower[i] + e.u[i] * upper[i]).collect();
        let ds: Vec<f64> = (0..n).map(|i| e.dsv[i] * lower[i] + e.dsu[i] * upper[i]).collect();
        let mut end_value = [values[0], values[n - 1]];
        let mut end_ds = [None, None];
        for (k, node) in [(0usize, 0usize), (1, n - 1)] {
            let class = grid.classes[k];
            if class.accessible {
                end_value[k] = 0.0;
            } else if class.kind == BoundaryKind::Entrance {
                // continue past the cut with L f = r f − g
                end_value[k] -= (e.r * values[node] - g[node]) * grid.entrance_tail[k];
            }
            if class.enterable {
                end_ds[k] = Some(if class.kind == BoundaryKind::Entrance { 0.0 } else { ds[node] });
            }
        }
        Ok(MinimalImage { r: e.r, grid: grid.clone(), values, ds, lower, upper, end_value, end_ds })
    }

    /// Check the identity R⁰_r L f = r R⁰_r f − f + f(a) v/v(a) + f(b) u/u(b) on the grid.
    pub fn rl_formula(&self, f: &Source, lf: &Source, tol: f64) -> Result<RlReport, MinimalError> {
        let e = &*self.eig;
        let grid = &e.grid;
        let spec = &grid.spec;
        let n = grid.len();
        let fv = f.sample(grid);
        let lv = lf.sample(grid);

        let scale = lv.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
        let disc = grid.generator(&fv);
        let consistency_residual =
            (1..n - 1).map(|i| (disc[i] - lv[i]).abs()).fold(0.0, f64::max) / scale;
        if !(consistency_residual <= tol) {
            return Err(MinimalError::NotInDomain {
                reason: "discrete D_m D_s f differs from the supplied L f",
                residual: consistency_residual,
                tol,
            });
        }
        let mut entrance_ds = [None, None];
        for (k, (i0, i1)) in [(0usize, (0usize, 1usize)), (1, (n - 2, n - 1))] {
            if grid.classes[k].kind == BoundaryKind::Entrance {
                let d = (fv[i1] - fv[i0]) / grid.ds[i0];
                let scale_f = fv.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
                if !(d.abs() <= tol * scale_f) {
                    return Err(MinimalError::NotInDomain {
                        reason: "D_s f does not vanish at an entrance endpoint",
                        residual: d.abs(),
                        tol: tol * scale_f,
                    });
                }
                entrance_ds[k] = Some(d);
            }
        }

        let direct = self.apply_nodes(&lv)?.values;
        let rf = self.apply_nodes(&fv)?.values;
        let ends = [Endpoint::A, Endpoint::B].map(|ep| {
            if grid.class(ep).accessible {
                f.at_end(ep, spec).ok_or(MinimalError::NotInDomain {
                    reason: "missing finite boundary value at an accessible endpoint",
                    residual: f64::INFINITY,
                    tol,
                })
            } else {
                Ok(0.0)
            }
        });
        let [fa, fb] = [ends[0].clone()?, ends[1].clone()?];
        let inv_va = recip(e.limits.v_at_a);
        let inv_ub = recip(e.limits.u_at_b);
        let identity: Vec<f64> = (0..n)
            .map(|i| e.r * rf[i] - fv[i] + fa * e.v[i] * inv_va + fb * e.u[i] * inv_ub)
            .collect();
        let max_discrepancy = direct.iter().zip(&identity).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        Ok(RlReport { direct, identity, max_discrepancy, consistency_residual, entrance_ds })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::{solve, PicardConfig};
    use crate::grid::GridSpec;
    use crate::scale::{DiffusionSpec, Measure};

    fn bm(r: f64) -> ResolventKernel {
        let spec = Arc::new(
            DiffusionSpec::new(0.0, 1.0, 0.5, Measure::density("1", |_| 1.0), Measure::density("2", |_| 2.0), 1.0)
                .unwrap(),
        );
        let classes = spec.classify().unwrap();
        let grid = Arc::new(Grid::build(spec, classes, &GridSpec::default()));
        ResolventKernel::new(Arc::new(solve(grid, r, &PicardConfig::default()).unwrap()))
    }

    #[test]
    fn kernel_value_and_symmetry() {
        let k = bm(0.5);
        let want = 0.25_f64.sinh().powi(2) / 1.0_f64.sinh();
        assert!((k.kernel_at(0.25, 0.75).unwrap() - want).abs() < 1e-6);
        assert_eq!(k.kernel_at(0.3, 0.6).unwrap(), k.kernel_at(0.6, 0.3).unwrap());
        assert!(k.kernel_at(1e-9, 0.5).unwrap() < 1e-8);
        assert!(matches!(k.kernel_at(0.0, 0.5), Err(MinimalError::OutOfDomain(_))));
    }

    #[test]
    fn resolvent_of_one() {
        let k = bm(0.5);
        let img = k.apply_minimal(&Source::constant(1.0)).unwrap();
        let want = 2.0 * (1.0 - 1.0 / 0.5_f64.cosh());
        assert!((img.at(0.5) - want).abs() < 1e-6, "{}", img.at(0.5));
        assert_eq!(img.end_value, [0.0, 0.0]);
        let d0 = img.end_ds[0].unwrap();
        assert!((d0 - 2.0 * 0.5_f64.tanh()).abs() < 1e-5, "{d0}");
    }

    #[test]
    fn unbounded_is_rejected() {
        let k = bm(0.5).with_bound(10.0);
        let err = k.apply_minimal(&Source::new("1/x", |x| 1.0 / x)).unwrap_err();
        assert!(matches!(err, MinimalError::UnboundedIntegrand { .. }));
    }

    #[test]
    fn rl_identity_on_parabola() {
        let k = bm(0.5);
        // D_m D_s f = ½ f'' for m' = 2.
        let f = Source::new("x(1-x)", |x| x * (1.0 - x));
        let lf = Source::constant(-1.0);
        let rep = k.rl_formula(&f, &lf, 1e-3).unwrap();
        assert!(rep.max_discrepancy < 1e-4, "{}", rep.max_discrepancy);
        let kink = Source::new("|x-1/2|", |x| (x - 0.5).abs());
        assert!(matches!(k.rl_formula(&kink, &Source::constant(0.0), 1e-3), Err(MinimalError::NotInDomain { .. })));
    }
}
