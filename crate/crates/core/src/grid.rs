//! Discretization grids in the compact coordinate, with cumulative scale and speed.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::scale::{BoundaryClass, BoundaryKind, DiffusionSpec, Endpoint, Which};

/// How to lay out nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Number of uniform nodes across the compact interval (endpoints included).
    pub nodes: usize,
    /// Distance of the cut from a non-regular endpoint, as a fraction of the compact length.
    pub cut: [f64; 2],
    /// Ratio of the geometric node sequence between a cut and the first uniform node.
    pub grading: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { nodes: 2001, cut: [1e-6, 1e-6], grading: std::f64::consts::SQRT_2 }
    }
}

impl GridSpec {
    pub fn with_nodes(nodes: usize) -> Self {
        GridSpec { nodes, ..Self::default() }
    }
}

/// Nodes x_i with normalized s_i, m_i (s = m = 0 at the reference node).
#[derive(Debug, Clone)]
pub struct Grid {
    pub y: Vec<f64>,
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub m: Vec<f64>,
    /// s(x_{i+1}) − s(x_i), computed directly for accuracy.
    pub ds: Vec<f64>,
    pub dm: Vec<f64>,
    /// Index of the reference node c.
    pub ic: usize,
    /// Whether the first/last node is the endpoint itself (regular endpoints only).
    pub closed: [bool; 2],
    pub classes: [BoundaryClass; 2],
    /// s at the endpoints when finite (accessible endpoints).
    pub s_end: [Option<f64>; 2],
    /// m at the endpoints when finite (enterable endpoints).
    pub m_end: [Option<f64>; 2],
    /// At a cut entrance end, T = ∫ |m(e) − m(z)| ds(z) between the outer node and the end:
    /// a bounded solution of L f = h continues as f(e) ≈ f(node) − h(node)·T.
    pub entrance_tail: [f64; 2],
    pub spec: Arc<DiffusionSpec>,
}

impl Grid {
    pub fn build(spec: Arc<DiffusionSpec>, classes: [BoundaryClass; 2], gs: &GridSpec) -> Grid {
        let ys = node_layout(&spec, classes, gs);
        Self::from_nodes(spec, classes, ys)
    }

    /// Build from explicit compact-coordinate nodes (must contain the reference point).
    pub fn from_nodes(spec: Arc<DiffusionSpec>, classes: [BoundaryClass; 2], y: Vec<f64>) -> Grid {
        let n = y.len();
        let (ylo, yhi) = spec.y_range();
        let closed = [y[0] == ylo, y[n - 1] == yhi];
        let mut x: Vec<f64> = y.iter().map(|&v| spec.to_x(v)).collect();
        let yc = spec.to_y(spec.reference());
        let ic = y.iter().position(|&v| v == yc).expect("reference node present");
        x[ic] = spec.reference();
        if closed[0] {
            x[0] = spec.lo();
        }
        if closed[1] {
            x[n - 1] = spec.hi();
        }
        let ds: Vec<f64> = x.windows(2).map(|w| spec.increment(Which::Scale, w[0], w[1])).collect();
        let dm: Vec<f64> = x.windows(2).map(|w| spec.increment(Which::Speed, w[0], w[1])).collect();
        let s = cumulate(&ds, ic);
        let m = cumulate(&dm, ic);
        let ends = [spec.lo(), spec.hi()];
        let mut s_end = [None, None];
        let mut m_end = [None, None];
        for (k, e) in [Endpoint::A, Endpoint::B].into_iter().enumerate() {
            let node = if k == 0 { 0 } else { n - 1 };
            let tail = |which: Which| {
                if closed[k] {
                    0.0
                } else {
                    spec.increment(which, x[node], ends[k])
                }
            };
            if classes[e.index()].accessible {
                s_end[k] = Some(s[node] + tail(Which::Scale));
            }
            if classes[e.index()].enterable {
                m_end[k] = Some(m[node] + tail(Which::Speed));
            }
        }
        let entrance_tail = [Endpoint::A, Endpoint::B].map(|e| {
            let k = e.index();
            if closed[k] || classes[k].kind != BoundaryKind::Entrance {
                return 0.0;
            }
            let (node, end) = (x[if k == 0 { 0 } else { n - 1 }], ends[k]);
            let gap = |z: f64| spec.increment(Which::Speed, z.min(end), z.max(end)).abs();
            spec.stieltjes(Which::Scale, &gap, node.min(end), node.max(end)).abs()
        });
        Grid { y, x, s, m, ds, dm, ic, closed, classes, s_end, m_end, entrance_tail, spec }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn class(&self, e: Endpoint) -> BoundaryClass {
        self.classes[e.index()]
    }

    /// Trapezoidal ∫ f dm over the whole grid.
    pub fn integrate_dm(&self, f: &[f64]) -> f64 {
        self.dm.iter().enumerate().map(|(i, d)| 0.5 * (f[i] + f[i + 1]) * d).sum()
    }

    /// Running trapezoidal ∫_{x_0}^{x_i} f dm.
    pub fn cumulative_dm_from_lo(&self, f: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        let mut acc = 0.0;
        out.push(0.0);
        for (i, d) in self.dm.iter().enumerate() {
            acc += 0.5 * (f[i] + f[i + 1]) * d;
            out.push(acc);
        }
        out
    }

    /// Running trapezoidal ∫_{x_i}^{x_N} f dm.
    pub fn cumulative_dm_to_hi(&self, f: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n];
        let mut acc = 0.0;
        for i in (0..n - 1).rev() {
            acc += 0.5 * (f[i] + f[i + 1]) * self.dm[i];
            out[i] = acc;
        }
        out
    }

    /// Piecewise-linear interpolation of node values at x (clamped to the node range).
    pub fn interpolate(&self, f: &[f64], x: f64) -> f64 {
        let y = self.spec.to_y(x);
        crate::quad::interp(&self.y, f, y)
    }

    /// Discrete D_m D_s f at interior nodes (zero at the ends), divided differences in s then m.
    pub fn generator(&self, f: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n];
        for i in 1..n - 1 {
            let right = (f[i + 1] - f[i]) / self.ds[i];
            let left = (f[i] - f[i - 1]) / self.ds[i - 1];
            out[i] = (right - left) / (0.5 * (self.dm[i - 1] + self.dm[i]));
        }
        out
    }
}

/// Running signed sums of cell increments, zero at `ic`.
fn cumulate(d: &[f64], ic: usize) -> Vec<f64> {
    let n = d.len() + 1;
    let mut out = vec![0.0; n];
    for i in ic + 1..n {
        out[i] = out[i - 1] + d[i - 1];
    }
    for i in (0..ic).rev() {
        out[i] = out[i + 1] - d[i];
    }
    out
}

/// Uniform nodes in y; regular endpoints are nodes, other endpoints are cut with
/// a geometric run of nodes toward the cut. The reference point is always a node.
fn node_layout(spec: &DiffusionSpec, classes: [BoundaryClass; 2], gs: &GridSpec) -> Vec<f64> {
    let (ylo, yhi) = spec.y_range();
    let len = yhi - ylo;
    let cells = gs.nodes.max(3) - 1;
    let h = len / cells as f64;
    let uniform: Vec<f64> = (0..=cells).map(|k| ylo + len * k as f64 / cells as f64).collect();
    let open = |k: usize| classes[k].kind != BoundaryKind::Regular;

    // distances from each endpoint of the extra (non-uniform) nodes
    let graded = |k: usize| -> Vec<f64> {
        let delta = gs.cut[k] * len;
        if delta >= h {
            return vec![delta];
        }
        let mut out = vec![];
        let mut d = delta;
        while d < h {
            out.push(d);
            d *= gs.grading;
        }
        out
    };

    let mut ys: Vec<f64> = Vec::with_capacity(gs.nodes + 64);
    let lo_extra = if open(0) { graded(0) } else { vec![] };
    let hi_extra = if open(1) { graded(1) } else { vec![] };
    let lo_limit = lo_extra.last().map_or(ylo, |d| ylo + d);
    let hi_limit = hi_extra.last().map_or(yhi, |d| yhi - d);
    ys.extend(lo_extra.iter().map(|d| ylo + d));
    for &u in &uniform {
        let inside_lo = !open(0) || u > lo_limit + 0.3 * h;
        let inside_hi = !open(1) || u < hi_limit - 0.3 * h;
        if inside_lo && inside_hi {
            ys.push(u);
        }
    }
    ys.extend(hi_extra.iter().rev().map(|d| yhi - d));
    if !open(0) {
        ys[0] = ylo;
    }
    if !open(1) {
        let n = ys.len();
        ys[n - 1] = yhi;
    }

    // reference node: snap the nearest node if close, otherwise insert
    let yc = spec.to_y(spec.reference());
    let j = ys.partition_point(|&v| v < yc);
    let near = |i: usize| (ys[i] - yc).abs() < 1e-9 * h;
    if j < ys.len() && near(j) {
        ys[j] = yc;
    } else if j > 0 && near(j - 1) {
        ys[j - 1] = yc;
    } else {
        ys.insert(j, yc);
    }
    ys.dedup();
    ys
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scale::Measure;

    fn bm(lo: f64, hi: f64, c: f64) -> Arc<DiffusionSpec> {
        Arc::new(
            DiffusionSpec::new(lo, hi, c, Measure::density("1", |_| 1.0), Measure::density("2", |_| 2.0), 1.0)
                .unwrap(),
        )
    }

    #[test]
    fn regular_grid_is_uniform_and_closed() {
        let spec = bm(0.0, 1.0, 0.5);
        let classes = spec.classify().unwrap();
        let g = Grid::build(spec, classes, &GridSpec::with_nodes(11));
        assert_eq!(g.len(), 11);
        assert_eq!(g.closed, [true, true]);
        assert_eq!(g.x[5], 0.5);
        assert_eq!(g.ic, 5);
        assert!((g.s[0] + 0.5).abs() < 1e-14 && (g.m[10] - 1.0).abs() < 1e-14);
        assert_eq!(g.s_end[0], Some(g.s[0]));
    }

    #[test]
    fn off_grid_reference_is_inserted() {
        let spec = bm(0.0, 1.0, 0.33);
        let classes = spec.classify().unwrap();
        let g = Grid::build(spec, classes, &GridSpec::with_nodes(11));
        assert_eq!(g.len(), 12);
        assert_eq!(g.x[g.ic], 0.33);
        assert_eq!(g.s[g.ic], 0.0);
    }

    #[test]
    fn natural_endpoint_is_cut_and_graded() {
        let spec = Arc::new(
            DiffusionSpec::new(
                0.0,
                1.0,
                0.5,
                Measure::density("1/x", |x: f64| 1.0 / x),
                Measure::density("1/x", |x: f64| 1.0 / x),
                1.0,
            )
            .unwrap(),
        );
        let classes = spec.classify().unwrap();
        let gs = GridSpec { nodes: 101, cut: [1e-6, 1e-6], grading: 2.0 };
        let g = Grid::build(spec, classes, &gs);
        assert_eq!(g.closed, [false, true]);
        assert!((g.x[0] - 1e-6).abs() < 1e-18);
        assert!(g.x.windows(2).all(|w| w[1] > w[0]));
        assert!(g.ds.iter().all(|&d| d > 0.0));
        assert_eq!(g.s_end[0], None);
    }

    #[test]
    fn generator_of_quadratic_is_exact_for_bm() {
        let spec = bm(0.0, 1.0, 0.5);
        let classes = spec.classify().unwrap();
        let g = Grid::build(spec, classes, &GridSpec::with_nodes(21));
        let f: Vec<f64> = g.x.iter().map(|x| x * x).collect();
        let lf = g.generator(&f);
        for v in &lf[1..20] {
            assert!((v - 1.0).abs() < 1e-10);
        }
    }
}
