//! Finite-difference oracle: (r − L) f = g on the grid with discretized Feller boundary rows.
//!
//! Interior rows are divided differences in s then m, with dual-cell masses between y-midpoints.
//! Accessible endpoints that are grid nodes carry the Φ row; cut endpoints that belong to the
//! state space are extra unknowns coupled through the stub cell (exit) or not at all (inaccessible).

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::boundary::{EndpointMode, FellerBoundaryData, JumpMeasure, SideData};
use crate::grid::{Grid, GridSpec};
use crate::quad;
use crate::scale::{BoundaryClass, DiffusionSpec, Endpoint, Which};
use crate::source::Source;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("grid too coarse: {0} nodes (need at least 8)")]
    GridTooCoarse(usize),
    #[error("discrete system is singular")]
    SingularSystem,
    #[error("g is needed at endpoint {0} but has no value there")]
    MissingEndpointData(Endpoint),
    #[error("resolvent parameter must be positive, got {0}")]
    NonPositiveR(f64),
}

impl OracleError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::GridTooCoarse(_) => "grid_oracle::GridTooCoarse",
            Self::SingularSystem => "grid_oracle::SingularSystem",
            Self::MissingEndpointData(_) => "grid_oracle::MissingEndpointData",
            Self::NonPositiveR(_) => "grid_oracle::NonPositiveR",
        }
    }
}

/// Discrete L at one unknown: L f = left·f_l + right·f_r − (left + right)·f_i.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorRow {
    pub center: usize,
    pub left: Option<(usize, f64)>,
    pub right: Option<(usize, f64)>,
}

impl GeneratorRow {
    pub fn diag(&self) -> f64 {
        -(self.left.map_or(0.0, |l| l.1) + self.right.map_or(0.0, |r| r.1))
    }
}

/// Boundary equation: Σ coef·f + lf_coef·L f(e) = 0 (Data) or f_e = f_node (Entering).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryRow {
    pub side: Endpoint,
    pub unknown: usize,
    pub coefs: Vec<(usize, f64)>,
    pub lf_coef: f64,
}

#[derive(Debug, Clone)]
pub struct GridChain {
    pub grid: Arc<Grid>,
    /// Dual-cell speed masses at the nodes.
    pub masses: Vec<f64>,
    /// Unknown index of a pseudo-node for a cut endpoint in the state space.
    pub pseudo: [Option<usize>; 2],
    pub generator: Vec<GeneratorRow>,
    pub boundary: Vec<BoundaryRow>,
    pub unknowns: usize,
}

/// Oracle solution: node values and endpoint values.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
    pub end_value: [Option<f64>; 2],
}

impl OracleSolution {
    pub fn at(&self, x: f64) -> f64 {
        let spec = &self.grid.spec;
        if x == spec.lo() {
            if let Some(v) = self.end_value[0] {
                return v;
            }
        }
        if x == spec.hi() {
            if let Some(v) = self.end_value[1] {
                return v;
            }
        }
        self.grid.interpolate(&self.values, x)
    }
}

/// Build the chain on a fresh grid with `nodes` uniform nodes (cuts and grading from `base`).
pub fn discretize(
    spec: Arc<DiffusionSpec>,
    classes: [BoundaryClass; 2],
    data: &FellerBoundaryData,
    nodes: usize,
    base: &GridSpec,
) -> Result<GridChain, OracleError> {
    if nodes < 8 {
        return Err(OracleError::GridTooCoarse(nodes));
    }
    let gs = GridSpec { nodes, ..*base };
    let grid = Arc::new(Grid::build(spec, classes, &gs));
    Ok(discretize_on(grid, data))
}

/// Build the chain on an existing grid.
pub fn discretize_on(grid: Arc<Grid>, data: &FellerBoundaryData) -> GridChain {
    let spec = grid.spec.clone();
    let n = grid.len();
    let (ylo, yhi) = spec.y_range();
    let mut next = n;
    let mut pseudo = [None, None];
    for (k, slot) in pseudo.iter_mut().enumerate() {
        if !grid.closed[k] && data.modes[k] != EndpointMode::Excluded {
            *slot = Some(next);
            next += 1;
        }
    }

    // Dual-cell boundaries in y; the outer halves stop at the endpoint (closed or exit stub)
    // or at the cut node (Neumann).
    let mid = |i: usize| 0.5 * (grid.y[i] + grid.y[i + 1]);
    let x_of = |y: f64| spec.to_x(y);
    let mass = |y0: f64, y1: f64| spec.increment(Which::Speed, x_of(y0), x_of(y1));
    let exit_like = |k: usize| !grid.closed[k] && grid.classes[k].accessible;
    let mut masses = Vec::with_capacity(n);
    for i in 0..n {
        let lo_y = if i > 0 {
            mid(i - 1)
        } else if exit_like(0) {
            0.5 * (ylo + grid.y[0])
        } else {
            grid.y[0]
        };
        let hi_y = if i + 1 < n {
            mid(i)
        } else if exit_like(1) {
            0.5 * (grid.y[n - 1] + yhi)
        } else {
            grid.y[n - 1]
        };
        let m = if i == 0 && grid.closed[0] {
            spec.increment(Which::Speed, spec.lo(), x_of(hi_y))
        } else if i + 1 == n && grid.closed[1] {
            spec.increment(Which::Speed, x_of(lo_y), spec.hi())
        } else {
            mass(lo_y, hi_y)
        };
        masses.push(m);
    }

    let stub = |k: usize| -> Option<f64> {
        if !exit_like(k) || pseudo[k].is_none() {
            return None;
        }
        let node = if k == 0 { 0 } else { n - 1 };
        let se = grid.s_end[k]?;
        Some((grid.s[node] - se).abs())
    };

    let mut generator = Vec::new();
    #[allow(clippy::needless_range_loop)] // neighbours and masses are indexed together
    for i in 0..n {
        let is_border = (i == 0 && grid.closed[0]) || (i + 1 == n && grid.closed[1]);
        if is_border {
            continue;
        }
        let left = if i > 0 {
            Some((i - 1, 1.0 / (grid.ds[i - 1] * masses[i])))
        } else {
            stub(0).map(|ds| (pseudo[0].unwrap(), 1.0 / (ds * masses[i])))
        };
        let right = if i + 1 < n {
            Some((i + 1, 1.0 / (grid.ds[i] * masses[i])))
        } else {
            stub(1).map(|ds| (pseudo[1].unwrap(), 1.0 / (ds * masses[i])))
        };
        generator.push(GeneratorRow { center: i, left, right });
    }

    let unknown_of = |k: usize| -> Option<usize> {
        if grid.closed[k] {
            Some(if k == 0 { 0 } else { n - 1 })
        } else {
            pseudo[k]
        }
    };
    let weights = |j: &JumpMeasure| jump_weights(&grid, j);
    let mut boundary = Vec::new();
    for (k, side) in [Endpoint::A, Endpoint::B].into_iter().enumerate() {
        let Some(unknown) = unknown_of(k) else { continue };
        let node = if k == 0 { 0 } else { n - 1 };
        match data.modes[k] {
            EndpointMode::Excluded => {}
            EndpointMode::Entering => {
                boundary.push(BoundaryRow { side, unknown, coefs: vec![(unknown, 1.0), (node, -1.0)], lf_coef: 0.0 });
            }
            EndpointMode::Data => {
                let d: &SideData = &data.sides[k];
                let mut coefs = vec![(unknown, d.kill)];
                let mut lf_coef = d.stick;
                if d.reflect > 0.0 && grid.closed[k] {
                    // ∓p2 D_s f(e), with D_s f(e) from the one-sided difference corrected by the half-cell
                    // mass: D_s f(x_1) − D_s f(a) ≈ M·L f(a). Both sides reduce to the same stencil.
                    let (inner, ds) = if k == 0 { (1, grid.ds[0]) } else { (n - 2, grid.ds[n - 2]) };
                    coefs.push((inner, -d.reflect / ds));
                    coefs.push((unknown, d.reflect / ds));
                    lf_coef += d.reflect * masses[node];
                }
                if !d.jumps.is_zero() {
                    let w = weights(&d.jumps);
                    let total: f64 = w.iter().sum();
                    for (i, wi) in w.into_iter().enumerate() {
                        if wi != 0.0 {
                            coefs.push((i, -wi));
                        }
                    }
                    coefs.push((unknown, total));
                    if d.jumps.far_end > 0.0 {
                        if let Some(other) = unknown_of(1 - k) {
                            coefs.push((other, -d.jumps.far_end));
                            coefs.push((unknown, d.jumps.far_end));
                        }
                    }
                }
                boundary.push(BoundaryRow { side, unknown, coefs, lf_coef });
            }
        }
    }
    GridChain { grid, masses, pseudo, generator, boundary, unknowns: next }
}

/// Hat-function weights ∫ hat_i dp4 on the grid nodes (hats linear in the compact coordinate).
fn jump_weights(grid: &Grid, j: &JumpMeasure) -> Vec<f64> {
    let n = grid.len();
    let spec = &grid.spec;
    let mut w = vec![0.0; n];
    let locate = |y: f64| -> (usize, f64) {
        if y <= grid.y[0] {
            return (0, 0.0);
        }
        if y >= grid.y[n - 1] {
            return (n - 2, 1.0);
        }
        let i = grid.y.partition_point(|&v| v <= y).saturating_sub(1).min(n - 2);
        (i, (y - grid.y[i]) / (grid.y[i + 1] - grid.y[i]))
    };
    for a in &j.atoms {
        let (i, t) = locate(spec.to_y(a.x));
        w[i] += a.mass * (1.0 - t);
        w[i + 1] += a.mass * t;
    }
    if let Some(d) = &j.density {
        let rho = &d.density;
        let mut pts = vec![d.lo];
        pts.extend(grid.x.iter().copied().filter(|&x| x > d.lo && x < d.hi));
        pts.push(d.hi);
        for win in pts.windows(2) {
            let (x0, x1) = (win[0], win[1]);
            let (i, _) = locate(spec.to_y(0.5 * (x0 + x1)));
            let inside = x0 >= grid.x[0] && x1 <= grid.x[n - 1];
            if !inside {
                // Stub beyond a cut: all mass to the end node.
                let m = quad::adaptive(&|x| rho(x), x0, x1, 1e-11).value;
                let node = if x1 <= grid.x[0] { 0 } else { n - 1 };
                w[node] += m;
                continue;
            }
            let (ya, yb) = (grid.y[i], grid.y[i + 1]);
            let hat_r = |x: f64| (spec.to_y(x) - ya) / (yb - ya);
            let right = quad::adaptive(&|x| rho(x) * hat_r(x), x0, x1, 1e-11).value;
            let total = quad::adaptive(&|x| rho(x), x0, x1, 1e-11).value;
            w[i] += total - right;
            w[i + 1] += right;
        }
    }
    w
}

impl GridChain {
    /// Assemble the full dense system (for small grids and cross-checks).
    pub fn dense_system(&self, g: &Source, r: f64) -> Result<(DMatrix<f64>, DVector<f64>), OracleError> {
        let (rows, rhs) = self.rows(g, r)?;
        let m = self.unknowns;
        let mut a = DMatrix::zeros(m, m);
        for (i, row) in rows.iter().enumerate() {
            for &(j, c) in row {
                a[(i, j)] += c;
            }
        }
        Ok((a, DVector::from_vec(rhs)))
    }

    /// Sparse rows of (r − L) f = g and the boundary equations, one per unknown.
    #[allow(clippy::type_complexity)]
    fn rows(&self, g: &Source, r: f64) -> Result<(Vec<Vec<(usize, f64)>>, Vec<f64>), OracleError> {
        if !(r > 0.0) {
            return Err(OracleError::NonPositiveR(r));
        }
        let gv = g.sample(&self.grid);
        let spec = &self.grid.spec;
        let mut rows = vec![Vec::new(); self.unknowns];
        let mut rhs = vec![0.0; self.unknowns];
        for row in &self.generator {
            let i = row.center;
            let mut entries = vec![(i, r - row.diag())];
            if let Some((j, c)) = row.left {
                entries.push((j, -c));
            }
            if let Some((j, c)) = row.right {
                entries.push((j, -c));
            }
            rows[i] = entries;
            rhs[i] = gv[i];
        }
        for b in &self.boundary {
            let mut entries = b.coefs.clone();
            if b.lf_coef != 0.0 {
                let ge = g.at_end(b.side, spec).ok_or(OracleError::MissingEndpointData(b.side))?;
                entries.push((b.unknown, b.lf_coef * r));
                rhs[b.unknown] = b.lf_coef * ge;
            }
            rows[b.unknown] = entries;
        }
        Ok((rows, rhs))
    }

    /// Solve by Thomas elimination on the interior block and a Schur complement for the
    /// (at most two) boundary unknowns.
    pub fn solve_resolvent(&self, g: &Source, r: f64) -> Result<OracleSolution, OracleError> {
        let (rows, rhs) = self.rows(g, r)?;
        let border: Vec<usize> = self.boundary.iter().map(|b| b.unknown).collect();
        let core: Vec<usize> = self.generator.iter().map(|row| row.center).collect();
        let k = core.len();
        // Core unknowns are consecutive grid nodes.
        let offset = core[0];
        let mut lower = vec![0.0; k];
        let mut diag = vec![0.0; k];
        let mut upper = vec![0.0; k];
        let nb = border.len();
        let mut coupling = vec![vec![0.0; k]; nb];
        for (ci, &i) in core.iter().enumerate() {
            for &(j, c) in &rows[i] {
                if let Some(bi) = border.iter().position(|&b| b == j) {
                    coupling[bi][ci] += c;
                } else if j == i {
                    diag[ci] += c;
                } else if j + 1 == i {
                    lower[ci] += c;
                } else if j == i + 1 {
                    upper[ci] += c;
                } else {
                    unreachable!("generator rows are tridiagonal");
                }
            }
        }
        let rhs_core: Vec<f64> = core.iter().map(|&i| rhs[i]).collect();
        let y0 = thomas(&lower, &diag, &upper, &rhs_core).ok_or(OracleError::SingularSystem)?;
        let ys: Vec<Vec<f64>> = coupling
            .iter()
            .map(|c| thomas(&lower, &diag, &upper, c).ok_or(OracleError::SingularSystem))
            .collect::<Result<_, _>>()?;

        // Border rows: D z_c + E z_b = rhs_b, with z_c = y0 − Σ_b ys_b z_b.
        let mut s = vec![vec![0.0; nb]; nb];
        let mut t = vec![0.0; nb];
        for (bi, &u) in border.iter().enumerate() {
            t[bi] = rhs[u];
            for &(j, c) in &rows[u] {
                if let Some(bj) = border.iter().position(|&b| b == j) {
                    s[bi][bj] += c;
                } else {
                    let cj = j - offset;
                    t[bi] -= c * y0[cj];
                    for (bj, y) in ys.iter().enumerate() {
                        s[bi][bj] -= c * y[cj];
                    }
                }
            }
        }
        let zb = solve_dense_small(&s, &t).ok_or(OracleError::SingularSystem)?;
        let mut z = vec![0.0; self.unknowns];
        for (ci, &i) in core.iter().enumerate() {
            z[i] = y0[ci] - ys.iter().zip(&zb).map(|(y, b)| y[ci] * b).sum::<f64>();
        }
        for (bi, &u) in border.iter().enumerate() {
            z[u] = zb[bi];
        }
        Ok(self.package(z))
    }

    /// Dense LU solve of the same system (nalgebra), for cross-checking.
    pub fn solve_dense(&self, g: &Source, r: f64) -> Result<OracleSolution, OracleError> {
        let (a, b) = self.dense_system(g, r)?;
        let z = a.lu().solve(&b).ok_or(OracleError::SingularSystem)?;
        Ok(self.package(z.iter().copied().collect()))
    }

    fn package(&self, z: Vec<f64>) -> OracleSolution {
        let n = self.grid.len();
        let values = z[..n].to_vec();
        let end_value = [0, 1].map(|k| {
            if let Some(p) = self.pseudo[k] {
                Some(z[p])
            } else if self.grid.closed[k] && self.boundary.iter().any(|b| b.side.index() == k) {
                Some(values[if k == 0 { 0 } else { n - 1 }])
            } else {
                None
            }
        });
        OracleSolution { grid: self.grid.clone(), values, end_value }
    }
}

/// Tridiagonal solve (lower[0] and upper[k−1] are ignored).
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let k = diag.len();
    let mut c = vec![0.0; k];
    let mut d = vec![0.0; k];
    let mut beta = diag[0];
    if beta == 0.0 {
        return None;
    }
    c[0] = upper[0] / beta;
    d[0] = rhs[0] / beta;
    for i in 1..k {
        beta = diag[i] - lower[i] * c[i - 1];
        if beta == 0.0 || !beta.is_finite() {
            return None;
        }
        c[i] = if i + 1 < k { upper[i] / beta } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / beta;
    }
    let mut x = d;
    for i in (0..k - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Some(x)
}

fn solve_dense_small(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    if n == 0 {
        return Some(vec![]);
    }
    let m = DMatrix::from_fn(n, n, |i, j| a[i][j]);
    m.lu().solve(&DVector::from_column_slice(b)).map(|v| v.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scale::Measure;

    fn bm() -> (Arc<DiffusionSpec>, [BoundaryClass; 2]) {
        let spec = Arc::new(
            DiffusionSpec::new(0.0, 1.0, 0.5, Measure::density("1", |_| 1.0), Measure::density("2", |_| 2.0), 1.0)
                .unwrap(),
        );
        let c = spec.classify().unwrap();
        (spec, c)
    }

    #[test]
    fn dirichlet_minimal_resolvent() {
        let (spec, c) = bm();
        let data = FellerBoundaryData::new(SideData::killing(1.0), SideData::killing(1.0));
        let chain = discretize(spec, c, &data, 2001, &GridSpec::default()).unwrap();
        let sol = chain.solve_resolvent(&Source::constant(1.0), 0.5).unwrap();
        let want = 2.0 * (1.0 - 1.0 / 0.5_f64.cosh());
        assert!((sol.at(0.5) - want).abs() < 1e-6, "{}", sol.at(0.5));
    }

    #[test]
    fn generator_rows_sum_to_zero() {
        let (spec, c) = bm();
        let data = FellerBoundaryData::new(SideData::sticky(1.0, 1.0), SideData::killing(1.0));
        let chain = discretize(spec, c, &data, 64, &GridSpec::default()).unwrap();
        for row in &chain.generator {
            let s = row.left.map_or(0.0, |l| l.1) + row.right.map_or(0.0, |r| r.1) + row.diag();
            assert_eq!(s, 0.0);
            assert!(row.left.map_or(true, |l| l.1 > 0.0) && row.right.map_or(true, |r| r.1 > 0.0));
        }
    }

    #[test]
    fn schur_matches_dense() {
        let (spec, c) = bm();
        let mut a = SideData::sticky(1.0, 0.5);
        a.jumps.atoms.push(crate::boundary::Atom { x: 0.3, mass: 2.0 });
        a.jumps.far_end = 0.5;
        let mut b = SideData::killing(0.5);
        b.reflect = 1.0;
        b.jumps.density = Some(crate::boundary::JumpDensity::new("1", 0.2, 0.9, |_| 1.0));
        let data = FellerBoundaryData::new(a, b);
        let chain = discretize(spec, c, &data, 101, &GridSpec::default()).unwrap();
        let g = Source::new("1+x", |x| 1.0 + x);
        let s1 = chain.solve_resolvent(&g, 0.7).unwrap();
        let s2 = chain.solve_dense(&g, 0.7).unwrap();
        let err = s1.values.iter().zip(&s2.values).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn too_coarse() {
        let (spec, c) = bm();
        let data = FellerBoundaryData::new(SideData::killing(1.0), SideData::killing(1.0));
        assert_eq!(discretize(spec, c, &data, 5, &GridSpec::default()).unwrap_err(), OracleError::GridTooCoarse(5));
    }
}
