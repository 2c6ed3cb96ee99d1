//! Increasing and decreasing r-eigenfunctions u, v of L = D_m D_s.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::grid::Grid;
use crate::scale::{BoundaryKind, Endpoint};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EigenError {
    #[error("resolvent parameter must be positive, got {0}")]
    NonPositiveR(f64),
    #[error("Picard iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("no γ in the bracket yields a monotone candidate toward endpoint {0}")]
    DegenerateBracket(Endpoint),
    #[error("raw Wronskian {0:e} is numerically zero")]
    ZeroWronskian(f64),
    #[error("eigenfunctions overflow on this grid; move the cut at an infinite or natural endpoint inward")]
    Overflow,
    #[error("cell {0} is too coarse for the trapezoidal recurrence (½Δs·½rΔm ≥ 1)")]
    GridTooCoarse(usize),
}

impl EigenError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::NonPositiveR(_) => "eigen::NonPositiveR",
            Self::NoConvergence { .. } => "eigen::NoConvergence",
            Self::DegenerateBracket(_) => "eigen::DegenerateBracket",
            Self::ZeroWronskian(_) => "eigen::ZeroWronskian",
            Self::Overflow => "eigen::Overflow",
            Self::GridTooCoarse(_) => "eigen::GridTooCoarse",
        }
    }
}

/// Stopping rule for the successive approximations.
#[derive(Debug, Clone, Copy)]
pub struct PicardConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Residual above which a non-converged run is an error.
    pub residual_tol: f64,
    pub bisection_steps: usize,
}

impl Default for PicardConfig {
    fn default() -> Self {
        PicardConfig { tol: 1e-12, max_iter: 200, residual_tol: 1e-8, bisection_steps: 60 }
    }
}

/// φ (φ(c) = 1, D_sφ(c) = 0) and ψ (ψ(c) = 0, D_sψ(c) = 1) with their s-derivatives.
#[derive(Debug, Clone)]
pub struct FundamentalPair {
    pub r: f64,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    pub psi: Vec<f64>,
    pub dpsi: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// One application of f ↦ (f(c) + D_s f(c)·s + r∫_c ds ∫_c f dm, D_s of it), trapezoidal.
fn volterra(grid: &Grid, r: f64, f: &[f64], f0: f64, d0: f64) -> (Vec<f64>, Vec<f64>) {
    let n = grid.len();
    let ic = grid.ic;
    let mut d = vec![0.0; n];
    let mut out = vec![0.0; n];
    d[ic] = d0;
    out[ic] = f0;
    for i in ic + 1..n {
        d[i] = d[i - 1] + r * 0.5 * (f[i - 1] + f[i]) * grid.dm[i - 1];
        out[i] = out[i - 1] + 0.5 * (d[i - 1] + d[i]) * grid.ds[i - 1];
    }
    for i in (0..ic).rev() {
        d[i] = d[i + 1] - r * 0.5 * (f[i] + f[i + 1]) * grid.dm[i];
        out[i] = out[i + 1] - 0.5 * (d[i] + d[i + 1]) * grid.ds[i];
    }
    (out, d)
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn sup(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

fn picard(grid: &Grid, r: f64, init: Vec<f64>, f0: f64, d0: f64, cfg: &PicardConfig) -> Result<(Vec<f64>, Vec<f64>, usize, f64), EigenError> {
    let mut f = init;
    let mut iterations = 0;
    loop {
        let (next, d) = volterra(grid, r, &f, f0, d0);
        iterations += 1;
        let change = sup_diff(&next, &f) / sup(&next).max(1e-300);
        if !change.is_finite() || d.iter().any(|x| !x.is_finite()) {
            return Err(EigenError::Overflow);
        }
        f = next;
        if change < cfg.tol || iterations >= cfg.max_iter {
            let (again, _) = volterra(grid, r, &f, f0, d0);
            let residual = sup_diff(&again, &f) / sup(&f).max(1e-300);
            if change >= cfg.tol && residual > cfg.residual_tol {
                return Err(EigenError::NoConvergence { iterations, residual });
            }
            return Ok((f, d, iterations, residual));
        }
    }
}

/// Successive approximation of the integral equations for φ and ψ on the grid.
pub fn solve_phi_psi(grid: &Grid, r: f64, cfg: &PicardConfig) -> Result<FundamentalPair, EigenError> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(EigenError::NonPositiveR(r));
    }
    let n = grid.len();
    let (phi, dphi, it1, res1) = picard(grid, r, vec![1.0; n], 1.0, 0.0, cfg)?;
    let (psi, dpsi, it2, res2) = picard(grid, r, grid.s.clone(), 0.0, 1.0, cfg)?;
    Ok(FundamentalPair { r, phi, dphi, psi, dpsi, iterations: it1.max(it2), residual: res1.max(res2) })
}

/// Boundary of a monotone predicate between `lo` (true) and `hi` (false), approached from the true side.
fn bisect(mut lo: f64, mut hi: f64, steps: usize, ok: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo).abs() <= 1e-15 * lo.abs().max(hi.abs()) {
            break;
        }
    }
    lo
}

/// A linear combination φ − γψ together with its s-derivative.
#[derive(Debug, Clone)]
pub struct Combination {
    pub gamma: f64,
    pub values: Vec<f64>,
    pub ds: Vec<f64>,
}

/// Linear continuation in s from the end node to an accessible cut endpoint.
fn end_value(grid: &Grid, f: &[f64], df: &[f64], e: Endpoint) -> f64 {
    let node = match e {
        Endpoint::A => 0,
        Endpoint::B => grid.len() - 1,
    };
    if grid.closed[e.index()] {
        return f[node];
    }
    let s_end = grid.s_end[e.index()].expect("accessible endpoint has finite scale");
    f[node] + df[node] * (s_end - grid.s[node])
}

/// v = φ − γ̄ψ: vanishing at an accessible b; at an inaccessible b, γ̄ is bracketed and
/// bisected so that v is non-increasing up to the cut.
pub fn build_v(grid: &Grid, pair: &FundamentalPair, cfg: &PicardConfig) -> Result<Combination, EigenError> {
    let n = grid.len();
    let ic = grid.ic;
    let gamma = if grid.class(Endpoint::B).accessible {
        end_value(grid, &pair.phi, &pair.dphi, Endpoint::B) / end_value(grid, &pair.psi, &pair.dpsi, Endpoint::B)
    } else {
        // D_s(φ − γψ) ≤ 0 on [c, cut] holds exactly for γ ≥ γ̄; find the boundary of that set.
        let non_increasing = |g: f64| (ic + 1..n).all(|i| pair.dphi[i] - g * pair.dpsi[i] <= 0.0);
        let mut hi = 1.0;
        let mut tries = 0;
        while !non_increasing(hi) {
            hi *= 2.0;
            tries += 1;
            if tries > 2000 || !hi.is_finite() {
                return Err(EigenError::DegenerateBracket(Endpoint::B));
            }
        }
        bisect(hi, 0.0, cfg.bisection_steps, non_increasing)
    };
    // Evaluate φ − γψ by marching the same recurrence inward from b: subtracting two
    // growing solutions loses every digit where v is small.
    let last = n - 1;
    let (f_end, d_end) = if grid.class(Endpoint::B).accessible {
        let gap = grid.s_end[1].map_or(0.0, |sb| sb - grid.s[last]);
        (gap, -1.0)
    } else if let (BoundaryKind::Entrance, Some(mb)) = (grid.class(Endpoint::B).kind, grid.m_end[1]) {
        // D_s v(b−) = 0, so D_s v(cut) = −r ∫_cut^b v dm
        (1.0, -pair.r * (mb - grid.m[last]))
    } else {
        (1.0, 0.0)
    };
    let v = march(grid, pair.r, Endpoint::B, f_end, d_end, gamma)?;
    if !check_shape(&v, 0..n, true) {
        return Err(EigenError::DegenerateBracket(Endpoint::B));
    }
    Ok(v)
}

/// u = φ − γψ increasing, the mirror image of [`build_v`] toward a.
pub fn build_u(grid: &Grid, pair: &FundamentalPair, cfg: &PicardConfig) -> Result<Combination, EigenError> {
    let ic = grid.ic;
    let gamma = if grid.class(Endpoint::A).accessible {
        end_value(grid, &pair.phi, &pair.dphi, Endpoint::A) / end_value(grid, &pair.psi, &pair.dpsi, Endpoint::A)
    } else {
        let non_decreasing = |g: f64| (0..ic).all(|i| pair.dphi[i] - g * pair.dpsi[i] >= 0.0);
        let mut lo = -1.0;
        let mut tries = 0;
        while !non_decreasing(lo) {
            lo *= 2.0;
            tries += 1;
            if tries > 2000 || !lo.is_finite() {
                return Err(EigenError::DegenerateBracket(Endpoint::A));
            }
        }
        bisect(lo, 0.0, cfg.bisection_steps, non_decreasing)
    };
    let (f_end, d_end) = if grid.class(Endpoint::A).accessible {
        let gap = grid.s_end[0].map_or(0.0, |sa| grid.s[0] - sa);
        (gap, 1.0)
    } else if let (BoundaryKind::Entrance, Some(ma)) = (grid.class(Endpoint::A).kind, grid.m_end[0]) {
        (1.0, pair.r * (grid.m[0] - ma))
    } else {
        (1.0, 0.0)
    };
    let u = march(grid, pair.r, Endpoint::A, f_end, d_end, gamma)?;
    if !check_shape(&u, 0..grid.len(), false) {
        return Err(EigenError::DegenerateBracket(Endpoint::A));
    }
    Ok(u)
}

/// Solve the trapezoidal recurrence
/// f_{i+1} − f_i = ½(D_i + D_{i+1})Δs_i,  D_{i+1} − D_i = ½r(f_i + f_{i+1})Δm_i
/// from terminal data at `from`, then scale so that f(c) = 1 (the value of φ − γψ at c).
fn march(grid: &Grid, r: f64, from: Endpoint, f_end: f64, d_end: f64, gamma: f64) -> Result<Combination, EigenError> {
    let n = grid.len();
    let mut f = vec![0.0; n];
    let mut d = vec![0.0; n];
    let cell = |i: usize| (0.5 * grid.ds[i], 0.5 * r * grid.dm[i]);
    match from {
        Endpoint::B => {
            f[n - 1] = f_end;
            d[n - 1] = d_end;
            for i in (0..n - 1).rev() {
                let (al, be) = cell(i);
                let det = 1.0 - al * be;
                if !(det > 0.0) {
                    return Err(EigenError::GridTooCoarse(i));
                }
                let r1 = f[i + 1] - al * d[i + 1];
                let r2 = d[i + 1] - be * f[i + 1];
                f[i] = (r1 - al * r2) / det;
                d[i] = (r2 - be * r1) / det;
            }
        }
        Endpoint::A => {
            f[0] = f_end;
            d[0] = d_end;
            for i in 0..n - 1 {
                let (al, be) = cell(i);
                let det = 1.0 - al * be;
                if !(det > 0.0) {
                    return Err(EigenError::GridTooCoarse(i));
                }
                let r1 = f[i] + al * d[i];
                let r2 = d[i] + be * f[i];
                f[i + 1] = (r1 + al * r2) / det;
                d[i + 1] = (r2 + be * r1) / det;
            }
        }
    }
    let k = f[grid.ic];
    if !(k > 0.0) || !k.is_finite() {
        return Err(EigenError::Overflow);
    }
    for (a, b) in f.iter_mut().zip(d.iter_mut()) {
        *a /= k;
        *b /= k;
    }
    if f.iter().chain(&d).any(|x| !x.is_finite()) {
        return Err(EigenError::Overflow);
    }
    Ok(Combination { gamma, values: f, ds: d })
}

/// Non-negativity and monotonicity up to roundoff on the given node range.
fn check_shape(f: &Combination, range: std::ops::Range<usize>, decreasing: bool) -> bool {
    let scale = sup(&f.values).max(1e-300);
    let tol = 1e-9 * scale;
    range.clone().all(|i| f.values[i] >= -tol)
        && range.clone().skip(1).all(|i| {
            let step = f.values[i] - f.values[i - 1];
            if decreasing {
                step <= tol
            } else {
                step >= -tol
            }
        })
}

/// Endpoint limits of u, v and their s-derivatives; `f64::INFINITY` marks +∞.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryLimits {
    pub u_at_a: f64,
    pub u_at_b: f64,
    pub v_at_a: f64,
    pub v_at_b: f64,
    pub dsu_at_a: f64,
    pub dsu_at_b: f64,
    pub dsv_at_a: f64,
    pub dsv_at_b: f64,
}

/// Wronskian-normalized eigenfunction pair on a grid.
#[derive(Debug, Clone)]
pub struct EigenSolution {
    pub r: f64,
    pub grid: Arc<Grid>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub dsu: Vec<f64>,
    pub dsv: Vec<f64>,
    pub limits: BoundaryLimits,
    pub raw_wronskian: f64,
    pub wronskian_residual: f64,
    pub iterations: usize,
    pub picard_residual: f64,
}

/// Scale u so that v·D_s u − u·D_s v ≡ 1 and compute the endpoint limits.
pub fn normalize_wronskian(grid: Arc<Grid>, r: f64, u: Combination, v: Combination) -> Result<EigenSolution, EigenError> {
    let ic = grid.ic;
    let raw = v.values[ic] * u.ds[ic] - u.values[ic] * v.ds[ic];
    if !(raw.abs() >= 1e-14) {
        return Err(EigenError::ZeroWronskian(raw));
    }
    let scale = 1.0 / raw;
    let uu: Vec<f64> = u.values.iter().map(|x| x * scale).collect();
    let du: Vec<f64> = u.ds.iter().map(|x| x * scale).collect();
    let (vv, dv) = (v.values, v.ds);
    let n = grid.len();
    let wronskian_residual =
        (0..n).map(|i| (vv[i] * du[i] - uu[i] * dv[i] - 1.0).abs()).fold(0.0, f64::max);

    let inf = f64::INFINITY;
    let ca = grid.class(Endpoint::A);
    let cb = grid.class(Endpoint::B);
    let last = n - 1;
    // Accessible ends: continuation in s (exact node value when the end is a node).
    let v_at_a = if ca.accessible { end_value(&grid, &vv, &dv, Endpoint::A) } else { inf };
    let u_at_b = if cb.accessible { end_value(&grid, &uu, &du, Endpoint::B) } else { inf };
    let u_at_a = if ca.accessible {
        0.0
    } else if ca.kind == BoundaryKind::Entrance {
        uu[0] * (1.0 - r * grid.entrance_tail[0])
    } else {
        0.0
    };
    let v_at_b = if cb.accessible {
        0.0
    } else if cb.kind == BoundaryKind::Entrance {
        vv[last] * (1.0 - r * grid.entrance_tail[1])
    } else {
        0.0
    };
    let dsu_at_a = if ca.accessible { du[0] } else { 0.0 };
    let dsv_at_b = if cb.accessible { dv[last] } else { 0.0 };
    let dsv_at_a = if ca.enterable { dv[0] } else { -inf };
    let dsu_at_b = if cb.enterable { du[last] } else { inf };
    let limits = BoundaryLimits { u_at_a, u_at_b, v_at_a, v_at_b, dsu_at_a, dsu_at_b, dsv_at_a, dsv_at_b };
    Ok(EigenSolution {
        r,
        grid,
        u: uu,
        v: vv,
        dsu: du,
        dsv: dv,
        limits,
        raw_wronskian: raw,
        wronskian_residual,
        iterations: 0,
        picard_residual: 0.0,
    })
}

/// Full pipeline: φ, ψ → u, v → normalization.
pub fn solve(grid: Arc<Grid>, r: f64, cfg: &PicardConfig) -> Result<EigenSolution, EigenError> {
    let pair = solve_phi_psi(&grid, r, cfg)?;
    let v = build_v(&grid, &pair, cfg)?;
    let u = build_u(&grid, &pair, cfg)?;
    let mut sol = normalize_wronskian(grid, r, u, v)?;
    sol.iterations = pair.iterations;
    sol.picard_residual = pair.residual;
    Ok(sol)
}

impl EigenSolution {
    /// |D_s u(a) − 1/v(a)| and |D_s v(b) + 1/u(b)|, with 1/∞ = 0.
    pub fn boundary_identity_residuals(&self) -> [f64; 2] {
        let l = &self.limits;
        [(l.dsu_at_a - recip(l.v_at_a)).abs(), (l.dsv_at_b + recip(l.u_at_b)).abs()]
    }

    pub fn x(&self) -> &[f64] {
        &self.grid.x
    }

    /// Interpolated u at x.
    pub fn u_at(&self, x: f64) -> f64 {
        self.grid.interpolate(&self.u, x)
    }

    pub fn v_at(&self, x: f64) -> f64 {
        self.grid.interpolate(&self.v, x)
    }

    /// Sup-norm of the discrete L u − r u relative to sup u, over interior nodes.
    pub fn generator_residual(&self) -> f64 {
        let lu = self.grid.generator(&self.u);
        let n = self.grid.len();
        let scale = sup(&self.u).max(1e-300);
        (1..n - 1).map(|i| (lu[i] - self.r * self.u[i]).abs()).fold(0.0, f64::max) / scale
    }

    /// Rows (x, u, v, D_s u, D_s v).
    pub fn rows(&self) -> impl Iterator<Item = [f64; 5]> + '_ {
        (0..self.grid.len()).map(|i| [self.grid.x[i], self.u[i], self.v[i], self.dsu[i], self.dsv[i]])
    }
}

/// 1/x with 1/∞ = 0.
pub fn recip(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        1.0 / x
    }
}
