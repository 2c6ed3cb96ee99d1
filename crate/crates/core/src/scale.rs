//! Scale function, speed measure, and Feller's boundary classification.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coord::Coordinate;
use crate::quad::{self, adaptive};

/// Relative tolerance for density quadratures.
const QUAD_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScaleSpeedError {
    #[error("interval must satisfy a < b (got a = {lo}, b = {hi})")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("reference point {c} is not strictly inside ({lo}, {hi})")]
    ReferenceOutside { c: f64, lo: f64, hi: f64 },
    #[error("diffusion coefficient is not positive at x = {x}")]
    NonPositiveDiffusion { x: f64 },
    #[error("inner quadrature overflowed at x = {x}")]
    DivergentQuadrature { x: f64 },
    #[error("{which} is not strictly increasing near x = {x}")]
    NotIncreasing { which: Which, x: f64 },
    #[error("table for {which} does not cover the interval [{lo}, {hi}]")]
    TableCoverage { which: Which, lo: f64, hi: f64 },
    #[error("tabulated {which} needs a finite interval")]
    TableOnInfiniteInterval { which: Which },
    #[error("cannot decide convergence of the {integral} integral at endpoint {endpoint}")]
    IndeterminateDivergence { endpoint: Endpoint, integral: &'static str },
}

impl ScaleSpeedError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::InvalidInterval { .. } => "scale_speed::InvalidInterval",
            Self::ReferenceOutside { .. } => "scale_speed::ReferenceOutside",
            Self::NonPositiveDiffusion { .. } => "scale_speed::NonPositiveDiffusion",
            Self::DivergentQuadrature { .. } => "scale_speed::DivergentQuadrature",
            Self::NotIncreasing { .. } => "scale_speed::NotIncreasing",
            Self::TableCoverage { .. } => "scale_speed::TableCoverage",
            Self::TableOnInfiniteInterval { .. } => "scale_speed::TableOnInfiniteInterval",
            Self::IndeterminateDivergence { .. } => "scale_speed::IndeterminateDivergence",
        }
    }
}

/// One of the two interval endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Endpoint {
    A,
    B,
}

impl Endpoint {
    pub fn other(self) -> Self {
        match self {
            Endpoint::A => Endpoint::B,
            Endpoint::B => Endpoint::A,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Endpoint::A => "a",
            Endpoint::B => "b",
        })
    }
}

/// Which of the two monotone functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Which {
    Scale,
    Speed,
}

impl fmt::Display for Which {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Which::Scale => "scale",
            Which::Speed => "speed",
        })
    }
}

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Strictly increasing piecewise-linear function given at nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    xs: Vec<f64>,
    values: Vec<f64>,
}

impl Table {
    pub fn new(xs: Vec<f64>, values: Vec<f64>) -> Option<Self> {
        let ok = xs.len() >= 2
            && xs.len() == values.len()
            && xs.windows(2).all(|w| w[1] > w[0])
            && values.windows(2).all(|w| w[1] > w[0])
            && xs.iter().chain(&values).all(|v| v.is_finite());
        ok.then_some(Table { xs, values })
    }

    pub fn eval(&self, x: f64) -> f64 {
        quad::interp(&self.xs, &self.values, x)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    /// ∫ f dμ over [x0, x1], exact slope per linear piece, Gauss–Legendre per piece.
    fn stieltjes(&self, f: &dyn Fn(f64) -> f64, x0: f64, x1: f64) -> f64 {
        let (lo, hi, sign) = if x0 <= x1 { (x0, x1, 1.0) } else { (x1, x0, -1.0) };
        let mut acc = 0.0;
        for j in 0..self.xs.len() - 1 {
            let (l, r) = (self.xs[j].max(lo), self.xs[j + 1].min(hi));
            if r <= l {
                continue;
            }
            let slope = (self.values[j + 1] - self.values[j]) / (self.xs[j + 1] - self.xs[j]);
            acc += slope * quad::gauss_legendre(&|x| f(x), l, r);
        }
        sign * acc
    }
}

/// A monotone function handle: either a Lebesgue density or a tabulation of cumulative values.
#[derive(Clone)]
pub enum Measure {
    Density { density: RealFn, label: String },
    Tabulated(Table),
}

impl fmt::Debug for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Measure::Density { label, .. } => write!(f, "Density({label})"),
            Measure::Tabulated(t) => write!(f, "Tabulated({} nodes)", t.xs.len()),
        }
    }
}

impl Measure {
    pub fn density(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Measure::Density { density: Arc::new(f), label: label.into() }
    }
}

/// Drift and diffusion coefficient a spec was derived from.
#[derive(Clone)]
pub struct Sde {
    pub drift: RealFn,
    pub sigma: RealFn,
}

impl fmt::Debug for Sde {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Sde { .. }")
    }
}

/// An interval with scale s and speed m, normalized so s(c) = m(c) = 0.
#[derive(Debug, Clone)]
pub struct DiffusionSpec {
    lo: f64,
    hi: f64,
    reference: f64,
    coord: Coordinate,
    scale: Measure,
    speed: Measure,
    sde: Option<Sde>,
}

impl DiffusionSpec {
    /// Build a spec; `length` is the length scale of the compactifying map for infinite endpoints.
    pub fn new(
        lo: f64,
        hi: f64,
        reference: f64,
        scale: Measure,
        speed: Measure,
        length: f64,
    ) -> Result<Self, ScaleSpeedError> {
        if !(lo < hi) || lo.is_nan() || hi.is_nan() {
            return Err(ScaleSpeedError::InvalidInterval { lo, hi });
        }
        if !(reference > lo && reference < hi) || !reference.is_finite() {
            return Err(ScaleSpeedError::ReferenceOutside { c: reference, lo, hi });
        }
        let coord = Coordinate::for_interval(lo, hi, reference, length);
        let spec = DiffusionSpec { lo, hi, reference, coord, scale, speed, sde: None };
        for which in [Which::Scale, Which::Speed] {
            spec.check_measure(which)?;
        }
        Ok(spec)
    }

    /// Standard (μ, σ) → (s, m): s′ = exp(−∫_c^x 2μ/σ²), m′ = 2/(σ² s′).
    pub fn from_sde(
        drift: RealFn,
        sigma: RealFn,
        lo: f64,
        hi: f64,
        reference: f64,
        length: f64,
    ) -> Result<Self, ScaleSpeedError> {
        if !(lo < hi) {
            return Err(ScaleSpeedError::InvalidInterval { lo, hi });
        }
        if !(reference > lo && reference < hi) {
            return Err(ScaleSpeedError::ReferenceOutside { c: reference, lo, hi });
        }
        let coord = Coordinate::for_interval(lo, hi, reference, length);
        let (y0, y1) = (coord.to_y(lo), coord.to_y(hi));
        for k in 1..1024 {
            let x = coord.to_x(y0 + (y1 - y0) * k as f64 / 1024.0);
            let sg = sigma(x);
            if !(sg > 0.0) || !sg.is_finite() {
                return Err(ScaleSpeedError::NonPositiveDiffusion { x });
            }
        }
        let sg = sigma(reference);
        if !(sg > 0.0) {
            return Err(ScaleSpeedError::NonPositiveDiffusion { x: reference });
        }

        let log_scale_density = {
            let (drift, sigma) = (drift.clone(), sigma.clone());
            Arc::new(move |x: f64| -> f64 {
                let h = |z: f64| {
                    let sg = sigma(z);
                    2.0 * drift(z) / (sg * sg)
                };
                -adaptive(&h, reference, x, QUAD_TOL).value
            })
        };
        let ls = log_scale_density.clone();
        let scale = Measure::density("sde scale", move |x| ls(x).exp());
        let ls = log_scale_density.clone();
        let sg = sigma.clone();
        let speed = Measure::density("sde speed", move |x| {
            let s = sg(x);
            2.0 / (s * s) * (-ls(x)).exp()
        });
        for k in 1..256 {
            let x = coord.to_x(y0 + (y1 - y0) * k as f64 / 256.0);
            if !log_scale_density(x).exp().is_finite() {
                return Err(ScaleSpeedError::DivergentQuadrature { x });
            }
        }
        let mut spec = DiffusionSpec::new(lo, hi, reference, scale, speed, length)?;
        spec.sde = Some(Sde { drift, sigma });
        Ok(spec)
    }

    fn check_measure(&self, which: Which) -> Result<(), ScaleSpeedError> {
        match self.measure(which) {
            Measure::Tabulated(t) => {
                if !self.lo.is_finite() || !self.hi.is_finite() {
                    return Err(ScaleSpeedError::TableOnInfiniteInterval { which });
                }
                let xs = t.xs();
                if xs[0] > self.lo || xs[xs.len() - 1] < self.hi {
                    return Err(ScaleSpeedError::TableCoverage { which, lo: self.lo, hi: self.hi });
                }
            }
            Measure::Density { density, .. } => {
                let (y0, y1) = self.y_range();
                for k in 1..512 {
                    let x = self.coord.to_x(y0 + (y1 - y0) * k as f64 / 512.0);
                    let d = density(x);
                    if !(d > 0.0) || !d.is_finite() {
                        return Err(ScaleSpeedError::NotIncreasing { which, x });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn endpoint(&self, e: Endpoint) -> f64 {
        match e {
            Endpoint::A => self.lo,
            Endpoint::B => self.hi,
        }
    }

    pub fn reference(&self) -> f64 {
        self.reference
    }

    pub fn coordinate(&self) -> Coordinate {
        self.coord
    }

    pub fn sde(&self) -> Option<&Sde> {
        self.sde.as_ref()
    }

    pub fn measure(&self, which: Which) -> &Measure {
        match which {
            Which::Scale => &self.scale,
            Which::Speed => &self.speed,
        }
    }

    /// Compact-coordinate images of a and b.
    pub fn y_range(&self) -> (f64, f64) {
        (self.coord.to_y(self.lo), self.coord.to_y(self.hi))
    }

    pub fn to_x(&self, y: f64) -> f64 {
        self.coord.to_x(y)
    }

    pub fn to_y(&self, x: f64) -> f64 {
        self.coord.to_y(x)
    }

    /// Same spec with the reference point moved (s, m renormalized there).
    pub fn with_reference(&self, c: f64) -> Result<Self, ScaleSpeedError> {
        if !(c > self.lo && c < self.hi) {
            return Err(ScaleSpeedError::ReferenceOutside { c, lo: self.lo, hi: self.hi });
        }
        let mut out = self.clone();
        out.reference = c;
        if let Coordinate::RealLine { length, .. } = out.coord {
            out.coord = Coordinate::RealLine { center: c, length };
        }
        Ok(out)
    }

    /// μ((x0, x1]) for the chosen function, signed (negative if x1 < x0).
    /// Infinite arguments are allowed; the result may then be infinite.
    pub fn increment(&self, which: Which, x0: f64, x1: f64) -> f64 {
        if x0 == x1 {
            return 0.0;
        }
        match self.measure(which) {
            Measure::Tabulated(t) => t.eval(x1) - t.eval(x0),
            Measure::Density { density, .. } => {
                let r = if x0.is_finite() && x1.is_finite() {
                    adaptive(&|x: f64| density(x), x0, x1, QUAD_TOL)
                } else {
                    let (y0, y1) = (self.coord.to_y(x0), self.coord.to_y(x1));
                    let coord = self.coord;
                    adaptive(&|y: f64| density(coord.to_x(y)) * coord.jacobian(y), y0, y1, QUAD_TOL)
                };
                if r.converged {
                    r.value
                } else {
                    f64::INFINITY.copysign(x1 - x0)
                }
            }
        }
    }

    /// Normalized value s(x) or m(x) with s(c) = m(c) = 0.
    pub fn value(&self, which: Which, x: f64) -> f64 {
        self.increment(which, self.reference, x)
    }

    /// Density of the chosen measure with respect to the compact coordinate y.
    fn y_density(&self, which: Which, y: f64) -> f64 {
        let x = self.coord.to_x(y);
        match self.measure(which) {
            Measure::Density { density, .. } => density(x) * self.coord.jacobian(y),
            Measure::Tabulated(t) => {
                let xs = &t.xs;
                let j = xs.partition_point(|&v| v <= x).clamp(1, xs.len() - 1) - 1;
                (t.values[j + 1] - t.values[j]) / (xs[j + 1] - xs[j]) * self.coord.jacobian(y)
            }
        }
    }

    /// ∫ f dμ over (x0, x1] (signed), with f a function of x.
    pub fn stieltjes(&self, which: Which, f: &dyn Fn(f64) -> f64, x0: f64, x1: f64) -> f64 {
        if x0 == x1 {
            return 0.0;
        }
        match self.measure(which) {
            Measure::Tabulated(t) => t.stieltjes(f, x0, x1),
            Measure::Density { density, .. } => {
                if x0.is_finite() && x1.is_finite() {
                    adaptive(&|x: f64| f(x) * density(x), x0, x1, QUAD_TOL).value
                } else {
                    let (y0, y1) = (self.coord.to_y(x0), self.coord.to_y(x1));
                    let g = |y: f64| f(self.coord.to_x(y)) * self.y_density(which, y);
                    adaptive(&g, y0, y1, QUAD_TOL).value
                }
            }
        }
    }

    /// Feller's iterated integrals at an endpoint, with c the spec's reference point.
    pub fn feller_integrals(&self, endpoint: Endpoint) -> FellerIntegrals {
        FellerIntegrals {
            access: self.ladder(endpoint, Which::Scale, Which::Speed, &LadderConfig::default()),
            enter: self.ladder(endpoint, Which::Speed, Which::Scale, &LadderConfig::default()),
        }
    }

    /// Feller integrals with an explicit cutoff ladder.
    pub fn feller_integrals_with(&self, endpoint: Endpoint, cfg: &LadderConfig) -> FellerIntegrals {
        FellerIntegrals {
            access: self.ladder(endpoint, Which::Scale, Which::Speed, cfg),
            enter: self.ladder(endpoint, Which::Speed, Which::Scale, cfg),
        }
    }

    /// ∫ inner(x, c) d outer(x) toward `endpoint`, over the cutoff ladder.
    fn ladder(&self, endpoint: Endpoint, outer: Which, inner: Which, cfg: &LadderConfig) -> LadderResult {
        let (ylo, yhi) = self.y_range();
        let yc = self.coord.to_y(self.reference);
        let (y_end, dir) = match endpoint {
            Endpoint::A => (ylo, 1.0),
            Endpoint::B => (yhi, -1.0),
        };
        let eps0 = (cfg.eps0_fraction * (yhi - ylo)).min(0.5 * (yc - y_end).abs());
        let c = self.reference;
        let x_at = |k: usize| self.coord.to_x(y_end + dir * eps0 * 0.5f64.powi(k as i32));
        // inner measure between x and c, positive
        let inner_abs = |x0: f64, x1: f64| self.increment(inner, x0, x1).abs();

        let x0 = x_at(0);
        let mut total = self.stieltjes(outer, &|x| inner_abs(x, c), x0, c).abs();
        let mut inner_to_c = inner_abs(x0, c);
        let mut increments = Vec::with_capacity(cfg.levels);
        for k in 1..=cfg.levels {
            let (near, far) = (x_at(k), x_at(k - 1));
            let base = inner_to_c;
            let inc = self.stieltjes(outer, &|x| base + inner_abs(x, far), near, far).abs();
            inner_to_c += inner_abs(near, far);
            if !inc.is_finite() || !inner_to_c.is_finite() {
                return LadderResult { value: Extended::Infinite, increments, verdict: Verdict::Divergent };
            }
            total += inc;
            increments.push(inc);
        }
        let last = increments[cfg.levels - 1];
        let prev = increments[cfg.levels - 2];
        let ratio = if prev > 0.0 { last / prev } else { 0.0 };
        if last <= cfg.fraction * total {
            let tail = if ratio < 1.0 { last * ratio / (1.0 - ratio) } else { 0.0 };
            LadderResult { value: Extended::Finite(total + tail), increments, verdict: Verdict::Convergent }
        } else if ratio >= cfg.divergent_ratio {
            LadderResult { value: Extended::Infinite, increments, verdict: Verdict::Divergent }
        } else {
            LadderResult { value: Extended::Finite(total), increments, verdict: Verdict::Undecided }
        }
    }

    /// Feller classification of one endpoint.
    pub fn classify_boundary(&self, endpoint: Endpoint) -> Result<BoundaryClass, ScaleSpeedError> {
        let fi = self.feller_integrals(endpoint);
        for (r, name) in [(&fi.access, "access"), (&fi.enter, "enter")] {
            if r.verdict == Verdict::Undecided {
                return Err(ScaleSpeedError::IndeterminateDivergence { endpoint, integral: name });
            }
        }
        Ok(BoundaryClass::from_flags(fi.access.value.is_finite(), fi.enter.value.is_finite()))
    }

    /// Both classes, in endpoint order.
    pub fn classify(&self) -> Result<[BoundaryClass; 2], ScaleSpeedError> {
        Ok([self.classify_boundary(Endpoint::A)?, self.classify_boundary(Endpoint::B)?])
    }
}

/// Cutoff ladder ε_k = ε₀·2^{−k}, k = 0..levels.
#[derive(Debug, Clone, Copy)]
pub struct LadderConfig {
    pub levels: usize,
    /// ε₀ as a fraction of the (compact) interval length.
    pub eps0_fraction: f64,
    /// Convergence declared once the last increment is below this fraction of the running value.
    pub fraction: f64,
    /// Divergence declared when increments stop shrinking at least this fast.
    pub divergent_ratio: f64,
}

impl Default for LadderConfig {
    fn default() -> Self {
        LadderConfig { levels: 20, eps0_fraction: 0.1, fraction: 1e-3, divergent_ratio: 0.5 }
    }
}

/// Extended non-negative real.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Extended {
    Finite(f64),
    Infinite,
}

impl Extended {
    pub fn is_finite(self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Extended::Finite(v) => v,
            Extended::Infinite => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Convergent,
    Divergent,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderResult {
    pub value: Extended,
    pub increments: Vec<f64>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FellerIntegrals {
    pub access: LadderResult,
    pub enter: LadderResult,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryKind {
    Regular,
    Exit,
    Entrance,
    Natural,
}

impl fmt::Display for BoundaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryClass {
    pub accessible: bool,
    pub enterable: bool,
    pub kind: BoundaryKind,
}

impl BoundaryClass {
    pub fn from_flags(accessible: bool, enterable: bool) -> Self {
        let kind = match (accessible, enterable) {
            (true, true) => BoundaryKind::Regular,
            (true, false) => BoundaryKind::Exit,
            (false, true) => BoundaryKind::Entrance,
            (false, false) => BoundaryKind::Natural,
        };
        BoundaryClass { accessible, enterable, kind }
    }

    pub fn of_kind(kind: BoundaryKind) -> Self {
        match kind {
            BoundaryKind::Regular => Self::from_flags(true, true),
            BoundaryKind::Exit => Self::from_flags(true, false),
            BoundaryKind::Entrance => Self::from_flags(false, true),
            BoundaryKind::Natural => Self::from_flags(false, false),
        }
    }

    /// γ = 1 iff accessible.
    pub fn gamma(&self) -> u8 {
        u8::from(self.accessible)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bm01() -> DiffusionSpec {
        DiffusionSpec::new(0.0, 1.0, 0.5, Measure::density("1", |_| 1.0), Measure::density("2", |_| 2.0), 1.0).unwrap()
    }

    fn power_spec(sp: f64, mp: f64) -> DiffusionSpec {
        DiffusionSpec::new(
            0.0,
            1.0,
            0.5,
            Measure::density("s", move |x: f64| x.powf(sp)),
            Measure::density("m", move |x: f64| x.powf(mp)),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn increments_and_values() {
        let s = bm01();
        assert!((s.value(Which::Scale, 0.0) + 0.5).abs() < 1e-14);
        assert!((s.value(Which::Speed, 1.0) - 1.0).abs() < 1e-14);
        assert!((s.increment(Which::Speed, 0.25, 0.75) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn bm_feller_integrals_match_closed_form() {
        // ∫₀^c 2(c − x) dx = c² with c = ½
        let fi = bm01().feller_integrals(Endpoint::A);
        assert_eq!(fi.access.verdict, Verdict::Convergent);
        assert!((fi.access.value.as_f64() - 0.25).abs() < 1e-6, "{:?}", fi.access.value);
        assert!((fi.enter.value.as_f64() - 0.25).abs() < 1e-6);
    }

    #[test]
    fn four_kinds_at_zero() {
        let cases = [
            (bm01(), BoundaryKind::Regular),
            (power_spec(0.0, -1.0), BoundaryKind::Exit),
            (power_spec(-1.0, 0.0), BoundaryKind::Entrance),
            (power_spec(-1.0, -1.0), BoundaryKind::Natural),
        ];
        for (spec, kind) in cases {
            assert_eq!(spec.classify_boundary(Endpoint::A).unwrap().kind, kind);
            assert_eq!(spec.classify_boundary(Endpoint::B).unwrap().kind, BoundaryKind::Regular);
        }
    }

    #[test]
    fn bm_half_line_infinity_is_natural() {
        let spec = DiffusionSpec::from_sde(
            Arc::new(|_| 0.0),
            Arc::new(|_| 1.0),
            0.0,
            f64::INFINITY,
            1.0,
            1.0,
        )
        .unwrap();
        assert_eq!(spec.classify_boundary(Endpoint::B).unwrap().kind, BoundaryKind::Natural);
        assert_eq!(spec.classify_boundary(Endpoint::A).unwrap().kind, BoundaryKind::Regular);
    }

    #[test]
    fn sde_zero_drift_gives_identity_scale() {
        let spec =
            DiffusionSpec::from_sde(Arc::new(|_| 0.0), Arc::new(|_| 1.0), 0.0, 1.0, 0.5, 1.0).unwrap();
        for x in [0.1, 0.3, 0.9] {
            assert!((spec.value(Which::Scale, x) - (x - 0.5)).abs() < 1e-12);
            assert!((spec.value(Which::Speed, x) - 2.0 * (x - 0.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn sde_rejects_zero_sigma() {
        let e = DiffusionSpec::from_sde(Arc::new(|_| 0.0), Arc::new(|_| 0.0), 0.0, 1.0, 0.5, 1.0).unwrap_err();
        assert_eq!(e.code(), "scale_speed::NonPositiveDiffusion");
    }

    #[test]
    fn tabulated_matches_density() {
        let xs: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let t = Table::new(xs.clone(), xs.iter().map(|x| 2.0 * x).collect()).unwrap();
        let spec =
            DiffusionSpec::new(0.0, 1.0, 0.5, Measure::density("1", |_| 1.0), Measure::Tabulated(t), 1.0).unwrap();
        assert!((spec.stieltjes(Which::Speed, &|x| x, 0.0, 1.0) - 1.0).abs() < 1e-12);
        assert_eq!(spec.classify_boundary(Endpoint::A).unwrap().kind, BoundaryKind::Regular);
    }

    #[test]
    fn tables_reject_flat_pieces() {
        assert!(Table::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 1.0]).is_none());
    }
}
