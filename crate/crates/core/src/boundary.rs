//! Feller boundary data, the functionals Φ_a, Φ_b, and the extended resolvent.
//!
//! Conventions. Side data are written from the point of view of their own endpoint:
//! at a, Φ_a(f) = p1 f(a) − p2 D_s f(a) + p3 L f(a) − ∫ (f − f(a)) dp4 with p4 on (a, b];
//! at b the sign of the D_s term flips. The mass p4({b}) is a dedicated field and always
//! pairs with the actual value f(b), so every included endpoint carrying data satisfies
//! Φ(f) = 0 (no separate atom-coupling form is needed).

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::eigen::EigenSolution;
use crate::minimal::{MinimalError, MinimalImage, ResolventKernel};
use crate::quad;
use crate::scale::{BoundaryClass, BoundaryKind, DiffusionSpec, Endpoint, RealFn, Which};
use crate::source::Source;

#[derive(Debug, Clone, Error)]
pub enum BoundaryError {
    #[error("invalid boundary data: {}", .0.failures().join("; "))]
    InvalidBoundaryData(Box<ValidationReport>),
    #[error("missing {what} at endpoint {side}")]
    MissingEndpointData { side: Endpoint, what: &'static str },
    #[error("endpoint {0} is not accessible")]
    InaccessibleBoundary(Endpoint),
    #[error("boundary system is singular (determinant {0:e})")]
    SingularSystem(f64),
    #[error("declared case {declared} does not match the boundary classes and modes (derived {derived})")]
    CaseMismatch { declared: Case, derived: Case },
    #[error("endpoint modes are inconsistent with the boundary classes: {0}")]
    BadMode(String),
    #[error(transparent)]
    Minimal(#[from] MinimalError),
}

impl BoundaryError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::InvalidBoundaryData(_) => "feller_bc::InvalidBoundaryData",
            Self::MissingEndpointData { .. } => "feller_bc::MissingEndpointData",
            Self::InaccessibleBoundary(_) => "feller_bc::InaccessibleBoundary",
            Self::SingularSystem(_) => "feller_bc::SingularSystem",
            Self::CaseMismatch { .. } => "feller_bc::CaseMismatch",
            Self::BadMode(_) => "feller_bc::BadMode",
            Self::Minimal(e) => e.code(),
        }
    }
}

/// A point mass of the jumping-in measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub x: f64,
    pub mass: f64,
}

/// Density part of a jumping-in measure, supported on [lo, hi].
#[derive(Clone)]
pub struct JumpDensity {
    pub density: RealFn,
    pub label: String,
    pub lo: f64,
    pub hi: f64,
}

impl fmt::Debug for JumpDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "JumpDensity({} on [{}, {}])", self.label, self.lo, self.hi)
    }
}

impl JumpDensity {
    pub fn new(label: impl Into<String>, lo: f64, hi: f64, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        JumpDensity { density: Arc::new(f), label: label.into(), lo, hi }
    }

    /// ∫ h ρ dx, split at the given breakpoints.
    pub fn integrate(&self, h: &dyn Fn(f64) -> f64, breaks: &[f64]) -> f64 {
        let rho = &self.density;
        let mut pts = vec![self.lo];
        pts.extend(breaks.iter().copied().filter(|&x| x > self.lo && x < self.hi));
        pts.push(self.hi);
        let cells: Vec<f64> = pts
            .windows(2)
            .map(|w| quad::adaptive(&|x| h(x) * rho(x), w[0], w[1], 1e-11).value)
            .collect();
        quad::pairwise_sum(&cells)
    }

    pub fn mass(&self) -> f64 {
        quad::adaptive(&|x| (self.density)(x), self.lo, self.hi, 1e-12).value
    }
}

/// Jumping-in measure p4 (on (a, b]) or q4 (on [a, b)).
#[derive(Debug, Clone, Default)]
pub struct JumpMeasure {
    /// Atoms strictly inside (a, b).
    pub atoms: Vec<Atom>,
    /// Mass on the opposite endpoint: p4({b}) for side a, q4({a}) for side b.
    pub far_end: f64,
    pub density: Option<JumpDensity>,
    /// The density is declared to have infinite mass near the own endpoint and is
    /// represented by its truncation to [lo, hi].
    pub truncated_infinite: bool,
}

impl JumpMeasure {
    pub fn is_zero(&self) -> bool {
        self.atoms.iter().all(|a| a.mass == 0.0) && self.far_end == 0.0 && self.density.is_none()
    }

    /// ∫ h dp4 over the interior (atoms and density, not the far endpoint).
    pub fn integrate_interior(&self, h: &dyn Fn(f64) -> f64, breaks: &[f64]) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| a.mass * h(a.x)).sum();
        atoms + self.density.as_ref().map_or(0.0, |d| d.integrate(h, breaks))
    }

    pub fn interior_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum::<f64>() + self.density.as_ref().map_or(0.0, JumpDensity::mass)
    }

    pub fn total_mass(&self) -> f64 {
        self.interior_mass() + self.far_end
    }
}

/// (p1, p2, p3, p4) at a, or (q1, q2, q3, q4) at b.
#[derive(Debug, Clone, Default)]
pub struct SideData {
    /// Killing rate p1.
    pub kill: f64,
    /// Reflection coefficient p2.
    pub reflect: f64,
    /// Stagnancy p3.
    pub stick: f64,
    pub jumps: JumpMeasure,
}

impl SideData {
    pub fn sticky(reflect: f64, stick: f64) -> Self {
        SideData { reflect, stick, ..Default::default() }
    }

    pub fn killing(kill: f64) -> Self {
        SideData { kill, ..Default::default() }
    }

    /// Pure killing: the endpoint acts as an absorbing cemetery (Dirichlet condition).
    pub fn is_pure_killing(&self) -> bool {
        self.kill > 0.0 && self.reflect == 0.0 && self.stick == 0.0 && self.jumps.is_zero()
    }

    pub fn is_zero(&self) -> bool {
        self.kill == 0.0 && self.reflect == 0.0 && self.stick == 0.0 && self.jumps.is_zero()
    }
}

/// How an endpoint belongs to the state space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EndpointMode {
    /// Included, governed by its Φ functional.
    Data,
    /// Included entrance point that is irregular for itself: left immediately, value = interior limit.
    Entering,
    /// Not part of the state space (inaccessible endpoints only).
    Excluded,
}

#[derive(Debug, Clone)]
pub struct FellerBoundaryData {
    pub sides: [SideData; 2],
    pub modes: [EndpointMode; 2],
}

impl FellerBoundaryData {
    pub fn new(a: SideData, b: SideData) -> Self {
        FellerBoundaryData { sides: [a, b], modes: [EndpointMode::Data; 2] }
    }

    pub fn with_mode(mut self, e: Endpoint, mode: EndpointMode) -> Self {
        self.modes[e.index()] = mode;
        self
    }

    pub fn side(&self, e: Endpoint) -> &SideData {
        &self.sides[e.index()]
    }

    pub fn mode(&self, e: Endpoint) -> EndpointMode {
        self.modes[e.index()]
    }

    pub fn included(&self, e: Endpoint) -> bool {
        self.mode(e) != EndpointMode::Excluded
    }

    pub fn is_conservative(&self) -> bool {
        self.sides.iter().all(|s| s.kill == 0.0)
    }
}

/// The four extension cases, by accessibility and inclusion of the endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Case {
    /// One endpoint accessible, the other excluded.
    One,
    /// One endpoint accessible, the other inaccessible but included.
    Two,
    /// Neither endpoint accessible.
    Three,
    /// Both endpoints accessible.
    Four,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Case::One => "1°",
            Case::Two => "2°",
            Case::Three => "3°",
            Case::Four => "4°",
        })
    }
}

impl std::str::FromStr for Case {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().trim_end_matches('°') {
            "1" => Ok(Case::One),
            "2" => Ok(Case::Two),
            "3" => Ok(Case::Three),
            "4" => Ok(Case::Four),
            other => Err(format!("unknown case '{other}' (expected 1, 2, 3 or 4)")),
        }
    }
}

/// Derive the case from the classes and the declared modes.
pub fn derive_case(classes: [BoundaryClass; 2], modes: [EndpointMode; 2]) -> Result<Case, BoundaryError> {
    for (k, e) in [Endpoint::A, Endpoint::B].into_iter().enumerate() {
        let c = classes[k];
        match modes[k] {
            EndpointMode::Excluded if c.accessible => {
                return Err(BoundaryError::BadMode(format!("accessible endpoint {e} cannot be excluded")))
            }
            EndpointMode::Entering if c.kind != BoundaryKind::Entrance => {
                return Err(BoundaryError::BadMode(format!("endpoint {e} is {:?}, not entrance", c.kind)))
            }
            _ => {}
        }
    }
    Ok(match (classes[0].accessible, classes[1].accessible) {
        (true, true) => Case::Four,
        (true, false) | (false, true) => {
            let other = if classes[0].accessible { 1 } else { 0 };
            if modes[other] == EndpointMode::Excluded {
                Case::One
            } else {
                Case::Two
            }
        }
        (false, false) => Case::Three,
    })
}

/// One named validation check.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub side: Endpoint,
    pub passed: bool,
    pub value: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub case: Option<Case>,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<String> {
        self.checks.iter().filter(|c| !c.passed).map(|c| format!("{} at {}: {}", c.name, c.side, c.detail)).collect()
    }

    pub fn check(&self, name: &str, side: Endpoint) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name && c.side == side)
    }

    pub fn into_result(self) -> Result<Self, BoundaryError> {
        if self.passed() {
            Ok(self)
        } else {
            Err(BoundaryError::InvalidBoundaryData(Box::new(self)))
        }
    }
}

fn cond_name(side: Endpoint, n: u8) -> String {
    match side {
        Endpoint::A => format!("pcond{n}"),
        Endpoint::B => format!("qcond{n}"),
    }
}

/// Check the data against the classes: sign and support constraints, the integrability
/// condition (pcond1/qcond1), the non-degeneracy condition (pcond2/qcond2) and the
/// mode-specific constraints on inaccessible endpoints.
pub fn validate(data: &FellerBoundaryData, spec: &DiffusionSpec, classes: [BoundaryClass; 2]) -> ValidationReport {
    let mut checks = Vec::new();
    let case = match derive_case(classes, data.modes) {
        Ok(c) => Some(c),
        Err(e) => {
            checks.push(Check { name: "mode".into(), side: Endpoint::A, passed: false, value: None, detail: e.to_string() });
            None
        }
    };
    for side in [Endpoint::A, Endpoint::B] {
        validate_side(data, spec, classes, side, &mut checks);
    }
    ValidationReport { case, checks }
}

fn validate_side(
    data: &FellerBoundaryData,
    spec: &DiffusionSpec,
    classes: [BoundaryClass; 2],
    side: Endpoint,
    checks: &mut Vec<Check>,
) {
    let d = data.side(side);
    let class = classes[side.index()];
    let mode = data.mode(side);
    let mut push = |name: String, passed: bool, value: Option<f64>, detail: String| {
        checks.push(Check { name, side, passed, value, detail });
    };
    let j = &d.jumps;
    let coefficients = [d.kill, d.reflect, d.stick, j.far_end];
    let nonneg = coefficients.iter().all(|c| c.is_finite() && *c >= 0.0)
        && j.atoms.iter().all(|a| a.mass.is_finite() && a.mass >= 0.0);
    push("nonnegative".into(), nonneg, None, "rates and masses must be finite and non-negative".into());

    let (lo, hi) = (spec.lo(), spec.hi());
    let atoms_inside = j.atoms.iter().all(|a| a.x > lo && a.x < hi);
    let density_ok = j.density.as_ref().map_or(true, |den| {
        den.lo.is_finite() && den.hi.is_finite() && den.lo >= lo && den.hi <= hi && den.lo < den.hi && {
            let samples = (0..=64).map(|k| den.lo + (den.hi - den.lo) * k as f64 / 64.0);
            samples.map(|x| (den.density)(x)).all(|v| v.is_finite() && v >= 0.0)
        }
    });
    let far_ok = j.far_end == 0.0 || data.included(side.other());
    push(
        "support".into(),
        atoms_inside && density_ok && far_ok,
        None,
        "atoms inside (a,b), density non-negative on a finite sub-interval, far-end mass only on an included endpoint"
            .into(),
    );
    if j.truncated_infinite {
        let own = spec.endpoint(side);
        let ok = j.density.as_ref().is_some_and(|den| {
            let inner = if side == Endpoint::A { den.lo } else { den.hi };
            inner != own
        });
        push("truncation".into(), ok, None, "a truncated infinite density needs a truncation point off the endpoint".into());
    }

    match mode {
        EndpointMode::Excluded => {
            push("excluded-data".into(), d.is_zero(), None, "an excluded endpoint carries no data".into());
            return;
        }
        EndpointMode::Entering => {
            push(
                "entering-data".into(),
                d.is_zero(),
                None,
                "an entrance point left immediately has no killing, stagnancy or jumps".into(),
            );
            return;
        }
        EndpointMode::Data => {}
    }

    if !class.accessible {
        push("reflect-zero".into(), d.reflect == 0.0, Some(d.reflect), "no reflection at an inaccessible endpoint".into());
        push(
            "stagnancy".into(),
            d.stick > 0.0,
            Some(d.stick),
            "an included inaccessible endpoint that is not left immediately needs positive stagnancy".into(),
        );
        push("finite-jumps".into(), !j.truncated_infinite, None, "jumps from an inaccessible endpoint are finite".into());
        return;
    }
    if class.kind == BoundaryKind::Exit {
        push("reflect-zero".into(), d.reflect == 0.0, Some(d.reflect), "no reflection at an exit endpoint".into());
    }

    let weight = pcond1_weight(spec, class, side);
    let atoms: f64 = j.atoms.iter().map(|a| a.mass * weight(a.x)).sum();
    let dens = j
        .density
        .as_ref()
        .map_or(0.0, |den| quad::adaptive(&|x| (den.density)(x) * weight(x), den.lo, den.hi, 1e-8).value);
    let far = j.far_end * weight(spec.endpoint(side.other()));
    let value = atoms + dens + far;
    push(
        cond_name(side, 1),
        value.is_finite(),
        Some(value),
        "∫ min(1, hitting weight) d(jump measure) must be finite".into(),
    );

    let pure_kill = d.is_pure_killing();
    let ok2 = d.reflect + d.stick > 0.0 || j.truncated_infinite || pure_kill;
    let detail = if pure_kill && d.reflect + d.stick == 0.0 {
        "pure killing: the endpoint is absorbing (Dirichlet), accepted as degenerate".to_string()
    } else {
        "needs reflection + stagnancy > 0 or a jump measure of infinite mass near the endpoint".to_string()
    };
    push(cond_name(side, 2), ok2, Some(d.reflect + d.stick), detail);
}

/// x ↦ min(1, w(x)) with w = s-distance (regular) or ∫ |m(·, c)| ds (exit) from the endpoint.
fn pcond1_weight(spec: &DiffusionSpec, class: BoundaryClass, side: Endpoint) -> impl Fn(f64) -> f64 + '_ {
    let e = spec.endpoint(side);
    let c = spec.reference();
    let exit = class.kind == BoundaryKind::Exit;
    move |x: f64| {
        let w = if exit {
            let near = if side == Endpoint::A { x.min(c) } else { x.max(c) };
            let (x0, x1) = if side == Endpoint::A { (e, near) } else { (near, e) };
            spec.stieltjes(Which::Scale, &|y| spec.value(Which::Speed, y).abs(), x0, x1).abs()
        } else {
            spec.increment(Which::Scale, e.min(x), e.max(x)).abs()
        };
        w.min(1.0)
    }
}

/// Boundary data of a function at one endpoint: value, D_s f, and L f.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Jet {
    pub value: Option<f64>,
    pub ds: Option<f64>,
    pub lf: Option<f64>,
}

/// A function presented to Φ: interior values plus endpoint jets.
pub struct Probe<'a> {
    pub interior: &'a dyn Fn(f64) -> f64,
    pub ends: [Jet; 2],
    /// Breakpoints (e.g. grid nodes) for integrating against jump densities.
    pub breaks: &'a [f64],
}

/// Φ_side(f): killing, reflection, stagnancy and jump terms from the side's own endpoint.
pub fn phi(data: &SideData, side: Endpoint, probe: &Probe<'_>) -> Result<f64, BoundaryError> {
    let k = side.index();
    let jet = probe.ends[k];
    let missing = |what| BoundaryError::MissingEndpointData { side, what };
    let jumps = !data.jumps.is_zero();
    let fe = if data.kill > 0.0 || jumps { jet.value.ok_or(missing("f"))? } else { 0.0 };
    let mut out = data.kill * fe;
    if data.reflect > 0.0 {
        let d = jet.ds.ok_or(missing("D_s f"))?;
        out += match side {
            Endpoint::A => -data.reflect * d,
            Endpoint::B => data.reflect * d,
        };
    }
    if data.stick > 0.0 {
        out += data.stick * jet.lf.ok_or(missing("L f"))?;
    }
    if jumps {
        let interior = probe.interior;
        out -= data.jumps.integrate_interior(&|x| interior(x) - fe, probe.breaks);
        if data.jumps.far_end > 0.0 {
            let fo = probe.ends[1 - k]
                .value
                .ok_or(BoundaryError::MissingEndpointData { side: side.other(), what: "f" })?;
            out -= data.jumps.far_end * (fo - fe);
        }
    }
    Ok(out)
}

/// Φ_a, for a function given by a source f with explicit jets.
pub fn phi_a(data: &FellerBoundaryData, probe: &Probe<'_>) -> Result<f64, BoundaryError> {
    phi(data.side(Endpoint::A), Endpoint::A, probe)
}

pub fn phi_b(data: &FellerBoundaryData, probe: &Probe<'_>) -> Result<f64, BoundaryError> {
    phi(data.side(Endpoint::B), Endpoint::B, probe)
}

/// Interior values and jets of the normalized hitting functions: v/v(a) (for a) or u/u(b) (for b).
/// The opposite endpoint's value is 0: the function describes the process stopped there.
struct Basis {
    values: Vec<f64>,
    ends: [Jet; 2],
}

fn hitting_basis(eig: &EigenSolution, side: Endpoint) -> Basis {
    let l = &eig.limits;
    let grid = &eig.grid;
    let r = eig.r;
    let k = side.index();
    if !grid.classes[k].accessible {
        let mut ends = [Jet { value: Some(0.0), ds: Some(0.0), lf: Some(0.0) }; 2];
        ends[k] = Jet { value: Some(1.0), ds: None, lf: Some(r) };
        return Basis { values: vec![0.0; grid.len()], ends };
    }
    let (vals, norm, ds_a, ds_b) = match side {
        Endpoint::A => (&eig.v, l.v_at_a, l.dsv_at_a, l.dsv_at_b),
        Endpoint::B => (&eig.u, l.u_at_b, l.dsu_at_a, l.dsu_at_b),
    };
    let finite = |d: f64| d.is_finite().then_some(d / norm);
    let values = vals.iter().map(|x| x / norm).collect();
    let mut ends = [
        Jet { value: Some(0.0), ds: finite(ds_a), lf: Some(0.0) },
        Jet { value: Some(0.0), ds: finite(ds_b), lf: Some(0.0) },
    ];
    ends[k].value = Some(1.0);
    ends[k].lf = Some(r);
    Basis { values, ends }
}

/// Interior limit of the hitting basis function for `of` at endpoint `at`.
fn basis_limit(eig: &EigenSolution, of: Endpoint, at: Endpoint) -> f64 {
    let l = &eig.limits;
    if !eig.grid.class(of).accessible {
        return 0.0;
    }
    match (of, at) {
        (Endpoint::A, Endpoint::A) | (Endpoint::B, Endpoint::B) => 1.0,
        (Endpoint::A, Endpoint::B) => l.v_at_b / l.v_at_a,
        (Endpoint::B, Endpoint::A) => l.u_at_a / l.u_at_b,
    }
}

fn grid_fn<'a>(eig: &'a EigenSolution, values: &'a [f64]) -> impl Fn(f64) -> f64 + 'a {
    move |x| eig.grid.interpolate(values, x)
}

fn require_accessible(eig: &EigenSolution, side: Endpoint) -> Result<(), BoundaryError> {
    if eig.grid.class(side).accessible {
        Ok(())
    } else {
        Err(BoundaryError::InaccessibleBoundary(side))
    }
}

fn phi_basis(data: &FellerBoundaryData, eig: &EigenSolution, side: Endpoint, of: Endpoint) -> Result<f64, BoundaryError> {
    let basis = hitting_basis(eig, of);
    let f = grid_fn(eig, &basis.values);
    let probe = Probe { interior: &f, ends: basis.ends, breaks: &eig.grid.x };
    phi(data.side(side), side, &probe)
}

/// ψ(r) = Φ_side(v)/v(side): the Laplace exponent of the inverse local time at an accessible
/// endpoint, for the process stopped at the opposite endpoint.
pub fn psi(data: &FellerBoundaryData, eig: &EigenSolution, side: Endpoint) -> Result<f64, BoundaryError> {
    require_accessible(eig, side)?;
    phi_basis(data, eig, side, side)
}

/// ψ at a (the usual orientation).
pub fn psi_ab(data: &FellerBoundaryData, eig: &EigenSolution) -> Result<f64, BoundaryError> {
    psi(data, eig, Endpoint::A)
}

/// n[e^{−rT_other}; T_other < ∞] = −Φ_side(u)/u(other) for the excursion measure at `side`.
pub fn hitting_transform(data: &FellerBoundaryData, eig: &EigenSolution, side: Endpoint) -> Result<f64, BoundaryError> {
    require_accessible(eig, side)?;
    require_accessible(eig, side.other())?;
    Ok(-phi_basis(data, eig, side, side.other())?)
}

fn minimal_jets(img: &MinimalImage, g: &Source) -> [Jet; 2] {
    let spec = &img.grid.spec;
    [Endpoint::A, Endpoint::B].map(|e| {
        let k = e.index();
        Jet {
            value: Some(0.0),
            ds: img.end_ds[k],
            lf: g.at_end(e, spec).map(|ge| -ge),
        }
    })
}

/// N(g) = −Φ_side(R⁰_r g) = ς g(side) + n[∫_0^{T} e^{−rt} g(X_t) dt].
pub fn n_functional(
    data: &FellerBoundaryData,
    kernel: &ResolventKernel,
    g: &Source,
    side: Endpoint,
) -> Result<f64, BoundaryError> {
    let eig = kernel.eigen();
    require_accessible(eig, side)?;
    let img = kernel.apply_minimal(g)?;
    let f = grid_fn(eig, &img.values);
    let probe = Probe { interior: &f, ends: minimal_jets(&img, g), breaks: &eig.grid.x };
    Ok(-phi(data.side(side), side, &probe)?)
}

/// A = [[Φ_a(v)/v(a), Φ_a(u)/u(b)], [Φ_b(v)/v(a), Φ_b(u)/u(b)]] for two accessible endpoints.
pub fn matrix_a(data: &FellerBoundaryData, eig: &EigenSolution) -> Result<[[f64; 2]; 2], BoundaryError> {
    require_accessible(eig, Endpoint::A)?;
    require_accessible(eig, Endpoint::B)?;
    let mut a = [[0.0; 2]; 2];
    for (i, side) in [Endpoint::A, Endpoint::B].into_iter().enumerate() {
        for (j, of) in [Endpoint::A, Endpoint::B].into_iter().enumerate() {
            a[i][j] = phi_basis(data, eig, side, of)?;
        }
    }
    let det = det2(&a);
    if !(det > 1e-12) {
        return Err(BoundaryError::SingularSystem(det));
    }
    Ok(a)
}

pub fn det2(a: &[[f64; 2]; 2]) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

/// R_r g on the grid and at the included endpoints.
#[derive(Debug, Clone)]
pub struct ExtendedResolvent {
    pub r: f64,
    pub case: Case,
    pub grid: Arc<crate::grid::Grid>,
    /// Values at the grid nodes (the interior representation).
    pub values: Vec<f64>,
    /// R_r g at included endpoints.
    pub end_value: [Option<f64>; 2],
    /// Interior limits R_r g(a+), R_r g(b−).
    pub interior_limit: [f64; 2],
    /// D_s R_r g at accessible, enterable endpoints.
    pub end_ds: [Option<f64>; 2],
    /// g at the endpoints where it was available.
    pub g_end: [Option<f64>; 2],
    /// Coefficient matrix and right-hand side of the boundary system (unknowns in a, b order).
    pub system: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub det: f64,
    /// |Φ(R_r g)| re-evaluated at each Data endpoint.
    pub phi_residual: [Option<f64>; 2],
    pub minimal: MinimalImage,
}

impl ExtendedResolvent {
    /// Value at x: endpoint values at included endpoints, interpolation inside.
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

    /// Sup over nodes and included endpoints.
    pub fn sup_abs(&self) -> f64 {
        self.values.iter().chain(self.end_value.iter().flatten()).fold(0.0, |m, v| m.max(v.abs()))
    }

    /// The function as a domain-check candidate with L f = r f − g.
    pub fn candidate(&self, g: &Source) -> DomainCandidate {
        DomainCandidate {
            values: self.values.clone(),
            lf: self.values.iter().zip(g.sample(&self.grid)).map(|(f, g)| self.r * f - g).collect(),
            ends: [0, 1].map(|k| Jet {
                value: self.end_value[k],
                ds: self.end_ds[k],
                lf: match (self.end_value[k], self.g_end[k]) {
                    (Some(f), Some(g)) => Some(self.r * f - g),
                    _ => None,
                },
            }),
            interior_limit: self.interior_limit,
        }
    }
}

/// Solve for R_r g: interior = R⁰_r g + Σ_e F_e h_e with h_a = v/v(a), h_b = u/u(b) at accessible
/// endpoints; one equation per included endpoint (Φ = 0 with L f(e) = r F_e − g(e), or
/// F_e = interior limit for an entering endpoint).
pub fn extended_resolvent(
    data: &FellerBoundaryData,
    kernel: &ResolventKernel,
    g: &Source,
    declared: Option<Case>,
) -> Result<ExtendedResolvent, BoundaryError> {
    let eig = kernel.eigen();
    let grid = &eig.grid;
    let spec = &grid.spec;
    let r = eig.r;
    let case = derive_case(grid.classes, data.modes)?;
    if let Some(declared) = declared {
        if declared != case {
            return Err(BoundaryError::CaseMismatch { declared, derived: case });
        }
    }
    let img = kernel.apply_minimal(g)?;
    let g_end = [Endpoint::A, Endpoint::B].map(|e| g.at_end(e, spec));
    let slots: Vec<Endpoint> = [Endpoint::A, Endpoint::B].into_iter().filter(|&e| data.included(e)).collect();
    let bases: Vec<Basis> = slots.iter().map(|&e| hitting_basis(eig, e)).collect();
    // Each basis carries value 1 at its own slot and 0 at the other included endpoint.
    let slot_value = |b: &Basis, e: Endpoint, k: usize| -> Jet {
        let mut jet = b.ends[e.index()];
        jet.value = Some(if slots[k] == e { 1.0 } else { 0.0 });
        jet
    };
    let p0_fn = grid_fn(eig, &img.values);
    let p0 = Probe { interior: &p0_fn, ends: minimal_jets(&img, g), breaks: &grid.x };

    let n = slots.len();
    let mut a = vec![vec![0.0; n]; n];
    let mut rhs = vec![0.0; n];
    for (i, &e) in slots.iter().enumerate() {
        match data.mode(e) {
            EndpointMode::Data => {
                rhs[i] = -phi(data.side(e), e, &p0)?;
                for (j, b) in bases.iter().enumerate() {
                    let f = grid_fn(eig, &b.values);
                    let ends = [Endpoint::A, Endpoint::B].map(|s| slot_value(b, s, j));
                    a[i][j] = phi(data.side(e), e, &Probe { interior: &f, ends, breaks: &grid.x })?;
                }
            }
            EndpointMode::Entering => {
                rhs[i] = img.end_value[e.index()];
                for (j, &s) in slots.iter().enumerate() {
                    a[i][j] = if s == e { 1.0 } else { -basis_limit(eig, s, e) };
                }
            }
            EndpointMode::Excluded => unreachable!("excluded endpoints have no slot"),
        }
    }
    let (sol, det) = solve_small(&a, &rhs)?;

    let mut values = img.values.clone();
    for (j, b) in bases.iter().enumerate() {
        for (v, h) in values.iter_mut().zip(&b.values) {
            *v += sol[j] * h;
        }
    }
    let mut end_value = [None, None];
    for (j, &e) in slots.iter().enumerate() {
        end_value[e.index()] = Some(sol[j]);
    }
    let interior_limit = [Endpoint::A, Endpoint::B].map(|at| {
        img.end_value[at.index()]
            + slots.iter().enumerate().map(|(j, &s)| sol[j] * basis_limit(eig, s, at)).sum::<f64>()
    });
    let end_ds = [Endpoint::A, Endpoint::B].map(|at| {
        let k = at.index();
        if !(grid.classes[k].accessible && grid.classes[k].enterable) {
            return None;
        }
        let mut d = img.end_ds[k]?;
        for (j, b) in bases.iter().enumerate() {
            if grid.class(slots[j]).accessible {
                d += sol[j] * b.ends[k].ds?;
            }
        }
        Some(d)
    });

    let mut out = ExtendedResolvent {
        r,
        case,
        grid: grid.clone(),
        values,
        end_value,
        interior_limit,
        end_ds,
        g_end,
        system: a,
        rhs,
        det,
        phi_residual: [None, None],
        minimal: img.clone(),
    };
    let cand = out.candidate(g);
    for &e in &slots {
        if data.mode(e) == EndpointMode::Data {
            let f = grid_fn(eig, &cand.values);
            let probe = Probe { interior: &f, ends: cand.ends, breaks: &grid.x };
            out.phi_residual[e.index()] = Some(phi(data.side(e), e, &probe)?.abs());
        }
    }
    Ok(out)
}

/// Solve a 0-, 1- or 2-dimensional linear system.
fn solve_small(a: &[Vec<f64>], rhs: &[f64]) -> Result<(Vec<f64>, f64), BoundaryError> {
    match a.len() {
        0 => Ok((vec![], 1.0)),
        1 => {
            let d = a[0][0];
            if !(d.abs() > 1e-14) {
                return Err(BoundaryError::SingularSystem(d));
            }
            Ok((vec![rhs[0] / d], d))
        }
        _ => {
            let m = [[a[0][0], a[0][1]], [a[1][0], a[1][1]]];
            let d = det2(&m);
            let scale = m.iter().flatten().fold(0.0_f64, |s, x| s.max(x.abs())).max(1e-300);
            if !(d.abs() > 1e-14 * scale * scale) {
                return Err(BoundaryError::SingularSystem(d));
            }
            let x0 = (rhs[0] * m[1][1] - m[0][1] * rhs[1]) / d;
            let x1 = (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / d;
            Ok((vec![x0, x1], d))
        }
    }
}

/// A candidate member of the generator domain: node values of f and L f plus endpoint jets.
#[derive(Debug, Clone)]
pub struct DomainCandidate {
    pub values: Vec<f64>,
    pub lf: Vec<f64>,
    pub ends: [Jet; 2],
    /// f(a+), f(b−) (or the closest node values when unknown).
    pub interior_limit: [f64; 2],
}

impl DomainCandidate {
    /// Sample f and L f from sources. Endpoint values come from the sources; D_s at closed
    /// endpoints is the one-sided difference corrected by L f over the half cell.
    pub fn from_sources(grid: &crate::grid::Grid, f: &Source, lf: &Source) -> Self {
        let spec = &grid.spec;
        let values = f.sample(grid);
        let lfv = lf.sample(grid);
        let n = grid.len();
        let ends = [Endpoint::A, Endpoint::B].map(|e| {
            let k = e.index();
            let value = f.at_end(e, spec);
            let lfe = lf.at_end(e, spec);
            let ds = if grid.closed[k] {
                let (i0, i1) = if k == 0 { (0, 1) } else { (n - 2, n - 1) };
                let slope = (values[i1] - values[i0]) / grid.ds[i0];
                let half = 0.5 * grid.dm[i0];
                lfe.map(|l| if k == 0 { slope - l * half } else { slope + l * half })
            } else {
                None
            };
            Jet { value, ds, lf: lfe }
        });
        let interior_limit = [values[0], values[n - 1]];
        DomainCandidate { values, lf: lfv, ends, interior_limit }
    }
}

/// One membership condition with its residual.
#[derive(Debug, Clone, Serialize)]
pub struct Condition {
    pub name: String,
    pub residual: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DomainReport {
    pub conditions: Vec<Condition>,
    pub verdict: bool,
}

/// Report Φ(f) = 0 at Data endpoints, continuity of f and L f at included endpoints,
/// D_s f = 0 at entrance endpoints, and consistency of L f with the discrete D_m D_s f.
pub fn generator_domain_check(
    data: &FellerBoundaryData,
    grid: &crate::grid::Grid,
    cand: &DomainCandidate,
    tol: f64,
) -> DomainReport {
    let n = grid.len();
    let mut conditions = Vec::new();
    let mut push = |name: String, residual: f64| {
        conditions.push(Condition { passed: residual <= tol, residual, name });
    };
    let f = |x: f64| grid.interpolate(&cand.values, x);
    for e in [Endpoint::A, Endpoint::B] {
        let k = e.index();
        match data.mode(e) {
            EndpointMode::Excluded => {}
            mode => {
                if mode == EndpointMode::Data {
                    let probe = Probe { interior: &f, ends: cand.ends, breaks: &grid.x };
                    let r = phi(data.side(e), e, &probe).map_or(f64::INFINITY, f64::abs);
                    push(format!("phi_{e}"), r);
                }
                // An inaccessible endpoint with data is a holding point left by jumps or killing:
                // nothing ties f(e) to f(e±).
                let holding = !grid.classes[k].accessible && mode == EndpointMode::Data;
                if !holding {
                    let cont = cand.ends[k].value.map_or(f64::INFINITY, |v| (v - cand.interior_limit[k]).abs());
                    push(format!("continuity_f_{e}"), cont);
                    let node = if k == 0 { 1 } else { n - 2 };
                    let lf_cont = cand.ends[k].lf.map_or(0.0, |l| {
                        // L f at the first interior node, extrapolated to the end by one cell.
                        let inner = if k == 0 { 2 } else { n - 3 };
                        let extrap = cand.lf[node] + (cand.lf[node] - cand.lf[inner]);
                        (l - extrap).abs()
                    });
                    push(format!("continuity_lf_{e}"), lf_cont);
                }
            }
        }
        if grid.classes[k].kind == BoundaryKind::Entrance {
            let (i0, i1) = if k == 0 { (0, 1) } else { (n - 2, n - 1) };
            let d = (cand.values[i1] - cand.values[i0]) / grid.ds[i0];
            push(format!("ds_vanishes_{e}"), d.abs());
        }
    }
    // The three-point stencil is second order only where neighbouring cells are comparable,
    // so the geometric runs toward cut endpoints are left out.
    let disc = grid.generator(&cand.values);
    let comparable = |d: &[f64], i: usize| (d[i] / d[i - 1]).clamp(0.0, 10.0).ln().abs() < 0.05;
    let gen = (2..n - 2)
        .filter(|&i| comparable(&grid.ds, i) && comparable(&grid.dm, i))
        .map(|i| (disc[i] - cand.lf[i]).abs())
        .fold(0.0, f64::max);
    push("generator_consistency".into(), gen);
    let verdict = conditions.iter().all(|c| c.passed);
    DomainReport { conditions, verdict }
}

/// Convenience: validate, then fail with the aggregated report.
pub fn validated(
    data: &FellerBoundaryData,
    spec: &DiffusionSpec,
    classes: [BoundaryClass; 2],
) -> Result<ValidationReport, BoundaryError> {
    validate(data, spec, classes).into_result()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::{solve, PicardConfig};
    use crate::grid::{Grid, GridSpec};
    use crate::scale::Measure;

    fn bm_kernel(r: f64) -> ResolventKernel {
        let spec = Arc::new(
            DiffusionSpec::new(0.0, 1.0, 0.5, Measure::density("1", |_| 1.0), Measure::density("2", |_| 2.0), 1.0)
                .unwrap(),
        );
        let classes = spec.classify().unwrap();
        let grid = Arc::new(Grid::build(spec, classes, &GridSpec::default()));
        ResolventKernel::new(Arc::new(solve(grid, r, &PicardConfig::default()).unwrap()))
    }

    #[test]
    fn sticky_psi_closed_form() {
        let k = bm_kernel(0.5);
        for beta in [0.0, 1.0] {
            let data = FellerBoundaryData::new(SideData::sticky(1.0, beta), SideData::killing(1.0));
            let p = psi_ab(&data, k.eigen()).unwrap();
            let want = 1.0 / 1.0_f64.tanh() + beta * 0.5;
            assert!((p - want).abs() < 1e-6, "{p} vs {want}");
        }
    }

    #[test]
    fn hitting_and_n() {
        let k = bm_kernel(0.5);
        let data = FellerBoundaryData::new(SideData::sticky(1.0, 0.0), SideData::killing(1.0));
        let h = hitting_transform(&data, k.eigen(), Endpoint::A).unwrap();
        assert!((h - 1.0 / 1.0_f64.sinh()).abs() < 1e-6, "{h}");
        let nf = n_functional(&data, &k, &Source::constant(1.0), Endpoint::A).unwrap();
        assert!((nf - 2.0 * 0.5_f64.tanh()).abs() < 1e-5, "{nf}");
    }

    #[test]
    fn conservative_resolvent_of_one() {
        let k = bm_kernel(0.5);
        let data = FellerBoundaryData::new(SideData::sticky(1.0, 1.0), SideData::sticky(1.0, 0.0));
        let res = extended_resolvent(&data, &k, &Source::constant(1.0), Some(Case::Four)).unwrap();
        let err = res.values.iter().chain(res.end_value.iter().flatten()).map(|v| (v - 2.0).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn pure_stagnancy_matrix() {
        let k = bm_kernel(0.5);
        let data = FellerBoundaryData::new(SideData::sticky(0.0, 1.0), SideData::sticky(0.0, 1.0));
        let a = matrix_a(&data, k.eigen()).unwrap();
        assert!((a[0][0] - 0.5).abs() < 1e-12 && (a[1][1] - 0.5).abs() < 1e-12);
        assert!(a[0][1].abs() < 1e-12 && a[1][0].abs() < 1e-12);
    }

    #[test]
    fn killing_gives_dirichlet() {
        let k = bm_kernel(0.5);
        let data = FellerBoundaryData::new(SideData::killing(1.0), SideData::sticky(1.0, 0.0));
        let res = extended_resolvent(&data, &k, &Source::constant(1.0), None).unwrap();
        assert!(res.end_value[0].unwrap().abs() < 1e-12);
    }

    #[test]
    fn case_mismatch() {
        let k = bm_kernel(0.5);
        let data = FellerBoundaryData::new(SideData::sticky(1.0, 0.0), SideData::sticky(1.0, 0.0));
        let err = extended_resolvent(&data, &k, &Source::constant(1.0), Some(Case::One)).unwrap_err();
        assert!(matches!(err, BoundaryError::CaseMismatch { .. }));
    }

    #[test]
    fn linear_function_fails_reflection() {
        let k = bm_kernel(0.5);
        let data = FellerBoundaryData::new(SideData::sticky(1.0, 0.0), SideData::sticky(1.0, 0.0));
        let cand = DomainCandidate::from_sources(&k.eigen().grid, &Source::new("x", |x| x), &Source::constant(0.0));
        let rep = generator_domain_check(&data, &k.eigen().grid, &cand, 1e-6);
        assert!(!rep.verdict);
        let phi_a = rep.conditions.iter().find(|c| c.name == "phi_a").unwrap();
        assert!((phi_a.residual - 1.0).abs() < 1e-9);
    }
}
