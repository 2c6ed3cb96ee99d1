//! Reference diffusions and boundary data used by tests, benchmarks and examples.

use std::sync::Arc;

use crate::boundary::{Atom, Case, EndpointMode, FellerBoundaryData, JumpDensity, SideData};
use crate::grid::GridSpec;
use crate::scale::{DiffusionSpec, Endpoint, Measure};
use crate::source::Source;

/// Brownian motion on (0, 1) with generator ½ d²/dx²: s(x) = x, m(dx) = 2 dx.
pub fn bm_unit() -> DiffusionSpec {
    DiffusionSpec::new(0.0, 1.0, 0.5, Measure::density("1", |_| 1.0), Measure::density("2", |_| 2.0), 1.0)
        .expect("valid spec")
}

/// The four classification examples on (0, 1): endpoint 0 is Regular, Exit, Entrance, Natural.
pub fn classification_specs() -> [(&'static str, DiffusionSpec); 4] {
    let d = |label: &str, f: fn(f64) -> f64| Measure::density(label, f);
    let spec = |s: Measure, m: Measure| DiffusionSpec::new(0.0, 1.0, 0.5, s, m, 1.0).expect("valid spec");
    [
        ("regular", bm_unit()),
        ("exit", spec(d("1", |_| 1.0), d("1/x", |x| 1.0 / x))),
        ("entrance", spec(d("1/x", |x| 1.0 / x), d("x", |x| x))),
        ("natural", spec(d("1/x", |x| 1.0 / x), d("1/x", |x| 1.0 / x))),
    ]
}

/// s' = 1/(1 − x), m' = 1 on (0, 1): 0 regular, 1 entrance.
pub fn entrance_at_one() -> DiffusionSpec {
    DiffusionSpec::new(
        0.0,
        1.0,
        0.5,
        Measure::density("1/(1-x)", |x| 1.0 / (1.0 - x)),
        Measure::density("1", |_| 1.0),
        1.0,
    )
    .expect("valid spec")
}

/// Ornstein–Uhlenbeck dX = −X dt + dW on ℝ (both ends natural).
pub fn ornstein_uhlenbeck() -> DiffusionSpec {
    DiffusionSpec::from_sde(Arc::new(|x| -x), Arc::new(|_| 1.0), f64::NEG_INFINITY, f64::INFINITY, 0.0, 1.0)
        .expect("valid spec")
}

/// A boundary-value problem with everything needed to run all three oracles on it.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub spec: Arc<DiffusionSpec>,
    pub data: FellerBoundaryData,
    pub case: Case,
    pub g: Source,
    pub r: f64,
    /// Starting points compared across oracles.
    pub points: Vec<f64>,
    pub grid: GridSpec,
    /// Smooth (both ends regular, no jump densities): used for convergence-order checks.
    pub smooth: bool,
}

/// Sticky reflection at 0 (p2 = 1, p3 = 1), killing at 1 (q1 = 1).
pub fn sticky_killed() -> Fixture {
    Fixture {
        name: "sticky-killed",
        spec: Arc::new(bm_unit()),
        data: FellerBoundaryData::new(SideData::sticky(1.0, 1.0), SideData::killing(1.0)),
        case: Case::Four,
        g: Source::constant(1.0),
        r: 0.5,
        points: vec![0.0, 0.5, 1.0],
        grid: GridSpec::default(),
        smooth: true,
    }
}

/// Conservative: sticky reflection at 0, plain reflection at 1, g(x) = x.
pub fn sticky_reflecting() -> Fixture {
    Fixture {
        name: "sticky-reflecting",
        spec: Arc::new(bm_unit()),
        data: FellerBoundaryData::new(SideData::sticky(1.0, 1.0), SideData::sticky(1.0, 0.0)),
        case: Case::Four,
        g: Source::new("x", |x| x),
        r: 0.5,
        points: vec![0.0, 0.25, 1.0],
        grid: GridSpec::default(),
        smooth: true,
    }
}

/// Elastic killing, reflection, stagnancy and jumps at both ends.
pub fn elastic_jumps() -> Fixture {
    let mut a = SideData { kill: 0.5, reflect: 1.0, stick: 0.2, ..Default::default() };
    a.jumps.atoms.push(Atom { x: 0.3, mass: 2.0 });
    a.jumps.far_end = 0.5;
    let mut b = SideData { kill: 0.0, reflect: 1.0, stick: 0.5, ..Default::default() };
    b.jumps.density = Some(JumpDensity::new("1", 0.6, 0.95, |_| 1.0));
    b.jumps.atoms.push(Atom { x: 0.1, mass: 0.5 });
    Fixture {
        name: "elastic-jumps",
        spec: Arc::new(bm_unit()),
        data: FellerBoundaryData::new(a, b),
        case: Case::Four,
        g: Source::new("1+x", |x| 1.0 + x),
        r: 0.5,
        points: vec![0.0, 0.4, 1.0],
        grid: GridSpec::default(),
        smooth: false,
    }
}

/// Case 1°: entrance point 1 excluded; sticky reflection at 0.
pub fn entrance_excluded() -> Fixture {
    Fixture {
        name: "entrance-excluded",
        spec: Arc::new(entrance_at_one()),
        data: FellerBoundaryData::new(SideData::sticky(1.0, 0.5), SideData::default())
            .with_mode(Endpoint::B, EndpointMode::Excluded),
        case: Case::One,
        g: Source::new("x", |x| x),
        r: 1.0,
        points: vec![0.0, 0.5],
        grid: GridSpec::default(),
        smooth: false,
    }
}

/// Case 2°: entrance point 1 included and left immediately; jump from 0 to 1.
pub fn entrance_entering() -> Fixture {
    let mut a = SideData { kill: 0.3, reflect: 1.0, stick: 0.5, ..Default::default() };
    a.jumps.far_end = 1.0;
    Fixture {
        name: "entrance-entering",
        spec: Arc::new(entrance_at_one()),
        data: FellerBoundaryData::new(a, SideData::default()).with_mode(Endpoint::B, EndpointMode::Entering),
        case: Case::Two,
        g: Source::new("1+x", |x| 1.0 + x),
        r: 1.0,
        points: vec![0.0, 0.5, 1.0],
        grid: GridSpec::default(),
        smooth: false,
    }
}

/// Case 2°: entrance point 1 included with stagnancy, killing and jumps back into the interior.
pub fn entrance_sticky() -> Fixture {
    let mut a = SideData::sticky(1.0, 0.5);
    a.jumps.far_end = 0.7;
    let mut b = SideData { kill: 0.5, stick: 1.0, ..Default::default() };
    b.jumps.atoms.push(Atom { x: 0.5, mass: 1.0 });
    b.jumps.far_end = 0.5;
    Fixture {
        name: "entrance-sticky",
        spec: Arc::new(entrance_at_one()),
        data: FellerBoundaryData::new(a, b),
        case: Case::Two,
        g: Source::new("1+x", |x| 1.0 + x),
        r: 1.0,
        points: vec![0.0, 0.5, 1.0],
        grid: GridSpec::default(),
        smooth: false,
    }
}

/// Case 3°: Ornstein–Uhlenbeck with sticky points at ±∞ that jump back into the interior.
pub fn ou_sticky_infinity() -> Fixture {
    let mut a = SideData { kill: 0.2, stick: 1.0, ..Default::default() };
    a.jumps.atoms.push(Atom { x: -1.0, mass: 1.0 });
    let mut b = SideData { stick: 0.5, ..Default::default() };
    b.jumps.atoms.push(Atom { x: 0.5, mass: 1.0 });
    b.jumps.far_end = 0.5;
    Fixture {
        name: "ou-sticky-infinity",
        spec: Arc::new(ornstein_uhlenbeck()),
        data: FellerBoundaryData::new(a, b),
        case: Case::Three,
        g: Source::new("1/(1+x^2)", |x| 1.0 / (1.0 + x * x)).with_end(Endpoint::A, 0.0).with_end(Endpoint::B, 0.0),
        r: 1.0,
        points: vec![f64::NEG_INFINITY, 0.0, f64::INFINITY],
        grid: GridSpec { cut: [5e-3, 5e-3], ..GridSpec::default() },
        smooth: false,
    }
}

/// All fixtures spanning the four cases.
pub fn all() -> Vec<Fixture> {
    vec![
        sticky_killed(),
        sticky_reflecting(),
        elastic_jumps(),
        entrance_excluded(),
        entrance_entering(),
        entrance_sticky(),
        ou_sticky_infinity(),
    ]
}
