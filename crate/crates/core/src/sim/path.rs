//! Timed sample paths of the extended process: minimal pieces glued by the boundary
//! mechanism (local time at the endpoint, stagnancy, ε-restricted excursions).

use rand::Rng;
use rand_distr::Exp1;
use serde::Serialize;

use super::chain::TimedChain;
use super::jumps::{JumpSampler, Landing};
use super::SimError;
use crate::boundary::{EndpointMode, FellerBoundaryData};
use crate::scale::Endpoint;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PathState {
    At(f64),
    Cemetery,
}

impl PathState {
    pub fn x(self) -> Option<f64> {
        match self {
            PathState::At(x) => Some(x),
            PathState::Cemetery => None,
        }
    }
}

/// What the path is doing on a segment: the component of the excursion in progress, or
/// sitting at an endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Tag {
    Start,
    Stagnant(Endpoint),
    Reflect(Endpoint),
    Jump(Endpoint),
    Entering(Endpoint),
    Dead,
}

impl Tag {
    pub fn label(self) -> String {
        match self {
            Tag::Start => "start".into(),
            Tag::Stagnant(e) => format!("stagnant-{e}"),
            Tag::Reflect(e) => format!("reflect-{e}"),
            Tag::Jump(e) => format!("jump-{e}"),
            Tag::Entering(e) => format!("entering-{e}"),
            Tag::Dead => "dead".into(),
        }
    }
}

/// A piecewise-constant trajectory: `states[k]` holds on [times[k], times[k+1]) and the last
/// one until `end_time`.
#[derive(Debug, Clone, Default, Serialize)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub states: Vec<PathState>,
    pub tags: Vec<Tag>,
    pub end_time: f64,
    pub local_time: [f64; 2],
    pub stagnant_time: [f64; 2],
    /// Kill time.
    pub killed: Option<f64>,
    /// First accessible endpoint reached by a minimal path, with the time.
    pub hit: Option<(Endpoint, f64)>,
    /// The horizon ended the record before a single excursion was completed.
    pub truncated: bool,
    /// Excursions started from an endpoint.
    pub excursions: usize,
}

impl PathSample {
    pub fn push(&mut self, t: f64, s: PathState, tag: Tag) {
        self.times.push(t);
        self.states.push(s);
        self.tags.push(tag);
    }

    /// Segments (t0, t1, state, tag).
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, PathState, Tag)> + '_ {
        (0..self.times.len()).map(move |k| {
            let t1 = self.times.get(k + 1).copied().unwrap_or(self.end_time);
            (self.times[k], t1, self.states[k], self.tags[k])
        })
    }

    /// ∫_0^{end} e^{−rt} g(X_t) dt along the record (g = 0 at the cemetery).
    pub fn discounted_integral(&self, r: f64, g: &dyn Fn(f64) -> f64) -> f64 {
        self.segments()
            .map(|(t0, t1, s, _)| match s {
                PathState::At(x) if t1 > t0 => g(x) * ((-r * t0).exp() - (-r * t1).exp()) / r,
                _ => 0.0,
            })
            .sum()
    }

    /// Real time spent at the state `x`.
    pub fn time_at(&self, x: f64) -> f64 {
        self.segments().filter(|s| s.2 == PathState::At(x)).map(|s| s.1 - s.0).sum()
    }

    /// max_e |stagnant_e − ς_e · local_e| relative to the stagnant time: the stagnancy identity
    /// holds per visit by construction, so this is pure summation rounding (≲ 1e-15 × visits).
    pub fn stagnancy_defect(&self, stick: [f64; 2]) -> f64 {
        (0..2)
            .map(|k| {
                let expect = stick[k] * self.local_time[k];
                (self.stagnant_time[k] - expect).abs() / self.stagnant_time[k].max(expect).max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max)
    }
}

/// Which part of the excursion measure an excursion came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Component {
    Kill,
    Reflect,
    Jump,
    Far,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Terminal {
    Hit(Endpoint),
    Killed,
    /// Still running at the time limit.
    Censored,
}

/// One excursion away from an endpoint, drawn from the ε-restricted excursion measure.
#[derive(Debug, Clone, Serialize)]
pub struct ExcursionSample {
    pub component: Component,
    /// Total mass of the ε-restricted measure.
    pub mass: f64,
    pub path: PathSample,
    pub terminal: Terminal,
    pub lifetime: f64,
}

/// Rates of the ε-restricted excursion measure at one included endpoint.
#[derive(Debug, Clone)]
struct Mechanism {
    stick: f64,
    kill: f64,
    reflect: f64,
    jumps: JumpSampler,
}

impl Mechanism {
    fn new(chain: &TimedChain, data: &FellerBoundaryData, e: Endpoint) -> Self {
        let side = data.side(e);
        let reflect = match chain.eps_scale_gap(e) {
            Some(gap) if side.reflect > 0.0 => side.reflect / gap,
            _ => 0.0,
        };
        Mechanism { stick: side.stick, kill: side.kill, reflect, jumps: JumpSampler::new(&side.jumps) }
    }

    fn total(&self) -> f64 {
        self.kill + self.reflect + self.jumps.total()
    }

    fn pick<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<Component> {
        let total = self.total();
        if total <= 0.0 {
            return None;
        }
        let u = rng.random::<f64>() * total;
        Some(if u < self.kill {
            Component::Kill
        } else if u < self.kill + self.reflect {
            Component::Reflect
        } else {
            Component::Jump
        })
    }
}

#[derive(Debug, Clone, Copy)]
enum Loc {
    Node(usize, Tag),
    Boundary(Endpoint),
}

struct Assembler<'a> {
    chain: &'a TimedChain,
    data: &'a FellerBoundaryData,
    mech: [Option<Mechanism>; 2],
}

impl<'a> Assembler<'a> {
    fn new(chain: &'a TimedChain, data: &'a FellerBoundaryData) -> Self {
        let mech = [Endpoint::A, Endpoint::B]
            .map(|e| (data.mode(e) == EndpointMode::Data).then(|| Mechanism::new(chain, data, e)));
        Assembler { chain, data, mech }
    }

    /// Where the process is right after arriving at endpoint e.
    fn at_end(&self, e: Endpoint) -> Option<Loc> {
        match self.data.mode(e) {
            EndpointMode::Data => Some(Loc::Boundary(e)),
            EndpointMode::Entering => Some(Loc::Node(self.chain.end_node(e), Tag::Entering(e))),
            EndpointMode::Excluded => None,
        }
    }

    fn start(&self, x0: f64) -> Result<Loc, SimError> {
        let spec = &self.chain.grid.spec;
        for e in [Endpoint::A, Endpoint::B] {
            if x0 == spec.endpoint(e) {
                return self.at_end(e).ok_or(SimError::InvalidStart(x0));
            }
        }
        if !(x0 > spec.lo() && x0 < spec.hi()) {
            return Err(SimError::InvalidStart(x0));
        }
        Ok(Loc::Node(self.chain.node_of(x0), Tag::Start))
    }

    fn land(&self, from: Endpoint, l: Landing, tag: Tag) -> Option<Loc> {
        match l {
            Landing::Atom(i) => Some(Loc::Node(self.chain.node_of(self.mech[from.index()].as_ref()?.jumps.atoms[i].0), tag)),
            Landing::Point(x) => Some(Loc::Node(self.chain.node_of(x), tag)),
            Landing::Far => self.at_end(from.other()),
        }
    }

    fn run<R: Rng + ?Sized>(&self, x0: f64, horizon: f64, rng: &mut R) -> Result<PathSample, SimError> {
        let chain = self.chain;
        let spec = &chain.grid.spec;
        let mut path = PathSample::default();
        let mut loc = self.start(x0)?;
        let mut t = 0.0;
        let mut completed = 0usize;
        let mut away = false;
        while t < horizon {
            match loc {
                Loc::Node(i, tag) => {
                    let n = chain.len();
                    let hit = if i == 0 && chain.absorbing(Endpoint::A) {
                        Some(Endpoint::A)
                    } else if i == n - 1 && chain.absorbing(Endpoint::B) {
                        Some(Endpoint::B)
                    } else {
                        None
                    };
                    if let Some(e) = hit {
                        if away {
                            completed += 1;
                            away = false;
                        }
                        loc = self.at_end(e).ok_or(SimError::InvalidStart(spec.endpoint(e)))?;
                        continue;
                    }
                    path.push(t, PathState::At(chain.grid.x[i]), tag);
                    let (dt, next) = chain.step(i, rng);
                    t += dt;
                    loc = Loc::Node(next, tag);
                }
                Loc::Boundary(e) => {
                    let k = e.index();
                    let m = self.mech[k].as_ref().ok_or(SimError::DegenerateBoundary(e))?;
                    let total = m.total();
                    let ell = if total > 0.0 { rng.sample::<f64, _>(Exp1) / total } else { f64::INFINITY };
                    let dt = m.stick * ell;
                    path.push(t, PathState::At(spec.endpoint(e)), Tag::Stagnant(e));
                    if t + dt >= horizon || !ell.is_finite() {
                        let used = horizon - t;
                        if m.stick > 0.0 {
                            path.local_time[k] += used / m.stick;
                            path.stagnant_time[k] += used;
                        }
                        break;
                    }
                    path.local_time[k] += ell;
                    path.stagnant_time[k] += m.stick * ell;
                    t += dt;
                    path.excursions += 1;
                    away = true;
                    match m.pick(rng).ok_or(SimError::DegenerateBoundary(e))? {
                        Component::Kill => {
                            path.push(t, PathState::Cemetery, Tag::Dead);
                            path.killed = Some(t);
                            completed += 1;
                            break;
                        }
                        Component::Reflect => {
                            let j = chain.eps_node[k].ok_or(SimError::DegenerateBoundary(e))?;
                            loc = Loc::Node(j, Tag::Reflect(e));
                        }
                        Component::Jump | Component::Far => {
                            let l = m.jumps.sample(rng);
                            loc = self.land(e, l, Tag::Jump(e)).ok_or(SimError::DegenerateBoundary(e))?;
                        }
                    }
                }
            }
        }
        path.end_time = horizon;
        path.truncated = completed == 0 && path.excursions > 0;
        Ok(path)
    }
}

/// Sample path of the extended process from x0 up to `horizon`.
///
/// Real time at an endpoint accrues as ς·ℓ over local time ℓ, which runs until the next
/// excursion of the ε-restricted measure (killing, reflection started at a+ε with mass
/// p₂/s(a, a+ε), jumps). A path whose horizon ends before any excursion completes is flagged
/// `truncated`.
pub fn assemble_path<R: Rng + ?Sized>(
    chain: &TimedChain,
    data: &FellerBoundaryData,
    x0: f64,
    horizon: f64,
    rng: &mut R,
) -> Result<PathSample, SimError> {
    if !(horizon > 0.0) {
        return Err(SimError::BadConfig(format!("horizon must be positive, got {horizon}")));
    }
    Assembler::new(chain, data).run(x0, horizon, rng)
}

/// One excursion away from an accessible included endpoint, drawn from the ε-restricted
/// measure (ε fixed by the chain) and followed until it reaches an endpoint, dies, or
/// `max_time` elapses.
pub fn sample_excursion<R: Rng + ?Sized>(
    chain: &TimedChain,
    data: &FellerBoundaryData,
    e: Endpoint,
    max_time: f64,
    rng: &mut R,
) -> Result<ExcursionSample, SimError> {
    if !chain.absorbing(e) {
        return Err(SimError::NotAccessible(e));
    }
    if data.mode(e) != EndpointMode::Data {
        return Err(SimError::NotAccessible(e));
    }
    let m = Mechanism::new(chain, data, e);
    let mass = m.total();
    let component = m.pick(rng).ok_or(SimError::DegenerateBoundary(e))?;
    let mut path = PathSample::default();
    let start = match component {
        Component::Kill => {
            path.push(0.0, PathState::Cemetery, Tag::Dead);
            path.killed = Some(0.0);
            return Ok(ExcursionSample { component, mass, path, terminal: Terminal::Killed, lifetime: 0.0 });
        }
        Component::Reflect => chain.eps_node[e.index()].ok_or(SimError::DegenerateBoundary(e))?,
        Component::Jump | Component::Far => match m.jumps.sample(rng) {
            Landing::Far => {
                let other = e.other();
                path.push(0.0, PathState::At(chain.grid.spec.endpoint(other)), Tag::Jump(e));
                return Ok(ExcursionSample {
                    component: Component::Far,
                    mass,
                    path,
                    terminal: Terminal::Hit(other),
                    lifetime: 0.0,
                });
            }
            Landing::Atom(i) => chain.node_of(m.jumps.atoms[i].0),
            Landing::Point(x) => chain.node_of(x),
        },
    };
    let tag = if component == Component::Reflect { Tag::Reflect(e) } else { Tag::Jump(e) };
    let (t, hit) = chain.run_minimal(start, 0.0, max_time, tag, &mut path, rng);
    path.end_time = t;
    let terminal = match hit {
        Some(h) => {
            path.push(t, PathState::At(chain.grid.spec.endpoint(h)), tag);
            path.hit = Some((h, t));
            Terminal::Hit(h)
        }
        None => {
            path.truncated = true;
            Terminal::Censored
        }
    };
    Ok(ExcursionSample { component, mass, path, terminal, lifetime: t })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::SideData;
    use crate::fixtures::bm_unit;
    use crate::sim::stream;
    use std::sync::Arc;

    fn bm_chain(h: f64, eps: f64) -> TimedChain {
        let spec = Arc::new(bm_unit());
        TimedChain::new(spec.clone(), spec.classify().unwrap(), h, eps, [1e-6; 2]).unwrap()
    }

    #[test]
    fn killing_plus_stagnancy_is_exponential_sojourn() {
        // p1 = 2, p3 = 1: sojourn at a ~ Exp(rate p1/p3 = 2), then death
        let chain = bm_chain(0.05, 0.05);
        let data = FellerBoundaryData::new(
            SideData { kill: 2.0, stick: 1.0, ..Default::default() },
            SideData::killing(1.0),
        );
        let n = 20_000;
        let mean: f64 = (0..n)
            .map(|i| {
                let p = assemble_path(&chain, &data, 0.0, 1e9, &mut stream(5, i)).unwrap();
                assert!(p.stagnancy_defect([1.0, 0.0]) < 1e-12);
                p.killed.unwrap()
            })
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.5).abs() < 3.0 * 0.5 / (n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn cemetery_is_absorbing_and_times_increase() {
        let chain = bm_chain(0.05, 0.05);
        let data = FellerBoundaryData::new(SideData { kill: 0.5, reflect: 1.0, stick: 0.3, ..Default::default() }, SideData::killing(1.0));
        for i in 0..200 {
            let p = assemble_path(&chain, &data, 0.5, 5.0, &mut stream(9, i)).unwrap();
            assert!(p.times.windows(2).all(|w| w[0] <= w[1]));
            if let Some(k) = p.states.iter().position(|s| *s == PathState::Cemetery) {
                assert!(p.states[k..].iter().all(|s| *s == PathState::Cemetery));
            }
        }
    }

    #[test]
    fn stopped_at_far_end() {
        // b pure stagnancy: once there, the path stays at b
        let chain = bm_chain(0.05, 0.05);
        let data = FellerBoundaryData::new(SideData::sticky(1.0, 0.0), SideData { stick: 1.0, ..Default::default() });
        let p = assemble_path(&chain, &data, 0.9, 50.0, &mut stream(3, 0)).unwrap();
        let k = p.states.iter().position(|s| *s == PathState::At(1.0)).expect("reaches b");
        assert!(p.states[k..].iter().all(|s| *s == PathState::At(1.0)));
    }

    #[test]
    fn reflection_mass_scales_like_inverse_eps() {
        let data = FellerBoundaryData::new(SideData::sticky(1.0, 0.0), SideData::killing(1.0));
        let m1 = sample_excursion(&bm_chain(0.01, 0.02), &data, Endpoint::A, 1e3, &mut stream(1, 0)).unwrap().mass;
        let m2 = sample_excursion(&bm_chain(0.01, 0.01), &data, Endpoint::A, 1e3, &mut stream(1, 0)).unwrap().mass;
        assert!((m1 - 50.0).abs() < 1e-9 && (m2 - 100.0).abs() < 1e-9, "{m1} {m2}");
    }
}
