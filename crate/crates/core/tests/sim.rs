//! Statistical checks of the timed chain, the assembled paths and the excursion sampler
//! against Brownian closed forms.

use std::sync::Arc;

use feller_core::boundary::{extended_resolvent, FellerBoundaryData, SideData};
use feller_core::eigen::{solve, PicardConfig};
use feller_core::fixtures;
use feller_core::grid::Grid;
use feller_core::minimal::ResolventKernel;
use feller_core::scale::Endpoint;
use feller_core::sim::{
    assemble_path, mc_resolvent, sample_excursion, sample_minimal_path, stream, Component, McConfig, Method, TimedChain,
};

const N: u64 = 4000;

fn bm_chain(h: f64, eps: f64) -> TimedChain {
    let spec = Arc::new(fixtures::bm_unit());
    TimedChain::new(spec.clone(), spec.classify().unwrap(), h, eps, [1e-6; 2]).unwrap()
}

#[test]
fn hitting_probability_is_linear_in_scale() {
    let spec = Arc::new(fixtures::bm_unit());
    let up = (0..N)
        .filter(|&i| {
            let p = sample_minimal_path(spec.clone(), 0.25, 1.0 / 64.0, f64::INFINITY, &mut stream(11, i)).unwrap();
            p.hit.unwrap().0 == Endpoint::B
        })
        .count() as f64
        / N as f64;
    let se = (0.25f64 * 0.75 / N as f64).sqrt();
    assert!((up - 0.25).abs() < 4.0 * se, "P(hit 1 first) = {up}");
}

#[test]
fn hitting_time_transform_matches_sinh() {
    let (r, x0) = (1.0f64, 0.5);
    let chain = bm_chain(1.0 / 64.0, 1.0 / 64.0);
    let samples: Vec<f64> = (0..N)
        .map(|i| match chain.minimal_path(x0, f64::INFINITY, &mut stream(12, i)).hit {
            Some((Endpoint::A, t)) => (-r * t).exp(),
            _ => 0.0,
        })
        .collect();
    let mean = samples.iter().sum::<f64>() / N as f64;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (N - 1) as f64;
    let k = (2.0 * r).sqrt();
    let exact = (k * (1.0 - x0)).sinh() / k.sinh();
    assert!((mean - exact).abs() < 4.0 * (var / N as f64).sqrt(), "{mean} vs {exact}");
}

#[test]
fn excursion_components_follow_their_masses() {
    let fx = fixtures::elastic_jumps();
    let chain = bm_chain(1.0 / 64.0, 1.0 / 32.0);
    let mut counts = [0usize; 4];
    let mut mass = 0.0;
    for i in 0..N {
        let exc = sample_excursion(&chain, &fx.data, Endpoint::A, 1e3, &mut stream(13, i)).unwrap();
        mass = exc.mass;
        counts[match exc.component {
            Component::Kill => 0,
            Component::Reflect => 1,
            Component::Jump => 2,
            Component::Far => 3,
        }] += 1;
        if exc.component == Component::Far {
            assert_eq!(exc.path.hit.map(|h| h.0), None);
            assert_eq!(exc.lifetime, 0.0);
        }
    }
    // kill 0.5, reflection p2 / s(0, ε) = 32, interior atom 2, far end 0.5
    assert!((mass - 35.0).abs() < 1e-9, "{mass}");
    for (k, rate) in [0.5, 32.0, 2.0, 0.5].into_iter().enumerate() {
        let p = rate / mass;
        let f = counts[k] as f64 / N as f64;
        assert!((f - p).abs() < 4.0 * (p * (1.0 - p) / N as f64).sqrt() + 1e-12, "component {k}: {f} vs {p}");
    }
}

#[test]
fn seeded_paths_are_reproducible() {
    let fx = fixtures::elastic_jumps();
    let chain = bm_chain(1.0 / 32.0, 1.0 / 32.0);
    let a = assemble_path(&chain, &fx.data, 0.4, 10.0, &mut stream(5, 17)).unwrap();
    let b = assemble_path(&chain, &fx.data, 0.4, 10.0, &mut stream(5, 17)).unwrap();
    assert_eq!(a.times, b.times);
    assert_eq!(a.states, b.states);
    let c = assemble_path(&chain, &fx.data, 0.4, 10.0, &mut stream(5, 18)).unwrap();
    assert_ne!(a.times, c.times);
}

#[test]
fn timed_paths_agree_with_the_analytic_resolvent() {
    // exponential sojourn at 0 and reflection: no sub-ε time is neglected at the sticky point
    let fx = fixtures::sticky_killed();
    let cfg = McConfig { paths: 20_000, seed: 3, method: Method::Paths, h: 1.0 / 64.0, eps: 1.0 / 64.0, ..McConfig::default() };
    let classes = fx.spec.classify().unwrap();
    let grid = Arc::new(Grid::build(fx.spec.clone(), classes, &fx.grid));
    let kernel = ResolventKernel::new(Arc::new(solve(grid, fx.r, &PicardConfig::default()).unwrap()));
    let exact = extended_resolvent(&fx.data, &kernel, &fx.g, Some(fx.case)).unwrap();
    for x0 in [0.0, 0.5] {
        let est = mc_resolvent(&fx.data, fx.spec.clone(), &fx.g, fx.r, x0, &cfg).unwrap();
        let bias = 0.02 * exact.at(x0);
        assert!(
            (est.value - exact.at(x0)).abs() < 4.0 * est.stderr + bias,
            "x0 = {x0}: {} ± {} vs {}",
            est.value,
            est.stderr,
            exact.at(x0)
        );
    }
}

#[test]
fn stagnant_fraction_matches_the_invariant_law() {
    // invariant law m|(0,1) + (p3/p2) δ_0 with m = 2 dx for ½Δ: time fraction at 0 is 1/(2 + 1)
    let data = FellerBoundaryData::new(SideData::sticky(1.0, 1.0), SideData::sticky(1.0, 0.0));
    let chain = bm_chain(1.0 / 32.0, 1.0 / 32.0);
    let horizon = 200.0;
    let frac: f64 = (0..64)
        .map(|i| assemble_path(&chain, &data, 0.5, horizon, &mut stream(21, i)).unwrap().time_at(0.0) / horizon)
        .sum::<f64>()
        / 64.0;
    assert!((frac - 1.0 / 3.0).abs() < 0.03, "{frac}");
}
