//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line with the measured
//! quantities, then asserts. Tolerances are pinned here.

use std::sync::Arc;
use std::time::{Duration, Instant};

use feller_core::boundary::{
    extended_resolvent, generator_domain_check, hitting_transform, matrix_a, n_functional, psi, validate, Atom, Case,
    ExtendedResolvent, FellerBoundaryData, SideData,
};
use feller_core::eigen::{solve, EigenSolution, PicardConfig};
use feller_core::fixtures::{self, Fixture};
use feller_core::grid::{Grid, GridSpec};
use feller_core::minimal::ResolventKernel;
use feller_core::oracle::discretize;
use feller_core::scale::{BoundaryKind, DiffusionSpec, Endpoint};
use feller_core::sim::{assemble_path, estimate, resolvent_identity, stream, McConfig, TimedChain};
use feller_core::source::Source;
use rand::Rng;

const CLASSIFY_BUDGET: Duration = Duration::from_secs(1);
const EIGEN_SUP_TOL: f64 = 1e-6;
const EIGEN_LIMIT_TOL: f64 = 1e-4;
const PSI_CLOSED_TOL: f64 = 1e-6;
const Z: f64 = 3.0;
const MC_PATHS: usize = 100_000;
const DET_FLOOR: f64 = 1e-8;
const DET_FAMILY: usize = 120;
const AGREE_REL: f64 = 1e-3;
const AGREE_BUDGET: Duration = Duration::from_secs(300);
const DOMAIN_TOL: f64 = 1e-5;
const RESOLVENT_EQ_TOL: f64 = 1e-5;
const CONSERVATION_TOL: f64 = 1e-4;
const CONVERGENCE_RATIO: f64 = 2.5;
/// Stagnant time and ς × local time are accumulated visit by visit; only summation rounding remains.
const STAGNANCY_ROUNDING: f64 = 1e-12;

fn report(id: u8, what: &str, ok: bool, detail: String) {
    println!("criterion {id} [{}] {what}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {id} ({what}) failed: {detail}");
}

fn eigen(spec: Arc<DiffusionSpec>, grid: &GridSpec, r: f64) -> Arc<EigenSolution> {
    let classes = spec.classify().unwrap();
    let grid = Arc::new(Grid::build(spec, classes, grid));
    Arc::new(solve(grid, r, &PicardConfig::default()).unwrap())
}

fn analytic(fx: &Fixture, g: &Source, r: f64, grid: &GridSpec) -> ExtendedResolvent {
    let kernel = ResolventKernel::new(eigen(fx.spec.clone(), grid, r));
    extended_resolvent(&fx.data, &kernel, g, Some(fx.case)).unwrap()
}

fn sup_g(fx: &Fixture, g: &Source) -> f64 {
    let grid = Grid::build(fx.spec.clone(), fx.spec.classify().unwrap(), &GridSpec { nodes: 401, ..fx.grid });
    let ends = [Endpoint::A, Endpoint::B].map(|e| g.at_end(e, &fx.spec).unwrap_or(0.0).abs());
    g.sample(&grid).iter().fold(ends[0].max(ends[1]), |m, v| m.max(v.abs()))
}

#[test]
fn c1_classification_of_the_four_kinds() {
    let t = Instant::now();
    let expected = [BoundaryKind::Regular, BoundaryKind::Exit, BoundaryKind::Entrance, BoundaryKind::Natural];
    let got: Vec<BoundaryKind> = fixtures::classification_specs()
        .iter()
        .map(|(_, spec)| spec.classify_boundary(Endpoint::A).unwrap().kind)
        .collect();
    let elapsed = t.elapsed();
    report(
        1,
        "classification at 0",
        got == expected && elapsed < CLASSIFY_BUDGET,
        format!("{got:?} in {elapsed:?}"),
    );
}

#[test]
fn c2_brownian_eigenfunctions_match_sinh() {
    let spec = Arc::new(fixtures::bm_unit());
    let mut worst = 0.0f64;
    let mut worst_limit = 0.0f64;
    for r in [0.25, 0.5, 1.0, 2.0] {
        let eig = eigen(spec.clone(), &GridSpec::with_nodes(2001), r);
        let k = (2.0 * r).sqrt();
        let x = &eig.grid.x;
        let ic = eig.grid.ic;
        // v = λ sinh(k(1−x)), u = sinh(kx)/(λ k sinh k) has unit Wronskian for any λ
        let lambda = eig.v[ic] / (k * (1.0 - x[ic])).sinh();
        for (i, &xi) in x.iter().enumerate() {
            let u = (k * xi).sinh() / (lambda * k * k.sinh());
            let v = lambda * (k * (1.0 - xi)).sinh();
            worst = worst.max((eig.u[i] - u).abs()).max((eig.v[i] - v).abs());
        }
        let l = &eig.limits;
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
        worst_limit = worst_limit.max(rel(l.dsu_at_a, 1.0 / l.v_at_a)).max(rel(l.dsv_at_b, -1.0 / l.u_at_b));
    }
    report(
        2,
        "u, v against sinh closed forms",
        worst < EIGEN_SUP_TOL && worst_limit < EIGEN_LIMIT_TOL,
        format!("sup error {worst:.2e}, boundary identity error {worst_limit:.2e}"),
    );
}

#[test]
fn c3_psi_matches_closed_form_and_excursions() {
    let mut ok = true;
    let mut lines = Vec::new();
    for beta in [0.0, 1.0] {
        let mut fx = fixtures::sticky_reflecting();
        fx.data = FellerBoundaryData::new(SideData::sticky(1.0, beta), SideData::sticky(1.0, 0.0));
        let eig = eigen(fx.spec.clone(), &GridSpec::with_nodes(2001), fx.r);
        let value = psi(&fx.data, &eig, Endpoint::A).unwrap();
        // BM with generator ½Δ on (0,1) stopped at 1: ψ = βr + √(2r) coth √(2r)
        let k = (2.0 * fx.r).sqrt();
        let closed = beta * fx.r + k / k.tanh();
        let cfg = McConfig { paths: MC_PATHS, ..McConfig::default() };
        let sk = estimate::skeleton(&fx.data, fx.spec.clone(), &fx.g, fx.r, &cfg).unwrap();
        let mc = sk.excursions(Endpoint::A, MC_PATHS, 31).unwrap().psi;
        let z = (mc.value - value) / mc.stderr;
        ok &= (value - closed).abs() < PSI_CLOSED_TOL && z.abs() < Z;
        lines.push(format!(
            "β={beta}: Φ/v={value:.9} closed={closed:.9} mc={:.5}±{:.1e} (z={z:+.2})",
            mc.value, mc.stderr
        ));
    }
    report(3, "ψ from Φ_a(v)/v(a)", ok, lines.join("; "));
}

fn random_side<R: Rng>(rng: &mut R, far: bool) -> SideData {
    let mut side = SideData { kill: rng.random_range(0.0..2.0), ..Default::default() };
    while side.reflect + side.stick == 0.0 {
        side.reflect = if rng.random_bool(0.8) { rng.random_range(0.0..2.0) } else { 0.0 };
        side.stick = if rng.random_bool(0.6) { rng.random_range(0.0..2.0) } else { 0.0 };
    }
    for _ in 0..rng.random_range(0..4) {
        side.jumps.atoms.push(Atom { x: rng.random_range(0.02..0.98), mass: rng.random_range(0.0..3.0) });
    }
    if far && rng.random_bool(0.5) {
        side.jumps.far_end = rng.random_range(0.0..1.5);
    }
    side
}

#[test]
fn c4_boundary_matrix_determinant_is_positive() {
    let spec = Arc::new(fixtures::bm_unit());
    let classes = spec.classify().unwrap();
    let eigs: Vec<_> = [0.1, 0.5, 1.0, 4.0].map(|r| eigen(spec.clone(), &GridSpec::with_nodes(801), r)).into();
    let mut rng = stream(2024, 0);
    let mut min_det = f64::INFINITY;
    let mut tried = 0;
    while tried < DET_FAMILY {
        let data = FellerBoundaryData::new(random_side(&mut rng, true), random_side(&mut rng, true));
        if !validate(&data, &spec, classes).passed() {
            continue;
        }
        tried += 1;
        let eig = &eigs[rng.random_range(0..eigs.len())];
        let det = matrix_a(&data, eig).map_or(f64::NEG_INFINITY, |a| a[0][0] * a[1][1] - a[0][1] * a[1][0]);
        min_det = min_det.min(det);
    }
    report(
        4,
        "det A over random valid data",
        min_det > DET_FLOOR,
        format!("{tried} data sets, smallest det {min_det:.3e}"),
    );
}

#[test]
fn c5_analytic_grid_and_monte_carlo_agree() {
    let t = Instant::now();
    let mut ok = true;
    let mut lines = Vec::new();
    let mut cases = Vec::new();
    for fx in fixtures::all() {
        let classes = fx.spec.classify().unwrap();
        let res = analytic(&fx, &fx.g, fx.r, &fx.grid);
        let chain = discretize(fx.spec.clone(), classes, &fx.data, 2001, &fx.grid).unwrap();
        let grid = chain.solve_resolvent(&fx.g, fx.r).unwrap();
        let cfg = McConfig { paths: MC_PATHS, grid: fx.grid, ..McConfig::default() };
        let sk = estimate::skeleton(&fx.data, fx.spec.clone(), &fx.g, fx.r, &cfg).unwrap();
        let floor = AGREE_REL * sup_g(&fx, &fx.g) / fx.r;
        let mut worst = 0.0f64;
        for (i, &x) in fx.points.iter().enumerate() {
            let mc = sk.resolvent(x, MC_PATHS, 500 + i as u64).unwrap();
            let tol = floor.max(Z * mc.stderr);
            let (a, o) = (res.at(x), grid.at(x));
            let gaps = [(a - o).abs() / floor, (a - mc.value).abs() / tol, (o - mc.value).abs() / tol];
            worst = gaps.into_iter().fold(worst, f64::max);
        }
        ok &= worst <= 1.0;
        cases.push(fx.case);
        lines.push(format!("{} ({}) worst gap/tol {worst:.2}", fx.name, fx.case));
    }
    let elapsed = t.elapsed();
    let spans = [Case::One, Case::Two, Case::Three, Case::Four].iter().all(|c| cases.contains(c));
    report(
        5,
        "three-way resolvent agreement",
        ok && spans && cases.len() >= 5 && elapsed < AGREE_BUDGET,
        format!("{}; {elapsed:.1?}", lines.join(", ")),
    );
}

#[test]
fn c6_resolvent_identity_by_monte_carlo() {
    let fx = fixtures::sticky_reflecting();
    let cfg = McConfig { paths: MC_PATHS, ..McConfig::default() };
    let sk = estimate::skeleton(&fx.data, fx.spec.clone(), &fx.g, fx.r, &cfg).unwrap();
    let exc = sk.excursions(Endpoint::A, MC_PATHS, 61).unwrap();
    let at_a = sk.resolvent(0.0, MC_PATHS, 62).unwrap().as_value();
    let at_b = sk.resolvent(1.0, MC_PATHS, 63).unwrap().as_value();
    let (residual, se) = resolvent_identity(&exc, at_a, at_b);
    // the analytic side of the same identity, for the record
    let kernel = ResolventKernel::new(eigen(fx.spec.clone(), &fx.grid, fx.r));
    let eig = kernel.eigen();
    let res = extended_resolvent(&fx.data, &kernel, &fx.g, Some(fx.case)).unwrap();
    let exact = psi(&fx.data, eig, Endpoint::A).unwrap() * res.at(0.0)
        - n_functional(&fx.data, &kernel, &fx.g, Endpoint::A).unwrap()
        - hitting_transform(&fx.data, eig, Endpoint::A).unwrap() * res.at(1.0);
    report(
        6,
        "ψ R g(a) = N(g) + n[e^{-rT_b}] R g(b)",
        residual.abs() <= Z * se && exact.abs() < 1e-8,
        format!("mc residual {residual:.3e} (3σ = {:.3e}), analytic residual {exact:.1e}", Z * se),
    );
}

fn random_g<R: Rng>(rng: &mut R) -> Source {
    let (c0, c1, c2) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let (w, ph) = (rng.random_range(0.5..6.0), rng.random_range(0.0..std::f64::consts::TAU));
    Source::new("random", move |x| c0 + c1 * (w * x + ph).cos() + c2 * x * x)
}

#[test]
fn c7_resolvent_is_in_the_domain_and_satisfies_the_resolvent_equation() {
    let (r, q) = (0.5, 2.0);
    let mut rng = stream(77, 0);
    let fixtures = [fixtures::sticky_killed(), fixtures::sticky_reflecting(), fixtures::elastic_jumps(), fixtures::entrance_sticky()];
    let mut worst_domain = 0.0f64;
    let mut worst_eq = 0.0f64;
    let mut count = 0;
    for fx in &fixtures {
        let fine = GridSpec { nodes: 4001, ..fx.grid };
        let kr = ResolventKernel::new(eigen(fx.spec.clone(), &fine, r));
        let kq = ResolventKernel::new(eigen(fx.spec.clone(), &fine, q));
        for _ in 0..5 {
            let g = random_g(&mut rng);
            let norm = sup_g(fx, &g);
            let fr = extended_resolvent(&fx.data, &kr, &g, Some(fx.case)).unwrap();
            let report = generator_domain_check(&fx.data, &fr.grid, &fr.candidate(&g), DOMAIN_TOL * norm);
            let domain = report.conditions.iter().map(|c| c.residual).fold(0.0, f64::max) / norm;
            worst_domain = worst_domain.max(domain);
            // R_r g − R_q g = (q − r) R_r R_q g
            let fq = Arc::new(extended_resolvent(&fx.data, &kq, &g, Some(fx.case)).unwrap());
            let mut h = {
                let fq = fq.clone();
                Source::new("R_q g", move |x| fq.at(x))
            };
            for e in [Endpoint::A, Endpoint::B] {
                if let Some(v) = fq.end_value[e.index()] {
                    h = h.with_end(e, v);
                }
            }
            let frq = extended_resolvent(&fx.data, &kr, &h, Some(fx.case)).unwrap();
            let nodes = fr.values.iter().zip(&fq.values).zip(&frq.values).map(|((a, b), c)| a - b - (q - r) * c);
            let ends = (0..2).filter_map(|k| Some(fr.end_value[k]? - fq.end_value[k]? - (q - r) * frq.end_value[k]?));
            let eq = nodes.chain(ends).fold(0.0f64, |m, d| m.max(d.abs())) / norm;
            worst_eq = worst_eq.max(eq);
            count += 1;
        }
    }
    report(
        7,
        "generator domain and resolvent equation",
        count >= 20 && worst_domain < DOMAIN_TOL && worst_eq < RESOLVENT_EQ_TOL,
        format!("{count} random g: worst domain residual {worst_domain:.2e}·‖g‖, resolvent equation {worst_eq:.2e}·‖g‖"),
    );
}

fn conservative_fixtures() -> Vec<Fixture> {
    let mut both = fixtures::sticky_reflecting();
    both.name = "sticky-both";
    both.data = FellerBoundaryData::new(SideData::sticky(2.0, 0.5), SideData::sticky(1.0, 1.5));
    vec![fixtures::sticky_reflecting(), both, fixtures::entrance_excluded()]
}

#[test]
fn c8_conservation_and_stagnancy_bookkeeping() {
    let one = Source::constant(1.0);
    let mut worst_analytic = 0.0f64;
    let mut worst_z = 0.0f64;
    let mut worst_defect = 0.0f64;
    let mut paths = 0;
    for fx in conservative_fixtures() {
        let res = analytic(&fx, &one, fx.r, &fx.grid);
        let dev = res.values.iter().chain(res.end_value.iter().flatten()).fold(0.0f64, |m, v| m.max((fx.r * v - 1.0).abs()));
        worst_analytic = worst_analytic.max(dev);

        let cfg = McConfig { paths: 20_000, grid: fx.grid, ..McConfig::default() };
        let sk = estimate::skeleton(&fx.data, fx.spec.clone(), &one, fx.r, &cfg).unwrap();
        for (i, &x) in fx.points.iter().enumerate() {
            let est = sk.resolvent(x, cfg.paths, 800 + i as u64).unwrap();
            let gap = (fx.r * est.value - 1.0).abs();
            let se = fx.r * est.stderr;
            worst_z = worst_z.max(if gap <= 1e-12 { 0.0 } else { gap / se });
        }

        let classes = fx.spec.classify().unwrap();
        let chain = TimedChain::new(fx.spec.clone(), classes, 1.0 / 64.0, 1.0 / 64.0, fx.grid.cut).unwrap();
        let stick = [fx.data.sides[0].stick, fx.data.sides[1].stick];
        for i in 0..400u64 {
            let x0 = fx.points[i as usize % fx.points.len()];
            let p = assemble_path(&chain, &fx.data, x0, 20.0, &mut stream(88, i)).unwrap();
            worst_defect = worst_defect.max(p.stagnancy_defect(stick));
            paths += 1;
        }
    }
    report(
        8,
        "r R_r 1 = 1 and stagnant time = ς · local time",
        worst_analytic < CONSERVATION_TOL && worst_z < Z && worst_defect < STAGNANCY_ROUNDING,
        format!("analytic {worst_analytic:.2e}, mc worst z {worst_z:.2}, relative stagnancy defect {worst_defect:.1e} over {paths} paths"),
    );
}

#[test]
fn c9_grid_oracle_converges_at_second_order() {
    let mut ok = true;
    let mut lines = Vec::new();
    for fx in fixtures::all().into_iter().filter(|f| f.smooth) {
        let classes = fx.spec.classify().unwrap();
        let reference = analytic(&fx, &fx.g, fx.r, &GridSpec { nodes: 16001, ..fx.grid });
        let errors: Vec<f64> = [500, 1000, 2000]
            .iter()
            .map(|&n| {
                let chain = discretize(fx.spec.clone(), classes, &fx.data, n, &fx.grid).unwrap();
                let sol = chain.solve_resolvent(&fx.g, fx.r).unwrap();
                sol.grid.x.iter().zip(&sol.values).map(|(&x, v)| (v - reference.at(x)).abs()).fold(0.0, f64::max)
            })
            .collect();
        let ratios = [errors[0] / errors[1], errors[1] / errors[2]];
        ok &= ratios.iter().all(|&q| q >= CONVERGENCE_RATIO);
        lines.push(format!("{}: errors {:.2e}/{:.2e}/{:.2e}, ratios {:.2}, {:.2}", fx.name, errors[0], errors[1], errors[2], ratios[0], ratios[1]));
    }
    report(9, "grid oracle convergence", ok && !lines.is_empty(), lines.join("; "));
}
