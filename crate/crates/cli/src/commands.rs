//! One function per subcommand. Each returns the process exit status.

use std::sync::Arc;

use feller_core::boundary::{
    extended_resolvent, generator_domain_check, psi, validate, DomainCandidate, DomainReport, EndpointMode,
    ExtendedResolvent,
};
use feller_core::eigen::{solve, EigenSolution, PicardConfig};
use feller_core::grid::Grid;
use feller_core::minimal::ResolventKernel;
use feller_core::oracle::discretize;
use feller_core::scale::{BoundaryClass, Endpoint};
use feller_core::sim::{assemble_path, estimate, mc_resolvent, stream, McConfig, Method, PathState, TimedChain};
use serde_json::Value;

use crate::config::{self, Loaded};
use crate::output::{fmt12, num, opt, r_tag, Obj, OutDir};
use crate::{Cli, CliError, Command, MethodArg, OracleKind, ResolveArgs, SimulateArgs};

const DEFAULT_TOL: f64 = 1e-5;
/// Relative agreement demanded between the analytic and grid solutions (× ‖g‖/r).
const AGREE_REL: f64 = 1e-3;
const AGREE_SIGMAS: f64 = 3.0;
const ENDS: [Endpoint; 2] = [Endpoint::A, Endpoint::B];

/// Config plus command-line overrides.
struct Run {
    cfg: Loaded,
    classes: [BoundaryClass; 2],
    rs: Vec<f64>,
    out: OutDir,
    seed: u64,
    paths: usize,
    eps: f64,
}

impl Run {
    fn new(cli: &Cli) -> Result<Self, CliError> {
        let c = &cli.common;
        let path = c.config.as_ref().ok_or_else(|| CliError::Config {
            path: "<none>".into(),
            line: None,
            message: "--config PATH is required".into(),
        })?;
        let mut cfg = config::load(path)?;
        if let Some(n) = c.nodes {
            cfg.grid.nodes = n;
        }
        let classes = cfg.spec.classify()?;
        let defaults = McConfig::default();
        let rs = if !c.r.is_empty() { c.r.clone() } else { cfg.task.r.clone().unwrap_or_else(|| vec![1.0]) };
        if let Some(bad) = rs.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
            return Err(CliError::Config { path: path.display().to_string(), line: None, message: format!("r = {bad} must be positive") });
        }
        Ok(Run {
            seed: c.seed.or(cfg.task.seed).unwrap_or(defaults.seed),
            paths: c.paths.or(cfg.task.paths).unwrap_or(defaults.paths),
            eps: c.eps.or(cfg.task.eps).unwrap_or(defaults.eps),
            out: OutDir::new(&c.out)?,
            cfg,
            classes,
            rs,
        })
    }

    fn eigen(&self, r: f64) -> Result<Arc<EigenSolution>, CliError> {
        let grid = Arc::new(Grid::build(self.cfg.spec.clone(), self.classes, &self.cfg.grid));
        Ok(Arc::new(solve(grid, r, &PicardConfig::default())?))
    }

    fn resolvent(&self, r: f64) -> Result<(Arc<EigenSolution>, ExtendedResolvent), CliError> {
        let eig = self.eigen(r)?;
        let kernel = ResolventKernel::new(eig.clone());
        let res = extended_resolvent(&self.cfg.data, &kernel, &self.cfg.g, self.cfg.case)?;
        Ok((eig, res))
    }

    /// Comparison points: the configured x0, else the included endpoints and c.
    fn points(&self) -> Vec<f64> {
        self.cfg.task.x0.clone().unwrap_or_else(|| {
            let spec = &self.cfg.spec;
            let mut pts = Vec::new();
            if self.cfg.data.included(Endpoint::A) {
                pts.push(spec.lo());
            }
            pts.push(spec.reference());
            if self.cfg.data.included(Endpoint::B) {
                pts.push(spec.hi());
            }
            pts
        })
    }

    /// sup |g| over the grid nodes and the endpoint values.
    fn g_norm(&self, grid: &Grid) -> f64 {
        let g = &self.cfg.g;
        let ends = ENDS.map(|e| g.at_end(e, &self.cfg.spec).unwrap_or(0.0).abs());
        g.sample(grid).iter().fold(ends[0].max(ends[1]), |m, v| m.max(v.abs()))
    }

    fn mc_config(&self, method: Method) -> McConfig {
        McConfig {
            paths: self.paths,
            seed: self.seed,
            eps: self.eps,
            grid: self.cfg.grid,
            h: self.cfg.task.h.unwrap_or(McConfig::default().h),
            method,
            ..McConfig::default()
        }
    }

    fn validate_data(&self) -> Result<(), CliError> {
        validate(&self.cfg.data, &self.cfg.spec, self.classes).into_result()?;
        Ok(())
    }
}

pub fn dispatch(cli: &Cli) -> Result<i32, CliError> {
    let mut run = Run::new(cli)?;
    match &cli.command {
        Command::Classify => classify(&mut run),
        Command::Eigen => eigen(&mut run),
        Command::Resolve(args) => resolve(&mut run, args),
        Command::Simulate(args) => simulate(&mut run, args, cli.common.horizon),
        Command::CheckDomain => check_domain(&mut run),
        Command::Validate => validate_cmd(&mut run),
    }
}

fn classify(run: &mut Run) -> Result<i32, CliError> {
    let [a, b] = run.classes.map(|c| format!("{:?}", c.kind));
    let value: Value = Obj::new().set("a", a).set("b", b).into();
    run.out.json("classify.json", &value)?;
    println!("{}", serde_json::to_string(&value).expect("serializes"));
    Ok(0)
}

fn eigen(run: &mut Run) -> Result<i32, CliError> {
    for &r in &run.rs.clone() {
        let eig = run.eigen(r)?;
        let rows = eig.rows().map(|row| row.iter().map(|&v| fmt12(v)).collect());
        run.out.csv(&format!("eigen_{}.csv", r_tag(r)), &["x", "u", "v", "Dsu", "Dsv"], rows)?;
    }
    Ok(0)
}

fn resolve(run: &mut Run, args: &ResolveArgs) -> Result<i32, CliError> {
    run.validate_data()?;
    let points = run.points();
    for &r in &run.rs.clone() {
        let tag = r_tag(r);
        let (eig, res) = run.resolvent(r)?;
        let norm = run.g_norm(&eig.grid);
        let rel_tol = AGREE_REL * norm / r;

        let oracle = if args.also_oracle || args.oracle == OracleKind::Grid {
            let chain = discretize(run.cfg.spec.clone(), run.classes, &run.cfg.data, run.cfg.grid.nodes, &run.cfg.grid)?;
            Some(chain.solve_resolvent(&run.cfg.g, r)?)
        } else {
            None
        };
        let skeleton = if args.also_mc {
            Some(estimate::skeleton(&run.cfg.data, run.cfg.spec.clone(), &run.cfg.g, r, &run.mc_config(Method::Skeleton))?)
        } else {
            None
        };

        let rows: Vec<Vec<String>> = match (&oracle, args.oracle) {
            (Some(o), OracleKind::Grid) => csv_with_ends(&o.grid, &o.values, o.end_value),
            _ => csv_with_ends(&res.grid, &res.values, res.end_value),
        };
        run.out.csv(&format!("resolve_{tag}.csv"), &["x", "R"], rows)?;
        if args.minimal {
            let img = ResolventKernel::new(eig.clone()).apply_minimal(&run.cfg.g)?;
            let rows = eig.grid.x.iter().zip(&img.values).map(|(x, v)| vec![fmt12(*x), fmt12(*v)]);
            run.out.csv(&format!("minimal_{tag}.csv"), &["x", "R0"], rows)?;
        }

        let mut all_agree = true;
        let mut pts = Vec::new();
        for (i, &x) in points.iter().enumerate() {
            let analytic = res.at(x);
            let mut o = Obj::new().num("x", x).num("analytic", analytic);
            if let Some(or) = &oracle {
                let v = or.at(x);
                let ok = (v - analytic).abs() <= rel_tol;
                all_agree &= ok;
                o = o.num("oracle", v).num("oracle_tolerance", rel_tol).set("oracle_agrees", ok);
            }
            if let Some(sk) = &skeleton {
                let est = sk.resolvent(x, run.paths, run.seed.wrapping_add(i as u64))?;
                let tol = rel_tol.max(AGREE_SIGMAS * est.stderr);
                let ok = (est.value - analytic).abs() <= tol;
                all_agree &= ok;
                o = o.num("mc", est.value).num("mc_stderr", est.stderr).num("mc_tolerance", tol).set("mc_agrees", ok);
            }
            pts.push(Value::from(o));
        }

        let psi_at = |e: Endpoint| {
            let usable = run.classes[e.index()].accessible && run.cfg.data.mode(e) == EndpointMode::Data;
            usable.then(|| psi(&run.cfg.data, &eig, e).ok()).flatten()
        };
        let sidecar = Obj::new()
            .num("r", r)
            .set("case", res.case.to_string())
            .set("primary", if args.oracle == OracleKind::Grid { "grid" } else { "analytic" })
            .set("g", run.cfg.g.label())
            .num("g_sup", norm)
            .set("nodes", run.cfg.grid.nodes)
            .set("R_a", opt(res.end_value[0]))
            .set("R_b", opt(res.end_value[1]))
            .set("R_a_interior", num(res.interior_limit[0]))
            .set("R_b_interior", num(res.interior_limit[1]))
            .set("psi_a", opt(psi_at(Endpoint::A)))
            .set("psi_b", opt(psi_at(Endpoint::B)))
            .num("det", res.det)
            .set("phi_residual_a", opt(res.phi_residual[0]))
            .set("phi_residual_b", opt(res.phi_residual[1]))
            .set("points", pts)
            .set("agree", all_agree);
        run.out.json(&format!("resolve_{tag}.json"), &sidecar.into())?;
    }
    Ok(0)
}

/// (x, f) rows, with the value at each included endpoint in place of (or after) the end node.
fn csv_with_ends(grid: &Grid, values: &[f64], ends: [Option<f64>; 2]) -> Vec<Vec<String>> {
    let spec = &grid.spec;
    let mut pts: Vec<(f64, f64)> = grid.x.iter().copied().zip(values.iter().copied()).collect();
    if let Some(v) = ends[0] {
        if pts[0].0 == spec.lo() {
            pts[0].1 = v;
        } else {
            pts.insert(0, (spec.lo(), v));
        }
    }
    if let Some(v) = ends[1] {
        let last = pts.len() - 1;
        if pts[last].0 == spec.hi() {
            pts[last].1 = v;
        } else {
            pts.push((spec.hi(), v));
        }
    }
    pts.into_iter().map(|(x, v)| vec![fmt12(x), fmt12(v)]).collect()
}

fn simulate(run: &mut Run, args: &SimulateArgs, horizon: Option<f64>) -> Result<i32, CliError> {
    run.validate_data()?;
    let method = match args.method {
        MethodArg::Skeleton => Method::Skeleton,
        MethodArg::Paths => Method::Paths,
    };
    let cfg = run.mc_config(method);
    let points = run.points();
    let horizon = horizon.or(run.cfg.task.horizon).unwrap_or(10.0);
    let record = args.record.or(run.cfg.task.record).unwrap_or(5);
    let spec = run.cfg.spec.clone();

    let chain = TimedChain::new(spec.clone(), run.classes, cfg.h, cfg.eps, cfg.grid.cut)?;
    let start = points.first().copied().unwrap_or(spec.reference());
    let mut rows = Vec::new();
    for i in 0..record {
        let p = assemble_path(&chain, &run.cfg.data, start, horizon, &mut stream(run.seed, i as u64))?;
        let last = p.states.len().saturating_sub(1);
        for (k, (t0, _, state, tag)) in p.segments().enumerate() {
            rows.push(path_row(i, t0, state, &tag.label()));
            if k == last {
                rows.push(path_row(i, p.end_time, state, &tag.label()));
            }
        }
    }
    run.out.csv("paths.csv", &["path", "t", "x", "tag"], rows)?;

    let mut runs = Vec::new();
    for &r in &run.rs {
        let mut resolvent = Vec::new();
        let mut excursions = Obj::new();
        match method {
            Method::Skeleton => {
                let sk = estimate::skeleton(&run.cfg.data, spec.clone(), &run.cfg.g, r, &cfg)?;
                for (i, &x) in points.iter().enumerate() {
                    let est = sk.resolvent(x, cfg.paths, run.seed.wrapping_add(i as u64))?;
                    resolvent.push(Value::from(Obj::new().num("x0", x).num("value", est.value).num("stderr", est.stderr)));
                }
                for (k, e) in ENDS.into_iter().enumerate() {
                    if run.classes[k].accessible && run.cfg.data.mode(e) == EndpointMode::Data {
                        if let Ok(ex) = sk.excursions(e, cfg.paths, run.seed.wrapping_add(1000 + k as u64)) {
                            let val = |v: feller_core::sim::Value| Value::from(Obj::new().num("value", v.value).num("stderr", v.stderr));
                            let o = Obj::new()
                                .set("psi", val(ex.psi))
                                .set("n_occupation", val(ex.n_occupation))
                                .set("n_hit_other", val(ex.n_hit_other))
                                .set("masses", ex.masses.iter().map(|&m| num(m)).collect::<Vec<_>>())
                                .set("counts", ex.counts.to_vec())
                                .set("samples", ex.samples);
                            excursions = excursions.set(&e.to_string(), o);
                        }
                    }
                }
            }
            Method::Paths => {
                for &x in &points {
                    let est = mc_resolvent(&run.cfg.data, spec.clone(), &run.cfg.g, r, x, &cfg)?;
                    resolvent.push(Value::from(Obj::new().num("x0", x).num("value", est.value).num("stderr", est.stderr)));
                }
            }
        }
        runs.push(Value::from(Obj::new().num("r", r).set("resolvent", resolvent).set("excursions", excursions)));
    }
    let summary = Obj::new()
        .set("method", if method == Method::Skeleton { "skeleton" } else { "paths" })
        .set("seed", run.seed)
        .set("paths", cfg.paths)
        .num("eps", cfg.eps)
        .num("h", cfg.h)
        .num("horizon", horizon)
        .set("recorded", record)
        .set("runs", runs);
    run.out.json("estimates.json", &summary.into())?;
    Ok(0)
}

fn path_row(i: usize, t: f64, state: PathState, tag: &str) -> Vec<String> {
    let x = state.x().map(fmt12).unwrap_or_default();
    vec![i.to_string(), fmt12(t), x, tag.to_string()]
}

fn domain_json(report: &DomainReport) -> Obj {
    let conds: Vec<Value> = report
        .conditions
        .iter()
        .map(|c| Obj::new().set("name", c.name.clone()).num("residual", c.residual).set("passed", c.passed).into())
        .collect();
    Obj::new().set("conditions", conds).set("verdict", report.verdict)
}

fn check_domain(run: &mut Run) -> Result<i32, CliError> {
    run.validate_data()?;
    let tol = run.cfg.task.tol.unwrap_or(DEFAULT_TOL);
    let mut reports = Vec::new();
    let mut verdict = true;
    match &run.cfg.candidate {
        Some((f, lf)) => {
            let grid = Grid::build(run.cfg.spec.clone(), run.classes, &run.cfg.grid);
            let report = generator_domain_check(&run.cfg.data, &grid, &DomainCandidate::from_sources(&grid, f, lf), tol);
            verdict &= report.verdict;
            reports.push(Value::from(domain_json(&report).set("f", f.label()).set("lf", lf.label()).num("tolerance", tol)));
        }
        None => {
            for &r in &run.rs.clone() {
                let (eig, res) = run.resolvent(r)?;
                let scaled = tol * run.g_norm(&eig.grid);
                let report = generator_domain_check(&run.cfg.data, &res.grid, &res.candidate(&run.cfg.g), scaled);
                verdict &= report.verdict;
                reports.push(Value::from(domain_json(&report).set("f", format!("R_{r} g")).num("r", r).num("tolerance", scaled)));
            }
        }
    }
    run.out.json("domain.json", &Obj::new().set("reports", reports).set("verdict", verdict).into())?;
    Ok(if verdict { 0 } else { 2 })
}

fn validate_cmd(run: &mut Run) -> Result<i32, CliError> {
    let report = validate(&run.cfg.data, &run.cfg.spec, run.classes);
    let checks: Vec<Value> = report
        .checks
        .iter()
        .map(|c| {
            Obj::new()
                .set("name", c.name.clone())
                .set("side", c.side.to_string())
                .set("passed", c.passed)
                .set("value", opt(c.value))
                .set("detail", c.detail.clone())
                .into()
        })
        .collect();
    let value: Value = Obj::new()
        .set("case", report.case.map(|c| c.to_string()))
        .set("classes", run.classes.map(|c| format!("{:?}", c.kind)).to_vec())
        .set("passed", report.passed())
        .set("failures", report.failures())
        .set("checks", checks)
        .into();
    run.out.json("validation.json", &value)?;
    if !report.passed() {
        eprintln!("validation failed: {}", report.failures().join("; "));
    }
    Ok(if report.passed() { 0 } else { 2 })
}
