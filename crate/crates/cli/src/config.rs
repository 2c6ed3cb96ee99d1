//! The TOML run configuration and its translation into library objects.
//!
//! ```toml
//! [spec]
//! interval = [0.0, 1.0]      # -inf / inf allowed
//! reference = 0.5            # c, where s(c) = m(c) = 0
//! length = 1.0               # length scale of the compactifying map (infinite ends only)
//! scale = "1"                # s'(x); or scale_csv = "s.csv" with rows (x, s(x))
//! speed = "2"                # m'(x); or speed_csv = "m.csv"
//! # [spec.sde]               # alternatively: drift = "-x", sigma = "1"
//!
//! [grid]                     # optional
//! nodes = 2001
//! cut = [1e-6, 1e-6]
//! grading = 1.4142135623730951
//!
//! [boundary]
//! case = 4                   # optional declared case, checked against the derived one
//! [boundary.a]               # [boundary.b] likewise
//! mode = "data"              # data | entering | excluded
//! kill = 0.0
//! reflect = 1.0
//! stick = 1.0
//! far_end = 0.0              # jump mass on the opposite endpoint
//! atoms = [[0.3, 2.0]]       # (x, mass)
//! density = { expr = "1", lo = 0.6, hi = 0.95, truncated_infinite = false }
//!
//! [task]
//! r = [0.5]
//! g = "1+x"                  # g_a, g_b: values at the endpoints when g is not defined there
//! x0 = [0.0, 0.5, 1.0]
//! paths = 100000
//! seed = 0
//! eps = 0.01
//! h = 0.015625
//! horizon = 10.0
//! record = 5
//! tol = 1e-5
//!
//! [candidate]                # check-domain on a given f instead of R_r g
//! f = "x*x"
//! lf = "2"
//! ```
//!
//! Expressions use `x`, numbers, `pi`, `e`, `+ - * / ^` and exp, log, sqrt, sinh, cosh,
//! tanh, sin, cos, abs, pow(·,·).

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use feller_core::boundary::{Atom, Case, EndpointMode, FellerBoundaryData, JumpDensity, JumpMeasure, SideData};
use feller_core::expr::Expr;
use feller_core::grid::GridSpec;
use feller_core::scale::{DiffusionSpec, Endpoint, Measure, RealFn, Table};
use feller_core::source::Source;
use serde::Deserialize;
use toml::Spanned;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub spec: SpecBlock,
    #[serde(default)]
    pub grid: GridBlock,
    #[serde(default)]
    pub boundary: BoundaryBlock,
    #[serde(default)]
    pub task: TaskBlock,
    pub candidate: Option<CandidateBlock>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecBlock {
    pub interval: [f64; 2],
    pub reference: f64,
    #[serde(default = "unit")]
    pub length: f64,
    pub scale: Option<Spanned<String>>,
    pub speed: Option<Spanned<String>>,
    pub scale_csv: Option<Spanned<String>>,
    pub speed_csv: Option<Spanned<String>>,
    pub sde: Option<SdeBlock>,
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdeBlock {
    pub drift: Spanned<String>,
    pub sigma: Spanned<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub nodes: Option<usize>,
    pub cut: Option<[f64; 2]>,
    pub grading: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryBlock {
    pub case: Option<Spanned<u8>>,
    #[serde(default)]
    pub a: SideBlock,
    #[serde(default)]
    pub b: SideBlock,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Data,
    Entering,
    Excluded,
}

impl From<Mode> for EndpointMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Data => EndpointMode::Data,
            Mode::Entering => EndpointMode::Entering,
            Mode::Excluded => EndpointMode::Excluded,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SideBlock {
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub kill: f64,
    #[serde(default)]
    pub reflect: f64,
    #[serde(default)]
    pub stick: f64,
    #[serde(default)]
    pub far_end: f64,
    #[serde(default)]
    pub atoms: Vec<[f64; 2]>,
    pub density: Option<DensityBlock>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityBlock {
    pub expr: Spanned<String>,
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub truncated_infinite: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskBlock {
    pub r: Option<Vec<f64>>,
    pub g: Option<Spanned<String>>,
    pub g_a: Option<f64>,
    pub g_b: Option<f64>,
    pub x0: Option<Vec<f64>>,
    pub paths: Option<usize>,
    pub seed: Option<u64>,
    pub eps: Option<f64>,
    pub h: Option<f64>,
    pub horizon: Option<f64>,
    pub record: Option<usize>,
    pub tol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateBlock {
    pub f: Spanned<String>,
    pub lf: Spanned<String>,
    pub f_a: Option<f64>,
    pub f_b: Option<f64>,
    pub lf_a: Option<f64>,
    pub lf_b: Option<f64>,
}

/// Everything a command needs, built and checked.
pub struct Loaded {
    pub spec: Arc<DiffusionSpec>,
    pub data: FellerBoundaryData,
    pub case: Option<Case>,
    pub grid: GridSpec,
    pub g: Source,
    pub candidate: Option<(Source, Source)>,
    pub task: TaskBlock,
}

impl fmt::Debug for Loaded {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Loaded").field("spec", &self.spec).field("case", &self.case).finish_non_exhaustive()
    }
}

/// Resolves byte spans to line numbers of the config file.
struct Origin<'a> {
    path: &'a Path,
    text: &'a str,
}

impl Origin<'_> {
    fn error(&self, span: Option<std::ops::Range<usize>>, message: impl Into<String>) -> CliError {
        let line = span.map(|s| self.text[..s.start.min(self.text.len())].matches('\n').count() + 1);
        CliError::Config { path: self.path.display().to_string(), line, message: message.into() }
    }

    fn expr(&self, s: &Spanned<String>, what: &str) -> Result<Expr, CliError> {
        Expr::parse(s.get_ref()).map_err(|e| self.error(Some(s.span()), format!("{what}: {e}")))
    }

    fn func(&self, s: &Spanned<String>, what: &str) -> Result<RealFn, CliError> {
        let e = self.expr(s, what)?;
        Ok(Arc::new(move |x| e.eval(x)))
    }

    fn measure(&self, expr: &Option<Spanned<String>>, csv: &Option<Spanned<String>>, what: &str) -> Result<Measure, CliError> {
        match (expr, csv) {
            (Some(e), None) => {
                let ex = self.expr(e, what)?;
                Ok(Measure::density(e.get_ref().clone(), move |x| ex.eval(x)))
            }
            (None, Some(p)) => {
                let file = self.path.parent().unwrap_or(Path::new(".")).join(p.get_ref());
                let (xs, values) = read_table(&file).map_err(|m| self.error(Some(p.span()), format!("{what}_csv: {m}")))?;
                Table::new(xs, values).map(Measure::Tabulated).ok_or_else(|| {
                    self.error(Some(p.span()), format!("{what}_csv: both columns must be strictly increasing, with 2+ rows"))
                })
            }
            (Some(e), Some(_)) => Err(self.error(Some(e.span()), format!("give either {what} or {what}_csv, not both"))),
            (None, None) => Err(self.error(None, format!("[spec] needs {what} (expression) or {what}_csv"))),
        }
    }
}

/// Two numeric columns (x, value); a header row is skipped.
fn read_table(path: &Path) -> Result<(Vec<f64>, Vec<f64>), String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    let (mut xs, mut vs) = (Vec::new(), Vec::new());
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| format!("{}: {e}", path.display()))?;
        let parse = |k: usize| rec.get(k).and_then(|s| s.parse::<f64>().ok());
        match (parse(0), parse(1)) {
            (Some(x), Some(v)) => {
                xs.push(x);
                vs.push(v);
            }
            _ if i == 0 => continue,
            _ => return Err(format!("{}: row {} is not two numbers", path.display(), i + 1)),
        }
    }
    Ok((xs, vs))
}

impl RunConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| {
            let origin = Origin { path, text };
            origin.error(e.span(), e.message().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<(Self, String), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config { path: path.display().to_string(), line: None, message: e.to_string() })?;
        Ok((Self::parse(&text, path)?, text))
    }
}

/// Read, parse and build. Validation of the boundary data against the classes is left to
/// the commands (`validate` reports it instead of failing).
pub fn load(path: &Path) -> Result<Loaded, CliError> {
    let (cfg, text) = RunConfig::load(path)?;
    build(cfg, &text, path)
}

pub fn build(cfg: RunConfig, text: &str, path: &Path) -> Result<Loaded, CliError> {
    let origin = Origin { path, text };
    let s = &cfg.spec;
    let [lo, hi] = s.interval;
    let spec = match &s.sde {
        Some(sde) => {
            if s.scale.is_some() || s.speed.is_some() || s.scale_csv.is_some() || s.speed_csv.is_some() {
                return Err(origin.error(Some(sde.drift.span()), "[spec.sde] excludes scale/speed"));
            }
            let drift = origin.func(&sde.drift, "drift")?;
            let sigma = origin.func(&sde.sigma, "sigma")?;
            DiffusionSpec::from_sde(drift, sigma, lo, hi, s.reference, s.length)
        }
        None => {
            let scale = origin.measure(&s.scale, &s.scale_csv, "scale")?;
            let speed = origin.measure(&s.speed, &s.speed_csv, "speed")?;
            DiffusionSpec::new(lo, hi, s.reference, scale, speed, s.length)
        }
    }
    .map_err(feller_core::Error::from)?;

    let defaults = GridSpec::default();
    let grid = GridSpec {
        nodes: cfg.grid.nodes.unwrap_or(defaults.nodes),
        cut: cfg.grid.cut.unwrap_or(defaults.cut),
        grading: cfg.grid.grading.unwrap_or(defaults.grading),
    };

    let side = |b: &SideBlock| -> Result<SideData, CliError> {
        let density = match &b.density {
            Some(d) => {
                let e = origin.expr(&d.expr, "density")?;
                Some(JumpDensity::new(d.expr.get_ref().clone(), d.lo, d.hi, move |x| e.eval(x)))
            }
            None => None,
        };
        Ok(SideData {
            kill: b.kill,
            reflect: b.reflect,
            stick: b.stick,
            jumps: JumpMeasure {
                atoms: b.atoms.iter().map(|&[x, mass]| Atom { x, mass }).collect(),
                far_end: b.far_end,
                truncated_infinite: b.density.as_ref().is_some_and(|d| d.truncated_infinite),
                density,
            },
        })
    };
    let data = FellerBoundaryData::new(side(&cfg.boundary.a)?, side(&cfg.boundary.b)?)
        .with_mode(Endpoint::A, cfg.boundary.a.mode.into())
        .with_mode(Endpoint::B, cfg.boundary.b.mode.into());
    let case = match &cfg.boundary.case {
        Some(c) => Some(
            c.get_ref()
                .to_string()
                .parse::<Case>()
                .map_err(|m| origin.error(Some(c.span()), format!("boundary.case: {m}")))?,
        ),
        None => None,
    };

    let with_ends = |src: Source, a: Option<f64>, b: Option<f64>| {
        let src = match a {
            Some(v) => src.with_end(Endpoint::A, v),
            None => src,
        };
        match b {
            Some(v) => src.with_end(Endpoint::B, v),
            None => src,
        }
    };
    let g = match &cfg.task.g {
        Some(e) => Source::from_expr(origin.expr(e, "g")?),
        None => Source::constant(1.0),
    };
    let g = with_ends(g, cfg.task.g_a, cfg.task.g_b);
    let candidate = match &cfg.candidate {
        Some(c) => Some((
            with_ends(Source::from_expr(origin.expr(&c.f, "f")?), c.f_a, c.f_b),
            with_ends(Source::from_expr(origin.expr(&c.lf, "lf")?), c.lf_a, c.lf_b),
        )),
        None => None,
    };
    Ok(Loaded { spec: Arc::new(spec), data, case, grid, g, candidate, task: cfg.task })
}
