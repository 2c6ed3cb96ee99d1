//! End-to-end runs of the `feller` binary on the shipped configurations.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn feller(args: &[&str], cfg: &str, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_feller"))
        .args(args)
        .arg("--config")
        .arg(config(cfg))
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))).unwrap()
}

fn f(v: &Value) -> f64 {
    match v {
        Value::Number(n) => n.as_f64().unwrap(),
        Value::String(s) => s.parse().unwrap(),
        other => panic!("not a number: {other}"),
    }
}

fn csv_rows(path: PathBuf) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    (header, lines.map(|l| l.split(',').map(String::from).collect()).collect())
}

#[test]
fn classify_brownian_motion() {
    let dir = tempfile::tempdir().unwrap();
    let out = feller(&["classify"], "bm.toml", dir.path());
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), r#"{"a":"Regular","b":"Regular"}"#);
    let v = json(dir.path().join("classify.json"));
    assert_eq!(v["a"], "Regular");
    assert_eq!(v["b"], "Regular");
    let out = feller(&["classify"], "ou.toml", dir.path());
    assert!(out.status.success());
    assert_eq!(json(dir.path().join("classify.json"))["a"], "Natural");
}

#[test]
fn failing_validation_exits_2_and_names_pcond2() {
    let dir = tempfile::tempdir().unwrap();
    let out = feller(&["validate"], "pure_jump.toml", dir.path());
    assert_eq!(out.status.code(), Some(2));
    let v = json(dir.path().join("validation.json"));
    assert_eq!(v["passed"], false);
    let failed: Vec<&str> = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["pcond2"]);
    // commands that need valid data refuse it with the module-qualified code
    let out = feller(&["resolve"], "pure_jump.toml", dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["code"], "feller_bc::InvalidBoundaryData");
}

#[test]
fn valid_configs_pass_validation() {
    let dir = tempfile::tempdir().unwrap();
    for cfg in ["bm.toml", "sticky.toml", "elastic_jumps.toml", "entrance_sticky.toml", "ou.toml", "tabulated.toml"] {
        let out = feller(&["validate"], cfg, dir.path());
        assert_eq!(out.status.code(), Some(0), "{cfg}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn resolve_reports_three_agreeing_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = feller(&["resolve", "--r", "0.5", "--also-oracle", "--also-mc", "--paths", "20000"], "sticky.toml", dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(dir.path().join("resolve_r0.5.json"));
    assert_eq!(v["agree"], true);
    assert_eq!(v["case"], "4°");
    for p in v["points"].as_array().unwrap() {
        let a = f(&p["analytic"]);
        assert!((f(&p["oracle"]) - a).abs() <= f(&p["oracle_tolerance"]));
        assert!((f(&p["mc"]) - a).abs() <= f(&p["mc_tolerance"]));
        assert!(f(&p["mc_stderr"]) > 0.0);
    }
    // ψ_a = βr + k coth k for Brownian motion, k = √(2r), β = p3/p2 = 1
    let k = 1.0f64;
    assert!((f(&v["psi_a"]) - (0.5 + k / k.tanh())).abs() < 1e-6);
}

#[test]
fn grid_oracle_and_minimal_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = feller(&["resolve", "--oracle", "grid", "--nodes", "2001", "--minimal"], "bm.toml", dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = csv_rows(dir.path().join("resolve_r0.5.csv"));
    assert_eq!(header, ["x", "R"]);
    assert_eq!(rows.len(), 2001);
    // killed BM, g = 1, r = ½: R(½) = 2(1 − 1/cosh ½)
    let mid = rows.iter().find(|r| r[0].parse::<f64>().unwrap() == 0.5).unwrap();
    let exact = 2.0 * (1.0 - 1.0 / 0.5f64.cosh());
    assert!((mid[1].parse::<f64>().unwrap() - exact).abs() < 1e-6);
    let (header, rows) = csv_rows(dir.path().join("minimal_r0.5.csv"));
    assert_eq!(header, ["x", "R0"]);
    assert_eq!(rows.len(), 2001);
}

#[test]
fn csv_and_json_round_trip_at_twelve_digits() {
    let dir = tempfile::tempdir().unwrap();
    assert!(feller(&["eigen", "--r", "0.5,2"], "bm.toml", dir.path()).status.success());
    for r in ["0.5", "2"] {
        let (header, rows) = csv_rows(dir.path().join(format!("eigen_r{r}.csv")));
        assert_eq!(header, ["x", "u", "v", "Dsu", "Dsv"]);
        for row in &rows {
            let vals: Vec<f64> = row.iter().map(|s| s.parse().unwrap()).collect();
            for (s, v) in row.iter().zip(&vals) {
                // re-emitting a parsed field reproduces it exactly
                assert_eq!(&format_like(*v), s);
            }
            let w = vals[2] * vals[3] - vals[1] * vals[4];
            assert!((w - 1.0).abs() < 1e-9, "Wronskian {w}");
        }
    }
    assert!(feller(&["resolve"], "elastic_jumps.toml", dir.path()).status.success());
    let text = fs::read_to_string(dir.path().join("resolve_r0.5.json")).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string_pretty(&v).unwrap() + "\n", text);
}

fn format_like(v: f64) -> String {
    let s = format!("{v:.11e}");
    match s.split_once('e') {
        Some((m, e)) if !e.starts_with('-') => format!("{m}e+{e}"),
        _ => s,
    }
}

#[test]
fn same_seed_same_bytes() {
    let (d1, d2, d3) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["simulate", "--seed", "42", "--paths", "3000", "--horizon", "5"];
    for d in [&d1, &d2] {
        assert!(feller(&args, "elastic_jumps.toml", d.path()).status.success());
    }
    for name in ["paths.csv", "estimates.json"] {
        assert_eq!(fs::read(d1.path().join(name)).unwrap(), fs::read(d2.path().join(name)).unwrap(), "{name}");
    }
    assert!(feller(&["simulate", "--seed", "43", "--paths", "3000", "--horizon", "5"], "elastic_jumps.toml", d3.path()).status.success());
    assert_ne!(fs::read(d1.path().join("paths.csv")).unwrap(), fs::read(d3.path().join("paths.csv")).unwrap());

    let v = json(d1.path().join("estimates.json"));
    assert_eq!(v["seed"], 42);
    let run = &v["runs"][0];
    assert_eq!(run["resolvent"].as_array().unwrap().len(), 3);
    assert!(run["excursions"]["a"]["psi"]["value"].is_number());
    let (header, rows) = csv_rows(d1.path().join("paths.csv"));
    assert_eq!(header, ["path", "t", "x", "tag"]);
    assert!(rows.iter().all(|r| r.len() == 4));
}

#[test]
fn check_domain_on_resolvents_and_candidates() {
    let dir = tempfile::tempdir().unwrap();
    for cfg in ["sticky.toml", "elastic_jumps.toml", "entrance_sticky.toml", "ou.toml"] {
        let out = feller(&["check-domain"], cfg, dir.path());
        assert_eq!(out.status.code(), Some(0), "{cfg}: {}", fs::read_to_string(dir.path().join("domain.json")).unwrap());
    }
    // killed BM: f = x(1 − x) has L f = ½ f'' = −1 and vanishes at both ends; f = x does not
    let base = fs::read_to_string(config("bm.toml")).unwrap();
    for (f, lf, code) in [("x*(1-x)", "-1", 0), ("x", "0", 2)] {
        let path = dir.path().join("candidate.toml");
        fs::write(&path, format!("{base}\n[candidate]\nf = \"{f}\"\nlf = \"{lf}\"\n")).unwrap();
        let out = Command::new(env!("CARGO_BIN_EXE_feller"))
            .args(["check-domain", "--config"])
            .arg(&path)
            .arg("--out")
            .arg(dir.path())
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(code), "f = {f}");
    }
}

#[test]
fn errors_are_structured() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "[spec]\ninterval = [0.0, 1.0]\nreference = 0.5\nscale = \"1 +\"\nspeed = \"2\"\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_feller")).args(["classify", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["code"], "cli::ConfigError");
    assert_eq!(err["error"]["line"], 4);

    fs::write(&path, "[spec]\ninterval = [0.0, 1.0]\nreference = 2.0\nscale = \"1\"\nspeed = \"2\"\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_feller")).args(["classify", "--config"]).arg(&path).output().unwrap();
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["error"]["code"].as_str().unwrap().starts_with("scale_speed::"), "{err}");

    let out = Command::new(env!("CARGO_BIN_EXE_feller")).arg("classify").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn tabulated_tables_resolve_relative_to_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_feller"))
        .current_dir(dir.path())
        .args(["resolve", "--config"])
        .arg(config("tabulated.toml"))
        .args(["--out", "."])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    // the tables describe Brownian motion exactly: compare with the density form
    let sticky_bm = fs::read_to_string(config("tabulated.toml"))
        .unwrap()
        .replace("scale_csv = \"bm_scale.csv\"", "scale = \"1\"")
        .replace("speed_csv = \"bm_speed.csv\"", "speed = \"2\"");
    let density_cfg = dir.path().join("density.toml");
    fs::write(&density_cfg, sticky_bm).unwrap();
    let sub = dir.path().join("d");
    let out = Command::new(env!("CARGO_BIN_EXE_feller"))
        .args(["resolve", "--config"])
        .arg(&density_cfg)
        .arg("--out")
        .arg(&sub)
        .output()
        .unwrap();
    assert!(out.status.success());
    let a = json(dir.path().join("resolve_r0.5.json"));
    let b = json(sub.join("resolve_r0.5.json"));
    assert!((f(&a["R_a"]) - f(&b["R_a"])).abs() < 1e-9);
}
