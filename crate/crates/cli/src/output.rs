//! Fixed-precision CSV and JSON output: every number is written with 12 significant digits,
//! so identical runs produce identical bytes and re-reading loses nothing beyond that.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::{Map, Number, Value};

use crate::CliError;

/// 12 significant digits in scientific form; `inf`, `-inf`, `nan` otherwise.
pub fn fmt12(v: f64) -> String {
    if v.is_finite() {
        let s = format!("{v:.11e}");
        // explicit exponent sign, as serde_json writes it
        match s.split_once('e') {
            Some((m, e)) if !e.starts_with('-') => format!("{m}e+{e}"),
            _ => s,
        }
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// A JSON number carrying exactly the [`fmt12`] text; non-finite values become strings.
pub fn num(v: f64) -> Value {
    let text = fmt12(v);
    match Number::from_str(&text) {
        Ok(n) if v.is_finite() => Value::Number(n),
        _ => Value::String(text),
    }
}

pub fn opt(v: Option<f64>) -> Value {
    v.map_or(Value::Null, num)
}

/// Ordered-key object builder (keys are sorted on output, which keeps files stable).
#[derive(Default)]
pub struct Obj(Map<String, Value>);

impl Obj {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.0.insert(key.to_string(), value.into());
        self
    }

    pub fn num(self, key: &str, v: f64) -> Self {
        self.set(key, num(v))
    }
}

impl From<Obj> for Value {
    fn from(o: Obj) -> Self {
        Value::Object(o.0)
    }
}

pub struct OutDir {
    root: PathBuf,
    pub written: Vec<PathBuf>,
}

impl OutDir {
    pub fn new(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(OutDir { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn json(&mut self, name: &str, value: &Value) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("JSON values always serialize");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Header plus rows of preformatted fields.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io(format!("{name}: {e}"));
        w.write_record(header).map_err(io)?;
        for row in rows {
            w.write_record(&row).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(format!("{name}: {e}")))?;
        self.write(name, &bytes)
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }
}

/// File-name tag for a rate: `r0.5`, `r2`.
pub fn r_tag(r: f64) -> String {
    format!("r{r}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits_round_trip() {
        for v in [0.5, -1.0 / 3.0, 1e-300, 6.02214076e23, 0.0] {
            let s = fmt12(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(fmt12(back), s);
            assert!((back - v).abs() <= 5e-12 * v.abs());
        }
        assert_eq!(fmt12(0.5), "5.00000000000e-1");
        assert_eq!(fmt12(2.0), "2.00000000000e+0");
        assert_eq!(fmt12(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn json_numbers_keep_their_text() {
        let v = Obj::new().num("x", 1.0 / 3.0).num("y", f64::INFINITY);
        let text = serde_json::to_string(&Value::from(v)).unwrap();
        assert_eq!(text, r#"{"x":3.33333333333e-1,"y":"inf"}"#);
    }
}
