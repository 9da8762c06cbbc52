//! Number formatting and file writers. All writes happen on the main thread
//! after the computation has finished.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

/// Rounds to 12 significant digits.
pub fn sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

pub fn num(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    format!("{}", sig12(x))
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if let Some(x) = n.as_f64().filter(|_| n.is_f64()) {
                if let Some(r) = serde_json::Number::from_f64(sig12(x)) {
                    *n = r;
                }
            }
        }
        Value::Array(xs) => xs.iter_mut().for_each(round_value),
        Value::Object(m) => m.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with every float rounded to 12 significant digits.
pub fn to_json<T: Serialize>(x: &T) -> serde_json::Result<String> {
    let mut v = serde_json::to_value(x)?;
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(root)?;
        Ok(OutDir { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, x: &T) -> Result<PathBuf, crate::CliError> {
        let path = self.path(name);
        fs::write(&path, to_json(x)?)?;
        Ok(path)
    }

    pub fn write_csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf, crate::CliError> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(sig12(0.1 + 0.2), 0.3);
        assert_eq!(num(1.0 / 3.0), "0.333333333333");
        assert_eq!(num(123456.7890123456), "123456.789012");
        assert_eq!(num(0.0), "0");
        assert_eq!(num(-2.5e-20), "-0.000000000000000000025");
        assert_eq!(opt_num(None), "");
    }

    #[test]
    fn json_floats_are_rounded_integers_untouched() {
        #[derive(Serialize)]
        struct X {
            a: f64,
            b: Vec<f64>,
            n: usize,
        }
        let s = to_json(&X { a: 2.0 / 3.0, b: vec![0.1 + 0.2], n: 7 }).unwrap();
        assert!(s.contains("0.666666666667"));
        assert!(s.contains("0.3"));
        assert!(s.contains("\"n\": 7"));
    }
}
