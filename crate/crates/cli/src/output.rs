//! CSV, JSON and report formatting with a fixed number of significant digits.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Number, Value};
use singrad_core::{Check, Trajectory};

pub const CSV_HEADER: &str = "t,x,y,r,phi_unwrapped,winding";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone)]
pub struct OutputConfig {
    pub format: Format,
    pub out_path: Option<PathBuf>,
    pub svg_path: Option<PathBuf>,
    /// Significant decimal digits, 6 to 17.
    pub precision: usize,
}

/// Scientific notation with `precision` significant digits.
pub fn num(v: f64, precision: usize) -> String {
    format!("{:.*e}", precision.saturating_sub(1), v)
}

fn round(v: f64, precision: usize) -> f64 {
    num(v, precision).parse().unwrap_or(v)
}

pub fn trajectory_csv(traj: &Trajectory, precision: usize) -> String {
    let mut out = String::with_capacity(64 * (traj.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (s, w) in traj.samples().iter().zip(traj.winding_profile()) {
        let [x, y] = traj.cartesian(s);
        let row = [s.t, x, y, s.r, s.phi, w].map(|v| num(v, precision));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn round_value(v: &mut Value, precision: usize) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n
                .as_f64()
                .and_then(|f| Number::from_f64(round(f, precision)))
            {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(|x| round_value(x, precision)),
        Value::Object(map) => map.values_mut().for_each(|x| round_value(x, precision)),
        _ => {}
    }
}

/// Pretty JSON with every float rounded to `precision` significant digits.
pub fn json<T: Serialize>(value: &T, precision: usize) -> serde_json::Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_value(&mut v, precision);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

/// Writes to `path`, or to standard output when there is none. A reader
/// closing standard output early is not an error.
pub fn emit(path: Option<&Path>, text: &str) -> io::Result<()> {
    match path {
        Some(p) => fs::write(p, text),
        None => {
            let mut stdout = io::stdout().lock();
            match stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
            {
                Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
                other => other,
            }
        }
    }
}

pub fn check_line(prefix: &str, c: &Check) -> String {
    format!(
        "{:<8} {:<26} {:>12} {:>12} {:>10}  {}",
        prefix,
        c.name,
        num(c.measured, 6),
        num(c.expected, 6),
        num(c.tol, 3),
        if c.pass { "PASS" } else { "FAIL" }
    )
}

pub fn check_header() -> String {
    format!(
        "{:<8} {:<26} {:>12} {:>12} {:>10}  result",
        "suite", "check", "measured", "expected", "tol"
    )
}
