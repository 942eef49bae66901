//! Text input formats.
//!
//! Points files hold one point per line: whitespace-separated coordinates,
//! optionally followed by a `w=<real>` weight token (default 1). Blank lines
//! and lines starting with `#` are skipped. Matrix files hold `n` on the
//! first line followed by `n` rows of `n` reals.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::metric::{DistanceOracle, Instance, MetricMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Points,
    Matrix,
}

impl FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "points" => Ok(InputFormat::Points),
            "matrix" => Ok(InputFormat::Matrix),
            other => Err(Error::InvalidParams(format!("unknown input format `{other}`"))),
        }
    }
}

fn parse_real(token: &str, line: usize) -> Result<f64> {
    let v: f64 = token
        .parse()
        .map_err(|_| Error::Parse { line, message: format!("`{token}` is not a real number") })?;
    if !v.is_finite() {
        return Err(Error::Parse { line, message: format!("`{token}` is not finite") });
    }
    Ok(v)
}

/// Parses a points file body. `metric` must be a coordinate mode.
pub fn parse_points(text: &str, metric: MetricMode) -> Result<Instance> {
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    let mut dim = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let mut tokens: Vec<&str> = body.split_whitespace().collect();
        let mut weight = 1.0;
        if let Some(w) = tokens.last().and_then(|t| t.strip_prefix("w=")) {
            weight = parse_real(w, line)?;
            if weight < 0.0 {
                return Err(Error::Parse { line, message: format!("negative weight {weight}") });
            }
            tokens.pop();
        }
        if tokens.is_empty() {
            return Err(Error::Parse { line, message: "no coordinates".into() });
        }
        if let Some(t) = tokens.iter().find(|t| t.starts_with("w=")) {
            return Err(Error::Parse { line, message: format!("weight token `{t}` must come last") });
        }
        match dim {
            None => dim = Some(tokens.len()),
            Some(d) if d != tokens.len() => {
                return Err(Error::Parse { line, message: format!("expected {d} coordinates, found {}", tokens.len()) });
            }
            _ => {}
        }
        for t in tokens {
            coords.push(parse_real(t, line)?);
        }
        weights.push(weight);
    }
    let dim = dim.ok_or_else(|| Error::InvalidInput("points file contains no points".into()))?;
    Instance::new(DistanceOracle::coordinates(dim, coords, metric)?, weights)
}

/// Parses a matrix file body; the matrix must be a symmetric, zero-diagonal
/// table of nonnegative reals.
pub fn parse_matrix(text: &str) -> Result<Instance> {
    let mut rows = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.trim().starts_with('#'));
    let (first, header) = rows.next().ok_or_else(|| Error::InvalidInput("matrix file is empty".into()))?;
    let n: usize = header
        .trim()
        .parse()
        .map_err(|_| Error::Parse { line: first + 1, message: format!("`{}` is not a point count", header.trim()) })?;
    if n == 0 {
        return Err(Error::Parse { line: first + 1, message: "point count must be positive".into() });
    }
    let mut data = Vec::with_capacity(n * n);
    let mut seen = 0;
    for (idx, raw) in rows {
        let line = idx + 1;
        if seen == n {
            return Err(Error::Parse { line, message: format!("more than {n} matrix rows") });
        }
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        if tokens.len() != n {
            return Err(Error::Parse { line, message: format!("expected {n} entries, found {}", tokens.len()) });
        }
        for t in tokens {
            data.push(parse_real(t, line)?);
        }
        seen += 1;
    }
    if seen != n {
        return Err(Error::InvalidInput(format!("expected {n} matrix rows, found {seen}")));
    }
    Instance::uniform(DistanceOracle::matrix(n, data)?)
}

/// Reads and parses `path`. `metric` applies to points files.
pub fn parse_input(path: &Path, format: InputFormat, metric: MetricMode) -> Result<Instance> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("cannot read {}: {e}", path.display()))))?;
    match format {
        InputFormat::Points => parse_points(&text, metric),
        InputFormat::Matrix => parse_matrix(&text),
    }
}
