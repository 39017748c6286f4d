//! Parsers for the string-valued flags.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DVector;
use qprecision::RMatrix;
use serde_json::Value;

use crate::CliError;

/// `k=v,k=v,...`. Values are JSON where they parse as JSON (so `a=[1,0,0]`
/// works); anything else is kept as a string. Commas inside brackets do not
/// split.
pub fn parse_constants(text: &str) -> Result<BTreeMap<String, Value>, CliError> {
    let mut out = BTreeMap::new();
    for item in split_top_level(text) {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::Validation(format!("constant `{item}` is not of the form k=v")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(CliError::Validation(format!("constant `{item}` has an empty name")));
        }
        let value = value.trim();
        let parsed = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()));
        if out.insert(key.to_string(), parsed).is_some() {
            return Err(CliError::Validation(format!("constant `{key}` given twice")));
        }
    }
    Ok(out)
}

fn split_top_level(text: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let (mut depth, mut start) = (0i32, 0usize);
    for (i, ch) in text.char_indices() {
        match ch {
            '[' => depth += 1,
            ']' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&text[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&text[start..]);
    parts
}

pub fn parse_list(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|v| {
            let v = v.trim();
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::Validation(format!("{what}: `{v}` is not a finite number")))
        })
        .collect()
}

/// `identity`, `diag:w1,w2,...` or `file:path` (JSON array of rows).
pub fn parse_weight(text: &str, k: usize) -> Result<RMatrix, CliError> {
    let w = if text == "identity" {
        RMatrix::identity(k, k)
    } else if let Some(rest) = text.strip_prefix("diag:") {
        RMatrix::from_diagonal(&DVector::from_vec(parse_list(rest, "weight")?))
    } else if let Some(path) = text.strip_prefix("file:") {
        read_matrix(Path::new(path))?
    } else {
        return Err(CliError::Validation(format!("weight `{text}`: expected identity, diag:... or file:...")));
    };
    if w.shape() != (k, k) {
        return Err(CliError::Validation(format!("weight is {}×{} but {k}×{k} is needed", w.nrows(), w.ncols())));
    }
    Ok(w)
}

fn read_matrix(path: &Path) -> Result<RMatrix, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let rows: Vec<Vec<f64>> =
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(CliError::Validation(format!("{}: ragged rows", path.display())));
    }
    Ok(RMatrix::from_row_iterator(rows.len(), ncols, rows.iter().flatten().copied()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    pub param: String,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl GridAxis {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.lo];
        }
        let h = (self.hi - self.lo) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| if i + 1 == self.steps { self.hi } else { self.lo + h * i as f64 }).collect()
    }
}

/// `param:lo:hi:steps`.
pub fn parse_grid(text: &str) -> Result<GridAxis, CliError> {
    let bad = |why: &str| CliError::Validation(format!("grid `{text}`: {why}"));
    let parts: Vec<&str> = text.split(':').collect();
    let [param, lo, hi, steps] = parts[..] else {
        return Err(bad("expected param:lo:hi:steps"));
    };
    let number = |v: &str| v.trim().parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| bad("bad bound"));
    let (lo, hi) = (number(lo)?, number(hi)?);
    let steps: usize = steps.trim().parse().map_err(|_| bad("steps must be a positive integer"))?;
    if steps == 0 {
        return Err(bad("steps must be a positive integer"));
    }
    if lo > hi {
        return Err(bad("lo exceeds hi"));
    }
    Ok(GridAxis { param: param.trim().to_string(), lo, hi, steps })
}
