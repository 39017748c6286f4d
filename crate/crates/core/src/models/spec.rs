use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{AmplitudeDamping, ClassicalDiagonal, Multiphase, QubitPhase, QuditFull, SharedModel, TwoObservables};
use crate::{Error, Result};

/// On-disk model description: `{name, constants, point}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModelSpec {
    pub name: String,
    #[serde(default)]
    pub constants: BTreeMap<String, Value>,
    #[serde(default)]
    pub point: Vec<f64>,
}

impl ModelSpec {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn build(&self) -> Result<SharedModel> {
        builtin(&self.name, &self.constants)
    }

    /// Fills in parameters a short point leaves out. Only `multiphase` has
    /// any: given the `d` phases alone, `(α, p)` take their nominal values.
    pub fn complete_point(&self, point: &[f64]) -> Result<Vec<f64>> {
        if self.name == "multiphase" {
            let d = count(&self.constants, "d")?;
            if point.len() == d {
                let photons = u32::try_from(count(&self.constants, "N")?)
                    .map_err(|_| Error::InvalidModel("N too large".into()))?;
                let m = Multiphase::new(
                    d,
                    photons,
                    required(&self.constants, "a")?,
                    required(&self.constants, "b")?,
                    required(&self.constants, "eta")?,
                )?;
                return Ok(m.nominal_point(point));
            }
        }
        Ok(point.to_vec())
    }
}

fn number(constants: &BTreeMap<String, Value>, key: &str) -> Result<Option<f64>> {
    match constants.get(key) {
        None => Ok(None),
        Some(v) => {
            v.as_f64().map(Some).ok_or_else(|| Error::InvalidModel(format!("constant `{key}` must be a number")))
        }
    }
}

fn required(constants: &BTreeMap<String, Value>, key: &str) -> Result<f64> {
    number(constants, key)?.ok_or_else(|| Error::InvalidModel(format!("missing constant `{key}`")))
}

fn vector(constants: &BTreeMap<String, Value>, key: &str) -> Result<Option<Vec<f64>>> {
    match constants.get(key) {
        None => Ok(None),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| v.as_f64().ok_or_else(|| Error::InvalidModel(format!("`{key}` must hold numbers"))))
            .collect::<Result<Vec<_>>>()
            .map(Some),
        Some(_) => Err(Error::InvalidModel(format!("constant `{key}` must be an array"))),
    }
}

fn count(constants: &BTreeMap<String, Value>, key: &str) -> Result<usize> {
    let v = required(constants, key)?;
    if v < 0.0 || v.fract() != 0.0 {
        return Err(Error::InvalidModel(format!("constant `{key}` must be a nonnegative integer")));
    }
    Ok(v as usize)
}

fn three(v: Vec<f64>, key: &str) -> Result<[f64; 3]> {
    v.try_into().map_err(|_| Error::InvalidModel(format!("`{key}` must have three components")))
}

/// `p_j ∝ 2^{−j}`, a nondegenerate spectrum for `qudit_full` given only `dim`.
fn default_spectrum(dim: usize) -> Result<Vec<f64>> {
    if dim < 2 {
        return Err(Error::InvalidModel("`dim` must be at least 2".into()));
    }
    let raw: Vec<f64> = (0..dim).map(|j| 0.5f64.powi(j as i32)).collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|p| p / total).collect())
}

/// Builds a named model from its constants.
///
/// | name | constants |
/// |---|---|
/// | `two_observables` | `a`, `b` (unit 3-vectors) or `s` |
/// | `amplitude_damping` | none |
/// | `multiphase` | `d`, `N`, `a`, `b`, `eta` |
/// | `qudit_full` | `spectrum`, or `dim` for `p_j ∝ 2^{−j}` |
/// | `classical_diagonal` | `d` |
/// | `bernoulli` | none |
/// | `qubit_phase` | `r` |
pub fn builtin(name: &str, constants: &BTreeMap<String, Value>) -> Result<SharedModel> {
    Ok(match name {
        "two_observables" => {
            let model = match (vector(constants, "a")?, vector(constants, "b")?) {
                (Some(a), Some(b)) => TwoObservables::new(three(a, "a")?, three(b, "b")?)?,
                _ => TwoObservables::with_overlap(number(constants, "s")?.unwrap_or(0.0))?,
            };
            Arc::new(model)
        }
        "amplitude_damping" => Arc::new(AmplitudeDamping),
        "multiphase" => {
            let photons = count(constants, "N")?;
            Arc::new(Multiphase::new(
                count(constants, "d")?,
                u32::try_from(photons).map_err(|_| Error::InvalidModel("N too large".into()))?,
                required(constants, "a")?,
                required(constants, "b")?,
                required(constants, "eta")?,
            )?)
        }
        "qudit_full" => {
            let spectrum = match vector(constants, "spectrum")? {
                Some(v) => v,
                None if constants.contains_key("dim") => default_spectrum(count(constants, "dim")?)?,
                None => return Err(Error::InvalidModel("qudit_full needs `spectrum` or `dim`".into())),
            };
            Arc::new(QuditFull::new(spectrum)?)
        }
        "classical_diagonal" => Arc::new(ClassicalDiagonal::new(count(constants, "d")?)?),
        "bernoulli" => Arc::new(ClassicalDiagonal::new(2)?),
        "qubit_phase" => Arc::new(QubitPhase::new(number(constants, "r")?.unwrap_or(1.0))?),
        other => return Err(Error::InvalidModel(format!("unknown model `{other}`"))),
    })
}
