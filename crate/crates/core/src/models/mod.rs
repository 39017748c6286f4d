//! Parametric families of density matrices.
//!
//! A model is any type implementing [`ParametricModel`]. [`state_at`] and
//! [`derivatives_at`] are the validated entry points used by the rest of the
//! crate; the trait methods themselves are unchecked.

mod builtin;
pub mod extension;
mod spec;

use std::sync::Arc;

pub use builtin::{AmplitudeDamping, ClassicalDiagonal, Multiphase, QubitPhase, QuditFull, TwoObservables};
pub use extension::{minimal_d_invariant_extension, ModelExtension};
pub use spec::{builtin, ModelSpec};

use crate::matcore::{hermitian_eig, hermiticity_defect, trace, EIGEN_FLOOR};
use crate::{CMatrix, Error, RMatrix, Result};

pub const DEFAULT_FD_STEP: f64 = 1e-5;
const TRACE_TOL: f64 = 1e-10;
const DERIVATIVE_TOL: f64 = 1e-8;

pub type SharedModel = Arc<dyn ParametricModel>;

pub trait ParametricModel: Send + Sync {
    fn name(&self) -> String;
    fn dim(&self) -> usize;
    fn num_params(&self) -> usize;

    /// Unvalidated state map.
    fn state(&self, t: &[f64]) -> Result<CMatrix>;

    /// Analytic `∂ρ/∂t_j`, when the model knows them.
    fn analytic_derivatives(&self, _t: &[f64]) -> Option<Result<Vec<CMatrix>>> {
        None
    }

    fn fd_step(&self) -> f64 {
        DEFAULT_FD_STEP
    }

    fn in_domain(&self, _t: &[f64]) -> bool {
        true
    }

    fn param_names(&self) -> Vec<String> {
        (0..self.num_params()).map(|j| format!("t{j}")).collect()
    }

    /// Number of trailing parameters treated as nuisance by default. Parameters
    /// are always ordered interest first.
    fn default_nuisance(&self) -> usize {
        0
    }
}

fn check_len(model: &dyn ParametricModel, t: &[f64]) -> Result<()> {
    if t.len() != model.num_params() {
        return Err(Error::Dimension(format!(
            "{} expects {} parameters, got {}",
            model.name(),
            model.num_params(),
            t.len()
        )));
    }
    if t.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("parameter vector"));
    }
    Ok(())
}

/// Checks that `rho` is a density matrix: Hermitian, unit trace and PSD.
pub fn validate_density(rho: &CMatrix) -> Result<()> {
    let asymmetry = hermiticity_defect(rho);
    if asymmetry > crate::matcore::HERMITIAN_TOL {
        return Err(Error::NotHermitian { asymmetry });
    }
    let tr = trace(rho);
    if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
        return Err(Error::InvalidModel(format!("trace {tr} differs from 1")));
    }
    let min = hermitian_eig(rho)?.values[0];
    if min < -EIGEN_FLOOR {
        return Err(Error::NotPositive { eigenvalue: min });
    }
    Ok(())
}

/// Validated state at `t`.
pub fn state_at(model: &dyn ParametricModel, t: &[f64]) -> Result<CMatrix> {
    check_len(model, t)?;
    if !model.in_domain(t) {
        return Err(Error::Domain(format!("{:?} outside the domain of {}", t, model.name())));
    }
    let rho = model.state(t)?;
    if rho.nrows() != model.dim() || rho.ncols() != model.dim() {
        return Err(Error::Dimension(format!("{} returned a {}×{} state", model.name(), rho.nrows(), rho.ncols())));
    }
    validate_density(&rho)?;
    Ok(rho)
}

/// Central differences `(ρ(t + h e_j) − ρ(t − h e_j)) / 2h`.
pub fn finite_difference_derivatives(model: &dyn ParametricModel, t: &[f64], h: f64) -> Result<Vec<CMatrix>> {
    check_len(model, t)?;
    (0..t.len())
        .map(|j| {
            let mut plus = t.to_vec();
            let mut minus = t.to_vec();
            plus[j] += h;
            minus[j] -= h;
            if !model.in_domain(&plus) || !model.in_domain(&minus) {
                return Err(Error::Domain(format!(
                    "finite-difference step {h} on {} leaves the domain at {:?}",
                    model.param_names()[j],
                    t
                )));
            }
            Ok((model.state(&plus)? - model.state(&minus)?).unscale(2.0 * h))
        })
        .collect()
}

/// Derivatives at `t`: analytic when the model provides them, central differences otherwise.
pub fn derivatives_at(model: &dyn ParametricModel, t: &[f64]) -> Result<Vec<CMatrix>> {
    check_len(model, t)?;
    if !model.in_domain(t) {
        return Err(Error::Domain(format!("{:?} outside the domain of {}", t, model.name())));
    }
    let derivs = match model.analytic_derivatives(t) {
        Some(d) => d?,
        None => finite_difference_derivatives(model, t, model.fd_step())?,
    };
    if derivs.len() != model.num_params() {
        return Err(Error::Dimension(format!("{} returned {} derivatives", model.name(), derivs.len())));
    }
    for (j, g) in derivs.iter().enumerate() {
        let scale = g.iter().fold(1.0f64, |m, z| m.max(z.norm()));
        let asym = (g - g.adjoint()).iter().fold(0.0f64, |m, z| m.max(z.norm())) / scale;
        let tr = trace(g).norm() / scale;
        if asym > DERIVATIVE_TOL || tr > DERIVATIVE_TOL {
            return Err(Error::InvalidModel(format!(
                "derivative {j} of {} is not Hermitian traceless (asymmetry {asym:.2e}, trace {tr:.2e})",
                model.name()
            )));
        }
    }
    Ok(derivs)
}

/// `ρ_t = ρ0 + Σ t_j G_j`.
#[derive(Debug, Clone)]
pub struct LinearModel {
    pub rho0: CMatrix,
    pub generators: Vec<CMatrix>,
    pub label: String,
}

impl LinearModel {
    pub fn new(rho0: CMatrix, generators: Vec<CMatrix>) -> Result<Self> {
        validate_density(&rho0)?;
        if generators.iter().any(|g| g.shape() != rho0.shape()) {
            return Err(Error::Dimension("generator shape differs from ρ0".into()));
        }
        Ok(LinearModel { rho0, generators, label: "linear".into() })
    }
}

impl ParametricModel for LinearModel {
    fn name(&self) -> String {
        self.label.clone()
    }
    fn dim(&self) -> usize {
        self.rho0.nrows()
    }
    fn num_params(&self) -> usize {
        self.generators.len()
    }
    fn state(&self, t: &[f64]) -> Result<CMatrix> {
        let mut rho = self.rho0.clone();
        for (g, &tj) in self.generators.iter().zip(t) {
            rho += g.scale(tj);
        }
        Ok(rho)
    }
    fn analytic_derivatives(&self, _t: &[f64]) -> Option<Result<Vec<CMatrix>>> {
        Some(Ok(self.generators.clone()))
    }
}

/// Submodel with some parameters pinned: only `free` indices vary.
#[derive(Clone)]
pub struct FixedParams {
    inner: SharedModel,
    base: Vec<f64>,
    free: Vec<usize>,
}

impl FixedParams {
    /// `base` supplies the pinned values; entries at `free` positions are ignored.
    pub fn new(inner: SharedModel, base: Vec<f64>, free: Vec<usize>) -> Result<Self> {
        if base.len() != inner.num_params() || free.iter().any(|&i| i >= base.len()) {
            return Err(Error::Dimension("invalid free-parameter selection".into()));
        }
        Ok(FixedParams { inner, base, free })
    }

    fn embed(&self, t: &[f64]) -> Vec<f64> {
        let mut full = self.base.clone();
        for (&i, &v) in self.free.iter().zip(t) {
            full[i] = v;
        }
        full
    }

    /// The free coordinates of a full parameter vector.
    pub fn project(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&i| full[i]).collect()
    }
}

impl ParametricModel for FixedParams {
    fn name(&self) -> String {
        format!("{}[fixed]", self.inner.name())
    }
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn num_params(&self) -> usize {
        self.free.len()
    }
    fn state(&self, t: &[f64]) -> Result<CMatrix> {
        self.inner.state(&self.embed(t))
    }
    fn analytic_derivatives(&self, t: &[f64]) -> Option<Result<Vec<CMatrix>>> {
        let all = self.inner.analytic_derivatives(&self.embed(t))?;
        Some(all.map(|d| self.free.iter().map(|&i| d[i].clone()).collect()))
    }
    fn fd_step(&self) -> f64 {
        self.inner.fd_step()
    }
    fn in_domain(&self, t: &[f64]) -> bool {
        self.inner.in_domain(&self.embed(t))
    }
    fn param_names(&self) -> Vec<String> {
        let names = self.inner.param_names();
        self.free.iter().map(|&i| names[i].clone()).collect()
    }
}

/// Linear reparametrization `s ↦ ρ_{A s}`.
#[derive(Clone)]
pub struct Reparametrized {
    inner: SharedModel,
    a: RMatrix,
}

impl Reparametrized {
    pub fn new(inner: SharedModel, a: RMatrix) -> Result<Self> {
        if a.nrows() != inner.num_params() {
            return Err(Error::Dimension("reparametrization rows must match the parameter count".into()));
        }
        Ok(Reparametrized { inner, a })
    }

    fn map(&self, s: &[f64]) -> Vec<f64> {
        (0..self.a.nrows()).map(|i| (0..self.a.ncols()).map(|j| self.a[(i, j)] * s[j]).sum()).collect()
    }
}

impl ParametricModel for Reparametrized {
    fn name(&self) -> String {
        format!("{}[reparametrized]", self.inner.name())
    }
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn num_params(&self) -> usize {
        self.a.ncols()
    }
    fn state(&self, s: &[f64]) -> Result<CMatrix> {
        self.inner.state(&self.map(s))
    }
    fn analytic_derivatives(&self, s: &[f64]) -> Option<Result<Vec<CMatrix>>> {
        let inner = self.inner.analytic_derivatives(&self.map(s))?;
        Some(inner.map(|d| {
            (0..self.a.ncols())
                .map(|j| {
                    let mut acc = CMatrix::zeros(self.dim(), self.dim());
                    for (i, di) in d.iter().enumerate() {
                        acc += di.scale(self.a[(i, j)]);
                    }
                    acc
                })
                .collect()
        }))
    }
    fn in_domain(&self, s: &[f64]) -> bool {
        self.inner.in_domain(&self.map(s))
    }
}
