//! The bound ladder: SLD, RLD, Holevo and nuisance-parameter bounds.
//!
//! Holevo-type bounds are computed on a D-invariant extension with SLD matrix
//! `J′` and D-matrix `D′` by minimizing
//!
//! `f(P) = tr[W Re Z] + tr|√W Im Z √W|`, `Z = P J′⁻¹ Pᵀ + (i/2) P J′⁻¹D′J′⁻¹ Pᵀ`
//!
//! over `k × k′` matrices `P` whose leading columns are pinned to `[I | 0]`.

use std::sync::Arc;

use serde::Serialize;

use crate::fisher::{sld_qfi, QfiBundle};
use crate::matcore::{
    imag_part, inverse_complex, inverse_spd, psd_sqrt_real, real_abs, real_part, real_trace_norm, symmetric_eig,
    symmetric_part, EIGEN_FLOOR,
};
use crate::models::{
    extension::extend_local, minimal_d_invariant_extension, FixedParams, ModelExtension, ParametricModel,
};
use crate::optim::{minimize_with_restarts, NelderMeadOptions};
use crate::{Error, RMatrix, Result};

/// Validates a weight matrix and clamps tiny negative eigenvalues to zero.
pub fn weight_matrix(w: &RMatrix, k: usize) -> Result<RMatrix> {
    if w.nrows() != k || w.ncols() != k {
        return Err(Error::Dimension(format!("weight must be {k}×{k}, got {}×{}", w.nrows(), w.ncols())));
    }
    let (values, vectors) = symmetric_eig(w)?;
    if values.first().is_some_and(|&l| l < -EIGEN_FLOOR) {
        return Err(Error::NotPositive { eigenvalue: values[0] });
    }
    Ok(crate::matcore::spectral_map_real(&values, &vectors, |l| l.max(0.0)))
}

fn is_singular(w: &RMatrix) -> Result<bool> {
    let (values, _) = symmetric_eig(w)?;
    let max = values.last().copied().unwrap_or(0.0).max(1.0);
    Ok(values[0] <= 1e-12 * max)
}

/// `tr[W J⁻¹]`.
pub fn sld_bound(j: &RMatrix, w: &RMatrix) -> Result<f64> {
    let w = weight_matrix(w, j.nrows())?;
    Ok((w * inverse_spd(j, "SLD Fisher information")?).trace())
}

/// `tr[W Re J̃⁻¹] + tr|√W Im J̃⁻¹ √W|`.
pub fn rld_bound(rld: &crate::CMatrix, w: &RMatrix) -> Result<f64> {
    let w = weight_matrix(w, rld.nrows())?;
    let inv = inverse_complex(rld).map_err(|_| Error::Singular("RLD Fisher information"))?;
    weighted_value(&real_part(&inv), &imag_part(&inv), &w)
}

/// `tr[W A] + tr|√W B √W|`.
pub fn weighted_value(re: &RMatrix, im: &RMatrix, w: &RMatrix) -> Result<f64> {
    let sw = psd_sqrt_real(w)?;
    Ok((w * re).trace() + real_trace_norm(&(&sw * im * &sw)))
}

/// `tr[W J⁻¹] + ½ tr|√W J⁻¹DJ⁻¹ √W|`, the bound of a D-invariant model.
pub fn d_invariant_bound(j: &RMatrix, d: &RMatrix, w: &RMatrix) -> Result<f64> {
    let w = weight_matrix(w, j.nrows())?;
    let ji = inverse_spd(j, "SLD Fisher information")?;
    weighted_value(&ji, &(&ji * d * &ji).scale(0.5), &w)
}

/// Restart and convergence record of a P minimization.
#[derive(Debug, Clone, Serialize)]
pub struct MinimizerDiagnostics {
    pub free_entries: usize,
    pub restarts: usize,
    pub restart_values: Vec<f64>,
    pub evaluations: usize,
    pub converged: bool,
    /// At least two restarts reach the best value to 1e-6 relative.
    pub stable: bool,
    pub spread: f64,
}

/// Result of a Holevo-type minimization.
#[derive(Debug, Clone, Serialize)]
pub struct PMinimization {
    pub value: f64,
    #[serde(serialize_with = "crate::matcore::serialize_rows")]
    pub p: RMatrix,
    pub diagnostics: MinimizerDiagnostics,
}

#[derive(Debug, Clone, Copy)]
pub struct MinimizerOptions {
    pub restarts: usize,
    pub perturbation: f64,
    pub seed: u64,
    pub nelder_mead: NelderMeadOptions,
}

impl Default for MinimizerOptions {
    fn default() -> Self {
        MinimizerOptions { restarts: 8, perturbation: 0.5, seed: 0x5eed, nelder_mead: NelderMeadOptions::default() }
    }
}

/// `(J′⁻¹, J′⁻¹D′J′⁻¹)` of an extension.
#[derive(Debug, Clone)]
pub struct ExtensionQfi {
    pub j: RMatrix,
    pub d: RMatrix,
    pub j_inv: RMatrix,
    pub b: RMatrix,
}

impl ExtensionQfi {
    pub fn new(j: RMatrix, d: RMatrix) -> Result<Self> {
        let j_inv = inverse_spd(&j, "extended SLD Fisher information")?;
        let b = &j_inv * &d * &j_inv;
        Ok(ExtensionQfi { j, d, j_inv, b })
    }

    pub fn from_extension(ext: &ModelExtension) -> Result<Self> {
        let q = QfiBundle::from_local(&ext.rho, &ext.derivatives, vec![0.0; ext.k_prime])?;
        Self::new(q.j, q.d)
    }

    pub fn k_prime(&self) -> usize {
        self.j.nrows()
    }

    /// `(Re Z, Im Z)` for a given `P`.
    pub fn z(&self, p: &RMatrix) -> (RMatrix, RMatrix) {
        let re = symmetric_part(&(p * &self.j_inv * p.transpose()));
        let im = (p * &self.b * p.transpose()).scale(0.5);
        (re, (&im - im.transpose()).scale(0.5))
    }
}

/// `P = [I_k | 0_{k×(fixed−k)} | X]` with `X` filled row-major from `free`.
fn assemble_p(k: usize, k_prime: usize, fixed: usize, free: &[f64]) -> RMatrix {
    let mut p = RMatrix::zeros(k, k_prime);
    for i in 0..k {
        p[(i, i)] = 1.0;
    }
    let cols = k_prime - fixed;
    for i in 0..k {
        for c in 0..cols {
            p[(i, fixed + c)] = free[i * cols + c];
        }
    }
    p
}

const STABILITY_TOL: f64 = 1e-6;

/// Minimizes `f(P)` with the first `fixed` columns of `P` pinned to `[I_k | 0]`.
pub fn minimize_p(
    q: &ExtensionQfi,
    w: &RMatrix,
    k: usize,
    fixed: usize,
    opts: &MinimizerOptions,
) -> Result<PMinimization> {
    let k_prime = q.k_prime();
    if fixed < k || fixed > k_prime {
        return Err(Error::Dimension(format!("cannot pin {fixed} columns of a {k}×{k_prime} matrix")));
    }
    let w = weight_matrix(w, k)?;
    let sw = psd_sqrt_real(&w)?;
    let objective = |x: &[f64]| -> f64 {
        let p = assemble_p(k, k_prime, fixed, x);
        let (re, im) = q.z(&p);
        (&w * re).trace() + real_trace_norm(&(&sw * im * &sw))
    };
    let n_free = k * (k_prime - fixed);
    let report = minimize_with_restarts(
        objective,
        &vec![0.0; n_free],
        opts.restarts,
        opts.perturbation,
        opts.seed,
        &opts.nelder_mead,
    );
    let spread = report.spread;
    let best = report.best.value;
    let hits = report.restart_values.iter().filter(|&&v| v - best <= STABILITY_TOL * best.abs().max(1e-300)).count();
    Ok(PMinimization {
        value: report.best.value,
        p: assemble_p(k, k_prime, fixed, &report.best.x),
        diagnostics: MinimizerDiagnostics {
            free_entries: n_free,
            restarts: report.restart_values.len(),
            evaluations: report.best.evals,
            converged: report.all_converged,
            stable: n_free == 0 || hits >= 2,
            spread,
            restart_values: report.restart_values,
        },
    })
}

/// Holevo bound for the first `k` parameters of a D-invariant extension.
pub fn holevo_bound(q: &ExtensionQfi, w: &RMatrix, k: usize, opts: &MinimizerOptions) -> Result<PMinimization> {
    minimize_p(q, w, k, k, opts)
}

/// Nuisance-parameter bound: `k` parameters of interest followed by `s` nuisance parameters.
pub fn nuisance_bound(
    q: &ExtensionQfi,
    w: &RMatrix,
    k: usize,
    s: usize,
    opts: &MinimizerOptions,
) -> Result<PMinimization> {
    minimize_p(q, w, k, k + s, opts)
}

/// Closed form for a D-invariant `(k + s)`-parameter model with weight `diag(W, 0)`.
pub fn nuisance_closed_form(j: &RMatrix, d: &RMatrix, w: &RMatrix) -> Result<f64> {
    let k = w.nrows();
    let mut wt = RMatrix::zeros(j.nrows(), j.nrows());
    wt.view_mut((0, 0), (k, k)).copy_from(w);
    d_invariant_bound(j, d, &wt)
}

/// Covariance `Re Z + √W⁻¹ |√W Im Z √W| √W⁻¹` of the optimal covariant measurement.
pub fn measurement_covariance_real(re: &RMatrix, im: &RMatrix, w: &RMatrix) -> Result<RMatrix> {
    let k = re.nrows();
    let w = weight_matrix(w, k)?;
    let (values, vectors) = symmetric_eig(&w)?;
    let max = values.last().copied().unwrap_or(1.0).max(1.0);
    if values[0] <= 1e-12 * max {
        return Err(Error::Singular("weight matrix (regularize first)"));
    }
    let sw = crate::matcore::spectral_map_real(&values, &vectors, f64::sqrt);
    let sw_inv = crate::matcore::spectral_map_real(&values, &vectors, |l| 1.0 / l.sqrt());
    let (abs, _) = real_abs(&(&sw * im * &sw));
    Ok(symmetric_part(&(re + &sw_inv * abs * &sw_inv)))
}

/// Optimal limiting covariance at the minimizer `P★`.
///
/// A singular `W` is replaced by `W + εP⊥` with ε = 1e-8; the returned flag
/// carries the ε used.
pub fn optimal_limiting_covariance(q: &ExtensionQfi, w: &RMatrix, p: &RMatrix) -> Result<(RMatrix, Option<f64>)> {
    let (re, im) = q.z(p);
    if is_singular(w)? {
        let eps = REGULARIZATION_STEPS[2];
        let v = measurement_covariance_real(&re, &im, &regularize(w, eps)?)?;
        Ok((v, Some(eps)))
    } else {
        Ok((measurement_covariance_real(&re, &im, w)?, None))
    }
}

pub const REGULARIZATION_STEPS: [f64; 3] = [1e-6, 1e-7, 1e-8];

/// `W + ε P⊥` with `P⊥` the projector onto the null space of `W`.
pub fn regularize(w: &RMatrix, eps: f64) -> Result<RMatrix> {
    let (values, vectors) = symmetric_eig(w)?;
    let max = values.last().copied().unwrap_or(1.0).max(1.0);
    Ok(crate::matcore::spectral_map_real(&values, &vectors, |l| if l <= 1e-12 * max { l.max(0.0) + eps } else { l }))
}

/// `½ tr|(J′⁻¹D′J′⁻¹)_{k×k}|`.
pub fn sld_gap_bound(q: &ExtensionQfi, k: usize) -> f64 {
    let block = q.b.view((0, 0), (k, k)).into_owned();
    0.5 * real_trace_norm(&block)
}

/// Half the Hessian of `c(·, t0)` at `t0`, so that `c ≈ (t̂ − t0)ᵀ W (t̂ − t0)`.
pub fn cost_hessian<F: Fn(&[f64], &[f64]) -> f64>(cost: F, t0: &[f64], h: f64) -> RMatrix {
    let k = t0.len();
    let eval = |di: usize, si: f64, dj: usize, sj: f64| {
        let mut t = t0.to_vec();
        t[di] += si * h;
        t[dj] += sj * h;
        cost(&t, t0)
    };
    let mut w = RMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let v = (eval(i, 1.0, j, 1.0) - eval(i, 1.0, j, -1.0) - eval(i, -1.0, j, 1.0) + eval(i, -1.0, j, -1.0))
                / (4.0 * h * h);
            w[(i, j)] = 0.5 * v;
        }
    }
    symmetric_part(&w)
}

#[derive(Debug, Clone, Serialize)]
pub struct CostBound {
    pub value: f64,
    /// For singular `W`: bound values at `W + εP⊥` over [`REGULARIZATION_STEPS`].
    pub regularized: Vec<f64>,
    /// Linear extrapolation of `regularized` to ε = 0.
    pub extrapolated: Option<f64>,
    pub diagnostics: MinimizerDiagnostics,
}

/// Holevo (`s = 0`) or nuisance bound with the cost's local weight `W_{t0}`.
pub fn asymptotic_cost_bound(
    model: &dyn ParametricModel,
    t0: &[f64],
    w: &RMatrix,
    nuisance: usize,
    opts: &MinimizerOptions,
) -> Result<CostBound> {
    let k = model.num_params() - nuisance;
    let w = weight_matrix(w, k).map_err(|e| match e {
        Error::NotPositive { eigenvalue } => {
            Error::Precondition(format!("cost Hessian is indefinite ({eigenvalue:.3e})"))
        }
        other => other,
    })?;
    let eval = |w: &RMatrix| -> Result<PMinimization> {
        if nuisance == 0 {
            let ext = minimal_d_invariant_extension(model, t0)?;
            holevo_bound(&ExtensionQfi::from_extension(&ext)?, w, k, opts)
        } else {
            let ext = minimal_d_invariant_extension(model, t0)?;
            nuisance_bound(&ExtensionQfi::from_extension(&ext)?, w, k, nuisance, opts)
        }
    };
    let direct = eval(&w)?;
    let (regularized, extrapolated) = if is_singular(&w)? {
        let vals: Vec<f64> =
            REGULARIZATION_STEPS.iter().map(|&e| eval(&regularize(&w, e)?).map(|r| r.value)).collect::<Result<_>>()?;
        let (e1, e2) = (REGULARIZATION_STEPS[1], REGULARIZATION_STEPS[2]);
        let slope = (vals[1] - vals[2]) / (e1 - e2);
        (vals.clone(), Some(vals[2] - slope * e2))
    } else {
        (vec![], None)
    };
    Ok(CostBound { value: direct.value, regularized, extrapolated, diagnostics: direct.diagnostics })
}

/// Full ladder at one point.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub point: Vec<f64>,
    pub interest: usize,
    pub nuisance_count: usize,
    /// SLD bound of the submodel with nuisance parameters fixed.
    pub sld: f64,
    /// RLD bound of the same submodel.
    pub rld: f64,
    /// Holevo bound of the same submodel.
    pub holevo: f64,
    /// `tr[W (J⁻¹)_{k×k}]` of the full model (SLD bound with nuisance parameters).
    pub sld_nuisance: Option<f64>,
    pub nuisance: Option<f64>,
    #[serde(serialize_with = "crate::matcore::serialize_rows")]
    pub argmin_p: RMatrix,
    #[serde(serialize_with = "crate::matcore::serialize_rows")]
    pub v_opt: RMatrix,
    pub v_opt_regularization: Option<f64>,
    pub extension_dim: usize,
    pub holevo_diagnostics: MinimizerDiagnostics,
    pub nuisance_diagnostics: Option<MinimizerDiagnostics>,
}

impl BoundReport {
    pub fn converged(&self) -> bool {
        let ok = |d: &MinimizerDiagnostics| d.converged && d.stable;
        ok(&self.holevo_diagnostics) && self.nuisance_diagnostics.as_ref().is_none_or(ok)
    }
}

/// Computes the ladder for the first `k = num_params − nuisance` parameters.
pub fn bound_report(
    model: Arc<dyn ParametricModel>,
    t0: &[f64],
    w: &RMatrix,
    nuisance: usize,
    opts: &MinimizerOptions,
) -> Result<BoundReport> {
    let total = model.num_params();
    if nuisance >= total {
        return Err(Error::Dimension(format!("{nuisance} nuisance parameters leave nothing to estimate")));
    }
    let k = total - nuisance;
    let w = weight_matrix(w, k)?;

    let sub = FixedParams::new(model.clone(), t0.to_vec(), (0..k).collect())?;
    let t_sub = sub.project(t0);
    let q_sub = sld_qfi(&sub, &t_sub)?;
    let sld = sld_bound(&q_sub.j, &w)?;
    let rld = rld_bound(&q_sub.rld, &w)?;

    let ext = minimal_d_invariant_extension(&sub, &t_sub)?;
    let eq = ExtensionQfi::from_extension(&ext)?;
    let h = holevo_bound(&eq, &w, k, opts)?;
    let (v_opt, v_opt_regularization) = optimal_limiting_covariance(&eq, &w, &h.p)?;

    let (sld_nuisance, nuisance_value, nuisance_diagnostics) = if nuisance > 0 {
        let full = sld_qfi(model.as_ref(), t0)?;
        let mut wt = RMatrix::zeros(total, total);
        wt.view_mut((0, 0), (k, k)).copy_from(&w);
        let sn = (wt * inverse_spd(&full.j, "SLD Fisher information")?).trace();
        let ext_full = extend_local(
            &crate::models::state_at(model.as_ref(), t0)?,
            &crate::models::derivatives_at(model.as_ref(), t0)?,
        )?;
        let n = nuisance_bound(&ExtensionQfi::from_extension(&ext_full)?, &w, k, nuisance, opts)?;
        (Some(sn), Some(n.value), Some(n.diagnostics))
    } else {
        (None, None, None)
    };

    Ok(BoundReport {
        point: t0.to_vec(),
        interest: k,
        nuisance_count: nuisance,
        sld,
        rld,
        holevo: h.value,
        sld_nuisance,
        nuisance: nuisance_value,
        argmin_p: h.p,
        v_opt,
        v_opt_regularization,
        extension_dim: ext.k_prime,
        holevo_diagnostics: h.diagnostics,
        nuisance_diagnostics,
    })
}
