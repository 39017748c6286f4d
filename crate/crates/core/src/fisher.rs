//! Fisher-information quantities at a point.

use serde::Serialize;

use crate::matcore::{
    hermitian_eig, hermitian_part, imag_part, inverse_complex, inverse_spd, matrix_abs, psd_sqrt, real_part, trace,
    Spectral,
};
use crate::models::{derivatives_at, state_at, ParametricModel};
use crate::{CMatrix, Error, RMatrix, Result, C64};

/// SLD matrix `J`, D-matrix, RLD matrix `J̃` and the SLDs at one point.
#[derive(Debug, Clone)]
pub struct QfiBundle {
    pub point: Vec<f64>,
    pub j: RMatrix,
    pub d: RMatrix,
    pub rld: CMatrix,
    pub slds: Vec<CMatrix>,
}

impl QfiBundle {
    pub fn from_local(rho: &CMatrix, derivs: &[CMatrix], point: Vec<f64>) -> Result<Self> {
        let s = Spectral::new(rho)?;
        let slds: Vec<CMatrix> = derivs.iter().map(|g| s.sld(g)).collect();
        let (j, d) = gram(rho, &slds);
        let rld = rld_local(&s, derivs);
        Ok(QfiBundle { point, j, d, rld, slds })
    }

    pub fn k(&self) -> usize {
        self.j.nrows()
    }

    /// `J⁻¹ + (i/2) J⁻¹ D J⁻¹`, which equals `J̃⁻¹` exactly when the model is D-invariant.
    pub fn d_invariant_rld_inverse(&self) -> Result<CMatrix> {
        let ji = inverse_spd(&self.j, "SLD Fisher information")?;
        let im = (&ji * &self.d * &ji).scale(0.5);
        Ok(CMatrix::from_fn(self.k(), self.k(), |a, b| C64::new(ji[(a, b)], im[(a, b)])))
    }
}

/// `J_ij = Re Tr ρ L_i L_j`, `D_ij = i Tr ρ[L_i, L_j] = −2 Im Tr ρ L_i L_j`.
fn gram(rho: &CMatrix, slds: &[CMatrix]) -> (RMatrix, RMatrix) {
    let k = slds.len();
    let rl: Vec<CMatrix> = slds.iter().map(|l| rho * l).collect();
    let mut j = RMatrix::zeros(k, k);
    let mut d = RMatrix::zeros(k, k);
    for a in 0..k {
        for b in a..k {
            let z = trace(&(&rl[a] * &slds[b]));
            j[(a, b)] = z.re;
            j[(b, a)] = z.re;
            if a != b {
                d[(a, b)] = -2.0 * z.im;
                d[(b, a)] = 2.0 * z.im;
            }
        }
    }
    (j, d)
}

/// `J̃_ij = Tr[∂_iρ ρ⁻¹ ∂_jρ]`.
fn rld_local(s: &Spectral, derivs: &[CMatrix]) -> CMatrix {
    let inv = s.inverse();
    let k = derivs.len();
    let left: Vec<CMatrix> = derivs.iter().map(|g| g * &inv).collect();
    let m = CMatrix::from_fn(k, k, |a, b| trace(&(&left[a] * &derivs[b])));
    hermitian_part(&m)
}

/// SLD matrix, D-matrix and RLD matrix of `model` at `t0`.
pub fn sld_qfi(model: &dyn ParametricModel, t0: &[f64]) -> Result<QfiBundle> {
    let rho = state_at(model, t0)?;
    let derivs = derivatives_at(model, t0)?;
    QfiBundle::from_local(&rho, &derivs, t0.to_vec())
}

pub fn d_matrix(model: &dyn ParametricModel, t0: &[f64]) -> Result<RMatrix> {
    Ok(sld_qfi(model, t0)?.d)
}

pub fn rld_qfi(model: &dyn ParametricModel, t0: &[f64]) -> Result<CMatrix> {
    Ok(sld_qfi(model, t0)?.rld)
}

/// Finite-increment RLD matrix.
#[derive(Debug, Clone)]
pub struct EpsRldMatrix {
    pub eps: f64,
    pub matrix: CMatrix,
}

fn shifted(model: &dyn ParametricModel, t0: &[f64], j: usize, step: f64) -> Result<CMatrix> {
    let mut t = t0.to_vec();
    t[j] += step;
    state_at(model, &t)
}

/// `Tr[ρ_{t0+δe_i} ρ_{t0}⁻¹ ρ_{t0+δe_j}]` for all pairs.
fn overlap_matrix(model: &dyn ParametricModel, t0: &[f64], step: f64) -> Result<CMatrix> {
    if !(step > 0.0) {
        return Err(Error::Precondition("ε must be positive".into()));
    }
    let s = Spectral::new(&state_at(model, t0)?)?;
    let inv = s.inverse();
    let k = model.num_params();
    let states: Vec<CMatrix> = (0..k).map(|j| shifted(model, t0, j, step)).collect::<Result<_>>()?;
    let left: Vec<CMatrix> = states.iter().map(|r| r * &inv).collect();
    Ok(CMatrix::from_fn(k, k, |a, b| trace(&(&left[a] * &states[b]))))
}

/// Entry `(i, j)` is `(Tr[ρ_{t0+εe_i} ρ_{t0}⁻¹ ρ_{t0+εe_j}] − 1)/ε²`.
pub fn eps_rld(model: &dyn ParametricModel, t0: &[f64], eps: f64) -> Result<EpsRldMatrix> {
    let x = overlap_matrix(model, t0, eps)?;
    let matrix = hermitian_part(&x.map(|z| (z - 1.0) / (eps * eps)));
    Ok(EpsRldMatrix { eps, matrix })
}

/// `(1/n) J̃ⁿ_{t0, ε/√n}` through the product identity
/// `Tr[ρ_a^{⊗n} (ρ⁻¹)^{⊗n} ρ_b^{⊗n}] = (Tr[ρ_a ρ⁻¹ ρ_b])ⁿ`.
pub fn ncopy_eps_rld(model: &dyn ParametricModel, t0: &[f64], eps: f64, n: u32) -> Result<EpsRldMatrix> {
    if n == 0 {
        return Err(Error::Precondition("n must be positive".into()));
    }
    let step = eps / (n as f64).sqrt();
    let x = overlap_matrix(model, t0, step)?;
    let matrix = hermitian_part(&x.map(|z| (z.powu(n) - 1.0) / (eps * eps)));
    Ok(EpsRldMatrix { eps, matrix })
}

/// `(e^{ε² J̃_ij} − 1)/ε²` elementwise, the large-n limit of [`ncopy_eps_rld`].
pub fn eps_rld_limit(rld: &CMatrix, eps: f64) -> CMatrix {
    let e2 = eps * eps;
    hermitian_part(&rld.map(|z| ((z * e2).exp() - 1.0) / e2))
}

/// Finite-increment RLD matrix of the outcome distribution of `effects`.
pub fn povm_eps_rld(model: &dyn ParametricModel, t0: &[f64], eps: f64, effects: &[CMatrix]) -> Result<RMatrix> {
    let probs = |rho: &CMatrix| -> Vec<f64> { effects.iter().map(|m| trace(&(rho * m)).re).collect() };
    let p0 = probs(&state_at(model, t0)?);
    if p0.iter().any(|&p| p <= 0.0) {
        return Err(Error::SingularState { min_eigenvalue: p0.iter().copied().fold(f64::INFINITY, f64::min) });
    }
    let k = model.num_params();
    let shifted_probs: Vec<Vec<f64>> =
        (0..k).map(|j| shifted(model, t0, j, eps).map(|r| probs(&r))).collect::<Result<_>>()?;
    Ok(RMatrix::from_fn(k, k, |a, b| {
        let s: f64 = (0..p0.len()).map(|x| shifted_probs[a][x] * shifted_probs[b][x] / p0[x]).sum();
        (s - 1.0) / (eps * eps)
    }))
}

/// `Tr|√ρ √σ|`.
pub fn fidelity(rho: &CMatrix, sigma: &CMatrix) -> Result<f64> {
    let a = psd_sqrt(rho)?;
    let b = psd_sqrt(sigma)?;
    Ok(matrix_abs(&(a * b))?.1)
}

#[derive(Debug, Clone, Serialize)]
pub struct FidelityEstimate {
    pub value: f64,
    /// `8(1 − F)/ε²` at each step of the sequence.
    pub raw: Vec<f64>,
    pub converged: bool,
}

pub const FIDELITY_STEPS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

/// SLD information of a one-parameter model from `8(1 − F(ρ_{t−ε/2}, ρ_{t+ε/2}))/ε²`,
/// Richardson-extrapolated over [`FIDELITY_STEPS`]. The value is returned even
/// when the two extrapolants disagree beyond 1e-4 (relative); `converged` flags it.
pub fn fidelity_sld(model: &dyn ParametricModel, t0: f64) -> Result<FidelityEstimate> {
    if model.num_params() != 1 {
        return Err(Error::Precondition("fidelity_sld needs a one-parameter model".into()));
    }
    let raw: Vec<f64> = FIDELITY_STEPS
        .iter()
        .map(|&e| {
            let a = state_at(model, &[t0 - e / 2.0])?;
            let b = state_at(model, &[t0 + e / 2.0])?;
            Ok(8.0 * (1.0 - fidelity(&a, &b)?) / (e * e))
        })
        .collect::<Result<_>>()?;
    let r1 = (4.0 * raw[1] - raw[0]) / 3.0;
    let r2 = (4.0 * raw[2] - raw[1]) / 3.0;
    let converged = (r1 - r2).abs() <= 1e-4 * r2.abs().max(1e-12);
    Ok(FidelityEstimate { value: r2, raw, converged })
}

/// `8(1 − F(ρ_t^{⊗n}, ρ_{t+ε/√n}^{⊗n}))/ε²` via `F(ρ^{⊗n}, σ^{⊗n}) = F(ρ, σ)ⁿ`.
pub fn ncopy_fidelity_information(model: &dyn ParametricModel, t0: f64, eps: f64, n: u64) -> Result<f64> {
    let step = eps / (n as f64).sqrt();
    let f = fidelity(&state_at(model, &[t0])?, &state_at(model, &[t0 + step])?)?;
    let fn_ = (n as f64 * f.ln()).exp();
    Ok(8.0 * (1.0 - fn_) / (eps * eps))
}

/// Q-LAN parameter data at a point.
#[derive(Debug, Clone, Serialize)]
pub struct QlanPair {
    pub j: usize,
    pub k: usize,
    /// `θ_k/θ_j` for eigenvalues sorted in decreasing order.
    pub ratio: f64,
    /// `β = −ln r`.
    pub beta: f64,
    /// `r/(1 − r)`.
    pub occupation: f64,
    /// `N + 1/2 = coth(β/2)/2`, the symplectic eigenvalue of the mode.
    pub symplectic_eigenvalue: f64,
    /// `coth(β/2)/4`, the printed alternative, kept for comparison.
    pub printed_quarter_coth: f64,
}

#[derive(Debug, Clone)]
pub struct QlanCorrespondence {
    pub eigenvalues: Vec<f64>,
    pub pairs: Vec<QlanPair>,
    /// `Γ = J̃⁻¹`.
    pub gamma: CMatrix,
}

pub const SPECTRAL_GAP_TOL: f64 = 1e-8;

pub fn qlan_correspondence(model: &dyn ParametricModel, t0: &[f64]) -> Result<QlanCorrespondence> {
    let rho = state_at(model, t0)?;
    let mut eigenvalues = hermitian_eig(&rho)?.values;
    eigenvalues.reverse();
    let gap = eigenvalues.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min);
    if gap <= SPECTRAL_GAP_TOL {
        return Err(Error::DegenerateSpectrum { gap });
    }
    let bundle = QfiBundle::from_local(&rho, &derivatives_at(model, t0)?, t0.to_vec())?;
    let gamma = hermitian_part(&inverse_complex(&bundle.rld)?);
    let mut pairs = Vec::new();
    for j in 0..eigenvalues.len() {
        for k in (j + 1)..eigenvalues.len() {
            let ratio = eigenvalues[k] / eigenvalues[j];
            let beta = -ratio.ln();
            let coth = 1.0 / (beta / 2.0).tanh();
            pairs.push(QlanPair {
                j,
                k,
                ratio,
                beta,
                occupation: ratio / (1.0 - ratio),
                symplectic_eigenvalue: 0.5 * coth,
                printed_quarter_coth: 0.25 * coth,
            });
        }
    }
    Ok(QlanCorrespondence { eigenvalues, pairs, gamma })
}

/// Real and imaginary parts of `Γ`.
pub fn split(gamma: &CMatrix) -> (RMatrix, RMatrix) {
    (real_part(gamma), imag_part(gamma))
}
