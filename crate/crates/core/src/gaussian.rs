//! Classical-quantum Gaussian shift models.
//!
//! A model is described by its correlation matrix `Γ` (Hermitian, real part
//! PSD, imaginary part antisymmetric and zero on the classical block) and a
//! displacement map `T`. Quadratures are ordered `(q₁, p₁, q₂, p₂, …)` and
//! `Ω` is the direct sum of `[[0, 1], [−1, 0]]` blocks.

use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::matcore::{
    hermitian_eig, imag_part, inverse_complex, inverse_spd, psd_sqrt_real, real_abs, real_part, spectral_map_real,
    symmetric_eig, symmetric_part, to_complex,
};
use crate::sampling::{quadratic_tail_mc, TailEstimate};
use crate::{CMatrix, Error, RMatrix, Result, C64};

/// Pairing tolerance for eigenvalues `±λ` of `iA`.
pub const PAIRING_TOL: f64 = 1e-9;
/// Residual below which a span counts as invariant.
pub const INVARIANCE_TOL: f64 = 1e-8;
pub const COMMUTATION_TOL: f64 = 1e-8;
const KERNEL_TOL: f64 = 1e-9;

/// `Ω_m`.
pub fn omega(m: usize) -> RMatrix {
    let mut o = RMatrix::zeros(2 * m, 2 * m);
    for j in 0..m {
        o[(2 * j, 2 * j + 1)] = 1.0;
        o[(2 * j + 1, 2 * j)] = -1.0;
    }
    o
}

/// `E_m(x)`: each entry repeated twice on the diagonal.
pub fn paired_diagonal(x: &[f64]) -> RMatrix {
    RMatrix::from_diagonal(&nalgebra::DVector::from_iterator(2 * x.len(), x.iter().flat_map(|&v| [v, v])))
}

/// Canonical quantum correlation `E(N) + (i/2)Ω`.
pub fn thermal_gamma(n: &[f64]) -> CMatrix {
    let re = to_complex(&paired_diagonal(n));
    let im = to_complex(&omega(n.len())).map(|z| z * C64::new(0.0, 0.5));
    re + im
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GaussianModel {
    #[serde(rename = "dC")]
    pub d_c: usize,
    #[serde(rename = "dQ")]
    pub d_q: usize,
    #[serde(rename = "Gamma_re")]
    pub gamma_re: Vec<Vec<f64>>,
    #[serde(rename = "Gamma_im")]
    pub gamma_im: Vec<Vec<f64>>,
    #[serde(rename = "T")]
    pub t: Vec<Vec<f64>>,
}

fn rows_to_matrix(rows: &[Vec<f64>], what: &str) -> Result<RMatrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Dimension(format!("{what}: ragged rows")));
    }
    Ok(RMatrix::from_row_iterator(nrows, ncols, rows.iter().flatten().copied()))
}

impl GaussianModel {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let model: GaussianModel = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        model.validate()?;
        Ok(model)
    }

    pub fn dim(&self) -> usize {
        self.d_c + 2 * self.d_q
    }

    pub fn gamma(&self) -> Result<CMatrix> {
        let re = rows_to_matrix(&self.gamma_re, "Gamma_re")?;
        let im = rows_to_matrix(&self.gamma_im, "Gamma_im")?;
        if re.shape() != im.shape() {
            return Err(Error::Dimension("Gamma_re and Gamma_im differ in shape".into()));
        }
        Ok(CMatrix::from_fn(re.nrows(), re.ncols(), |i, j| C64::new(re[(i, j)], im[(i, j)])))
    }

    pub fn displacement(&self) -> Result<RMatrix> {
        rows_to_matrix(&self.t, "T")
    }

    /// Checks shapes, the block structure and the sign conditions on `Γ`.
    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        let gamma = self.gamma()?;
        if gamma.shape() != (n, n) {
            return Err(Error::Dimension(format!("Gamma must be {n}×{n}")));
        }
        let t = self.displacement()?;
        if t.nrows() != n || t.ncols() == 0 {
            return Err(Error::Dimension(format!("T must have {n} rows and at least one column")));
        }
        check_correlation(&gamma)?;
        let scale = gamma.iter().map(|z| z.norm()).fold(1.0, f64::max);
        for i in 0..n {
            for j in 0..n {
                let cross = (i < self.d_c) != (j < self.d_c);
                let classical = i < self.d_c && j < self.d_c;
                if (cross && gamma[(i, j)].norm() > 1e-10 * scale)
                    || (classical && gamma[(i, j)].im.abs() > 1e-10 * scale)
                {
                    return Err(Error::InvalidModel(format!(
                        "Gamma must be a direct sum with a real classical block (entry {i},{j})"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn check_correlation(gamma: &CMatrix) -> Result<(RMatrix, RMatrix)> {
    if gamma.nrows() != gamma.ncols() {
        return Err(Error::Dimension("correlation matrix must be square".into()));
    }
    let re = real_part(gamma);
    let im = imag_part(gamma);
    let scale = gamma.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let asym = (&re - re.transpose()).amax().max((&im + im.transpose()).amax()) / scale;
    if asym > 1e-10 {
        return Err(Error::NotHermitian { asymmetry: asym });
    }
    let re = symmetric_part(&re);
    let im = (&im - im.transpose()).scale(0.5);
    let (values, _) = symmetric_eig(&re)?;
    if values.first().is_some_and(|&l| l < -1e-10 * scale) {
        return Err(Error::NotPositive { eigenvalue: values[0] });
    }
    Ok((re, im))
}

/// Orthogonal `O` with `Oᵀ A O = ⊕ λ_j Ω₁`, `λ_j > 0` ascending, for a
/// nondegenerate real antisymmetric `A`.
///
/// Built from the positive eigenvectors `x + iy` of the Hermitian matrix
/// `iA`: each contributes the column pair `√2 (y, x)`.
fn antisymmetric_pairs(a: &RMatrix) -> Result<(RMatrix, Vec<f64>)> {
    let n = a.nrows();
    if !n.is_multiple_of(2) {
        return Err(Error::Dimension("antisymmetric normal form needs even dimension".into()));
    }
    let a = (a - a.transpose()).scale(0.5);
    let ia = a.map(|v| C64::new(0.0, v));
    let eig = hermitian_eig(&ia)?;
    let m = n / 2;
    let scale = eig.values.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(f64::MIN_POSITIVE);
    for i in 0..m {
        let mismatch = (eig.values[i] + eig.values[n - 1 - i]).abs();
        if mismatch > PAIRING_TOL * scale {
            return Err(Error::Precondition(format!("unpaired symplectic spectrum (mismatch {mismatch:.3e})")));
        }
    }
    if eig.values[m] <= KERNEL_TOL * scale {
        return Err(Error::Singular("antisymmetric form"));
    }
    let mut o = RMatrix::zeros(n, n);
    let mut lambdas = Vec::with_capacity(m);
    for (slot, idx) in (m..n).enumerate() {
        let u = eig.vectors.column(idx);
        for r in 0..n {
            o[(r, 2 * slot)] = std::f64::consts::SQRT_2 * u[r].im;
            o[(r, 2 * slot + 1)] = std::f64::consts::SQRT_2 * u[r].re;
        }
        lambdas.push(eig.values[idx]);
    }
    Ok((o, lambdas))
}

#[derive(Debug, Clone, Serialize)]
pub struct SymplecticDecomposition {
    /// Symplectic `S` with `Sᵀ M S = E(ν)`.
    #[serde(serialize_with = "crate::matcore::serialize_rows")]
    pub s: RMatrix,
    /// Symplectic eigenvalues, ascending.
    pub nu: Vec<f64>,
}

/// Williamson normal form of a real symmetric positive-definite `2m × 2m` matrix.
///
/// Each column pair of `S` is rotated so that its dominant `2×2` block is as
/// close as possible to a positive matrix, which makes `S = I` for `M ∝ I`.
pub fn williamson(m: &RMatrix) -> Result<SymplecticDecomposition> {
    let n = m.nrows();
    if m.ncols() != n || !n.is_multiple_of(2) || n == 0 {
        return Err(Error::Dimension(format!("Williamson needs a square even matrix, got {}×{}", n, m.ncols())));
    }
    let (values, vectors) = symmetric_eig(m)?;
    let max = values.last().copied().unwrap_or(0.0).abs().max(f64::MIN_POSITIVE);
    if values[0] <= 1e-14 * max {
        return Err(Error::NotPositive { eigenvalue: values[0] });
    }
    let m_inv_half = spectral_map_real(&values, &vectors, |l| 1.0 / l.sqrt());
    let a = &m_inv_half * omega(n / 2) * &m_inv_half;
    let (o, lambdas) = antisymmetric_pairs(&a)?;
    // λ ascending means ν descending; reverse the pairs.
    let modes = n / 2;
    let mut s = RMatrix::zeros(n, n);
    let mut nu = Vec::with_capacity(modes);
    let base = &m_inv_half * &o;
    for slot in 0..modes {
        let src = modes - 1 - slot;
        let v = 1.0 / lambdas[src];
        nu.push(v);
        let cols = base.columns(2 * src, 2).scale(v.sqrt());
        s.columns_mut(2 * slot, 2).copy_from(&cols);
    }
    fix_pair_rotations(&mut s);
    Ok(SymplecticDecomposition { s, nu })
}

fn fix_pair_rotations(s: &mut RMatrix) {
    let modes = s.ncols() / 2;
    for j in 0..modes {
        let cols = s.columns(2 * j, 2).into_owned();
        let q = (0..s.nrows() / 2)
            .max_by(|&a, &b| cols.rows(2 * a, 2).norm().total_cmp(&cols.rows(2 * b, 2).norm()))
            .unwrap_or(0);
        let b = cols.rows(2 * q, 2);
        let phi = (b[(0, 1)] - b[(1, 0)]).atan2(b[(0, 0)] + b[(1, 1)]);
        let (sn, cs) = phi.sin_cos();
        let r = RMatrix::from_row_slice(2, 2, &[cs, -sn, sn, cs]);
        s.columns_mut(2 * j, 2).copy_from(&(cols * r));
    }
}

/// Removes the residual freedom of a canonical transform: classical rows get
/// a positive dominant entry and each mode's row pair is rotated towards the
/// input coordinates.
fn fix_gauge(t: &mut RMatrix, dc: usize) {
    for r in 0..dc {
        let dominant = t.row(r).iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
        if dominant < 0.0 {
            t.row_mut(r).neg_mut();
        }
    }
    let n = t.nrows();
    if n > dc {
        let mut quantum = t.rows(dc, n - dc).transpose();
        fix_pair_rotations(&mut quantum);
        t.rows_mut(dc, n - dc).copy_from(&quantum.transpose());
    }
}

/// Normal form `T Γ Tᵀ = diag(classical) ⊕ (E(ν) + (i/2)Ω)`.
#[derive(Debug, Clone, Serialize)]
pub struct CanonicalForm {
    #[serde(serialize_with = "crate::matcore::serialize_rows")]
    pub t: RMatrix,
    /// Variances of the classical coordinates, ascending.
    pub classical: Vec<f64>,
    /// Diagonal of the real quantum block in canonical coordinates.
    pub nu: Vec<f64>,
    /// Thermal occupation `ν − 1/2` of each mode.
    pub occupation: Vec<f64>,
}

impl CanonicalForm {
    pub fn d_c(&self) -> usize {
        self.classical.len()
    }

    pub fn d_q(&self) -> usize {
        self.nu.len()
    }

    /// `diag(classical) ⊕ (E(ν) + (i/2)Ω)`.
    pub fn target(&self) -> CMatrix {
        let (dc, n) = (self.d_c(), self.t.nrows());
        let mut g = CMatrix::zeros(n, n);
        for (i, &v) in self.classical.iter().enumerate() {
            g[(i, i)] = C64::from(v);
        }
        g.view_mut((dc, dc), (n - dc, n - dc)).copy_from(&thermal_gamma(&self.nu));
        g
    }

    /// Deviation `‖Re(TΓTᵀ) − target‖ + ‖Im(TΓTᵀ) − target‖` (Frobenius).
    pub fn residual(&self, gamma: &CMatrix) -> f64 {
        let tc = to_complex(&self.t);
        let diff = &tc * gamma * tc.transpose() - self.target();
        real_part(&diff).norm() + imag_part(&diff).norm()
    }
}

pub fn canonical_form(gamma: &CMatrix) -> Result<CanonicalForm> {
    let (re, im) = check_correlation(gamma)?;
    let n = re.nrows();
    let scale = gamma.iter().map(|z| z.norm()).fold(1.0, f64::max);

    // Ker Im Γ from the singular values of Im Γ.
    let svd = im.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let cut = KERNEL_TOL * scale;
    let kernel: Vec<usize> = order.iter().copied().filter(|&i| svd.singular_values[i] <= cut).collect();
    let support: Vec<usize> = order.iter().copied().filter(|&i| svd.singular_values[i] > cut).collect();
    let dc = kernel.len();
    let q = RMatrix::from_columns(&kernel.iter().chain(&support).map(|&i| v_t.row(i).transpose()).collect::<Vec<_>>());
    let a = q.transpose() * &re * &q;
    let b = q.transpose() * &im * &q;
    let dq2 = n - dc;

    let a_cc = a.view((0, 0), (dc, dc)).into_owned();
    let a_qc = a.view((dc, 0), (dq2, dc)).into_owned();
    let a_qq = a.view((dc, dc), (dq2, dq2)).into_owned();
    let b_qq = b.view((dc, dc), (dq2, dq2)).into_owned();

    let (c_values, c_vectors) = if dc > 0 { symmetric_eig(&a_cc)? } else { (vec![], RMatrix::zeros(0, 0)) };
    let c_max = c_values.last().copied().unwrap_or(0.0).abs().max(f64::MIN_POSITIVE);
    let a_cc_pinv =
        spectral_map_real(&c_values, &c_vectors, |l| if l > 1e-12 * c_max.max(1.0) { 1.0 / l } else { 0.0 });
    let shear = -(&a_qc * &a_cc_pinv);
    let schur = symmetric_part(&(&a_qq + &shear * a_qc.transpose()));

    let mut t_q = RMatrix::zeros(dq2, dq2);
    let mut nu = Vec::new();
    if dq2 > 0 {
        let (o, b_vals) = antisymmetric_pairs(&b_qq)?;
        let scaling = paired_diagonal(&b_vals.iter().map(|&v| 1.0 / (2.0 * v).sqrt()).collect::<Vec<_>>());
        let t2 = scaling * o.transpose();
        let m = symmetric_part(&(&t2 * &schur * t2.transpose()));
        let decomposition = williamson(&m)?;
        t_q = decomposition.s.transpose() * t2;
        nu = decomposition.nu;
    }

    let mut t_local = RMatrix::zeros(n, n);
    t_local.view_mut((0, 0), (dc, dc)).copy_from(&c_vectors.transpose());
    t_local.view_mut((dc, 0), (dq2, dc)).copy_from(&(&t_q * &shear));
    t_local.view_mut((dc, dc), (dq2, dq2)).copy_from(&t_q);
    let mut t = t_local * q.transpose();
    fix_gauge(&mut t, dc);
    let occupation = nu.iter().map(|v| v - 0.5).collect();
    Ok(CanonicalForm { t, classical: c_values, nu, occupation })
}

/// RLD Fisher information of a Gaussian shift model, `J̃ = Γ⁻¹`.
pub fn rld_of_gaussian(gamma: &CMatrix) -> Result<CMatrix> {
    check_correlation(gamma)?;
    inverse_complex(gamma).map_err(|_| Error::Singular("Gaussian correlation matrix"))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct InvarianceReport {
    pub invariant: bool,
    /// `‖(I − QQᵀ) Im Γ Q‖_F` for an orthonormal basis `Q` of `span(ReΓ⁻¹ T)`.
    pub residual: f64,
}

pub fn is_d_invariant_submodel(gamma: &CMatrix, t: &RMatrix) -> Result<InvarianceReport> {
    let (re, im) = check_correlation(gamma)?;
    if t.nrows() != re.nrows() {
        return Err(Error::Dimension(format!("T has {} rows, Gamma is {}×{}", t.nrows(), re.nrows(), re.nrows())));
    }
    let span = inverse_spd(&re, "Re Gamma")? * t;
    let k = t.ncols();
    let svd = span.svd(true, false);
    let sv = &svd.singular_values;
    let smax = sv.max();
    if k == 0 || smax == 0.0 || sv.iter().any(|&s| s <= 1e-10 * smax) {
        return Err(Error::RankDeficient);
    }
    let u = svd.u.expect("requested left singular vectors");
    let q = u.columns(0, k).into_owned();
    let bq = &im * &q;
    let residual = (&bq - &q * (q.transpose() * &bq)).norm();
    Ok(InvarianceReport { invariant: residual < INVARIANCE_TOL, residual })
}

/// Covariance of the optimal covariant measurement for `Z` under weight `W`.
pub fn measurement_covariance(z: &CMatrix, w: &RMatrix) -> Result<RMatrix> {
    crate::bounds::measurement_covariance_real(&real_part(z), &imag_part(z), w)
}

/// `‖Ω A₂ A₁ − A₁ A₂ Ω‖_F < 1e-9`, the condition for `A₁` and `A₂⁻¹` to be
/// diagonalized by a common symplectic matrix.
pub fn simultaneous_symplectic_check(a1: &RMatrix, a2: &RMatrix) -> Result<bool> {
    let n = a1.nrows();
    if a1.shape() != (n, n) || a2.shape() != (n, n) || !n.is_multiple_of(2) {
        return Err(Error::Dimension(format!(
            "need two square matrices of equal even size, got {:?} and {:?}",
            a1.shape(),
            a2.shape()
        )));
    }
    let o = omega(n / 2);
    Ok((&o * a2 * a1 - a1 * a2 * &o).norm() < 1e-9)
}

/// Per-mode quadrature variance of the optimal heterodyne-type measurement.
pub fn mode_variance(n: f64) -> f64 {
    n + 0.5
}

#[derive(Debug, Clone, Serialize)]
pub struct TailReport {
    #[serde(flatten)]
    pub estimate: TailEstimate,
    #[serde(serialize_with = "crate::matcore::serialize_rows")]
    pub covariance: RMatrix,
}

fn closed_form_1d(variance: f64, weight: f64, c: f64) -> f64 {
    if c <= 0.0 {
        return 1.0;
    }
    let s = (variance * weight).max(0.0).sqrt();
    if s == 0.0 {
        return 0.0;
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    2.0 * normal.cdf(-c.sqrt() / s)
}

fn tail(sigma: RMatrix, w: &RMatrix, c: f64, samples: usize, seed: u64) -> Result<TailReport> {
    let estimate = if sigma.nrows() == 1 {
        TailEstimate::exact(closed_form_1d(sigma[(0, 0)], w[(0, 0)], c))
    } else {
        quadratic_tail_mc(&sigma, w, c, samples, seed)?
    };
    Ok(TailReport { estimate, covariance: sigma })
}

/// Minimal tail probability `N[0, Σ]({xᵀWx ≥ c})` of a c-q Gaussian model with
/// `Σ = Γᶜ ⊕ ⊕_j (N_j + 1/2) I₂`.
///
/// `W` must be block diagonal: arbitrary PSD on the classical block and
/// `w_j I₂` on mode `j`.
pub fn gaussian_tail_bound(
    gamma_c: &RMatrix,
    n: &[f64],
    w: &RMatrix,
    c: f64,
    samples: usize,
    seed: u64,
) -> Result<TailReport> {
    let dc = gamma_c.nrows();
    let dim = dc + 2 * n.len();
    if gamma_c.ncols() != dc || w.shape() != (dim, dim) {
        return Err(Error::Dimension(format!("weight must be {dim}×{dim}")));
    }
    if n.iter().any(|&v| !(v >= 0.0)) {
        return Err(Error::Domain("thermal occupations must be nonnegative".into()));
    }
    let w = crate::bounds::weight_matrix(w, dim)?;
    let scale = w.amax().max(1.0);
    let shape_err = || Error::Precondition("weight must be W_C ⊕ w₁I₂ ⊕ … ⊕ w_mI₂".into());
    for i in 0..dim {
        for j in 0..dim {
            let same_block = (i < dc && j < dc) || (i >= dc && j >= dc && (i - dc) / 2 == (j - dc) / 2);
            if !same_block && w[(i, j)].abs() > 1e-10 * scale {
                return Err(shape_err());
            }
        }
    }
    for mode in 0..n.len() {
        let r = dc + 2 * mode;
        if (w[(r, r)] - w[(r + 1, r + 1)]).abs() > 1e-10 * scale || w[(r, r + 1)].abs() > 1e-10 * scale {
            return Err(shape_err());
        }
    }
    let mut sigma = RMatrix::zeros(dim, dim);
    sigma.view_mut((0, 0), (dc, dc)).copy_from(&symmetric_part(gamma_c));
    for (mode, &occ) in n.iter().enumerate() {
        let r = dc + 2 * mode;
        sigma[(r, r)] = mode_variance(occ);
        sigma[(r + 1, r + 1)] = mode_variance(occ);
    }
    tail(sigma, &w, c, samples, seed)
}

/// Tail bound `N[0, √W J⁻¹ √W + ½|√W J⁻¹DJ⁻¹ √W|]({‖x‖ ≥ √c})` for a qudit
/// model; requires `J^{-1/2} W J^{-1/2}` to commute with `J^{-1/2} D J^{-1/2}`.
pub fn qudit_tail_bound(
    j: &RMatrix,
    d: &RMatrix,
    w: &RMatrix,
    c: f64,
    samples: usize,
    seed: u64,
) -> Result<TailReport> {
    let k = j.nrows();
    if d.shape() != (k, k) {
        return Err(Error::Dimension("D must match J".into()));
    }
    let w = crate::bounds::weight_matrix(w, k)?;
    let (values, vectors) = symmetric_eig(j)?;
    let max = values.last().copied().unwrap_or(0.0).abs().max(1.0);
    if values.first().is_some_and(|&l| l <= 1e-10 * max) {
        return Err(Error::Singular("SLD Fisher information"));
    }
    let j_inv_half = spectral_map_real(&values, &vectors, |l| 1.0 / l.sqrt());
    let aw = &j_inv_half * &w * &j_inv_half;
    let ad = &j_inv_half * d * &j_inv_half;
    let commutator = (&aw * &ad - &ad * &aw).norm();
    let norm = (aw.norm() * ad.norm()).max(1.0);
    if commutator >= COMMUTATION_TOL * norm {
        return Err(Error::Precondition(format!(
            "J^-1/2 W J^-1/2 and J^-1/2 D J^-1/2 do not commute (‖[·,·]‖ = {commutator:.3e})"
        )));
    }
    let j_inv = inverse_spd(j, "SLD Fisher information")?;
    let sw = psd_sqrt_real(&w)?;
    let (abs, _) = real_abs(&(&sw * &j_inv * d * &j_inv * &sw));
    let sigma = symmetric_part(&(&sw * &j_inv * &sw + abs.scale(0.5)));
    tail(sigma, &RMatrix::identity(k, k), c, samples, seed)
}
