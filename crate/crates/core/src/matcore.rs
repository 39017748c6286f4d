//! Dense matrix primitives shared by every other module.
//!
//! Everything here is a pure function of its inputs. Hermitian inputs are
//! checked against a relative asymmetry tolerance of [`HERMITIAN_TOL`] and then
//! symmetrized before being handed to the eigensolver.

use nalgebra::DVector;

use crate::{CMatrix, Error, RMatrix, Result, C64};

/// Relative tolerance on `‖A − A†‖_max / ‖A‖_max`.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues above `-EIGEN_FLOOR` are treated as zero when a PSD input is
/// expected; density matrices need eigenvalues above `EIGEN_FLOOR` to be
/// considered invertible.
pub const EIGEN_FLOOR: f64 = 1e-10;

/// Eigendecomposition `H = U diag(values) U†` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    /// `U diag(f(λ)) U†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let d = DVector::from_iterator(self.values.len(), self.values.iter().map(|&l| C64::from(f(l))));
        let scaled = &self.vectors * CMatrix::from_diagonal(&d);
        scaled * self.vectors.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map(|l| l)
    }
}

/// Serde adapter writing a real matrix as an array of rows.
pub fn serialize_rows<S: serde::Serializer>(m: &RMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::Serialize;
    let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
    rows.serialize(s)
}

pub fn to_complex(a: &RMatrix) -> CMatrix {
    a.map(C64::from)
}

pub fn real_part(a: &CMatrix) -> RMatrix {
    a.map(|z| z.re)
}

pub fn imag_part(a: &CMatrix) -> RMatrix {
    a.map(|z| z.im)
}

pub fn trace(a: &CMatrix) -> C64 {
    a.diagonal().iter().sum()
}

fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

fn check_finite(a: &CMatrix, what: &'static str) -> Result<()> {
    if a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

fn check_square(rows: usize, cols: usize) -> Result<()> {
    if rows == cols {
        Ok(())
    } else {
        Err(Error::Dimension(format!("expected a square matrix, got {rows}×{cols}")))
    }
}

/// Relative deviation from Hermiticity.
pub fn hermiticity_defect(a: &CMatrix) -> f64 {
    let scale = max_abs(a);
    if scale == 0.0 {
        return 0.0;
    }
    max_abs(&(a - a.adjoint())) / scale
}

pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

pub fn symmetric_part(a: &RMatrix) -> RMatrix {
    (a + a.transpose()).scale(0.5)
}

fn check_hermitian(h: &CMatrix) -> Result<()> {
    check_square(h.nrows(), h.ncols())?;
    check_finite(h, "Hermitian input")?;
    let asymmetry = hermiticity_defect(h);
    if asymmetry > HERMITIAN_TOL {
        return Err(Error::NotHermitian { asymmetry });
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eig(h: &CMatrix) -> Result<HermitianEigen> {
    check_hermitian(h)?;
    let eig = hermitian_part(h).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_columns(&order.iter().map(|&i| eig.eigenvectors.column(i)).collect::<Vec<_>>());
    Ok(HermitianEigen { values, vectors })
}

/// Eigendecomposition of a real symmetric matrix, eigenvalues ascending.
pub fn symmetric_eig(a: &RMatrix) -> Result<(Vec<f64>, RMatrix)> {
    check_square(a.nrows(), a.ncols())?;
    if !a.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("symmetric input"));
    }
    let scale = a.amax();
    if scale > 0.0 && (a - a.transpose()).amax() / scale > HERMITIAN_TOL {
        return Err(Error::NotHermitian { asymmetry: (a - a.transpose()).amax() / scale });
    }
    let eig = symmetric_part(a).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = RMatrix::from_columns(&order.iter().map(|&i| eig.eigenvectors.column(i)).collect::<Vec<_>>());
    Ok((values, vectors))
}

/// Matrix absolute value `|A| = sqrt(A†A)` and the trace norm `Σ σ_i(A)`.
pub fn matrix_abs(a: &CMatrix) -> Result<(CMatrix, f64)> {
    check_square(a.nrows(), a.ncols())?;
    check_finite(a, "matrix_abs input")?;
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let sigma = CMatrix::from_diagonal(&svd.singular_values.map(C64::from));
    let abs = v_t.adjoint() * sigma * &v_t;
    Ok((hermitian_part(&abs), svd.singular_values.sum()))
}

/// Sum of singular values.
pub fn trace_norm(a: &CMatrix) -> f64 {
    a.singular_values().sum()
}

/// Real counterpart of [`matrix_abs`].
pub fn real_abs(a: &RMatrix) -> (RMatrix, f64) {
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let abs = v_t.transpose() * RMatrix::from_diagonal(&svd.singular_values) * &v_t;
    (symmetric_part(&abs), svd.singular_values.sum())
}

pub fn real_trace_norm(a: &RMatrix) -> f64 {
    a.singular_values().sum()
}

/// Square root of a PSD Hermitian matrix.
pub fn psd_sqrt(w: &CMatrix) -> Result<CMatrix> {
    let eig = hermitian_eig(w)?;
    if let Some(&min) = eig.values.first() {
        if min < -EIGEN_FLOOR {
            return Err(Error::NotPositive { eigenvalue: min });
        }
    }
    Ok(eig.map(|l| l.max(0.0).sqrt()))
}

/// Square root of a real PSD matrix.
pub fn psd_sqrt_real(w: &RMatrix) -> Result<RMatrix> {
    let (values, vectors) = symmetric_eig(w)?;
    if let Some(&min) = values.first() {
        if min < -EIGEN_FLOOR {
            return Err(Error::NotPositive { eigenvalue: min });
        }
    }
    Ok(spectral_map_real(&values, &vectors, |l| l.max(0.0).sqrt()))
}

pub fn spectral_map_real(values: &[f64], vectors: &RMatrix, f: impl Fn(f64) -> f64) -> RMatrix {
    let d = RMatrix::from_diagonal(&DVector::from_iterator(values.len(), values.iter().map(|&l| f(l))));
    symmetric_part(&(vectors * d * vectors.transpose()))
}

pub fn inverse_real(a: &RMatrix) -> Result<RMatrix> {
    check_square(a.nrows(), a.ncols())?;
    a.clone().try_inverse().ok_or(Error::Singular("real matrix inverse"))
}

pub fn inverse_complex(a: &CMatrix) -> Result<CMatrix> {
    check_square(a.nrows(), a.ncols())?;
    a.clone().try_inverse().ok_or(Error::Singular("complex matrix inverse"))
}

/// Inverse of a real symmetric positive-definite matrix via its spectrum.
pub fn inverse_spd(a: &RMatrix, what: &'static str) -> Result<RMatrix> {
    let (values, vectors) = symmetric_eig(a)?;
    let max = values.last().copied().unwrap_or(0.0).abs().max(1.0);
    if values.first().is_some_and(|&l| l <= EIGEN_FLOOR * max) {
        return Err(Error::Singular(what));
    }
    Ok(spectral_map_real(&values, &vectors, |l| 1.0 / l))
}

/// Spectral data of a density matrix, cached for repeated SLD and D-map solves.
#[derive(Debug, Clone)]
pub struct Spectral {
    pub probs: Vec<f64>,
    pub basis: CMatrix,
}

impl Spectral {
    /// Requires the smallest eigenvalue to exceed [`EIGEN_FLOOR`].
    pub fn new(rho: &CMatrix) -> Result<Self> {
        let s = Self::allow_singular(rho)?;
        let min = s.probs.first().copied().unwrap_or(0.0);
        if min <= EIGEN_FLOOR {
            return Err(Error::SingularState { min_eigenvalue: min });
        }
        Ok(s)
    }

    /// Accepts rank-deficient states; only [`Spectral::sld_on_support`] is
    /// meaningful for those.
    pub fn allow_singular(rho: &CMatrix) -> Result<Self> {
        let eig = hermitian_eig(rho)?;
        Ok(Spectral { probs: eig.values, basis: eig.vectors })
    }

    pub fn dim(&self) -> usize {
        self.probs.len()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.probs.first().copied().unwrap_or(0.0)
    }

    pub fn to_eigenbasis(&self, x: &CMatrix) -> CMatrix {
        self.basis.adjoint() * x * &self.basis
    }

    pub fn from_eigenbasis(&self, x: &CMatrix) -> CMatrix {
        &self.basis * x * self.basis.adjoint()
    }

    fn elementwise(&self, x: &CMatrix, f: impl Fn(f64, f64) -> C64) -> CMatrix {
        let mut y = self.to_eigenbasis(x);
        for j in 0..self.dim() {
            for k in 0..self.dim() {
                y[(j, k)] *= f(self.probs[j], self.probs[k]);
            }
        }
        hermitian_part(&self.from_eigenbasis(&y))
    }

    /// Solves `(ρL + Lρ)/2 = G`.
    pub fn sld(&self, g: &CMatrix) -> CMatrix {
        self.elementwise(g, |pj, pk| C64::from(2.0 / (pj + pk)))
    }

    /// SLD restricted to the support of a possibly singular state: entries with
    /// `p_j + p_k` below the floor are set to zero.
    pub fn sld_on_support(&self, g: &CMatrix) -> CMatrix {
        self.elementwise(g, |pj, pk| {
            let s = pj.max(0.0) + pk.max(0.0);
            if s > EIGEN_FLOOR {
                C64::from(2.0 / s)
            } else {
                C64::from(0.0)
            }
        })
    }

    /// Solves `(ρ𝒟(X) + 𝒟(X)ρ)/2 = i[X, ρ]`.
    pub fn d_map(&self, x: &CMatrix) -> CMatrix {
        self.elementwise(x, |pj, pk| C64::new(0.0, 2.0 * (pk - pj) / (pj + pk)))
    }

    /// `Re Tr[ρ (XY + YX)/2]`.
    pub fn inner(&self, x: &CMatrix, y: &CMatrix) -> f64 {
        let rho = self.rho();
        trace(&(&rho * x * y)).re
    }

    pub fn rho(&self) -> CMatrix {
        let d = DVector::from_iterator(self.dim(), self.probs.iter().map(|&p| C64::from(p)));
        hermitian_part(&(&self.basis * CMatrix::from_diagonal(&d) * self.basis.adjoint()))
    }

    pub fn inverse(&self) -> CMatrix {
        let d = DVector::from_iterator(self.dim(), self.probs.iter().map(|&p| C64::from(1.0 / p)));
        hermitian_part(&(&self.basis * CMatrix::from_diagonal(&d) * self.basis.adjoint()))
    }
}

/// Symmetric logarithmic derivative: solves `(ρL + Lρ)/2 = G` for Hermitian `G`.
pub fn sld_solve(rho: &CMatrix, g: &CMatrix) -> Result<CMatrix> {
    check_hermitian(g)?;
    Ok(Spectral::new(rho)?.sld(g))
}

/// The D map: solves `(ρ𝒟(X) + 𝒟(X)ρ)/2 = i[X, ρ]`.
pub fn d_map(rho: &CMatrix, x: &CMatrix) -> Result<CMatrix> {
    check_hermitian(x)?;
    Ok(Spectral::new(rho)?.d_map(x))
}

/// Pauli matrices `σ_x, σ_y, σ_z`.
pub fn pauli() -> [CMatrix; 3] {
    let z = C64::from(0.0);
    let one = C64::from(1.0);
    let i = C64::new(0.0, 1.0);
    [
        CMatrix::from_row_slice(2, 2, &[z, one, one, z]),
        CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        CMatrix::from_row_slice(2, 2, &[one, z, z, -one]),
    ]
}

/// `(I + n·σ)/2`.
pub fn bloch_state(n: [f64; 3]) -> CMatrix {
    let [sx, sy, sz] = pauli();
    let id = CMatrix::identity(2, 2);
    (id + sx.scale(n[0]) + sy.scale(n[1]) + sz.scale(n[2])).scale(0.5)
}

/// `v·σ`.
pub fn pauli_combination(v: [f64; 3]) -> CMatrix {
    let [sx, sy, sz] = pauli();
    sx.scale(v[0]) + sy.scale(v[1]) + sz.scale(v[2])
}

/// Frobenius norm.
pub fn fro(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
