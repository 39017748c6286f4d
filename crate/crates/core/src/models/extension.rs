use super::{derivatives_at, state_at, LinearModel, ParametricModel};
use crate::matcore::Spectral;
use crate::{CMatrix, Error, Result};

/// Residual cutoff for accepting a new direction while growing the span.
const SPAN_CUTOFF: f64 = 1e-8;
/// Closure check on the finished span.
const CLOSURE_TOL: f64 = 1e-7;

/// A model's derivatives at one point, extended to a D-invariant SLD span.
///
/// The first `k` entries of `derivatives` and `slds` are the original ones; the
/// remaining `k′ − k` come from an orthonormal basis of the added directions.
#[derive(Debug, Clone)]
pub struct ModelExtension {
    pub k: usize,
    pub k_prime: usize,
    pub rho: CMatrix,
    pub derivatives: Vec<CMatrix>,
    pub slds: Vec<CMatrix>,
    /// Orthonormal basis of the whole span under `Re Tr ρXY`.
    pub basis: Vec<CMatrix>,
    pub closure_residual: f64,
}

impl ModelExtension {
    pub fn added(&self) -> usize {
        self.k_prime - self.k
    }

    /// Linear model `ρ + Σ t_j ∂ρ_j` whose derivatives at `t = 0` are the extended ones.
    pub fn as_local_model(&self) -> LinearModel {
        LinearModel { rho0: self.rho.clone(), generators: self.derivatives.clone(), label: "extension".into() }
    }
}

/// Removes the components along `basis` twice over; returns the residual.
fn orthogonalize(s: &Spectral, x: &CMatrix, basis: &[CMatrix]) -> CMatrix {
    let mut r = x.clone();
    for _ in 0..2 {
        for b in basis {
            let c = s.inner(b, &r);
            r -= b.scale(c);
        }
    }
    r
}

fn norm(s: &Spectral, x: &CMatrix) -> f64 {
    s.inner(x, x).max(0.0).sqrt()
}

/// Grows the SLD span by repeated application of the D map until it closes.
pub fn extend_local(rho: &CMatrix, derivatives: &[CMatrix]) -> Result<ModelExtension> {
    let s = Spectral::new(rho)?;
    let slds: Vec<CMatrix> = derivatives.iter().map(|g| s.sld(g)).collect();

    let mut basis: Vec<CMatrix> = Vec::new();
    for l in &slds {
        let scale = norm(&s, l);
        let r = orthogonalize(&s, l, &basis);
        let rn = norm(&s, &r);
        if scale == 0.0 || rn <= SPAN_CUTOFF * scale.max(1.0) {
            return Err(Error::RankDeficient);
        }
        basis.push(r.unscale(rn));
    }

    let k = derivatives.len();
    let mut added = Vec::new();
    let mut cursor = 0;
    while cursor < basis.len() {
        let image = s.d_map(&basis[cursor]);
        let r = orthogonalize(&s, &image, &basis);
        let rn = norm(&s, &r);
        if rn > SPAN_CUTOFF * norm(&s, &image).max(1.0) {
            let b = r.unscale(rn);
            added.push(b.clone());
            basis.push(b);
        }
        cursor += 1;
    }

    let closure_residual = basis.iter().map(|b| norm(&s, &orthogonalize(&s, &s.d_map(b), &basis))).fold(0.0, f64::max);
    if closure_residual >= CLOSURE_TOL {
        return Err(Error::NotClosed { residual: closure_residual });
    }

    let mut all_derivs = derivatives.to_vec();
    let mut all_slds = slds;
    for b in added {
        all_derivs.push((rho * &b + &b * rho).scale(0.5));
        all_slds.push(b);
    }
    Ok(ModelExtension {
        k,
        k_prime: all_derivs.len(),
        rho: rho.clone(),
        derivatives: all_derivs,
        slds: all_slds,
        basis,
        closure_residual,
    })
}

/// Minimal D-invariant extension of `model` at `t0`.
pub fn minimal_d_invariant_extension(model: &dyn ParametricModel, t0: &[f64]) -> Result<ModelExtension> {
    let rho = state_at(model, t0)?;
    let derivs = derivatives_at(model, t0)?;
    extend_local(&rho, &derivs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{AmplitudeDamping, ClassicalDiagonal, FixedParams, QuditFull, SharedModel, TwoObservables};
    use std::sync::Arc;

    #[test]
    fn qudit_full_is_already_invariant() {
        let m = QuditFull::new(vec![0.5, 0.3, 0.2]).unwrap();
        let ext = minimal_d_invariant_extension(&m, &[0.01; 8]).unwrap();
        assert_eq!(ext.k_prime, 8);
    }

    #[test]
    fn classical_adds_nothing() {
        let m = ClassicalDiagonal::new(4).unwrap();
        let ext = minimal_d_invariant_extension(&m, &[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(ext.k_prime, 3);
    }

    #[test]
    fn two_observables_xy_extends_to_full_qubit() {
        let full: SharedModel = Arc::new(TwoObservables::with_overlap(0.3).unwrap());
        let sub = FixedParams::new(full, vec![0.2, 0.1, 0.4], vec![0, 1]).unwrap();
        let ext = minimal_d_invariant_extension(&sub, &[0.2, 0.1]).unwrap();
        assert_eq!((ext.k, ext.k_prime), (2, 3));
    }

    #[test]
    fn extension_is_idempotent_and_closed() {
        let full: SharedModel = Arc::new(AmplitudeDamping);
        let sub = FixedParams::new(full, vec![1.0, 0.3, 0.5], vec![0]).unwrap();
        let ext = minimal_d_invariant_extension(&sub, &[1.0]).unwrap();
        assert!(ext.closure_residual < 1e-7);
        let again = minimal_d_invariant_extension(&ext.as_local_model(), &vec![0.0; ext.k_prime]).unwrap();
        assert_eq!(again.k_prime, ext.k_prime);
    }

    #[test]
    fn rank_deficient_rejected() {
        let m = QuditFull::new(vec![0.7, 0.3]).unwrap();
        let rho = crate::models::state_at(&m, &[0.0, 0.0, 0.0]).unwrap();
        let d = crate::models::derivatives_at(&m, &[0.0, 0.0, 0.0]).unwrap();
        let dup = vec![d[0].clone(), d[0].scale(2.0)];
        assert!(matches!(extend_local(&rho, &dup), Err(Error::RankDeficient)));
    }
}
