use nalgebra::DVector;

use super::ParametricModel;
use crate::matcore::{bloch_state, pauli_combination};
use crate::{CMatrix, Error, Result, C64};

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn comb(x: f64, a: [f64; 3], y: f64, b: [f64; 3]) -> [f64; 3] {
    [x * a[0] + y * b[0], x * a[1] + y * b[1], x * a[2] + y * b[2]]
}

/// Qubit with Bloch vector `n = x a′ + y b′ + z c`, so that `x = a·n`,
/// `y = b·n` and `z = c·n` with `c ∝ a × b`. `z` is the nuisance coordinate.
#[derive(Debug, Clone)]
pub struct TwoObservables {
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub s: f64,
    a_dual: [f64; 3],
    b_dual: [f64; 3],
    pub c: [f64; 3],
}

impl TwoObservables {
    pub fn new(a: [f64; 3], b: [f64; 3]) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b)] {
            if (dot(v, v).sqrt() - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidModel(format!("|{name}| must be 1")));
            }
        }
        let s = dot(a, b);
        if !(0.0..1.0).contains(&s) || 1.0 - s < 1e-10 {
            return Err(Error::InvalidModel(format!("a·b = {s} must lie in [0, 1)")));
        }
        let k = 1.0 / (1.0 - s * s);
        let a_dual = comb(k, a, -k * s, b);
        let b_dual = comb(k, b, -k * s, a);
        let c0 = cross(a, b);
        let norm = dot(c0, c0).sqrt();
        let c = [c0[0] / norm, c0[1] / norm, c0[2] / norm];
        Ok(TwoObservables { a, b, s, a_dual, b_dual, c })
    }

    /// `a = x̂`, `b = (s, √(1−s²), 0)`.
    pub fn with_overlap(s: f64) -> Result<Self> {
        Self::new([1.0, 0.0, 0.0], [s, (1.0 - s * s).max(0.0).sqrt(), 0.0])
    }

    pub fn bloch(&self, t: &[f64]) -> [f64; 3] {
        let xy = comb(t[0], self.a_dual, t[1], self.b_dual);
        comb(1.0, xy, t[2], self.c)
    }
}

impl ParametricModel for TwoObservables {
    fn name(&self) -> String {
        "two_observables".into()
    }
    fn dim(&self) -> usize {
        2
    }
    fn num_params(&self) -> usize {
        3
    }
    fn state(&self, t: &[f64]) -> Result<CMatrix> {
        Ok(bloch_state(self.bloch(t)))
    }
    fn analytic_derivatives(&self, _t: &[f64]) -> Option<Result<Vec<CMatrix>>> {
        Some(Ok([self.a_dual, self.b_dual, self.c].iter().map(|&v| pauli_combination(v).scale(0.5)).collect()))
    }
    fn in_domain(&self, t: &[f64]) -> bool {
        let n = self.bloch(t);
        dot(n, n) <= 1.0 + 1e-12
    }
    fn param_names(&self) -> Vec<String> {
        vec!["x".into(), "y".into(), "z".into()]
    }
    fn default_nuisance(&self) -> usize {
        1
    }
}

/// Pure qubit direction `(θ, φ)` sent through amplitude damping with parameter `η`.
#[derive(Debug, Clone, Copy, Default)]
pub struct AmplitudeDamping;

impl AmplitudeDamping {
    pub fn bloch(t: &[f64]) -> [f64; 3] {
        let (th, ph, eta) = (t[0], t[1], t[2]);
        let r = eta.max(0.0).sqrt() * th.sin();
        [r * ph.sin(), r * ph.cos(), 1.0 - eta + eta * th.cos()]
    }

    /// `∂n/∂θ, ∂n/∂φ, ∂n/∂η`.
    pub fn bloch_derivatives(t: &[f64]) -> [[f64; 3]; 3] {
        let (th, ph, eta) = (t[0], t[1], t[2]);
        let se = eta.sqrt();
        [
            [se * th.cos() * ph.sin(), se * th.cos() * ph.cos(), -eta * th.sin()],
            [se * th.sin() * ph.cos(), -se * th.sin() * ph.sin(), 0.0],
            [th.sin() * ph.sin() / (2.0 * se), th.sin() * ph.cos() / (2.0 * se), th.cos() - 1.0],
        ]
    }
}

impl ParametricModel for AmplitudeDamping {
    fn name(&self) -> String {
        "amplitude_damping".into()
    }
    fn dim(&self) -> usize {
        2
    }
    fn num_params(&self) -> usize {
        3
    }
    fn state(&self, t: &[f64]) -> Result<CMatrix> {
        Ok(bloch_state(Self::bloch(t)))
    }
    fn analytic_derivatives(&self, t: &[f64]) -> Option<Result<Vec<CMatrix>>> {
        if t[2] <= 0.0 {
            return Some(Err(Error::Domain("η must be positive for derivatives".into())));
        }
        Some(Ok(Self::bloch_derivatives(t).iter().map(|&p| pauli_combination(p).scale(0.5)).collect()))
    }
    fn in_domain(&self, t: &[f64]) -> bool {
        (0.0..=1.0).contains(&t[2])
    }
    fn param_names(&self) -> Vec<String> {
        vec!["theta".into(), "phi".into(), "eta".into()]
    }
    fn default_nuisance(&self) -> usize {
        1
    }
}

/// Lossy generalized-NOON multiphase model on the span of `|N⟩_0 … |N⟩_d`
/// plus one sink vector carrying the phase-independent part. Parameters are
/// `(t_1 … t_d, α, p)`.
///
/// The exact state has rank two, so it is mixed with `δ·I/dim` (δ = 1e-8) to
/// make the SLD and RLD well defined.
#[derive(Debug, Clone)]
pub struct Multiphase {
    pub d: usize,
    pub photons: u32,
    pub a: f64,
    pub b: f64,
    pub eta: f64,
    pub regularization: f64,
}

impl Multiphase {
    pub const REGULARIZATION: f64 = 1e-8;

    pub fn new(d: usize, photons: u32, a: f64, b: f64, eta: f64) -> Result<Self> {
        if d == 0 || photons == 0 {
            return Err(Error::InvalidModel("d and N must be positive".into()));
        }
        if !(0.0..=1.0).contains(&(b * b)) || (a * a + b * b - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidModel("need a² + b² = 1 with b² in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidModel("η must lie in [0, 1]".into()));
        }
        Ok(Multiphase { d, photons, a, b, eta, regularization: Self::REGULARIZATION })
    }

    pub fn p_eta(&self) -> f64 {
        1.0 - self.b * self.b * (1.0 - self.eta.powi(self.photons as i32))
    }

    pub fn alpha_eta(&self) -> f64 {
        (self.a / self.p_eta().sqrt()).clamp(-1.0, 1.0).acos()
    }

    /// `(t, α_η, p_η)`.
    pub fn nominal_point(&self, t: &[f64]) -> Vec<f64> {
        let mut v = t.to_vec();
        v.push(self.alpha_eta());
        v.push(self.p_eta());
        v
    }

    fn psi(&self, t: &[f64]) -> DVector<C64> {
        let alpha = t[self.d];
        let n = self.photons as f64;
        let mut psi = DVector::zeros(self.d + 2);
        psi[0] = C64::from(alpha.cos());
        let amp = alpha.sin() / (self.d as f64).sqrt();
        for j in 0..self.d {
            psi[j + 1] = C64::from_polar(amp, n * t[j]);
        }
        psi
    }

    fn dpsi(&self, t: &[f64]) -> Vec<DVector<C64>> {
        let alpha = t[self.d];
        let n = self.photons as f64;
        let amp = alpha.sin() / (self.d as f64).sqrt();
        let mut out = Vec::with_capacity(self.d + 1);
        for j in 0..self.d {
            let mut v = DVector::zeros(self.d + 2);
            v[j + 1] = C64::from_polar(amp, n * t[j]) * C64::new(0.0, n);
            out.push(v);
        }
        let mut v = DVector::zeros(self.d + 2);
        v[0] = C64::from(-alpha.sin());
        let damp = alpha.cos() / (self.d as f64).sqrt();
        for j in 0..self.d {
            v[j + 1] = C64::from_polar(damp, n * t[j]);
        }
        out.push(v);
        out
    }

    fn sink(&self) -> CMatrix {
        let dim = self.d + 2;
        let mut s = CMatrix::zeros(dim, dim);
        s[(dim - 1, dim - 1)] = C64::from(1.0);
        s
    }
}

impl ParametricModel for Multiphase {
    fn name(&self) -> String {
        "multiphase".into()
    }
    fn dim(&self) -> usize {
        self.d + 2
    }
    fn num_params(&self) -> usize {
        self.d + 2
    }
    fn state(&self, t: &[f64]) -> Result<CMatrix> {
        let p = t[self.d + 1];
        let psi = self.psi(t);
        let pure = &psi * psi.adjoint();
        let dim = self.dim();
        let delta = self.regularization;
        let rho = (pure.scale(p) + self.sink().scale(1.0 - p)).scale(1.0 - delta)
            + CMatrix::identity(dim, dim).scale(delta / dim as f64);
        Ok(rho)
    }
    fn analytic_derivatives(&self, t: &[f64]) -> Option<Result<Vec<CMatrix>>> {
        let p = t[self.d + 1];
        let psi = self.psi(t);
        let scale = 1.0 - self.regularization;
        let mut out: Vec<CMatrix> = self
            .dpsi(t)
            .iter()
            .map(|dv| {
                let half = dv * psi.adjoint();
                (&half + half.adjoint()).scale(p * scale)
            })
            .collect();
        out.push((&psi * psi.adjoint() - self.sink()).scale(scale));
        Some(Ok(out))
    }
    fn in_domain(&self, t: &[f64]) -> bool {
        (0.0..=1.0).contains(&t[self.d + 1])
    }
    fn param_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (1..=self.d).map(|j| format!("t{j}")).collect();
        names.push("alpha".into());
        names.push("p".into());
        names
    }
    fn default_nuisance(&self) -> usize {
        2
    }
}

/// Generalized Gell-Mann matrices divided by two: symmetric, antisymmetric, then diagonal.
pub fn gell_mann_half(d: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(d * d - 1);
    for j in 0..d {
        for k in (j + 1)..d {
            let mut m = CMatrix::zeros(d, d);
            m[(j, k)] = C64::from(0.5);
            m[(k, j)] = C64::from(0.5);
            out.push(m);
        }
    }
    for j in 0..d {
        for k in (j + 1)..d {
            let mut m = CMatrix::zeros(d, d);
            m[(j, k)] = C64::new(0.0, -0.5);
            m[(k, j)] = C64::new(0.0, 0.5);
            out.push(m);
        }
    }
    for l in 1..d {
        let norm = 0.5 * (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut m = CMatrix::zeros(d, d);
        for j in 0..l {
            m[(j, j)] = C64::from(norm);
        }
        m[(l, l)] = C64::from(-(l as f64) * norm);
        out.push(m);
    }
    out
}

/// Full qudit model `ρ_t = diag(λ) + Σ t_j G_j` over the `d² − 1` generators of
/// [`gell_mann_half`]. The reference spectrum must be nondegenerate.
#[derive(Debug, Clone)]
pub struct QuditFull {
    pub spectrum: Vec<f64>,
    generators: Vec<CMatrix>,
}

impl QuditFull {
    pub fn new(spectrum: Vec<f64>) -> Result<Self> {
        let d = spectrum.len();
        if d < 2 {
            return Err(Error::InvalidModel("qudit_full needs d ≥ 2".into()));
        }
        if spectrum.iter().any(|&p| p <= 0.0) || (spectrum.iter().sum::<f64>() - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidModel("spectrum must be positive and sum to 1".into()));
        }
        let mut sorted = spectrum.clone();
        sorted.sort_by(f64::total_cmp);
        let gap = sorted.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        if gap <= 1e-8 {
            return Err(Error::DegenerateSpectrum { gap });
        }
        Ok(QuditFull { spectrum, generators: gell_mann_half(d) })
    }

    pub fn rho0(&self) -> CMatrix {
        CMatrix::from_diagonal(&DVector::from_iterator(
            self.spectrum.len(),
            self.spectrum.iter().map(|&p| C64::from(p)),
        ))
    }
}

impl ParametricModel for QuditFull {
    fn name(&self) -> String {
        "qudit_full".into()
    }
    fn dim(&self) -> usize {
        self.spectrum.len()
    }
    fn num_params(&self) -> usize {
        self.generators.len()
    }
    fn state(&self, t: &[f64]) -> Result<CMatrix> {
        let mut rho = self.rho0();
        for (g, &tj) in self.generators.iter().zip(t) {
            rho += g.scale(tj);
        }
        Ok(rho)
    }
    fn analytic_derivatives(&self, _t: &[f64]) -> Option<Result<Vec<CMatrix>>> {
        Some(Ok(self.generators.clone()))
    }
    fn param_names(&self) -> Vec<String> {
        (1..=self.num_params()).map(|j| format!("g{j}")).collect()
    }
}

/// Diagonal model `diag(t_1, …, t_{d−1}, 1 − Σ t)`; `d = 2` is the Bernoulli family.
#[derive(Debug, Clone)]
pub struct ClassicalDiagonal {
    pub d: usize,
}

impl ClassicalDiagonal {
    pub fn new(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidModel("classical_diagonal needs d ≥ 2".into()));
        }
        Ok(ClassicalDiagonal { d })
    }
}

impl ParametricModel for ClassicalDiagonal {
    fn name(&self) -> String {
        "classical_diagonal".into()
    }
    fn dim(&self) -> usize {
        self.d
    }
    fn num_params(&self) -> usize {
        self.d - 1
    }
    fn state(&self, t: &[f64]) -> Result<CMatrix> {
        let last = 1.0 - t.iter().sum::<f64>();
        let diag = t.iter().copied().chain(std::iter::once(last)).map(C64::from);
        Ok(CMatrix::from_diagonal(&DVector::from_iterator(self.d, diag)))
    }
    fn analytic_derivatives(&self, _t: &[f64]) -> Option<Result<Vec<CMatrix>>> {
        Some(Ok((0..self.d - 1)
            .map(|j| {
                let mut m = CMatrix::zeros(self.d, self.d);
                m[(j, j)] = C64::from(1.0);
                m[(self.d - 1, self.d - 1)] = C64::from(-1.0);
                m
            })
            .collect()))
    }
    fn in_domain(&self, t: &[f64]) -> bool {
        t.iter().all(|&v| v >= 0.0) && t.iter().sum::<f64>() <= 1.0
    }
}

/// `ρ_t = (I + r(cos t, sin t, 0)·σ)/2`.
#[derive(Debug, Clone, Copy)]
pub struct QubitPhase {
    pub r: f64,
}

impl QubitPhase {
    pub fn new(r: f64) -> Result<Self> {
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::InvalidModel(format!("Bloch radius {r} must lie in (0, 1]")));
        }
        Ok(QubitPhase { r })
    }
}

impl ParametricModel for QubitPhase {
    fn name(&self) -> String {
        "qubit_phase".into()
    }
    fn dim(&self) -> usize {
        2
    }
    fn num_params(&self) -> usize {
        1
    }
    fn state(&self, t: &[f64]) -> Result<CMatrix> {
        Ok(bloch_state([self.r * t[0].cos(), self.r * t[0].sin(), 0.0]))
    }
    fn analytic_derivatives(&self, t: &[f64]) -> Option<Result<Vec<CMatrix>>> {
        Some(Ok(vec![pauli_combination([-self.r * t[0].sin(), self.r * t[0].cos(), 0.0]).scale(0.5)]))
    }
    fn param_names(&self) -> Vec<String> {
        vec!["t".into()]
    }
}
