//! Monte Carlo checks of attainability for one-parameter models.
//!
//! Trials run in parallel; trial `i` draws from ChaCha stream `i` under the
//! run's seed, so a run is a pure function of its inputs.

use std::io::{Read, Write};

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::Rng;
use rand_distr::Binomial;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::fisher::fidelity;
use crate::matcore::{bloch_state, hermitian_eig, pauli, trace, Spectral, EIGEN_FLOOR};
use crate::models::{derivatives_at, state_at, ParametricModel};
use crate::sampling::stream_rng;
use crate::{CMatrix, Error, Result, C64};

pub const POVM_TOL: f64 = 1e-9;
pub const PROBABILITY_TOL: f64 = 1e-8;
/// Tail thresholds recorded by every run.
pub const TAIL_THRESHOLDS: [f64; 2] = [1.0, 4.0];

/// Effects `M_i` with scalar outcome values `t̂_i`.
#[derive(Debug, Clone)]
pub struct Povm {
    pub effects: Vec<CMatrix>,
    pub values: Vec<f64>,
}

impl Povm {
    pub fn new(effects: Vec<CMatrix>, values: Vec<f64>) -> Result<Self> {
        if effects.is_empty() || effects.len() != values.len() {
            return Err(Error::Dimension(format!("{} effects but {} values", effects.len(), values.len())));
        }
        let d = effects[0].nrows();
        let mut sum = CMatrix::zeros(d, d);
        for m in &effects {
            if m.shape() != (d, d) {
                return Err(Error::Dimension("effects differ in size".into()));
            }
            let min = hermitian_eig(m)?.values[0];
            if min < -1e-10 {
                return Err(Error::NotPositive { eigenvalue: min });
            }
            sum += m;
        }
        let defect = (sum - CMatrix::identity(d, d)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if defect > POVM_TOL {
            return Err(Error::Precondition(format!("effects sum to identity only up to {defect:.3e}")));
        }
        Ok(Povm { effects, values })
    }

    /// `Tr[ρ M_i]`, clipped at zero and renormalized.
    pub fn probabilities(&self, rho: &CMatrix) -> Result<Vec<f64>> {
        let raw: Vec<f64> = self.effects.iter().map(|m| trace(&(rho * m)).re).collect();
        if let Some(&min) = raw.iter().min_by(|a, b| a.total_cmp(b)) {
            if min < -1e-10 {
                return Err(Error::NotPositive { eigenvalue: min });
            }
        }
        let total: f64 = raw.iter().map(|p| p.max(0.0)).sum();
        if (total - 1.0).abs() > PROBABILITY_TOL {
            return Err(Error::Precondition(format!("outcome probabilities sum to {total}")));
        }
        Ok(raw.iter().map(|p| p.max(0.0) / total).collect())
    }

    /// `Σ t̂_i Tr[X M_i]`.
    pub fn expectation(&self, x: &CMatrix) -> f64 {
        self.effects.iter().zip(&self.values).map(|(m, v)| v * trace(&(x * m)).re).sum()
    }
}

/// `shots` i.i.d. outcome indices.
pub fn sample_povm<R: Rng + ?Sized>(rho: &CMatrix, povm: &Povm, shots: usize, rng: &mut R) -> Result<Vec<usize>> {
    let probs = povm.probabilities(rho)?;
    let dist = WeightedIndex::new(&probs).map_err(|e| Error::Precondition(e.to_string()))?;
    Ok((0..shots).map(|_| dist.sample(rng)).collect())
}

/// Outcome counts of `shots` i.i.d. draws, via sequential binomials.
pub fn sample_counts<R: Rng + ?Sized>(probs: &[f64], shots: u64, rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = shots;
    let mut mass = 1.0f64;
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == probs.len() || mass <= 0.0 {
            counts[i] = remaining;
            break;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let k = Binomial::new(remaining, q).expect("valid binomial").sample(rng);
        counts[i] = k;
        remaining -= k;
        mass -= p;
    }
    counts
}

fn check_one_param(model: &dyn ParametricModel) -> Result<()> {
    if model.num_params() != 1 {
        return Err(Error::Precondition(format!("{} has {} parameters, need 1", model.name(), model.num_params())));
    }
    Ok(())
}

/// SLD of a one-parameter model; on rank-deficient states the SLD is taken on
/// the support, which is a valid solution there.
fn sld_and_information(model: &dyn ParametricModel, t0: f64) -> Result<(CMatrix, CMatrix, f64)> {
    let rho = state_at(model, &[t0])?;
    let deriv = derivatives_at(model, &[t0])?.remove(0);
    let spectral = Spectral::allow_singular(&rho)?;
    let l =
        if spectral.min_eigenvalue() > EIGEN_FLOOR { spectral.sld(&deriv) } else { spectral.sld_on_support(&deriv) };
    let j = trace(&(&rho * &l * &l)).re;
    Ok((rho, l, j))
}

/// Projective measurement in the SLD eigenbasis with values `t0 + λ/J`.
pub fn one_param_local_povm(model: &dyn ParametricModel, t0: f64) -> Result<Povm> {
    check_one_param(model)?;
    let (_, l, j) = sld_and_information(model, t0)?;
    if j < 1e-10 {
        return Err(Error::Precondition(format!("SLD Fisher information {j:.3e} is too small")));
    }
    let eig = hermitian_eig(&l)?;
    let effects = (0..eig.values.len())
        .map(|i| {
            let v = eig.vectors.column(i);
            v * v.adjoint()
        })
        .collect();
    let values = eig.values.iter().map(|&lam| t0 + lam / j).collect();
    Povm::new(effects, values)
}

/// SLD Fisher information of a one-parameter model, support-restricted for
/// rank-deficient states.
pub fn one_param_information(model: &dyn ParametricModel, t0: f64) -> Result<f64> {
    check_one_param(model)?;
    Ok(sld_and_information(model, t0)?.2)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LocalUnbiasedness {
    /// `Σ t̂_i Tr[ρ_{t0} M_i] − t0`.
    pub bias: f64,
    /// `Σ t̂_i Tr[∂ρ M_i]` from the exact derivative.
    pub derivative: f64,
    /// The same derivative by central differences of the expectation.
    pub derivative_fd: f64,
}

pub fn local_unbiasedness(model: &dyn ParametricModel, t0: f64, povm: &Povm) -> Result<LocalUnbiasedness> {
    check_one_param(model)?;
    let rho = state_at(model, &[t0])?;
    let deriv = derivatives_at(model, &[t0])?.remove(0);
    let h = 1e-5;
    let plus = povm.expectation(&model.state(&[t0 + h])?);
    let minus = povm.expectation(&model.state(&[t0 - h])?);
    Ok(LocalUnbiasedness {
        bias: povm.expectation(&rho) - t0,
        derivative: povm.expectation(&deriv),
        derivative_fd: (plus - minus) / (2.0 * h),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// Averaged outcomes of the local measurement.
    Local,
    /// Two-step protocol fell back to the localization estimate.
    Fallback,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
struct TrialRow {
    trial: usize,
    rescaled: f64,
    branch: Branch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRun {
    pub seed: u64,
    pub n: u64,
    pub trials: usize,
    pub t_true: f64,
    /// `√n (t̂ − t_true)` per trial.
    pub rescaled: Vec<f64>,
    pub branches: Vec<Branch>,
}

pub const CSV_SCHEMA: &str = "# qprecision-simulation v1";

impl SimulationRun {
    /// Empirical `n · MSE`.
    pub fn nmse(&self) -> f64 {
        self.rescaled.iter().map(|x| x * x).sum::<f64>() / self.trials as f64
    }

    /// Standard error of [`SimulationRun::nmse`].
    pub fn nmse_std_error(&self) -> f64 {
        let m = self.nmse();
        let var = self.rescaled.iter().map(|x| (x * x - m).powi(2)).sum::<f64>() / (self.trials as f64 - 1.0).max(1.0);
        (var / self.trials as f64).sqrt()
    }

    pub fn mean(&self) -> f64 {
        self.rescaled.iter().sum::<f64>() / self.trials as f64
    }

    pub fn fallback_frequency(&self) -> f64 {
        self.branches.iter().filter(|&&b| b == Branch::Fallback).count() as f64 / self.trials as f64
    }

    /// Fraction of trials with `x² ≥ c`.
    pub fn tail_frequency(&self, c: f64) -> f64 {
        self.rescaled.iter().filter(|&&x| x * x >= c).count() as f64 / self.trials as f64
    }

    pub fn tail_frequencies(&self) -> Vec<(f64, f64)> {
        TAIL_THRESHOLDS.iter().map(|&c| (c, self.tail_frequency(c))).collect()
    }

    /// Empirical CDF of the rescaled estimates at `x`.
    pub fn empirical_cdf(&self, x: f64) -> f64 {
        self.rescaled.iter().filter(|&&v| v <= x).count() as f64 / self.trials as f64
    }

    /// Versioned CSV: schema line, a summary comment line, then one row per trial.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{CSV_SCHEMA}")?;
        let tails: Vec<String> = self.tail_frequencies().iter().map(|(c, f)| format!("tail_{c}={f:e}")).collect();
        writeln!(
            out,
            "# seed={},n={},trials={},t_true={:e},nmse={:e},nmse_se={:e},fallback={:e},{}",
            self.seed,
            self.n,
            self.trials,
            self.t_true,
            self.nmse(),
            self.nmse_std_error(),
            self.fallback_frequency(),
            tails.join(",")
        )?;
        let mut writer = csv::Writer::from_writer(out);
        for (i, (&x, &b)) in self.rescaled.iter().zip(&self.branches).enumerate() {
            writer.serialize(TrialRow { trial: i, rescaled: x, branch: b })?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut text = String::new();
        std::io::BufReader::new(input).read_to_string(&mut text)?;
        let mut lines = text.splitn(3, '\n');
        let schema = lines.next().unwrap_or_default();
        if schema.trim() != CSV_SCHEMA {
            return Err(Error::Precondition(format!("unsupported CSV schema `{schema}`")));
        }
        let summary = lines.next().unwrap_or_default().trim_start_matches('#').trim();
        let field = |key: &str| -> Result<&str> {
            summary
                .split(',')
                .find_map(|kv| kv.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
                .ok_or_else(|| Error::Precondition(format!("summary line lacks `{key}`")))
        };
        let parse_err = |key: &str| Error::Precondition(format!("bad `{key}` in summary"));
        let seed = field("seed")?.parse().map_err(|_| parse_err("seed"))?;
        let n = field("n")?.parse().map_err(|_| parse_err("n"))?;
        let trials = field("trials")?.parse().map_err(|_| parse_err("trials"))?;
        let t_true = field("t_true")?.parse().map_err(|_| parse_err("t_true"))?;
        let mut reader = csv::Reader::from_reader(lines.next().unwrap_or_default().as_bytes());
        let mut rescaled = Vec::new();
        let mut branches = Vec::new();
        for row in reader.deserialize::<TrialRow>() {
            let row = row?;
            rescaled.push(row.rescaled);
            branches.push(row.branch);
        }
        if rescaled.len() != trials {
            return Err(Error::Precondition(format!("{} rows for {trials} trials", rescaled.len())));
        }
        Ok(SimulationRun { seed, n, trials, t_true, rescaled, branches })
    }
}

fn averaged_outcome<R: Rng + ?Sized>(probs: &[f64], values: &[f64], shots: u64, rng: &mut R) -> f64 {
    let counts = sample_counts(probs, shots, rng);
    counts.iter().zip(values).map(|(&c, &v)| c as f64 * v).sum::<f64>() / shots as f64
}

/// Averages `n` outcomes of the local measurement at `t0` on copies of `ρ_{t_true}`.
pub fn simulate_mse(
    model: &dyn ParametricModel,
    t_true: f64,
    t0: f64,
    n: u64,
    trials: usize,
    seed: u64,
) -> Result<SimulationRun> {
    check_one_param(model)?;
    if n == 0 || trials == 0 {
        return Err(Error::Domain("n and trials must be positive".into()));
    }
    let povm = one_param_local_povm(model, t0)?;
    let probs = povm.probabilities(&state_at(model, &[t_true])?)?;
    let root_n = (n as f64).sqrt();
    let rescaled: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            root_n * (averaged_outcome(&probs, &povm.values, n, &mut rng) - t_true)
        })
        .collect();
    Ok(SimulationRun { seed, n, trials, t_true, rescaled, branches: vec![Branch::Local; trials] })
}

#[derive(Debug, Clone, Copy)]
pub struct TwoStepOptions {
    pub x: f64,
    /// Interval searched when projecting the tomographic state onto the model.
    pub search: (f64, f64),
    pub grid: usize,
}

impl Default for TwoStepOptions {
    fn default() -> Self {
        TwoStepOptions { x: 0.1, search: (-std::f64::consts::PI, std::f64::consts::PI), grid: 721 }
    }
}

/// Copies spent on localization: `⌈n^{1−x/2}⌉`.
pub fn localization_copies(n: u64, x: f64) -> u64 {
    (n as f64).powf(1.0 - x / 2.0).ceil() as u64
}

/// Pauli linear-inversion tomography on `copies` qubits, clipped to the Bloch ball.
pub fn pauli_tomography<R: Rng + ?Sized>(rho: &CMatrix, copies: u64, rng: &mut R) -> [f64; 3] {
    let paulis = pauli();
    let mut bloch = [0.0; 3];
    for (axis, sigma) in paulis.iter().enumerate() {
        let shots = copies / 3 + u64::from((axis as u64) < copies % 3);
        if shots == 0 {
            continue;
        }
        let expectation = trace(&(rho * sigma)).re.clamp(-1.0, 1.0);
        let up = Binomial::new(shots, (1.0 + expectation) / 2.0).expect("valid binomial").sample(rng);
        bloch[axis] = 2.0 * up as f64 / shots as f64 - 1.0;
    }
    let norm = bloch.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 1.0 {
        bloch.iter_mut().for_each(|v| *v /= norm);
    }
    bloch
}

/// Closest model point to `target` in Frobenius norm: grid search then golden section.
fn project(model: &dyn ParametricModel, target: &CMatrix, opts: &TwoStepOptions) -> Result<f64> {
    let (lo, hi) = opts.search;
    let dist = |t: f64| -> f64 {
        match model.state(&[t]) {
            Ok(rho) => (rho - target).norm_squared(),
            Err(_) => f64::INFINITY,
        }
    };
    let steps = opts.grid.max(3);
    let h = (hi - lo) / (steps - 1) as f64;
    let best = (0..steps)
        .map(|i| lo + h * i as f64)
        .filter(|&t| model.in_domain(&[t]))
        .map(|t| (t, dist(t)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::Domain("search interval misses the model domain".into()))?;
    let (mut a, mut b) = ((best.0 - h).max(lo), (best.0 + h).min(hi));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
    let (mut fc, mut fd) = (dist(c), dist(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = dist(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = dist(d);
        }
    }
    Ok(0.5 * (a + b))
}

/// Two-step protocol: tomographic localization on `⌈n^{1−x/2}⌉` copies, then the
/// local measurement at the rough estimate on the rest, with fallback when the
/// two estimates differ by more than `n^{−(1−x)/2}`.
pub fn two_step_simulate(
    model: &dyn ParametricModel,
    t_true: f64,
    n: u64,
    trials: usize,
    seed: u64,
    opts: &TwoStepOptions,
) -> Result<SimulationRun> {
    check_one_param(model)?;
    if model.dim() != 2 {
        return Err(Error::Precondition("two-step simulation needs a qubit model".into()));
    }
    if !(opts.x > 0.0 && opts.x < 2.0 / 9.0) {
        return Err(Error::Precondition(format!("x = {} outside (0, 2/9)", opts.x)));
    }
    let first = localization_copies(n, opts.x);
    if first < 30 || first >= n {
        return Err(Error::Precondition(format!("n = {n} too small to split ({first} localization copies)")));
    }
    let second = n - first;
    let radius = (n as f64).powf(-(1.0 - opts.x) / 2.0);
    let rho_true = state_at(model, &[t_true])?;
    let root_n = (n as f64).sqrt();
    let rows: Vec<(f64, Branch)> = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<(f64, Branch)> {
            let mut rng = stream_rng(seed, i as u64);
            let rough = project(model, &bloch_state(pauli_tomography(&rho_true, first, &mut rng)), opts)?;
            let povm = one_param_local_povm(model, rough)?;
            let refined = averaged_outcome(&povm.probabilities(&rho_true)?, &povm.values, second, &mut rng);
            let (estimate, branch) =
                if (refined - rough).abs() <= radius { (refined, Branch::Local) } else { (rough, Branch::Fallback) };
            Ok((root_n * (estimate - t_true), branch))
        })
        .collect::<Result<_>>()?;
    let (rescaled, branches) = rows.into_iter().unzip();
    Ok(SimulationRun { seed, n, trials, t_true, rescaled, branches })
}

/// One-sample Kolmogorov–Smirnov statistic against a continuous CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < sorted.len() {
        // Step over ties so the empirical CDF jumps once per distinct value.
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let f = cdf(sorted[i]);
        d = d.max((j + 1) as f64 / n - f).max(f - i as f64 / n);
        i = j + 1;
    }
    d
}

/// Asymptotic 1% critical value `1.6276/√N`.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

/// KS distance of the rescaled estimates to `N(0, variance)`.
pub fn ks_to_normal(samples: &[f64], variance: f64) -> Result<f64> {
    let normal = Normal::new(0.0, variance.sqrt()).map_err(|e| Error::Domain(e.to_string()))?;
    Ok(ks_statistic(samples, |x| normal.cdf(x)))
}

/// Report of the fidelity Cramér–Rao inequality
/// `½(V_{t0} + V_{t0+ε} + ε²) ≥ ε²/(8(1 − F))`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FidelityCrReport {
    pub eps: f64,
    pub v0: f64,
    pub v_eps: f64,
    pub fidelity: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub bias0: f64,
    pub bias_eps: f64,
    /// Both biases within 1e-6; otherwise the inequality is not guaranteed.
    pub unbiased: bool,
}

pub fn fidelity_cr_check(model: &dyn ParametricModel, t0: f64, eps: f64, povm: &Povm) -> Result<FidelityCrReport> {
    check_one_param(model)?;
    if !(eps > 0.0) {
        return Err(Error::Precondition("ε must be positive".into()));
    }
    let moments = |t: f64| -> Result<(f64, f64)> {
        let probs = povm.probabilities(&state_at(model, &[t])?)?;
        let mean: f64 = probs.iter().zip(&povm.values).map(|(p, v)| p * v).sum();
        let var: f64 = probs.iter().zip(&povm.values).map(|(p, v)| p * (v - t).powi(2)).sum();
        Ok((mean - t, var))
    };
    let (bias0, v0) = moments(t0)?;
    let (bias_eps, v_eps) = moments(t0 + eps)?;
    let f = fidelity(&state_at(model, &[t0])?, &state_at(model, &[t0 + eps])?)?;
    let lhs = 0.5 * (v0 + v_eps + eps * eps);
    let rhs = eps * eps / (8.0 * (1.0 - f));
    Ok(FidelityCrReport {
        eps,
        v0,
        v_eps,
        fidelity: f,
        lhs,
        rhs,
        slack: lhs - rhs,
        bias0,
        bias_eps,
        unbiased: bias0.abs() <= 1e-6 && bias_eps.abs() <= 1e-6,
    })
}

/// Re-labels the effects of `povm` with values making the estimator unbiased at
/// both `t0` and `t0 + ε` (least-norm solution of the two linear conditions).
pub fn two_point_unbiased_povm(model: &dyn ParametricModel, t0: f64, eps: f64, povm: &Povm) -> Result<Povm> {
    check_one_param(model)?;
    let p0 = povm.probabilities(&state_at(model, &[t0])?)?;
    let p1 = povm.probabilities(&state_at(model, &[t0 + eps])?)?;
    let k = p0.len();
    let a = crate::RMatrix::from_fn(2, k, |r, c| if r == 0 { p0[c] } else { p1[c] });
    let b = nalgebra::DVector::from_vec(vec![t0, t0 + eps]);
    let gram = &a * a.transpose();
    let y = gram.lu().solve(&b).ok_or(Error::Singular("two-point unbiasedness system"))?;
    let values = a.transpose() * y;
    Povm::new(povm.effects.clone(), values.iter().copied().collect())
}

/// Computational-basis effects `|i⟩⟨i|`.
pub fn computational_basis(d: usize) -> Vec<CMatrix> {
    (0..d)
        .map(|i| {
            let mut m = CMatrix::zeros(d, d);
            m[(i, i)] = C64::from(1.0);
            m
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ClassicalDiagonal, QubitPhase};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::ChiSquared;

    #[test]
    fn povm_validation() {
        let basis = computational_basis(2);
        assert!(Povm::new(basis.clone(), vec![0.0, 1.0]).is_ok());
        assert!(Povm::new(vec![basis[0].clone()], vec![0.0]).is_err());
        assert!(Povm::new(basis.clone(), vec![0.0]).is_err());
        let neg = basis[0].scale(2.0) - &basis[1];
        assert!(Povm::new(vec![neg, basis[1].scale(2.0) - &basis[0]], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn deterministic_outcomes_on_pure_state() {
        let povm = Povm::new(computational_basis(2), vec![0.0, 1.0]).unwrap();
        let rho = bloch_state([0.0, 0.0, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_povm(&rho, &povm, 1000, &mut rng).unwrap().iter().all(|&i| i == 0));
    }

    #[test]
    fn fair_coin_frequency() {
        let povm = Povm::new(computational_basis(2), vec![0.0, 1.0]).unwrap();
        let rho = bloch_state([0.0, 0.0, 0.0]);
        let shots = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ones = sample_povm(&rho, &povm, shots, &mut rng).unwrap().iter().filter(|&&i| i == 1).count();
        let freq = ones as f64 / shots as f64;
        assert!((freq - 0.5).abs() < 3.0 * (0.25 / shots as f64).sqrt());
    }

    fn random_qubit_povm(rng: &mut ChaCha8Rng) -> Povm {
        // Three rank-one effects a_i(I + n_i·σ) with Σ a_i n_i = 0, Σ a_i = 1.
        let n1 = {
            let v: [f64; 3] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.map(|x| x / norm)
        };
        let n2 = {
            let v: [f64; 3] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.map(|x| x / norm)
        };
        let (a1, a2) = (0.3, 0.3);
        let s = [a1 * n1[0] + a2 * n2[0], a1 * n1[1] + a2 * n2[1], a1 * n1[2] + a2 * n2[2]];
        let a3 = s.iter().map(|x| x * x).sum::<f64>().sqrt();
        let n3 = s.map(|x| -x / a3);
        let total = a1 + a2 + a3;
        let effect = |a: f64, n: [f64; 3]| bloch_state(n).scale(2.0 * a / total);
        // The identity needs Σ a_i = 1; pad with a multiple of I.
        let pad = CMatrix::identity(2, 2).scale(1.0 - (a1 + a2 + a3) / total);
        let effects = vec![effect(a1, n1), effect(a2, n2), effect(a3, n3) + pad];
        Povm::new(effects, vec![0.0, 1.0, 2.0]).unwrap()
    }

    #[test]
    fn chi_square_goodness_of_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let shots = 1_000_000u64;
        for _ in 0..3 {
            let povm = random_qubit_povm(&mut rng);
            let rho = bloch_state([0.3, -0.2, 0.5]);
            let probs = povm.probabilities(&rho).unwrap();
            let counts = sample_counts(&probs, shots, &mut rng);
            let chi2: f64 = counts
                .iter()
                .zip(&probs)
                .map(|(&c, &p)| (c as f64 - p * shots as f64).powi(2) / (p * shots as f64))
                .sum();
            let crit = ChiSquared::new((probs.len() - 1) as f64).unwrap().inverse_cdf(0.999);
            assert!(chi2 < crit, "χ² = {chi2} ≥ {crit}");
        }
        // Per-shot sampling agrees with the count sampler.
        let povm = random_qubit_povm(&mut rng);
        let rho = bloch_state([0.1, 0.6, -0.3]);
        let probs = povm.probabilities(&rho).unwrap();
        let idx = sample_povm(&rho, &povm, 200_000, &mut rng).unwrap();
        for (i, &p) in probs.iter().enumerate() {
            let f = idx.iter().filter(|&&k| k == i).count() as f64 / idx.len() as f64;
            assert!((f - p).abs() < 4.0 * (p * (1.0 - p) / idx.len() as f64).sqrt());
        }
    }

    #[test]
    fn bernoulli_local_povm() {
        let m = ClassicalDiagonal::new(2).unwrap();
        let povm = one_param_local_povm(&m, 0.5).unwrap();
        let mut values = povm.values.clone();
        values.sort_by(f64::total_cmp);
        // t̂ = 1/2 ± 2/4 with L = diag(2, −2) and J = 4.
        assert_relative_eq!(values[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(values[1], 1.0, epsilon = 1e-12);
        let probs = povm.probabilities(&state_at(&m, &[0.5]).unwrap()).unwrap();
        let var: f64 = probs.iter().zip(&povm.values).map(|(p, v)| p * (v - 0.5).powi(2)).sum();
        assert_relative_eq!(var, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn qubit_phase_local_povm_on_pure_state() {
        let m = QubitPhase::new(1.0).unwrap();
        let t0 = 0.4;
        let povm = one_param_local_povm(&m, t0).unwrap();
        let probs = povm.probabilities(&state_at(&m, &[t0]).unwrap()).unwrap();
        let var: f64 = probs.iter().zip(&povm.values).map(|(p, v)| p * (v - t0).powi(2)).sum();
        assert_relative_eq!(var, 1.0, epsilon = 1e-10);
        let check = local_unbiasedness(&m, t0, &povm).unwrap();
        assert!(check.bias.abs() < 1e-8);
        assert!((check.derivative - 1.0).abs() < 1e-8);
        assert!((check.derivative_fd - 1.0).abs() < 1e-8);
    }

    #[test]
    fn local_unbiasedness_on_mixed_models() {
        for (m, t0) in [
            (Box::new(QubitPhase::new(0.7).unwrap()) as Box<dyn ParametricModel>, 1.1),
            (Box::new(ClassicalDiagonal::new(2).unwrap()), 0.3),
        ] {
            let povm = one_param_local_povm(m.as_ref(), t0).unwrap();
            let check = local_unbiasedness(m.as_ref(), t0, &povm).unwrap();
            assert!(check.bias.abs() < 1e-8, "{check:?}");
            assert!((check.derivative - 1.0).abs() < 1e-8);
            assert!((check.derivative_fd - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn simulate_is_deterministic_and_shift_covariant() {
        let m = QubitPhase::new(0.9).unwrap();
        let a = simulate_mse(&m, 0.2, 0.2, 400, 2000, 5).unwrap();
        let b = simulate_mse(&m, 0.2, 0.2, 400, 2000, 5).unwrap();
        assert_eq!(a, b);
        let j = one_param_information(&m, 0.2).unwrap();
        let se = 3.0 * (2.0 / 2000f64).sqrt() / j;
        assert!((a.nmse() - 1.0 / j).abs() < se, "{} vs {}", a.nmse(), 1.0 / j);

        // Moving the truth by δ/√n moves the rescaled mean by δ (to first order).
        let delta = 0.5;
        let shifted = simulate_mse(&m, 0.2 + delta / 20.0, 0.2, 400, 2000, 6).unwrap();
        let moved = shifted.rescaled.iter().map(|x| x + delta).sum::<f64>() / 2000.0;
        let spread = (2.0 / (j * 2000.0)).sqrt();
        assert!((moved - a.mean() - delta).abs() < 4.0 * spread, "{moved} {}", a.mean());
    }

    #[test]
    fn nmse_never_far_below_sld_bound() {
        let m = ClassicalDiagonal::new(2).unwrap();
        let run = simulate_mse(&m, 0.3, 0.3, 200, 3000, 2).unwrap();
        let j = one_param_information(&m, 0.3).unwrap();
        assert!(run.nmse() >= 1.0 / j - 4.0 * run.nmse_std_error());
    }

    #[test]
    fn csv_round_trip() {
        let m = QubitPhase::new(0.8).unwrap();
        let run = two_step_simulate(&m, 0.3, 1024, 50, 1, &TwoStepOptions::default()).unwrap();
        let mut buf = Vec::new();
        run.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(CSV_SCHEMA));
        let back = SimulationRun::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, run);
        assert!(SimulationRun::read_csv("# other\n".as_bytes()).is_err());
    }

    #[test]
    fn two_step_preconditions() {
        let m = QubitPhase::new(0.8).unwrap();
        let bad_x = TwoStepOptions { x: 0.3, ..Default::default() };
        assert!(two_step_simulate(&m, 0.3, 1024, 10, 0, &bad_x).is_err());
        assert!(two_step_simulate(&m, 0.3, 20, 10, 0, &TwoStepOptions::default()).is_err());
        assert_eq!(localization_copies(4096, 0.1), 2703);
    }

    #[test]
    fn tomography_is_consistent() {
        let rho = bloch_state([0.3, -0.4, 0.5]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = pauli_tomography(&rho, 300_000, &mut rng);
        for (est, exact) in r.iter().zip([0.3, -0.4, 0.5]) {
            assert!((est - exact).abs() < 0.01);
        }
        let pure = bloch_state([0.0, 0.0, 1.0]);
        let r = pauli_tomography(&pure, 30, &mut rng);
        assert!(r.iter().map(|x| x * x).sum::<f64>() <= 1.0 + 1e-12);
    }

    #[test]
    fn ks_statistic_examples() {
        // Uniform grid midpoints against the uniform CDF: D = 1/(2N).
        let samples: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        let d = ks_statistic(&samples, |x| x.clamp(0.0, 1.0));
        assert_relative_eq!(d, 0.005, epsilon = 1e-12);
        // A point mass at 0 against N(0, 1) has D = 1/2.
        assert_relative_eq!(ks_to_normal(&[0.0; 10], 1.0).unwrap(), 0.5, epsilon = 1e-12);
        assert_relative_eq!(ks_critical_1pct(10_000), 0.016276, epsilon = 1e-12);
    }

    #[test]
    fn fidelity_cr_bernoulli() {
        let m = ClassicalDiagonal::new(2).unwrap();
        let povm = Povm::new(computational_basis(2), vec![1.0, 0.0]).unwrap();
        let t0 = 0.3;
        for eps in [0.1, 0.05, 0.025] {
            let r = fidelity_cr_check(&m, t0, eps, &povm).unwrap();
            assert!(r.unbiased);
            let t1: f64 = t0 + eps;
            let f = (t0 * t1).sqrt() + ((1.0 - t0) * (1.0 - t1)).sqrt();
            assert_relative_eq!(r.fidelity, f, epsilon = 1e-12);
            assert_relative_eq!(r.v0, t0 * (1.0 - t0), epsilon = 1e-12);
            assert!(r.slack >= -1e-9, "{r:?}");
        }
        assert!(fidelity_cr_check(&m, t0, 0.0, &povm).is_err());
    }

    #[test]
    fn fidelity_cr_qubit_slack_tends_to_excess_variance() {
        let m = QubitPhase::new(0.8).unwrap();
        let t0 = 0.2;
        let local = one_param_local_povm(&m, t0).unwrap();
        let j = one_param_information(&m, t0).unwrap();
        let mut previous = f64::INFINITY;
        for eps in [0.1, 0.05, 0.025] {
            let povm = two_point_unbiased_povm(&m, t0, eps, &local).unwrap();
            let r = fidelity_cr_check(&m, t0, eps, &povm).unwrap();
            assert!(r.unbiased, "{r:?}");
            assert!(r.slack >= -1e-9);
            // The local measurement is optimal, so V → 1/J and the slack shrinks.
            assert!(r.slack < previous);
            previous = r.slack;
            assert!((r.v0 - 1.0 / j).abs() < 2.0 * eps);
        }
        assert!(previous < 0.02);
    }

    #[test]
    fn one_param_required() {
        let m = ClassicalDiagonal::new(3).unwrap();
        assert!(one_param_local_povm(&m, 0.2).is_err());
    }
}
