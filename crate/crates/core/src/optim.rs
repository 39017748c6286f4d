//! Derivative-free minimization (Nelder–Mead with restarts).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    /// Converged once the simplex diameter (max vertex distance to best) drops below this.
    pub diameter_tol: f64,
    pub max_evals: usize,
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions { diameter_tol: 1e-9, max_evals: 20_000, initial_step: 0.1 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Standard Nelder–Mead (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], opts: &NelderMeadOptions) -> NelderMeadResult {
    let n = x0.len();
    if n == 0 {
        return NelderMeadResult { x: vec![], value: f(x0), evals: 1, converged: true };
    }
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        let step = if v[i].abs() > 1e-3 { opts.initial_step * v[i].abs().max(1.0) } else { opts.initial_step };
        v[i] += step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v, &mut evals)).collect();

    let mut converged = false;
    while evals < opts.max_evals {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let diameter = simplex[1..]
            .iter()
            .map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        if diameter < opts.diameter_tol {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|j| centroid[j] + t * (simplex[n][j] - centroid[j])).collect() };

        let xr = along(-1.0);
        let fr = eval(&xr, &mut evals);
        if fr < values[0] {
            let xe = along(-2.0);
            let fe = eval(&xe, &mut evals);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[n] {
            let xc = along(-0.5);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = along(0.5);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        let (best, rest) = simplex.split_at_mut(1);
        for (vertex, value) in rest.iter_mut().zip(values.iter_mut().skip(1)) {
            for (x, b) in vertex.iter_mut().zip(&best[0]) {
                *x = b + 0.5 * (*x - b);
            }
            *value = eval(vertex, &mut evals);
        }
    }

    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    NelderMeadResult { x: simplex[best].clone(), value: values[best], evals, converged }
}

#[derive(Debug, Clone, Serialize)]
pub struct RestartReport {
    pub best: NelderMeadResult,
    /// Best value reached by each restart, in restart order.
    pub restart_values: Vec<f64>,
    pub all_converged: bool,
    /// Relative spread of restart optima, `(max − min)/max(|min|, 1e-300)`.
    pub spread: f64,
}

const MAX_POLISH_ROUNDS: usize = 20;

/// Runs Nelder–Mead from `x0` and from `restarts − 1` Gaussian perturbations of
/// it (scale `perturbation`), drawn from a ChaCha stream seeded with `seed`.
/// Each restart is re-seeded from its incumbent until it stops improving.
pub fn minimize_with_restarts<F: Fn(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    restarts: usize,
    perturbation: f64,
    seed: u64,
    opts: &NelderMeadOptions,
) -> RestartReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut runs = Vec::with_capacity(restarts.max(1));
    for r in 0..restarts.max(1) {
        let start: Vec<f64> = if r == 0 {
            x0.to_vec()
        } else {
            x0.iter()
                .map(|&v| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    v + perturbation * z
                })
                .collect()
        };
        // A collapsed simplex can stall away from the optimum; restarting from
        // the incumbent with a fresh simplex fixes that.
        let mut best = nelder_mead(&f, &start, opts);
        let mut evals = best.evals;
        for _ in 0..MAX_POLISH_ROUNDS {
            let next = nelder_mead(&f, &best.x, opts);
            evals += next.evals;
            let gain = best.value - next.value;
            let improved = next.value < best.value;
            if improved {
                best = NelderMeadResult { converged: next.converged && best.converged, ..next };
            }
            if !improved || gain <= 1e-13 * best.value.abs().max(1e-300) {
                break;
            }
        }
        runs.push(NelderMeadResult { evals, ..best });
    }
    let restart_values: Vec<f64> = runs.iter().map(|r| r.value).collect();
    let all_converged = runs.iter().all(|r| r.converged);
    let min = restart_values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = restart_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = (max - min) / min.abs().max(1e-300);
    let best = runs.into_iter().min_by(|a, b| a.value.total_cmp(&b.value)).expect("at least one restart");
    RestartReport { best, restart_values, all_converged, spread }
}
