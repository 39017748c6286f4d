//! Deterministic parallel Monte Carlo for normal tail probabilities.
//!
//! Samples are drawn in fixed-size blocks; block `b` uses the ChaCha stream
//! `b` under the caller's seed, so results do not depend on thread count and
//! two calls with the same seed share their standard normals (common random
//! numbers).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::matcore::{symmetric_eig, EIGEN_FLOOR};
use crate::{Error, RMatrix, Result};

pub const BLOCK: usize = 1 << 14;
pub const DEFAULT_SAMPLES: usize = 1_000_000;

/// RNG for stream `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct TailEstimate {
    pub probability: f64,
    /// Binomial standard error; zero for closed-form values.
    pub std_error: f64,
    pub samples: usize,
    pub closed_form: bool,
}

impl TailEstimate {
    pub fn exact(probability: f64) -> Self {
        TailEstimate { probability, std_error: 0.0, samples: 0, closed_form: true }
    }
}

/// Symmetric square root of a PSD covariance.
pub fn covariance_factor(sigma: &RMatrix) -> Result<RMatrix> {
    let (values, vectors) = symmetric_eig(sigma)?;
    let scale = values.last().copied().unwrap_or(0.0).abs().max(1.0);
    if values.first().is_some_and(|&l| l < -EIGEN_FLOOR * scale) {
        return Err(Error::NotPositive { eigenvalue: values[0] });
    }
    Ok(crate::matcore::spectral_map_real(&values, &vectors, |l| l.max(0.0).sqrt()))
}

/// Estimates `P[xᵀ W x ≥ c]` for `x ~ N(0, Σ)`.
pub fn quadratic_tail_mc(sigma: &RMatrix, w: &RMatrix, c: f64, samples: usize, seed: u64) -> Result<TailEstimate> {
    let k = sigma.nrows();
    if w.nrows() != k || w.ncols() != k || sigma.ncols() != k {
        return Err(Error::Dimension(format!(
            "covariance {k}×{} vs weight {}×{}",
            sigma.ncols(),
            w.nrows(),
            w.ncols()
        )));
    }
    if !c.is_finite() {
        return Err(Error::NonFinite("tail threshold"));
    }
    if c <= 0.0 {
        return Ok(TailEstimate::exact(1.0));
    }
    if samples == 0 {
        return Err(Error::Domain("at least one sample is required".into()));
    }
    let root = covariance_factor(sigma)?;
    let m = crate::matcore::symmetric_part(&(&root * w * &root));
    let m: Vec<f64> = m.iter().copied().collect();
    let blocks = samples.div_ceil(BLOCK);
    let hits: usize = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b as u64);
            let count = BLOCK.min(samples - b * BLOCK);
            let mut z = vec![0.0; k];
            let mut hits = 0usize;
            for _ in 0..count {
                for zi in z.iter_mut() {
                    *zi = StandardNormal.sample(&mut rng);
                }
                let mut q = 0.0;
                for col in 0..k {
                    let mz: f64 = (0..k).map(|row| m[row + col * k] * z[row]).sum();
                    q += z[col] * mz;
                }
                if q >= c {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let p = hits as f64 / samples as f64;
    Ok(TailEstimate { probability: p, std_error: (p * (1.0 - p) / samples as f64).sqrt(), samples, closed_form: false })
}
