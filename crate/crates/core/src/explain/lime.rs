use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::attribution::{Attribution, Method};
use super::mask::{CoalitionCache, MaskedInstance};
use crate::classifier::Probe;
use crate::{Error, Result};

pub const DEFAULT_NUM_SAMPLES: usize = 1000;
pub const DEFAULT_KERNEL_WIDTH: f64 = 25.0;
pub const DEFAULT_RIDGE_LAMBDA: f64 = 1e-3;

/// Diagonal ratio of the triangular factor below which the system counts as singular.
const SINGULAR_RATIO: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimeConfig {
    pub num_samples: usize,
    pub kernel_width: f64,
    pub ridge_lambda: f64,
    pub seed: u64,
}

impl Default for LimeConfig {
    fn default() -> Self {
        LimeConfig {
            num_samples: DEFAULT_NUM_SAMPLES,
            kernel_width: DEFAULT_KERNEL_WIDTH,
            ridge_lambda: DEFAULT_RIDGE_LAMBDA,
            seed: 42,
        }
    }
}

/// `exp(-d^2 / sigma^2)` with `d` the cosine distance between the all-ones
/// mask and a mask with `present` of `n` tokens kept.
pub fn proximity(present: usize, n: usize, kernel_width: f64) -> f64 {
    let d = 1.0 - (present as f64 / n as f64).sqrt();
    (-(d * d) / (kernel_width * kernel_width)).exp()
}

/// The perturbation design: `min(2^n - 1, num_samples)` distinct non-empty masks.
///
/// When that is every non-empty mask they are listed in binary order.
/// Otherwise the full mask comes first and the rest are drawn by picking a
/// size uniformly, then a subset of that size uniformly, skipping repeats.
pub fn lime_masks(n: usize, num_samples: usize, seed: u64) -> Vec<Vec<bool>> {
    let total = if n >= 64 { u64::MAX } else { (1u64 << n) - 1 };
    let k = (num_samples as u64).min(total) as usize;
    if k as u64 == total {
        return (1..=total).map(|m| (0..n).map(|j| m >> j & 1 == 1).collect()).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let full = vec![true; n];
    let mut seen: HashSet<Vec<bool>> = HashSet::from([full.clone()]);
    let mut out = vec![full];
    while out.len() < k {
        let size = rng.random_range(1..=n);
        let mut mask = vec![false; n];
        for j in rand::seq::index::sample(&mut rng, n, size) {
            mask[j] = true;
        }
        if seen.insert(mask.clone()) {
            out.push(mask);
        }
    }
    out
}

/// LIME surrogate: proximity-weighted ridge regression of probe outputs on
/// the token-presence masks, with an unpenalized intercept.
pub fn lime_explain(probe: &dyn Probe, text: &str, cfg: &LimeConfig, cache: &mut CoalitionCache) -> Result<Attribution> {
    if cfg.num_samples == 0 {
        return Err(Error::InvalidInput("num_samples must be positive".into()));
    }
    if !(cfg.kernel_width > 0.0 && cfg.kernel_width.is_finite()) {
        return Err(Error::InvalidInput(format!("kernel width must be positive, got {}", cfg.kernel_width)));
    }
    if cfg.ridge_lambda.is_nan() || cfg.ridge_lambda < 0.0 {
        return Err(Error::InvalidInput(format!("ridge lambda must be non-negative, got {}", cfg.ridge_lambda)));
    }
    let inst = MaskedInstance::new(text);
    let n = inst.len();
    if n == 0 {
        return Err(Error::InvalidInput("text has no tokens to explain".into()));
    }
    let masks = lime_masks(n, cfg.num_samples, cfg.seed);
    let renders: Vec<String> = masks.iter().map(|m| inst.render(m)).collect();
    let y = cache.evaluate(probe, &renders)?;
    let weights: Vec<f64> =
        masks.iter().map(|m| proximity(m.iter().filter(|&&b| b).count(), n, cfg.kernel_width)).collect();
    let beta = weighted_ridge(&masks, &y, &weights, cfg.ridge_lambda)?;
    Ok(Attribution {
        text: text.to_string(),
        tokens: inst.display_tokens(),
        values: beta[1..].to_vec(),
        base_value: beta[0],
        method: Method::Lime,
        seed: cfg.seed,
        probe_id: probe.id(),
        std_errors: None,
    })
}

/// Solves `(X'WX + lambda*I')b = X'Wy` with `I'` zero on the intercept.
///
/// Works on the equivalent stacked least-squares problem
/// `[sqrt(W)X; sqrt(lambda)I'] b = [sqrt(W)y; 0]` through a QR factorization,
/// which avoids squaring the condition number. Returns `[b0, b1..bn]`.
fn weighted_ridge(masks: &[Vec<bool>], y: &[f64], w: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let n = masks[0].len();
    let cols = n + 1;
    let ridge_rows = if lambda > 0.0 { n } else { 0 };
    let rows = masks.len() + ridge_rows;
    let singular = || {
        Error::Data(format!(
            "LIME system is singular with {} samples for {n} tokens at lambda = {lambda}; use lambda > 0",
            masks.len()
        ))
    };
    if rows < cols {
        return Err(singular());
    }
    let mut a = DMatrix::<f64>::zeros(rows, cols);
    let mut b = DVector::<f64>::zeros(rows);
    for (k, (mask, (&yk, &wk))) in masks.iter().zip(y.iter().zip(w)).enumerate() {
        let s = wk.sqrt();
        a[(k, 0)] = s;
        for (j, &on) in mask.iter().enumerate() {
            if on {
                a[(k, j + 1)] = s;
            }
        }
        b[k] = s * yk;
    }
    let sl = lambda.sqrt();
    for j in 0..ridge_rows {
        a[(masks.len() + j, j + 1)] = sl;
    }

    let qr = a.qr();
    let r = qr.r();
    let diag: Vec<f64> = (0..cols).map(|i| r[(i, i)].abs()).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 || diag.iter().any(|&d| d <= SINGULAR_RATIO * max) {
        return Err(singular());
    }
    let qtb = qr.q().transpose() * b;
    let beta = r.solve_upper_triangular(&qtb).ok_or_else(singular)?;
    Ok(beta.iter().copied().collect())
}
