use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::attribution::{Attribution, Method};
use super::mask::{CoalitionCache, MaskedInstance};
use crate::classifier::Probe;
use crate::{Error, Result};

/// Largest token count explained by full enumeration (4096 coalitions).
pub const DEFAULT_EXACT_LIMIT: usize = 12;

/// Hard ceiling on the exact limit; 2^24 renders is already far past useful.
const MAX_EXACT_LIMIT: usize = 24;

/// `|S|! (n - |S| - 1)! / n!`, computed as `1 / (n * C(n-1, |S|))`.
pub fn shapley_weight(n: usize, s: usize) -> f64 {
    assert!(s < n, "coalition size {s} must be below player count {n}");
    let k = s.min(n - 1 - s);
    let mut binom = 1.0;
    for i in 0..k {
        binom = binom * (n - 1 - i) as f64 / (i + 1) as f64;
    }
    1.0 / (n as f64 * binom.round())
}

pub fn shap_exact(probe: &dyn Probe, text: &str, cache: &mut CoalitionCache) -> Result<Attribution> {
    shap_exact_limited(probe, text, DEFAULT_EXACT_LIMIT, cache)
}

/// Shapley values by enumerating every coalition of the sentence's tokens.
pub fn shap_exact_limited(probe: &dyn Probe, text: &str, exact_limit: usize, cache: &mut CoalitionCache) -> Result<Attribution> {
    let inst = MaskedInstance::new(text);
    let n = inst.len();
    if n == 0 {
        return Err(Error::InvalidInput("text has no tokens to explain".into()));
    }
    let limit = exact_limit.min(MAX_EXACT_LIMIT);
    if n > limit {
        return Err(Error::InvalidInput(format!(
            "{n} tokens exceeds the exact limit of {limit}; use shap_sampled for longer texts"
        )));
    }
    let full = 1usize << n;
    let renders: Vec<String> = (0..full as u64).map(|m| inst.render_bits(m)).collect();
    let v = cache.evaluate(probe, &renders)?;
    let weights: Vec<f64> = (0..n).map(|s| shapley_weight(n, s)).collect();

    let mut phi = vec![0.0; n];
    for (j, phi_j) in phi.iter_mut().enumerate() {
        let bit = 1usize << j;
        for m in (0..full).filter(|m| m & bit == 0) {
            *phi_j += weights[m.count_ones() as usize] * (v[m | bit] - v[m]);
        }
    }
    Ok(Attribution {
        text: text.to_string(),
        tokens: inst.display_tokens(),
        values: phi,
        base_value: v[0],
        method: Method::ShapExact,
        seed: 0,
        probe_id: probe.id(),
        std_errors: None,
    })
}

/// Monte Carlo Shapley values from antithetic permutation pairs.
///
/// `samples` counts permutations including reversals, so `samples / 2`
/// pairs are drawn. Each pair yields one averaged marginal per token; the
/// reported standard error is taken over those pair means.
pub fn shap_sampled(probe: &dyn Probe, text: &str, samples: usize, seed: u64, cache: &mut CoalitionCache) -> Result<Attribution> {
    let inst = MaskedInstance::new(text);
    let n = inst.len();
    if n == 0 {
        return Err(Error::InvalidInput("text has no tokens to explain".into()));
    }
    if samples < 2 * n {
        return Err(Error::InvalidInput(format!("samples must be at least 2 x {n} tokens, got {samples}")));
    }
    let pairs = samples / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut orders: Vec<Vec<usize>> = Vec::with_capacity(2 * pairs);
    for _ in 0..pairs {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let rev: Vec<usize> = perm.iter().rev().copied().collect();
        orders.push(perm);
        orders.push(rev);
    }

    // prefix renders for every order, n + 1 per order
    let mut renders = Vec::with_capacity(orders.len() * (n + 1));
    for order in &orders {
        let mut mask = vec![false; n];
        renders.push(inst.render(&mask));
        for &j in order {
            mask[j] = true;
            renders.push(inst.render(&mask));
        }
    }
    let v = cache.evaluate(probe, &renders)?;

    let mut pair_means = vec![vec![0.0; n]; pairs];
    for (o, order) in orders.iter().enumerate() {
        let base = o * (n + 1);
        for (step, &j) in order.iter().enumerate() {
            pair_means[o / 2][j] += 0.5 * (v[base + step + 1] - v[base + step]);
        }
    }

    let mut values = vec![0.0; n];
    let mut std_errors = vec![0.0; n];
    for j in 0..n {
        let mean = pair_means.iter().map(|p| p[j]).sum::<f64>() / pairs as f64;
        values[j] = mean;
        if pairs > 1 {
            let var = pair_means.iter().map(|p| (p[j] - mean).powi(2)).sum::<f64>() / (pairs - 1) as f64;
            std_errors[j] = (var / pairs as f64).sqrt();
        }
    }
    Ok(Attribution {
        text: text.to_string(),
        tokens: inst.display_tokens(),
        values,
        base_value: v[0],
        method: Method::ShapSampled,
        seed,
        probe_id: probe.id(),
        std_errors: Some(std_errors),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{ConstantProbe, FnProbe};
    use crate::classifier::tokenize::tokenize;

    fn additive(coef: &'static [(&'static str, f64)]) -> impl Probe {
        FnProbe::new("additive", move |t: &str| {
            tokenize(t).iter().map(|tok| coef.iter().find(|(w, _)| *w == tok.text).map_or(0.0, |c| c.1)).sum::<f64>()
        })
    }

    const COEF: &[(&str, f64)] = &[("alpha", 0.1), ("beta", 0.25), ("gamma", 0.05), ("delta", 0.3)];

    #[test]
    fn weights_sum_to_one_over_sizes() {
        for n in 1..=12 {
            // each size s has C(n-1, s) coalitions
            let total: f64 = (0..n)
                .map(|s| {
                    let c = (0..s).fold(1.0, |acc, i| acc * (n - 1 - i) as f64 / (i + 1) as f64);
                    c * shapley_weight(n, s)
                })
                .sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        assert_eq!(shapley_weight(3, 0), 1.0 / 3.0);
        assert_eq!(shapley_weight(3, 1), 1.0 / 6.0);
    }

    #[test]
    fn additive_probe_recovers_coefficients() {
        let p = additive(COEF);
        let a = shap_exact(&p, "alpha beta gamma delta", &mut CoalitionCache::new()).unwrap();
        for (v, (_, c)) in a.values.iter().zip(COEF) {
            assert!((v - c).abs() < 1e-12);
        }
        let s = shap_sampled(&p, "alpha beta gamma delta", 64, 9, &mut CoalitionCache::new()).unwrap();
        for (v, (_, c)) in s.values.iter().zip(COEF) {
            assert!((v - c).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_probe_gives_zero() {
        let a = shap_exact(&ConstantProbe(0.4), "one two three", &mut CoalitionCache::new()).unwrap();
        assert!(a.values.iter().all(|&v| v == 0.0));
        assert_eq!(a.base_value, 0.4);
    }

    #[test]
    fn limits_and_empty() {
        let long = (0..13).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ");
        let err = shap_exact(&ConstantProbe(0.1), &long, &mut CoalitionCache::new()).unwrap_err();
        assert!(err.to_string().contains("shap_sampled"));
        assert!(shap_exact(&ConstantProbe(0.1), "  ...", &mut CoalitionCache::new()).is_err());
        assert!(shap_sampled(&ConstantProbe(0.1), "a b c", 5, 1, &mut CoalitionCache::new()).is_err());
    }

    #[test]
    fn enumeration_stays_within_coalition_budget() {
        let p = crate::classifier::CountingProbe::new(additive(COEF));
        shap_exact(&p, "alpha beta gamma delta", &mut CoalitionCache::new()).unwrap();
        assert!(p.texts_seen() <= 16);
        assert_eq!(p.batches_seen(), 1);
    }

    #[test]
    fn sampled_is_seed_deterministic() {
        let p = FnProbe::new("nl", |t: &str| {
            let n = tokenize(t).len() as f64;
            (n * n / 30.0).min(1.0) * if t.contains("beta") { 0.9 } else { 0.5 }
        });
        let a = shap_sampled(&p, "alpha beta gamma delta", 40, 3, &mut CoalitionCache::new()).unwrap();
        let b = shap_sampled(&p, "alpha beta gamma delta", 40, 3, &mut CoalitionCache::new()).unwrap();
        assert_eq!(a, b);
    }
}
