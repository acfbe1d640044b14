//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stereolens::classifier::FnProbe;

pub fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn bundled(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

/// A sentence of `n` distinct single-word tokens.
pub fn token_sentence(n: usize) -> (String, Vec<String>) {
    let words: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
    (words.join(" "), words)
}

/// Probe answering from a random table indexed by which tokens survive.
/// Returns the probe and the table keyed by bitmask.
pub fn lookup_probe(words: &[String], seed: u64) -> (FnProbe<impl Fn(&str) -> f64 + Send + Sync>, Vec<f64>) {
    let n = words.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let table: Vec<f64> = (0..1usize << n).map(|_| rng.random::<f64>()).collect();
    let index: HashMap<String, usize> = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
    let t = table.clone();
    let probe = FnProbe::new(format!("lookup-{seed}"), move |text: &str| {
        let mask = text.split_whitespace().fold(0usize, |m, w| m | 1 << index[w]);
        t[mask]
    });
    (probe, table)
}

/// Shapley values by averaging marginal contributions over all n! orderings.
pub fn shapley_by_permutations(n: usize, v: impl Fn(usize) -> f64) -> Vec<f64> {
    fn permute(k: usize, order: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        if k == order.len() {
            visit(order);
            return;
        }
        for i in k..order.len() {
            order.swap(k, i);
            permute(k + 1, order, visit);
            order.swap(k, i);
        }
    }
    let mut phi = vec![0.0; n];
    let mut count = 0usize;
    let mut order: Vec<usize> = (0..n).collect();
    permute(0, &mut order, &mut |ord| {
        let mut mask = 0usize;
        for &j in ord {
            let before = v(mask);
            mask |= 1 << j;
            phi[j] += v(mask) - before;
        }
        count += 1;
    });
    phi.iter().map(|p| p / count as f64).collect()
}

/// Gaussian elimination with partial pivoting on a dense square system.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            let (top, rest) = a.split_at_mut(r);
            for (x, p) in rest[0][col..].iter_mut().zip(&top[col][col..]) {
                *x -= f * p;
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Weighted ridge through the normal equations, intercept unpenalized.
/// Returns `[b0, b1..bn]`.
pub fn ridge_normal_equations(x: &[Vec<bool>], y: &[f64], w: &[f64], lambda: f64) -> Vec<f64> {
    let p = x[0].len() + 1;
    let row = |m: &Vec<bool>| std::iter::once(1.0).chain(m.iter().map(|&b| f64::from(u8::from(b)))).collect::<Vec<_>>();
    let mut a = vec![vec![0.0; p]; p];
    let mut rhs = vec![0.0; p];
    for ((m, &yk), &wk) in x.iter().zip(y).zip(w) {
        let r = row(m);
        for i in 0..p {
            rhs[i] += wk * r[i] * yk;
            for j in 0..p {
                a[i][j] += wk * r[i] * r[j];
            }
        }
    }
    for (i, ai) in a.iter_mut().enumerate().skip(1) {
        ai[i] += lambda;
    }
    gauss_solve(a, rhs)
}

/// Cosine, Pearson and JS distance computed the long way, for cross-checks.
pub fn naive_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

pub fn naive_pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let ca: Vec<f64> = a.iter().map(|x| x - ma).collect();
    let cb: Vec<f64> = b.iter().map(|x| x - mb).collect();
    naive_cosine(&ca, &cb)
}

/// sqrt of the base-2 JS divergence after shifting each vector to be non-negative.
pub fn naive_js_distance(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| {
        let m = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let s: Vec<f64> = v.iter().map(|x| x + m.abs()).collect();
        let t: f64 = s.iter().sum();
        s.into_iter().map(|x| x / t).collect::<Vec<_>>()
    };
    let (p, q) = (norm(a), norm(b));
    let kl = |x: &[f64], m: &[f64]| x.iter().zip(m).filter(|(xi, _)| **xi > 0.0).map(|(xi, mi)| xi * (xi / mi).log2()).sum::<f64>();
    let m: Vec<f64> = p.iter().zip(&q).map(|(x, y)| 0.5 * (x + y)).collect();
    (0.5 * kl(&p, &m) + 0.5 * kl(&q, &m)).sqrt()
}

/// Welford running mean and sample variance.
pub fn streaming_mean_std(xs: &[f64]) -> (f64, f64) {
    let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
    for &x in xs {
        n += 1.0;
        let d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    (mean, (m2 / (n - 1.0)).sqrt())
}

pub struct GoldenPair {
    pub phi: Vec<f64>,
    pub beta: Vec<f64>,
    pub cosine: Option<f64>,
    pub pearson: Option<f64>,
    pub jsd: f64,
}

/// Base-2 JS distance of two probability vectors given directly.
fn jsd_of(p: &[f64], q: &[f64]) -> f64 {
    let mut js = 0.0;
    for (a, b) in p.iter().zip(q) {
        let m = (a + b) / 2.0;
        if *a > 0.0 {
            js += 0.5 * a * (a / m).log2();
        }
        if *b > 0.0 {
            js += 0.5 * b * (b / m).log2();
        }
    }
    js.sqrt()
}

/// Twelve vector pairs with values worked out by hand. Normalized
/// distributions after the shift are written out explicitly.
pub fn golden_pairs() -> Vec<GoldenPair> {
    let g = |phi: &[f64], beta: &[f64], cosine: Option<f64>, pearson: Option<f64>, jsd: f64| GoldenPair {
        phi: phi.to_vec(),
        beta: beta.to_vec(),
        cosine,
        pearson,
        jsd,
    };
    let third = 1.0 / 3.0;
    vec![
        g(
            &[1.0, 2.0, 3.0],
            &[1.0, 2.0, 4.0],
            Some(17.0 / 294f64.sqrt()),
            Some(3.0 / (28.0f64 / 3.0).sqrt()),
            jsd_of(&[2.0 / 9.0, 3.0 / 9.0, 4.0 / 9.0], &[0.2, 0.3, 0.5]),
        ),
        g(&[0.2, 0.5, 0.3], &[0.2, 0.5, 0.3], Some(1.0), Some(1.0), 0.0),
        g(&[1.0, -1.0], &[-1.0, 1.0], Some(-1.0), Some(-1.0), 1.0),
        g(&[1.0, 0.0], &[0.0, 1.0], Some(0.0), Some(-1.0), 1.0),
        g(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0], Some(1.0), Some(1.0), 0.0),
        g(&[0.0, 0.0, 0.0], &[1.0, 2.0, 3.0], None, None, jsd_of(&[third; 3], &[2.0 / 9.0, 3.0 / 9.0, 4.0 / 9.0])),
        g(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0], Some((6.0f64 / 7.0).sqrt()), None, jsd_of(&[third; 3], &[2.0 / 9.0, 3.0 / 9.0, 4.0 / 9.0])),
        g(
            &[3.0, -1.0, 2.0, 0.0],
            &[1.0, 1.0, -1.0, 0.0],
            Some(0.0),
            Some(-1.0 / 27.5f64.sqrt()),
            jsd_of(&[0.5, 0.0, 0.375, 0.125], &[0.4, 0.4, 0.0, 0.2]),
        ),
        g(&[1.0, 1.0, 0.0], &[1.0, 0.0, 1.0], Some(0.5), Some(-0.5), 0.5f64.sqrt()),
        g(&[-1.0, -2.0, -3.0], &[-3.0, -2.0, -1.0], Some(10.0 / 14.0), Some(-1.0), (2.0f64 / 3.0).sqrt()),
        g(
            &[0.6, 0.4],
            &[0.4, 0.6],
            Some(12.0 / 13.0),
            Some(-1.0),
            // Shifted by 0.4 first: [5/9, 4/9] against [4/9, 5/9].
            (5.0 / 9.0 * (10.0f64 / 9.0).log2() + 4.0 / 9.0 * (8.0f64 / 9.0).log2()).sqrt(),
        ),
        g(
            &[1.0, 2.0, 3.0, 4.0, 5.0],
            &[5.0, 4.0, 3.0, 2.0, 1.0],
            Some(35.0 / 55.0),
            Some(-1.0),
            jsd_of(&[0.1, 0.15, 0.2, 0.25, 0.3], &[0.3, 0.25, 0.2, 0.15, 0.1]),
        ),
    ]
}

/// The LR probe shipped in `data/lr_probe.json`.
pub fn bundled_probe() -> stereolens::classifier::TfidfLogisticClassifier {
    stereolens::classifier::TfidfLogisticClassifier::load(&bundled("lr_probe.json")).expect("bundled probe loads")
}

pub fn replay_provider() -> stereolens::audit::ReplayProvider {
    stereolens::audit::ReplayProvider::load(&fixture("replay_35x30.jsonl"), "replay-llm").expect("replay fixture loads")
}
