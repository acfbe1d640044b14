use serde::{Deserialize, Serialize};

use super::LabeledDataset;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    Fixed(f64),
    /// `0.9 * min(sd, IQR/1.34) * n^(-1/5)`.
    Silverman,
}

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

fn gaussian(u: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * u * u).exp()
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Silverman's rule of thumb. Degenerate samples (one point, or all equal)
/// fall back to a bandwidth of 1.
pub fn silverman_bandwidth(samples: &[f64]) -> f64 {
    let n = samples.len();
    if n < 2 {
        return 1.0;
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let sd = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr / 1.34),
        (true, false) => sd,
        (false, true) => iqr / 1.34,
        (false, false) => return 1.0,
    };
    0.9 * spread * (n as f64).powf(-0.2)
}

/// Gaussian kernel density of `samples` evaluated at each grid point.
pub fn gaussian_kde(samples: &[f64], bandwidth: Bandwidth, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if samples.is_empty() {
        return Err(Error::Data("kernel density needs at least one sample".into()));
    }
    let h = match bandwidth {
        Bandwidth::Fixed(h) if h > 0.0 && h.is_finite() => h,
        Bandwidth::Fixed(h) => return Err(Error::InvalidInput(format!("bandwidth must be positive, got {h}"))),
        Bandwidth::Silverman => silverman_bandwidth(samples),
    };
    let norm = 1.0 / (samples.len() as f64 * h);
    Ok(grid
        .iter()
        .map(|&l| (l, norm * samples.iter().map(|&x| gaussian((l - x) / h)).sum::<f64>()))
        .collect())
}

/// Density of text length (Unicode scalar count) over the dataset.
pub fn kde_text_length(ds: &LabeledDataset, bandwidth: Bandwidth, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    ds.require_non_empty()?;
    let lengths: Vec<f64> = ds.iter().map(|i| i.char_len() as f64).collect();
    gaussian_kde(&lengths, bandwidth, grid)
}

/// Evenly spaced grid from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Category, StereotypeType, TextInstance};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn single_point_peak() {
        let ds = LabeledDataset::new("k", vec![TextInstance::new(StereotypeType::Race, "abcdefghij", Category::Neutral, "s")]);
        let out = kde_text_length(&ds, Bandwidth::Fixed(1.0), &[10.0]).unwrap();
        assert!((out[0].1 - 0.398_942_280_401_432_7).abs() < 1e-12);
        assert!((out[0].1 - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn empty_and_bad_bandwidth_rejected() {
        assert!(kde_text_length(&LabeledDataset::default(), Bandwidth::Silverman, &[1.0]).is_err());
        assert!(gaussian_kde(&[1.0], Bandwidth::Fixed(0.0), &[1.0]).is_err());
    }

    // Trapezoid quadrature over a wide grid integrates to one.
    #[test]
    fn integrates_to_one() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..100).map(|_| rng.random_range(5..200) as f64).collect();
        let grid = linear_grid(-200.0, 400.0, 6001);
        let dens = gaussian_kde(&xs, Bandwidth::Silverman, &grid).unwrap();
        let integral: f64 = dens.windows(2).map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0)).sum();
        assert!((0.99..=1.01).contains(&integral), "{integral}");
    }

    #[test]
    fn silverman_known_value() {
        // sd of 1..=5 = sqrt(2.5); IQR = 2 -> 2/1.34 < sqrt(2.5)
        let h = silverman_bandwidth(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!((h - 0.9 * (2.0 / 1.34) * 5f64.powf(-0.2)).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn nonnegative_permutation_invariant_and_scaling(xs in proptest::collection::vec(1.0f64..300.0, 1..40), h in 0.5f64..20.0, rot in 0usize..40) {
            let grid = linear_grid(0.0, 320.0, 33);
            let a = gaussian_kde(&xs, Bandwidth::Fixed(h), &grid).unwrap();
            let mut ys = xs.clone();
            let r = rot % ys.len();
            ys.rotate_left(r);
            ys.reverse();
            let b = gaussian_kde(&ys, Bandwidth::Fixed(h), &grid).unwrap();
            for ((_, da), (_, db)) in a.iter().zip(&b) {
                prop_assert!(*da >= 0.0);
                prop_assert!((da - db).abs() <= 1e-12 * da.abs().max(1e-300) + 1e-15);
            }
            let doubled: Vec<f64> = xs.iter().map(|x| 2.0 * x).collect();
            let grid2: Vec<f64> = grid.iter().map(|g| 2.0 * g).collect();
            let c = gaussian_kde(&doubled, Bandwidth::Fixed(2.0 * h), &grid2).unwrap();
            for ((_, da), (_, dc)) in a.iter().zip(&c) {
                prop_assert!((dc - da / 2.0).abs() <= 1e-12 * da.abs() + 1e-15);
            }
        }
    }
}
