use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::LabeledDataset;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StratifyOn {
    #[default]
    BinaryLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
    pub stratify_on: StratifyOn,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec { test_fraction: 0.2, seed: 42, stratify_on: StratifyOn::BinaryLabel }
    }
}

/// Per-class test counts: `round(size * fraction)` each, with the difference
/// to `round(total * fraction)` absorbed by the largest class.
pub fn stratum_test_counts(class_sizes: &[usize], fraction: f64) -> Vec<usize> {
    let mut counts: Vec<usize> = class_sizes.iter().map(|&n| (n as f64 * fraction).round() as usize).collect();
    let total: usize = class_sizes.iter().sum();
    let target = (total as f64 * fraction).round() as i64;
    let residual = target - counts.iter().sum::<usize>() as i64;
    if let Some(largest) = (0..class_sizes.len()).max_by_key(|&i| (class_sizes[i], std::cmp::Reverse(i))) {
        let adjusted = (counts[largest] as i64 + residual).clamp(0, class_sizes[largest] as i64);
        counts[largest] = adjusted as usize;
    }
    counts
}

/// Seeded stratified train/test partition. Both halves keep the original
/// instance order.
pub fn stratified_split(ds: &LabeledDataset, spec: &SplitSpec) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) {
        return Err(Error::InvalidInput(format!("test_fraction must lie in (0,1), got {}", spec.test_fraction)));
    }
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, inst) in ds.iter().enumerate() {
        by_class[usize::from(inst.binary_label())].push(i);
    }
    for (label, members) in by_class.iter().enumerate() {
        if members.len() < 2 {
            let name = if label == 1 { "stereotype" } else { "non-stereotype" };
            return Err(Error::Data(format!(
                "class {label} ({name}) has {} instance(s); stratified split needs at least 2",
                members.len()
            )));
        }
    }
    let sizes = [by_class[0].len(), by_class[1].len()];
    let counts = stratum_test_counts(&sizes, spec.test_fraction);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut in_test = vec![false; ds.len()];
    for (members, &k) in by_class.iter_mut().zip(&counts) {
        members.shuffle(&mut rng);
        for &i in &members[..k] {
            in_test[i] = true;
        }
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (inst, &t) in ds.iter().zip(&in_test) {
        if t { test.push(inst.clone()) } else { train.push(inst.clone()) }
    }
    Ok((
        LabeledDataset::new(format!("{}_train", ds.name), train),
        LabeledDataset::new(format!("{}_test", ds.name), test),
    ))
}
