use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::probe::Probe;
use crate::corpus::LabeledDataset;
use crate::{Error, Result};

/// Rows are actual labels, columns predicted: `[[TN, FP], [FN, TP]]`.
pub type Confusion = [[u64; 2]; 2];

/// Minimum test samples for a text length to get its own F1 entry.
pub const MIN_LENGTH_SAMPLES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub macro_f1: f64,
    /// `[F1_0, F1_1]`.
    pub per_class_f1: [f64; 2],
    /// Macro F1 within each stereotype_type.
    pub per_group_f1: BTreeMap<String, f64>,
    /// Macro F1 per character length, for lengths with enough samples.
    pub per_length_f1: BTreeMap<usize, f64>,
    pub confusion: Confusion,
    pub threshold: f64,
    pub n: usize,
}

/// `2PR/(P+R)`, evaluated as `2TP/(2TP+FP+FN)` so integer counts round once.
/// Undefined ratios count as zero, which both forms agree on.
pub fn f1_score(tp: u64, fp: u64, fn_: u64) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if tp == 0 || denom == 0 { 0.0 } else { (2 * tp) as f64 / denom as f64 }
}

/// `[F1_0, F1_1]` from a confusion matrix.
pub fn class_f1(c: &Confusion) -> [f64; 2] {
    let (tn, fp, fn_, tp) = (c[0][0], c[0][1], c[1][0], c[1][1]);
    // class 0 treats "predicted 0" as the positive call
    [f1_score(tn, fn_, fp), f1_score(tp, fp, fn_)]
}

pub fn macro_f1(c: &Confusion) -> f64 {
    let [f0, f1] = class_f1(c);
    (f0 + f1) / 2.0
}

pub fn confusion(actual: &[u8], predicted: &[u8]) -> Confusion {
    let mut c = [[0u64; 2]; 2];
    for (&a, &p) in actual.iter().zip(predicted) {
        c[usize::from(a)][usize::from(p)] += 1;
    }
    c
}

/// Scores a probe on labelled data at the given threshold (`p >= t` is 1).
pub fn evaluate(probe: &dyn Probe, test: &LabeledDataset, threshold: f64) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::Data("evaluation set is empty".into()));
    }
    let probs = probe.predict_batch(&test.texts())?;
    let predicted: Vec<u8> = probs.iter().map(|&p| u8::from(p >= threshold)).collect();
    Ok(report_from_predictions(test, &predicted, threshold))
}

pub fn report_from_predictions(test: &LabeledDataset, predicted: &[u8], threshold: f64) -> EvalReport {
    let actual = test.binary_labels();
    let c = confusion(&actual, predicted);

    let mut by_group: BTreeMap<String, Confusion> = BTreeMap::new();
    let mut by_length: BTreeMap<usize, (usize, Confusion)> = BTreeMap::new();
    for ((inst, &a), &p) in test.iter().zip(&actual).zip(predicted) {
        by_group.entry(inst.stereotype_type.to_string()).or_default()[usize::from(a)][usize::from(p)] += 1;
        let e = by_length.entry(inst.char_len()).or_default();
        e.0 += 1;
        e.1[usize::from(a)][usize::from(p)] += 1;
    }
    EvalReport {
        macro_f1: macro_f1(&c),
        per_class_f1: class_f1(&c),
        per_group_f1: by_group.into_iter().map(|(g, c)| (g, macro_f1(&c))).collect(),
        per_length_f1: by_length
            .into_iter()
            .filter(|(_, (n, _))| *n >= MIN_LENGTH_SAMPLES)
            .map(|(l, (_, c))| (l, macro_f1(&c)))
            .collect(),
        confusion: c,
        threshold,
        n: test.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::FnProbe;
    use crate::corpus::{Category, StereotypeType, TextInstance};

    #[test]
    fn hand_computed_confusion() {
        // TP=40 FP=10 FN=10 TN=40: P = R = 0.8 for both classes
        let c = [[40, 10], [10, 40]];
        for f in class_f1(&c) {
            assert_eq!(f, 0.8);
        }
        assert_eq!(macro_f1(&c), 0.8);
    }

    #[test]
    fn zero_over_zero_is_zero() {
        assert_eq!(f1_score(0, 0, 0), 0.0);
        assert_eq!(f1_score(0, 5, 0), 0.0);
        // all-negative world, all predicted negative: F1_0 = 1, F1_1 = 0
        assert_eq!(macro_f1(&[[7, 0], [0, 0]]), 0.5);
    }

    #[test]
    fn threshold_is_inclusive_and_monotone() {
        let ds = LabeledDataset::new(
            "t",
            (0..20)
                .map(|i| TextInstance::new(StereotypeType::Gender, format!("{i}"), if i % 2 == 0 { Category::Stereotype } else { Category::Neutral }, "s"))
                .collect(),
        );
        let probe = FnProbe::new("p", |t: &str| t.parse::<f64>().unwrap() / 19.0);
        let mut last = u64::MAX;
        for k in 0..=20 {
            let r = evaluate(&probe, &ds, k as f64 / 20.0).unwrap();
            let predicted_pos = r.confusion[0][1] + r.confusion[1][1];
            assert!(predicted_pos <= last);
            last = predicted_pos;
            assert_eq!(r.confusion.iter().flatten().sum::<u64>(), 20);
            assert_eq!(r.macro_f1, (r.per_class_f1[0] + r.per_class_f1[1]) / 2.0);
        }
    }

    #[test]
    fn length_breakdown_needs_ten_samples() {
        let mut v = Vec::new();
        for i in 0..12 {
            v.push(TextInstance::new(StereotypeType::Race, "aaaa", if i % 2 == 0 { Category::Stereotype } else { Category::Neutral }, "s"));
        }
        for _ in 0..3 {
            v.push(TextInstance::new(StereotypeType::Race, "bbbbbbb", Category::Neutral, "s"));
        }
        let ds = LabeledDataset::new("l", v);
        let r = report_from_predictions(&ds, &ds.binary_labels(), 0.5);
        assert_eq!(r.per_length_f1.keys().copied().collect::<Vec<_>>(), vec![4]);
        assert_eq!(r.per_length_f1[&4], 1.0);
        assert_eq!(r.macro_f1, 1.0);
    }
}
