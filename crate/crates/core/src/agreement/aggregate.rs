use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::metrics::AgreementScores;
use crate::{Error, Result};

/// Null value for cosine and Pearson: no similarity.
pub const SIMILARITY_THRESHOLD: f64 = 0.0;
/// Null value for the JS distance: no similarity.
pub const JSD_THRESHOLD: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    /// Sample standard deviation (K - 1 denominator).
    pub std: f64,
    pub k: usize,
    pub z: f64,
    /// Two-sided normal p-value at full precision.
    pub p: f64,
    pub threshold: f64,
}

impl MetricSummary {
    /// `"0.660 (0.277)"`
    pub fn mean_std(&self) -> String {
        format!("{:.3} ({:.3})", self.mean, self.std)
    }

    pub fn p_display(&self) -> String {
        format_p(self.p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub cosine: MetricSummary,
    pub pearson: MetricSummary,
    pub jsd: MetricSummary,
    /// Instances left out of the cosine summary because it was undefined.
    pub cosine_undefined: usize,
    /// Instances left out of the Pearson summary because it was undefined.
    pub pearson_undefined: usize,
}

/// `"<0.001"` below one in a thousand, otherwise three decimals.
pub fn format_p(p: f64) -> String {
    if p < 1e-3 {
        "<0.001".to_string()
    } else {
        format!("{p:.3}")
    }
}

/// Mean, sample std, `z = (mean - T) / (s / sqrt(K))` and `p = 2 P(Z > |z|)`.
pub fn summarize(values: &[f64], threshold: f64) -> Result<MetricSummary> {
    let k = values.len();
    if k < 2 {
        return Err(Error::Data(format!("need at least 2 scores for a standard deviation, got {k}")));
    }
    let mean = values.iter().sum::<f64>() / k as f64;
    let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64).sqrt();
    let diff = mean - threshold;
    let z = if std > 0.0 {
        diff / (std / (k as f64).sqrt())
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    };
    let p = if z.is_infinite() { 0.0 } else { erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0) };
    Ok(MetricSummary { mean, std, k, z, p, threshold })
}

/// Summaries over the defined values of each metric, in input order.
pub fn aggregate(scores: &[AgreementScores]) -> Result<AggregateReport> {
    let cos: Vec<f64> = scores.iter().filter_map(|s| s.cosine).collect();
    let pea: Vec<f64> = scores.iter().filter_map(|s| s.pearson).collect();
    let jsd: Vec<f64> = scores.iter().map(|s| s.jsd).collect();
    let named = |name: &str, r: Result<MetricSummary>| r.map_err(|e| Error::Data(format!("{name}: {e}")));
    Ok(AggregateReport {
        cosine: named("cosine", summarize(&cos, SIMILARITY_THRESHOLD))?,
        pearson: named("pearson", summarize(&pea, SIMILARITY_THRESHOLD))?,
        jsd: named("jsd", summarize(&jsd, JSD_THRESHOLD))?,
        cosine_undefined: scores.len() - cos.len(),
        pearson_undefined: scores.len() - pea.len(),
    })
}
