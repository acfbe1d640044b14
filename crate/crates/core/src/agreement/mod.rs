//! SHAP/LIME agreement: per-instance similarity scores and their
//! significance across a sample.

mod aggregate;
mod metrics;

pub use aggregate::{aggregate, format_p, summarize, AggregateReport, MetricSummary, JSD_THRESHOLD, SIMILARITY_THRESHOLD};
pub use metrics::{
    cosine_similarity, js_divergence, pearson_correlation, score_instance, score_vectors, shift_normalize,
    write_scores_csv, AgreementScores, Flag, JsdResult,
};
