//! Stereotype detection with token-level explanations.
//!
//! The crate bundles a TF-IDF + logistic-regression text classifier, a
//! black-box [`Probe`](classifier::Probe) abstraction over local and served
//! models, exact and sampled Shapley attributions, LIME surrogates, an
//! agreement score between the two attribution methods, and a harness that
//! audits LLM continuations for stereotype prevalence.

pub mod agreement;
pub mod audit;
pub mod classifier;
pub mod cli;
pub mod corpus;
mod error;
pub mod explain;
pub mod protocol;
pub mod svg;

pub use error::{Error, ProbeError, ProviderError, Result, RowError};

/// Decision threshold used wherever a probability becomes a hard label.
pub const DECISION_THRESHOLD: f64 = 0.5;

/// Hard label for a probability at the artifact-wide threshold.
pub fn hard_label(probability: f64) -> u8 {
    u8::from(probability >= DECISION_THRESHOLD)
}
