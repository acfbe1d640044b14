//! Token-level attributions for any [`Probe`](crate::classifier::Probe).
//!
//! SHAP and LIME share one perturbation rule: absent tokens are deleted and
//! the survivors joined by single spaces. Both therefore produce vectors
//! aligned to the same tokens, which is what the agreement scores compare.

mod attribution;
mod lime;
mod mask;
mod shap;

pub use attribution::{rank_tokens, Attribution, Method, RankedToken, TokenRanking};
pub use lime::{lime_explain, lime_masks, proximity, LimeConfig, DEFAULT_KERNEL_WIDTH, DEFAULT_NUM_SAMPLES, DEFAULT_RIDGE_LAMBDA};
pub use mask::{coalition_value, CoalitionCache, MaskedInstance};
pub use shap::{shap_exact, shap_exact_limited, shap_sampled, shapley_weight, DEFAULT_EXACT_LIMIT};
