//! Dataset schema, loading, filtering, splitting and descriptive statistics.

mod filter;
mod instance;
mod io;
mod kde;
mod prompts;
mod report;
mod split;
pub mod synthetic;

pub use filter::{
    duplicate_key, filter_seegull, filter_winoqueer, load_seegull_csv, strict_majority, write_removals, FilterConfig,
    RemovalReason, SeegullOutcome, SeegullRow, WinoQueerOutcome, DEFAULT_COUNTERFACTUAL_TERMS, DEFAULT_NAME_LEXICON,
    DEFAULT_OVERT_NEGATIVITY,
};
pub use instance::{Category, LabeledDataset, StereotypeType, TextInstance};
pub use io::{load_dataset, save_dataset_csv, write_dataset_csv, DatasetFormat, CSV_HEADER};
pub use kde::{gaussian_kde, kde_text_length, linear_grid, silverman_bandwidth, Bandwidth};
pub use prompts::{render_augmentation_prompt, AugmentationTemplate};
pub use report::{distribution_report, DistributionReport, Grouping, LevelCount};
pub use split::{stratified_split, stratum_test_counts, SplitSpec, StratifyOn};
