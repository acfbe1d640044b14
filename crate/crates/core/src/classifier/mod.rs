//! Bundled TF-IDF + logistic-regression classifier, the [`Probe`] interface
//! over local and served models, and evaluation math.

mod emissions;
mod eval;
mod logistic;
mod model;
mod probe;
mod remote;
mod tfidf;
pub mod tokenize;

pub use emissions::estimate_emissions;
pub use eval::{class_f1, confusion, evaluate, f1_score, macro_f1, report_from_predictions, Confusion, EvalReport, MIN_LENGTH_SAMPLES};
pub use logistic::{dense_rows, sigmoid, train_logistic, train_logistic_traced, LogisticModel, Penalty, TrainConfig, TrainTrace};
pub use model::{TfidfLogisticClassifier, MODEL_FORMAT_VERSION};
pub use probe::{ConstantProbe, CountingProbe, FnProbe, Probe, ProbeKind};
pub use remote::{remote_probe, RemoteConfig, RemoteProbe};
pub use tfidf::{SparseRow, TfidfVectorizer};
pub use tokenize::{feature_tokens, tokenize, Token};
