use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::logistic::{train_logistic_traced, LogisticModel, TrainConfig, TrainTrace};
use super::probe::{Probe, ProbeKind};
use super::tfidf::TfidfVectorizer;
use crate::corpus::LabeledDataset;
use crate::{Error, ProbeError, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// TF-IDF features feeding a logistic model; usable directly as a [`Probe`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfLogisticClassifier {
    pub format_version: u32,
    pub name: String,
    pub vectorizer: TfidfVectorizer,
    pub model: LogisticModel,
    pub train_config: TrainConfig,
    pub train_size: usize,
}

impl TfidfLogisticClassifier {
    pub fn train(train: &LabeledDataset, cfg: &TrainConfig) -> Result<Self> {
        Self::train_traced(train, cfg).map(|(c, _)| c)
    }

    pub fn train_traced(train: &LabeledDataset, cfg: &TrainConfig) -> Result<(Self, TrainTrace)> {
        train.require_non_empty()?;
        let texts = train.texts();
        let vectorizer = TfidfVectorizer::fit(&texts)?;
        let rows = vectorizer.transform_all(&texts);
        let (model, trace) = train_logistic_traced(&rows, vectorizer.dim(), &train.binary_labels(), cfg)?;
        let name = format!("lr-tfidf-{}-c{}", cfg.penalty, cfg.strength_c);
        Ok((
            TfidfLogisticClassifier {
                format_version: MODEL_FORMAT_VERSION,
                name,
                vectorizer,
                model,
                train_config: *cfg,
                train_size: train.len(),
            },
            trace,
        ))
    }

    pub fn probability(&self, text: &str) -> f64 {
        self.model.predict_proba(&self.vectorizer.transform(text))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(s)?;
        match value.get("format_version").and_then(serde_json::Value::as_u64) {
            Some(v) if v == u64::from(MODEL_FORMAT_VERSION) => {}
            Some(v) => return Err(Error::Data(format!("unsupported model format_version {v}"))),
            None => return Err(Error::Data("model file lacks format_version".into())),
        }
        let model: Self = serde_json::from_value(value)?;
        if model.model.weights.len() != model.vectorizer.dim() {
            return Err(Error::Data(format!(
                "model has {} weights for a vocabulary of {}",
                model.model.weights.len(),
                model.vectorizer.dim()
            )));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut s = self.to_json()?;
        s.push('\n');
        fs::write(path, s).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

impl Probe for TfidfLogisticClassifier {
    fn id(&self) -> String {
        self.name.clone()
    }

    fn kind(&self) -> ProbeKind {
        ProbeKind::LocalLr
    }

    fn predict_batch(&self, texts: &[String]) -> Result<Vec<f64>, ProbeError> {
        Ok(texts.iter().map(|t| self.probability(t)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::synthetic::synthetic_corpus;

    #[test]
    fn json_roundtrip_and_version_gate() {
        let ds = synthetic_corpus(90, 1);
        let clf = TfidfLogisticClassifier::train(&ds, &TrainConfig::default()).unwrap();
        let back = TfidfLogisticClassifier::from_json(&clf.to_json().unwrap()).unwrap();
        assert_eq!(back, clf);
        let bumped = clf.to_json().unwrap().replacen("\"format_version\": 1", "\"format_version\": 2", 1);
        assert!(TfidfLogisticClassifier::from_json(&bumped).unwrap_err().to_string().contains("format_version 2"));
    }

    #[test]
    fn batch_matches_single() {
        let ds = synthetic_corpus(90, 2);
        let clf = TfidfLogisticClassifier::train(&ds, &TrainConfig::default()).unwrap();
        let texts = ds.texts();
        let batch = clf.predict_batch(&texts).unwrap();
        for (t, p) in texts.iter().zip(&batch) {
            assert_eq!(clf.predict_proba(t).unwrap(), *p);
            assert!((0.0..=1.0).contains(p));
        }
    }
}
