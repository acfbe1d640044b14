use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::tokenize::feature_tokens;
use crate::{Error, Result};

/// Sparse feature row as `(column, value)` pairs in ascending column order.
pub type SparseRow = Vec<(usize, f64)>;

/// Smoothed TF-IDF over lowercased tokens:
/// `idf = ln((1 + N) / (1 + df)) + 1`, rows L2-normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VectorizerParts", into = "VectorizerParts")]
pub struct TfidfVectorizer {
    vocabulary: Vec<String>,
    idf: Vec<f64>,
    doc_count: usize,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VectorizerParts {
    vocabulary: Vec<String>,
    idf: Vec<f64>,
    doc_count: usize,
}

impl From<VectorizerParts> for TfidfVectorizer {
    fn from(p: VectorizerParts) -> Self {
        let index = p.vocabulary.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        TfidfVectorizer { vocabulary: p.vocabulary, idf: p.idf, doc_count: p.doc_count, index }
    }
}

impl From<TfidfVectorizer> for VectorizerParts {
    fn from(v: TfidfVectorizer) -> Self {
        VectorizerParts { vocabulary: v.vocabulary, idf: v.idf, doc_count: v.doc_count }
    }
}

impl TfidfVectorizer {
    /// Learns the vocabulary (sorted) and document frequencies.
    pub fn fit<S: AsRef<str>>(documents: &[S]) -> Result<Self> {
        if documents.is_empty() {
            return Err(Error::Data("cannot fit TF-IDF on an empty corpus".into()));
        }
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for doc in documents {
            let mut tokens = feature_tokens(doc.as_ref());
            tokens.sort_unstable();
            tokens.dedup();
            for t in tokens {
                *df.entry(t).or_default() += 1;
            }
        }
        if df.is_empty() {
            return Err(Error::Data("empty vocabulary: no document contains a token".into()));
        }
        let n = documents.len() as f64;
        let (vocabulary, idf): (Vec<String>, Vec<f64>) =
            df.into_iter().map(|(t, d)| { let idf = ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0; (t, idf) }).unzip();
        Ok(VectorizerParts { vocabulary, idf, doc_count: documents.len() }.into())
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn idf_of(&self, token: &str) -> Option<f64> {
        self.index.get(token).map(|&i| self.idf[i])
    }

    pub fn doc_count(&self) -> usize {
        self.doc_count
    }

    pub fn dim(&self) -> usize {
        self.vocabulary.len()
    }

    /// Out-of-vocabulary tokens are ignored; a text with none in vocabulary
    /// maps to the empty row.
    pub fn transform(&self, text: &str) -> SparseRow {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for t in feature_tokens(text) {
            if let Some(&j) = self.index.get(&t) {
                *counts.entry(j).or_default() += 1.0;
            }
        }
        let mut row: SparseRow = counts.into_iter().map(|(j, tf)| (j, tf * self.idf[j])).collect();
        let norm = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, v) in &mut row {
                *v /= norm;
            }
        }
        row
    }

    pub fn transform_all<S: AsRef<str>>(&self, texts: &[S]) -> Vec<SparseRow> {
        texts.iter().map(|t| self.transform(t.as_ref())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_document_idf_is_one() {
        let v = TfidfVectorizer::fit(&["the cat sat"]).unwrap();
        assert!(v.idf().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn idf_values() {
        let v = TfidfVectorizer::fit(&["common rare", "common", "common"]).unwrap();
        assert_eq!(v.idf_of("common"), Some(1.0));
        // ln(4/2) + 1
        assert!((v.idf_of("rare").unwrap() - (1.0 + std::f64::consts::LN_2)).abs() < 1e-15);
        assert!((v.idf_of("rare").unwrap() - 1.693_147_180_559_945).abs() < 1e-12);
    }

    #[test]
    fn empty_vocabulary_rejected() {
        assert!(TfidfVectorizer::fit(&["", "  ..."]).is_err());
        assert!(TfidfVectorizer::fit::<&str>(&[]).is_err());
    }

    #[test]
    fn unseen_tokens_ignored_and_case_folded() {
        let v = TfidfVectorizer::fit(&["Alpha beta", "beta gamma"]).unwrap();
        assert!(v.transform("delta epsilon").is_empty());
        assert_eq!(v.transform("ALPHA"), v.transform("alpha"));
    }

    #[test]
    fn serde_rebuilds_index() {
        let v = TfidfVectorizer::fit(&["one two", "two three"]).unwrap();
        let back: TfidfVectorizer = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
        assert_eq!(back, v);
        assert_eq!(back.transform("three"), v.transform("three"));
    }

    proptest! {
        #[test]
        fn rows_unit_norm_or_empty(docs in proptest::collection::vec("[a-e ]{0,20}", 1..8), probe in "[a-g ]{0,30}") {
            if let Ok(v) = TfidfVectorizer::fit(&docs) {
                prop_assert!(v.idf().iter().all(|&x| x >= 1.0));
                let row = v.transform(&probe);
                let norm: f64 = row.iter().map(|(_, x)| x * x).sum::<f64>().sqrt();
                prop_assert!(row.is_empty() || (norm - 1.0).abs() < 1e-9);
            }
        }
    }
}
