use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ShapExact,
    ShapSampled,
    Lime,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ShapExact => "shap_exact",
            Method::ShapSampled => "shap_sampled",
            Method::Lime => "lime",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-token importance for one prediction.
///
/// `values[j]` belongs to `tokens[j]`. For SHAP `base_value` is the probe
/// output on the empty sentence; for LIME it is the surrogate intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub text: String,
    pub tokens: Vec<String>,
    pub values: Vec<f64>,
    pub base_value: f64,
    pub method: Method,
    pub seed: u64,
    pub probe_id: String,
    /// Per-token standard error, sampled SHAP only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_errors: Option<Vec<f64>>,
}

impl Attribution {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.base_value + self.values.iter().sum::<f64>()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let a: Attribution = serde_json::from_str(s)?;
        if a.tokens.len() != a.values.len() {
            return Err(Error::Data(format!("{} tokens but {} values", a.tokens.len(), a.values.len())));
        }
        Ok(a)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    /// Signed horizontal bar chart, one bar per token in sentence order.
    pub fn to_svg(&self) -> String {
        let labels: Vec<String> = self.tokens.clone();
        crate::svg::signed_bar_chart(&format!("{} attribution: {}", self.method, self.text), &labels, &self.values)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedToken {
    pub token: String,
    pub position: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenRanking(pub Vec<RankedToken>);

impl TokenRanking {
    pub fn top(&self) -> Option<&RankedToken> {
        self.0.first()
    }

    pub fn positions(&self) -> Vec<usize> {
        self.0.iter().map(|r| r.position).collect()
    }

    /// Two-column table: token, value to three decimals.
    pub fn to_table(&self) -> String {
        let width = self.0.iter().map(|r| r.token.chars().count()).max().unwrap_or(5).max(5);
        let mut out = format!("{:<width$}  value\n", "token");
        for r in &self.0 {
            out.push_str(&format!("{:<width$}  {:.3}\n", r.token, r.value));
        }
        out
    }
}

/// `"housewife": 0.446, "woman": 0.159, ...`
impl fmt::Display for TokenRanking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "\"{}\": {:.3}", r.token, r.value)?;
        }
        Ok(())
    }
}

/// Tokens by descending value; equal values keep sentence order.
pub fn rank_tokens(attr: &Attribution) -> TokenRanking {
    let mut v: Vec<RankedToken> = attr
        .tokens
        .iter()
        .zip(&attr.values)
        .enumerate()
        .map(|(position, (t, &value))| RankedToken { token: t.clone(), position, value })
        .collect();
    v.sort_by(|a, b| b.value.total_cmp(&a.value).then(a.position.cmp(&b.position)));
    TokenRanking(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn attr(tokens: &[&str], values: &[f64]) -> Attribution {
        Attribution {
            text: tokens.join(" "),
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
            values: values.to_vec(),
            base_value: 0.0,
            method: Method::Lime,
            seed: 1,
            probe_id: "t".into(),
            std_errors: None,
        }
    }

    #[test]
    fn ranking_order_and_ties() {
        assert_eq!(rank_tokens(&attr(&["a", "b", "c"], &[0.1, 0.5, -0.2])).positions(), vec![1, 0, 2]);
        assert_eq!(rank_tokens(&attr(&["a", "b", "c"], &[0.3; 3])).positions(), vec![0, 1, 2]);
    }

    #[test]
    fn table_two_style_display() {
        let a = attr(&["Many", "Islam", "people", "are", "extremists"], &[-0.066, 0.114, 0.024, -0.053, 0.826]);
        let r = rank_tokens(&a);
        assert_eq!(
            r.to_string(),
            "\"extremists\": 0.826, \"Islam\": 0.114, \"people\": 0.024, \"are\": -0.053, \"Many\": -0.066"
        );
    }

    #[test]
    fn json_keys_and_roundtrip() {
        let a = attr(&["x", "y"], &[0.25, -0.5]);
        let json = a.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, ["base_value", "method", "probe_id", "seed", "text", "tokens", "values"]);
        assert_eq!(Attribution::from_json(&json).unwrap(), a);
    }
}
