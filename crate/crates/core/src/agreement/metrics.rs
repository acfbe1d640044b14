use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::explain::Attribution;
use crate::{Error, Result};

/// Conditions that made a metric undefined or forced a substitution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    CosineUndefined,
    PearsonUndefined,
    /// The SHAP vector shifted to all zeros; uniform used instead.
    JsdUniformShap,
    /// Same for the LIME vector.
    JsdUniformLime,
}

impl Flag {
    pub fn as_str(self) -> &'static str {
        match self {
            Flag::CosineUndefined => "cosine_undefined",
            Flag::PearsonUndefined => "pearson_undefined",
            Flag::JsdUniformShap => "jsd_uniform_shap",
            Flag::JsdUniformLime => "jsd_uniform_lime",
        }
    }
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementScores {
    pub cosine: Option<f64>,
    pub pearson: Option<f64>,
    pub jsd: f64,
    pub flags: Vec<Flag>,
}

/// `sum(phi*beta) / (|phi| |beta|)`; `None` when either norm is zero.
pub fn cosine_similarity(phi: &[f64], beta: &[f64]) -> Option<f64> {
    assert_eq!(phi.len(), beta.len(), "vectors must have equal length");
    let dot: f64 = phi.iter().zip(beta).map(|(a, b)| a * b).sum();
    let na = phi.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nb = beta.iter().map(|b| b * b).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Pearson correlation from mean-centred sums; `None` below two entries or
/// when either vector is constant.
pub fn pearson_correlation(phi: &[f64], beta: &[f64]) -> Option<f64> {
    assert_eq!(phi.len(), beta.len(), "vectors must have equal length");
    let n = phi.len();
    if n < 2 {
        return None;
    }
    let ma = phi.iter().sum::<f64>() / n as f64;
    let mb = beta.iter().sum::<f64>() / n as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (a, b) in phi.iter().zip(beta) {
        let (da, db) = (a - ma, b - mb);
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// `(v_j + |min v|) / sum_k (v_k + |min v|)`. Returns `None` when that sum
/// is zero, i.e. every entry is equal and non-positive.
pub fn shift_normalize(v: &[f64]) -> Option<Vec<f64>> {
    let shift = v.iter().cloned().fold(f64::INFINITY, f64::min).abs();
    let shifted: Vec<f64> = v.iter().map(|x| x + shift).collect();
    let total: f64 = shifted.iter().sum();
    if total == 0.0 {
        return None;
    }
    Some(shifted.into_iter().map(|x| x / total).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JsdResult {
    pub value: f64,
    pub uniform_phi: bool,
    pub uniform_beta: bool,
}

/// Square root of the base-2 Jensen-Shannon divergence between the
/// shift-normalized vectors, in [0, 1].
pub fn js_divergence(phi: &[f64], beta: &[f64]) -> JsdResult {
    assert_eq!(phi.len(), beta.len(), "vectors must have equal length");
    assert!(!phi.is_empty(), "vectors must be non-empty");
    let uniform = vec![1.0 / phi.len() as f64; phi.len()];
    let p = shift_normalize(phi);
    let q = shift_normalize(beta);
    let (uniform_phi, uniform_beta) = (p.is_none(), q.is_none());
    let p = p.unwrap_or_else(|| uniform.clone());
    let q = q.unwrap_or(uniform);

    let kl_to_mid = |x: &[f64], y: &[f64]| -> f64 {
        x.iter()
            .zip(y)
            .filter(|(&a, _)| a > 0.0)
            .map(|(&a, &b)| a * (a / ((a + b) / 2.0)).log2())
            .sum()
    };
    let js = 0.5 * (kl_to_mid(&p, &q) + kl_to_mid(&q, &p));
    JsdResult { value: js.max(0.0).sqrt().min(1.0), uniform_phi, uniform_beta }
}

pub fn score_vectors(phi: &[f64], beta: &[f64]) -> Result<AgreementScores> {
    if phi.len() != beta.len() {
        return Err(Error::InvalidInput(format!(
            "attribution lengths differ ({} vs {}); the explainers disagree on tokenization",
            phi.len(),
            beta.len()
        )));
    }
    if phi.is_empty() {
        return Err(Error::InvalidInput("cannot score empty attributions".into()));
    }
    if phi.iter().chain(beta).any(|v| !v.is_finite()) {
        return Err(Error::Data("attribution contains a non-finite value".into()));
    }
    let mut flags = Vec::new();
    let cosine = cosine_similarity(phi, beta);
    if cosine.is_none() {
        flags.push(Flag::CosineUndefined);
    }
    let pearson = pearson_correlation(phi, beta);
    if pearson.is_none() {
        flags.push(Flag::PearsonUndefined);
    }
    let jsd = js_divergence(phi, beta);
    if jsd.uniform_phi {
        flags.push(Flag::JsdUniformShap);
    }
    if jsd.uniform_beta {
        flags.push(Flag::JsdUniformLime);
    }
    Ok(AgreementScores { cosine, pearson, jsd: jsd.value, flags })
}

/// Scores a SHAP attribution against a LIME attribution of the same text.
pub fn score_instance(shap: &Attribution, lime: &Attribution) -> Result<AgreementScores> {
    if shap.tokens != lime.tokens {
        return Err(Error::InvalidInput(format!(
            "token sequences differ ({} vs {} tokens); the explainers disagree on tokenization",
            shap.tokens.len(),
            lime.tokens.len()
        )));
    }
    score_vectors(&shap.values, &lime.values)
}

/// Columns `text_id,cosine,pearson,jsd,flags`; undefined values are empty
/// and flags are `;`-separated.
pub fn write_scores_csv<W: Write>(scores: &[(String, AgreementScores)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["text_id", "cosine", "pearson", "jsd", "flags"])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for (id, s) in scores {
        let flags: Vec<&str> = s.flags.iter().map(|f| f.as_str()).collect();
        w.write_record([id.clone(), opt(s.cosine), opt(s.pearson), s.jsd.to_string(), flags.join(";")])?;
    }
    w.flush().map_err(|e| Error::io("<scores>", e))?;
    Ok(())
}
