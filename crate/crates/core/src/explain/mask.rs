use std::collections::HashMap;

use crate::classifier::tokenize::{tokenize, Token};
use crate::classifier::Probe;
use crate::{Error, ProbeError, Result};

/// A sentence split into maskable token occurrences.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedInstance {
    pub text: String,
    pub tokens: Vec<Token>,
}

impl MaskedInstance {
    pub fn new(text: &str) -> Self {
        MaskedInstance { text: text.to_string(), tokens: tokenize(text) }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn display_tokens(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.text.clone()).collect()
    }

    /// Present tokens joined by single spaces. `mask` must match the token count.
    pub fn render(&self, mask: &[bool]) -> String {
        assert_eq!(mask.len(), self.tokens.len(), "mask length must equal token count");
        self.join(self.tokens.iter().zip(mask).filter(|(_, &on)| on).map(|(t, _)| t))
    }

    /// Same as [`render`](Self::render) with bit `j` standing for token `j`.
    pub fn render_bits(&self, bits: u64) -> String {
        self.join(self.tokens.iter().enumerate().filter(|(j, _)| bits >> j & 1 == 1).map(|(_, t)| t))
    }

    pub fn render_subset(&self, subset: &[usize]) -> String {
        let mut mask = vec![false; self.len()];
        for &j in subset {
            mask[j] = true;
        }
        self.render(&mask)
    }

    fn join<'a>(&self, tokens: impl Iterator<Item = &'a Token>) -> String {
        let mut out = String::new();
        for t in tokens {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(&t.text);
        }
        out
    }
}

/// Memo of probe outputs keyed by rendered text.
///
/// Distinct masks that render identically (e.g. a repeated word) share one
/// probe call. All misses in a request go to the probe as one batch, in
/// first-seen order, so results never depend on completion order.
#[derive(Debug, Default, Clone)]
pub struct CoalitionCache {
    values: HashMap<String, f64>,
    texts_sent: usize,
}

impl CoalitionCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of texts the probe has been asked to score through this cache.
    pub fn texts_sent(&self) -> usize {
        self.texts_sent
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn evaluate(&mut self, probe: &dyn Probe, texts: &[String]) -> Result<Vec<f64>> {
        let mut misses: Vec<String> = Vec::new();
        let mut queued = std::collections::HashSet::new();
        for t in texts {
            if !self.values.contains_key(t) && queued.insert(t.as_str()) {
                misses.push(t.clone());
            }
        }
        if !misses.is_empty() {
            let probs = probe.predict_batch(&misses)?;
            if probs.len() != misses.len() {
                return Err(ProbeError::Protocol(format!("asked for {} predictions, got {}", misses.len(), probs.len())).into());
            }
            self.texts_sent += misses.len();
            for (t, p) in misses.into_iter().zip(probs) {
                if !(0.0..=1.0).contains(&p) {
                    return Err(ProbeError::Protocol(format!("probability {p} outside [0, 1]")).into());
                }
                self.values.insert(t, p);
            }
        }
        Ok(texts.iter().map(|t| self.values[t]).collect())
    }
}

/// Probe output on the sentence reduced to the token indices in `subset`.
pub fn coalition_value(probe: &dyn Probe, inst: &MaskedInstance, subset: &[usize]) -> Result<f64> {
    if let Some(&bad) = subset.iter().find(|&&j| j >= inst.len()) {
        return Err(Error::InvalidInput(format!("token index {bad} out of range for {} tokens", inst.len())));
    }
    Ok(probe.predict_proba(&inst.render_subset(subset))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{ConstantProbe, CountingProbe};

    #[test]
    fn render_full_and_empty() {
        let inst = MaskedInstance::new("The woman's career is as a housewife.");
        assert_eq!(inst.render(&[true; 8]), "The woman s career is as a housewife");
        assert_eq!(inst.render(&[false; 8]), "");
        assert_eq!(inst.render_bits(0b1000_0001), "The housewife");
        assert_eq!(inst.render_subset(&[7, 0]), "The housewife");
    }

    #[test]
    fn cache_dedupes_identical_renders() {
        let inst = MaskedInstance::new("a b a");
        let probe = CountingProbe::new(ConstantProbe(0.3));
        let mut cache = CoalitionCache::new();
        // {0} and {2} both render "a"
        let texts = vec![inst.render_bits(0b001), inst.render_bits(0b100), inst.render_bits(0b001)];
        assert_eq!(cache.evaluate(&probe, &texts).unwrap(), vec![0.3; 3]);
        assert_eq!(probe.texts_seen(), 1);
        cache.evaluate(&probe, &texts).unwrap();
        assert_eq!(probe.batches_seen(), 1);
    }

    #[test]
    fn constant_probe_coalitions() {
        let inst = MaskedInstance::new("x y z");
        for s in [&[][..], &[0, 1, 2], &[1]] {
            assert_eq!(coalition_value(&ConstantProbe(0.25), &inst, s).unwrap(), 0.25);
        }
        assert!(coalition_value(&ConstantProbe(0.25), &inst, &[3]).is_err());
    }
}
