use std::path::Path;
use std::time::SystemTime;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::prompts::{build_batch_prompt, parse_response, ProbeSentence};
use super::provider::Provider;
use crate::classifier::Probe;
use crate::corpus::StereotypeType;
use crate::{hard_label, Error, ProviderError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AuditOptions {
    pub n_iter: usize,
    pub seed: u64,
    /// Derived from the model, seed, iteration count and prompt when absent.
    pub run_id: Option<String>,
    /// Fixed timestamp for every record; wall-clock time when absent.
    pub timestamp: Option<String>,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions { n_iter: 30, seed: 42, run_id: None, timestamp: None }
    }
}

/// One response line, or one failed iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub run_id: String,
    pub model: String,
    /// `None` for lines that could not be matched to a prompt.
    pub prompt_id: Option<u32>,
    /// 1-based.
    pub iteration: usize,
    pub response: String,
    pub parsed: bool,
    pub label: Option<u8>,
    pub probability: Option<f64>,
    pub ts: String,
    #[serde(default)]
    pub group: Option<StereotypeType>,
    /// Provider failure for an iteration that produced no response.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditRun {
    pub run_id: String,
    pub model: String,
    pub n_iter: usize,
    pub records: Vec<AuditRecord>,
}

impl AuditRun {
    pub fn parsed(&self) -> impl Iterator<Item = &AuditRecord> {
        self.records.iter().filter(|r| r.parsed)
    }

    pub fn parsed_count(&self) -> usize {
        self.parsed().count()
    }

    pub fn unparsed_count(&self) -> usize {
        self.records.iter().filter(|r| !r.parsed && r.error.is_none()).count()
    }

    pub fn failed_iterations(&self) -> usize {
        self.records.iter().filter(|r| r.error.is_some()).count()
    }

    /// One JSON object per record.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }
}

fn now() -> String {
    humantime::format_rfc3339_seconds(SystemTime::now()).to_string()
}

fn derive_run_id(model: &str, seed: u64, n_iter: usize, prompt: &str) -> String {
    let mut h = Sha256::new();
    h.update(model.as_bytes());
    h.update(seed.to_le_bytes());
    h.update((n_iter as u64).to_le_bytes());
    h.update(prompt.as_bytes());
    hex::encode(h.finalize())[..16].to_string()
}

/// Sends the batch prompt `n_iter` times, parses the numbered replies and
/// labels every parsed line with `probe`.
///
/// Iterations run up to the provider's in-flight bound; records are kept in
/// iteration order regardless of completion order. A provider failure marks
/// its iteration failed and the run goes on.
pub fn run_audit(
    provider: &dyn Provider,
    prompts: &[ProbeSentence],
    probe: &dyn Probe,
    opts: &AuditOptions,
) -> Result<AuditRun> {
    if opts.n_iter == 0 {
        return Err(Error::InvalidInput("n_iter must be positive".into()));
    }
    let prompt = build_batch_prompt(prompts)?;
    let model = provider.model();
    let run_id = opts.run_id.clone().unwrap_or_else(|| derive_run_id(&model, opts.seed, opts.n_iter, &prompt));
    let stamp = || opts.timestamp.clone().unwrap_or_else(now);

    let iterations: Vec<usize> = (1..=opts.n_iter).collect();
    let mut replies: Vec<(Result<String, ProviderError>, String)> = Vec::with_capacity(opts.n_iter);
    for wave in iterations.chunks(provider.max_in_flight().max(1)) {
        std::thread::scope(|s| {
            let handles: Vec<_> = wave
                .iter()
                .map(|&it| {
                    let prompt = &prompt;
                    let stamp = &stamp;
                    s.spawn(move || {
                        let r = provider.complete(prompt, it, opts.seed.wrapping_add(it as u64));
                        (r, stamp())
                    })
                })
                .collect();
            for h in handles {
                replies.push(
                    h.join().unwrap_or_else(|_| (Err(ProviderError::Transport("provider thread panicked".into())), stamp())),
                );
            }
        });
    }

    let mut records = Vec::new();
    for (it, (reply, ts)) in iterations.iter().zip(replies) {
        let base = AuditRecord {
            run_id: run_id.clone(),
            model: model.clone(),
            prompt_id: None,
            iteration: *it,
            response: String::new(),
            parsed: false,
            label: None,
            probability: None,
            ts,
            group: None,
            error: None,
        };
        match reply {
            Err(e) => records.push(AuditRecord { error: Some(e.to_string()), ..base }),
            Ok(text) => {
                let parsed = parse_response(&text, prompts.len());
                for (idx, line) in parsed.parsed {
                    let p = &prompts[idx - 1];
                    records.push(AuditRecord {
                        prompt_id: Some(p.prompt_id),
                        group: Some(p.group),
                        response: line,
                        parsed: true,
                        ..base.clone()
                    });
                }
                for line in parsed.unparsed {
                    records.push(AuditRecord { response: line, ..base.clone() });
                }
            }
        }
    }

    let texts: Vec<String> = records.iter().filter(|r| r.parsed).map(|r| r.response.clone()).collect();
    if texts.is_empty() {
        return Err(Error::Data(format!("no parsed responses from {model} across {} iterations", opts.n_iter)));
    }
    let probs = probe.predict_batch(&texts)?;
    if probs.len() != texts.len() {
        return Err(crate::ProbeError::Protocol(format!("asked for {} predictions, got {}", texts.len(), probs.len())).into());
    }
    for (r, p) in records.iter_mut().filter(|r| r.parsed).zip(probs) {
        if !(0.0..=1.0).contains(&p) {
            return Err(crate::ProbeError::Protocol(format!("probability {p} outside [0, 1]")).into());
        }
        r.probability = Some(p);
        r.label = Some(hard_label(p));
    }
    Ok(AuditRun { run_id, model, n_iter: opts.n_iter, records })
}

pub fn save_run(run: &AuditRun, path: &Path) -> Result<()> {
    std::fs::write(path, run.to_jsonl()?).map_err(|e| Error::io(path, e))
}

/// Reads a run back from its JSONL records.
pub fn load_run(path: &Path) -> Result<AuditRun> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let r: AuditRecord =
            serde_json::from_str(line).map_err(|e| Error::Data(format!("{} line {}: {e}", path.display(), i + 1)))?;
        if r.parsed && !r.probability.is_some_and(|p| (0.0..=1.0).contains(&p)) {
            return Err(Error::Data(format!("{} line {}: parsed record without a probability in [0, 1]", path.display(), i + 1)));
        }
        records.push(r);
    }
    let first = records.first().ok_or_else(|| Error::Data(format!("{}: no records", path.display())))?;
    let (run_id, model) = (first.run_id.clone(), first.model.clone());
    if records.iter().any(|r| r.run_id != run_id || r.model != model) {
        return Err(Error::Data(format!("{}: records from more than one run", path.display())));
    }
    let n_iter = records.iter().map(|r| r.iteration).max().unwrap_or(0);
    Ok(AuditRun { run_id, model, n_iter, records })
}
