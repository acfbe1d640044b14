use std::time::Duration;

use super::probe::{Probe, ProbeKind};
use crate::protocol::{parse_response, PredictRequest};
use crate::ProbeError;

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteConfig {
    /// Base URL; `/predict` is appended unless already present.
    pub url: String,
    pub model_id: String,
    pub batch_size: usize,
    pub max_in_flight: usize,
    pub max_attempts: u32,
    pub backoff_base: Duration,
    pub timeout: Duration,
}

impl RemoteConfig {
    pub fn new(url: impl Into<String>, model_id: impl Into<String>) -> Self {
        RemoteConfig {
            url: url.into(),
            model_id: model_id.into(),
            batch_size: 32,
            max_in_flight: 4,
            max_attempts: 3,
            backoff_base: Duration::from_millis(200),
            timeout: Duration::from_secs(60),
        }
    }
}

/// Probe backed by a model served over the prediction protocol.
pub struct RemoteProbe {
    config: RemoteConfig,
    endpoint: String,
    agent: ureq::Agent,
}

enum Attempt {
    Retry(String),
    Fatal(ProbeError),
}

impl RemoteProbe {
    pub fn new(config: RemoteConfig) -> Self {
        let trimmed = config.url.trim_end_matches('/');
        let endpoint = if trimmed.ends_with("/predict") { trimmed.to_string() } else { format!("{trimmed}/predict") };
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        RemoteProbe { config, endpoint, agent }
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    fn attempt(&self, body: &str, n: usize) -> Result<Vec<f64>, Attempt> {
        let mut resp = self
            .agent
            .post(&self.endpoint)
            .header("Content-Type", "application/json")
            .send(body)
            .map_err(|e| Attempt::Retry(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| Attempt::Retry(e.to_string()))?;
        match status {
            200..=299 => parse_response(&text, n).map(|r| r.probabilities).map_err(Attempt::Fatal),
            429 | 500..=599 => Err(Attempt::Retry(format!("HTTP {status}: {text}"))),
            _ => Err(Attempt::Fatal(ProbeError::Protocol(format!("HTTP {status}: {text}")))),
        }
    }

    fn post_chunk(&self, texts: &[String]) -> Result<Vec<f64>, ProbeError> {
        let body = serde_json::to_string(&PredictRequest { texts: texts.to_vec() })
            .map_err(|e| ProbeError::Model(e.to_string()))?;
        let attempts = self.config.max_attempts.max(1);
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(self.config.backoff_base * 2u32.saturating_pow(attempt - 1));
            }
            match self.attempt(&body, texts.len()) {
                Ok(p) => return Ok(p),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(msg)) => last = msg,
            }
        }
        Err(ProbeError::Transport(format!("{} after {attempts} attempt(s): {last}", self.endpoint)))
    }
}

impl Probe for RemoteProbe {
    fn id(&self) -> String {
        self.config.model_id.clone()
    }

    fn kind(&self) -> ProbeKind {
        ProbeKind::Remote
    }

    /// Splits into chunks of `batch_size`, keeps at most `max_in_flight`
    /// requests open, and reassembles results in request order.
    fn predict_batch(&self, texts: &[String]) -> Result<Vec<f64>, ProbeError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let chunks: Vec<&[String]> = texts.chunks(self.config.batch_size.max(1)).collect();
        let mut results: Vec<Option<Result<Vec<f64>, ProbeError>>> = (0..chunks.len()).map(|_| None).collect();
        for wave in (0..chunks.len()).collect::<Vec<_>>().chunks(self.config.max_in_flight.max(1)) {
            std::thread::scope(|s| {
                let handles: Vec<_> = wave
                    .iter()
                    .map(|&i| {
                        let chunk = chunks[i];
                        (i, s.spawn(move || self.post_chunk(chunk)))
                    })
                    .collect();
                for (i, h) in handles {
                    results[i] = Some(h.join().unwrap_or_else(|_| Err(ProbeError::Model("request thread panicked".into()))));
                }
            });
        }
        let mut out = Vec::with_capacity(texts.len());
        for r in results {
            out.extend(r.expect("every chunk dispatched")?);
        }
        Ok(out)
    }
}

/// Shorthand for a remote probe with default batching and retry settings.
pub fn remote_probe(url: &str, model_id: &str) -> RemoteProbe {
    RemoteProbe::new(RemoteConfig::new(url, model_id))
}
