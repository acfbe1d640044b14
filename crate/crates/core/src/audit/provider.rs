use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, ProviderError, Result};

/// A text-completion backend.
pub trait Provider: Send + Sync {
    /// Model identifier recorded in runs and reports.
    fn model(&self) -> String;

    /// One completion of `prompt` for audit iteration `iteration`.
    fn complete(&self, prompt: &str, iteration: usize, seed: u64) -> Result<String, ProviderError>;

    /// Iterations that may be in flight at once.
    fn max_in_flight(&self) -> usize {
        1
    }
}

/// Hex SHA-256 of the prompt text; keys replay fixtures.
pub fn request_hash(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

const DEFAULT_BODY: &str = r#"{"model": {{model}}, "messages": [{"role": "user", "content": {{prompt}}}], "temperature": {{temperature}}, "max_tokens": {{max_tokens}}}"#;

fn default_body() -> String {
    DEFAULT_BODY.to_string()
}
fn default_response_path() -> String {
    "choices.0.message.content".to_string()
}
fn default_in_flight() -> usize {
    4
}
fn default_attempts() -> u32 {
    3
}
fn default_backoff() -> u64 {
    500
}
fn default_timeout() -> u64 {
    120
}

/// One `[provider.<name>]` table.
///
/// Secrets never live here: `auth_env` names the environment variable that
/// holds the token, which is read when the provider is built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    #[serde(skip)]
    pub name: String,
    pub endpoint: String,
    pub model: String,
    #[serde(default)]
    pub auth_header: Option<String>,
    #[serde(default)]
    pub auth_env: Option<String>,
    /// Prepended to the token, e.g. `"Bearer "`.
    #[serde(default)]
    pub auth_prefix: String,
    /// JSON body with `{{model}}`, `{{prompt}}`, `{{temperature}}`,
    /// `{{max_tokens}}` and `{{seed}}` placeholders, each replaced by a JSON literal.
    #[serde(default = "default_body")]
    pub body_template: String,
    /// Dotted path to the completion text; numeric segments index arrays.
    #[serde(default = "default_response_path")]
    pub response_path: String,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default = "default_attempts")]
    pub max_attempts: u32,
    #[serde(default = "default_backoff")]
    pub backoff_base_ms: u64,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default)]
    pub temperature: Option<f64>,
    #[serde(default)]
    pub max_tokens: Option<u64>,
    /// Free-form date used to order the trend chart, e.g. `2024-05-13`.
    #[serde(default)]
    pub release_date: Option<String>,
}

impl ProviderConfig {
    pub fn new(name: &str, endpoint: &str, model: &str) -> Self {
        ProviderConfig {
            name: name.to_string(),
            endpoint: endpoint.to_string(),
            model: model.to_string(),
            auth_header: None,
            auth_env: None,
            auth_prefix: String::new(),
            body_template: default_body(),
            response_path: default_response_path(),
            max_in_flight: default_in_flight(),
            max_attempts: default_attempts(),
            backoff_base_ms: default_backoff(),
            timeout_secs: default_timeout(),
            temperature: None,
            max_tokens: None,
            release_date: None,
        }
    }
}

#[derive(Deserialize)]
struct ConfigFile {
    #[serde(default)]
    provider: BTreeMap<String, ProviderConfig>,
}

/// Reads every `[provider.<name>]` table from a TOML file.
pub fn load_provider_configs(path: &Path) -> Result<BTreeMap<String, ProviderConfig>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ConfigFile =
        toml::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    if file.provider.is_empty() {
        return Err(Error::Data(format!("{}: no [provider.<name>] tables", path.display())));
    }
    Ok(file
        .provider
        .into_iter()
        .map(|(name, mut cfg)| {
            cfg.name = name.clone();
            (name, cfg)
        })
        .collect())
}

/// Generic JSON-over-HTTP chat provider driven entirely by its config.
pub struct HttpProvider {
    cfg: ProviderConfig,
    auth: Option<(String, String)>,
    token: Option<String>,
    agent: ureq::Agent,
}

impl fmt::Debug for HttpProvider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HttpProvider")
            .field("name", &self.cfg.name)
            .field("endpoint", &self.cfg.endpoint)
            .field("model", &self.cfg.model)
            .field("auth_header", &self.auth.as_ref().map(|(h, _)| h))
            .finish_non_exhaustive()
    }
}

fn render_body(template: &str, vars: &[(&str, serde_json::Value)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(start) = rest.find("{{") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        match after.find("}}") {
            Some(end) => {
                let key = after[..end].trim();
                match vars.iter().find(|(k, _)| *k == key) {
                    Some((_, v)) => out.push_str(&v.to_string()),
                    None => out.push_str(&rest[start..start + 2 + end + 2]),
                }
                rest = &after[end + 2..];
            }
            None => {
                out.push_str(&rest[start..]);
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}

fn follow_path<'a>(v: &'a serde_json::Value, path: &str) -> Option<&'a serde_json::Value> {
    path.split('.').filter(|s| !s.is_empty()).try_fold(v, |cur, seg| match seg.parse::<usize>() {
        Ok(i) if cur.is_array() => cur.get(i),
        _ => cur.get(seg),
    })
}

impl HttpProvider {
    pub fn new(cfg: ProviderConfig) -> Result<Self, ProviderError> {
        if cfg.endpoint.trim().is_empty() {
            return Err(ProviderError::Config(format!("provider {:?} has no endpoint", cfg.name)));
        }
        let (auth, token) = match (&cfg.auth_header, &cfg.auth_env) {
            (Some(header), Some(var)) => {
                let token = std::env::var(var).map_err(|_| {
                    ProviderError::Config(format!("environment variable {var} for provider {:?} is not set", cfg.name))
                })?;
                (Some((header.clone(), format!("{}{}", cfg.auth_prefix, token))), Some(token).filter(|t| !t.is_empty()))
            }
            (None, None) => (None, None),
            _ => {
                return Err(ProviderError::Config(format!(
                    "provider {:?} needs both auth_header and auth_env, or neither",
                    cfg.name
                )))
            }
        };
        let probe_body = render_body(&cfg.body_template, &Self::vars(&cfg, "", 0));
        serde_json::from_str::<serde_json::Value>(&probe_body)
            .map_err(|e| ProviderError::Config(format!("body_template is not valid JSON once filled: {e}")))?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(cfg.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(HttpProvider { cfg, auth, token, agent })
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.cfg
    }

    fn vars(cfg: &ProviderConfig, prompt: &str, seed: u64) -> Vec<(&'static str, serde_json::Value)> {
        vec![
            ("model", cfg.model.clone().into()),
            ("prompt", prompt.into()),
            ("temperature", cfg.temperature.into()),
            ("max_tokens", cfg.max_tokens.into()),
            ("seed", seed.into()),
        ]
    }

    /// Servers sometimes echo request headers in error bodies; keep the token out of anything we store.
    fn redact(&self, s: &str) -> String {
        match &self.token {
            Some(t) => s.replace(t.as_str(), "[redacted]"),
            None => s.to_string(),
        }
    }

    fn attempt(&self, body: &str) -> Result<String, (ProviderError, bool)> {
        let mut req = self.agent.post(&self.cfg.endpoint).header("Content-Type", "application/json");
        if let Some((h, v)) = &self.auth {
            req = req.header(h.as_str(), v.as_str());
        }
        let mut resp = req.send(body).map_err(|e| (ProviderError::Transport(e.to_string()), true))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| (ProviderError::Transport(e.to_string()), true))?;
        if !(200..300).contains(&status) {
            let retry = status == 429 || status >= 500;
            let body: String = self.redact(&text).chars().take(200).collect();
            return Err((ProviderError::Status { status, body }, retry));
        }
        let v: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| (ProviderError::Response(format!("body is not JSON: {e}")), false))?;
        match follow_path(&v, &self.cfg.response_path) {
            Some(serde_json::Value::String(s)) => Ok(s.clone()),
            _ => Err((ProviderError::Response(format!("no string at {:?}", self.cfg.response_path)), false)),
        }
    }
}

impl Provider for HttpProvider {
    fn model(&self) -> String {
        self.cfg.model.clone()
    }

    fn complete(&self, prompt: &str, _iteration: usize, seed: u64) -> Result<String, ProviderError> {
        let body = render_body(&self.cfg.body_template, &Self::vars(&self.cfg, prompt, seed));
        let attempts = self.cfg.max_attempts.max(1);
        let mut last = ProviderError::Transport("no attempt made".into());
        for k in 0..attempts {
            if k > 0 {
                std::thread::sleep(Duration::from_millis(self.cfg.backoff_base_ms.saturating_mul(1 << (k - 1).min(16))));
            }
            match self.attempt(&body) {
                Ok(s) => return Ok(s),
                Err((e, retry)) => {
                    last = e;
                    if !retry {
                        break;
                    }
                }
            }
        }
        Err(last)
    }

    fn max_in_flight(&self) -> usize {
        self.cfg.max_in_flight.max(1)
    }
}

/// One recorded completion in a replay fixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayEntry {
    pub iteration: usize,
    pub request_hash: String,
    pub response: String,
}

/// Serves completions from a JSONL fixture keyed by (iteration, request hash).
#[derive(Debug, Clone)]
pub struct ReplayProvider {
    model: String,
    entries: HashMap<(usize, String), String>,
}

impl ReplayProvider {
    pub fn from_entries(model: &str, entries: impl IntoIterator<Item = ReplayEntry>) -> Self {
        let mut map = HashMap::new();
        for e in entries {
            map.entry((e.iteration, e.request_hash)).or_insert(e.response);
        }
        ReplayProvider { model: model.to_string(), entries: map }
    }

    pub fn load(path: &Path, model: &str) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let e: ReplayEntry = serde_json::from_str(line)
                .map_err(|e| Error::Data(format!("{} line {}: {e}", path.display(), i + 1)))?;
            entries.push(e);
        }
        Ok(Self::from_entries(model, entries))
    }

    pub fn save(entries: &[ReplayEntry], path: &Path) -> Result<()> {
        let mut out = String::new();
        for e in entries {
            out.push_str(&serde_json::to_string(e)?);
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl Provider for ReplayProvider {
    fn model(&self) -> String {
        self.model.clone()
    }

    fn complete(&self, prompt: &str, iteration: usize, _seed: u64) -> Result<String, ProviderError> {
        let request_hash = request_hash(prompt);
        self.entries
            .get(&(iteration, request_hash.clone()))
            .cloned()
            .ok_or(ProviderError::ReplayMiss { iteration, request_hash })
    }
}

/// Wraps a closure `(prompt, iteration) -> completion` as a provider.
pub struct FnProvider<F> {
    model: String,
    f: F,
}

impl<F> FnProvider<F>
where
    F: Fn(&str, usize) -> Result<String, ProviderError> + Send + Sync,
{
    pub fn new(model: &str, f: F) -> Self {
        FnProvider { model: model.to_string(), f }
    }
}

impl<F> Provider for FnProvider<F>
where
    F: Fn(&str, usize) -> Result<String, ProviderError> + Send + Sync,
{
    fn model(&self) -> String {
        self.model.clone()
    }

    fn complete(&self, prompt: &str, iteration: usize, _seed: u64) -> Result<String, ProviderError> {
        (self.f)(prompt, iteration)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn body_rendering_quotes_values_once() {
        let body = render_body(DEFAULT_BODY, &[("model", "m".into()), ("prompt", "say \"{{model}}\"\n".into()), ("temperature", serde_json::Value::Null), ("max_tokens", 64.into())]);
        let v: serde_json::Value = serde_json::from_str(&body).unwrap();
        assert_eq!(v["model"], "m");
        assert_eq!(v["messages"][0]["content"], "say \"{{model}}\"\n");
        assert!(v["temperature"].is_null());
        assert_eq!(v["max_tokens"], 64);
    }

    #[test]
    fn dotted_paths() {
        let v: serde_json::Value = serde_json::json!({"choices": [{"message": {"content": "hi"}}], "a": {"0": "x"}});
        assert_eq!(follow_path(&v, "choices.0.message.content").unwrap(), "hi");
        assert_eq!(follow_path(&v, "a.0").unwrap(), "x");
        assert!(follow_path(&v, "choices.1").is_none());
    }

    #[test]
    fn toml_tables() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.toml");
        std::fs::write(
            &path,
            "[provider.local]\nendpoint = \"http://127.0.0.1:1/v1/chat\"\nmodel = \"m1\"\nauth_header = \"Authorization\"\nauth_env = \"SL_TOKEN\"\nauth_prefix = \"Bearer \"\nrelease_date = \"2024-05-13\"\n",
        )
        .unwrap();
        let cfgs = load_provider_configs(&path).unwrap();
        let c = &cfgs["local"];
        assert_eq!(c.name, "local");
        assert_eq!(c.max_in_flight, 4);
        assert_eq!(c.release_date.as_deref(), Some("2024-05-13"));
        std::fs::write(&path, "[provider.x]\nendpoint = \"e\"\nmodel = \"m\"\napi_key = \"oops\"\n").unwrap();
        assert!(load_provider_configs(&path).is_err());
    }

    #[test]
    fn missing_env_names_the_variable() {
        let mut c = ProviderConfig::new("p", "http://127.0.0.1:1", "m");
        c.auth_header = Some("Authorization".into());
        c.auth_env = Some("SL_DEFINITELY_UNSET_VAR".into());
        let err = HttpProvider::new(c).unwrap_err().to_string();
        assert!(err.contains("SL_DEFINITELY_UNSET_VAR"));
    }

    #[test]
    fn replay_lookup() {
        let p = ReplayProvider::from_entries(
            "m",
            [ReplayEntry { iteration: 0, request_hash: request_hash("hello"), response: "1. hi".into() }],
        );
        assert_eq!(p.complete("hello", 0, 0).unwrap(), "1. hi");
        assert!(matches!(p.complete("hello", 1, 0), Err(ProviderError::ReplayMiss { iteration: 1, .. })));
    }
}
