use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::ProbeError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    LocalLr,
    Remote,
    /// In-process closures and test doubles.
    Custom,
}

/// Black-box stereotype classifier: text in, probability of the
/// stereotype class out.
///
/// Implementations must be deterministic for a fixed model state and
/// `predict_batch` must agree element-wise with single predictions.
pub trait Probe: Send + Sync {
    fn id(&self) -> String;

    fn kind(&self) -> ProbeKind;

    fn predict_batch(&self, texts: &[String]) -> Result<Vec<f64>, ProbeError>;

    fn predict_proba(&self, text: &str) -> Result<f64, ProbeError> {
        let out = self.predict_batch(&[text.to_string()])?;
        out.into_iter().next().ok_or_else(|| ProbeError::Model("empty prediction batch".into()))
    }
}

impl<P: Probe + ?Sized> Probe for &P {
    fn id(&self) -> String {
        (**self).id()
    }
    fn kind(&self) -> ProbeKind {
        (**self).kind()
    }
    fn predict_batch(&self, texts: &[String]) -> Result<Vec<f64>, ProbeError> {
        (**self).predict_batch(texts)
    }
}

impl<P: Probe + ?Sized> Probe for Box<P> {
    fn id(&self) -> String {
        (**self).id()
    }
    fn kind(&self) -> ProbeKind {
        (**self).kind()
    }
    fn predict_batch(&self, texts: &[String]) -> Result<Vec<f64>, ProbeError> {
        (**self).predict_batch(texts)
    }
}

impl<P: Probe + ?Sized> Probe for std::sync::Arc<P> {
    fn id(&self) -> String {
        (**self).id()
    }
    fn kind(&self) -> ProbeKind {
        (**self).kind()
    }
    fn predict_batch(&self, texts: &[String]) -> Result<Vec<f64>, ProbeError> {
        (**self).predict_batch(texts)
    }
}

/// Wraps a closure as a probe.
pub struct FnProbe<F> {
    id: String,
    f: F,
}

impl<F> FnProbe<F>
where
    F: Fn(&str) -> f64 + Send + Sync,
{
    pub fn new(id: impl Into<String>, f: F) -> Self {
        FnProbe { id: id.into(), f }
    }
}

impl<F> Probe for FnProbe<F>
where
    F: Fn(&str) -> f64 + Send + Sync,
{
    fn id(&self) -> String {
        self.id.clone()
    }

    fn kind(&self) -> ProbeKind {
        ProbeKind::Custom
    }

    fn predict_batch(&self, texts: &[String]) -> Result<Vec<f64>, ProbeError> {
        Ok(texts.iter().map(|t| (self.f)(t)).collect())
    }
}

/// Returns the same probability for every text.
#[derive(Debug, Clone)]
pub struct ConstantProbe(pub f64);

impl Probe for ConstantProbe {
    fn id(&self) -> String {
        format!("constant:{}", self.0)
    }

    fn kind(&self) -> ProbeKind {
        ProbeKind::Custom
    }

    fn predict_batch(&self, texts: &[String]) -> Result<Vec<f64>, ProbeError> {
        Ok(vec![self.0; texts.len()])
    }
}

/// Counts how many texts reach the inner probe.
pub struct CountingProbe<P> {
    inner: P,
    texts: AtomicUsize,
    calls: AtomicUsize,
}

impl<P: Probe> CountingProbe<P> {
    pub fn new(inner: P) -> Self {
        CountingProbe { inner, texts: AtomicUsize::new(0), calls: AtomicUsize::new(0) }
    }

    /// Number of texts evaluated so far.
    pub fn texts_seen(&self) -> usize {
        self.texts.load(Ordering::SeqCst)
    }

    /// Number of `predict_batch` invocations so far.
    pub fn batches_seen(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<P: Probe> Probe for CountingProbe<P> {
    fn id(&self) -> String {
        self.inner.id()
    }

    fn kind(&self) -> ProbeKind {
        self.inner.kind()
    }

    fn predict_batch(&self, texts: &[String]) -> Result<Vec<f64>, ProbeError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.texts.fetch_add(texts.len(), Ordering::SeqCst);
        self.inner.predict_batch(texts)
    }
}
