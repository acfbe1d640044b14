//! Prediction wire protocol: `POST /predict` with `{"texts": [...]}` answered
//! by `{"probabilities": [...]}` in request order, plus an in-process server
//! and a golden-file conformance suite for serving implementations.

use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;

use serde::{Deserialize, Serialize};

use crate::classifier::{ConstantProbe, Probe};
use crate::{Error, ProbeError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictRequest {
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictResponse {
    pub probabilities: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
}

/// Parses a response body and checks length and range.
pub fn parse_response(body: &str, expected_len: usize) -> Result<PredictResponse, ProbeError> {
    let value: serde_json::Value =
        serde_json::from_str(body).map_err(|e| ProbeError::Protocol(format!("response is not JSON: {e}")))?;
    let probs = value
        .get("probabilities")
        .ok_or_else(|| ProbeError::Protocol("response lacks \"probabilities\"".into()))?
        .as_array()
        .ok_or_else(|| ProbeError::Protocol("\"probabilities\" is not an array".into()))?;
    if probs.len() != expected_len {
        return Err(ProbeError::Protocol(format!("expected {expected_len} probabilities, got {}", probs.len())));
    }
    let mut probabilities = Vec::with_capacity(probs.len());
    for (i, p) in probs.iter().enumerate() {
        let p = p.as_f64().ok_or_else(|| ProbeError::Protocol(format!("probability {i} is not a number")))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(ProbeError::Protocol(format!("probability {i} = {p} outside [0,1]")));
        }
        probabilities.push(p);
    }
    let model = value.get("model").and_then(|m| m.as_str()).map(str::to_string);
    Ok(PredictResponse { probabilities, model })
}

/// Running prediction server; stops when dropped.
pub struct PredictServer {
    server: Arc<tiny_http::Server>,
    addr: SocketAddr,
    worker: Option<JoinHandle<()>>,
}

impl PredictServer {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Blocks until the server is stopped from another thread.
    pub fn join(mut self) {
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

impl Drop for PredictServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

fn json_response(status: u16, body: String) -> tiny_http::Response<std::io::Cursor<Vec<u8>>> {
    let header = tiny_http::Header::from_bytes("Content-Type", "application/json").expect("static header");
    tiny_http::Response::from_string(body).with_status_code(status).with_header(header)
}

fn handle(probe: &dyn Probe, model: &str, mut req: tiny_http::Request) {
    let method = req.method().clone();
    let path = req.url().split('?').next().unwrap_or("").to_string();
    let response = match (method, path.as_str()) {
        (tiny_http::Method::Get, "/healthz") => json_response(200, serde_json::json!({ "model": model }).to_string()),
        (tiny_http::Method::Post, "/predict") => {
            let mut body = String::new();
            match req.as_reader().read_to_string(&mut body).ok().and_then(|_| serde_json::from_str::<PredictRequest>(&body).ok()) {
                None => json_response(400, serde_json::json!({ "error": "malformed body" }).to_string()),
                Some(r) => match probe.predict_batch(&r.texts) {
                    Ok(probabilities) => {
                        let resp = PredictResponse { probabilities, model: Some(model.to_string()) };
                        json_response(200, serde_json::to_string(&resp).expect("serializable"))
                    }
                    Err(e) => json_response(500, serde_json::json!({ "error": e.to_string() }).to_string()),
                },
            }
        }
        _ => json_response(404, serde_json::json!({ "error": "not found" }).to_string()),
    };
    let _ = req.respond(response);
}

/// Serves `probe` over the prediction protocol on `addr` (port 0 picks a
/// free port). Requests are handled one at a time.
pub fn serve(probe: Arc<dyn Probe>, addr: &str) -> Result<PredictServer> {
    let server = tiny_http::Server::http(addr).map_err(|e| Error::InvalidInput(format!("cannot bind {addr}: {e}")))?;
    let addr = server
        .server_addr()
        .to_ip()
        .ok_or_else(|| Error::InvalidInput(format!("{addr} is not an IP address")))?;
    let server = Arc::new(server);
    let worker_server = Arc::clone(&server);
    let model = probe.id();
    let worker = std::thread::spawn(move || {
        for req in worker_server.incoming_requests() {
            handle(probe.as_ref(), &model, req);
        }
    });
    Ok(PredictServer { server, addr, worker: Some(worker) })
}

/// One golden request/response pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformanceCase {
    pub request: PredictRequest,
    pub response: PredictResponse,
}

/// Golden cases for batches of 1..=64 texts answered by a constant stub.
pub fn conformance_suite(stub_probability: f64) -> Vec<ConformanceCase> {
    let stub = ConstantProbe(stub_probability);
    (1..=64)
        .map(|n| {
            let texts: Vec<String> = (0..n).map(|i| format!("conformance sentence {n}-{i}: the person was there.")).collect();
            let probabilities = stub.predict_batch(&texts).expect("constant probe");
            ConformanceCase { request: PredictRequest { texts }, response: PredictResponse { probabilities, model: None } }
        })
        .collect()
}

/// JSON lines, one case per line. Floats use shortest round-trip formatting.
pub fn write_conformance_suite(cases: &[ConformanceCase]) -> Result<String> {
    let mut out = String::new();
    for c in cases {
        out.push_str(&serde_json::to_string(c)?);
        out.push('\n');
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConformanceOutcome {
    pub passed: usize,
    pub failures: Vec<String>,
}

/// Replays golden cases against a server and compares probability vectors.
pub fn check_conformance(url: &str, cases: &[ConformanceCase]) -> ConformanceOutcome {
    let probe = crate::classifier::RemoteProbe::new(crate::classifier::RemoteConfig {
        batch_size: usize::MAX,
        ..crate::classifier::RemoteConfig::new(url, "conformance")
    });
    let mut outcome = ConformanceOutcome::default();
    for (i, c) in cases.iter().enumerate() {
        match probe.predict_batch(&c.request.texts) {
            Ok(p) if p == c.response.probabilities => outcome.passed += 1,
            Ok(p) => outcome.failures.push(format!("case {i}: expected {:?}, got {:?}", c.response.probabilities, p)),
            Err(e) => outcome.failures.push(format!("case {i}: {e}")),
        }
    }
    outcome
}
