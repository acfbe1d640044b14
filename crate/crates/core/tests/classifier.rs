mod common;

use std::sync::Arc;

use stereolens::audit::{bundled_prompts, run_audit, AuditOptions, FnProvider};
use stereolens::classifier::{
    confusion, dense_rows, evaluate, f1_score, macro_f1, remote_probe, train_logistic, FnProbe, Penalty, Probe,
    ProbeKind, RemoteConfig, RemoteProbe, TfidfLogisticClassifier, TrainConfig,
};
use stereolens::corpus::synthetic::synthetic_corpus;
use stereolens::corpus::{stratified_split, SplitSpec};
use stereolens::explain::{lime_explain, shap_exact, shap_sampled, CoalitionCache, LimeConfig};
use stereolens::protocol::serve;
use stereolens::{Error, ProbeError};

const X: [[f64; 3]; 6] = [
    [1.0, 0.0, 2.0],
    [0.0, 1.0, 1.0],
    [2.0, 1.0, 0.0],
    [1.0, 2.0, 1.0],
    [0.5, 0.0, 1.0],
    [2.0, 2.0, 2.0],
];
const Y: [u8; 6] = [1, 0, 1, 0, 0, 1];

/// Mean log-loss plus `R(w) / (C N)`, bias unpenalized; theta = [w.., b].
fn objective(theta: &[f64], penalty: Penalty, c: f64) -> f64 {
    let n = X.len() as f64;
    let mut loss = 0.0;
    for (x, &y) in X.iter().zip(&Y) {
        let z: f64 = x.iter().zip(theta).map(|(a, b)| a * b).sum::<f64>() + theta[3];
        // log(1 + e^z) - y z, written stably
        loss += z.max(0.0) + (-z.abs()).exp().ln_1p() - f64::from(y) * z;
    }
    let w = &theta[..3];
    let reg = match penalty {
        Penalty::L1 => w.iter().map(|v| v.abs()).sum::<f64>(),
        Penalty::L2 => 0.5 * w.iter().map(|v| v * v).sum::<f64>(),
        Penalty::None => 0.0,
    };
    loss / n + reg / (c * n)
}

/// Cyclic exact coordinate minimization by ternary search; converges on
/// smooth plus separable convex objectives.
fn coordinate_descent_oracle(penalty: Penalty, c: f64) -> Vec<f64> {
    let mut theta = vec![0.0; 4];
    for _ in 0..400 {
        for j in 0..4 {
            let (mut lo, mut hi) = (theta[j] - 20.0, theta[j] + 20.0);
            for _ in 0..200 {
                let m1 = lo + (hi - lo) / 3.0;
                let m2 = hi - (hi - lo) / 3.0;
                let mut t1 = theta.clone();
                t1[j] = m1;
                let mut t2 = theta.clone();
                t2[j] = m2;
                if objective(&t1, penalty, c) <= objective(&t2, penalty, c) {
                    hi = m2;
                } else {
                    lo = m1;
                }
            }
            theta[j] = 0.5 * (lo + hi);
        }
    }
    theta
}

#[test]
fn logistic_matches_convex_oracle_on_six_by_three() {
    let rows = dense_rows(&X.iter().map(|r| r.to_vec()).collect::<Vec<_>>());
    for (penalty, c) in [(Penalty::L2, 1.0), (Penalty::L2, 10.0), (Penalty::L1, 1.0), (Penalty::L1, 5.0)] {
        let cfg = TrainConfig { penalty, strength_c: c, max_iter: 20_000, tol: 1e-10, ..TrainConfig::default() };
        let m = train_logistic(&rows, 3, &Y, &cfg).unwrap();
        let oracle = coordinate_descent_oracle(penalty, c);
        for (j, w) in m.weights.iter().enumerate() {
            assert!((w - oracle[j]).abs() < 1e-3, "{penalty} C={c}: w{j} {w} vs {}", oracle[j]);
        }
        assert!((m.bias - oracle[3]).abs() < 1e-3, "{penalty} C={c}: bias {} vs {}", m.bias, oracle[3]);
        let ours: Vec<f64> = m.weights.iter().copied().chain([m.bias]).collect();
        assert!(objective(&ours, penalty, c) <= objective(&oracle, penalty, c) + 1e-9);
    }
}

#[test]
fn f1_formulas() {
    assert_eq!(f1_score(0, 0, 0), 0.0);
    assert_eq!(f1_score(40, 10, 10), 0.8);
    let y = [1u8, 0, 1, 1, 0, 0, 1];
    assert_eq!(macro_f1(&confusion(&y, &y)), 1.0);
    let inv: Vec<u8> = y.iter().map(|v| 1 - v).collect();
    assert_eq!(macro_f1(&confusion(&y, &inv)), 0.0);
    // tp=2 fp=1 fn=2 for class 1; tp=2 fp=2 fn=1 for class 0
    let pred = [1u8, 1, 0, 1, 0, 0, 0];
    let expected = 0.5 * (2.0 * 2.0 / (2.0 * 2.0 + 1.0 + 2.0) + 2.0 * 2.0 / (2.0 * 2.0 + 2.0 + 1.0));
    assert!((macro_f1(&confusion(&y, &pred)) - expected).abs() < 1e-15);
}

fn trained() -> TfidfLogisticClassifier {
    TfidfLogisticClassifier::train(&synthetic_corpus(300, 9), &TrainConfig::default()).unwrap()
}

#[test]
fn synthetic_corpus_is_learnable() {
    let (train, test) = stratified_split(&synthetic_corpus(600, 4), &SplitSpec::default()).unwrap();
    let clf = TfidfLogisticClassifier::train(&train, &TrainConfig::default()).unwrap();
    let report = evaluate(&clf, &test, 0.5).unwrap();
    assert!(report.macro_f1 >= 0.9, "{}", report.macro_f1);
    assert_eq!(report.n, test.len());
}

#[test]
fn remote_and_local_probes_are_interchangeable() {
    let local = trained();
    let server = serve(Arc::new(local.clone()), "127.0.0.1:0").unwrap();
    let remote = RemoteProbe::new(RemoteConfig { batch_size: 7, ..RemoteConfig::new(server.url(), local.id()) });
    assert_eq!(remote.kind(), ProbeKind::Remote);

    let text = "My lesbian couple was very lazy at work.";
    let a = shap_exact(&local, text, &mut CoalitionCache::new()).unwrap();
    let b = shap_exact(&remote, text, &mut CoalitionCache::new()).unwrap();
    assert_eq!(a.values, b.values);
    assert_eq!(a.base_value, b.base_value);
    let a = shap_sampled(&local, text, 64, 3, &mut CoalitionCache::new()).unwrap();
    let b = shap_sampled(&remote, text, 64, 3, &mut CoalitionCache::new()).unwrap();
    assert_eq!(a.values, b.values);
    let a = lime_explain(&local, text, &LimeConfig::default(), &mut CoalitionCache::new()).unwrap();
    let b = lime_explain(&remote, text, &LimeConfig::default(), &mut CoalitionCache::new()).unwrap();
    assert_eq!(a.values, b.values);

    let prompts = bundled_prompts();
    let provider = FnProvider::new("stub-llm", |_p: &str, it: usize| {
        Ok((1..=35).map(|i| format!("{i}. sentence {i} ends lazy {}\n", (i + it) % 3)).collect::<String>())
    });
    let opts = AuditOptions { n_iter: 3, timestamp: Some("2026-01-01T00:00:00Z".into()), ..AuditOptions::default() };
    let ra = run_audit(&provider, &prompts, &local, &opts).unwrap();
    let rb = run_audit(&provider, &prompts, &remote, &opts).unwrap();
    assert_eq!(ra.to_jsonl().unwrap(), rb.to_jsonl().unwrap());
}

#[test]
fn remote_preserves_order_across_chunks() {
    let probe = FnProbe::new("idx", |t: &str| t.trim_start_matches("text ").parse::<f64>().unwrap() / 100.0);
    let server = serve(Arc::new(probe), "127.0.0.1:0").unwrap();
    let remote = RemoteProbe::new(RemoteConfig { batch_size: 3, max_in_flight: 4, ..RemoteConfig::new(server.url(), "idx") });
    let texts: Vec<String> = (0..50).map(|i| format!("text {i}")).collect();
    let got = remote.predict_batch(&texts).unwrap();
    assert_eq!(got, (0..50).map(|i| f64::from(i) / 100.0).collect::<Vec<_>>());
    assert!(remote.predict_batch(&[]).unwrap().is_empty());
}

#[test]
fn out_of_range_probability_is_a_protocol_error() {
    let server = serve(Arc::new(FnProbe::new("bad", |_t: &str| 1.3)), "127.0.0.1:0").unwrap();
    let remote = remote_probe(&server.url(), "bad");
    let err = remote.predict_batch(&["x".into()]).unwrap_err();
    assert!(matches!(err, ProbeError::Protocol(_)), "{err}");

    let wrapped = shap_exact(&remote, "a b", &mut CoalitionCache::new()).unwrap_err();
    assert!(matches!(wrapped, Error::Probe(ProbeError::Protocol(_))), "{wrapped}");
}

#[test]
fn unreachable_endpoint_is_a_transport_error() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    let cfg = RemoteConfig {
        max_attempts: 2,
        backoff_base: std::time::Duration::from_millis(1),
        ..RemoteConfig::new(format!("http://{addr}"), "gone")
    };
    let err = RemoteProbe::new(cfg).predict_batch(&["x".into()]).unwrap_err();
    assert!(matches!(err, ProbeError::Transport(_)), "{err}");
}
