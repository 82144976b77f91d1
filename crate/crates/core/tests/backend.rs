mod common;

use lgt_core::backend::{
    Backend, BackendConfig, BackendError, BackendKind, GenerationRequest, HttpBackend, ScriptedBackend, ScriptedRuleSet,
    FAILURE_SENTINEL, SYSTEM_TEXT,
};
use lgt_core::data::{make_synthetic, Splits, SyntheticKind, SyntheticParams};
use lgt_core::orchestrator::{run_lgt, Budget, Method, RunConfig, Transcript};
use lgt_core::space::ConfigurationSpace;
use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::mpsc;
use std::thread;

fn lgt_transcript(kind: SyntheticKind, seed: u64) -> Transcript {
    let data = make_synthetic(kind, &SyntheticParams::default(), seed);
    let splits = Splits::prepare(&data, 0.8, seed).unwrap();
    let space = ConfigurationSpace::for_task(data.task);
    let run = RunConfig {
        dataset: format!("{kind:?}"),
        method: Method::Lgt,
        seed,
        budget: Budget {
            max_configurations: 50,
            epochs_per_evaluation: 6,
            iterations: 3,
        },
    };
    let backend = ScriptedBackend::new(ScriptedRuleSet::default_rules());
    let mut t = Transcript::new();
    let r = run_lgt(&run, &splits, &space, &backend, &BackendConfig::scripted(), &mut t);
    assert!(r.status.is_completed(), "{:?}", r.status);
    t
}

#[test]
fn every_scripted_reply_parses() {
    for kind in [SyntheticKind::BlobsClassification, SyntheticKind::LinearRegression, SyntheticKind::OverfitTrap] {
        for seed in [1, 2] {
            let t = lgt_transcript(kind, seed);
            let agents: Vec<_> = t.entries().iter().filter(|e| e.agent.is_some()).collect();
            assert!(!agents.is_empty());
            for e in agents {
                assert_eq!(e.parsed, Some(true), "{kind:?} {:?}: {:?}", e.step, e.response);
                assert_ne!(e.response.as_deref(), Some(FAILURE_SENTINEL));
            }
        }
    }
}

#[test]
fn scripted_replies_are_a_function_of_the_request() {
    let t = lgt_transcript(SyntheticKind::OverfitTrap, 3);
    let backend = ScriptedBackend::new(ScriptedRuleSet::default_rules());
    let config = BackendConfig::scripted();
    let mut distinct = BTreeSet::new();
    for e in t.entries().iter().filter(|e| e.agent.is_some()) {
        let request = GenerationRequest::new(SYSTEM_TEXT, e.request.clone().unwrap(), &config).unwrap();
        let a = backend.generate(&request);
        let b = backend.generate(&request);
        assert_eq!(a, b);
        assert_eq!(Some(a.text.clone()), e.response);
        distinct.insert(a.text);
    }
    assert!(distinct.len() > 3, "replies never vary: {distinct:?}");
}

#[test]
fn rule_sets_round_trip_through_json() {
    let rules = ScriptedRuleSet::default_rules();
    let json = serde_json::to_string(&rules).unwrap();
    let back: ScriptedRuleSet = serde_json::from_str(&json).unwrap();
    assert_eq!(back, rules);
    back.check().unwrap();
}

#[test]
fn http_backend_needs_endpoint_and_key() {
    let mut config = BackendConfig {
        kind: BackendKind::Http,
        api_key_env_name: "LGT_TEST_KEY_THAT_IS_NEVER_SET".into(),
        ..BackendConfig::default()
    };
    assert_eq!(config.build().err(), Some(BackendError::MissingEndpoint));
    config.endpoint_url = "http://127.0.0.1:9".into();
    assert_eq!(
        config.build().err(),
        Some(BackendError::MissingApiKey("LGT_TEST_KEY_THAT_IS_NEVER_SET".into()))
    );
}

struct Captured {
    head: String,
    body: serde_json::Value,
}

/// Serves `responses` (status, body) one connection each and reports what
/// it received.
fn serve(responses: Vec<(u16, String)>) -> (String, mpsc::Receiver<Captured>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for (status, body) in responses {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut head = String::new();
            let mut length = 0usize;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                head.push_str(&line);
            }
            let mut buf = vec![0; length];
            reader.read_exact(&mut buf).unwrap();
            tx.send(Captured {
                head,
                body: serde_json::from_slice(&buf).unwrap(),
            })
            .unwrap();
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
    });
    (format!("http://{addr}"), rx)
}

fn http_config() -> BackendConfig {
    BackendConfig {
        kind: BackendKind::Http,
        retry_backoff_ms: 1,
        timeout_ms: 5_000,
        ..BackendConfig::default()
    }
}

#[test]
fn server_errors_are_retried_then_give_the_sentinel() {
    let (url, rx) = serve(vec![(500, "{}".into()); 3]);
    let config = http_config();
    let backend = HttpBackend::new(&url, "secret".into(), &config);
    let request = GenerationRequest::new(SYSTEM_TEXT, "hello", &config).unwrap();
    let g = backend.generate(&request);
    assert_eq!(g.text, FAILURE_SENTINEL);
    assert_eq!(g.attempts, 3);
    assert!(g.is_failure());
    let seen: Vec<Captured> = rx.iter().take(3).collect();
    assert_eq!(seen.len(), 3);
    for c in &seen {
        assert!(c.head.starts_with("POST /chat/completions "), "{}", c.head);
        assert!(c.head.to_ascii_lowercase().contains("authorization: bearer secret"));
        assert_eq!(c.body["temperature"], 0.2);
        assert_eq!(c.body["messages"][1]["content"], "hello");
        assert_eq!(c.body["model"], config.model_name.as_str());
    }
}

#[test]
fn a_retry_can_recover() {
    let ok = r#"{"choices": [{"message": {"role": "assistant", "content": "{\"success\": true}"}}]}"#;
    let (url, _rx) = serve(vec![(503, "{}".into()), (200, ok.into())]);
    let config = http_config();
    let g = HttpBackend::new(&url, "k".into(), &config).generate(&GenerationRequest::new(SYSTEM_TEXT, "x", &config).unwrap());
    assert_eq!(g.text, r#"{"success": true}"#);
    assert_eq!(g.attempts, 2);
    assert!(!g.is_failure());
}

#[test]
fn client_errors_are_not_retried() {
    let (url, _rx) = serve(vec![(401, "{}".into())]);
    let config = http_config();
    let g = HttpBackend::new(&url, "k".into(), &config).generate(&GenerationRequest::new(SYSTEM_TEXT, "x", &config).unwrap());
    assert_eq!(g.text, FAILURE_SENTINEL);
    assert_eq!(g.attempts, 1);
}
