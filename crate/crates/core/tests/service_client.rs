//! The scoring-service client against an in-process HTTP stub.

use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use rec_audit::scoring::{Scorer, ScoringError, ServiceClient, ServiceConfig};

/// Replies to each request with one uniform row per text and records bodies.
fn echo_service() -> (String, Arc<Mutex<Vec<serde_json::Value>>>) {
    let server = tiny_http::Server::http("127.0.0.1:0").unwrap();
    let url = format!("http://{}/", server.server_addr().to_ip().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = seen.clone();
    thread::spawn(move || {
        for mut req in server.incoming_requests() {
            let mut body = String::new();
            req.as_reader().read_to_string(&mut body).unwrap();
            let v: serde_json::Value = serde_json::from_str(&body).unwrap();
            let n = v["texts"].as_array().unwrap().len();
            log.lock().unwrap().push(v);
            let reply = serde_json::json!({
                "emotions": vec![vec![1.0 / 7.0; 7]; n],
                "toxicity": vec![0.25; n],
            });
            let _ = req.respond(tiny_http::Response::from_string(reply.to_string()));
        }
    });
    (url, seen)
}

fn config(url: &str) -> ServiceConfig {
    ServiceConfig {
        max_batch: 4,
        backoff: Duration::from_millis(1),
        ..ServiceConfig::new(url)
    }
}

#[test]
fn batches_are_split_and_reassembled_in_order() {
    let (url, seen) = echo_service();
    let client = ServiceClient::new(config(&url));
    let texts: Vec<String> = (0..10).map(|i| format!("text {i}")).collect();
    let out = client.score_batch(&texts).unwrap();
    assert_eq!(out.len(), 10);
    assert!(out
        .iter()
        .all(|(e, t)| (e.joy - 1.0 / 7.0).abs() < 1e-12 && t.toxicity == 0.25));
    let mut sent: Vec<String> = seen
        .lock()
        .unwrap()
        .iter()
        .flat_map(|v| {
            v["texts"]
                .as_array()
                .unwrap()
                .iter()
                .map(|t| t.as_str().unwrap().to_string())
                .collect::<Vec<_>>()
        })
        .collect();
    assert_eq!(seen.lock().unwrap().len(), 3);
    sent.sort();
    let mut want = texts.clone();
    want.sort();
    assert_eq!(sent, want);
}

#[test]
fn oversized_single_request_is_refused() {
    let client = ServiceClient::new(config("http://127.0.0.1:9/"));
    let texts = vec![String::new(); 5];
    assert!(matches!(
        client.score_via_service(&texts),
        Err(ScoringError::BatchTooLarge { got: 5, max: 4 })
    ));
}

#[test]
fn unreachable_endpoint_gives_up_after_three_attempts() {
    // Bind then drop to get a port nobody listens on.
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let client = ServiceClient::new(config(&format!("http://127.0.0.1:{port}/")));
    let res = client.score_via_service(&["x".to_string()]);
    assert!(
        matches!(res, Err(ScoringError::ServiceUnavailable { attempts: 3, .. })),
        "{res:?}"
    );
}
