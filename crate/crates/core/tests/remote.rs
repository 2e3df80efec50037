//! The remote client against a local fake OpenAI-compatible server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Once};
use std::thread;
use std::time::Duration;

use serde_json::{json, Value};
use token_bias::corpus::Corpus;
use token_bias::generator::{Generator, StubCompleter};
use token_bias::model_client::{AgentSpec, ClientError, EndpointConfig, RemoteClient, RetryPolicy};
use token_bias::perturbation::{build_pairs, Hypothesis, PairOptions};
use token_bias::prompting::Message;
use token_bias::runner::{run_experiment, ExperimentPlan};

const KEY_VAR: &str = "TOKEN_BIAS_TEST_KEY";

fn set_key() {
    static ONCE: Once = Once::new();
    ONCE.call_once(|| std::env::set_var(KEY_VAR, "sk-test"));
}

type Behaviour = dyn Fn(usize, &Value) -> (u16, String) + Send + Sync;

struct FakeServer {
    url: String,
    requests: Arc<AtomicUsize>,
    max_in_flight: Arc<AtomicUsize>,
}

fn completion(text: &str) -> String {
    json!({"choices": [{"message": {"role": "assistant", "content": text}}]}).to_string()
}

fn read_request(stream: &mut impl Read) -> Option<Value> {
    let mut reader = BufReader::new(stream);
    let mut length = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).ok()? == 0 {
            return None;
        }
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            if name.eq_ignore_ascii_case("content-length") {
                length = value.trim().parse().ok()?;
            }
            if name.eq_ignore_ascii_case("authorization") {
                assert_eq!(value.trim(), "Bearer sk-test");
            }
        }
    }
    let mut body = vec![0; length];
    reader.read_exact(&mut body).ok()?;
    serde_json::from_slice(&body).ok()
}

impl FakeServer {
    fn start(delay: Duration, behaviour: impl Fn(usize, &Value) -> (u16, String) + Send + Sync + 'static) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1", listener.local_addr().unwrap());
        let requests = Arc::new(AtomicUsize::new(0));
        let in_flight = Arc::new(AtomicUsize::new(0));
        let max_in_flight = Arc::new(AtomicUsize::new(0));
        let behaviour: Arc<Behaviour> = Arc::new(behaviour);
        let (r, f, m) = (requests.clone(), in_flight, max_in_flight.clone());
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { continue };
                let (r, f, m, behaviour) = (r.clone(), f.clone(), m.clone(), behaviour.clone());
                thread::spawn(move || {
                    let Some(body) = read_request(&mut stream) else { return };
                    let now = f.fetch_add(1, Ordering::SeqCst) + 1;
                    m.fetch_max(now, Ordering::SeqCst);
                    let n = r.fetch_add(1, Ordering::SeqCst);
                    thread::sleep(delay);
                    let (status, text) = behaviour(n, &body);
                    f.fetch_sub(1, Ordering::SeqCst);
                    let reply = format!(
                        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
                        text.len()
                    );
                    let _ = stream.write_all(reply.as_bytes());
                });
            }
        });
        Self { url, requests, max_in_flight }
    }

    fn requests(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }
}

fn config(server: &FakeServer, cache: Option<&std::path::Path>) -> EndpointConfig {
    EndpointConfig {
        base_url: server.url.clone(),
        model_name: "fake-model".into(),
        auth_env_var: KEY_VAR.into(),
        retry: RetryPolicy { max_attempts: 3, backoff_base_ms: 5, backoff_max_ms: 20 },
        cache_dir: cache.map(|p| p.to_path_buf()),
        timeout_secs: 5.0,
        ..EndpointConfig::default()
    }
}

fn ask(client: &RemoteClient, text: &str) -> Result<token_bias::model_client::AgentResponse, ClientError> {
    client.query_messages(&[Message::user(text)], "")
}

#[test]
fn transient_errors_are_retried() {
    set_key();
    let server = FakeServer::start(Duration::ZERO, |n, _| if n < 2 { (429, "slow down".into()) } else { (200, completion("Yes.")) });
    let client = RemoteClient::new(config(&server, None)).unwrap();
    let reply = ask(&client, "hello").unwrap();
    assert_eq!((reply.text.as_str(), reply.attempt_count, reply.from_cache), ("Yes.", 3, false));
    assert_eq!(server.requests(), 3);
}

#[test]
fn retries_are_bounded() {
    set_key();
    let server = FakeServer::start(Duration::ZERO, |_, _| (503, "down".into()));
    let client = RemoteClient::new(config(&server, None)).unwrap();
    match ask(&client, "hello") {
        Err(ClientError::RetriesExhausted { attempts: 3, .. }) => {}
        other => panic!("{other:?}"),
    }
    assert_eq!(server.requests(), 3);
}

#[test]
fn client_errors_are_not_retried() {
    set_key();
    let server = FakeServer::start(Duration::ZERO, |_, _| (400, "bad request".into()));
    let client = RemoteClient::new(config(&server, None)).unwrap();
    assert!(matches!(ask(&client, "hello"), Err(ClientError::Http { status: 400, .. })));
    assert_eq!(server.requests(), 1);
}

#[test]
fn malformed_body_is_reported() {
    set_key();
    let server = FakeServer::start(Duration::ZERO, |_, _| (200, "{\"nope\": 1}".into()));
    let client = RemoteClient::new(config(&server, None)).unwrap();
    assert!(matches!(ask(&client, "hello"), Err(ClientError::MalformedResponse(_))));
}

#[test]
fn missing_key_fails_before_any_request() {
    let server = FakeServer::start(Duration::ZERO, |_, _| (200, completion("Yes.")));
    let mut c = config(&server, None);
    c.auth_env_var = "TOKEN_BIAS_SURELY_UNSET_VARIABLE".into();
    let client = RemoteClient::new(c).unwrap();
    assert!(matches!(ask(&client, "hello"), Err(ClientError::AuthMissing(_))));
    assert_eq!(server.requests(), 0);
}

#[test]
fn cache_replays_offline() {
    set_key();
    let dir = tempfile::tempdir().unwrap();
    let server = FakeServer::start(Duration::ZERO, |n, body| {
        assert_eq!(body["model"], "fake-model");
        assert_eq!(body["temperature"], 0.0);
        (200, completion(&format!("reply {n}")))
    });
    let client = RemoteClient::new(config(&server, Some(dir.path()))).unwrap();
    let first = ask(&client, "question one").unwrap();
    let again = ask(&client, "question one").unwrap();
    assert_eq!(first.text, again.text);
    assert!(again.from_cache);
    assert_eq!(server.requests(), 1);

    let offline = RemoteClient::new(config(&server, Some(dir.path()))).unwrap().cache_only();
    assert_eq!(ask(&offline, "question one").unwrap().text, first.text);
    assert!(matches!(ask(&offline, "question two"), Err(ClientError::OfflineMiss(_))));
    assert_eq!(server.requests(), 1);
}

#[test]
fn in_flight_requests_respect_parallelism() {
    set_key();
    let server = FakeServer::start(Duration::from_millis(40), |_, _| (200, completion("No.")));
    let mut c = config(&server, None);
    c.parallelism = 3;
    let client = RemoteClient::new(c).unwrap();
    thread::scope(|s| {
        for i in 0..12 {
            let client = &client;
            s.spawn(move || ask(client, &format!("q{i}")).unwrap());
        }
    });
    assert_eq!(server.requests(), 12);
    let peak = server.max_in_flight.load(Ordering::SeqCst);
    assert!((1..=3).contains(&peak), "peak {peak}");
}

#[test]
fn experiment_against_fake_endpoint_resumes_from_cache() {
    set_key();
    let dir = tempfile::tempdir().unwrap();
    // Answers (a) to every conjunction question.
    let server = FakeServer::start(Duration::from_millis(2), |_, _| (200, completion("The answer is (a).")));
    let mut endpoint = config(&server, Some(dir.path()));
    endpoint.parallelism = 4;
    let corpus = Corpus::bundled();
    let completer = StubCompleter::new(corpus.clone());
    let pairs = build_pairs(Hypothesis::H1, 12, 3, &Generator::new(&corpus, &completer), &PairOptions::default()).unwrap();
    let plan = ExperimentPlan {
        n: 12,
        agents: vec![AgentSpec::Remote(endpoint)],
        ..ExperimentPlan::for_hypothesis(Hypothesis::H1)
    };
    let live = run_experiment(&plan, pairs.clone(), false).unwrap();
    let queried = server.requests();
    assert!(queried > 0 && queried <= 12 * 2 * plan.methods.len());
    assert!(live.records.iter().all(|r| r.error.is_none()));
    assert!(server.max_in_flight.load(Ordering::SeqCst) <= 4);

    let replay = run_experiment(&plan, pairs, true).unwrap();
    assert_eq!(server.requests(), queried);
    assert_eq!(replay.rows, live.rows);
    for (a, b) in live.records.iter().zip(&replay.records) {
        assert_eq!((&a.grade, &a.response_text), (&b.grade, &b.response_text));
        assert!(b.from_cache);
    }
}
