use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use ladder_core::corpus::Document;
use ladder_core::llm::{
    align_document, BackendKind, CompletionBackend, CompletionRequest, HttpChatBackend, LlmConfig, Prompt,
    PromptTemplate, ReplayStore, RequestError,
};
use ladder_core::{render_ladder, AlignOptions};
use serde_json::{json, Value};

#[derive(Debug, Clone)]
struct Seen {
    headers: Vec<(String, String)>,
    body: Value,
}

impl Seen {
    fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }
}

/// Serves one scripted (status, body) reply per connection, in order.
struct Server {
    url: String,
    seen: Arc<Mutex<Vec<Seen>>>,
    handle: Option<JoinHandle<()>>,
}

impl Server {
    fn start(script: Vec<(u16, String)>) -> Server {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
        let seen = Arc::new(Mutex::new(Vec::new()));
        let log = Arc::clone(&seen);
        let handle = std::thread::spawn(move || {
            for (status, reply) in script {
                let (stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut headers = Vec::new();
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                loop {
                    line.clear();
                    reader.read_line(&mut line).unwrap();
                    let trimmed = line.trim_end();
                    if trimmed.is_empty() {
                        break;
                    }
                    let (k, v) = trimmed.split_once(':').unwrap();
                    headers.push((k.trim().to_string(), v.trim().to_string()));
                }
                let len: usize = headers
                    .iter()
                    .find(|(k, _)| k.eq_ignore_ascii_case("content-length"))
                    .map(|(_, v)| v.parse().unwrap())
                    .unwrap_or(0);
                let mut body = vec![0; len];
                reader.read_exact(&mut body).unwrap();
                log.lock().unwrap().push(Seen {
                    headers,
                    body: serde_json::from_slice(&body).unwrap_or(Value::Null),
                });
                let mut stream = stream;
                write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
                    reply.len()
                )
                .unwrap();
                stream.flush().unwrap();
            }
        });
        Server {
            url,
            seen,
            handle: Some(handle),
        }
    }

    fn finish(mut self) -> Vec<Seen> {
        self.handle.take().unwrap().join().unwrap();
        self.seen.lock().unwrap().clone()
    }
}

fn chat(content: &str) -> String {
    json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string()
}

fn config(url: &str, key_var: &str) -> LlmConfig {
    LlmConfig {
        backend: BackendKind::HttpChat,
        endpoint_url: Some(url.to_string()),
        model_name: "test-model".into(),
        api_key_env: Some(key_var.to_string()),
        retry_backoff_base_ms: 1,
        timeout_secs: 10.0,
        max_retries: 2,
        ..LlmConfig::default()
    }
}

fn prompt() -> Prompt {
    Prompt {
        system: "sys".into(),
        user: "user".into(),
    }
}

fn request(p: &Prompt) -> CompletionRequest<'_> {
    CompletionRequest {
        pair_id: "p",
        chunk: 0,
        chunks: 1,
        prompt: p,
    }
}

#[test]
fn retries_server_error_then_succeeds() {
    std::env::set_var("LADDER_TEST_KEY_RETRY", "secret");
    let server = Server::start(vec![(500, "oops".into()), (200, chat("hello"))]);
    let backend = HttpChatBackend::new(&config(&server.url, "LADDER_TEST_KEY_RETRY")).unwrap();
    let p = prompt();
    assert_eq!(backend.complete(&request(&p)).unwrap(), "hello");

    let seen = server.finish();
    assert_eq!(seen.len(), 2);
    assert_eq!(seen[1].header("authorization"), Some("Bearer secret"));
    assert_eq!(seen[1].body["model"], "test-model");
    assert_eq!(seen[1].body["temperature"], 0.0);
    assert_eq!(seen[1].body["messages"][0]["content"], "sys");
    assert_eq!(seen[1].body["messages"][1]["role"], "user");
}

#[test]
fn rate_limit_exhausts_retries() {
    std::env::set_var("LADDER_TEST_KEY_429", "k");
    let server = Server::start(vec![(429, "slow down".into()); 3]);
    let backend = HttpChatBackend::new(&config(&server.url, "LADDER_TEST_KEY_429")).unwrap();
    let p = prompt();
    let err = backend.complete(&request(&p)).unwrap_err();
    match err {
        RequestError::TransportExhausted {
            last_status,
            attempts,
            ..
        } => {
            assert_eq!(last_status, Some(429));
            assert_eq!(attempts, 3);
        }
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(server.finish().len(), 3);
}

#[test]
fn client_error_is_not_retried() {
    std::env::set_var("LADDER_TEST_KEY_400", "k");
    let server = Server::start(vec![(400, "{\"error\":\"bad\"}".into())]);
    let backend = HttpChatBackend::new(&config(&server.url, "LADDER_TEST_KEY_400")).unwrap();
    let p = prompt();
    let err = backend.complete(&request(&p)).unwrap_err();
    assert!(matches!(err, RequestError::HttpStatus { status: 400, .. }), "{err:?}");
    assert_eq!(server.finish().len(), 1);
}

#[test]
fn custom_auth_header_without_scheme() {
    std::env::set_var("LADDER_TEST_KEY_HDR", "abc");
    let server = Server::start(vec![(200, chat("x"))]);
    let mut cfg = config(&server.url, "LADDER_TEST_KEY_HDR");
    cfg.auth_header = "x-api-key".into();
    cfg.auth_scheme = String::new();
    HttpChatBackend::new(&cfg).unwrap().complete(&request(&prompt())).unwrap();
    let seen = server.finish();
    assert_eq!(seen[0].header("x-api-key"), Some("abc"));
    assert_eq!(seen[0].header("authorization"), None);
}

#[test]
fn record_then_replay_aligns_identically() {
    std::env::set_var("LADDER_TEST_KEY_REC", "k");
    let reply = "```json\n{\"alignments\": [{\"src\": [0], \"tgt\": [0]}, {\"src\": [1], \"tgt\": [1, 2]}]}\n```";
    let server = Server::start(vec![(503, String::new()), (200, chat(reply))]);
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(&server.url, "LADDER_TEST_KEY_REC");
    cfg.record = true;
    cfg.replay_dir = Some(dir.path().to_path_buf());

    let src = Document::from_lines("d", "en", ["One.", "Two and three."], false).unwrap();
    let tgt = Document::from_lines("d", "fr", ["Un.", "Deux.", "Et trois."], false).unwrap();
    let template = PromptTemplate::default();
    let options = AlignOptions::default();

    let live = HttpChatBackend::new(&cfg).unwrap();
    let (ladder, report) = align_document("d", &src, &tgt, &template, &live, &cfg, &options).unwrap();
    assert_eq!(render_ladder(&ladder), "0:0\n1:1,2\n");
    assert!(report.is_gold_valid);
    assert_eq!(server.finish().len(), 2);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);

    let replay = ReplayStore::new(dir.path());
    let (again, _) = align_document("d", &src, &tgt, &template, &replay, &cfg, &options).unwrap();
    assert_eq!(again, ladder);
}

#[test]
fn missing_key_is_reported_before_any_request() {
    let cfg = config("http://127.0.0.1:9/none", "LADDER_TEST_KEY_UNSET_X");
    assert!(matches!(
        HttpChatBackend::new(&cfg),
        Err(RequestError::MissingApiKey(v)) if v == "LADDER_TEST_KEY_UNSET_X"
    ));
}
