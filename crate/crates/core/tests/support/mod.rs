//! A minimal local chat-completion endpoint for tests.

#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::Arc;
use std::thread;

use serde_json::{json, Value};

/// What the stub sends back for one request.
pub enum Reply {
    /// A well-formed completion carrying this text.
    Text(String),
    /// A bare status code with an empty JSON object body.
    Status(u16),
    /// A 200 with this raw JSON body.
    Raw(Value),
}

type Handler = dyn Fn(&str, &Value) -> Reply + Send + Sync;

/// Serves `/…/chat/completions` on an ephemeral port until the process
/// exits. The handler receives the request path and JSON body. Returns the
/// base URL.
pub fn serve(handler: impl Fn(&str, &Value) -> Reply + Send + Sync + 'static) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").expect("bind stub");
    let addr = listener.local_addr().unwrap();
    let handler: Arc<Handler> = Arc::new(handler);
    thread::spawn(move || {
        for stream in listener.incoming().flatten() {
            let handler = Arc::clone(&handler);
            thread::spawn(move || {
                let _ = handle(stream, &*handler);
            });
        }
    });
    format!("http://{addr}/v1")
}

fn handle(stream: TcpStream, handler: &Handler) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    let path = request_line.split_whitespace().nth(1).unwrap_or("").to_string();
    let mut length = 0usize;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line)?;
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            if name.eq_ignore_ascii_case("content-length") {
                length = value.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0; length];
    reader.read_exact(&mut body)?;
    let request: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
    let (status, payload) = match handler(&path, &request) {
        Reply::Text(text) => (
            200,
            json!({"choices": [{"index": 0, "message": {"role": "assistant", "content": text}}]}),
        ),
        Reply::Status(code) => (code, json!({})),
        Reply::Raw(value) => (200, value),
    };
    let payload = payload.to_string();
    let mut stream = stream;
    write!(
        stream,
        "HTTP/1.1 {status} Stub\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
        payload.len()
    )?;
    stream.flush()
}

/// Number of user messages in a chat request.
pub fn user_turns(request: &Value) -> usize {
    request["messages"]
        .as_array()
        .map_or(0, |m| m.iter().filter(|x| x["role"] == "user").count())
}
