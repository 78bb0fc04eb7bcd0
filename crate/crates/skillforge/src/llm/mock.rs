//! A minimal in-process chat-completions server backed by a scripted stub.
//!
//! Lets tests and examples exercise the real HTTP transport and record
//! cassettes without any external service: point a `live` or `record`
//! client at `base_url()` with any dummy key.

use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use super::stubs::{make_stub, ScriptedStub};
use super::RequestBody;

pub struct MockServer {
    addr: String,
    shutdown: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl MockServer {
    /// Bind an ephemeral local port and serve the named stub until drop.
    pub fn start(stub_name: &str) -> std::io::Result<MockServer> {
        let stub = make_stub(stub_name).ok_or_else(|| {
            std::io::Error::new(
                std::io::ErrorKind::InvalidInput,
                format!("unknown stub `{stub_name}`"),
            )
        })?;
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?.to_string();
        let shutdown = Arc::new(AtomicBool::new(false));
        let flag = shutdown.clone();
        let stub = Mutex::new(stub);
        let handle = std::thread::spawn(move || {
            for stream in listener.incoming() {
                if flag.load(Ordering::SeqCst) {
                    break;
                }
                if let Ok(stream) = stream {
                    let _ = handle_connection(stream, &stub);
                }
            }
        });
        Ok(MockServer {
            addr,
            shutdown,
            handle: Some(handle),
        })
    }

    /// Base URL for a ProviderConfig (the client appends
    /// `/chat/completions`).
    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        // Wake the accept loop.
        let _ = TcpStream::connect(&self.addr);
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}

fn handle_connection(
    mut stream: TcpStream,
    stub: &Mutex<Box<dyn ScriptedStub + Send>>,
) -> std::io::Result<()> {
    stream.set_read_timeout(Some(Duration::from_secs(10)))?;
    let mut buf = Vec::new();
    let mut chunk = [0u8; 4096];
    let header_end = loop {
        let n = stream.read(&mut chunk)?;
        if n == 0 {
            return Ok(());
        }
        buf.extend_from_slice(&chunk[..n]);
        if let Some(pos) = find_header_end(&buf) {
            break pos;
        }
        if buf.len() > 1 << 20 {
            return Ok(());
        }
    };
    let headers = String::from_utf8_lossy(&buf[..header_end]).to_string();
    let content_length = headers
        .lines()
        .find_map(|l| {
            let (name, value) = l.split_once(':')?;
            if name.trim().eq_ignore_ascii_case("content-length") {
                value.trim().parse::<usize>().ok()
            } else {
                None
            }
        })
        .unwrap_or(0);
    let body_start = header_end + 4;
    while buf.len() < body_start + content_length {
        let n = stream.read(&mut chunk)?;
        if n == 0 {
            break;
        }
        buf.extend_from_slice(&chunk[..n]);
    }
    let body = &buf[body_start..(body_start + content_length).min(buf.len())];

    let (status, response_body) = match serde_json::from_slice::<RequestBody>(body) {
        Ok(request) => {
            let content = stub.lock().expect("stub lock").respond(&request);
            let reply = serde_json::json!({
                "choices": [{ "message": { "role": "assistant", "content": content } }]
            });
            ("200 OK", reply.to_string())
        }
        Err(e) => (
            "400 Bad Request",
            serde_json::json!({ "error": e.to_string() }).to_string(),
        ),
    };
    let response = format!(
        "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{response_body}",
        response_body.len()
    );
    stream.write_all(response.as_bytes())?;
    stream.flush()
}

fn find_header_end(buf: &[u8]) -> Option<usize> {
    buf.windows(4).position(|w| w == b"\r\n\r\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{ChatMessage, LlmClient, Mode, ProviderConfig};

    #[test]
    fn live_client_round_trips_through_the_mock() {
        let server = MockServer::start("verdict_unparseable").unwrap();
        std::env::set_var("MOCK_TEST_KEY", "dummy");
        let mut config = ProviderConfig::stub("unused");
        config.mode = Mode::Live;
        config.base_url = Some(server.base_url());
        config.api_key_env = "MOCK_TEST_KEY".into();
        let mut client = LlmClient::new(config).unwrap();
        let response = client
            .complete(&[
                ChatMessage::system(crate::llm::prompts::REVIEW_SYSTEM),
                ChatMessage::user("TASK\nwhatever"),
            ])
            .unwrap();
        assert!(response.contains("looks good to me"));
        assert_eq!(client.calls(), 1);
    }
}
