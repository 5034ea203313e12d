//! Minimal blocking HTTP front for the server and the proxy.
//!
//! Adapts socket-level requests to [`OuterRequest`]/[`OuterResponse`] so the
//! same handlers run over the network and in-process.

use std::io;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use crate::server::{OuterRequest, OuterResponse};

pub type Handler = dyn Fn(&OuterRequest) -> OuterResponse + Send + Sync;

pub struct HttpHandle {
    port: u16,
    shutdown: Arc<AtomicBool>,
    join: Option<JoinHandle<()>>,
}

impl HttpHandle {
    pub fn port(&self) -> u16 {
        self.port
    }

    pub fn url(&self) -> String {
        format!("http://127.0.0.1:{}", self.port)
    }

    pub fn stop(mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        if let Some(join) = self.join.take() {
            let _ = join.join();
        }
    }
}

impl Drop for HttpHandle {
    fn drop(&mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        if let Some(join) = self.join.take() {
            let _ = join.join();
        }
    }
}

/// Bind `addr` (e.g. `127.0.0.1:0`) and serve until the handle is stopped.
pub fn spawn(addr: &str, handler: Arc<Handler>) -> io::Result<HttpHandle> {
    let server = tiny_http::Server::http(addr)
        .map_err(|err| io::Error::new(io::ErrorKind::AddrInUse, err.to_string()))?;
    let port = server.server_addr().to_ip().map(|a| a.port()).unwrap_or(0);
    let shutdown = Arc::new(AtomicBool::new(false));
    let flag = shutdown.clone();
    let join = std::thread::spawn(move || {
        while !flag.load(Ordering::SeqCst) {
            match server.recv_timeout(Duration::from_millis(50)) {
                Ok(Some(request)) => serve_one(request, &handler),
                Ok(None) => continue,
                Err(_) => break,
            }
        }
    });
    Ok(HttpHandle { port, shutdown, join: Some(join) })
}

fn serve_one(mut request: tiny_http::Request, handler: &Arc<Handler>) {
    let method = request.method().as_str().to_string();
    let path = request.url().to_string();
    let headers: Vec<(String, String)> = request
        .headers()
        .iter()
        .map(|h| (h.field.as_str().to_string(), h.value.as_str().to_string()))
        .collect();
    let mut body = Vec::new();
    if request.as_reader().read_to_end(&mut body).is_err() {
        let _ = request.respond(tiny_http::Response::empty(400));
        return;
    }
    let outer = OuterRequest { method, path, headers, body };
    let response = handler(&outer);

    let mut out = tiny_http::Response::from_data(response.body)
        .with_status_code(tiny_http::StatusCode(response.status));
    for (name, value) in &response.headers {
        if name.eq_ignore_ascii_case("Content-Length") {
            continue;
        }
        if let Ok(header) = tiny_http::Header::from_bytes(name.as_bytes(), value.as_bytes()) {
            out = out.with_header(header);
        }
    }
    let _ = request.respond(out);
}
