//! Demo inner API: a small test surface behind the tunnel middleware.
//!
//! Three routes: `/echo` returns the request body verbatim, `/cookies`
//! reflects cookies and query parameters as JSON, `/upload` inspects a
//! multipart or urlencoded form.

use serde_json::json;
use sha2::{Digest, Sha256};

use super::{InnerHandler, InnerRequest};
use crate::packet::InnerMessage;
use crate::wire::{ErrorCode, WireError};

pub struct DemoApi;

impl InnerHandler for DemoApi {
    fn handle(&self, request: &InnerRequest) -> InnerMessage {
        match request.path.as_str() {
            "/echo" => echo(request),
            "/cookies" => cookies(request),
            "/upload" => upload(request),
            _ => InnerMessage::response(404, "Not Found")
                .with_header("Content-Type", "application/json")
                .with_body(WireError::new(ErrorCode::NotFound).to_json()),
        }
    }
}

fn echo(request: &InnerRequest) -> InnerMessage {
    let mut response = InnerMessage::response(200, "OK")
        .with_header("X-Echo-Method", &request.method)
        .with_body(request.body.clone());
    if let Some(ct) = request.headers.iter().find(|(n, _)| n.eq_ignore_ascii_case("Content-Type"))
    {
        response = response.with_header("Content-Type", &ct.1);
    }
    response
}

fn cookies(request: &InnerRequest) -> InnerMessage {
    let cookie_list: Vec<_> =
        request.cookies.iter().map(|e| json!([e.name, e.value])).collect();
    let query: Vec<_> = request.query_params.iter().map(|(k, v)| json!([k, v])).collect();
    let body = json!({ "cookies": cookie_list, "query": query });
    let mut response = InnerMessage::response(200, "OK")
        .with_header("Content-Type", "application/json")
        .with_body(serde_json::to_vec(&body).expect("serializable"));
    // reflect every received cookie back
    for entry in request.cookies.iter() {
        response = response
            .with_header("Set-Cookie", &format!("echo-{}={}", entry.name, entry.value));
    }
    response
}

fn upload(request: &InnerRequest) -> InnerMessage {
    let parts: Vec<_> = request
        .form_fields
        .iter()
        .map(|(name, value)| {
            json!({ "name": name, "value": value })
        })
        .chain(request.files.iter().map(|part| {
            json!({
                "name": part.name,
                "filename": part.filename,
                "content_type": part.content_type,
                "len": part.body.len(),
                "sha256": hex::encode(Sha256::digest(&part.body)),
            })
        }))
        .collect();
    InnerMessage::response(200, "OK")
        .with_header("Content-Type", "application/json")
        .with_body(serde_json::to_vec(&json!({ "parts": parts })).expect("serializable"))
}
