//! The plaintext HTTP-style message carried inside a packet.
//!
//! Framing is `start_line CRLF (header CRLF)* CRLF body`. The body is a raw
//! byte suffix: everything after the first double CRLF, with no transcoding,
//! so JSON and binary payloads travel unchanged.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum CodecError {
    #[error("illegal character in header or start line")]
    IllegalHeaderCharacter,
    #[error("missing header/body separator")]
    MalformedFraming,
    #[error("header line without a colon")]
    MalformedHeader,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InnerMessage {
    /// `METHOD path HTTP/1.1` for requests, `HTTP/1.1 200 OK` for responses.
    pub start_line: String,
    /// Order- and case-preserving; lookup is case-insensitive.
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl InnerMessage {
    pub fn request(method: &str, path: &str) -> Self {
        InnerMessage {
            start_line: format!("{method} {path} HTTP/1.1"),
            headers: Vec::new(),
            body: Vec::new(),
        }
    }

    pub fn response(status: u16, reason: &str) -> Self {
        InnerMessage {
            start_line: format!("HTTP/1.1 {status} {reason}"),
            headers: Vec::new(),
            body: Vec::new(),
        }
    }

    pub fn with_header(mut self, name: &str, value: &str) -> Self {
        self.headers.push((name.to_string(), value.to_string()));
        self
    }

    pub fn with_body(mut self, body: impl Into<Vec<u8>>) -> Self {
        self.body = body.into();
        self
    }

    pub fn is_response(&self) -> bool {
        self.start_line.starts_with("HTTP/")
    }

    /// Response status code, if this is a response with a numeric status.
    pub fn status(&self) -> Option<u16> {
        if !self.is_response() {
            return None;
        }
        self.start_line.split_whitespace().nth(1)?.parse().ok()
    }

    /// Request method and target, if this is a request line.
    pub fn method_and_path(&self) -> Option<(&str, &str)> {
        if self.is_response() {
            return None;
        }
        let mut it = self.start_line.split_whitespace();
        Some((it.next()?, it.next()?))
    }

    /// First header value with this name, case-insensitively.
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }

    pub fn encode(&self) -> Result<Vec<u8>, CodecError> {
        if self.start_line.is_empty() || contains_crlf(&self.start_line) {
            return Err(CodecError::IllegalHeaderCharacter);
        }
        let mut out = Vec::with_capacity(self.start_line.len() + self.body.len() + 64);
        out.extend_from_slice(self.start_line.as_bytes());
        out.extend_from_slice(b"\r\n");
        for (name, value) in &self.headers {
            if name.is_empty()
                || contains_crlf(name)
                || contains_crlf(value)
                || name.contains(':')
            {
                return Err(CodecError::IllegalHeaderCharacter);
            }
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(b": ");
            out.extend_from_slice(value.as_bytes());
            out.extend_from_slice(b"\r\n");
        }
        out.extend_from_slice(b"\r\n");
        out.extend_from_slice(&self.body);
        Ok(out)
    }

    /// Inverse of [`encode`](Self::encode). Only the first double CRLF splits
    /// headers from body; any later occurrences belong to the body.
    pub fn decode(raw: &[u8]) -> Result<Self, CodecError> {
        let sep = find_double_crlf(raw).ok_or(CodecError::MalformedFraming)?;
        let head = std::str::from_utf8(&raw[..sep]).map_err(|_| CodecError::MalformedHeader)?;
        let body = raw[sep + 4..].to_vec();
        let mut lines = head.split("\r\n");
        let start_line = lines.next().ok_or(CodecError::MalformedFraming)?.to_string();
        if start_line.is_empty() {
            return Err(CodecError::MalformedFraming);
        }
        let mut headers = Vec::new();
        for line in lines {
            let (name, value) = line.split_once(':').ok_or(CodecError::MalformedHeader)?;
            if name.is_empty() {
                return Err(CodecError::MalformedHeader);
            }
            headers.push((name.to_string(), value.trim_start_matches(' ').to_string()));
        }
        Ok(InnerMessage { start_line, headers, body })
    }
}

fn contains_crlf(s: &str) -> bool {
    s.contains('\r') || s.contains('\n')
}

fn find_double_crlf(raw: &[u8]) -> Option<usize> {
    raw.windows(4).position(|w| w == b"\r\n\r\n")
}
