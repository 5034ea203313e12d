//! Form body parsing: `multipart/form-data` (RFC 2388 framing) and
//! `application/x-www-form-urlencoded`.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum MultipartError {
    #[error("content type carries no boundary parameter")]
    MissingBoundary,
    #[error("multipart body missing closing boundary")]
    UnterminatedPart,
    #[error("malformed multipart part")]
    MalformedPart,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormPart {
    pub name: String,
    pub filename: Option<String>,
    pub content_type: Option<String>,
    pub body: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultipartForm {
    pub boundary: String,
    pub parts: Vec<FormPart>,
}

impl MultipartForm {
    /// Re-serialize with the stored boundary. Parsing the result yields an
    /// equivalent part list.
    pub fn serialize(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for part in &self.parts {
            out.extend_from_slice(b"--");
            out.extend_from_slice(self.boundary.as_bytes());
            out.extend_from_slice(b"\r\n");
            let mut disp = format!("form-data; name=\"{}\"", part.name);
            if let Some(filename) = &part.filename {
                disp.push_str(&format!("; filename=\"{filename}\""));
            }
            out.extend_from_slice(format!("Content-Disposition: {disp}\r\n").as_bytes());
            if let Some(ct) = &part.content_type {
                out.extend_from_slice(format!("Content-Type: {ct}\r\n").as_bytes());
            }
            out.extend_from_slice(b"\r\n");
            out.extend_from_slice(&part.body);
            out.extend_from_slice(b"\r\n");
        }
        out.extend_from_slice(b"--");
        out.extend_from_slice(self.boundary.as_bytes());
        out.extend_from_slice(b"--\r\n");
        out
    }
}

/// Parse a form body according to its content type.
///
/// `multipart/form-data` requires a boundary parameter; urlencoded bodies
/// decode to one part per `name=value` pair.
pub fn parse_multipart(body: &[u8], content_type: &str) -> Result<MultipartForm, MultipartError> {
    let ct_lower = content_type.to_ascii_lowercase();
    if ct_lower.starts_with("application/x-www-form-urlencoded") {
        let parts = parse_urlencoded(body)
            .into_iter()
            .map(|(name, value)| FormPart {
                name,
                filename: None,
                content_type: None,
                body: value.into_bytes(),
            })
            .collect();
        return Ok(MultipartForm { boundary: String::new(), parts });
    }
    let boundary = boundary_param(content_type).ok_or(MultipartError::MissingBoundary)?;
    parse_multipart_body(body, &boundary)
}

fn boundary_param(content_type: &str) -> Option<String> {
    for param in content_type.split(';').skip(1) {
        let (name, value) = param.split_once('=')?;
        if name.trim().eq_ignore_ascii_case("boundary") {
            let value = value.trim();
            let value = value.strip_prefix('"').and_then(|v| v.strip_suffix('"')).unwrap_or(value);
            if value.is_empty() {
                return None;
            }
            return Some(value.to_string());
        }
    }
    None
}

fn parse_multipart_body(body: &[u8], boundary: &str) -> Result<MultipartForm, MultipartError> {
    let delimiter = format!("--{boundary}");
    let delim = delimiter.as_bytes();
    let mut parts = Vec::new();

    // Skip any preamble before the first delimiter.
    let mut pos = find(body, delim, 0).ok_or(MultipartError::UnterminatedPart)?;
    loop {
        pos += delim.len();
        if body[pos..].starts_with(b"--") {
            // Closing delimiter.
            return Ok(MultipartForm { boundary: boundary.to_string(), parts });
        }
        // Transport padding then CRLF.
        let after = skip_ws(&body[pos..]);
        let rest = &body[pos + after..];
        if !rest.starts_with(b"\r\n") {
            return Err(MultipartError::MalformedPart);
        }
        let part_start = pos + after + 2;
        // Part content runs until CRLF followed by the next delimiter.
        let mut search = part_start;
        let part_end = loop {
            let hit = find(body, delim, search).ok_or(MultipartError::UnterminatedPart)?;
            if hit >= 2 && &body[hit - 2..hit] == b"\r\n" {
                break hit - 2;
            }
            search = hit + delim.len();
        };
        parts.push(parse_part(&body[part_start..part_end])?);
        pos = part_end + 2;
    }
}

fn parse_part(raw: &[u8]) -> Result<FormPart, MultipartError> {
    let sep = raw
        .windows(4)
        .position(|w| w == b"\r\n\r\n")
        .map(|i| (i, 4))
        .or_else(|| if raw.starts_with(b"\r\n") { Some((0, 2)) } else { None })
        .ok_or(MultipartError::MalformedPart)?;
    let head =
        std::str::from_utf8(&raw[..sep.0]).map_err(|_| MultipartError::MalformedPart)?;
    let body = raw[sep.0 + sep.1..].to_vec();

    let mut name = None;
    let mut filename = None;
    let mut content_type = None;
    for line in head.split("\r\n").filter(|l| !l.is_empty()) {
        let (hname, hvalue) = line.split_once(':').ok_or(MultipartError::MalformedPart)?;
        let hvalue = hvalue.trim();
        if hname.eq_ignore_ascii_case("content-disposition") {
            for param in hvalue.split(';').skip(1) {
                let Some((pname, pvalue)) = param.split_once('=') else { continue };
                let pvalue = pvalue.trim();
                let pvalue =
                    pvalue.strip_prefix('"').and_then(|v| v.strip_suffix('"')).unwrap_or(pvalue);
                match pname.trim().to_ascii_lowercase().as_str() {
                    "name" => name = Some(pvalue.to_string()),
                    "filename" => filename = Some(pvalue.to_string()),
                    _ => {}
                }
            }
        } else if hname.eq_ignore_ascii_case("content-type") {
            content_type = Some(hvalue.to_string());
        }
    }
    Ok(FormPart {
        name: name.ok_or(MultipartError::MalformedPart)?,
        filename,
        content_type,
        body,
    })
}

/// Decode `a=1&b=%20` pairs with percent-decoding; `+` decodes to space.
pub fn parse_urlencoded(body: &[u8]) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for piece in body.split(|&b| b == b'&') {
        if piece.is_empty() {
            continue;
        }
        let (name, value) = match piece.iter().position(|&b| b == b'=') {
            Some(i) => (&piece[..i], &piece[i + 1..]),
            None => (piece, &[][..]),
        };
        out.push((percent_decode(name), percent_decode(value)));
    }
    out
}

fn percent_decode(raw: &[u8]) -> String {
    let mut bytes = Vec::with_capacity(raw.len());
    let mut i = 0;
    while i < raw.len() {
        match raw[i] {
            b'+' => bytes.push(b' '),
            b'%' => {
                if let (Some(hi), Some(lo)) = (hex_val(raw.get(i + 1)), hex_val(raw.get(i + 2))) {
                    bytes.push(hi << 4 | lo);
                    i += 2;
                } else {
                    bytes.push(b'%');
                }
            }
            other => bytes.push(other),
        }
        i += 1;
    }
    String::from_utf8_lossy(&bytes).into_owned()
}

fn hex_val(b: Option<&u8>) -> Option<u8> {
    match b? {
        b @ b'0'..=b'9' => Some(b - b'0'),
        b @ b'a'..=b'f' => Some(b - b'a' + 10),
        b @ b'A'..=b'F' => Some(b - b'A' + 10),
        _ => None,
    }
}

fn find(haystack: &[u8], needle: &[u8], from: usize) -> Option<usize> {
    if from > haystack.len() {
        return None;
    }
    haystack[from..]
        .windows(needle.len())
        .position(|w| w == needle)
        .map(|i| i + from)
}

fn skip_ws(raw: &[u8]) -> usize {
    raw.iter().take_while(|&&b| b == b' ' || b == b'\t').count()
}
