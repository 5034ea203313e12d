//! Cookie header parsing per RFC 6265.
//!
//! `parse_cookie_header` implements the subsection 5.4 cookie-string split:
//! pairs separated by `;`, OWS trimmed, pairs without `=` dropped. Parsing is
//! tolerant and never fails.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CookieEntry {
    pub name: String,
    pub value: String,
    /// Set-Cookie attributes (`Path`, `Secure`, ...); empty for Cookie headers.
    pub attributes: Vec<(String, Option<String>)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CookieJar {
    entries: Vec<CookieEntry>,
}

impl CookieJar {
    pub fn new() -> Self {
        CookieJar::default()
    }

    pub fn push(&mut self, name: &str, value: &str) {
        self.entries.push(CookieEntry {
            name: name.to_string(),
            value: value.to_string(),
            attributes: Vec::new(),
        });
    }

    /// First-match-wins lookup; duplicate names keep insertion order.
    pub fn get(&self, name: &str) -> Option<&str> {
        self.entries.iter().find(|e| e.name == name).map(|e| e.value.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = &CookieEntry> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// RFC 6265 §5.4 serialization: `name=value` pairs joined by `"; "`.
    pub fn serialize(&self) -> String {
        self.entries
            .iter()
            .map(|e| format!("{}={}", e.name, e.value))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

impl FromIterator<(String, String)> for CookieJar {
    fn from_iter<I: IntoIterator<Item = (String, String)>>(iter: I) -> Self {
        let mut jar = CookieJar::new();
        for (name, value) in iter {
            jar.push(&name, &value);
        }
        jar
    }
}

/// Parse a `Cookie` header value. Malformed pairs are dropped, never fatal.
pub fn parse_cookie_header(value: &str) -> CookieJar {
    let mut jar = CookieJar::new();
    for piece in value.split(';') {
        let piece = piece.trim_matches(|c| c == ' ' || c == '\t');
        let Some((name, val)) = piece.split_once('=') else {
            continue;
        };
        let name = name.trim_matches(|c| c == ' ' || c == '\t');
        let val = val.trim_matches(|c| c == ' ' || c == '\t');
        if name.is_empty() {
            continue;
        }
        jar.push(name, val);
    }
    jar
}

/// Parse one `Set-Cookie` header value (RFC 6265 §5.2): the first `name=value`
/// pair, then attributes. Returns `None` when the name is missing.
pub fn parse_set_cookie(value: &str) -> Option<CookieEntry> {
    let mut pieces = value.split(';');
    let first = pieces.next()?;
    let (name, val) = first.split_once('=')?;
    let name = name.trim_matches(|c| c == ' ' || c == '\t');
    if name.is_empty() {
        return None;
    }
    let mut attributes = Vec::new();
    for attr in pieces {
        let attr = attr.trim_matches(|c| c == ' ' || c == '\t');
        if attr.is_empty() {
            continue;
        }
        match attr.split_once('=') {
            Some((an, av)) => attributes.push((an.trim().to_string(), Some(av.trim().to_string()))),
            None => attributes.push((attr.to_string(), None)),
        }
    }
    Some(CookieEntry {
        name: name.to_string(),
        value: val.trim_matches(|c| c == ' ' || c == '\t').to_string(),
        attributes,
    })
}
