//! Tunnel packet framing.
//!
//! A packet travels as an HTTP POST with the session UID in a cleartext
//! header and a binary body of exactly `iv || ciphertext || tag`
//! (16 + n + 12 bytes). The sealed section carries a timestamp, a nonce, and
//! any cookies as reserved header lines prepended to the inner HTTP-style
//! message.

pub mod cookie;
pub mod inner;
pub mod multipart;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use rand::{CryptoRng, RngCore};
use thiserror::Error;

use crate::crypto::{aead, SessionKey};
pub use cookie::{parse_cookie_header, parse_set_cookie, CookieEntry, CookieJar};
pub use inner::{CodecError, InnerMessage};
pub use multipart::{parse_multipart, parse_urlencoded, FormPart, MultipartError, MultipartForm};

pub const UID_LEN: usize = 16;
pub const NONCE_LEN: usize = 16;

/// Seconds a packet is allowed to reach the server.
pub const REPLAY_WINDOW_SECS: u64 = 120;
/// Tolerated clock skew on the future side.
pub const DEFAULT_FUTURE_SKEW_SECS: u64 = 5;

/// Cleartext transport header carrying the session UID (32 hex chars).
pub const UID_HEADER: &str = "X-Tunnel-UID";
/// Reserved sealed headers.
pub const TIMESTAMP_HEADER: &str = "X-Tunnel-Timestamp";
pub const NONCE_HEADER: &str = "X-Tunnel-Nonce";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PacketError {
    #[error("packet body shorter than iv + tag")]
    Truncated,
    #[error("malformed session uid")]
    BadUid,
}

/// Errors from [`open_envelope`], each mapped to a distinct client-visible
/// error code.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum OpenError {
    #[error("packet authentication failed")]
    AuthenticationFailure,
    #[error("packet older than the replay window")]
    StalePacket,
    #[error("packet timestamp beyond the allowed skew")]
    FutureTimestamp,
    #[error("nonce already seen")]
    ReplayDetected,
    #[error("sealed section malformed: {0}")]
    Malformed(CodecError),
    #[error("sealed section missing reserved header {0}")]
    MissingEnvelopeHeader(&'static str),
}

/// The wire unit: cleartext UID plus the sealed body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TunnelPacket {
    pub uid: [u8; UID_LEN],
    pub iv: [u8; aead::IV_LEN],
    pub ciphertext: Vec<u8>,
    pub tag: [u8; aead::TAG_LEN],
}

impl TunnelPacket {
    /// Serialize the encrypted body: `iv || ciphertext || tag`.
    pub fn encode_body(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(aead::IV_LEN + self.ciphertext.len() + aead::TAG_LEN);
        out.extend_from_slice(&self.iv);
        out.extend_from_slice(&self.ciphertext);
        out.extend_from_slice(&self.tag);
        out
    }

    pub fn decode_body(uid: [u8; UID_LEN], body: &[u8]) -> Result<Self, PacketError> {
        if body.len() < aead::IV_LEN + aead::TAG_LEN {
            return Err(PacketError::Truncated);
        }
        let (iv, rest) = body.split_at(aead::IV_LEN);
        let (ciphertext, tag) = rest.split_at(rest.len() - aead::TAG_LEN);
        Ok(TunnelPacket {
            uid,
            iv: iv.try_into().expect("fixed length"),
            ciphertext: ciphertext.to_vec(),
            tag: tag.try_into().expect("fixed length"),
        })
    }

    pub fn uid_hex(&self) -> String {
        hex::encode(self.uid)
    }

    pub fn parse_uid(hex_uid: &str) -> Result<[u8; UID_LEN], PacketError> {
        let bytes = hex::decode(hex_uid).map_err(|_| PacketError::BadUid)?;
        bytes.try_into().map_err(|_| PacketError::BadUid)
    }
}

/// The plaintext content of a packet before sealing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SealedEnvelope {
    /// Whole seconds since the Unix epoch, set by the sender's clock.
    pub timestamp: u64,
    pub nonce: [u8; NONCE_LEN],
    /// Cookie pairs carried in the sealed section.
    pub cookies: Vec<(String, String)>,
    pub inner: InnerMessage,
}

impl SealedEnvelope {
    pub fn new(timestamp: u64, nonce: [u8; NONCE_LEN], inner: InnerMessage) -> Self {
        SealedEnvelope { timestamp, nonce, cookies: Vec::new(), inner }
    }

    fn encode(&self) -> Result<Vec<u8>, CodecError> {
        let mut headers = vec![
            (TIMESTAMP_HEADER.to_string(), self.timestamp.to_string()),
            (NONCE_HEADER.to_string(), BASE64.encode(self.nonce)),
        ];
        if !self.cookies.is_empty() {
            if self.inner.is_response() {
                for (name, value) in &self.cookies {
                    headers.push(("Set-Cookie".to_string(), format!("{name}={value}")));
                }
            } else {
                let jar: CookieJar = self.cookies.iter().cloned().collect();
                headers.push(("Cookie".to_string(), jar.serialize()));
            }
        }
        headers.extend(self.inner.headers.iter().cloned());
        let full = InnerMessage {
            start_line: self.inner.start_line.clone(),
            headers,
            body: self.inner.body.clone(),
        };
        full.encode()
    }

    fn decode(raw: &[u8]) -> Result<Self, OpenError> {
        let full = InnerMessage::decode(raw).map_err(OpenError::Malformed)?;
        let mut timestamp = None;
        let mut nonce = None;
        let mut cookies = Vec::new();
        let mut headers = Vec::new();
        for (name, value) in full.headers {
            if name.eq_ignore_ascii_case(TIMESTAMP_HEADER) {
                timestamp = value.parse::<u64>().ok();
            } else if name.eq_ignore_ascii_case(NONCE_HEADER) {
                nonce = BASE64
                    .decode(&value)
                    .ok()
                    .and_then(|b| <[u8; NONCE_LEN]>::try_from(b).ok());
            } else if name.eq_ignore_ascii_case("Cookie") {
                for entry in parse_cookie_header(&value).iter() {
                    cookies.push((entry.name.clone(), entry.value.clone()));
                }
            } else if name.eq_ignore_ascii_case("Set-Cookie") {
                if let Some(entry) = parse_set_cookie(&value) {
                    cookies.push((entry.name, entry.value));
                }
            } else {
                headers.push((name, value));
            }
        }
        Ok(SealedEnvelope {
            timestamp: timestamp.ok_or(OpenError::MissingEnvelopeHeader(TIMESTAMP_HEADER))?,
            nonce: nonce.ok_or(OpenError::MissingEnvelopeHeader(NONCE_HEADER))?,
            cookies,
            inner: InnerMessage { start_line: full.start_line, headers, body: full.body },
        })
    }
}

/// Seal an envelope into a packet with a fresh random IV.
pub fn seal_envelope<R: RngCore + CryptoRng>(
    key: &SessionKey,
    uid: [u8; UID_LEN],
    envelope: &SealedEnvelope,
    rng: &mut R,
) -> Result<TunnelPacket, CodecError> {
    let plaintext = envelope.encode()?;
    let mut iv = [0u8; aead::IV_LEN];
    rng.fill_bytes(&mut iv);
    let (ciphertext, tag) = aead::seal(key, &iv, &plaintext);
    Ok(TunnelPacket { uid, iv, ciphertext, tag })
}

/// Generate a fresh random nonce.
pub fn fresh_nonce<R: RngCore + CryptoRng>(rng: &mut R) -> [u8; NONCE_LEN] {
    let mut nonce = [0u8; NONCE_LEN];
    rng.fill_bytes(&mut nonce);
    nonce
}

/// Authenticate and open a packet.
///
/// Acceptance requires, in order: the tag authenticates, the sealed section
/// parses, `now - timestamp <= 120` (inclusive), `timestamp <= now + skew`,
/// and the nonce is unseen. The caller records the nonce only after full
/// success.
pub fn open_envelope(
    key: &SessionKey,
    packet: &TunnelPacket,
    now: u64,
    future_skew: u64,
    nonce_seen: impl Fn(&[u8; NONCE_LEN]) -> bool,
) -> Result<SealedEnvelope, OpenError> {
    let plaintext = aead::open(key, &packet.iv, &packet.ciphertext, &packet.tag)
        .map_err(|_| OpenError::AuthenticationFailure)?;
    let envelope = SealedEnvelope::decode(&plaintext)?;
    if envelope.timestamp > now {
        if envelope.timestamp - now > future_skew {
            return Err(OpenError::FutureTimestamp);
        }
    } else if now - envelope.timestamp > REPLAY_WINDOW_SECS {
        return Err(OpenError::StalePacket);
    }
    if nonce_seen(&envelope.nonce) {
        return Err(OpenError::ReplayDetected);
    }
    Ok(envelope)
}

/// Merge cleartext transport headers with sealed headers.
///
/// The result is the union of both lists; for any name present in both
/// (case-insensitively) the sealed values replace all outer values. Cookies
/// follow the same rule since they are headers.
pub fn merge_headers(
    outer: &[(String, String)],
    sealed: &[(String, String)],
) -> Vec<(String, String)> {
    let mut merged: Vec<(String, String)> = outer
        .iter()
        .filter(|(name, _)| !sealed.iter().any(|(s, _)| s.eq_ignore_ascii_case(name)))
        .cloned()
        .collect();
    merged.extend(sealed.iter().cloned());
    merged
}
