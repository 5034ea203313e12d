//! `ectunnel` — an application-layer encrypted tunnel over HTTP.
//!
//! TLS can be terminated and inspected by middleboxes; this crate adds a
//! second encryption layer that survives such interception. A client and
//! server agree on a per-session AES-128-GCM key, either anonymously via
//! X25519 ECDHE against a signed, fingerprint-pinned server parameter, or
//! password-authenticated via SRP-6a. Every HTTP request and response is
//! then serialized, sealed into a fixed packet format
//! (`16-byte IV ‖ ciphertext ‖ 12-byte tag`), and carried over ordinary
//! HTTP POSTs, with timestamps and nonces guarding against replay.
//!
//! Module map:
//! - [`crypto`]: primitives — ECDHE, SRP-6a, key derivation, AEAD, signing.
//! - [`packet`]: wire framing — inner HTTP codec, sealed envelopes, cookies,
//!   multipart forms, the replay window.
//! - [`session`]: the server-side session registry and nonce cache.
//! - [`server`]: the middleware — decrypt, dispatch, re-encrypt — plus the
//!   key-exchange and login routes and a demo API.
//! - [`client`]: the client SDK — handshake, transparent refresh, login.
//! - [`proxy`]: a tunnel-terminating test proxy with an optional,
//!   password-assisted SRP interception mode.
//! - [`httpd`]: a minimal blocking HTTP front shared by server and proxy.
//! - [`wire`]: stable error codes and the JSON error body.

pub mod client;
pub mod crypto;
pub mod httpd;
pub mod packet;
pub mod proxy;
pub mod server;
pub mod session;
pub mod wire;

/// Current Unix time in seconds.
pub fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .expect("system clock before Unix epoch")
        .as_secs()
}
