//! Tunnel endpoint controller and middleware.
//!
//! Outer routes: `GET/POST/PUT /tunnel/key` for the key exchange and
//! `POST /tunnel/data` for everything else. Data packets are decrypted,
//! validated (auth tag, timestamp window, nonce), rebuilt into an inner
//! request, dispatched, and the response sealed again.
//!
//! The error rule from the design: if the server was able to decrypt the
//! request, the response or error is encrypted; otherwise it is plaintext.

pub mod demo;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use num_bigint::BigUint;
use rand::rngs::OsRng;
use rand::RngCore;
use serde_json::json;
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::sync::Mutex;
use thiserror::Error;

use crate::crypto::{
    derive_tunnel_key, ecdh_shared_secret, srp_server_challenge, srp_server_verify, standard_group,
    EphemeralKeypair, SessionKey, SignedServerParam, SrpError, SrpParams, SrpServerState,
};
use crate::packet::{
    merge_headers, open_envelope, parse_cookie_header, seal_envelope, CookieJar, FormPart,
    InnerMessage, MultipartError, OpenError, SealedEnvelope, TunnelPacket, NONCE_HEADER,
    TIMESTAMP_HEADER, UID_HEADER, UID_LEN,
};
use crate::session::{SessionConfig, SessionError, SessionStatus, SessionStore};
use crate::wire::{ErrorCode, WireError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("server ephemeral secret does not correspond to the signed Q point")]
    EphemeralMismatch,
}

/// Registered SRP credentials for one user.
#[derive(Clone)]
pub struct UserRecord {
    pub salt: Vec<u8>,
    pub verifier: BigUint,
}

pub struct ServerConfig {
    pub signed_param: SignedServerParam,
    /// The private scalar behind the signed Q point. The signing key itself
    /// stays offline.
    pub server_ephemeral: EphemeralKeypair,
    pub session: SessionConfig,
    pub users: HashMap<String, UserRecord>,
    pub enforce_encryption: bool,
}

/// Transport-level request, independent of the HTTP server in front.
#[derive(Debug, Clone)]
pub struct OuterRequest {
    pub method: String,
    pub path: String,
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl OuterRequest {
    pub fn new(method: &str, path: &str) -> Self {
        OuterRequest {
            method: method.to_string(),
            path: path.to_string(),
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

    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct OuterResponse {
    pub status: u16,
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl OuterResponse {
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }

    /// True when the body is a sealed tunnel packet rather than plaintext.
    pub fn is_sealed(&self) -> bool {
        self.header("Content-Type") == Some("application/octet-stream")
            && self.header(UID_HEADER).is_some()
    }
}

/// The request handed to inner routes after decryption and merging.
#[derive(Debug, Clone)]
pub struct InnerRequest {
    pub method: String,
    pub path: String,
    pub version: String,
    pub query_params: Vec<(String, String)>,
    pub form_fields: Vec<(String, String)>,
    pub files: Vec<FormPart>,
    pub cookies: CookieJar,
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
}

pub trait InnerHandler: Send + Sync {
    fn handle(&self, request: &InnerRequest) -> InnerMessage;
}

#[derive(Hash, PartialEq, Eq, Clone)]
enum PendingKey {
    Session([u8; UID_LEN]),
    Plain(String),
}

struct PendingLogin {
    identity: String,
    state: SrpServerState,
    known_user: bool,
}

pub struct TunnelServer {
    config: ServerConfig,
    store: SessionStore,
    pending: Mutex<HashMap<PendingKey, PendingLogin>>,
    start_time: u64,
    handler: Box<dyn InnerHandler>,
}

impl TunnelServer {
    pub fn new(
        config: ServerConfig,
        handler: Box<dyn InnerHandler>,
        start_time: u64,
    ) -> Result<Self, ConfigError> {
        if config.server_ephemeral.public_point() != &config.signed_param.q_point {
            return Err(ConfigError::EphemeralMismatch);
        }
        let store = SessionStore::new(config.session);
        Ok(TunnelServer { config, store, pending: Mutex::new(HashMap::new()), start_time, handler })
    }

    pub fn store(&self) -> &SessionStore {
        &self.store
    }

    pub fn config(&self) -> &ServerConfig {
        &self.config
    }

    /// Route an outer request. `now` is the server clock in Unix seconds.
    pub fn handle(&self, request: &OuterRequest, now: u64) -> OuterResponse {
        match (request.method.as_str(), request.path.split('?').next().unwrap_or("")) {
            ("GET", "/tunnel/key") => self.handle_get_tunnel_key(),
            ("POST", "/tunnel/key") => self.handle_post_tunnel_key(request, now),
            ("PUT", "/tunnel/key") => self.handle_put_tunnel_key(request, now),
            ("POST", "/tunnel/data") => self.handle_tunnel_data(request, now),
            _ => self.handle_plaintext(request, now),
        }
    }

    /// `GET /tunnel/key`: the signed public parameter Q. Stateless and
    /// byte-identical across calls.
    pub fn handle_get_tunnel_key(&self) -> OuterResponse {
        let param = &self.config.signed_param;
        let body = json!({
            "q": BASE64.encode(param.q_point),
            "signature": BASE64.encode(&param.signature),
            "signing_key": BASE64.encode(&param.signing_public_key),
        });
        json_response(200, &body)
    }

    /// `POST /tunnel/key`: submit the client point V, create a session.
    pub fn handle_post_tunnel_key(&self, request: &OuterRequest, now: u64) -> OuterResponse {
        let Some(v) = parse_point_body(&request.body) else {
            return plain_error(400, ErrorCode::MalformedRequest);
        };
        let z = match ecdh_shared_secret(&self.config.server_ephemeral, &v) {
            Ok(z) => z,
            Err(_) => return plain_error(400, ErrorCode::LowOrderPoint),
        };
        let key = derive_tunnel_key(&z, &self.config.signed_param.signer_fingerprint);
        let uid = self.store.create_session(key, now, &mut OsRng);
        json_response(200, &json!({ "uid": BASE64.encode(uid) }))
    }

    /// `PUT /tunnel/key`: sealed refresh exchange. The old key (current or
    /// previous-within-grace) authorizes only this route; the response is
    /// sealed under the new key.
    pub fn handle_put_tunnel_key(&self, request: &OuterRequest, now: u64) -> OuterResponse {
        let Some(uid) = request.header(UID_HEADER).and_then(|h| TunnelPacket::parse_uid(h).ok())
        else {
            return plain_error(400, ErrorCode::MalformedRequest);
        };
        let (session, _) = match self.store.lookup(&uid, now) {
            Ok(found) => found,
            Err(_) => return plain_error(404, ErrorCode::UnknownSession),
        };
        // Grace is checked before any decryption attempt: a session past the
        // grace window gets a plaintext error and must re-handshake.
        if now > session.expires_at + self.store.config().grace {
            return plain_error(401, ErrorCode::GraceExpired);
        }
        let Ok(packet) = TunnelPacket::decode_body(uid, &request.body) else {
            return plain_error(400, ErrorCode::MalformedRequest);
        };

        let mut keys = vec![session.key];
        if let Some((previous, until)) = session.previous_key {
            if now <= until {
                keys.push(previous);
            }
        }
        let (envelope, key_used) = match self.open_with_keys(&keys, &uid, &packet, now) {
            Ok(opened) => opened,
            Err(None) => return plain_error(401, ErrorCode::AuthenticationFailure),
            Err(Some((code, key))) => return self.sealed_error(uid, &key, now, code),
        };
        if let Err(code) = self.record_nonce(&uid, &envelope, now) {
            return self.sealed_error(uid, &key_used, now, code);
        }

        let Some(v) = parse_point_body(&envelope.inner.body) else {
            return self.sealed_error(uid, &key_used, now, ErrorCode::MalformedRequest);
        };
        let z = match ecdh_shared_secret(&self.config.server_ephemeral, &v) {
            Ok(z) => z,
            Err(_) => return self.sealed_error(uid, &key_used, now, ErrorCode::LowOrderPoint),
        };
        let new_key = derive_tunnel_key(&z, &self.config.signed_param.signer_fingerprint);
        match self.store.refresh_session(&uid, new_key, now) {
            Ok(()) => {}
            Err(SessionError::GraceExpired) => return plain_error(401, ErrorCode::GraceExpired),
            Err(_) => return plain_error(404, ErrorCode::UnknownSession),
        }
        let confirmation = InnerMessage::response(200, "OK")
            .with_header("Content-Type", "application/json")
            .with_body(
                serde_json::to_vec(&json!({ "uid": BASE64.encode(uid) })).expect("serializable"),
            );
        self.sealed_response(uid, &new_key, now, confirmation)
    }

    /// `POST /tunnel/data`: the decrypt -> dispatch -> re-encrypt pipeline.
    pub fn handle_tunnel_data(&self, request: &OuterRequest, now: u64) -> OuterResponse {
        let Some(uid) = request.header(UID_HEADER).and_then(|h| TunnelPacket::parse_uid(h).ok())
        else {
            return plain_error(400, ErrorCode::MalformedRequest);
        };
        let (session, status) = match self.store.lookup(&uid, now) {
            Ok(found) => found,
            Err(_) => return plain_error(404, ErrorCode::UnknownSession),
        };
        let Ok(packet) = TunnelPacket::decode_body(uid, &request.body) else {
            return plain_error(400, ErrorCode::MalformedRequest);
        };
        let key = session.key;
        let envelope = match self.open_with_keys(&[key], &uid, &packet, now) {
            Ok((envelope, _)) => envelope,
            Err(None) => return plain_error(401, ErrorCode::AuthenticationFailure),
            Err(Some((code, key))) => return self.sealed_error(uid, &key, now, code),
        };
        if let Err(code) = self.record_nonce(&uid, &envelope, now) {
            return self.sealed_error(uid, &key, now, code);
        }
        // Key rotation is enforced with an error; the client refreshes via
        // PUT /tunnel/key and retries.
        if status == SessionStatus::Expired {
            return self.sealed_error(uid, &key, now, ErrorCode::KeyExpired);
        }

        let inner_request = match build_inner_request(&envelope, &request.headers) {
            Ok(req) => req,
            Err(code) => return self.sealed_error(uid, &key, now, code),
        };
        let (response, rekey) = self.dispatch(PendingKey::Session(uid), &inner_request);
        let outer = self.sealed_response(uid, &key, now, response);
        if let Some(k) = rekey {
            // The proof response is the last packet under the old key.
            let _ = self.store.rekey_from_srp(&uid, &k, now);
        }
        outer
    }

    /// Plaintext (migration-mode) dispatch for non-tunnel routes.
    fn handle_plaintext(&self, request: &OuterRequest, now: u64) -> OuterResponse {
        // A plaintext request naming an encrypted session is a downgrade
        // attempt, regardless of mode.
        if let Some(uid) = request.header(UID_HEADER).and_then(|h| TunnelPacket::parse_uid(h).ok())
        {
            if let Ok((session, _)) = self.store.lookup(&uid, now) {
                if session.encrypted {
                    return plain_error(403, ErrorCode::DowngradeRejected);
                }
            }
        }
        if self.config.enforce_encryption {
            return plain_error(403, ErrorCode::EncryptionRequired);
        }
        let inner_request = match build_plain_request(request) {
            Ok(req) => req,
            Err(code) => return plain_error(400, code),
        };
        let (response, _) = self.dispatch(PendingKey::Plain(client_key_of(request)), &inner_request);
        let status = response.status().unwrap_or(200);
        let mut headers = response.headers.clone();
        if !headers.iter().any(|(n, _)| n.eq_ignore_ascii_case("Content-Type")) {
            headers.push(("Content-Type".to_string(), "application/octet-stream".to_string()));
        }
        OuterResponse { status, headers, body: response.body }
    }

    /// Route an inner request, intercepting the SRP endpoints. Returns the
    /// response and, after a successful login, the secret K to re-key with.
    fn dispatch(
        &self,
        pending_key: PendingKey,
        request: &InnerRequest,
    ) -> (InnerMessage, Option<[u8; 32]>) {
        match request.path.as_str() {
            "/auth/info" => (self.handle_auth_info(pending_key, request), None),
            "/auth" => self.handle_auth(pending_key, request),
            _ => (self.handler.handle(request), None),
        }
    }

    /// `POST /auth/info`: SRP challenge. Unknown users receive a
    /// deterministic fake challenge so the response does not reveal whether
    /// the identity exists.
    fn handle_auth_info(&self, pending_key: PendingKey, request: &InnerRequest) -> InnerMessage {
        let Some(identity) = json_field(&request.body, "identity") else {
            return inner_error(ErrorCode::MalformedRequest);
        };
        let group = standard_group().clone();
        let (salt, verifier, known_user) = match self.config.users.get(&identity) {
            Some(record) => (record.salt.clone(), record.verifier.clone(), true),
            None => {
                let (salt, verifier) = self.fake_credentials(&identity);
                (salt, verifier, false)
            }
        };
        let params = SrpParams { group: group.clone(), salt: salt.clone() };
        let state = srp_server_challenge(&params, &verifier, &mut OsRng);
        let response = json!({
            "salt": BASE64.encode(&salt),
            "modulus": BASE64.encode(group.modulus.to_bytes_be()),
            "generator": BASE64.encode(group.generator.to_bytes_be()),
            "s": BASE64.encode(state.public_s().to_bytes_be()),
        });
        self.pending
            .lock()
            .unwrap()
            .insert(pending_key, PendingLogin { identity, state, known_user });
        InnerMessage::response(200, "OK")
            .with_header("Content-Type", "application/json")
            .with_body(serde_json::to_vec(&response).expect("serializable"))
    }

    /// `POST /auth`: verify P_C, emit P_S, and trigger the re-key to the
    /// SRP-derived session key.
    fn handle_auth(
        &self,
        pending_key: PendingKey,
        request: &InnerRequest,
    ) -> (InnerMessage, Option<[u8; 32]>) {
        let Some(pending) = self.pending.lock().unwrap().remove(&pending_key) else {
            return (inner_error(ErrorCode::NoPendingLogin), None);
        };
        let (Some(c_b64), Some(proof_b64)) =
            (json_field(&request.body, "c"), json_field(&request.body, "proof"))
        else {
            return (inner_error(ErrorCode::MalformedRequest), None);
        };
        let (Ok(c_bytes), Ok(proof_bytes)) = (BASE64.decode(c_b64), BASE64.decode(proof_b64))
        else {
            return (inner_error(ErrorCode::MalformedRequest), None);
        };
        let Ok(proof) = <[u8; 32]>::try_from(proof_bytes.as_slice()) else {
            return (inner_error(ErrorCode::MalformedRequest), None);
        };
        let client_c = BigUint::from_bytes_be(&c_bytes);
        let (secret_k, proof_ps) = match srp_server_verify(&pending.state, &client_c, &proof) {
            Ok(result) if pending.known_user => result,
            // Fake verifiers never match; report the same proof failure.
            Ok(_) | Err(SrpError::ProofMismatch) => {
                return (inner_error(ErrorCode::ProofMismatch), None)
            }
            Err(SrpError::InvalidClientEphemeral) => {
                return (inner_error(ErrorCode::InvalidClientEphemeral), None)
            }
            Err(SrpError::InvalidServerEphemeral) => {
                return (inner_error(ErrorCode::InvalidServerEphemeral), None)
            }
        };
        if let PendingKey::Session(uid) = &pending_key {
            let mut token = [0u8; 16];
            OsRng.fill_bytes(&mut token);
            let access = hex::encode(token);
            OsRng.fill_bytes(&mut token);
            let refresh = hex::encode(token);
            let _ = self.store.set_tokens(uid, &access, &refresh);
        }
        let response = InnerMessage::response(200, "OK")
            .with_header("Content-Type", "application/json")
            .with_body(
                serde_json::to_vec(&json!({ "server_proof": BASE64.encode(proof_ps) }))
                    .expect("serializable"),
            );
        let rekey = match pending_key {
            PendingKey::Session(_) => Some(secret_k),
            PendingKey::Plain(_) => None,
        };
        let _ = pending.identity;
        (response, rekey)
    }

    /// Deterministic fake (salt, verifier) for unknown identities, derived
    /// from the server's ephemeral secret.
    fn fake_credentials(&self, identity: &str) -> (Vec<u8>, BigUint) {
        let secret = self.config.server_ephemeral.private_scalar();
        let salt: [u8; 32] = Sha256::new()
            .chain_update(b"fake-salt")
            .chain_update(secret)
            .chain_update(identity.as_bytes())
            .finalize()
            .into();
        let exponent: [u8; 32] = Sha256::new()
            .chain_update(b"fake-verifier")
            .chain_update(secret)
            .chain_update(identity.as_bytes())
            .finalize()
            .into();
        let group = standard_group();
        let verifier =
            group.generator.modpow(&BigUint::from_bytes_be(&exponent), &group.modulus);
        (salt[..16].to_vec(), verifier)
    }

    fn open_with_keys(
        &self,
        keys: &[SessionKey],
        uid: &[u8; UID_LEN],
        packet: &TunnelPacket,
        now: u64,
    ) -> Result<(SealedEnvelope, SessionKey), Option<(ErrorCode, SessionKey)>> {
        let skew = self.store.config().skew;
        for key in keys {
            match open_envelope(key, packet, now, skew, |nonce| self.store.nonce_seen(uid, nonce)) {
                Ok(envelope) => {
                    // No nonce state survives a restart; anything sealed
                    // before process start is treated as stale.
                    if envelope.timestamp < self.start_time {
                        return Err(Some((ErrorCode::StalePacket, *key)));
                    }
                    return Ok((envelope, *key));
                }
                Err(OpenError::AuthenticationFailure) => continue,
                Err(err) => return Err(Some((open_error_code(&err), *key))),
            }
        }
        Err(None)
    }

    fn record_nonce(
        &self,
        uid: &[u8; UID_LEN],
        envelope: &SealedEnvelope,
        now: u64,
    ) -> Result<(), ErrorCode> {
        self.store
            .check_and_record_nonce(uid, &envelope.nonce, now)
            .map_err(|_| ErrorCode::ReplayDetected)
    }

    fn sealed_response(
        &self,
        uid: [u8; UID_LEN],
        key: &SessionKey,
        now: u64,
        mut inner: InnerMessage,
    ) -> OuterResponse {
        // Cookies travel in the sealed section as reserved header lines.
        let mut cookies = Vec::new();
        inner.headers.retain(|(name, value)| {
            if name.eq_ignore_ascii_case("Set-Cookie") {
                if let Some(entry) = crate::packet::parse_set_cookie(value) {
                    cookies.push((entry.name, entry.value));
                }
                false
            } else {
                true
            }
        });
        let mut envelope =
            SealedEnvelope::new(now, crate::packet::fresh_nonce(&mut OsRng), inner);
        envelope.cookies = cookies;
        match seal_envelope(key, uid, &envelope, &mut OsRng) {
            Ok(packet) => OuterResponse {
                status: 200,
                headers: vec![
                    (UID_HEADER.to_string(), hex::encode(uid)),
                    ("Content-Type".to_string(), "application/octet-stream".to_string()),
                ],
                body: packet.encode_body(),
            },
            Err(_) => plain_error(500, ErrorCode::Internal),
        }
    }

    fn sealed_error(
        &self,
        uid: [u8; UID_LEN],
        key: &SessionKey,
        now: u64,
        code: ErrorCode,
    ) -> OuterResponse {
        let inner = inner_error(code);
        self.sealed_response(uid, key, now, inner)
    }
}

fn open_error_code(err: &OpenError) -> ErrorCode {
    match err {
        OpenError::AuthenticationFailure => ErrorCode::AuthenticationFailure,
        OpenError::StalePacket => ErrorCode::StalePacket,
        OpenError::FutureTimestamp => ErrorCode::FutureTimestamp,
        OpenError::ReplayDetected => ErrorCode::ReplayDetected,
        OpenError::Malformed(_) | OpenError::MissingEnvelopeHeader(_) => {
            ErrorCode::MalformedRequest
        }
    }
}

fn inner_status(code: ErrorCode) -> (u16, &'static str) {
    match code {
        ErrorCode::KeyExpired | ErrorCode::ProofMismatch | ErrorCode::AuthenticationFailure => {
            (401, "Unauthorized")
        }
        ErrorCode::NotFound => (404, "Not Found"),
        ErrorCode::Internal => (500, "Internal Server Error"),
        _ => (400, "Bad Request"),
    }
}

fn inner_error(code: ErrorCode) -> InnerMessage {
    let (status, reason) = inner_status(code);
    InnerMessage::response(status, reason)
        .with_header("Content-Type", "application/json")
        .with_body(WireError::new(code).to_json())
}

fn plain_error(status: u16, code: ErrorCode) -> OuterResponse {
    OuterResponse {
        status,
        headers: vec![("Content-Type".to_string(), "application/json".to_string())],
        body: WireError::new(code).to_json(),
    }
}

fn json_response(status: u16, body: &serde_json::Value) -> OuterResponse {
    OuterResponse {
        status,
        headers: vec![("Content-Type".to_string(), "application/json".to_string())],
        body: serde_json::to_vec(body).expect("serializable"),
    }
}

fn json_field(body: &[u8], field: &str) -> Option<String> {
    let value: serde_json::Value = serde_json::from_slice(body).ok()?;
    value.get(field)?.as_str().map(str::to_string)
}

fn parse_point_body(body: &[u8]) -> Option<[u8; 32]> {
    let v = json_field(body, "v").or_else(|| json_field(body, "q"))?;
    BASE64.decode(v).ok()?.try_into().ok()
}

/// Pseudo-identity for plaintext logins, scoping pending SRP state when no
/// session UID exists.
fn client_key_of(request: &OuterRequest) -> String {
    request.header("X-Forwarded-For").unwrap_or("plaintext").to_string()
}

/// Headers that describe the outer packet itself and must not leak into the
/// reconstructed inner request.
fn transport_header(name: &str) -> bool {
    name.eq_ignore_ascii_case(UID_HEADER)
        || name.eq_ignore_ascii_case("Content-Type")
        || name.eq_ignore_ascii_case("Content-Length")
        || name.eq_ignore_ascii_case("Transfer-Encoding")
        || name.eq_ignore_ascii_case("Host")
        || name.eq_ignore_ascii_case(TIMESTAMP_HEADER)
        || name.eq_ignore_ascii_case(NONCE_HEADER)
}

/// Rebuild the full inner request from the decrypted envelope plus the outer
/// transport headers. Sealed headers prevail; sealed cookies replace outer
/// cookies wholesale.
fn build_inner_request(
    envelope: &SealedEnvelope,
    outer_headers: &[(String, String)],
) -> Result<InnerRequest, ErrorCode> {
    let inner = &envelope.inner;
    let (method, target) = inner.method_and_path().ok_or(ErrorCode::MalformedRequest)?;
    let version = inner.start_line.split_whitespace().nth(2).unwrap_or("HTTP/1.1").to_string();

    let outer: Vec<(String, String)> = outer_headers
        .iter()
        .filter(|(name, _)| !transport_header(name))
        .cloned()
        .collect();
    let headers = merge_headers(&outer, &inner.headers);

    // Sealed cookies win wholesale over any outer Cookie header.
    let cookies = if !envelope.cookies.is_empty() {
        envelope.cookies.iter().cloned().collect()
    } else {
        outer_headers
            .iter()
            .filter(|(name, _)| name.eq_ignore_ascii_case("Cookie"))
            .flat_map(|(_, value)| {
                parse_cookie_header(value)
                    .iter()
                    .map(|e| (e.name.clone(), e.value.clone()))
                    .collect::<Vec<_>>()
            })
            .collect()
    };

    build_request_common(method, target, version, cookies, headers, inner.body.clone())
}

fn build_plain_request(request: &OuterRequest) -> Result<InnerRequest, ErrorCode> {
    let cookies = request
        .headers
        .iter()
        .filter(|(name, _)| name.eq_ignore_ascii_case("Cookie"))
        .flat_map(|(_, value)| {
            parse_cookie_header(value)
                .iter()
                .map(|e| (e.name.clone(), e.value.clone()))
                .collect::<Vec<_>>()
        })
        .collect();
    build_request_common(
        &request.method,
        &request.path,
        "HTTP/1.1".to_string(),
        cookies,
        request.headers.clone(),
        request.body.clone(),
    )
}

fn build_request_common(
    method: &str,
    target: &str,
    version: String,
    cookies: CookieJar,
    headers: Vec<(String, String)>,
    body: Vec<u8>,
) -> Result<InnerRequest, ErrorCode> {
    let (path, query) = match target.split_once('?') {
        Some((path, query)) => (path, Some(query)),
        None => (target, None),
    };
    let query_params =
        query.map(|q| crate::packet::parse_urlencoded(q.as_bytes())).unwrap_or_default();

    let mut form_fields = Vec::new();
    let mut files = Vec::new();
    let content_type = headers
        .iter()
        .find(|(name, _)| name.eq_ignore_ascii_case("Content-Type"))
        .map(|(_, value)| value.to_ascii_lowercase());
    if let Some(ct) = content_type {
        if ct.starts_with("multipart/form-data") || ct.starts_with("application/x-www-form-urlencoded")
        {
            let form = crate::packet::parse_multipart(&body, &ct).map_err(|err| match err {
                MultipartError::MissingBoundary => ErrorCode::MissingBoundary,
                MultipartError::UnterminatedPart | MultipartError::MalformedPart => {
                    ErrorCode::UnterminatedPart
                }
            })?;
            for part in form.parts {
                if part.filename.is_some() {
                    files.push(part);
                } else {
                    form_fields.push((
                        part.name.clone(),
                        String::from_utf8_lossy(&part.body).into_owned(),
                    ));
                }
            }
        }
    }

    Ok(InnerRequest {
        method: method.to_string(),
        path: path.to_string(),
        version,
        query_params,
        form_fields,
        files,
        cookies,
        headers,
        body,
    })
}
