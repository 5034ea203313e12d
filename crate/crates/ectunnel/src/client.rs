//! Client SDK: handshake, sealed requests, transparent key refresh, and
//! SRP login with re-keying.
//!
//! The client is safe to share across threads. While a refresh or login is
//! in flight, concurrent `send` calls block and resume under the new key
//! once the rotation completes, so callers never observe the rotation.

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use num_bigint::BigUint;
use rand::rngs::OsRng;
use serde_json::json;
use std::collections::HashMap;
use std::sync::{Arc, Condvar, Mutex};
use thiserror::Error;

use crate::crypto::{
    derive_srp_session_key, derive_tunnel_key, ecdh_shared_secret, fingerprint, srp_client_respond,
    standard_group, verify_server_param, EphemeralKeypair, SessionKey, SignedServerParam,
    SrpParams, VerifyError,
};
use crate::packet::{
    fresh_nonce, open_envelope, parse_cookie_header, seal_envelope, InnerMessage, OpenError,
    SealedEnvelope, TunnelPacket, DEFAULT_FUTURE_SKEW_SECS, NONCE_LEN, REPLAY_WINDOW_SECS,
    UID_HEADER, UID_LEN,
};
use crate::server::{OuterRequest, OuterResponse, TunnelServer};
use crate::unix_now;
use crate::wire::{ErrorCode, WireError};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("server error {code}: {message}", code = .0.code, message = .0.message)]
    Server(WireError),
    #[error("server parameter signature invalid")]
    SignatureInvalid,
    #[error("server key fingerprint does not match the pin")]
    FingerprintMismatch,
    #[error("server sent a low-order point")]
    LowOrderPoint,
    #[error("server offered a non-standard SRP group")]
    GroupMismatch,
    #[error("server SRP proof did not verify; possible interception")]
    ServerProofMismatch,
    #[error("response failed validation: {0}")]
    ResponseValidation(String),
    #[error("malformed server response: {0}")]
    Protocol(String),
}

impl ClientError {
    /// The wire error code, when the failure came from the server.
    pub fn error_code(&self) -> Option<ErrorCode> {
        match self {
            ClientError::Server(err) => ErrorCode::from_u16(err.code),
            _ => None,
        }
    }
}

/// How requests reach the server. Implemented over HTTP and in-process.
pub trait Transport: Send + Sync {
    fn send(&self, request: &OuterRequest) -> Result<OuterResponse, ClientError>;
}

/// HTTP transport backed by a blocking agent.
pub struct HttpTransport {
    base_url: String,
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(base_url: &str) -> Self {
        HttpTransport {
            base_url: base_url.trim_end_matches('/').to_string(),
            agent: ureq::AgentBuilder::new()
                .timeout(std::time::Duration::from_secs(30))
                .build(),
        }
    }
}

impl Transport for HttpTransport {
    fn send(&self, request: &OuterRequest) -> Result<OuterResponse, ClientError> {
        let url = format!("{}{}", self.base_url, request.path);
        let mut builder = self.agent.request(&request.method, &url);
        for (name, value) in &request.headers {
            builder = builder.set(name, value);
        }
        let response = match builder.send_bytes(&request.body) {
            Ok(response) => response,
            Err(ureq::Error::Status(_, response)) => response,
            Err(err) => return Err(ClientError::Transport(err.to_string())),
        };
        let status = response.status();
        let mut headers = Vec::new();
        for name in response.headers_names() {
            for value in response.all(&name) {
                headers.push((name.clone(), value.to_string()));
            }
        }
        let mut body = Vec::new();
        use std::io::Read;
        response
            .into_reader()
            .read_to_end(&mut body)
            .map_err(|err| ClientError::Transport(err.to_string()))?;
        Ok(OuterResponse { status, headers, body })
    }
}

/// In-process transport for tests: calls the server directly, optionally
/// with an injected clock.
pub struct LocalTransport {
    server: Arc<TunnelServer>,
    clock: Box<dyn Fn() -> u64 + Send + Sync>,
}

impl LocalTransport {
    pub fn new(server: Arc<TunnelServer>) -> Self {
        LocalTransport { server, clock: Box::new(unix_now) }
    }

    pub fn with_clock(
        server: Arc<TunnelServer>,
        clock: impl Fn() -> u64 + Send + Sync + 'static,
    ) -> Self {
        LocalTransport { server, clock: Box::new(clock) }
    }
}

impl Transport for LocalTransport {
    fn send(&self, request: &OuterRequest) -> Result<OuterResponse, ClientError> {
        Ok(self.server.handle(request, (self.clock)()))
    }
}

/// Serializable session state for resuming across processes.
#[derive(serde::Serialize, serde::Deserialize, Clone)]
pub struct SessionHandle {
    pub uid: [u8; UID_LEN],
    pub key: [u8; 16],
    pub server_q: [u8; 32],
}

struct ClientState {
    uid: [u8; UID_LEN],
    key: SessionKey,
    server_q: [u8; 32],
    /// Bumped on every key rotation; lets a sender detect that the expiry it
    /// saw has already been handled.
    generation: u64,
    rotating: bool,
}

type NonceCache = HashMap<([u8; UID_LEN], [u8; NONCE_LEN]), u64>;

pub struct Client<T: Transport> {
    transport: T,
    pinned: [u8; 32],
    state: Mutex<ClientState>,
    rotated: Condvar,
    clock: Box<dyn Fn() -> u64 + Send + Sync>,
    /// Nonces of received responses, for client-side replay detection.
    seen: Mutex<NonceCache>,
}

enum Interpreted {
    Ok(InnerMessage),
    KeyExpired,
    Failed(WireError),
}

impl<T: Transport> Client<T> {
    /// Full ECDHE handshake: fetch and verify the signed parameter, derive
    /// the session key, register the session.
    pub fn handshake(transport: T, pinned_fingerprint: [u8; 32]) -> Result<Self, ClientError> {
        let (uid, key, server_q) = do_handshake(&transport, &pinned_fingerprint)?;
        Ok(Client {
            transport,
            pinned: pinned_fingerprint,
            state: Mutex::new(ClientState { uid, key, server_q, generation: 0, rotating: false }),
            rotated: Condvar::new(),
            clock: Box::new(unix_now),
            seen: Mutex::new(HashMap::new()),
        })
    }

    /// Resume a previously exported session without a new handshake.
    pub fn resume(
        transport: T,
        pinned_fingerprint: [u8; 32],
        handle: &SessionHandle,
    ) -> Self {
        Client {
            transport,
            pinned: pinned_fingerprint,
            state: Mutex::new(ClientState {
                uid: handle.uid,
                key: SessionKey::from_bytes(handle.key),
                server_q: handle.server_q,
                generation: 0,
                rotating: false,
            }),
            rotated: Condvar::new(),
            clock: Box::new(unix_now),
            seen: Mutex::new(HashMap::new()),
        }
    }

    /// Override the clock used for envelope timestamps (tests only).
    pub fn set_clock(&mut self, clock: impl Fn() -> u64 + Send + Sync + 'static) {
        self.clock = Box::new(clock);
    }

    pub fn uid(&self) -> [u8; UID_LEN] {
        self.state.lock().unwrap().uid
    }

    pub fn export_session(&self) -> SessionHandle {
        let state = self.state.lock().unwrap();
        SessionHandle { uid: state.uid, key: *state.key.as_bytes(), server_q: state.server_q }
    }

    /// Send one inner request through the tunnel. Key expiry is handled
    /// transparently: the session is refreshed and the request retried.
    pub fn send(&self, inner: &InnerMessage) -> Result<InnerMessage, ClientError> {
        loop {
            let (uid, key, generation) = self.wait_active();
            let outer = self.seal_request(uid, &key, "POST", "/tunnel/data", inner)?;
            let response = self.transport.send(&outer)?;
            match self.interpret(uid, &key, &response)? {
                Interpreted::Ok(message) => return Ok(message),
                Interpreted::KeyExpired => self.refresh_from(generation)?,
                Interpreted::Failed(err) => return Err(ClientError::Server(err)),
            }
        }
    }

    /// SRP login over the established tunnel. On success the session key is
    /// replaced on both sides with the SRP-derived key.
    pub fn login(&self, identity: &str, password: &str) -> Result<(), ClientError> {
        let (uid, key, _) = self.begin_rotation();
        let result = self.login_inner(uid, &key, identity, password);
        let mut state = self.state.lock().unwrap();
        if let Ok(new_key) = &result {
            state.key = *new_key;
            state.generation += 1;
        }
        state.rotating = false;
        self.rotated.notify_all();
        drop(state);
        result.map(|_| ())
    }

    fn login_inner(
        &self,
        uid: [u8; UID_LEN],
        key: &SessionKey,
        identity: &str,
        password: &str,
    ) -> Result<SessionKey, ClientError> {
        let info_request = InnerMessage::request("POST", "/auth/info")
            .with_header("Content-Type", "application/json")
            .with_body(serde_json::to_vec(&json!({ "identity": identity })).expect("serializable"));
        let info = match self.send_under(uid, key, &info_request)? {
            Interpreted::Ok(message) => message,
            Interpreted::KeyExpired => {
                return Err(ClientError::Server(WireError::new(ErrorCode::KeyExpired)))
            }
            Interpreted::Failed(err) => return Err(ClientError::Server(err)),
        };
        let info: serde_json::Value = serde_json::from_slice(&info.body)
            .map_err(|_| ClientError::Protocol("auth info is not JSON".into()))?;
        let salt = b64_field(&info, "salt")?;
        let modulus = BigUint::from_bytes_be(&b64_field(&info, "modulus")?);
        let generator = BigUint::from_bytes_be(&b64_field(&info, "generator")?);
        let server_s = BigUint::from_bytes_be(&b64_field(&info, "s")?);
        let group = standard_group();
        // Refuse any substituted group: x and the proofs must be computed
        // against the known modulus only.
        if modulus != group.modulus || generator != group.generator {
            return Err(ClientError::GroupMismatch);
        }
        let params = SrpParams { group: group.clone(), salt };
        let session = srp_client_respond(&params, identity, password, &server_s, &mut OsRng)
            .map_err(|_| ClientError::Protocol("unusable SRP challenge".into()))?;

        let auth_request = InnerMessage::request("POST", "/auth")
            .with_header("Content-Type", "application/json")
            .with_body(
                serde_json::to_vec(&json!({
                    "c": BASE64.encode(session.public_c().to_bytes_be()),
                    "proof": BASE64.encode(session.proof()),
                }))
                .expect("serializable"),
            );
        let auth = match self.send_under(uid, key, &auth_request)? {
            Interpreted::Ok(message) => message,
            Interpreted::KeyExpired => {
                return Err(ClientError::Server(WireError::new(ErrorCode::KeyExpired)))
            }
            Interpreted::Failed(err) => return Err(ClientError::Server(err)),
        };
        let auth: serde_json::Value = serde_json::from_slice(&auth.body)
            .map_err(|_| ClientError::Protocol("auth response is not JSON".into()))?;
        let proof_ps: [u8; 32] = b64_field(&auth, "server_proof")?
            .try_into()
            .map_err(|_| ClientError::Protocol("server proof has wrong length".into()))?;
        session
            .verify_server_proof(&proof_ps)
            .map_err(|_| ClientError::ServerProofMismatch)?;
        Ok(derive_srp_session_key(session.secret()))
    }

    /// Block until no rotation is in flight, then return the current
    /// credentials.
    fn wait_active(&self) -> ([u8; UID_LEN], SessionKey, u64) {
        let mut state = self.state.lock().unwrap();
        while state.rotating {
            state = self.rotated.wait(state).unwrap();
        }
        (state.uid, state.key, state.generation)
    }

    /// Mark a rotation as in flight and return the credentials it starts
    /// from.
    fn begin_rotation(&self) -> ([u8; UID_LEN], SessionKey, u64) {
        let mut state = self.state.lock().unwrap();
        while state.rotating {
            state = self.rotated.wait(state).unwrap();
        }
        state.rotating = true;
        (state.uid, state.key, state.generation)
    }

    /// Refresh the session key, unless another thread already rotated past
    /// `generation`.
    fn refresh_from(&self, generation: u64) -> Result<(), ClientError> {
        let (uid, key, current) = self.begin_rotation();
        if current != generation {
            let mut state = self.state.lock().unwrap();
            state.rotating = false;
            self.rotated.notify_all();
            return Ok(());
        }
        let server_q = self.state.lock().unwrap().server_q;
        let result = self.do_refresh(uid, &key, &server_q);
        let mut state = self.state.lock().unwrap();
        if let Ok((new_uid, new_key, new_q)) = &result {
            state.uid = *new_uid;
            state.key = *new_key;
            state.server_q = *new_q;
            state.generation += 1;
        }
        state.rotating = false;
        self.rotated.notify_all();
        drop(state);
        result.map(|_| ())
    }

    /// `PUT /tunnel/key` under the old key; fall back to a fresh handshake
    /// if the grace window has passed.
    fn do_refresh(
        &self,
        uid: [u8; UID_LEN],
        key: &SessionKey,
        server_q: &[u8; 32],
    ) -> Result<([u8; UID_LEN], SessionKey, [u8; 32]), ClientError> {
        let ephemeral = EphemeralKeypair::from_rng(&mut OsRng);
        let z = ecdh_shared_secret(&ephemeral, server_q)
            .map_err(|_| ClientError::LowOrderPoint)?;
        let new_key = derive_tunnel_key(&z, &self.pinned);
        let inner = InnerMessage::request("PUT", "/tunnel/key")
            .with_header("Content-Type", "application/json")
            .with_body(
                serde_json::to_vec(&json!({ "v": BASE64.encode(ephemeral.public_point()) }))
                    .expect("serializable"),
            );
        let outer = self.seal_request(uid, key, "PUT", "/tunnel/key", &inner)?;
        let response = self.transport.send(&outer)?;
        if response.is_sealed() {
            // The confirmation is sealed under the key that was just agreed.
            match self.open_response(uid, &new_key, &response)? {
                (message, _) if message.status() == Some(200) => {
                    Ok((uid, new_key, *server_q))
                }
                _ => Err(ClientError::Protocol("refresh confirmation rejected".into())),
            }
        } else {
            let err = WireError::from_json(&response.body)
                .ok_or_else(|| ClientError::Protocol("unreadable refresh error".into()))?;
            match ErrorCode::from_u16(err.code) {
                // Too late to refresh: start over with a new handshake.
                Some(ErrorCode::GraceExpired) | Some(ErrorCode::UnknownSession) => {
                    let (uid, key, q) = do_handshake(&self.transport, &self.pinned)?;
                    Ok((uid, key, q))
                }
                _ => Err(ClientError::Server(err)),
            }
        }
    }

    /// Seal one inner message and ship it, interpreting the response under
    /// the same key.
    fn send_under(
        &self,
        uid: [u8; UID_LEN],
        key: &SessionKey,
        inner: &InnerMessage,
    ) -> Result<Interpreted, ClientError> {
        let outer = self.seal_request(uid, key, "POST", "/tunnel/data", inner)?;
        let response = self.transport.send(&outer)?;
        self.interpret(uid, key, &response)
    }

    fn seal_request(
        &self,
        uid: [u8; UID_LEN],
        key: &SessionKey,
        outer_method: &str,
        outer_path: &str,
        inner: &InnerMessage,
    ) -> Result<OuterRequest, ClientError> {
        let mut inner = inner.clone();
        // Cookies ride in the sealed section, not as ordinary inner headers.
        let mut cookies = Vec::new();
        inner.headers.retain(|(name, value)| {
            if name.eq_ignore_ascii_case("Cookie") {
                for entry in parse_cookie_header(value).iter() {
                    cookies.push((entry.name.clone(), entry.value.clone()));
                }
                false
            } else {
                true
            }
        });
        let mut envelope =
            SealedEnvelope::new((self.clock)(), fresh_nonce(&mut OsRng), inner);
        envelope.cookies = cookies;
        let packet = seal_envelope(key, uid, &envelope, &mut OsRng)
            .map_err(|err| ClientError::Protocol(format!("unsealable request: {err}")))?;
        Ok(OuterRequest::new(outer_method, outer_path)
            .with_header(UID_HEADER, &hex::encode(uid))
            .with_header("Content-Type", "application/octet-stream")
            .with_body(packet.encode_body()))
    }

    /// Open a sealed response, enforcing the same freshness and replay rules
    /// the server applies.
    fn open_response(
        &self,
        uid: [u8; UID_LEN],
        key: &SessionKey,
        response: &OuterResponse,
    ) -> Result<(InnerMessage, Vec<(String, String)>), ClientError> {
        let packet = TunnelPacket::decode_body(uid, &response.body)
            .map_err(|_| ClientError::ResponseValidation("unparseable packet".into()))?;
        let now = (self.clock)();
        let envelope = open_envelope(key, &packet, now, DEFAULT_FUTURE_SKEW_SECS, |nonce| {
            self.seen.lock().unwrap().contains_key(&(uid, *nonce))
        })
        .map_err(|err| match err {
            OpenError::AuthenticationFailure => {
                ClientError::ResponseValidation("authentication failure".into())
            }
            other => ClientError::ResponseValidation(other.to_string()),
        })?;
        let mut seen = self.seen.lock().unwrap();
        seen.retain(|_, at| now.saturating_sub(*at) <= REPLAY_WINDOW_SECS + DEFAULT_FUTURE_SKEW_SECS);
        seen.insert((uid, envelope.nonce), now);
        drop(seen);
        Ok((envelope.inner, envelope.cookies))
    }

    fn interpret(
        &self,
        uid: [u8; UID_LEN],
        key: &SessionKey,
        response: &OuterResponse,
    ) -> Result<Interpreted, ClientError> {
        if response.is_sealed() {
            let (mut message, cookies) = self.open_response(uid, key, response)?;
            if let Some(status) = message.status() {
                if status >= 400 {
                    if let Some(err) = WireError::from_json(&message.body) {
                        if err.code == ErrorCode::KeyExpired.as_u16() {
                            return Ok(Interpreted::KeyExpired);
                        }
                        // Application-level 404s pass through as ordinary
                        // responses; everything else in the wire-error range
                        // is a tunnel protocol failure.
                        if err.code != ErrorCode::NotFound.as_u16() {
                            return Ok(Interpreted::Failed(err));
                        }
                    }
                }
            }
            // Surface sealed cookies to the caller as ordinary headers.
            for (name, value) in cookies {
                message = message.with_header("Set-Cookie", &format!("{name}={value}"));
            }
            Ok(Interpreted::Ok(message))
        } else {
            let err = WireError::from_json(&response.body).ok_or_else(|| {
                ClientError::Protocol(format!("unexpected plaintext response {}", response.status))
            })?;
            Ok(Interpreted::Failed(err))
        }
    }
}

fn do_handshake<T: Transport>(
    transport: &T,
    pinned: &[u8; 32],
) -> Result<([u8; UID_LEN], SessionKey, [u8; 32]), ClientError> {
    let response = transport.send(&OuterRequest::new("GET", "/tunnel/key"))?;
    if response.status != 200 {
        return Err(ClientError::Protocol(format!(
            "key fetch returned status {}",
            response.status
        )));
    }
    let value: serde_json::Value = serde_json::from_slice(&response.body)
        .map_err(|_| ClientError::Protocol("key response is not JSON".into()))?;
    let q_point: [u8; 32] = b64_field(&value, "q")?
        .try_into()
        .map_err(|_| ClientError::Protocol("Q has wrong length".into()))?;
    let signature = b64_field(&value, "signature")?;
    let signing_public_key = b64_field(&value, "signing_key")?;
    let param = SignedServerParam {
        q_point,
        signature,
        signer_fingerprint: fingerprint(&signing_public_key),
        signing_public_key,
    };
    verify_server_param(&param, pinned).map_err(|err| match err {
        VerifyError::SignatureInvalid => ClientError::SignatureInvalid,
        VerifyError::FingerprintMismatch => ClientError::FingerprintMismatch,
    })?;

    let ephemeral = EphemeralKeypair::from_rng(&mut OsRng);
    let z = ecdh_shared_secret(&ephemeral, &param.q_point)
        .map_err(|_| ClientError::LowOrderPoint)?;
    let key = derive_tunnel_key(&z, pinned);

    let body = serde_json::to_vec(&json!({ "v": BASE64.encode(ephemeral.public_point()) }))
        .expect("serializable");
    let response = transport.send(
        &OuterRequest::new("POST", "/tunnel/key")
            .with_header("Content-Type", "application/json")
            .with_body(body),
    )?;
    if response.status != 200 {
        let err = WireError::from_json(&response.body)
            .ok_or_else(|| ClientError::Protocol("registration failed unreadably".into()))?;
        return Err(ClientError::Server(err));
    }
    let value: serde_json::Value = serde_json::from_slice(&response.body)
        .map_err(|_| ClientError::Protocol("registration response is not JSON".into()))?;
    let uid: [u8; UID_LEN] = b64_field(&value, "uid")?
        .try_into()
        .map_err(|_| ClientError::Protocol("uid has wrong length".into()))?;
    Ok((uid, key, param.q_point))
}

fn b64_field(value: &serde_json::Value, field: &str) -> Result<Vec<u8>, ClientError> {
    let text = value
        .get(field)
        .and_then(|v| v.as_str())
        .ok_or_else(|| ClientError::Protocol(format!("missing field `{field}`")))?;
    BASE64
        .decode(text)
        .map_err(|_| ClientError::Protocol(format!("field `{field}` is not base64")))
}
