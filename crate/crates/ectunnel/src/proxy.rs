//! Test proxy: terminates the tunnel for plaintext clients.
//!
//! The proxy holds its own tunnel session to the upstream server and
//! forwards plaintext HTTP requests through it, logging every decrypted
//! exchange. Optionally, given a user's password, it performs an active
//! SRP interception: it emulates the server toward the downstream client
//! and replays the login upstream, keeping working sessions on both legs.
//! Without the correct password the downstream proof never verifies and the
//! interception fails before the upstream server is contacted.

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use num_bigint::BigUint;
use rand::rngs::OsRng;
use serde_json::json;
use std::sync::Mutex;

use crate::client::{Client, ClientError, Transport};
use crate::crypto::{
    compute_verifier, srp_server_challenge, srp_server_verify, standard_group, SrpError,
    SrpParams, SrpServerState,
};
use crate::packet::InnerMessage;
use crate::server::{OuterRequest, OuterResponse};
use crate::unix_now;
use crate::wire::{ErrorCode, WireError};

/// Credentials for the active SRP interception.
#[derive(Clone)]
pub struct MitmConfig {
    pub identity: String,
    pub password: String,
}

struct PendingMitm {
    identity: String,
    emulated: SrpServerState,
}

pub struct Proxy<T: Transport> {
    client: Client<T>,
    mitm: Option<MitmConfig>,
    pending: Mutex<Option<PendingMitm>>,
    log: Mutex<Vec<String>>,
}

impl<T: Transport> Proxy<T> {
    pub fn new(client: Client<T>, mitm: Option<MitmConfig>) -> Self {
        Proxy { client, mitm, pending: Mutex::new(None), log: Mutex::new(Vec::new()) }
    }

    /// The plaintext traffic log: one line per decrypted message.
    pub fn log_lines(&self) -> Vec<String> {
        self.log.lock().unwrap().clone()
    }

    pub fn upstream_uid(&self) -> [u8; 16] {
        self.client.uid()
    }

    fn log_plaintext(&self, direction: &str, line: &str) {
        let uid = hex::encode(self.client.uid());
        let entry = format!("{}, {}, {}, {}", unix_now(), direction, uid, line);
        log::info!("{entry}");
        self.log.lock().unwrap().push(entry);
    }

    /// Handle one plaintext request from a downstream client.
    pub fn handle_plain(&self, request: &OuterRequest) -> OuterResponse {
        self.log_plaintext("c->s", &format!("{} {}", request.method, request.path));
        let response = self.route(request);
        self.log_plaintext("s->c", &format!("{}", response.status));
        response
    }

    fn route(&self, request: &OuterRequest) -> OuterResponse {
        if self.mitm.is_some() {
            let path = request.path.split('?').next().unwrap_or("");
            if request.method == "POST" && path == "/auth/info" {
                return self.mitm_auth_info(request);
            }
            // Only intercept /auth when we actually emulated the preceding
            // challenge; otherwise the login belongs to someone else.
            if request.method == "POST"
                && path == "/auth"
                && self.pending.lock().unwrap().is_some()
            {
                return self.mitm_auth(request);
            }
        }
        self.forward(request)
    }

    /// Pass the request through the tunnel unchanged.
    fn forward(&self, request: &OuterRequest) -> OuterResponse {
        let mut inner = InnerMessage::request(&request.method, &request.path);
        for (name, value) in &request.headers {
            if name.eq_ignore_ascii_case("Host")
                || name.eq_ignore_ascii_case("Content-Length")
                || name.eq_ignore_ascii_case("Transfer-Encoding")
            {
                continue;
            }
            inner = inner.with_header(name, value);
        }
        inner = inner.with_body(request.body.clone());
        match self.client.send(&inner) {
            Ok(response) => inner_to_outer(response),
            Err(err) => client_error_response(err),
        }
    }

    /// Intercepted `/auth/info`: fetch the real salt upstream, then answer
    /// with an emulated challenge built from the configured password.
    fn mitm_auth_info(&self, request: &OuterRequest) -> OuterResponse {
        let mitm = self.mitm.as_ref().expect("mitm configured");
        let Some(identity) = json_str_field(&request.body, "identity") else {
            return error_response(400, ErrorCode::MalformedRequest);
        };
        if identity != mitm.identity {
            // Not the targeted user; stay passive.
            return self.forward(request);
        }
        // The real salt is needed so the downstream x matches the emulated
        // verifier.
        let info_request = InnerMessage::request("POST", "/auth/info")
            .with_header("Content-Type", "application/json")
            .with_body(request.body.clone());
        let upstream = match self.client.send(&info_request) {
            Ok(response) => response,
            Err(err) => return client_error_response(err),
        };
        let Some(salt) = json_str_field(&upstream.body, "salt")
            .and_then(|s| BASE64.decode(s).ok())
        else {
            return error_response(502, ErrorCode::Internal);
        };
        let group = standard_group().clone();
        let verifier = compute_verifier(&group, &salt, &identity, &mitm.password);
        let params = SrpParams { group: group.clone(), salt: salt.clone() };
        let emulated = srp_server_challenge(&params, &verifier, &mut OsRng);
        let body = json!({
            "salt": BASE64.encode(&salt),
            "modulus": BASE64.encode(group.modulus.to_bytes_be()),
            "generator": BASE64.encode(group.generator.to_bytes_be()),
            "s": BASE64.encode(emulated.public_s().to_bytes_be()),
        });
        self.log_plaintext("mitm", &format!("emulated challenge for {identity}"));
        *self.pending.lock().unwrap() = Some(PendingMitm { identity, emulated });
        json_ok(&body)
    }

    /// Intercepted `/auth`: verify the downstream proof against the emulated
    /// verifier; only if it checks out, replay the login upstream.
    fn mitm_auth(&self, request: &OuterRequest) -> OuterResponse {
        let mitm = self.mitm.as_ref().expect("mitm configured");
        let Some(pending) = self.pending.lock().unwrap().take() else {
            return error_response(400, ErrorCode::NoPendingLogin);
        };
        let (Some(c_b64), Some(proof_b64)) =
            (json_str_field(&request.body, "c"), json_str_field(&request.body, "proof"))
        else {
            return error_response(400, ErrorCode::MalformedRequest);
        };
        let (Ok(c_bytes), Ok(proof_bytes)) = (BASE64.decode(c_b64), BASE64.decode(proof_b64))
        else {
            return error_response(400, ErrorCode::MalformedRequest);
        };
        let Ok(proof) = <[u8; 32]>::try_from(proof_bytes.as_slice()) else {
            return error_response(400, ErrorCode::MalformedRequest);
        };
        let client_c = BigUint::from_bytes_be(&c_bytes);
        // With the wrong password the emulated verifier cannot match the
        // client's proof; the interception dies here, upstream untouched.
        let (_, proof_ps) = match srp_server_verify(&pending.emulated, &client_c, &proof) {
            Ok(result) => result,
            Err(SrpError::ProofMismatch) => return error_response(401, ErrorCode::ProofMismatch),
            Err(SrpError::InvalidClientEphemeral) => {
                return error_response(400, ErrorCode::InvalidClientEphemeral)
            }
            Err(SrpError::InvalidServerEphemeral) => {
                return error_response(400, ErrorCode::InvalidServerEphemeral)
            }
        };
        // Downstream proof verified: the password is confirmed. Log in
        // upstream for real so the proxy keeps an authenticated session.
        self.log_plaintext("mitm", &format!("client proof verified for {}", pending.identity));
        if let Err(err) = self.client.login(&pending.identity, &mitm.password) {
            return client_error_response(err);
        }
        self.log_plaintext("mitm", &format!("upstream login replayed for {}", pending.identity));
        json_ok(&json!({ "server_proof": BASE64.encode(proof_ps) }))
    }
}

fn inner_to_outer(inner: InnerMessage) -> OuterResponse {
    let status = inner.status().unwrap_or(200);
    OuterResponse { status, headers: inner.headers.clone(), body: inner.body }
}

fn client_error_response(err: ClientError) -> OuterResponse {
    match err {
        ClientError::Server(wire) => {
            let status = match ErrorCode::from_u16(wire.code) {
                Some(ErrorCode::NotFound) => 404,
                Some(ErrorCode::KeyExpired)
                | Some(ErrorCode::AuthenticationFailure)
                | Some(ErrorCode::ProofMismatch) => 401,
                _ => 400,
            };
            OuterResponse {
                status,
                headers: vec![("Content-Type".to_string(), "application/json".to_string())],
                body: wire.to_json(),
            }
        }
        other => OuterResponse {
            status: 502,
            headers: vec![("Content-Type".to_string(), "application/json".to_string())],
            body: serde_json::to_vec(&json!({
                "code": ErrorCode::Internal.as_u16(),
                "message": other.to_string(),
            }))
            .expect("serializable"),
        },
    }
}

fn error_response(status: u16, code: ErrorCode) -> OuterResponse {
    OuterResponse {
        status,
        headers: vec![("Content-Type".to_string(), "application/json".to_string())],
        body: WireError::new(code).to_json(),
    }
}

fn json_ok(body: &serde_json::Value) -> OuterResponse {
    OuterResponse {
        status: 200,
        headers: vec![("Content-Type".to_string(), "application/json".to_string())],
        body: serde_json::to_vec(body).expect("serializable"),
    }
}

fn json_str_field(body: &[u8], field: &str) -> Option<String> {
    let value: serde_json::Value = serde_json::from_slice(body).ok()?;
    value.get(field)?.as_str().map(str::to_string)
}
