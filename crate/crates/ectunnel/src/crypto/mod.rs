//! Cryptographic primitives: X25519 ECDHE, AES-128-GCM sealing, SRP-6a,
//! detached server-parameter signatures, and session-key derivation.
//!
//! Everything here is a pure function of its inputs plus explicitly injected
//! entropy; there is no global state.

pub mod aead;
pub mod ecdh;
pub mod kdf;
pub mod sign;
pub mod srp;

pub use aead::{open, seal, AuthenticationFailure, IV_LEN, TAG_LEN};
pub use ecdh::{ecdh_shared_secret, EphemeralKeypair, EcdhError, SharedSecret, POINT_LEN};
pub use kdf::{derive_srp_session_key, derive_tunnel_key, SessionKey, KEY_LEN};
pub use sign::{
    fingerprint, sign_server_param, verify_server_param, SignedServerParam, SigningKeypair,
    VerifyError, FINGERPRINT_LEN,
};
pub use srp::{
    compute_verifier, private_x, srp_client_respond, srp_server_challenge, srp_server_verify, standard_group,
    SrpClientSession, SrpError, SrpGroup, SrpParams, SrpServerState,
};
