//! Stable wire-level error codes.
//!
//! Every error a client can observe maps to exactly one numeric code. Error
//! bodies are JSON `{"code": <u16>, "message": <str>}`, sealed or plaintext
//! depending on whether the offending request could be decrypted.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorCode {
    UnknownSession,
    KeyExpired,
    AuthenticationFailure,
    StalePacket,
    FutureTimestamp,
    ReplayDetected,
    GraceExpired,
    LowOrderPoint,
    SignatureInvalid,
    FingerprintMismatch,
    ProofMismatch,
    InvalidClientEphemeral,
    InvalidServerEphemeral,
    MalformedFraming,
    MalformedHeader,
    IllegalHeaderCharacter,
    MissingBoundary,
    UnterminatedPart,
    MalformedRequest,
    EncryptionRequired,
    DowngradeRejected,
    NoPendingLogin,
    NotFound,
    Internal,
}

impl ErrorCode {
    pub fn as_u16(self) -> u16 {
        match self {
            ErrorCode::UnknownSession => 1001,
            ErrorCode::KeyExpired => 1002,
            ErrorCode::AuthenticationFailure => 1003,
            ErrorCode::StalePacket => 1004,
            ErrorCode::FutureTimestamp => 1005,
            ErrorCode::ReplayDetected => 1006,
            ErrorCode::GraceExpired => 1007,
            ErrorCode::LowOrderPoint => 1008,
            ErrorCode::SignatureInvalid => 1009,
            ErrorCode::FingerprintMismatch => 1010,
            ErrorCode::ProofMismatch => 1011,
            ErrorCode::InvalidClientEphemeral => 1012,
            ErrorCode::InvalidServerEphemeral => 1013,
            ErrorCode::MalformedFraming => 1014,
            ErrorCode::MalformedHeader => 1015,
            ErrorCode::IllegalHeaderCharacter => 1016,
            ErrorCode::MissingBoundary => 1017,
            ErrorCode::UnterminatedPart => 1018,
            ErrorCode::MalformedRequest => 1019,
            ErrorCode::EncryptionRequired => 1020,
            ErrorCode::DowngradeRejected => 1021,
            ErrorCode::NoPendingLogin => 1022,
            ErrorCode::NotFound => 1023,
            ErrorCode::Internal => 1099,
        }
    }

    pub fn from_u16(code: u16) -> Option<Self> {
        use ErrorCode::*;
        Some(match code {
            1001 => UnknownSession,
            1002 => KeyExpired,
            1003 => AuthenticationFailure,
            1004 => StalePacket,
            1005 => FutureTimestamp,
            1006 => ReplayDetected,
            1007 => GraceExpired,
            1008 => LowOrderPoint,
            1009 => SignatureInvalid,
            1010 => FingerprintMismatch,
            1011 => ProofMismatch,
            1012 => InvalidClientEphemeral,
            1013 => InvalidServerEphemeral,
            1014 => MalformedFraming,
            1015 => MalformedHeader,
            1016 => IllegalHeaderCharacter,
            1017 => MissingBoundary,
            1018 => UnterminatedPart,
            1019 => MalformedRequest,
            1020 => EncryptionRequired,
            1021 => DowngradeRejected,
            1022 => NoPendingLogin,
            1023 => NotFound,
            1099 => Internal,
            _ => return None,
        })
    }

    pub fn message(self) -> &'static str {
        match self {
            ErrorCode::UnknownSession => "unknown session",
            ErrorCode::KeyExpired => "session key expired, refresh required",
            ErrorCode::AuthenticationFailure => "packet authentication failed",
            ErrorCode::StalePacket => "packet timestamp outside validity window",
            ErrorCode::FutureTimestamp => "packet timestamp in the future",
            ErrorCode::ReplayDetected => "duplicate nonce",
            ErrorCode::GraceExpired => "refresh grace window elapsed, new handshake required",
            ErrorCode::LowOrderPoint => "invalid public point",
            ErrorCode::SignatureInvalid => "signature verification failed",
            ErrorCode::FingerprintMismatch => "signer fingerprint does not match pin",
            ErrorCode::ProofMismatch => "authentication proof rejected",
            ErrorCode::InvalidClientEphemeral => "client ephemeral is zero",
            ErrorCode::InvalidServerEphemeral => "server ephemeral is zero",
            ErrorCode::MalformedFraming => "missing header/body separator",
            ErrorCode::MalformedHeader => "malformed header line",
            ErrorCode::IllegalHeaderCharacter => "illegal character in header",
            ErrorCode::MissingBoundary => "multipart boundary missing",
            ErrorCode::UnterminatedPart => "multipart body missing closing boundary",
            ErrorCode::MalformedRequest => "malformed request",
            ErrorCode::EncryptionRequired => "this route is only served inside the tunnel",
            ErrorCode::DowngradeRejected => "session is encrypted, plaintext access denied",
            ErrorCode::NoPendingLogin => "no login challenge pending for this session",
            ErrorCode::NotFound => "no such route",
            ErrorCode::Internal => "internal error",
        }
    }
}

/// JSON error body shared by plaintext and sealed error responses.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WireError {
    pub code: u16,
    pub message: String,
}

impl WireError {
    pub fn new(code: ErrorCode) -> Self {
        WireError { code: code.as_u16(), message: code.message().to_string() }
    }

    pub fn error_code(&self) -> Option<ErrorCode> {
        ErrorCode::from_u16(self.code)
    }

    pub fn to_json(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("serializable")
    }

    pub fn from_json(raw: &[u8]) -> Option<Self> {
        serde_json::from_slice(raw).ok()
    }
}
