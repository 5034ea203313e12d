//! Detached signatures over the server's ECDHE point.
//!
//! The signing key lives offline; the live server only carries the signed
//! bundle. Clients verify against a fingerprint pinned out of band. The
//! backend is Ed25519; the fingerprint is the SHA-256 of the verification
//! key bytes.

use ed25519_dalek::{Signature, Signer, SigningKey, Verifier, VerifyingKey};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const FINGERPRINT_LEN: usize = 32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VerifyError {
    #[error("signature verification failed")]
    SignatureInvalid,
    #[error("signer fingerprint does not match pin")]
    FingerprintMismatch,
}

/// Hash of a signing public key, used for pinning.
pub fn fingerprint(signing_public_key: &[u8]) -> [u8; FINGERPRINT_LEN] {
    Sha256::digest(signing_public_key).into()
}

/// The offline signing keypair. Produced by the keygen ceremony, never held
/// by the live server.
pub struct SigningKeypair {
    key: SigningKey,
}

impl SigningKeypair {
    pub fn generate(entropy: [u8; 32]) -> Self {
        SigningKeypair { key: SigningKey::from_bytes(&entropy) }
    }

    pub fn from_rng<R: rand::RngCore + rand::CryptoRng>(rng: &mut R) -> Self {
        let mut entropy = [0u8; 32];
        rng.fill_bytes(&mut entropy);
        Self::generate(entropy)
    }

    pub fn secret_bytes(&self) -> [u8; 32] {
        self.key.to_bytes()
    }

    pub fn public_bytes(&self) -> [u8; 32] {
        self.key.verifying_key().to_bytes()
    }
}

/// The server's signed ECDHE point Q plus everything a client needs to
/// verify it.
#[derive(Clone, Serialize, Deserialize)]
pub struct SignedServerParam {
    pub q_point: [u8; 32],
    pub signature: Vec<u8>,
    pub signer_fingerprint: [u8; FINGERPRINT_LEN],
    pub signing_public_key: Vec<u8>,
}

impl std::fmt::Debug for SignedServerParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SignedServerParam")
            .field("q_point", &hex::encode(self.q_point))
            .field("signer_fingerprint", &hex::encode(self.signer_fingerprint))
            .finish()
    }
}

/// Detached signature over the raw 32-byte encoding of `q_point`.
pub fn sign_server_param(keypair: &SigningKeypair, q_point: [u8; 32]) -> SignedServerParam {
    let signature = keypair.key.sign(&q_point);
    let public = keypair.public_bytes();
    SignedServerParam {
        q_point,
        signature: signature.to_bytes().to_vec(),
        signer_fingerprint: fingerprint(&public),
        signing_public_key: public.to_vec(),
    }
}

/// Returns the verified Q point iff the signature is valid and the signing
/// key hashes to the pinned fingerprint.
pub fn verify_server_param(
    param: &SignedServerParam,
    pinned_fingerprint: &[u8; FINGERPRINT_LEN],
) -> Result<[u8; 32], VerifyError> {
    let key_bytes: [u8; 32] = param
        .signing_public_key
        .as_slice()
        .try_into()
        .map_err(|_| VerifyError::SignatureInvalid)?;
    let key = VerifyingKey::from_bytes(&key_bytes).map_err(|_| VerifyError::SignatureInvalid)?;
    let sig_bytes: [u8; 64] = param
        .signature
        .as_slice()
        .try_into()
        .map_err(|_| VerifyError::SignatureInvalid)?;
    let signature = Signature::from_bytes(&sig_bytes);
    key.verify(&param.q_point, &signature)
        .map_err(|_| VerifyError::SignatureInvalid)?;
    if fingerprint(&param.signing_public_key) != *pinned_fingerprint {
        return Err(VerifyError::FingerprintMismatch);
    }
    Ok(param.q_point)
}
