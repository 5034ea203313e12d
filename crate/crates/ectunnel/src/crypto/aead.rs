//! AES-128-GCM packet sealing with a 16-byte IV and a 12-byte tag.
//!
//! The wire format fixes these sizes: a 16-byte random IV processed through
//! GCM's GHASH-based long-IV path, and the authentication tag truncated to
//! 96 bits. No associated data is used.

use aes::Aes128;
use aes_gcm::aead::consts::{U12, U16};
use aes_gcm::aead::generic_array::GenericArray;
use aes_gcm::{AeadInPlace, AesGcm, KeyInit};
use thiserror::Error;

use super::kdf::SessionKey;

pub const IV_LEN: usize = 16;
pub const TAG_LEN: usize = 12;

type Cipher = AesGcm<Aes128, U16, U12>;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("packet authentication failed")]
pub struct AuthenticationFailure;

/// Encrypt `plaintext`. The IV must be unique per (key, message).
pub fn seal(key: &SessionKey, iv: &[u8; IV_LEN], plaintext: &[u8]) -> (Vec<u8>, [u8; TAG_LEN]) {
    let cipher = Cipher::new(GenericArray::from_slice(key.as_bytes()));
    let mut buf = plaintext.to_vec();
    let tag = cipher
        .encrypt_in_place_detached(GenericArray::from_slice(iv), &[], &mut buf)
        .expect("GCM encryption is infallible for in-memory buffers");
    (buf, tag.into())
}

/// Decrypt and authenticate. Fails on any bit flip in IV, ciphertext, or tag
/// without revealing which component was tampered with.
pub fn open(
    key: &SessionKey,
    iv: &[u8; IV_LEN],
    ciphertext: &[u8],
    tag: &[u8; TAG_LEN],
) -> Result<Vec<u8>, AuthenticationFailure> {
    let cipher = Cipher::new(GenericArray::from_slice(key.as_bytes()));
    let mut buf = ciphertext.to_vec();
    cipher
        .decrypt_in_place_detached(GenericArray::from_slice(iv), &[], &mut buf, GenericArray::from_slice(tag))
        .map_err(|_| AuthenticationFailure)?;
    Ok(buf)
}
