//! Session key derivation.
//!
//! Both exchanges funnel into the same 16-byte AES key type:
//! the ECDHE secret Z is hashed together with the signer fingerprint, the
//! SRP secret K with a fixed domain-separation tag. In both cases the key is
//! the first 16 bytes of a SHA-256 digest.

use sha2::{Digest, Sha256};
use subtle::ConstantTimeEq;

use super::ecdh::SharedSecret;

pub const KEY_LEN: usize = 16;

/// Domain-separation tag mixed into the SRP-derived key.
pub const SRP_KEY_CONTEXT: &[u8] = b"ectunnel-srp-session-key-v1";

/// A 128-bit AES session key.
#[derive(Clone, Copy)]
pub struct SessionKey([u8; KEY_LEN]);

impl SessionKey {
    pub fn from_bytes(bytes: [u8; KEY_LEN]) -> Self {
        SessionKey(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; KEY_LEN] {
        &self.0
    }
}

impl PartialEq for SessionKey {
    fn eq(&self, other: &Self) -> bool {
        bool::from(self.0.ct_eq(&other.0))
    }
}
impl Eq for SessionKey {}

impl std::fmt::Debug for SessionKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("SessionKey(<redacted>)")
    }
}

fn truncated_hash(parts: &[&[u8]]) -> SessionKey {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update(part);
    }
    let digest = hasher.finalize();
    let mut key = [0u8; KEY_LEN];
    key.copy_from_slice(&digest[..KEY_LEN]);
    SessionKey(key)
}

/// Landing-exchange key: first 16 bytes of `H(Z || fingerprint)`.
pub fn derive_tunnel_key(z: &SharedSecret, fingerprint: &[u8; 32]) -> SessionKey {
    truncated_hash(&[z.as_bytes(), fingerprint])
}

/// Login-exchange key: first 16 bytes of `H(K || tag)`.
pub fn derive_srp_session_key(k: &[u8; 32]) -> SessionKey {
    truncated_hash(&[k, SRP_KEY_CONTEXT])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::ecdh::{ecdh_shared_secret, EphemeralKeypair};

    fn secret() -> SharedSecret {
        let a = EphemeralKeypair::generate([7u8; 32]);
        let b = EphemeralKeypair::generate([9u8; 32]);
        ecdh_shared_secret(&a, b.public_point()).unwrap()
    }

    #[test]
    fn deterministic() {
        let z = secret();
        let fp = [0x11u8; 32];
        assert_eq!(derive_tunnel_key(&z, &fp), derive_tunnel_key(&z, &fp));
    }

    #[test]
    fn fingerprint_separates_keys() {
        let z = secret();
        assert_ne!(derive_tunnel_key(&z, &[1u8; 32]), derive_tunnel_key(&z, &[2u8; 32]));
    }

    #[test]
    fn srp_key_bit_sensitivity() {
        let mut k = [0x42u8; 32];
        let key1 = derive_srp_session_key(&k);
        k[0] ^= 1;
        let key2 = derive_srp_session_key(&k);
        assert_ne!(key1, key2);
    }
}
