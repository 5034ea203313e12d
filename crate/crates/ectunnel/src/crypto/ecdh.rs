//! X25519 ephemeral key agreement.
//!
//! Both sides of the landing exchange use these primitives: the server's
//! long-lived signed point Q and the client's per-session point V are both
//! `EphemeralKeypair`s, and the shared secret Z feeds the session KDF.

use subtle::ConstantTimeEq;
use thiserror::Error;
use x25519_dalek::{x25519, X25519_BASEPOINT_BYTES};

pub const POINT_LEN: usize = 32;
pub const SCALAR_LEN: usize = 32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EcdhError {
    /// The peer supplied a low-order point; the shared secret would be zero.
    #[error("low-order public point")]
    LowOrderPoint,
}

/// Apply the X25519 scalar clamp: clear bits 0-2 of byte 0, clear bit 7 and
/// set bit 6 of byte 31.
pub fn clamp_scalar(mut scalar: [u8; SCALAR_LEN]) -> [u8; SCALAR_LEN] {
    scalar[0] &= 0xf8;
    scalar[31] &= 0x7f;
    scalar[31] |= 0x40;
    scalar
}

/// An X25519 keypair. The private scalar is stored clamped.
#[derive(Clone)]
pub struct EphemeralKeypair {
    private_scalar: [u8; SCALAR_LEN],
    public_point: [u8; POINT_LEN],
}

impl EphemeralKeypair {
    /// Build a keypair from 32 bytes of entropy. Clamping makes every input
    /// valid.
    pub fn generate(entropy: [u8; SCALAR_LEN]) -> Self {
        let private_scalar = clamp_scalar(entropy);
        let public_point = x25519(private_scalar, X25519_BASEPOINT_BYTES);
        EphemeralKeypair { private_scalar, public_point }
    }

    pub fn from_rng<R: rand::RngCore + rand::CryptoRng>(rng: &mut R) -> Self {
        let mut entropy = [0u8; SCALAR_LEN];
        rng.fill_bytes(&mut entropy);
        Self::generate(entropy)
    }

    pub fn public_point(&self) -> &[u8; POINT_LEN] {
        &self.public_point
    }

    pub fn private_scalar(&self) -> &[u8; SCALAR_LEN] {
        &self.private_scalar
    }
}

impl std::fmt::Debug for EphemeralKeypair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EphemeralKeypair")
            .field("public_point", &hex::encode(self.public_point))
            .field("private_scalar", &"<redacted>")
            .finish()
    }
}

/// The X25519 output Z. Guaranteed non-zero by construction.
#[derive(Clone)]
pub struct SharedSecret([u8; 32]);

impl SharedSecret {
    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }
}

impl std::fmt::Debug for SharedSecret {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("SharedSecret(<redacted>)")
    }
}

/// X25519 between our private scalar and the peer's public point.
///
/// Rejects low-order peer points by checking for the all-zero output.
pub fn ecdh_shared_secret(
    own: &EphemeralKeypair,
    peer_point: &[u8; POINT_LEN],
) -> Result<SharedSecret, EcdhError> {
    let z = x25519(own.private_scalar, *peer_point);
    if bool::from(z.ct_eq(&[0u8; 32])) {
        return Err(EcdhError::LowOrderPoint);
    }
    Ok(SharedSecret(z))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamp_of_zero_entropy() {
        let kp = EphemeralKeypair::generate([0u8; 32]);
        let s = kp.private_scalar();
        assert_eq!(s[0] & 0x07, 0);
        assert_eq!(s[31] & 0x80, 0);
        assert_eq!(s[31] & 0x40, 0x40);
    }

    #[test]
    fn distinct_entropy_distinct_points() {
        let a = EphemeralKeypair::generate([1u8; 32]);
        let b = EphemeralKeypair::generate([2u8; 32]);
        assert_ne!(a.public_point(), b.public_point());
    }

    #[test]
    fn dh_symmetry() {
        let a = EphemeralKeypair::generate([3u8; 32]);
        let b = EphemeralKeypair::generate([4u8; 32]);
        let z_ab = ecdh_shared_secret(&a, b.public_point()).unwrap();
        let z_ba = ecdh_shared_secret(&b, a.public_point()).unwrap();
        assert_eq!(z_ab.as_bytes(), z_ba.as_bytes());
    }

    #[test]
    fn low_order_point_rejected() {
        let a = EphemeralKeypair::generate([5u8; 32]);
        let err = ecdh_shared_secret(&a, &[0u8; 32]).unwrap_err();
        assert_eq!(err, EcdhError::LowOrderPoint);
    }

    #[test]
    fn rfc7748_vector() {
        let scalar: [u8; 32] =
            hex::decode("a546e36bf0527c9d3b16154b82465edd62144c0ac1fc5a18506a2244ba449ac4")
                .unwrap()
                .try_into()
                .unwrap();
        let point: [u8; 32] =
            hex::decode("e6db6867583030db3594c1a424b15f7c726624ec26b3353b10a903a6d0ab1c4c")
                .unwrap()
                .try_into()
                .unwrap();
        let out = x25519(scalar, point);
        assert_eq!(
            hex::encode(out),
            "c3da55379de9c6908e94ea4df28d084f32eccf03491c71f754b4075577a28552"
        );
    }
}
