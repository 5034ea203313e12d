//! SRP-6a password-authenticated key exchange.
//!
//! The server stores `v = g^x mod N` per user and never sees the password.
//! A completed exchange gives both sides a 256-bit secret K and mutual
//! proofs:
//!
//! ```text
//! k   = H(N || pad(g))
//! x   = H(salt || H(identity || ":" || password))
//! S   = k*v + g^b mod N          (server challenge)
//! C   = g^a mod N                (client ephemeral)
//! u   = H(pad(C) || pad(S))
//! K   = H(pad(premaster))
//! P_C = H(pad(C) || pad(S) || K)
//! P_S = H(pad(C) || P_C || K)
//! ```
//!
//! All big integers are hashed as big-endian bytes left-padded to the
//! modulus length. The group is the RFC 5054 2048-bit safe prime with g = 2.

use num_bigint::BigUint;
use sha2::{Digest, Sha256};
use std::sync::OnceLock;
use subtle::ConstantTimeEq;
use thiserror::Error;

pub const PROOF_LEN: usize = 32;
pub const SECRET_LEN: usize = 32;

/// RFC 5054 appendix A, 2048-bit group.
const GROUP_2048_PRIME_HEX: &str = "\
AC6BDB41324A9A9BF166DE5E1389582FAF72B6651987EE07FC3192943DB56050\
A37329CBB4A099ED8193E0757767A13DD52312AB4B03310DCD7F48A9DA04FD50\
E8083969EDB767B0CF6095179A163AB3661A05FBD5FAAAE82918A9962F0B93B8\
55F97993EC975EEAA80D740ADBF4FF747359D041D5C33EA71D281E446B14773B\
CA97B43A23FB801676BD207A436C6481F1D2B9078717461A5B9D32E688F87748\
544523B524B0D57D5EA77A2775D2ECFA032CFBDBF52FB3786160279004E57AE6\
AF874E7303CE53299CCC041C7BC308D82A5698F3A8D0C38271AE35F8E9DBFBB6\
94B5C803D89F7AE435DE236D525F54759B65E372FCD68EF20FA7111F9E4AFF73";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SrpError {
    #[error("server ephemeral is zero mod N")]
    InvalidServerEphemeral,
    #[error("client ephemeral is zero mod N")]
    InvalidClientEphemeral,
    #[error("authentication proof rejected")]
    ProofMismatch,
}

#[derive(Clone, PartialEq, Eq)]
pub struct SrpGroup {
    pub modulus: BigUint,
    pub generator: BigUint,
}

impl SrpGroup {
    pub fn byte_len(&self) -> usize {
        (self.modulus.bits() as usize).div_ceil(8)
    }
}

/// The standard group used by every exchange in this crate.
pub fn standard_group() -> &'static SrpGroup {
    static GROUP: OnceLock<SrpGroup> = OnceLock::new();
    GROUP.get_or_init(|| SrpGroup {
        modulus: BigUint::parse_bytes(GROUP_2048_PRIME_HEX.as_bytes(), 16).expect("valid hex"),
        generator: BigUint::from(2u32),
    })
}

/// Per-user public parameters sent in the challenge.
#[derive(Clone)]
pub struct SrpParams {
    pub group: SrpGroup,
    pub salt: Vec<u8>,
}

fn pad(group: &SrpGroup, value: &BigUint) -> Vec<u8> {
    let bytes = value.to_bytes_be();
    let len = group.byte_len();
    let mut out = vec![0u8; len.saturating_sub(bytes.len())];
    out.extend_from_slice(&bytes);
    out
}

fn hash_parts(parts: &[&[u8]]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update(part);
    }
    hasher.finalize().into()
}

fn hash_to_int(parts: &[&[u8]]) -> BigUint {
    BigUint::from_bytes_be(&hash_parts(parts))
}

/// Multiplier parameter `k = H(N || pad(g))`.
fn multiplier_k(group: &SrpGroup) -> BigUint {
    hash_to_int(&[&group.modulus.to_bytes_be(), &pad(group, &group.generator)])
}

/// Private exponent `x = H(salt || H(identity || ":" || password))`.
pub fn private_x(salt: &[u8], identity: &str, password: &str) -> BigUint {
    let inner = hash_parts(&[identity.as_bytes(), b":", password.as_bytes()]);
    hash_to_int(&[salt, &inner])
}

/// Password verifier `v = g^x mod N`, registered server-side.
pub fn compute_verifier(group: &SrpGroup, salt: &[u8], identity: &str, password: &str) -> BigUint {
    let x = private_x(salt, identity, password);
    group.generator.modpow(&x, &group.modulus)
}

fn random_ephemeral<R: rand::RngCore + rand::CryptoRng>(rng: &mut R) -> BigUint {
    let mut bytes = [0u8; 32];
    rng.fill_bytes(&mut bytes);
    BigUint::from_bytes_be(&bytes)
}

/// Server-side state between issuing the challenge and verifying the proof.
pub struct SrpServerState {
    group: SrpGroup,
    ephemeral_b: BigUint,
    public_s: BigUint,
    verifier: BigUint,
}

impl SrpServerState {
    pub fn public_s(&self) -> &BigUint {
        &self.public_s
    }
}

/// Generate the server challenge `S = k*v + g^b mod N`, retrying internally
/// until `S mod N != 0`.
pub fn srp_server_challenge<R: rand::RngCore + rand::CryptoRng>(
    params: &SrpParams,
    verifier: &BigUint,
    rng: &mut R,
) -> SrpServerState {
    let group = &params.group;
    let k = multiplier_k(group);
    loop {
        let b = random_ephemeral(rng);
        let s = (&k * verifier + group.generator.modpow(&b, &group.modulus)) % &group.modulus;
        if (&s % &group.modulus).bits() != 0 {
            return SrpServerState {
                group: group.clone(),
                ephemeral_b: b,
                public_s: s,
                verifier: verifier.clone(),
            };
        }
    }
}

/// Client-side result of answering a challenge.
pub struct SrpClientSession {
    public_c: BigUint,
    secret_k: [u8; SECRET_LEN],
    proof_pc: [u8; PROOF_LEN],
    expected_ps: [u8; PROOF_LEN],
}

impl SrpClientSession {
    pub fn public_c(&self) -> &BigUint {
        &self.public_c
    }

    pub fn proof(&self) -> &[u8; PROOF_LEN] {
        &self.proof_pc
    }

    pub fn secret(&self) -> &[u8; SECRET_LEN] {
        &self.secret_k
    }

    /// Check the server's proof `P_S` in constant time.
    pub fn verify_server_proof(&self, proof_ps: &[u8; PROOF_LEN]) -> Result<(), SrpError> {
        if bool::from(self.expected_ps.ct_eq(proof_ps)) {
            Ok(())
        } else {
            Err(SrpError::ProofMismatch)
        }
    }
}

impl std::fmt::Debug for SrpClientSession {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SrpClientSession")
            .field("public_c", &self.public_c)
            .finish()
    }
}

/// Answer a server challenge: compute `C`, the secret `K`, and the proof
/// `P_C`. Rejects a zero server ephemeral.
pub fn srp_client_respond<R: rand::RngCore + rand::CryptoRng>(
    params: &SrpParams,
    identity: &str,
    password: &str,
    server_s: &BigUint,
    rng: &mut R,
) -> Result<SrpClientSession, SrpError> {
    let group = &params.group;
    let n = &group.modulus;
    if (server_s % n).bits() == 0 {
        return Err(SrpError::InvalidServerEphemeral);
    }
    let k = multiplier_k(group);
    let x = private_x(&params.salt, identity, password);
    let a = random_ephemeral(rng);
    let c = group.generator.modpow(&a, n);
    let u = hash_to_int(&[&pad(group, &c), &pad(group, server_s)]);
    if (&u % n).bits() == 0 {
        return Err(SrpError::InvalidServerEphemeral);
    }
    // premaster = (S - k*g^x)^(a + u*x) mod N
    let gx = group.generator.modpow(&x, n);
    let base = ((server_s % n) + n - (&k * &gx) % n) % n;
    let exponent = &a + &u * &x;
    let premaster = base.modpow(&exponent, n);
    let secret_k = hash_parts(&[&pad(group, &premaster)]);
    let proof_pc = hash_parts(&[&pad(group, &c), &pad(group, server_s), &secret_k]);
    let expected_ps = hash_parts(&[&pad(group, &c), &proof_pc, &secret_k]);
    Ok(SrpClientSession { public_c: c, secret_k, proof_pc, expected_ps })
}

/// Verify the client's proof. On success returns `(K, P_S)`; on failure the
/// server emits nothing.
pub fn srp_server_verify(
    state: &SrpServerState,
    client_c: &BigUint,
    client_proof: &[u8; PROOF_LEN],
) -> Result<([u8; SECRET_LEN], [u8; PROOF_LEN]), SrpError> {
    let group = &state.group;
    let n = &group.modulus;
    if (client_c % n).bits() == 0 {
        return Err(SrpError::InvalidClientEphemeral);
    }
    let u = hash_to_int(&[&pad(group, client_c), &pad(group, &state.public_s)]);
    if (&u % n).bits() == 0 {
        return Err(SrpError::InvalidClientEphemeral);
    }
    // premaster = (C * v^u)^b mod N
    let premaster = ((client_c % n) * state.verifier.modpow(&u, n) % n).modpow(&state.ephemeral_b, n);
    let secret_k = hash_parts(&[&pad(group, &premaster)]);
    let expected_pc = hash_parts(&[&pad(group, client_c), &pad(group, &state.public_s), &secret_k]);
    if !bool::from(expected_pc.ct_eq(client_proof)) {
        return Err(SrpError::ProofMismatch);
    }
    let proof_ps = hash_parts(&[&pad(group, client_c), &expected_pc, &secret_k]);
    Ok((secret_k, proof_ps))
}
