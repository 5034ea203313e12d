//! Independent textbook SRP-6a reference.
//!
//! Uses its own square-and-multiply modular exponentiation and the SHA-256
//! reference from this oracle set, so no arithmetic or hashing is shared
//! with the implementation under test.

use num_bigint::BigUint;

use super::sha256::sha256;

/// Square-and-multiply, written out rather than delegating to the bignum
/// library's modpow.
pub fn modpow(base: &BigUint, exponent: &BigUint, modulus: &BigUint) -> BigUint {
    let one = BigUint::from(1u8);
    let mut result = one.clone();
    let base = base % modulus;
    for bit in (0..exponent.bits()).rev() {
        result = (&result * &result) % modulus;
        if ((exponent >> bit) & &one) == one {
            result = (&result * &base) % modulus;
        }
    }
    result
}

fn pad(value: &BigUint, len: usize) -> Vec<u8> {
    let bytes = value.to_bytes_be();
    let mut out = vec![0u8; len.saturating_sub(bytes.len())];
    out.extend_from_slice(&bytes);
    out
}

fn hash_int(parts: &[&[u8]]) -> BigUint {
    let mut buffer = Vec::new();
    for part in parts {
        buffer.extend_from_slice(part);
    }
    BigUint::from_bytes_be(&sha256(&buffer))
}

pub struct SrpTranscript {
    pub verifier: BigUint,
    pub public_c: BigUint,
    pub public_s: BigUint,
    pub client_secret: [u8; 32],
    pub server_secret: [u8; 32],
    pub proof_pc: [u8; 32],
    pub proof_ps: [u8; 32],
}

/// Run a complete SRP-6a exchange from fixed ephemerals `a` and `b`.
#[allow(clippy::too_many_arguments)]
pub fn run_exchange(
    n: &BigUint,
    g: &BigUint,
    salt: &[u8],
    identity: &str,
    password: &str,
    server_password: &str,
    a: &BigUint,
    b: &BigUint,
) -> SrpTranscript {
    let len = (n.bits() as usize).div_ceil(8);

    // k = H(N | pad(g))
    let k = hash_int(&[&n.to_bytes_be(), &pad(g, len)]);

    // x = H(salt | H(identity ":" password)); the server registered the
    // verifier from `server_password` (possibly different).
    let x_of = |pw: &str| {
        let inner = sha256(&[identity.as_bytes(), b":", pw.as_bytes()].concat());
        hash_int(&[salt, &inner])
    };
    let x = x_of(password);
    let verifier = modpow(g, &x_of(server_password), n);

    // C = g^a, S = k*v + g^b
    let public_c = modpow(g, a, n);
    let public_s = (&k * &verifier + modpow(g, b, n)) % n;

    // u = H(pad(C) | pad(S))
    let u = hash_int(&[&pad(&public_c, len), &pad(&public_s, len)]);

    // Client premaster: (S - k * g^x) ^ (a + u*x)
    let gx = modpow(g, &x, n);
    let base = ((&public_s + n * &k) - (&k * &gx) % n) % n;
    let client_premaster = modpow(&base, &(a + &u * &x), n);
    // Server premaster: (C * v^u) ^ b
    let server_premaster = modpow(&((&public_c * modpow(&verifier, &u, n)) % n), b, n);

    let client_secret = sha256(&pad(&client_premaster, len));
    let server_secret = sha256(&pad(&server_premaster, len));

    // P_C = H(pad(C) | pad(S) | K); P_S = H(pad(C) | P_C | K)
    let proof_pc = sha256(&[pad(&public_c, len), pad(&public_s, len), client_secret.to_vec()].concat());
    let proof_ps = sha256(&[pad(&public_c, len), proof_pc.to_vec(), client_secret.to_vec()].concat());

    SrpTranscript {
        verifier,
        public_c,
        public_s,
        client_secret,
        server_secret,
        proof_pc,
        proof_ps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modpow_matches_library() {
        let n = BigUint::parse_bytes(b"f2890345298abcdef1234567", 16).unwrap();
        let b = BigUint::from(0x1234_5678u32);
        let e = BigUint::from(0x09ab_cdef_u32);
        assert_eq!(modpow(&b, &e, &n), b.modpow(&e, &n));
        assert_eq!(modpow(&b, &BigUint::from(0u8), &n), BigUint::from(1u8));
    }

    #[test]
    fn matched_passwords_agree() {
        let n = BigUint::parse_bytes(b"eeaf0ab9adb38dd69c33f80afa8fc5e86072618775ff3c0b9ea2314c9c256576d674df7496ea81d3383b4813d692c6e0e0d5d8e250b98be48e495c1d6089dad15dc7d7b46154d6b6ce8ef4ad69b15d4982559b297bcf1885c529f566660e57ec68edbc3c05726cc02fd4cbf4976eaa9afd5138fe8376435b9fc61d2fc0eb06e3", 16).unwrap();
        let g = BigUint::from(2u8);
        let t = run_exchange(
            &n,
            &g,
            b"some-salt",
            "user",
            "password",
            "password",
            &BigUint::from(0xa11ceu32),
            &BigUint::from(0xb0bu32),
        );
        assert_eq!(t.client_secret, t.server_secret);
    }

    #[test]
    fn mismatched_passwords_disagree() {
        let n = BigUint::parse_bytes(b"eeaf0ab9adb38dd69c33f80afa8fc5e86072618775ff3c0b9ea2314c9c256576d674df7496ea81d3383b4813d692c6e0e0d5d8e250b98be48e495c1d6089dad15dc7d7b46154d6b6ce8ef4ad69b15d4982559b297bcf1885c529f566660e57ec68edbc3c05726cc02fd4cbf4976eaa9afd5138fe8376435b9fc61d2fc0eb06e3", 16).unwrap();
        let g = BigUint::from(2u8);
        let t = run_exchange(
            &n,
            &g,
            b"some-salt",
            "user",
            "password",
            "different",
            &BigUint::from(0xa11ceu32),
            &BigUint::from(0xb0bu32),
        );
        assert_ne!(t.client_secret, t.server_secret);
    }
}
