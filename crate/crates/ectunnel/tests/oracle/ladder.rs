//! Independent X25519 reference: Montgomery ladder over GF(2^255 - 19)
//! using bignum arithmetic, per RFC 7748 section 5.

use num_bigint::BigUint;

fn prime() -> BigUint {
    (BigUint::from(1u8) << 255u32) - BigUint::from(19u8)
}

fn decode_scalar(scalar: &[u8; 32]) -> BigUint {
    let mut clamped = *scalar;
    clamped[0] &= 0xf8;
    clamped[31] &= 0x7f;
    clamped[31] |= 0x40;
    BigUint::from_bytes_le(&clamped)
}

fn decode_u(u: &[u8; 32]) -> BigUint {
    let mut masked = *u;
    // The top bit of the final byte is ignored on input.
    masked[31] &= 0x7f;
    BigUint::from_bytes_le(&masked)
}

fn encode_u(value: &BigUint) -> [u8; 32] {
    let mut out = [0u8; 32];
    let bytes = value.to_bytes_le();
    out[..bytes.len()].copy_from_slice(&bytes);
    out
}

fn inverse(value: &BigUint, p: &BigUint) -> BigUint {
    // Fermat: value^(p-2) mod p.
    value.modpow(&(p - BigUint::from(2u8)), p)
}

pub fn x25519(scalar: &[u8; 32], point: &[u8; 32]) -> [u8; 32] {
    let p = prime();
    let k = decode_scalar(scalar);
    let x1 = decode_u(point) % &p;
    let a24 = BigUint::from(121_665u32);

    let mut x2 = BigUint::from(1u8);
    let mut z2 = BigUint::from(0u8);
    let mut x3 = x1.clone();
    let mut z3 = BigUint::from(1u8);
    let mut swap = false;

    for t in (0..255).rev() {
        let k_t = ((&k >> t) & BigUint::from(1u8)) == BigUint::from(1u8);
        if swap != k_t {
            std::mem::swap(&mut x2, &mut x3);
            std::mem::swap(&mut z2, &mut z3);
        }
        swap = k_t;

        let a = (&x2 + &z2) % &p;
        let aa = (&a * &a) % &p;
        let b = ((&x2 + &p) - &z2) % &p;
        let bb = (&b * &b) % &p;
        let e = ((&aa + &p) - &bb) % &p;
        let c = (&x3 + &z3) % &p;
        let d = ((&x3 + &p) - &z3) % &p;
        let da = (&d * &a) % &p;
        let cb = (&c * &b) % &p;
        let t1 = (&da + &cb) % &p;
        x3 = (&t1 * &t1) % &p;
        let t2 = ((&da + &p) - &cb) % &p;
        z3 = (&x1 * ((&t2 * &t2) % &p)) % &p;
        x2 = (&aa * &bb) % &p;
        z2 = (&e * ((&aa + (&a24 * &e) % &p) % &p)) % &p;
    }
    if swap {
        std::mem::swap(&mut x2, &mut x3);
        std::mem::swap(&mut z2, &mut z3);
    }

    let result = if z2 == BigUint::from(0u8) {
        BigUint::from(0u8)
    } else {
        (&x2 * inverse(&z2, &p)) % &p
    };
    encode_u(&result)
}

#[cfg(test)]
mod tests {
    use super::x25519;

    fn h32(s: &str) -> [u8; 32] {
        hex::decode(s).unwrap().try_into().unwrap()
    }

    #[test]
    fn rfc7748_vector_one() {
        let scalar = h32("a546e36bf0527c9d3b16154b82465edd62144c0ac1fc5a18506a2244ba449ac4");
        let point = h32("e6db6867583030db3594c1a424b15f7c726624ec26b3353b10a903a6d0ab1c4c");
        let expected = h32("c3da55379de9c6908e94ea4df28d084f32eccf03491c71f754b4075577a28552");
        assert_eq!(x25519(&scalar, &point), expected);
    }

    #[test]
    fn rfc7748_vector_two() {
        let scalar = h32("4b66e9d4d1b4673c5ad22691957d6af5c11b6421e0ea01d42ca4169e7918ba0d");
        let point = h32("e5210f12786811d3f4b7959d0538ae2c31dbe7106fc03c3efc4cd549c715a493");
        let expected = h32("95cbde9476e8907d7aade45cb4b873f88b595a68799fa152e6f8f7647aac7957");
        assert_eq!(x25519(&scalar, &point), expected);
    }

    #[test]
    fn rfc7748_iterated_one_thousand() {
        // RFC 7748 section 5.2 iteration test: after 1 iteration and after
        // 1,000 iterations of k' = X25519(k, u).
        let mut k = h32("0900000000000000000000000000000000000000000000000000000000000000");
        let mut u = k;
        for i in 0..1000 {
            let next = x25519(&k, &u);
            u = k;
            k = next;
            if i == 0 {
                assert_eq!(
                    hex::encode(k),
                    "422c8e7a6227d7bca1350b3e2bb7279f7897b87bb6854b783c60e80311ae3079"
                );
            }
        }
        assert_eq!(
            hex::encode(k),
            "684cf59ba83309552800ef566f2f4d3c1c3887c49360e3875f2eb94d99532c51"
        );
    }
}
