//! Independent SHA-256 reference, sharing no code with the crate.
//!
//! Even the round constants are derived here from first principles (integer
//! square/cube roots of the first primes) rather than transcribed, so a
//! transcription error cannot silently match one in the implementation.

fn first_primes(count: usize) -> Vec<u128> {
    let mut primes = Vec::new();
    let mut candidate: u128 = 2;
    while primes.len() < count {
        if primes.iter().all(|p| !candidate.is_multiple_of(*p)) {
            primes.push(candidate);
        }
        candidate += 1;
    }
    primes
}

/// Floor of the n-th root by binary search on u128.
fn iroot(value: u128, n: u32) -> u128 {
    let mut low: u128 = 0;
    let mut high: u128 = 1 << (128 / n);
    while low + 1 < high {
        let mid = low + (high - low) / 2;
        match mid.checked_pow(n) {
            Some(power) if power <= value => low = mid,
            _ => high = mid,
        }
    }
    low
}

/// First 32 bits of the fractional part of sqrt(p).
fn frac_sqrt(p: u128) -> u32 {
    (iroot(p << 64, 2) & 0xffff_ffff) as u32
}

/// First 32 bits of the fractional part of cbrt(p).
fn frac_cbrt(p: u128) -> u32 {
    (iroot(p << 96, 3) & 0xffff_ffff) as u32
}

fn constants() -> ([u32; 8], [u32; 64]) {
    let primes = first_primes(64);
    let mut h = [0u32; 8];
    for (i, p) in primes.iter().take(8).enumerate() {
        h[i] = frac_sqrt(*p);
    }
    let mut k = [0u32; 64];
    for (i, p) in primes.iter().enumerate() {
        k[i] = frac_cbrt(*p);
    }
    (h, k)
}

pub fn sha256(message: &[u8]) -> [u8; 32] {
    let (mut h, k) = constants();

    let mut padded = message.to_vec();
    padded.push(0x80);
    while padded.len() % 64 != 56 {
        padded.push(0);
    }
    padded.extend_from_slice(&((message.len() as u64) * 8).to_be_bytes());

    for block in padded.chunks_exact(64) {
        let mut w = [0u32; 64];
        for (i, word) in block.chunks_exact(4).enumerate() {
            w[i] = u32::from_be_bytes(word.try_into().unwrap());
        }
        for i in 16..64 {
            let s0 = w[i - 15].rotate_right(7) ^ w[i - 15].rotate_right(18) ^ (w[i - 15] >> 3);
            let s1 = w[i - 2].rotate_right(17) ^ w[i - 2].rotate_right(19) ^ (w[i - 2] >> 10);
            w[i] = w[i - 16]
                .wrapping_add(s0)
                .wrapping_add(w[i - 7])
                .wrapping_add(s1);
        }

        let [mut a, mut b, mut c, mut d, mut e, mut f, mut g, mut hh] = h;
        for i in 0..64 {
            let s1 = e.rotate_right(6) ^ e.rotate_right(11) ^ e.rotate_right(25);
            let ch = (e & f) ^ ((!e) & g);
            let temp1 = hh
                .wrapping_add(s1)
                .wrapping_add(ch)
                .wrapping_add(k[i])
                .wrapping_add(w[i]);
            let s0 = a.rotate_right(2) ^ a.rotate_right(13) ^ a.rotate_right(22);
            let maj = (a & b) ^ (a & c) ^ (b & c);
            let temp2 = s0.wrapping_add(maj);
            hh = g;
            g = f;
            f = e;
            e = d.wrapping_add(temp1);
            d = c;
            c = b;
            b = a;
            a = temp1.wrapping_add(temp2);
        }
        for (slot, value) in h.iter_mut().zip([a, b, c, d, e, f, g, hh]) {
            *slot = slot.wrapping_add(value);
        }
    }

    let mut digest = [0u8; 32];
    for (chunk, word) in digest.chunks_exact_mut(4).zip(h) {
        chunk.copy_from_slice(&word.to_be_bytes());
    }
    digest
}

#[cfg(test)]
mod tests {
    use super::sha256;

    #[test]
    fn fips_180_vectors() {
        assert_eq!(
            hex::encode(sha256(b"")),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
        assert_eq!(
            hex::encode(sha256(b"abc")),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(
            hex::encode(sha256(
                b"abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq"
            )),
            "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1"
        );
    }

    #[test]
    fn million_a() {
        let message = vec![b'a'; 1_000_000];
        assert_eq!(
            hex::encode(sha256(&message)),
            "cdc76e5c9914fb9281a1c7e284d73e67f1809a48a497200e046d39ccc7112cd0"
        );
    }
}
