//! Polynomial-evaluation MAC over GF(2^t).

use rand::Rng;
use serde::Serialize;

use crate::protocol::ProtocolError;

/// Low bits of the reduction polynomial for each supported width.
fn reduction(t: u32) -> Option<u64> {
    match t {
        8 => Some(0x1B),
        16 => Some(0x2B),
        32 => Some(0x8D),
        64 => Some(0x1B),
        _ => None,
    }
}

fn mask(t: u32) -> u64 {
    if t == 64 {
        u64::MAX
    } else {
        (1u64 << t) - 1
    }
}

/// Product in GF(2^t).
pub fn gf_mul(mut a: u64, mut b: u64, t: u32) -> u64 {
    let low = reduction(t).expect("supported field width");
    let m = mask(t);
    a &= m;
    b &= m;
    let mut r = 0u64;
    while b != 0 {
        if b & 1 == 1 {
            r ^= a;
        }
        b >>= 1;
        let carry = (a >> (t - 1)) & 1;
        a = (a << 1) & m;
        if carry == 1 {
            a ^= low;
        }
    }
    r
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MacKey {
    pub t: u32,
    pub k1: u64,
    pub k2: u64,
}

impl MacKey {
    pub fn new(t: u32, k1: u64, k2: u64) -> Result<Self, ProtocolError> {
        if reduction(t).is_none() {
            return Err(ProtocolError::Argument(format!("unsupported field width {t}")));
        }
        Ok(Self { t, k1: k1 & mask(t), k2: k2 & mask(t) })
    }

    pub fn random<R: Rng + ?Sized>(t: u32, rng: &mut R) -> Result<Self, ProtocolError> {
        Self::new(t, rng.gen(), rng.gen())
    }
}

/// Field elements of a message: `t/8`-byte little-endian chunks, then the
/// byte length.
pub fn coefficients(message: &[u8], t: u32) -> Vec<u64> {
    let width = (t / 8) as usize;
    let mut out: Vec<u64> =
        message.chunks(width).map(|c| c.iter().rev().fold(0u64, |acc, &b| (acc << 8) | b as u64)).collect();
    out.push(message.len() as u64 & mask(t));
    out
}

/// `p_m(k1) k1 + k2`, with `p_m` evaluated by Horner's rule.
pub fn extractor_mac_tag(key: &MacKey, message: &[u8]) -> Result<u64, ProtocolError> {
    if message.is_empty() {
        return Err(ProtocolError::Argument("empty message".into()));
    }
    let p = coefficients(message, key.t).into_iter().fold(0u64, |acc, c| gf_mul(acc, key.k1, key.t) ^ c);
    Ok(gf_mul(p, key.k1, key.t) ^ key.k2)
}

pub fn verify_tag(key: &MacKey, message: &[u8], tag: u64) -> bool {
    extractor_mac_tag(key, message).is_ok_and(|t| t == tag)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_axioms_gf256() {
        // 0x53 * 0xCA = 1 in the AES field.
        assert_eq!(gf_mul(0x53, 0xCA, 8), 1);
        for a in 1..256u64 {
            assert_eq!(gf_mul(a, 1, 8), a);
            let inverse = (1..256u64).filter(|&b| gf_mul(a, b, 8) == 1).count();
            assert_eq!(inverse, 1);
        }
    }

    #[test]
    fn wide_fields_commute() {
        let (a, b, c) = (0x1234_5678_9abc_def0u64, 0x0fed_cba9_8765_4321u64, 0xdead_beefu64);
        for t in [16, 32, 64] {
            assert_eq!(gf_mul(a, b, t), gf_mul(b, a, t));
            assert_eq!(gf_mul(a, b ^ c, t), gf_mul(a, b, t) ^ gf_mul(a, c, t));
        }
    }

    #[test]
    fn tag_verifies() {
        let key = MacKey::new(32, 0x1357, 0x2468).unwrap();
        let tag = extractor_mac_tag(&key, b"hello").unwrap();
        assert!(verify_tag(&key, b"hello", tag));
        assert!(!verify_tag(&key, b"hellp", tag));
        assert!(extractor_mac_tag(&key, b"").is_err());
        assert!(MacKey::new(12, 0, 0).is_err());
    }

    #[test]
    fn exhaustive_single_flip_collisions() {
        // For fixed k2, two distinct messages share a tag for at most `deg` of
        // the 2^t values of k1, with `deg` the number of coefficients.
        let message = b"abcdefg".to_vec();
        let deg = coefficients(&message, 8).len();
        for pos in 0..message.len() * 8 {
            let mut other = message.clone();
            other[pos / 8] ^= 1 << (pos % 8);
            let hits = (0..256u64)
                .filter(|&k1| {
                    let key = MacKey::new(8, k1, 0x5a).unwrap();
                    extractor_mac_tag(&key, &message).unwrap() == extractor_mac_tag(&key, &other).unwrap()
                })
                .count();
            assert!(hits <= deg, "flip {pos}: {hits} colliding keys");
        }
    }

    #[test]
    fn length_coefficient_separates_zero_padding() {
        assert_ne!(coefficients(&[1, 0], 16), coefficients(&[1], 16));
        assert_eq!(coefficients(&[1, 2, 3], 16), vec![0x0201, 0x03, 3]);
    }
}
