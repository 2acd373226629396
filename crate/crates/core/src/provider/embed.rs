//! Seeded hash-projection embeddings: a bag of lower-cased alphanumeric
//! tokens, each hashed onto one signed coordinate.

pub const MOCK_DIMENSION: usize = 64;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(seed: u64, bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for b in seed.to_le_bytes().iter().chain(bytes) {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    // final avalanche so nearby inputs spread over all coordinates
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    h ^= h >> 33;
    h
}

pub fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// Embedding of `text` under `seed`. Non-empty token sets always give a
/// non-zero vector; text without tokens gives the zero vector.
pub fn hash_embedding(seed: u64, dimension: usize, text: &str) -> Vec<f64> {
    let dimension = dimension.max(1);
    let mut v = vec![0.0; dimension];
    let mut any = false;
    for token in tokens(text) {
        any = true;
        let h = fnv1a(seed, token.as_bytes());
        let index = (h % dimension as u64) as usize;
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        v[index] += sign;
    }
    if any && v.iter().all(|x| *x == 0.0) {
        // every token cancelled out; fall back to a whole-text coordinate
        let h = fnv1a(seed, text.as_bytes());
        v[(h % dimension as u64) as usize] = 1.0;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::cosine;

    #[test]
    fn deterministic_and_seeded() {
        let a = hash_embedding(1, MOCK_DIMENSION, "write the parser");
        assert_eq!(a, hash_embedding(1, MOCK_DIMENSION, "write the parser"));
        assert_ne!(a, hash_embedding(2, MOCK_DIMENSION, "write the parser"));
    }

    #[test]
    fn bag_of_words() {
        let a = hash_embedding(3, MOCK_DIMENSION, "Parser, write the!");
        let b = hash_embedding(3, MOCK_DIMENSION, "write the parser");
        assert_eq!(a, b);
        assert!((cosine(&a, &b).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_text_is_zero() {
        assert!(hash_embedding(3, MOCK_DIMENSION, " ,. ").iter().all(|x| *x == 0.0));
    }
}
