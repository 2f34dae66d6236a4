use serde::{Deserialize, Serialize};

use crate::provider::{EmbeddingProvider, ProviderError};
use crate::text::terms;

pub const DEFAULT_EMBEDDING_DIM: usize = 256;

/// A unit-norm embedding. `degenerate` marks the all-zero sentinel returned
/// for text with no usable terms; it has zero similarity to everything.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub vector: Vec<f64>,
    pub degenerate: bool,
}

impl Embedding {
    pub fn sentinel(dim: usize) -> Self {
        Self {
            vector: vec![0.0; dim],
            degenerate: true,
        }
    }

    /// Normalizes `raw`, falling back to the sentinel when its norm is zero.
    pub fn normalized(raw: Vec<f64>) -> Self {
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Self::sentinel(raw.len());
        }
        Self {
            vector: raw.into_iter().map(|x| x / norm).collect(),
            degenerate: false,
        }
    }
}

/// Cosine similarity; zero when either side has zero norm or the dimensions differ.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return 0.0;
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na.sqrt() * nb.sqrt())
}

/// Feature-hashing embedder over lowercased unigrams and bigrams.
///
/// Each feature lands in one of `dim` buckets with a hash-derived sign
/// (FNV-1a, so output is stable across platforms and releases).
#[derive(Debug, Clone, Copy)]
pub struct HashEmbedder {
    dim: usize,
}

impl HashEmbedder {
    pub const fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self { dim }
    }
}

impl Default for HashEmbedder {
    fn default() -> Self {
        Self::new(DEFAULT_EMBEDDING_DIM)
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl HashEmbedder {
    fn add_feature(&self, v: &mut [f64], feature: &str, weight: f64) {
        let h = fnv1a(feature.as_bytes());
        let bucket = (h % self.dim as u64) as usize;
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        v[bucket] += sign * weight;
    }
}

impl EmbeddingProvider for HashEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Embedding, ProviderError> {
        let toks = terms(text);
        if toks.is_empty() {
            return Ok(Embedding::sentinel(self.dim));
        }
        let mut v = vec![0.0; self.dim];
        for t in &toks {
            self.add_feature(&mut v, &format!("u:{t}"), 1.0);
        }
        for w in toks.windows(2) {
            self.add_feature(&mut v, &format!("b:{} {}", w[0], w[1]), 0.5);
        }
        Ok(Embedding::normalized(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_unit_norm() {
        let e = HashEmbedder::default();
        let a = e.embed("locate the failing parser function").unwrap();
        let b = e.embed("locate the failing parser function").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.vector.len(), DEFAULT_EMBEDDING_DIM);
        let norm: f64 = a.vector.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
        assert!((cosine(&a.vector, &b.vector) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_text_is_flagged_sentinel() {
        let e = HashEmbedder::default().embed("").unwrap();
        assert!(e.degenerate);
        assert!(e.vector.iter().all(|&x| x == 0.0));
        let punct = HashEmbedder::default().embed(" ... !!").unwrap();
        assert!(punct.degenerate);
    }

    #[test]
    fn related_texts_are_more_similar() {
        let e = HashEmbedder::default();
        let q = e.embed("open the fridge and cool the apple").unwrap();
        let near = e.embed("cool the apple in the fridge").unwrap();
        let far = e.embed("refactor module imports").unwrap();
        assert!(cosine(&q.vector, &near.vector) > cosine(&q.vector, &far.vector));
    }

    #[test]
    fn cosine_degenerate_cases() {
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 0.0]), 0.0);
        assert_eq!(cosine(&[1.0], &[1.0, 0.0]), 0.0);
        assert!((cosine(&[1.0, 0.0], &[-1.0, 0.0]) + 1.0).abs() < 1e-12);
    }
}
