//! Bag-of-words frequency vectors.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::textprep::Vocabulary;

/// Raw occurrence counts, one entry per vocabulary word.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureVector {
    counts: Vec<u32>,
}

impl FeatureVector {
    pub fn zeros(len: usize) -> Self {
        Self { counts: vec![0; len] }
    }

    pub fn from_counts(counts: Vec<u32>) -> Self {
        Self { counts }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }

    /// Network input.
    pub fn to_input(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| f64::from(c)).collect()
    }
}

/// Counts plus the number of tokens that were not in the vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vectorized {
    pub vector: FeatureVector,
    pub oov: usize,
}

pub fn vectorize_with_oov<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary) -> Vectorized {
    let mut vector = FeatureVector::zeros(vocab.len());
    let mut oov = 0;
    for token in tokens {
        match vocab.index_of(token.as_ref()) {
            Some(i) => vector.counts[i] += 1,
            None => oov += 1,
        }
    }
    Vectorized { vector, oov }
}

/// Out-of-vocabulary tokens are ignored.
pub fn vectorize<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary) -> FeatureVector {
    vectorize_with_oov(tokens, vocab).vector
}
