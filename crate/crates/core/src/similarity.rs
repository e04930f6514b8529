//! Baseline similarity measures: k-gram shingles with exact Jaccard, MinHash
//! estimation, the diff-derived Levenshtein similarity, and Pearson
//! correlation between them.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diff::EditScript;
use crate::tokenize::TokenStream;

#[derive(Debug, Error, PartialEq)]
pub enum SimilarityError {
    #[error("shingle size k must be at least 1")]
    ZeroK,
    #[error("cannot compare {0}-gram shingles with {1}-gram shingles")]
    MismatchedK(usize, usize),
    #[error("num_hashes must be at least 1")]
    ZeroHashes,
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("correlation needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("correlation is undefined: a series has zero variance")]
    ZeroVariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Jaccard,
    Minhash,
    DiffLevenshtein,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityScore {
    pub value: f64,
    pub method: Method,
}

impl SimilarityScore {
    fn new(value: f64, method: Method) -> Self {
        debug_assert!((0.0..=1.0).contains(&value));
        SimilarityScore { value, method }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShingleSet {
    k: usize,
    shingles: BTreeSet<Vec<String>>,
}

impl ShingleSet {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.shingles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shingles.is_empty()
    }

    pub fn contains(&self, shingle: &[&str]) -> bool {
        let key: Vec<String> = shingle.iter().map(|s| (*s).to_owned()).collect();
        self.shingles.contains(&key)
    }

    pub fn iter(&self) -> impl Iterator<Item = &[String]> {
        self.shingles.iter().map(Vec::as_slice)
    }
}

/// k-gram shingles over word-like tokens; whitespace tokens are skipped.
pub fn shingle(tokens: &TokenStream, k: usize) -> Result<ShingleSet, SimilarityError> {
    shingle_with(tokens, k, false)
}

pub fn shingle_with(
    tokens: &TokenStream,
    k: usize,
    keep_whitespace: bool,
) -> Result<ShingleSet, SimilarityError> {
    if k == 0 {
        return Err(SimilarityError::ZeroK);
    }
    let words: Vec<&str> = tokens
        .iter()
        .filter(|t| keep_whitespace || !t.is_whitespace())
        .map(|t| t.text.as_str())
        .collect();
    let mut shingles = BTreeSet::new();
    if words.is_empty() {
        // nothing to shingle
    } else if words.len() < k {
        shingles.insert(words.iter().map(|w| (*w).to_owned()).collect());
    } else {
        for w in words.windows(k) {
            shingles.insert(w.iter().map(|w| (*w).to_owned()).collect());
        }
    }
    Ok(ShingleSet { k, shingles })
}

pub fn jaccard(a: &ShingleSet, b: &ShingleSet) -> Result<SimilarityScore, SimilarityError> {
    if a.k != b.k {
        return Err(SimilarityError::MismatchedK(a.k, b.k));
    }
    if a.is_empty() && b.is_empty() {
        return Ok(SimilarityScore::new(1.0, Method::Jaccard));
    }
    let inter = a.shingles.intersection(&b.shingles).count();
    let union = a.len() + b.len() - inter;
    Ok(SimilarityScore::new(inter as f64 / union as f64, Method::Jaccard))
}

/// MinHash signature: per-function minima over the set.
pub fn minhash_signature(set: &ShingleSet, num_hashes: usize, seed: u64) -> Vec<u64> {
    let seeds = hash_seeds(num_hashes, seed);
    let mut sig = vec![u64::MAX; num_hashes];
    for sh in &set.shingles {
        let base = fingerprint(sh);
        for (slot, s) in sig.iter_mut().zip(&seeds) {
            let h = mix64(base ^ s);
            if h < *slot {
                *slot = h;
            }
        }
    }
    sig
}

pub fn minhash_estimate(
    a: &ShingleSet,
    b: &ShingleSet,
    num_hashes: usize,
    seed: u64,
) -> Result<SimilarityScore, SimilarityError> {
    if num_hashes == 0 {
        return Err(SimilarityError::ZeroHashes);
    }
    if a.k != b.k {
        return Err(SimilarityError::MismatchedK(a.k, b.k));
    }
    let value = match (a.is_empty(), b.is_empty()) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        _ => {
            let sa = minhash_signature(a, num_hashes, seed);
            let sb = minhash_signature(b, num_hashes, seed);
            let same = sa.iter().zip(&sb).filter(|(x, y)| x == y).count();
            same as f64 / num_hashes as f64
        }
    };
    Ok(SimilarityScore::new(value, Method::Minhash))
}

fn hash_seeds(n: usize, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random()).collect()
}

/// FNV-1a over the tokens, with a separator byte that UTF-8 never produces.
fn fingerprint(shingle: &[String]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    for tok in shingle {
        for &b in tok.as_bytes().iter().chain(std::iter::once(&0xFFu8)) {
            h ^= u64::from(b);
            h = h.wrapping_mul(PRIME);
        }
    }
    h
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `1 - (deleted + inserted) / (|old| + |new|)` over tokens.
pub fn diff_similarity(script: &EditScript) -> SimilarityScore {
    let total = script.old_len() + script.new_len();
    let value = if total == 0 {
        1.0
    } else {
        1.0 - script.edit_cost() as f64 / total as f64
    };
    SimilarityScore::new(value, Method::DiffLevenshtein)
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, SimilarityError> {
    if xs.len() != ys.len() {
        return Err(SimilarityError::LengthMismatch(xs.len(), ys.len()));
    }
    let n = xs.len();
    if n < 3 {
        return Err(SimilarityError::TooFewPoints(n));
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(SimilarityError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}
