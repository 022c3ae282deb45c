//! Sparse TF-IDF features over preprocessed tokens.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textprep::{TokenizedDoc, Vocabulary};

/// Sparse vector with strictly increasing indices and finite nonzero weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    dims: usize,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseVector {
    pub fn zeros(dims: usize) -> Self {
        SparseVector { dims, indices: Vec::new(), values: Vec::new() }
    }

    /// Builds from `(index, weight)` pairs in any order. Duplicate indices are
    /// summed and zeros dropped.
    pub fn from_pairs(dims: usize, pairs: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        for (i, w) in pairs {
            if i >= dims {
                return Err(Error::DimMismatch { expected: dims, actual: i + 1 });
            }
            if !w.is_finite() {
                return Err(Error::Invariant(format!("non-finite weight at index {i}")));
            }
            *acc.entry(i).or_default() += w;
        }
        let (indices, values) = acc.into_iter().filter(|&(_, w)| w != 0.0).map(|(i, w)| (i as u32, w)).unzip();
        Ok(SparseVector { dims, indices, values })
    }

    pub fn from_dense(values: &[f64]) -> Self {
        Self::from_pairs(values.len(), values.iter().copied().enumerate()).expect("dense input is in range")
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().zip(&self.values).map(|(&i, &v)| (i as usize, v))
    }

    pub fn get(&self, i: usize) -> f64 {
        self.indices.binary_search(&(i as u32)).map(|p| self.values[p]).unwrap_or(0.0)
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < self.indices.len() && j < other.indices.len() {
            match self.indices[i].cmp(&other.indices[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.values[i] * other.values[j];
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dims];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }
}

/// Cosine similarity; 0.0 when either side is the zero vector.
pub fn cosine(u: &SparseVector, v: &SparseVector) -> Result<f64> {
    if u.dims != v.dims {
        return Err(Error::DimMismatch { expected: u.dims, actual: v.dims });
    }
    let (nu, nv) = (u.norm(), v.norm());
    if nu == 0.0 || nv == 0.0 {
        return Ok(0.0);
    }
    Ok((u.dot(v) / (nu * nv)).clamp(-1.0, 1.0))
}

/// Smoothed idf `ln((1 + n) / (1 + df)) + 1` with raw-count tf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfIdfModel {
    vocab: Vocabulary,
    idf: Vec<f64>,
    normalize: bool,
}

impl TfIdfModel {
    /// Fits idf weights from the training documents' frequencies of `vocab` terms.
    pub fn fit(docs: &[TokenizedDoc], vocab: Vocabulary) -> Self {
        Self::fit_with(docs, vocab, true)
    }

    pub fn fit_with(docs: &[TokenizedDoc], vocab: Vocabulary, normalize: bool) -> Self {
        let mut df = vec![0usize; vocab.len()];
        let mut seen = vec![usize::MAX; vocab.len()];
        for (d, doc) in docs.iter().enumerate() {
            for t in &doc.proc_tokens {
                if let Some(i) = vocab.index_of(t) {
                    if seen[i] != d {
                        seen[i] = d;
                        df[i] += 1;
                    }
                }
            }
        }
        let n = docs.len() as f64;
        let idf = df.iter().map(|&f| ((1.0 + n) / (1.0 + f as f64)).ln() + 1.0).collect();
        TfIdfModel { vocab, idf, normalize }
    }

    pub fn dims(&self) -> usize {
        self.vocab.len()
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn normalizes(&self) -> bool {
        self.normalize
    }

    /// Out-of-vocabulary tokens are ignored; a document with none in vocabulary
    /// maps to the zero vector.
    pub fn transform(&self, doc: &TokenizedDoc) -> SparseVector {
        self.transform_tokens(&doc.proc_tokens)
    }

    pub fn transform_tokens(&self, tokens: &[String]) -> SparseVector {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for t in tokens {
            if let Some(i) = self.vocab.index_of(t) {
                *counts.entry(i).or_default() += 1.0;
            }
        }
        let mut pairs: Vec<(usize, f64)> = counts.into_iter().map(|(i, c)| (i, c * self.idf[i])).collect();
        if self.normalize {
            let norm = pairs.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
            if norm > 0.0 {
                pairs.iter_mut().for_each(|(_, w)| *w /= norm);
            }
        }
        SparseVector {
            dims: self.dims(),
            indices: pairs.iter().map(|&(i, _)| i as u32).collect(),
            values: pairs.into_iter().map(|(_, w)| w).collect(),
        }
    }
}

/// Arithmetic mean of vectors as a dense array.
pub fn dense_mean<'a>(dims: usize, vectors: impl IntoIterator<Item = &'a SparseVector>) -> Vec<f64> {
    let mut acc = vec![0.0; dims];
    let mut n = 0usize;
    for v in vectors {
        for (i, w) in v.iter() {
            acc[i] += w;
        }
        n += 1;
    }
    if n > 0 {
        acc.iter_mut().for_each(|x| *x /= n as f64);
    }
    acc
}

/// Writes `row col weight` triplets, one per line.
pub fn write_triplets(rows: &[SparseVector], mut out: impl Write) -> Result<()> {
    for (r, v) in rows.iter().enumerate() {
        for (c, w) in v.iter() {
            writeln!(out, "{r} {c} {w}")?;
        }
    }
    Ok(())
}
