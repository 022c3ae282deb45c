use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::TokenizedDoc;
use crate::error::{Error, Result};

/// Term index over preprocessed tokens. Indices are dense, ordered by
/// descending document frequency then term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr")]
pub struct Vocabulary {
    terms: Vec<String>,
    doc_freq: Vec<usize>,
    n_docs: usize,
    min_doc_fraction: f64,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

#[derive(Deserialize)]
struct VocabularyRepr {
    terms: Vec<String>,
    doc_freq: Vec<usize>,
    n_docs: usize,
    min_doc_fraction: f64,
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(r: VocabularyRepr) -> Self {
        let mut v = Vocabulary {
            terms: r.terms,
            doc_freq: r.doc_freq,
            n_docs: r.n_docs,
            min_doc_fraction: r.min_doc_fraction,
            index: HashMap::new(),
        };
        v.rebuild_index();
        v
    }
}

/// Smallest document count a term needs: `ceil(fraction * n_docs)`.
pub fn min_doc_count(fraction: f64, n_docs: usize) -> usize {
    // 0.001 * 1000 must give exactly 1, not 2 after rounding noise.
    let raw = fraction * n_docs as f64;
    let rounded = raw.round();
    if (raw - rounded).abs() < 1e-9 {
        rounded as usize
    } else {
        raw.ceil() as usize
    }
}

pub fn fit_vocabulary(docs: &[TokenizedDoc], min_doc_fraction: f64) -> Result<Vocabulary> {
    if docs.is_empty() {
        return Err(Error::EmptyData("no documents to fit a vocabulary on".into()));
    }
    if !(0.0..=1.0).contains(&min_doc_fraction) {
        return Err(Error::Config(format!("min_doc_fraction {min_doc_fraction} outside [0, 1]")));
    }
    let mut df: HashMap<&str, usize> = HashMap::new();
    for d in docs {
        let uniq: HashSet<&str> = d.proc_tokens.iter().map(String::as_str).collect();
        for t in uniq {
            *df.entry(t).or_default() += 1;
        }
    }
    let threshold = min_doc_count(min_doc_fraction, docs.len());
    let mut kept: Vec<(&str, usize)> = df.into_iter().filter(|&(_, n)| n >= threshold).collect();
    if kept.is_empty() {
        return Err(Error::EmptyData(format!(
            "vocabulary is empty after requiring {threshold} of {} documents",
            docs.len()
        )));
    }
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let mut v = Vocabulary {
        terms: kept.iter().map(|(t, _)| t.to_string()).collect(),
        doc_freq: kept.iter().map(|&(_, n)| n).collect(),
        n_docs: docs.len(),
        min_doc_fraction,
        index: HashMap::new(),
    };
    v.rebuild_index();
    Ok(v)
}

impl Vocabulary {
    fn rebuild_index(&mut self) {
        self.index = self.terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, i: usize) -> &str {
        &self.terms[i]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn doc_freq(&self, i: usize) -> usize {
        self.doc_freq[i]
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn min_doc_fraction(&self) -> f64 {
        self.min_doc_fraction
    }

    /// SHA-256 over the ordered terms, hex encoded.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        for t in &self.terms {
            h.update(t.as_bytes());
            h.update([0]);
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}
