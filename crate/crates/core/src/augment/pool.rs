use std::collections::{BTreeMap, HashSet};

use crate::error::{Error, Result};
use crate::textprep::{min_doc_count, strip_punctuation, tokenize, StopWordSet};

/// Lowercase, punctuation-stripped form used to compare raw tokens.
pub(crate) fn token_key(raw: &str) -> String {
    strip_punctuation(raw).to_lowercase()
}

/// Frequent non-stop words of the training descriptions, the source of
/// inserted and substituted words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequentWordPool {
    words: Vec<String>,
    weights: Vec<usize>,
}

impl FrequentWordPool {
    /// Words in at least `ceil(min_doc_fraction * n)` descriptions, sorted.
    pub fn build<'a>(
        descriptions: impl IntoIterator<Item = &'a str>,
        min_doc_fraction: f64,
        stop_words: &StopWordSet,
    ) -> Self {
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        let mut n_docs = 0;
        for d in descriptions {
            n_docs += 1;
            let uniq: HashSet<String> = tokenize(d).into_iter().map(token_key).collect();
            for w in uniq {
                if !w.is_empty() && !stop_words.contains(&w) {
                    *df.entry(w).or_default() += 1;
                }
            }
        }
        let threshold = min_doc_count(min_doc_fraction, n_docs).max(1);
        let (words, weights) = df.into_iter().filter(|&(_, n)| n >= threshold).unzip();
        FrequentWordPool { words, weights }
    }

    pub fn from_words(words: impl IntoIterator<Item = impl Into<String>>) -> Self {
        let mut words: Vec<String> = words.into_iter().map(Into::into).collect();
        words.sort();
        words.dedup();
        let weights = vec![1; words.len()];
        FrequentWordPool { words, weights }
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn weights(&self) -> &[usize] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.binary_search_by(|w| w.as_str().cmp(word)).is_ok()
    }

    pub(crate) fn require_non_empty(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::Config("frequent-word pool is empty".into()));
        }
        Ok(())
    }

    /// Uniform draw over pool members.
    pub fn sample(&self, rng: &mut impl rand::Rng) -> &str {
        &self.words[rng.gen_range(0..self.words.len())]
    }

    /// Uniform draw over members other than `avoid`, if any exist.
    pub fn sample_excluding(&self, avoid: &str, rng: &mut impl rand::Rng) -> Option<&str> {
        match self.words.binary_search_by(|w| w.as_str().cmp(avoid)) {
            Ok(_) if self.words.len() == 1 => None,
            Ok(pos) => {
                let mut i = rng.gen_range(0..self.words.len() - 1);
                if i >= pos {
                    i += 1;
                }
                Some(&self.words[i])
            }
            Err(_) => Some(self.sample(rng)),
        }
    }
}
