//! Tokenization and preprocessing: punctuation rules, lowercasing, stop-word
//! removal and Porter stemming, plus document-frequency vocabularies.

mod porter;
mod vocab;

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use porter::porter_stem;
pub use vocab::{fit_vocabulary, min_doc_count, Vocabulary};

pub const SKLEARN_STOPWORDS: &str = include_str!("../../assets/stopwords_sklearn.txt");
pub const NLTK_STOPWORDS: &str = include_str!("../../assets/stopwords_nltk.txt");

/// Splits on Unicode whitespace. Never yields empty tokens.
pub fn tokenize(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

const TRAILING: &[char] = &['.', ',', ';', ':', '!', '?'];
const OPENERS: &[char] = &['(', '[', '{', '"', '\'', '`', '\u{201c}', '\u{2018}', '<'];
const CLOSERS: &[char] = &[')', ']', '}', '"', '\'', '`', '\u{201d}', '\u{2019}', '>'];

/// Removes sentence punctuation at the end of a token and enclosing quotes or
/// brackets. Interior punctuation (`file.c`, `cross-site`) is kept. The result
/// is always a contiguous substring of the input.
pub fn strip_punctuation(token: &str) -> &str {
    let mut s = token;
    loop {
        let next = s
            .trim_end_matches(|c| TRAILING.contains(&c) || CLOSERS.contains(&c))
            .trim_start_matches(|c| OPENERS.contains(&c));
        if next.len() == s.len() {
            return next;
        }
        s = next;
    }
}

/// Union of the bundled stop-word lists, lowercase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopWordSet {
    words: HashSet<String>,
}

impl StopWordSet {
    /// scikit-learn's and NLTK's English lists, unioned.
    pub fn bundled() -> Self {
        Self::from_lists([SKLEARN_STOPWORDS, NLTK_STOPWORDS]).expect("bundled stop-word lists are non-empty")
    }

    /// Parses one-word-per-line lists; `#` starts a comment.
    pub fn from_lists<'a>(lists: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let words: HashSet<String> = lists
            .into_iter()
            .flat_map(str::lines)
            .map(|l| l.split('#').next().unwrap_or("").trim().to_lowercase())
            .filter(|w| !w.is_empty())
            .collect();
        if words.is_empty() {
            return Err(Error::Config("stop-word set is empty".into()));
        }
        Ok(StopWordSet { words })
    }

    pub fn from_files(paths: &[impl AsRef<Path>]) -> Result<Self> {
        let texts = paths.iter().map(std::fs::read_to_string).collect::<std::io::Result<Vec<_>>>()?;
        Self::from_lists(texts.iter().map(String::as_str))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }
}

impl Default for StopWordSet {
    fn default() -> Self {
        Self::bundled()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedDoc {
    pub raw_tokens: Vec<String>,
    pub proc_tokens: Vec<String>,
}

/// Normalizes one raw token; `None` when it is dropped.
pub fn normalize_token(raw: &str, stop_words: &StopWordSet) -> Option<String> {
    let word = strip_punctuation(raw).to_lowercase();
    if word.is_empty() || stop_words.contains(&word) {
        return None;
    }
    let stem = porter_stem(&word);
    // A stem can collide with a stop word ("beings" -> "be").
    (!stem.is_empty() && !stop_words.contains(&stem)).then_some(stem)
}

pub fn preprocess(text: &str, stop_words: &StopWordSet) -> TokenizedDoc {
    let raw = tokenize(text);
    let proc_tokens = raw.iter().filter_map(|t| normalize_token(t, stop_words)).collect();
    TokenizedDoc { raw_tokens: raw.into_iter().map(str::to_owned).collect(), proc_tokens }
}
