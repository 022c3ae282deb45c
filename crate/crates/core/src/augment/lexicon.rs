use std::collections::{HashMap, HashSet};
use std::sync::{Arc, OnceLock};

use rand::distributions::{Distribution, WeightedIndex};

use super::pool::token_key;
use crate::error::{Error, Result};
use crate::textprep::tokenize;

pub const BUNDLED_SYNONYMS: &str = include_str!("../../assets/synonyms.tsv");

type Entries = HashMap<String, Vec<String>>;

/// Word to synonyms map, with training document frequencies used to favour
/// synonyms that are common in the corpus.
#[derive(Debug, Clone, Default)]
pub struct SynonymLexicon {
    entries: Arc<Entries>,
    corpus_freq: HashMap<String, usize>,
}

fn parse(text: &str) -> Result<Entries> {
    let mut entries = Entries::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (word, syns) = line
            .split_once('\t')
            .ok_or_else(|| Error::Parse { offset: n as u64 + 1, message: "expected word<TAB>synonyms".into() })?;
        let word = word.trim().to_lowercase();
        let list: Vec<String> = syns
            .split(',')
            .map(|s| s.trim().to_lowercase())
            .filter(|s| !s.is_empty() && *s != word)
            .collect();
        if !list.is_empty() {
            entries.entry(word).or_default().extend(list);
        }
    }
    Ok(entries)
}

impl SynonymLexicon {
    /// The WordNet-derived table shipped with the crate. Parsed once.
    pub fn bundled() -> Self {
        static CACHE: OnceLock<Arc<Entries>> = OnceLock::new();
        let entries = CACHE.get_or_init(|| Arc::new(parse(BUNDLED_SYNONYMS).expect("bundled lexicon parses"))).clone();
        SynonymLexicon { entries, corpus_freq: HashMap::new() }
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(SynonymLexicon { entries: Arc::new(parse(text)?), corpus_freq: HashMap::new() })
    }

    /// Same entries, with frequencies counted over `descriptions`.
    pub fn with_corpus<'a>(&self, descriptions: impl IntoIterator<Item = &'a str>) -> Self {
        let mut freq: HashMap<String, usize> = HashMap::new();
        for d in descriptions {
            let uniq: HashSet<String> = tokenize(d).into_iter().map(token_key).collect();
            for w in uniq {
                if !w.is_empty() {
                    *freq.entry(w).or_default() += 1;
                }
            }
        }
        SynonymLexicon { entries: self.entries.clone(), corpus_freq: freq }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn synonyms(&self, word: &str) -> Option<&[String]> {
        self.entries.get(word).map(Vec::as_slice)
    }

    pub fn corpus_freq(&self, word: &str) -> usize {
        self.corpus_freq.get(word).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Picks a synonym with probability proportional to its corpus frequency;
    /// uniform when none of the synonyms occur in the corpus.
    pub fn pick(&self, word: &str, rng: &mut impl rand::Rng) -> Option<&str> {
        let syns = self.entries.get(word)?;
        let weights: Vec<usize> = syns.iter().map(|s| self.corpus_freq(s)).collect();
        let i = match WeightedIndex::new(&weights) {
            Ok(dist) => dist.sample(rng),
            Err(_) => rng.gen_range(0..syns.len()),
        };
        Some(&syns[i])
    }
}
