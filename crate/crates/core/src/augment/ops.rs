//! Word-level edits on raw token sequences.
//!
//! Replacements swap the word inside a token and keep its surrounding
//! punctuation, so "users." can become "customers.". Within one synthetic
//! sample a position is edited at most once.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::lexicon::SynonymLexicon;
use super::pool::{token_key, FrequentWordPool};
use super::Technique;
use crate::error::{Error, Result};
use crate::textprep::{strip_punctuation, StopWordSet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Edit {
    /// `position` is the index of the new token at the time of insertion.
    Insert { position: usize, word: String },
    Delete { position: usize, word: String },
    Substitute { position: usize, from: String, to: String },
    Synonym { position: usize, from: String, to: String },
}

impl Edit {
    pub fn kind(&self) -> &'static str {
        match self {
            Edit::Insert { .. } => "insert",
            Edit::Delete { .. } => "delete",
            Edit::Substitute { .. } => "substitute",
            Edit::Synonym { .. } => "synonym",
        }
    }
}

impl std::fmt::Display for Edit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Edit::Insert { position, word } => write!(f, "insert '{word}' at {position}"),
            Edit::Delete { position, word } => write!(f, "delete '{word}' at {position}"),
            Edit::Substitute { position, from, to } => write!(f, "substitute '{from}' -> '{to}' at {position}"),
            Edit::Synonym { position, from, to } => write!(f, "synonym '{from}' -> '{to}' at {position}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EditOutcome {
    pub tokens: Vec<String>,
    pub edits: Vec<Edit>,
    /// Budget units that could not be spent.
    pub shortfall: usize,
    /// Per output token: inserted or replaced.
    pub touched: Vec<bool>,
}

struct Work {
    toks: Vec<String>,
    touched: Vec<bool>,
    edits: Vec<Edit>,
}

/// Replaces the word inside `token`, keeping leading and trailing punctuation
/// and an initial capital.
fn replace_core(token: &str, word: &str) -> String {
    let core = strip_punctuation(token);
    let start = core.as_ptr() as usize - token.as_ptr() as usize;
    let (prefix, suffix) = (&token[..start], &token[start + core.len()..]);
    let mut w = word.to_string();
    if core.chars().next().is_some_and(char::is_uppercase) && !core.chars().skip(1).any(char::is_uppercase) {
        if let Some(first) = w.chars().next() {
            w = first.to_uppercase().chain(w.chars().skip(1)).collect();
        }
    }
    format!("{prefix}{w}{suffix}")
}

/// `k` distinct elements of `from`, in ascending order.
fn choose(from: &[usize], k: usize, rng: &mut impl rand::Rng) -> Vec<usize> {
    let k = k.min(from.len());
    let mut picked: Vec<usize> = sample(rng, from.len(), k).into_iter().map(|i| from[i]).collect();
    picked.sort_unstable();
    picked
}

impl Work {
    fn new(tokens: &[String]) -> Self {
        Work { toks: tokens.to_vec(), touched: vec![false; tokens.len()], edits: Vec::new() }
    }

    fn untouched(&self) -> Vec<usize> {
        (0..self.toks.len()).filter(|&i| !self.touched[i]).collect()
    }

    fn insert(&mut self, pool: &FrequentWordPool, k: usize, rng: &mut impl rand::Rng) -> usize {
        for _ in 0..k {
            let word = pool.sample(rng).to_string();
            let position = rng.gen_range(0..=self.toks.len());
            self.toks.insert(position, word.clone());
            self.touched.insert(position, true);
            self.edits.push(Edit::Insert { position, word });
        }
        k
    }

    fn substitute(&mut self, pool: &FrequentWordPool, k: usize, rng: &mut impl rand::Rng) -> usize {
        let mut done = 0;
        for position in choose(&self.untouched(), k, rng) {
            let from = self.toks[position].clone();
            if let Some(w) = pool.sample_excluding(&token_key(&from), rng) {
                let to = replace_core(&from, w);
                self.toks[position] = to.clone();
                self.touched[position] = true;
                self.edits.push(Edit::Substitute { position, from, to });
                done += 1;
            }
        }
        done
    }

    fn synonym(&mut self, lex: &SynonymLexicon, sw: &StopWordSet, k: usize, rng: &mut impl rand::Rng) -> usize {
        let candidates: Vec<usize> = self
            .untouched()
            .into_iter()
            .filter(|&i| {
                let key = token_key(&self.toks[i]);
                !sw.contains(&key) && lex.synonyms(&key).is_some()
            })
            .collect();
        let mut done = 0;
        for position in choose(&candidates, k, rng) {
            let from = self.toks[position].clone();
            if let Some(syn) = lex.pick(&token_key(&from), rng) {
                let to = replace_core(&from, syn);
                self.toks[position] = to.clone();
                self.touched[position] = true;
                self.edits.push(Edit::Synonym { position, from, to });
                done += 1;
            }
        }
        done
    }

    /// Deletes up to `k` untouched tokens, always leaving one token.
    fn delete(&mut self, k: usize, rng: &mut impl rand::Rng) -> usize {
        let k = k.min(self.toks.len().saturating_sub(1));
        let picked = choose(&self.untouched(), k, rng);
        for &position in picked.iter().rev() {
            let word = self.toks.remove(position);
            self.touched.remove(position);
            self.edits.push(Edit::Delete { position, word });
        }
        // Log deletions in ascending order of their original positions.
        let n = picked.len();
        let start = self.edits.len() - n;
        self.edits[start..].reverse();
        n
    }

    fn finish(self, k: usize, done: usize) -> EditOutcome {
        EditOutcome { tokens: self.toks, edits: self.edits, shortfall: k.saturating_sub(done), touched: self.touched }
    }
}

/// Inserts `k` pool words at uniformly random gaps.
pub fn insert_words(
    tokens: &[String],
    pool: &FrequentWordPool,
    k: usize,
    rng: &mut impl rand::Rng,
) -> Result<EditOutcome> {
    pool.require_non_empty()?;
    let mut w = Work::new(tokens);
    let done = w.insert(pool, k, rng);
    Ok(w.finish(k, done))
}

/// Removes `k` uniformly chosen tokens.
pub fn delete_words(tokens: &[String], k: usize, rng: &mut impl rand::Rng) -> Result<EditOutcome> {
    if k >= tokens.len() {
        return Err(Error::Degenerate(format!("cannot delete {k} of {} tokens", tokens.len())));
    }
    let mut w = Work::new(tokens);
    let done = w.delete(k, rng);
    Ok(w.finish(k, done))
}

/// Replaces `k` uniformly chosen tokens with different pool words.
pub fn substitute_words(
    tokens: &[String],
    pool: &FrequentWordPool,
    k: usize,
    rng: &mut impl rand::Rng,
) -> Result<EditOutcome> {
    pool.require_non_empty()?;
    if k > tokens.len() {
        return Err(Error::Degenerate(format!("cannot substitute {k} of {} tokens", tokens.len())));
    }
    let mut w = Work::new(tokens);
    let done = w.substitute(pool, k, rng);
    Ok(w.finish(k, done))
}

/// Replaces up to `k` non-stop-word tokens that have lexicon entries.
pub fn synonym_replace(
    tokens: &[String],
    lexicon: &SynonymLexicon,
    stop_words: &StopWordSet,
    k: usize,
    rng: &mut impl rand::Rng,
) -> EditOutcome {
    let mut w = Work::new(tokens);
    let done = w.synonym(lexicon, stop_words, k, rng);
    w.finish(k, done)
}

/// Splits `k` uniformly over insert, substitute, synonym and delete, then
/// applies them in that order.
pub fn combine(
    tokens: &[String],
    pool: &FrequentWordPool,
    lexicon: &SynonymLexicon,
    stop_words: &StopWordSet,
    k: usize,
    rng: &mut impl rand::Rng,
) -> Result<EditOutcome> {
    let mut counts = [0usize; 4];
    for _ in 0..k {
        counts[rng.gen_range(0..4)] += 1;
    }
    if counts[0] + counts[1] > 0 {
        pool.require_non_empty()?;
    }
    let mut w = Work::new(tokens);
    let mut done = w.insert(pool, counts[0], rng);
    done += w.substitute(pool, counts[1], rng);
    done += w.synonym(lexicon, stop_words, counts[2], rng);
    done += w.delete(counts[3], rng);
    Ok(w.finish(k, done))
}

/// Applies a simple-text technique with budget `k`.
pub fn augment_tokens(
    technique: Technique,
    tokens: &[String],
    pool: &FrequentWordPool,
    lexicon: &SynonymLexicon,
    stop_words: &StopWordSet,
    k: usize,
    rng: &mut impl rand::Rng,
) -> Result<EditOutcome> {
    match technique {
        Technique::Insertion => insert_words(tokens, pool, k, rng),
        Technique::Deletion => delete_words(tokens, k, rng),
        Technique::Substitution => substitute_words(tokens, pool, k, rng),
        Technique::SynonymReplacement => Ok(synonym_replace(tokens, lexicon, stop_words, k, rng)),
        Technique::Combination => combine(tokens, pool, lexicon, stop_words, k, rng),
        other => Err(Error::Config(format!("{other} is not a word-level technique"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng;

    const CVE: &str = "Buffer overflow in Solaris fdformat command gives root access to local users.";

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    fn pool() -> FrequentWordPool {
        FrequentWordPool::from_words(["vulnerability", "error", "remote", "attacker"])
    }

    fn is_subsequence(sub: &[String], of: &[String]) -> bool {
        let mut it = of.iter();
        sub.iter().all(|s| it.any(|o| o == s))
    }

    #[test]
    fn insertion_preserves_order() {
        let t = toks(CVE);
        let out = insert_words(&t, &pool(), 2, &mut rng(1)).unwrap();
        assert_eq!(out.tokens.len(), t.len() + 2);
        let kept: Vec<String> =
            out.tokens.iter().zip(&out.touched).filter(|(_, &m)| !m).map(|(s, _)| s.clone()).collect();
        assert_eq!(kept, t);
        let one = insert_words(&toks("x"), &pool(), 1, &mut rng(2)).unwrap();
        assert_eq!(one.tokens.len(), 2);
        assert!(matches!(insert_words(&t, &FrequentWordPool::from_words(Vec::<String>::new()), 1, &mut rng(1)), Err(Error::Config(_))));
    }

    #[test]
    fn deletion_is_subsequence() {
        let t = toks(CVE);
        let out = delete_words(&t, 2, &mut rng(3)).unwrap();
        assert_eq!(out.tokens.len(), t.len() - 2);
        assert!(is_subsequence(&out.tokens, &t));
        assert_eq!(delete_words(&t, t.len() - 1, &mut rng(3)).unwrap().tokens.len(), 1);
        assert!(matches!(delete_words(&t, t.len(), &mut rng(3)), Err(Error::Degenerate(_))));
    }

    #[test]
    fn substitution_changes_exactly_k() {
        let t = toks(CVE);
        for k in [1, 2, t.len()] {
            let out = substitute_words(&t, &pool(), k, &mut rng(k as u64)).unwrap();
            assert_eq!(out.tokens.len(), t.len());
            let diff = out.tokens.iter().zip(&t).filter(|(a, b)| a != b).count();
            assert_eq!(diff, k);
        }
        let out = substitute_words(&toks("error error"), &pool(), 2, &mut rng(9)).unwrap();
        assert!(out.tokens.iter().all(|w| w != "error"));
    }

    #[test]
    fn replacement_keeps_punctuation_and_case() {
        assert_eq!(replace_core("users.", "people"), "people.");
        assert_eq!(replace_core("(Buffer)", "error"), "(Error)");
        assert_eq!(replace_core("SQL", "query"), "query");
    }

    #[test]
    fn synonyms_skip_unknown_and_stop_words() {
        let lex = SynonymLexicon::bundled();
        let sw = StopWordSet::bundled();
        let t = toks("fdformat to the in");
        let out = synonym_replace(&t, &lex, &sw, 1, &mut rng(1));
        assert_eq!(out.tokens, t);
        assert_eq!(out.shortfall, 1);
        let out = synonym_replace(&toks(CVE), &lex, &sw, 2, &mut rng(1));
        assert_eq!(out.edits.len(), 2);
        assert!(out.tokens.contains(&"fdformat".to_string()));
    }

    #[test]
    fn combination_accounting() {
        let lex = SynonymLexicon::bundled();
        let sw = StopWordSet::bundled();
        let t = toks(CVE);
        for seed in 0..50 {
            let out = combine(&t, &pool(), &lex, &sw, 2, &mut rng(seed)).unwrap();
            assert_eq!(out.edits.len() + out.shortfall, 2);
            assert!(out.tokens.len().abs_diff(t.len()) <= 2);
        }
        let one = combine(&t, &pool(), &lex, &sw, 1, &mut rng(4)).unwrap();
        assert_eq!(one.edits.len(), 1);
    }
}
