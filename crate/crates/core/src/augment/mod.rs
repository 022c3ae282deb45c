//! Label-preserving text augmentation and class balancing of training sets.

mod balance;
mod contextual;
mod lexicon;
mod ops;
mod pool;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Labels, VulnRecord};
use crate::error::{Error, Result};

pub use balance::{balance_training_set, AugmentContext, BalanceOutcome};
pub(crate) use balance::synthesize;
pub use contextual::{
    client_from_env, ContextualClient, ContextualMode, HttpClient, StubClient, PARAPHRASE_PROMPT, SERVICE_URL_ENV,
};
pub use lexicon::{SynonymLexicon, BUNDLED_SYNONYMS};
pub use ops::{
    augment_tokens, combine, delete_words, insert_words, substitute_words, synonym_replace, Edit, EditOutcome,
};
pub use pool::FrequentWordPool;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Technique {
    None,
    OverSample,
    UnderSample,
    Insertion,
    Deletion,
    Substitution,
    SynonymReplacement,
    Combination,
    BackTranslation,
    Paraphrasing,
}

impl Technique {
    pub const ALL: [Technique; 10] = [
        Technique::None,
        Technique::OverSample,
        Technique::UnderSample,
        Technique::Insertion,
        Technique::Deletion,
        Technique::Substitution,
        Technique::SynonymReplacement,
        Technique::Combination,
        Technique::BackTranslation,
        Technique::Paraphrasing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Technique::None => "none",
            Technique::OverSample => "over_sample",
            Technique::UnderSample => "under_sample",
            Technique::Insertion => "insertion",
            Technique::Deletion => "deletion",
            Technique::Substitution => "substitution",
            Technique::SynonymReplacement => "synonym_replacement",
            Technique::Combination => "combination",
            Technique::BackTranslation => "back_translation",
            Technique::Paraphrasing => "paraphrasing",
        }
    }

    /// Word-level edits applied locally.
    pub fn is_simple_text(self) -> bool {
        matches!(
            self,
            Technique::Insertion
                | Technique::Deletion
                | Technique::Substitution
                | Technique::SynonymReplacement
                | Technique::Combination
        )
    }

    pub fn contextual_mode(self) -> Option<ContextualMode> {
        match self {
            Technique::BackTranslation => Some(ContextualMode::BackTranslate),
            Technique::Paraphrasing => Some(ContextualMode::Paraphrase),
            _ => None,
        }
    }

    /// Techniques that synthesize new descriptions.
    pub fn is_text(self) -> bool {
        self.is_simple_text() || self.contextual_mode().is_some()
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Technique {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        Technique::ALL
            .into_iter()
            .find(|t| t.name().replace('_', "") == key)
            .or(match key.as_str() {
                "oversampling" | "ros" => Some(Technique::OverSample),
                "undersampling" | "rus" => Some(Technique::UnderSample),
                "synonym" | "sr" => Some(Technique::SynonymReplacement),
                "backtranslate" | "bt" => Some(Technique::BackTranslation),
                "paraphrase" => Some(Technique::Paraphrasing),
                _ => None,
            })
            .ok_or_else(|| Error::Config(format!("unknown augmentation technique '{s}'")))
    }
}

/// How many edits one synthetic sample receives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetPolicy {
    /// Always `change_budget(L, fraction)` edits.
    #[default]
    Exact,
    /// Uniform in `1..=change_budget(L, fraction)`.
    UpTo,
}

impl BudgetPolicy {
    pub fn draw(self, token_count: usize, change_fraction: f64, rng: &mut impl rand::Rng) -> usize {
        let cap = change_budget(token_count, change_fraction);
        match self {
            BudgetPolicy::Exact => cap,
            BudgetPolicy::UpTo => rng.gen_range(1..=cap),
        }
    }
}

pub const DEFAULT_CHANGE_FRACTION: f64 = 0.2;
pub const DEFAULT_POOL_MIN_DOC_FRACTION: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentationPlan {
    pub technique: Technique,
    #[serde(default = "default_change_fraction")]
    pub change_fraction: f64,
    #[serde(default = "default_pool_fraction")]
    pub min_doc_fraction_for_frequent_words: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub budget_policy: BudgetPolicy,
    /// Permits `change_fraction` above 0.2.
    #[serde(default)]
    pub allow_large_change_fraction: bool,
}

fn default_change_fraction() -> f64 {
    DEFAULT_CHANGE_FRACTION
}

fn default_pool_fraction() -> f64 {
    DEFAULT_POOL_MIN_DOC_FRACTION
}

impl AugmentationPlan {
    pub fn new(technique: Technique, seed: u64) -> Self {
        AugmentationPlan {
            technique,
            change_fraction: DEFAULT_CHANGE_FRACTION,
            min_doc_fraction_for_frequent_words: DEFAULT_POOL_MIN_DOC_FRACTION,
            seed,
            budget_policy: BudgetPolicy::Exact,
            allow_large_change_fraction: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.change_fraction;
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::Config(format!("change_fraction {f} outside (0, 1]")));
        }
        if f > DEFAULT_CHANGE_FRACTION && !self.allow_large_change_fraction {
            return Err(Error::Config(format!(
                "change_fraction {f} exceeds 0.2; set allow_large_change_fraction to override"
            )));
        }
        if !(0.0..=1.0).contains(&self.min_doc_fraction_for_frequent_words) {
            return Err(Error::Config("min_doc_fraction_for_frequent_words outside [0, 1]".into()));
        }
        Ok(())
    }
}

/// Number of edits for a description of `token_count` tokens:
/// `max(1, floor(change_fraction * token_count))`.
pub fn change_budget(token_count: usize, change_fraction: f64) -> usize {
    // Nudge so 0.2 * 10 lands on 2 rather than 1.999...
    ((change_fraction * token_count as f64 + 1e-9).floor() as usize).max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub technique: Technique,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edits: Vec<Edit>,
    /// Budget units that could not be spent.
    #[serde(default)]
    pub shortfall: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl Provenance {
    pub fn new(technique: Technique) -> Self {
        Provenance { technique, edits: Vec::new(), shortfall: 0, flags: Vec::new() }
    }
}

/// A synthetic training description. Labels are always the origin's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedRecord {
    origin_id: String,
    description: String,
    labels: Labels,
    provenance: Provenance,
}

impl AugmentedRecord {
    pub fn from_origin(origin: &VulnRecord, description: String, provenance: Provenance) -> Self {
        AugmentedRecord { origin_id: origin.id.clone(), description, labels: origin.labels, provenance }
    }

    pub fn origin_id(&self) -> &str {
        &self.origin_id
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn labels(&self) -> &Labels {
        &self.labels
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }
}

/// Element of a (possibly balanced) training set. Validation and test data
/// are plain `VulnRecord` slices, so synthetic records cannot reach them.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainingRecord<'a> {
    Original(&'a VulnRecord),
    Augmented(AugmentedRecord),
}

impl TrainingRecord<'_> {
    pub fn description(&self) -> &str {
        match self {
            TrainingRecord::Original(r) => &r.description,
            TrainingRecord::Augmented(a) => a.description(),
        }
    }

    pub fn labels(&self) -> &Labels {
        match self {
            TrainingRecord::Original(r) => &r.labels,
            TrainingRecord::Augmented(a) => a.labels(),
        }
    }

    /// Id of the original record this one stems from.
    pub fn origin_id(&self) -> &str {
        match self {
            TrainingRecord::Original(r) => &r.id,
            TrainingRecord::Augmented(a) => a.origin_id(),
        }
    }

    pub fn is_augmented(&self) -> bool {
        matches!(self, TrainingRecord::Augmented(_))
    }
}
