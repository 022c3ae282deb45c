use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize};

use crate::augment::{AugmentationPlan, BudgetPolicy, Technique, DEFAULT_CHANGE_FRACTION, DEFAULT_POOL_MIN_DOC_FRACTION};
use crate::corpus::{CvssMetric, FeedFormat};
use crate::error::{Error, Result};
use crate::eval::{FeatureSettings, ModelGrid};
use crate::forest::ModelKind;

pub const CONFIG_SCHEMA: &str = include_str!("../../assets/config.schema.json");

/// Where the corpus comes from. Relative paths are resolved against the
/// config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CorpusSource {
    /// A corpus in the native CSV format.
    Csv(PathBuf),
    /// One or more NVD JSON 1.1 feeds.
    NvdFeeds(Vec<PathBuf>),
    /// The bundled synthetic corpus.
    Mini,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestGridConfig {
    pub n_trees: Vec<usize>,
    pub max_depth: Vec<usize>,
    pub max_leaf_nodes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogRegGridConfig {
    pub l2_penalty: Vec<f64>,
    pub learning_rate: Vec<f64>,
    pub epochs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Use the full forest grid instead of the desk-scale default.
    #[serde(default)]
    pub paper_grid: bool,
    #[serde(default)]
    pub random_forest: Option<ForestGridConfig>,
    #[serde(default)]
    pub logistic_regression: Option<LogRegGridConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentationSettings {
    #[serde(default = "default_change_fraction")]
    pub change_fraction: f64,
    #[serde(default = "default_pool_fraction")]
    pub min_doc_fraction_for_frequent_words: f64,
    #[serde(default)]
    pub budget_policy: BudgetPolicy,
    #[serde(default)]
    pub allow_large_change_fraction: bool,
    /// Concurrent requests to the contextual augmentation service.
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
}

fn default_change_fraction() -> f64 {
    DEFAULT_CHANGE_FRACTION
}
fn default_pool_fraction() -> f64 {
    DEFAULT_POOL_MIN_DOC_FRACTION
}
fn default_in_flight() -> usize {
    4
}

impl Default for AugmentationSettings {
    fn default() -> Self {
        AugmentationSettings {
            change_fraction: DEFAULT_CHANGE_FRACTION,
            min_doc_fraction_for_frequent_words: DEFAULT_POOL_MIN_DOC_FRACTION,
            budget_policy: BudgetPolicy::Exact,
            allow_large_change_fraction: false,
            max_in_flight: default_in_flight(),
        }
    }
}

impl AugmentationSettings {
    pub fn plan(&self, technique: Technique, seed: u64) -> AugmentationPlan {
        AugmentationPlan {
            technique,
            change_fraction: self.change_fraction,
            min_doc_fraction_for_frequent_words: self.min_doc_fraction_for_frequent_words,
            seed,
            budget_policy: self.budget_policy,
            allow_large_change_fraction: self.allow_large_change_fraction,
        }
    }
}

fn de_parsed<'de, D, T>(d: D) -> std::result::Result<Vec<T>, D::Error>
where
    D: Deserializer<'de>,
    T: FromStr<Err = Error>,
{
    let raw: Vec<String> = Vec::deserialize(d)?;
    raw.iter().map(|s| s.parse().map_err(serde::de::Error::custom)).collect()
}

fn all_tasks() -> Vec<CvssMetric> {
    CvssMetric::ALL.to_vec()
}
fn default_techniques() -> Vec<Technique> {
    Technique::ALL.to_vec()
}
fn default_models() -> Vec<ModelKind> {
    vec![ModelKind::RandomForest]
}
fn default_output() -> PathBuf {
    PathBuf::from("svaug-out")
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub corpus: CorpusSource,
    #[serde(default = "all_tasks", deserialize_with = "de_parsed")]
    pub tasks: Vec<CvssMetric>,
    #[serde(default = "default_techniques", deserialize_with = "de_parsed")]
    pub techniques: Vec<Technique>,
    #[serde(default = "default_models", deserialize_with = "de_parsed")]
    pub models: Vec<ModelKind>,
    #[serde(default)]
    pub grids: GridConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub augmentation: AugmentationSettings,
    #[serde(default)]
    pub features: FeatureSettings,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Centroid similarity for word-level techniques.
    #[serde(default = "default_true")]
    pub similarity: bool,
}

impl ExperimentConfig {
    pub fn with_corpus(corpus: CorpusSource) -> Self {
        ExperimentConfig {
            corpus,
            tasks: all_tasks(),
            techniques: default_techniques(),
            models: default_models(),
            grids: GridConfig::default(),
            seed: 0,
            augmentation: AugmentationSettings::default(),
            features: FeatureSettings::default(),
            output_dir: default_output(),
            similarity: true,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))
    }

    /// Reads a config file; relative corpus and output paths become relative
    /// to the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Input(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut cfg.corpus {
            CorpusSource::Csv(p) => fix(p),
            CorpusSource::NvdFeeds(ps) => ps.iter_mut().for_each(fix),
            CorpusSource::Mini => {}
        }
        fix(&mut cfg.output_dir);
        Ok(cfg)
    }

    /// Checks invariants and puts the `none` baseline first.
    pub fn normalize(&mut self) -> Result<()> {
        if self.tasks.is_empty() {
            return Err(Error::Config("at least one task is required".into()));
        }
        if self.models.is_empty() {
            return Err(Error::Config("at least one model family is required".into()));
        }
        if !self.techniques.contains(&Technique::None) {
            log::warn!("adding the 'none' baseline technique, which is required for comparisons");
            self.techniques.push(Technique::None);
        }
        self.tasks.sort();
        self.tasks.dedup();
        self.techniques.sort();
        self.techniques.dedup();
        self.models.sort();
        self.models.dedup();
        if let CorpusSource::NvdFeeds(f) = &self.corpus {
            if f.is_empty() {
                return Err(Error::Config("corpus.nvd_feeds lists no files".into()));
            }
        }
        for t in &self.techniques {
            self.augmentation.plan(*t, self.seed).validate()?;
        }
        Ok(())
    }

    pub fn grid(&self, kind: ModelKind) -> ModelGrid {
        match kind {
            ModelKind::RandomForest => match &self.grids.random_forest {
                Some(g) => ModelGrid::forest(&g.n_trees, &g.max_depth, &g.max_leaf_nodes),
                None if self.grids.paper_grid => ModelGrid::paper(kind),
                None => ModelGrid::desk(kind),
            },
            ModelKind::LogisticRegression => match &self.grids.logistic_regression {
                Some(g) => ModelGrid::logreg(&g.l2_penalty, &g.learning_rate, &g.epochs),
                None if self.grids.paper_grid => ModelGrid::paper(kind),
                None => ModelGrid::desk(kind),
            },
        }
    }
}

/// Feed format from an explicit tag or the file extension.
pub fn feed_format_for(path: &Path, explicit: Option<FeedFormat>) -> FeedFormat {
    explicit.unwrap_or_else(|| match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("csv") => FeedFormat::Csv,
        _ => FeedFormat::NvdJson11,
    })
}
