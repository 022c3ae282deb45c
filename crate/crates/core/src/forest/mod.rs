//! Classifiers over sparse features: a CART random forest and multinomial
//! logistic regression, behind one [`TrainedModel`] type.

mod logreg;
mod matrix;
mod tree;

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::N_CLASSES;
use crate::error::{Error, Result};
use crate::features::SparseVector;
use crate::rng::{derive_seed, rng, SeedPart};

pub use logreg::{softmax_loss_and_grad, train_logreg, LogRegParams};
pub use matrix::FeatureMatrix;
pub use tree::{best_split, bootstrap_weights, DecisionTree, Node, Split, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    RandomForest,
    LogisticRegression,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::RandomForest => "random_forest",
            ModelKind::LogisticRegression => "logistic_regression",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "random_forest" | "rf" => Ok(ModelKind::RandomForest),
            "logistic_regression" | "logreg" | "lr" => Ok(ModelKind::LogisticRegression),
            _ => Err(Error::Config(format!("unknown model kind '{s}'"))),
        }
    }
}

/// How many features each split considers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FeaturesPerSplit {
    /// `max(1, floor(sqrt(dims)))`.
    #[default]
    Sqrt,
    All,
    Fixed(usize),
}

impl FeaturesPerSplit {
    pub fn resolve(self, dims: usize) -> usize {
        match self {
            FeaturesPerSplit::Sqrt => ((dims as f64).sqrt().floor() as usize).max(1),
            FeaturesPerSplit::All => dims,
            FeaturesPerSplit::Fixed(n) => n.clamp(1, dims.max(1)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub max_leaf_nodes: usize,
    #[serde(default)]
    pub features_per_split: FeaturesPerSplit,
    #[serde(default = "default_true")]
    pub bootstrap: bool,
    #[serde(default)]
    pub seed: u64,
}

fn default_true() -> bool {
    true
}

impl ForestParams {
    pub fn new(n_trees: usize, max_depth: usize, max_leaf_nodes: usize) -> Self {
        ForestParams {
            n_trees,
            max_depth,
            max_leaf_nodes,
            features_per_split: FeaturesPerSplit::Sqrt,
            bootstrap: true,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 || self.max_depth == 0 || self.max_leaf_nodes < 2 {
            return Err(Error::Config(format!(
                "forest parameters must be positive (n_trees={}, max_depth={}, max_leaf_nodes={})",
                self.n_trees, self.max_depth, self.max_leaf_nodes
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelBody {
    RandomForest {
        params: ForestParams,
        trees: Vec<DecisionTree>,
    },
    LogisticRegression {
        params: LogRegParams,
        /// Row-major `n_classes x dims`.
        weights: Vec<f64>,
        bias: Vec<f64>,
    },
}

/// A fitted classifier whose outputs are probability vectors over the task's
/// three classes, in the fixed label order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub n_classes: usize,
    pub dims: usize,
    pub body: ModelBody,
    #[serde(default)]
    pub diagnostics: Vec<String>,
}

fn check_training_input(x: &[SparseVector], y: &[usize]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::DimMismatch { expected: x.len(), actual: y.len() });
    }
    if x.is_empty() {
        return Err(Error::EmptyData("no training rows".into()));
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= N_CLASSES) {
        return Err(Error::Input(format!("class index {bad} out of range")));
    }
    let dims = x[0].dims();
    if let Some(v) = x.iter().find(|v| v.dims() != dims) {
        return Err(Error::DimMismatch { expected: dims, actual: v.dims() });
    }
    Ok(dims)
}

fn single_class_diagnostic(y: &[usize]) -> Option<String> {
    let first = y[0];
    y.iter().all(|&c| c == first).then(|| format!("training labels contain only class {first}; model is constant"))
}

pub fn train_forest(x: &[SparseVector], y: &[usize], params: &ForestParams) -> Result<TrainedModel> {
    params.validate()?;
    let dims = check_training_input(x, y)?;
    let matrix = FeatureMatrix::new(x)?;
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        max_leaf_nodes: params.max_leaf_nodes,
        max_features: params.features_per_split.resolve(dims),
        n_classes: N_CLASSES,
    };
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut r = rng(derive_seed(&[SeedPart::Int(params.seed), SeedPart::Str("tree"), SeedPart::from(t)]));
            let weights = if params.bootstrap { bootstrap_weights(x.len(), &mut r) } else { vec![1; x.len()] };
            DecisionTree::grow(&matrix, y, &weights, &tree_params, &mut r)
        })
        .collect();
    Ok(TrainedModel {
        n_classes: N_CLASSES,
        dims,
        body: ModelBody::RandomForest { params: *params, trees },
        diagnostics: single_class_diagnostic(y).into_iter().collect(),
    })
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate().skip(1) {
        if v > p[best] {
            best = i;
        }
    }
    best
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self.body {
            ModelBody::RandomForest { .. } => ModelKind::RandomForest,
            ModelBody::LogisticRegression { .. } => ModelKind::LogisticRegression,
        }
    }

    pub fn predict_proba(&self, x: &SparseVector) -> Result<Vec<f64>> {
        if x.dims() != self.dims {
            return Err(Error::DimMismatch { expected: self.dims, actual: x.dims() });
        }
        Ok(match &self.body {
            ModelBody::RandomForest { trees, .. } => {
                let mut acc = vec![0.0; self.n_classes];
                for t in trees {
                    for (a, p) in acc.iter_mut().zip(t.leaf_probs(x)) {
                        *a += p;
                    }
                }
                let n = trees.len() as f64;
                acc.iter_mut().for_each(|a| *a /= n);
                acc
            }
            ModelBody::LogisticRegression { weights, bias, .. } => {
                logreg::probabilities(weights, bias, self.dims, x)
            }
        })
    }

    pub fn predict(&self, x: &SparseVector) -> Result<usize> {
        Ok(argmax(&self.predict_proba(x)?))
    }

    pub fn predict_batch(&self, xs: &[SparseVector]) -> Result<Vec<usize>> {
        xs.par_iter().map(|x| self.predict(x)).collect()
    }
}

pub const MODEL_FORMAT: &str = "svaug-model";
pub const MODEL_VERSION: u32 = 1;

/// Versioned on-disk container for a model and the vocabulary it expects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub vocab_hash: Option<String>,
    pub model: TrainedModel,
}

impl ModelFile {
    pub fn new(model: TrainedModel, vocab_hash: Option<String>) -> Self {
        ModelFile { format: MODEL_FORMAT.into(), version: MODEL_VERSION, vocab_hash, model }
    }

    pub fn write(&self, out: impl Write) -> Result<()> {
        serde_json::to_writer(out, self)?;
        Ok(())
    }

    pub fn read(input: impl Read) -> Result<Self> {
        let f: ModelFile = serde_json::from_reader(input)?;
        if f.format != MODEL_FORMAT {
            return Err(Error::Input(format!("not a model file (format '{}')", f.format)));
        }
        if f.version != MODEL_VERSION {
            return Err(Error::Input(format!("unsupported model version {}", f.version)));
        }
        Ok(f)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}
