//! Per-task experiment runs: balance the training folds, fit features,
//! train every grid point, and select by mean validation MCC.

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::folds::{RoundSpec, TimeFolds};
use super::metrics::{macro_f1, multiclass_mcc, ConfusionMatrix};
use crate::augment::{balance_training_set, AugmentContext, AugmentationPlan, Technique, TrainingRecord};
use crate::corpus::{CvssMetric, VulnRecord};
use crate::error::{Error, Result};
use crate::features::{SparseVector, TfIdfModel};
use crate::forest::{train_forest, train_logreg, ForestParams, LogRegParams, ModelKind, TrainedModel};
use crate::rng::{derive_seed, SeedPart};
use crate::textprep::{fit_vocabulary, preprocess, StopWordSet, TokenizedDoc};

/// One hyperparameter point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelSpec {
    RandomForest { n_trees: usize, max_depth: usize, max_leaf_nodes: usize },
    LogisticRegression { l2_penalty: f64, learning_rate: f64, epochs: usize },
}

impl ModelSpec {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::RandomForest { .. } => ModelKind::RandomForest,
            ModelSpec::LogisticRegression { .. } => ModelKind::LogisticRegression,
        }
    }

    pub fn train(&self, x: &[SparseVector], y: &[usize], seed: u64) -> Result<TrainedModel> {
        match *self {
            ModelSpec::RandomForest { n_trees, max_depth, max_leaf_nodes } => {
                let params = ForestParams { seed, ..ForestParams::new(n_trees, max_depth, max_leaf_nodes) };
                train_forest(x, y, &params)
            }
            ModelSpec::LogisticRegression { l2_penalty, learning_rate, epochs } => {
                let params = LogRegParams { l2_penalty, learning_rate, epochs, seed, ..LogRegParams::default() };
                Ok(train_logreg(x, y, &params)?.0)
            }
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::RandomForest { n_trees, max_depth, max_leaf_nodes } => {
                write!(f, "n_trees={n_trees};max_depth={max_depth};max_leaf_nodes={max_leaf_nodes}")
            }
            ModelSpec::LogisticRegression { l2_penalty, learning_rate, epochs } => {
                write!(f, "l2_penalty={l2_penalty};learning_rate={learning_rate};epochs={epochs}")
            }
        }
    }
}

/// Ordered hyperparameter points of one model family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelGrid {
    pub kind: ModelKind,
    pub points: Vec<ModelSpec>,
}

impl ModelGrid {
    pub fn forest(n_trees: &[usize], max_depth: &[usize], max_leaf_nodes: &[usize]) -> Self {
        let mut points = Vec::new();
        for &n in n_trees {
            for &d in max_depth {
                for &l in max_leaf_nodes {
                    points.push(ModelSpec::RandomForest { n_trees: n, max_depth: d, max_leaf_nodes: l });
                }
            }
        }
        ModelGrid { kind: ModelKind::RandomForest, points }
    }

    pub fn logreg(l2_penalty: &[f64], learning_rate: &[f64], epochs: &[usize]) -> Self {
        let mut points = Vec::new();
        for &l2 in l2_penalty {
            for &lr in learning_rate {
                for &e in epochs {
                    points.push(ModelSpec::LogisticRegression { l2_penalty: l2, learning_rate: lr, epochs: e });
                }
            }
        }
        ModelGrid { kind: ModelKind::LogisticRegression, points }
    }

    /// Small grids for quick runs.
    pub fn desk(kind: ModelKind) -> Self {
        match kind {
            ModelKind::RandomForest => Self::forest(&[50], &[7], &[100]),
            ModelKind::LogisticRegression => Self::logreg(&[1e-4], &[1.0], &[30]),
        }
    }

    /// The full forest grid: trees {100, 300, 500}, depth {3, 5, 7, 9},
    /// leaves {100, 200, 300}.
    pub fn paper(kind: ModelKind) -> Self {
        match kind {
            ModelKind::RandomForest => Self::forest(&[100, 300, 500], &[3, 5, 7, 9], &[100, 200, 300]),
            ModelKind::LogisticRegression => Self::logreg(&[1e-5, 1e-4, 1e-3], &[0.5, 1.0], &[30, 60]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureSettings {
    /// Vocabulary terms must occur in at least this fraction of training documents.
    pub min_doc_fraction: f64,
}

impl Default for FeatureSettings {
    fn default() -> Self {
        FeatureSettings { min_doc_fraction: 0.001 }
    }
}

/// The corpus with every original description preprocessed once.
pub struct PreparedCorpus<'a> {
    records: &'a [VulnRecord],
    docs: Vec<TokenizedDoc>,
    by_id: HashMap<&'a str, usize>,
    stop_words: &'a StopWordSet,
}

impl<'a> PreparedCorpus<'a> {
    pub fn new(records: &'a [VulnRecord], stop_words: &'a StopWordSet) -> Self {
        let docs = records.par_iter().map(|r| preprocess(&r.description, stop_words)).collect();
        let by_id = records.iter().enumerate().map(|(i, r)| (r.id.as_str(), i)).collect();
        PreparedCorpus { records, docs, by_id, stop_words }
    }

    pub fn records(&self) -> &'a [VulnRecord] {
        self.records
    }

    pub fn doc(&self, i: usize) -> &TokenizedDoc {
        &self.docs[i]
    }

    pub fn stop_words(&self) -> &'a StopWordSet {
        self.stop_words
    }

    fn doc_for(&self, r: &TrainingRecord<'_>) -> TokenizedDoc {
        match r {
            TrainingRecord::Original(v) => match self.by_id.get(v.id.as_str()) {
                Some(&i) => self.docs[i].clone(),
                None => preprocess(&v.description, self.stop_words),
            },
            TrainingRecord::Augmented(a) => preprocess(a.description(), self.stop_words),
        }
    }
}

/// Features and labels of one round after balancing.
pub struct RoundData {
    pub spec: RoundSpec,
    pub tfidf: TfIdfModel,
    pub x_train: Vec<SparseVector>,
    pub y_train: Vec<usize>,
    /// Per training row: synthetic or not.
    pub augmented: Vec<bool>,
    pub x_val: Vec<SparseVector>,
    pub y_val: Vec<usize>,
    pub x_test: Vec<SparseVector>,
    pub y_test: Vec<usize>,
    pub diagnostics: Vec<String>,
}

fn unit_error(task: CvssMetric, technique: Technique, round: usize) -> impl FnOnce(Error) -> Error {
    move |e| match e {
        e @ Error::Unit { .. } => e,
        e => Error::Unit { task: task.to_string(), technique: technique.to_string(), round, source: Box::new(e) },
    }
}

/// Seed of the augmentation stream for (task, technique, round).
pub fn augmentation_seed(seed: u64, task: CvssMetric, technique: Technique, round: usize) -> u64 {
    derive_seed(&[
        SeedPart::Int(seed),
        SeedPart::Str("augment"),
        SeedPart::Str(task.abbrev()),
        SeedPart::Str(technique.name()),
        SeedPart::from(round),
    ])
}

/// Seed of the model stream for (task, technique, grid point, round).
pub fn model_seed(seed: u64, task: CvssMetric, technique: Technique, point: usize, round: usize) -> u64 {
    derive_seed(&[
        SeedPart::Int(seed),
        SeedPart::Str("model"),
        SeedPart::Str(task.abbrev()),
        SeedPart::Str(technique.name()),
        SeedPart::from(point),
        SeedPart::from(round),
    ])
}

/// Balances the round's training folds and fits TF-IDF on the result.
/// Validation and test rows are transformed but never augmented.
pub fn prepare_round(
    prep: &PreparedCorpus<'_>,
    spec: &RoundSpec,
    task: CvssMetric,
    plan: &AugmentationPlan,
    ctx: &AugmentContext<'_>,
    features: &FeatureSettings,
    seed: u64,
) -> Result<RoundData> {
    let wrap = unit_error(task, plan.technique, spec.round);
    let records = prep.records();
    let train: &[VulnRecord] = &records[spec.train.clone()];
    let round_plan = AugmentationPlan { seed: augmentation_seed(seed, task, plan.technique, spec.round), ..*plan };
    let balanced = balance_training_set(train, task, &round_plan, ctx).map_err(wrap)?;
    let docs: Vec<TokenizedDoc> = balanced.records.par_iter().map(|r| prep.doc_for(r)).collect();
    let vocab = fit_vocabulary(&docs, features.min_doc_fraction)
        .map_err(unit_error(task, plan.technique, spec.round))?;
    let tfidf = TfIdfModel::fit(&docs, vocab);
    let x_train = docs.par_iter().map(|d| tfidf.transform(d)).collect();
    let y_train = balanced.records.iter().map(|r| r.labels().class_index(task)).collect();
    let augmented = balanced.records.iter().map(TrainingRecord::is_augmented).collect();
    let held_out = |range: std::ops::Range<usize>| -> (Vec<SparseVector>, Vec<usize>) {
        range.into_par_iter().map(|i| (tfidf.transform(prep.doc(i)), records[i].labels.class_index(task))).unzip()
    };
    let (x_val, y_val) = held_out(spec.validation.clone());
    let (x_test, y_test) = held_out(spec.test.clone());
    let diagnostics = balanced.diagnostics.iter().map(|d| format!("round {}: {d}", spec.round)).collect();
    Ok(RoundData { spec: spec.clone(), tfidf, x_train, y_train, augmented, x_val, y_val, x_test, y_test, diagnostics })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundResult {
    pub task: CvssMetric,
    pub model: ModelKind,
    pub technique: Technique,
    pub spec: ModelSpec,
    pub round: usize,
    pub validation_mcc: f64,
    pub test_mcc: f64,
    pub test_f1: f64,
    pub validation_cm: ConfusionMatrix,
    pub test_cm: ConfusionMatrix,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOutcome {
    pub task: CvssMetric,
    pub model: ModelKind,
    pub technique: Technique,
    pub selected: usize,
    pub selected_spec: ModelSpec,
    /// `[point][round]` validation MCC.
    pub validation_mcc: Vec<Vec<f64>>,
    /// Rounds of the selected point.
    pub rounds: Vec<RoundResult>,
    pub mean_test_mcc: f64,
    pub mean_test_f1: f64,
    pub diagnostics: Vec<String>,
}

/// Index of the highest mean; the first wins ties.
pub fn select_point(mean_validation: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in mean_validation.iter().enumerate() {
        if best.is_none_or(|b| v > mean_validation[b]) {
            best = Some(i);
        }
    }
    best
}

fn evaluate(
    data: &RoundData,
    task: CvssMetric,
    technique: Technique,
    spec: &ModelSpec,
    seed: u64,
) -> Result<RoundResult> {
    let model = spec.train(&data.x_train, &data.y_train, seed)?;
    let val_cm = ConfusionMatrix::from_predictions(&data.y_val, &model.predict_batch(&data.x_val)?)?;
    let test_cm = ConfusionMatrix::from_predictions(&data.y_test, &model.predict_batch(&data.x_test)?)?;
    let mut flags = model.diagnostics.clone();
    let absent = val_cm.absent_true_classes();
    if !absent.is_empty() {
        let names: Vec<&str> = absent.iter().map(|&k| task.class_names()[k]).collect();
        flags.push(format!("validation lacks classes {}", names.join(",")));
    }
    Ok(RoundResult {
        task,
        model: spec.kind(),
        technique,
        spec: *spec,
        round: data.spec.round,
        validation_mcc: multiclass_mcc(&val_cm),
        test_mcc: multiclass_mcc(&test_cm),
        test_f1: macro_f1(&test_cm),
        validation_cm: val_cm,
        test_cm,
        flags,
    })
}

/// Trains every grid point on already-prepared rounds and selects one.
pub fn run_grid_on_rounds(
    rounds: &[RoundData],
    task: CvssMetric,
    technique: Technique,
    grid: &ModelGrid,
    seed: u64,
) -> Result<GridOutcome> {
    if grid.points.is_empty() {
        return Err(Error::Config("model grid is empty".into()));
    }
    if rounds.is_empty() {
        return Err(Error::EmptyData("no evaluation rounds".into()));
    }
    let jobs: Vec<(usize, usize)> =
        (0..grid.points.len()).flat_map(|p| (0..rounds.len()).map(move |r| (p, r))).collect();
    let results: Vec<RoundResult> = jobs
        .par_iter()
        .map(|&(p, r)| {
            let round = rounds[r].spec.round;
            evaluate(&rounds[r], task, technique, &grid.points[p], model_seed(seed, task, technique, p, round))
                .map_err(unit_error(task, technique, round))
        })
        .collect::<Result<_>>()?;
    let n_rounds = rounds.len();
    let validation_mcc: Vec<Vec<f64>> = results
        .chunks(n_rounds)
        .map(|c| c.iter().map(|r| r.validation_mcc).collect())
        .collect();
    let means: Vec<f64> = validation_mcc.iter().map(|v| v.iter().sum::<f64>() / n_rounds as f64).collect();
    let selected = select_point(&means).expect("grid is non-empty");
    let chosen: Vec<RoundResult> = results[selected * n_rounds..(selected + 1) * n_rounds].to_vec();
    let mean_test_mcc = chosen.iter().map(|r| r.test_mcc).sum::<f64>() / n_rounds as f64;
    let mean_test_f1 = chosen.iter().map(|r| r.test_f1).sum::<f64>() / n_rounds as f64;
    let mut diagnostics: Vec<String> = rounds.iter().flat_map(|r| r.diagnostics.iter().cloned()).collect();
    for r in &chosen {
        diagnostics.extend(r.flags.iter().map(|f| format!("round {}: {f}", r.round)));
    }
    Ok(GridOutcome {
        task,
        model: grid.kind,
        technique,
        selected,
        selected_spec: grid.points[selected],
        validation_mcc,
        rounds: chosen,
        mean_test_mcc,
        mean_test_f1,
        diagnostics,
    })
}

/// Prepares the three rounds for (task, technique) and runs the grid.
#[allow(clippy::too_many_arguments)]
pub fn run_grid(
    prep: &PreparedCorpus<'_>,
    folds: &TimeFolds,
    task: CvssMetric,
    grid: &ModelGrid,
    plan: &AugmentationPlan,
    ctx: &AugmentContext<'_>,
    features: &FeatureSettings,
    seed: u64,
) -> Result<GridOutcome> {
    let rounds = folds
        .rounds()
        .par_iter()
        .map(|spec| prepare_round(prep, spec, task, plan, ctx, features, seed))
        .collect::<Result<Vec<_>>>()?;
    run_grid_on_rounds(&rounds, task, plan.technique, grid, seed)
}
