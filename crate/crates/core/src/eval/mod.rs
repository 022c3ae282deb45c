//! Time-based evaluation: folds and rounds, metrics, grid selection,
//! significance tests, centroid similarity and report writing.

mod folds;
mod grid;
mod metrics;
mod report;
mod similarity;
mod wilcoxon;

pub use folds::{split_time_folds, RoundSpec, TimeFolds, N_FOLDS, N_ROUNDS};
pub use grid::{
    augmentation_seed, model_seed, prepare_round, run_grid, run_grid_on_rounds, select_point, FeatureSettings,
    GridOutcome, ModelGrid, ModelSpec, PreparedCorpus, RoundData, RoundResult,
};
pub use metrics::{class_f1, macro_f1, multiclass_mcc, ConfusionMatrix};
pub use report::{percent_difference, Comparison, ExperimentReport, TaskSimilarity, PAIRING_UNIT};
pub use similarity::{centroid_similarity, ClassSimilarity, SimilarityReport};
pub use wilcoxon::{
    average_ranks, wilcoxon_signed_rank, Magnitude, WilcoxonOutcome, WilcoxonResult, MIN_PAIRS, SIGNIFICANCE_LEVEL,
};

/// Centroid similarity of one prepared round: synthetic training vectors
/// against the class centroids of the original training vectors.
pub fn round_similarity(data: &RoundData) -> SimilarityReport {
    let mut augmented = Vec::new();
    let mut originals = Vec::new();
    for ((x, &y), &aug) in data.x_train.iter().zip(&data.y_train).zip(&data.augmented) {
        if aug {
            augmented.push((y, x.clone()));
        } else {
            originals.push((y, x.clone()));
        }
    }
    centroid_similarity(&augmented, &originals)
}
