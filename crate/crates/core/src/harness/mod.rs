//! Experiment orchestration: configuration, the synthetic mini corpus and the
//! commands behind the command-line tool.

mod config;
mod mini;
mod run;

pub use config::{
    feed_format_for, AugmentationSettings, CorpusSource, ExperimentConfig, ForestGridConfig, GridConfig,
    LogRegGridConfig, CONFIG_SCHEMA,
};
pub use mini::{generate_mini_corpus, keywords, CLASS_WEIGHTS, CONFUSION_RATE, MINI_CORPUS_SEED, MINI_CORPUS_SIZE, SIGNAL_RATE};
pub use run::*;
