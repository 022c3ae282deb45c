//! Class-imbalance mitigation for CVSS v2 software-vulnerability assessment:
//! corpus ingestion, text preprocessing, data augmentation, TF-IDF features,
//! random forests, and time-based evaluation.

pub mod augment;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod forest;
pub mod harness;
#[macro_use]
pub mod rng;
pub mod textprep;

pub use error::{Error, Result};
