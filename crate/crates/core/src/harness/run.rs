use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{feed_format_for, AugmentationSettings, CorpusSource, ExperimentConfig};
use super::mini::{generate_mini_corpus, MINI_CORPUS_SEED, MINI_CORPUS_SIZE};
use crate::augment::{
    synthesize, AugmentContext, ContextualClient, FrequentWordPool, Provenance, SynonymLexicon, Technique,
    BUNDLED_SYNONYMS,
};
use crate::corpus::{
    build_corpus, class_distribution, ingest_feed, read_corpus_csv, write_corpus_csv, BuildReport, Corpus,
    CvssMetric, FeedFormat, Labels, VulnRecord,
};
use crate::error::{Error, Result};
use crate::eval::{
    prepare_round, round_similarity, run_grid_on_rounds, split_time_folds, ExperimentReport, GridOutcome,
    PreparedCorpus, RoundData, TaskSimilarity, PAIRING_UNIT,
};
use crate::textprep::{tokenize, StopWordSet, NLTK_STOPWORDS, SKLEARN_STOPWORDS};

pub const REPORT_JSON: &str = "report.json";
pub const METADATA_JSON: &str = "run_metadata.json";
pub const BACK_TRANSLATION_NOTE: &str =
    "back translation uses German as the intermediate language; this is a property of the remote service";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn open(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).map_err(|e| Error::Input(format!("cannot create {}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

/// Reads and validates feeds into one corpus.
pub fn ingest_feeds(paths: &[PathBuf], format: Option<FeedFormat>) -> Result<(Corpus, BuildReport)> {
    let mut raw = Vec::new();
    for p in paths {
        let items = ingest_feed(&open(p)?, feed_format_for(p, format))?;
        for r in &items {
            for d in &r.diagnostics {
                log::debug!("{}: {} {d}", p.display(), r.id);
            }
        }
        raw.extend(items);
    }
    let (corpus, report) = build_corpus(raw)?;
    if report.duplicate > 0 {
        log::warn!("{} duplicate CVE ids dropped; the later-published record was kept", report.duplicate);
    }
    Ok((corpus, report))
}

/// Per-metric class counts and fractions as a text table.
pub fn distribution_summary(corpus: &Corpus) -> String {
    let mut s = format!("{} records\n", corpus.len());
    for m in CvssMetric::ALL {
        let d = class_distribution(corpus, m);
        let cells: Vec<String> =
            d.entries().map(|(c, n, f)| format!("{}={} ({:.1}%)", c.name(), n, f * 100.0)).collect();
        let _ = writeln!(s, "{:<24} {}", m.name(), cells.join("  "));
    }
    s
}

/// `ingest`: feeds to a native CSV corpus plus a distribution summary.
pub fn cmd_ingest(paths: &[PathBuf], format: Option<FeedFormat>, out: &Path) -> Result<(BuildReport, String)> {
    if paths.is_empty() {
        return Err(Error::Input("no input feeds given".into()));
    }
    let (corpus, report) = ingest_feeds(paths, format)?;
    let mut w = create(out)?;
    write_corpus_csv(&corpus, &mut w)?;
    w.flush()?;
    Ok((report, distribution_summary(&corpus)))
}

pub fn load_corpus(source: &CorpusSource) -> Result<Corpus> {
    match source {
        CorpusSource::Csv(p) => read_corpus_csv(open(p)?.as_slice()),
        CorpusSource::NvdFeeds(paths) => ingest_feeds(paths, Some(FeedFormat::NvdJson11)).map(|r| r.0),
        CorpusSource::Mini => Corpus::new(generate_mini_corpus(MINI_CORPUS_SIZE, MINI_CORPUS_SEED)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitTiming {
    pub task: CvssMetric,
    pub technique: Technique,
    pub millis: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub tool_version: String,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
    pub seed: u64,
    pub corpus_records: usize,
    pub corpus_hash: String,
    /// SHA-256 of each bundled asset.
    pub asset_hashes: Vec<(String, String)>,
    pub contextual_client: String,
    pub back_translation: String,
    pub pairing_unit: String,
    pub complete: bool,
    pub timings: Vec<UnitTiming>,
    pub config: ExperimentConfig,
}

pub struct ExperimentRun {
    pub report: ExperimentReport,
    pub metadata: RunMetadata,
}

fn corpus_hash(corpus: &Corpus) -> Result<String> {
    let mut buf = Vec::new();
    write_corpus_csv(corpus, &mut buf)?;
    Ok(sha256_hex(&buf))
}

pub fn asset_hashes() -> Vec<(String, String)> {
    vec![
        ("stopwords_sklearn.txt".into(), sha256_hex(SKLEARN_STOPWORDS.as_bytes())),
        ("stopwords_nltk.txt".into(), sha256_hex(NLTK_STOPWORDS.as_bytes())),
        ("synonyms.tsv".into(), sha256_hex(BUNDLED_SYNONYMS.as_bytes())),
    ]
}

/// Runs every (task, technique, model) unit. Rounds are prepared once per
/// (task, technique) and shared by all model families. When `cancel` is set
/// the run stops between units and the report is marked incomplete.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    corpus: &Corpus,
    client: &dyn ContextualClient,
    cancel: &AtomicBool,
) -> Result<ExperimentRun> {
    let mut cfg = cfg.clone();
    cfg.normalize()?;
    let started_at = Utc::now();
    let folds = split_time_folds(corpus.len())?;
    let stop_words = StopWordSet::bundled();
    let lexicon = SynonymLexicon::bundled();
    let ctx = AugmentContext { stop_words: &stop_words, lexicon: &lexicon, client };
    let prep = PreparedCorpus::new(corpus.records(), &stop_words);
    let specs = folds.rounds();

    let mut outcomes: Vec<GridOutcome> = Vec::new();
    let mut similarity: Vec<TaskSimilarity> = Vec::new();
    let mut timings = Vec::new();
    let mut complete = true;
    'units: for &task in &cfg.tasks {
        for &technique in &cfg.techniques {
            if cancel.load(Ordering::SeqCst) {
                complete = false;
                break 'units;
            }
            let t0 = Instant::now();
            log::info!("{task} / {technique}: preparing rounds");
            let plan = cfg.augmentation.plan(technique, cfg.seed);
            let rounds: Vec<RoundData> = specs
                .par_iter()
                .map(|s| prepare_round(&prep, s, task, &plan, &ctx, &cfg.features, cfg.seed))
                .collect::<Result<_>>()?;
            if cfg.similarity && technique.is_text() {
                let reports: Vec<_> = rounds.iter().map(round_similarity).collect();
                similarity.extend(TaskSimilarity::from_rounds(task, technique, &reports));
            }
            for &model in &cfg.models {
                let outcome = run_grid_on_rounds(&rounds, task, technique, &cfg.grid(model), cfg.seed)?;
                log::info!(
                    "{task} / {technique} / {model}: test MCC {:.4}, macro F1 {:.4}",
                    outcome.mean_test_mcc,
                    outcome.mean_test_f1
                );
                for d in &outcome.diagnostics {
                    log::debug!("{task} / {technique} / {model}: {d}");
                }
                outcomes.push(outcome);
            }
            timings.push(UnitTiming { task, technique, millis: t0.elapsed().as_millis() });
        }
    }
    if !complete {
        log::warn!("run interrupted; writing a partial report marked incomplete");
    }
    let report = ExperimentReport::new(outcomes, similarity, complete)?;
    let metadata = RunMetadata {
        tool_version: env!("CARGO_PKG_VERSION").into(),
        started_at,
        finished_at: Utc::now(),
        seed: cfg.seed,
        corpus_records: corpus.len(),
        corpus_hash: corpus_hash(corpus)?,
        asset_hashes: asset_hashes(),
        contextual_client: client.describe(),
        back_translation: BACK_TRANSLATION_NOTE.into(),
        pairing_unit: PAIRING_UNIT.into(),
        complete,
        timings,
        config: cfg,
    };
    Ok(ExperimentRun { report, metadata })
}

/// Writes the tables, markdown summary and `report.json`.
pub fn write_report(report: &ExperimentReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::Input(format!("cannot create output directory {}: {e}", dir.display())))?;
    let mut w = create(&dir.join("report.csv"))?;
    report.write_csv(&mut w)?;
    w.flush()?;
    let mut w = create(&dir.join("comparisons.csv"))?;
    report.write_comparisons_csv(&mut w)?;
    w.flush()?;
    let mut w = create(&dir.join("percent_diff.tsv"))?;
    report.write_percent_tsv(&mut w)?;
    w.flush()?;
    let mut w = create(&dir.join("similarity.csv"))?;
    report.write_similarity_csv(&mut w)?;
    w.flush()?;
    let mut w = create(&dir.join("report.md"))?;
    report.write_markdown(&mut w)?;
    w.flush()?;
    let mut w = create(&dir.join(REPORT_JSON))?;
    serde_json::to_writer_pretty(&mut w, report)?;
    w.flush()?;
    Ok(())
}

pub fn write_run(run: &ExperimentRun, dir: &Path) -> Result<()> {
    write_report(&run.report, dir)?;
    let mut w = create(&dir.join(METADATA_JSON))?;
    serde_json::to_writer_pretty(&mut w, &run.metadata)?;
    w.flush()?;
    Ok(())
}

/// `report`: rebuilds every table from a previous run's `report.json`.
pub fn cmd_report(dir: &Path) -> Result<ExperimentReport> {
    let report: ExperimentReport = serde_json::from_slice(&open(&dir.join(REPORT_JSON))?)
        .map_err(|e| Error::Input(format!("malformed {}: {e}", REPORT_JSON)))?;
    write_report(&report, dir)?;
    Ok(report)
}

/// One preview sample: the rewritten text, or why it was skipped.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreviewSample {
    pub text: Option<String>,
    pub provenance: Provenance,
    pub skipped: Option<String>,
}

/// Descriptions a preview draws its frequent-word pool from.
pub fn preview_pool_corpus(corpus: Option<&Path>) -> Result<Vec<VulnRecord>> {
    match corpus {
        Some(p) => Ok(load_corpus(&CorpusSource::Csv(p.to_path_buf()))?.records().to_vec()),
        None => Ok(generate_mini_corpus(MINI_CORPUS_SIZE, MINI_CORPUS_SEED)),
    }
}

/// `augment-preview`: `n` synthetic variants of `text` exactly as a training
/// run would make them.
pub fn augment_preview(
    text: &str,
    technique: Technique,
    seed: u64,
    n: usize,
    settings: &AugmentationSettings,
    pool_corpus: &[VulnRecord],
    client: &dyn ContextualClient,
) -> Result<Vec<PreviewSample>> {
    if !technique.is_text() {
        return Err(Error::Config(format!("{technique} does not rewrite text; choose a text technique")));
    }
    if tokenize(text).is_empty() {
        return Err(Error::Input("preview text is empty".into()));
    }
    let plan = settings.plan(technique, seed);
    plan.validate()?;
    let stop_words = StopWordSet::bundled();
    let descs = || pool_corpus.iter().map(|r| r.description.as_str());
    let lexicon = SynonymLexicon::bundled().with_corpus(descs());
    let pool = FrequentWordPool::build(descs(), plan.min_doc_fraction_for_frequent_words, &stop_words);
    let ctx = AugmentContext { stop_words: &stop_words, lexicon: &lexicon, client };
    let origin = VulnRecord {
        id: "preview".into(),
        description: text.to_string(),
        published: DateTime::UNIX_EPOCH,
        labels: Labels::from_indices([0; 7]).expect("valid indices"),
    };
    (0..n)
        .map(|j| {
            let pool = technique.is_simple_text().then_some(&pool);
            Ok(match synthesize(&origin, j, &plan, &ctx, pool, &lexicon)? {
                Ok(a) => PreviewSample {
                    text: Some(a.description().to_string()),
                    provenance: a.provenance().clone(),
                    skipped: None,
                },
                Err(reason) => PreviewSample { text: None, provenance: Provenance::new(technique), skipped: Some(reason) },
            })
        })
        .collect()
}

/// Human-readable preview with one annotation line per edit.
pub fn format_preview(text: &str, samples: &[PreviewSample]) -> String {
    let mut s = format!("original:  {text}\n");
    for (j, p) in samples.iter().enumerate() {
        match (&p.text, &p.skipped) {
            (Some(t), _) => {
                let _ = writeln!(s, "sample {j}: {t}");
                for e in &p.provenance.edits {
                    let _ = writeln!(s, "  - {e}");
                }
                if p.provenance.shortfall > 0 {
                    let _ = writeln!(s, "  - shortfall {}", p.provenance.shortfall);
                }
                for f in &p.provenance.flags {
                    let _ = writeln!(s, "  - flag {f}");
                }
            }
            (None, reason) => {
                let _ = writeln!(s, "sample {j}: skipped ({})", reason.as_deref().unwrap_or("unknown"));
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::StubClient;

    const CVE: &str = "Buffer overflow in Solaris fdformat command gives root access to local users.";

    #[test]
    fn preview_is_deterministic() {
        let pool = generate_mini_corpus(200, 1);
        let s = AugmentationSettings::default();
        let a = augment_preview(CVE, Technique::Deletion, 5, 3, &s, &pool, &StubClient).unwrap();
        assert_eq!(a, augment_preview(CVE, Technique::Deletion, 5, 3, &s, &pool, &StubClient).unwrap());
        for p in &a {
            assert_eq!(p.provenance.edits.len(), 2);
            assert_eq!(tokenize(p.text.as_deref().unwrap()).len(), 10);
        }
        assert!(format_preview(CVE, &a).contains("delete '"));
    }

    #[test]
    fn preview_single_word_gets_one_edit() {
        let pool = generate_mini_corpus(200, 1);
        let s = AugmentationSettings::default();
        let a = augment_preview("overflow", Technique::Insertion, 1, 1, &s, &pool, &StubClient).unwrap();
        assert_eq!(a[0].provenance.edits.len(), 1);
        assert!(augment_preview(CVE, Technique::OverSample, 1, 1, &s, &pool, &StubClient).is_err());
    }

    #[test]
    fn hex_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
