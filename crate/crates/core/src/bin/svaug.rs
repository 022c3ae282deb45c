use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clap::{Parser, Subcommand};

use svaug::augment::{client_from_env, BudgetPolicy, Technique, SERVICE_URL_ENV};
use svaug::corpus::{CvssMetric, FeedFormat};
use svaug::forest::ModelKind;
use svaug::harness::{
    augment_preview, cmd_ingest, cmd_report, format_preview, load_corpus, preview_pool_corpus, run_experiment,
    write_run, AugmentationSettings, CorpusSource, ExperimentConfig,
};
use svaug::{Error, Result};

const EXIT_INTERRUPTED: u8 = 130;

#[derive(Parser)]
#[command(name = "svaug", version, about = "Data augmentation for imbalanced CVSS v2 assessment")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert NVD feeds into a corpus CSV and print class distributions.
    Ingest {
        /// Feed file; repeat for several.
        #[arg(long = "feed", required = true)]
        feeds: Vec<PathBuf>,
        /// `nvd-json-1.1` or `csv`; guessed from the extension when omitted.
        #[arg(long)]
        format: Option<FeedFormat>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full experiment and write reports.
    Run {
        /// JSON config; without one the bundled mini corpus is used.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Corpus CSV, overriding the config.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Use the full forest and logistic-regression grids.
        #[arg(long)]
        paper_grid: bool,
        #[arg(long, value_delimiter = ',')]
        tasks: Option<Vec<CvssMetric>>,
        #[arg(long, value_delimiter = ',')]
        techniques: Option<Vec<Technique>>,
        #[arg(long, value_delimiter = ',')]
        models: Option<Vec<ModelKind>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Show the synthetic samples one technique makes from a description.
    AugmentPreview {
        text: String,
        #[arg(long)]
        technique: Technique,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        samples: usize,
        /// Corpus CSV for the frequent-word pool; defaults to the mini corpus.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Edit every budgeted position instead of a random number up to the budget.
        #[arg(long)]
        exact_budget: bool,
        #[arg(long)]
        json: bool,
    },
    /// Regenerate all tables from a run directory's report.json.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Ingest { feeds, format, out } => {
            let (report, summary) = cmd_ingest(&feeds, format, &out)?;
            println!("kept {} records, dropped {}", report.kept, report.dropped());
            print!("{summary}");
        }
        Command::Run { config, corpus, seed, paper_grid, tasks, techniques, models, out } => {
            let mut cfg = match &config {
                Some(p) => ExperimentConfig::load(p)?,
                None => ExperimentConfig::with_corpus(CorpusSource::Mini),
            };
            if let Some(c) = corpus {
                cfg.corpus = CorpusSource::Csv(c);
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cfg.grids.paper_grid |= paper_grid;
            if let Some(t) = tasks {
                cfg.tasks = t;
            }
            if let Some(t) = techniques {
                cfg.techniques = t;
            }
            if let Some(m) = models {
                cfg.models = m;
            }
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            cfg.normalize()?;
            let corpus = load_corpus(&cfg.corpus)?;
            let client = client_from_env(cfg.augmentation.max_in_flight);
            if cfg.techniques.iter().any(|t| t.contextual_mode().is_some()) {
                log::info!("contextual augmentation via {}", client.describe());
            }
            let cancel = Arc::new(AtomicBool::new(false));
            let flag = cancel.clone();
            if let Err(e) = ctrlc::set_handler(move || flag.store(true, Ordering::SeqCst)) {
                log::warn!("cannot install interrupt handler: {e}");
            }
            let result = run_experiment(&cfg, &corpus, client.as_ref(), &cancel)?;
            write_run(&result, &cfg.output_dir)?;
            println!("wrote reports to {}", cfg.output_dir.display());
            if !result.report.complete {
                return Ok(ExitCode::from(EXIT_INTERRUPTED));
            }
        }
        Command::AugmentPreview { text, technique, seed, samples, corpus, exact_budget, json } => {
            let client = client_from_env(1);
            if technique.contextual_mode().is_some() && std::env::var_os(SERVICE_URL_ENV).is_none() {
                eprintln!("note: {SERVICE_URL_ENV} is not set; using the deterministic local stub");
            }
            let settings = AugmentationSettings {
                budget_policy: if exact_budget { BudgetPolicy::Exact } else { BudgetPolicy::UpTo },
                ..AugmentationSettings::default()
            };
            let pool = preview_pool_corpus(corpus.as_deref())?;
            let out = augment_preview(&text, technique, seed, samples, &settings, &pool, client.as_ref())?;
            if json {
                println!("{}", serde_json::to_string_pretty(&out)?);
            } else {
                print!("{}", format_preview(&text, &out));
            }
        }
        Command::Report { dir } => {
            let report = cmd_report(&dir)?;
            println!("regenerated {} rows in {}", report.outcomes.len(), dir.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    e.exit_code() as u8
}
