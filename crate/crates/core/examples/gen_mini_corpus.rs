//! Regenerates `assets/mini_corpus.csv`.
//!
//! cargo run --example gen_mini_corpus -- [out.csv]

use std::fs::File;
use std::io::BufWriter;

use svaug::corpus::{write_corpus_csv, Corpus};
use svaug::harness::{generate_mini_corpus, MINI_CORPUS_SEED, MINI_CORPUS_SIZE};

fn main() -> svaug::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/assets/mini_corpus.csv").to_string());
    let corpus = Corpus::new(generate_mini_corpus(MINI_CORPUS_SIZE, MINI_CORPUS_SEED))?;
    write_corpus_csv(&corpus, BufWriter::new(File::create(&out)?))?;
    println!("wrote {} records to {out}", corpus.len());
    Ok(())
}
