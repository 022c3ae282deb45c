//! Ingestion of NVD-style CVE feeds into a validated, time-ordered corpus.

mod csv_format;
mod labels;
mod nvd;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use csv_format::{read_corpus_csv, write_corpus_csv, CSV_HEADER};
pub use nvd::parse_cvss2_vector;
pub use labels::{ClassLabel, CvssMetric, Labels, N_CLASSES, N_METRICS};

pub const REJECT_MARKER: &str = "** REJECT **";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeedFormat {
    /// NVD JSON data feed, schema 1.1.
    NvdJson11,
    /// The native corpus CSV.
    Csv,
}

impl FromStr for FeedFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nvd-json-1.1" => Ok(FeedFormat::NvdJson11),
            "csv" => Ok(FeedFormat::Csv),
            other => Err(Error::Config(format!("unknown feed format `{other}`"))),
        }
    }
}

/// Problems noticed while reading one feed item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Diagnostic {
    MissingId,
    MissingDescription,
    MissingCvss,
    BadTimestamp(String),
    /// A CVSS v2 sub-metric that is absent or has an unknown value.
    BadMetric { metric: CvssMetric, value: String },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::MissingId => f.write_str("missing-id"),
            Diagnostic::MissingDescription => f.write_str("missing-description"),
            Diagnostic::MissingCvss => f.write_str("missing-cvss"),
            Diagnostic::BadTimestamp(v) => write!(f, "bad-timestamp `{v}`"),
            Diagnostic::BadMetric { metric, value } => write!(f, "bad-metric {metric} `{value}`"),
        }
    }
}

/// One feed item as read, before validation.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub id: String,
    pub description: Option<String>,
    pub published: Option<DateTime<Utc>>,
    pub labels: [Option<ClassLabel>; N_METRICS],
    pub base_score: Option<f64>,
    pub rejected: bool,
    pub diagnostics: Vec<Diagnostic>,
}

impl RawRecord {
    pub fn new(id: impl Into<String>) -> Self {
        RawRecord {
            id: id.into(),
            description: None,
            published: None,
            labels: [None; N_METRICS],
            base_score: None,
            rejected: false,
            diagnostics: Vec::new(),
        }
    }
}

/// Parses a feed document. One raw record per item, in feed order.
pub fn ingest_feed(bytes: &[u8], format: FeedFormat) -> Result<Vec<RawRecord>> {
    match format {
        FeedFormat::NvdJson11 => nvd::parse_feed(bytes),
        FeedFormat::Csv => csv_format::parse_raw(bytes),
    }
}

/// A validated vulnerability entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VulnRecord {
    pub id: String,
    pub description: String,
    pub published: DateTime<Utc>,
    pub labels: Labels,
}

impl VulnRecord {
    pub fn label(&self, metric: CvssMetric) -> ClassLabel {
        self.labels.get(metric)
    }
}

/// Records sorted by `(published, id)` with unique ids. Immutable once built.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    records: Vec<VulnRecord>,
}

impl Corpus {
    /// Sorts the records and checks every record invariant.
    pub fn new(mut records: Vec<VulnRecord>) -> Result<Self> {
        records.sort_by(|a, b| a.published.cmp(&b.published).then_with(|| a.id.cmp(&b.id)));
        let mut seen = std::collections::HashSet::with_capacity(records.len());
        for r in &records {
            if !seen.insert(r.id.as_str()) {
                return Err(Error::Input(format!("duplicate record id {}", r.id)));
            }
            if r.description.trim().is_empty() {
                return Err(Error::Input(format!("{}: empty description", r.id)));
            }
            if r.description.contains(REJECT_MARKER) {
                return Err(Error::Input(format!("{}: rejected entry", r.id)));
            }
        }
        Ok(Corpus { records })
    }

    pub fn records(&self) -> &[VulnRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Counts from [`build_corpus`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BuildReport {
    pub kept: usize,
    pub missing_id: usize,
    pub rejected: usize,
    pub missing_description: usize,
    pub missing_cvss: usize,
    pub invalid_metric: usize,
    pub bad_timestamp: usize,
    pub duplicate: usize,
    pub severity_derived: usize,
}

impl BuildReport {
    pub fn dropped(&self) -> usize {
        self.missing_id
            + self.rejected
            + self.missing_description
            + self.missing_cvss
            + self.invalid_metric
            + self.bad_timestamp
            + self.duplicate
    }
}

/// Validates raw records into a corpus. Duplicate ids keep the later-published
/// record (ties keep the later one in input order).
pub fn build_corpus(raw: impl IntoIterator<Item = RawRecord>) -> Result<(Corpus, BuildReport)> {
    let mut report = BuildReport::default();
    let mut by_id: HashMap<String, VulnRecord> = HashMap::new();

    for r in raw {
        if r.id.trim().is_empty() {
            report.missing_id += 1;
            continue;
        }
        if r.rejected || r.description.as_deref().is_some_and(|d| d.contains(REJECT_MARKER)) {
            report.rejected += 1;
            continue;
        }
        let description = match r.description.as_deref().map(str::trim) {
            Some(d) if !d.is_empty() => d.to_string(),
            _ => {
                report.missing_description += 1;
                continue;
            }
        };
        if r.diagnostics.contains(&Diagnostic::MissingCvss) {
            report.missing_cvss += 1;
            continue;
        }
        let mut classes = r.labels;
        let sev = CvssMetric::Severity.index();
        if classes[sev].is_none() {
            if let Some(c) = r.base_score.and_then(CvssMetric::severity_from_score) {
                classes[sev] = Some(c);
                report.severity_derived += 1;
            }
        }
        let Some(classes) = collect_labels(classes) else {
            report.invalid_metric += 1;
            continue;
        };
        let Some(published) = r.published else {
            report.bad_timestamp += 1;
            continue;
        };
        let rec = VulnRecord { id: r.id, description, published, labels: Labels::from_classes(classes) };
        match by_id.get(&rec.id) {
            Some(prev) => {
                report.duplicate += 1;
                if rec.published >= prev.published {
                    by_id.insert(rec.id.clone(), rec);
                }
            }
            None => {
                by_id.insert(rec.id.clone(), rec);
            }
        }
    }

    if by_id.is_empty() {
        return Err(Error::EmptyData("empty corpus: no record survived validation".into()));
    }
    report.kept = by_id.len();
    let corpus = Corpus::new(by_id.into_values().collect())?;
    Ok((corpus, report))
}

fn collect_labels(classes: [Option<ClassLabel>; N_METRICS]) -> Option<[ClassLabel; N_METRICS]> {
    let mut out = [ClassLabel::new(CvssMetric::AccessVector, 0); N_METRICS];
    for (slot, c) in out.iter_mut().zip(classes) {
        *slot = c?;
    }
    Some(out)
}

/// Per-class count and fraction for one metric, in class order.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassDistribution {
    pub metric: CvssMetric,
    pub counts: [usize; N_CLASSES],
    pub total: usize,
}

impl ClassDistribution {
    pub fn from_labels<'a>(metric: CvssMetric, labels: impl IntoIterator<Item = &'a Labels>) -> Self {
        let mut counts = [0usize; N_CLASSES];
        for l in labels {
            counts[l.class_index(metric)] += 1;
        }
        ClassDistribution { metric, counts, total: counts.iter().sum() }
    }

    pub fn fraction(&self, class: usize) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.counts[class] as f64 / self.total as f64
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (ClassLabel, usize, f64)> + '_ {
        (0..N_CLASSES).map(|i| (ClassLabel::new(self.metric, i as u8), self.counts[i], self.fraction(i)))
    }
}

pub fn class_distribution(corpus: &Corpus, metric: CvssMetric) -> ClassDistribution {
    ClassDistribution::from_labels(metric, corpus.records().iter().map(|r| &r.labels))
}

/// Parses the timestamp forms seen in NVD feeds and the native CSV.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%MZ", "%Y-%m-%dT%H:%M:%S%.fZ", "%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M:%S"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t.and_utc());
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|t| t.and_utc())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(id: &str, year: i32, desc: &str) -> RawRecord {
        let mut r = RawRecord::new(id);
        r.description = Some(desc.into());
        r.published = parse_timestamp(&format!("{year}-06-01"));
        for m in CvssMetric::ALL {
            r.labels[m.index()] = Some(ClassLabel::new(m, 1));
        }
        r
    }

    #[test]
    fn drops_rejected_and_counts() {
        let mut rejected = raw("CVE-2", 2000, "** REJECT ** duplicate of CVE-1");
        rejected.rejected = true;
        let (c, rep) = build_corpus(vec![raw("CVE-1", 2000, "a"), rejected, raw("CVE-3", 2001, "b")]).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(rep.rejected, 1);
        assert_eq!(rep.kept, 2);
    }

    #[test]
    fn sorts_by_date_then_id() {
        let (c, _) = build_corpus(vec![
            raw("CVE-A", 2001, "x"),
            raw("CVE-B", 1999, "x"),
            raw("CVE-C", 2000, "x"),
            raw("CVE-0", 2000, "x"),
        ])
        .unwrap();
        let ids: Vec<_> = c.records().iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["CVE-B", "CVE-0", "CVE-C", "CVE-A"]);
    }

    #[test]
    fn derives_severity_from_score() {
        for (score, expect) in [(7.5, "High"), (4.0, "Medium"), (3.9, "Low")] {
            let mut r = raw("CVE-1", 2000, "x");
            r.labels[CvssMetric::Severity.index()] = None;
            r.base_score = Some(score);
            let (c, rep) = build_corpus(vec![r]).unwrap();
            assert_eq!(c.records()[0].label(CvssMetric::Severity).name(), expect);
            assert_eq!(rep.severity_derived, 1);
        }
    }

    #[test]
    fn partial_labels_dropped() {
        let mut r = raw("CVE-1", 2000, "x");
        r.labels[CvssMetric::Integrity.index()] = None;
        let err = build_corpus(vec![r]).unwrap_err();
        assert!(matches!(err, Error::EmptyData(_)));
    }

    #[test]
    fn duplicate_keeps_later_published() {
        let (c, rep) = build_corpus(vec![raw("CVE-1", 2001, "new"), raw("CVE-1", 1999, "old")]).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.records()[0].description, "new");
        assert_eq!(rep.duplicate, 1);
    }

    #[test]
    fn distribution_counts() {
        let mut recs = Vec::new();
        for (i, av) in [2u8, 2, 2, 0].into_iter().enumerate() {
            let mut r = raw(&format!("CVE-{i}"), 2000, "x");
            r.labels[0] = Some(ClassLabel::new(CvssMetric::AccessVector, av));
            recs.push(r);
        }
        let (c, _) = build_corpus(recs).unwrap();
        let d = class_distribution(&c, CvssMetric::AccessVector);
        let e: Vec<_> = d.entries().map(|(l, n, f)| (l.name(), n, f)).collect();
        assert_eq!(e, [("Local", 1, 0.25), ("AdjacentNetwork", 0, 0.0), ("Network", 3, 0.75)]);

        let (one, _) = build_corpus(vec![raw("CVE-9", 2000, "x")]).unwrap();
        let d = class_distribution(&one, CvssMetric::Severity);
        assert_eq!(d.fraction(1), 1.0);
    }

    #[test]
    fn timestamp_forms() {
        assert!(parse_timestamp("1999-12-30T05:00Z").is_some());
        assert!(parse_timestamp("2020-01-01T00:15:00.000").is_some());
        assert!(parse_timestamp("2020-01-01T00:15:00Z").is_some());
        assert!(parse_timestamp("2020-01-01").is_some());
        assert!(parse_timestamp("yesterday").is_none());
    }

    #[test]
    fn unknown_format_is_config_error() {
        assert!(matches!("xml".parse::<FeedFormat>(), Err(Error::Config(_))));
    }
}
