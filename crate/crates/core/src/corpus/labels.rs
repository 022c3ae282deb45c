use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub const N_CLASSES: usize = 3;
pub const N_METRICS: usize = 7;

/// The seven CVSS v2 metrics. Iteration order is the order of
/// [`CvssMetric::ALL`]: AV, AC, Au, C, I, A, Severity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CvssMetric {
    AccessVector,
    AccessComplexity,
    Authentication,
    Confidentiality,
    Integrity,
    Availability,
    Severity,
}

impl CvssMetric {
    pub const ALL: [CvssMetric; N_METRICS] = [
        CvssMetric::AccessVector,
        CvssMetric::AccessComplexity,
        CvssMetric::Authentication,
        CvssMetric::Confidentiality,
        CvssMetric::Integrity,
        CvssMetric::Availability,
        CvssMetric::Severity,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Class names in fixed ordinal order; a class index is a position here.
    pub fn class_names(self) -> [&'static str; N_CLASSES] {
        match self {
            CvssMetric::AccessVector => ["Local", "AdjacentNetwork", "Network"],
            CvssMetric::AccessComplexity => ["High", "Medium", "Low"],
            CvssMetric::Authentication => ["Multiple", "Single", "None"],
            CvssMetric::Confidentiality | CvssMetric::Integrity | CvssMetric::Availability => {
                ["None", "Partial", "Complete"]
            }
            CvssMetric::Severity => ["Low", "Medium", "High"],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CvssMetric::AccessVector => "AccessVector",
            CvssMetric::AccessComplexity => "AccessComplexity",
            CvssMetric::Authentication => "Authentication",
            CvssMetric::Confidentiality => "Confidentiality",
            CvssMetric::Integrity => "Integrity",
            CvssMetric::Availability => "Availability",
            CvssMetric::Severity => "Severity",
        }
    }

    pub fn abbrev(self) -> &'static str {
        match self {
            CvssMetric::AccessVector => "AV",
            CvssMetric::AccessComplexity => "AC",
            CvssMetric::Authentication => "Au",
            CvssMetric::Confidentiality => "C",
            CvssMetric::Integrity => "I",
            CvssMetric::Availability => "A",
            CvssMetric::Severity => "S",
        }
    }

    /// Column name in the native CSV corpus format.
    pub fn csv_column(self) -> &'static str {
        match self {
            CvssMetric::AccessVector => "access_vector",
            CvssMetric::AccessComplexity => "access_complexity",
            CvssMetric::Authentication => "authentication",
            CvssMetric::Confidentiality => "confidentiality",
            CvssMetric::Integrity => "integrity",
            CvssMetric::Availability => "availability",
            CvssMetric::Severity => "severity",
        }
    }

    /// Parses a class value. Accepts the class names above as well as NVD
    /// spellings (`ADJACENT_NETWORK`, `MULTIPLE_INSTANCES`, ...), case-insensitively.
    pub fn parse_class(self, raw: &str) -> Option<ClassLabel> {
        let norm: String = raw
            .chars()
            .filter(|c| !matches!(c, '_' | ' ' | '-'))
            .flat_map(char::to_lowercase)
            .collect();
        let norm = match norm.as_str() {
            "multipleinstances" => "multiple",
            "singleinstance" => "single",
            "adjacent" => "adjacentnetwork",
            other => other,
        };
        self.class_names()
            .iter()
            .position(|n| n.to_lowercase() == norm)
            .map(|i| ClassLabel::new(self, i as u8))
    }

    /// CVSS v2 qualitative severity band for a base score.
    pub fn severity_from_score(score: f64) -> Option<ClassLabel> {
        if !(0.0..=10.0).contains(&score) {
            return None;
        }
        // Scores carry one decimal; compare on tenths to avoid 3.9000001 drift.
        let tenths = (score * 10.0).round() as i64;
        let idx = if tenths <= 39 {
            0
        } else if tenths <= 69 {
            1
        } else {
            2
        };
        Some(ClassLabel::new(CvssMetric::Severity, idx))
    }
}

impl fmt::Display for CvssMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CvssMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .flat_map(char::to_lowercase)
            .collect();
        CvssMetric::ALL
            .into_iter()
            .find(|m| {
                m.name().to_lowercase() == norm
                    || m.abbrev().to_lowercase() == norm
                    || m.csv_column().replace('_', "") == norm
            })
            .ok_or_else(|| Error::Config(format!("unknown CVSS metric `{s}`")))
    }
}

/// One of a metric's three classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClassLabel {
    pub metric: CvssMetric,
    index: u8,
}

impl ClassLabel {
    pub fn new(metric: CvssMetric, index: u8) -> Self {
        assert!((index as usize) < N_CLASSES, "class index {index} out of range");
        ClassLabel { metric, index }
    }

    pub fn index(self) -> usize {
        self.index as usize
    }

    pub fn name(self) -> &'static str {
        self.metric.class_names()[self.index()]
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A complete label assignment: one class index per metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Labels([u8; N_METRICS]);

impl Labels {
    pub fn from_classes(classes: [ClassLabel; N_METRICS]) -> Self {
        let mut out = [0u8; N_METRICS];
        for (m, c) in CvssMetric::ALL.iter().zip(classes) {
            debug_assert_eq!(*m, c.metric);
            out[m.index()] = c.index;
        }
        Labels(out)
    }

    /// Builds from raw class indices in metric order.
    pub fn from_indices(indices: [u8; N_METRICS]) -> Option<Self> {
        indices.iter().all(|&i| (i as usize) < N_CLASSES).then_some(Labels(indices))
    }

    pub fn get(&self, metric: CvssMetric) -> ClassLabel {
        ClassLabel::new(metric, self.0[metric.index()])
    }

    pub fn class_index(&self, metric: CvssMetric) -> usize {
        self.0[metric.index()] as usize
    }

    pub fn indices(&self) -> [u8; N_METRICS] {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nvd_spellings_parse() {
        let av = CvssMetric::AccessVector;
        assert_eq!(av.parse_class("NETWORK").unwrap().name(), "Network");
        assert_eq!(av.parse_class("ADJACENT_NETWORK").unwrap().name(), "AdjacentNetwork");
        assert_eq!(av.parse_class("AdjacentNetwork").unwrap().index(), 1);
        let au = CvssMetric::Authentication;
        assert_eq!(au.parse_class("MULTIPLE_INSTANCES").unwrap().index(), 0);
        assert_eq!(au.parse_class("NONE").unwrap().index(), 2);
        assert!(au.parse_class("PARTIAL").is_none());
        assert_eq!(CvssMetric::Integrity.parse_class("complete").unwrap().index(), 2);
    }

    #[test]
    fn severity_bands() {
        let s = |x| CvssMetric::severity_from_score(x).unwrap().name();
        assert_eq!(s(7.5), "High");
        assert_eq!(s(4.0), "Medium");
        assert_eq!(s(3.9), "Low");
        assert_eq!(s(0.0), "Low");
        assert_eq!(s(6.9), "Medium");
        assert_eq!(s(7.0), "High");
        assert_eq!(s(10.0), "High");
        assert!(CvssMetric::severity_from_score(10.5).is_none());
    }

    #[test]
    fn metric_names_round_trip() {
        for m in CvssMetric::ALL {
            assert_eq!(m.name().parse::<CvssMetric>().unwrap(), m);
            assert_eq!(m.abbrev().parse::<CvssMetric>().unwrap(), m);
            assert_eq!(m.csv_column().parse::<CvssMetric>().unwrap(), m);
        }
        assert_eq!(CvssMetric::ALL.len(), 7);
    }
}
