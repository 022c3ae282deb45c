//! NVD JSON 1.1 data feeds (`nvdcve-1.1-*.json`).

use serde::Deserialize;

use super::{parse_timestamp, ClassLabel, CvssMetric, Diagnostic, RawRecord, REJECT_MARKER};
use crate::error::{Error, Result};

#[derive(Deserialize)]
struct Feed {
    #[serde(rename = "CVE_Items")]
    items: Vec<Item>,
}

#[derive(Deserialize)]
struct Item {
    cve: Cve,
    #[serde(default)]
    impact: Option<Impact>,
    #[serde(rename = "publishedDate", default)]
    published: Option<String>,
}

#[derive(Deserialize)]
struct Cve {
    #[serde(rename = "CVE_data_meta")]
    meta: Meta,
    #[serde(default)]
    description: Option<Description>,
}

#[derive(Deserialize)]
struct Meta {
    #[serde(rename = "ID", default)]
    id: Option<String>,
}

#[derive(Deserialize)]
struct Description {
    #[serde(default)]
    description_data: Vec<LangString>,
}

#[derive(Deserialize)]
struct LangString {
    #[serde(default)]
    lang: Option<String>,
    value: String,
}

#[derive(Deserialize)]
struct Impact {
    #[serde(rename = "baseMetricV2", default)]
    v2: Option<BaseMetricV2>,
}

#[derive(Deserialize)]
struct BaseMetricV2 {
    #[serde(rename = "cvssV2")]
    cvss: Option<CvssV2>,
    #[serde(default)]
    severity: Option<String>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct CvssV2 {
    vector_string: Option<String>,
    access_vector: Option<String>,
    access_complexity: Option<String>,
    authentication: Option<String>,
    confidentiality_impact: Option<String>,
    integrity_impact: Option<String>,
    availability_impact: Option<String>,
    base_score: Option<f64>,
}

pub(super) fn parse_feed(bytes: &[u8]) -> Result<Vec<RawRecord>> {
    let feed: Feed = serde_json::from_slice(bytes).map_err(|e| Error::Parse {
        offset: byte_offset(bytes, e.line(), e.column()),
        message: e.to_string(),
    })?;
    Ok(feed.items.into_iter().map(convert).collect())
}

fn convert(item: Item) -> RawRecord {
    let mut rec = RawRecord::new(item.cve.meta.id.unwrap_or_default());
    if rec.id.is_empty() {
        rec.diagnostics.push(Diagnostic::MissingId);
    }

    // First English entry; first entry of any language otherwise.
    let entries = item.cve.description.map(|d| d.description_data).unwrap_or_default();
    let desc = entries
        .iter()
        .find(|d| d.lang.as_deref().is_some_and(|l| l.eq_ignore_ascii_case("en")))
        .or_else(|| entries.first())
        .map(|d| d.value.clone());
    match desc {
        Some(d) if !d.trim().is_empty() => {
            rec.rejected = d.contains(REJECT_MARKER);
            rec.description = Some(d);
        }
        _ => rec.diagnostics.push(Diagnostic::MissingDescription),
    }

    match item.published.as_deref() {
        Some(p) => match parse_timestamp(p) {
            Some(t) => rec.published = Some(t),
            None => rec.diagnostics.push(Diagnostic::BadTimestamp(p.to_string())),
        },
        None => rec.diagnostics.push(Diagnostic::BadTimestamp(String::new())),
    }

    let Some(v2) = item.impact.and_then(|i| i.v2) else {
        rec.diagnostics.push(Diagnostic::MissingCvss);
        return rec;
    };
    let Some(cvss) = v2.cvss else {
        rec.diagnostics.push(Diagnostic::MissingCvss);
        return rec;
    };
    let from_vector = cvss.vector_string.as_deref().and_then(|v| parse_cvss2_vector(v).ok());
    let fields = [
        (CvssMetric::AccessVector, &cvss.access_vector),
        (CvssMetric::AccessComplexity, &cvss.access_complexity),
        (CvssMetric::Authentication, &cvss.authentication),
        (CvssMetric::Confidentiality, &cvss.confidentiality_impact),
        (CvssMetric::Integrity, &cvss.integrity_impact),
        (CvssMetric::Availability, &cvss.availability_impact),
    ];
    for (i, (metric, value)) in fields.into_iter().enumerate() {
        let parsed = match value {
            Some(v) => metric.parse_class(v),
            None => from_vector.map(|vec| vec[i]),
        };
        match parsed {
            Some(c) => rec.labels[metric.index()] = Some(c),
            None => rec.diagnostics.push(Diagnostic::BadMetric {
                metric,
                value: value.clone().unwrap_or_default(),
            }),
        }
    }
    rec.base_score = cvss.base_score;
    if let Some(s) = v2.severity.as_deref() {
        match CvssMetric::Severity.parse_class(s) {
            Some(c) => rec.labels[CvssMetric::Severity.index()] = Some(c),
            None => rec.diagnostics.push(Diagnostic::BadMetric { metric: CvssMetric::Severity, value: s.into() }),
        }
    }
    rec
}

/// Parses a CVSS v2 base vector such as `AV:N/AC:L/Au:N/C:P/I:P/A:P` into the
/// six base-metric classes, in [`CvssMetric::ALL`] order.
pub fn parse_cvss2_vector(vector: &str) -> Result<[ClassLabel; 6]> {
    let body = vector.trim().trim_start_matches('(').trim_end_matches(')');
    let mut out: [Option<ClassLabel>; 6] = [None; 6];
    for part in body.split('/') {
        let (key, val) = part
            .split_once(':')
            .ok_or_else(|| Error::Input(format!("malformed CVSS v2 vector component `{part}`")))?;
        let (metric, class) = match (key, val) {
            ("AV", "L") => (CvssMetric::AccessVector, 0),
            ("AV", "A") => (CvssMetric::AccessVector, 1),
            ("AV", "N") => (CvssMetric::AccessVector, 2),
            ("AC", "H") => (CvssMetric::AccessComplexity, 0),
            ("AC", "M") => (CvssMetric::AccessComplexity, 1),
            ("AC", "L") => (CvssMetric::AccessComplexity, 2),
            ("Au", "M") => (CvssMetric::Authentication, 0),
            ("Au", "S") => (CvssMetric::Authentication, 1),
            ("Au", "N") => (CvssMetric::Authentication, 2),
            ("C" | "I" | "A", v) => {
                let m = match key {
                    "C" => CvssMetric::Confidentiality,
                    "I" => CvssMetric::Integrity,
                    _ => CvssMetric::Availability,
                };
                let c = match v {
                    "N" => 0,
                    "P" => 1,
                    "C" => 2,
                    _ => return Err(Error::Input(format!("bad CVSS v2 value `{part}`"))),
                };
                (m, c)
            }
            // Temporal/environmental components are ignored.
            ("E" | "RL" | "RC" | "CDP" | "TD" | "CR" | "IR" | "AR", _) => continue,
            _ => return Err(Error::Input(format!("bad CVSS v2 component `{part}`"))),
        };
        out[metric.index()] = Some(ClassLabel::new(metric, class));
    }
    let mut labels = [ClassLabel::new(CvssMetric::AccessVector, 0); 6];
    for (i, l) in out.into_iter().enumerate() {
        labels[i] = l.ok_or_else(|| Error::Input(format!("CVSS v2 vector `{vector}` lacks {}", CvssMetric::ALL[i])))?;
    }
    Ok(labels)
}

fn byte_offset(bytes: &[u8], line: usize, column: usize) -> u64 {
    if line == 0 {
        return 0;
    }
    let line_start: usize = bytes
        .split_inclusive(|&b| b == b'\n')
        .take(line - 1)
        .map(<[u8]>::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(bytes.len()) as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ingest_feed, FeedFormat};

    fn item(id: &str, desc: &str, v2: &str) -> String {
        format!(
            r#"{{"cve":{{"CVE_data_meta":{{"ID":"{id}"}},"description":{{"description_data":[{{"lang":"en","value":"{desc}"}}]}}}},
               "impact":{{{v2}}},"publishedDate":"1999-12-30T05:00Z"}}"#
        )
    }

    const V2: &str = r#""baseMetricV2":{"cvssV2":{"accessVector":"NETWORK","accessComplexity":"LOW","authentication":"NONE","confidentialityImpact":"PARTIAL","integrityImpact":"PARTIAL","availabilityImpact":"PARTIAL","baseScore":7.5}}"#;

    fn feed(items: &[String]) -> Vec<u8> {
        format!(r#"{{"CVE_data_type":"CVE","CVE_Items":[{}]}}"#, items.join(",")).into_bytes()
    }

    #[test]
    fn minimal_item() {
        let recs = ingest_feed(&feed(&[item("CVE-1", "x", V2)]), FeedFormat::NvdJson11).unwrap();
        assert_eq!(recs.len(), 1);
        assert!(recs[0].diagnostics.is_empty(), "{:?}", recs[0].diagnostics);
        assert_eq!(recs[0].labels[0].unwrap().name(), "Network");
        assert_eq!(recs[0].base_score, Some(7.5));
        assert!(recs[0].labels[6].is_none());
    }

    #[test]
    fn rejected_flagged() {
        let recs = ingest_feed(&feed(&[item("CVE-2", "** REJECT ** duplicate of CVE-1", V2)]), FeedFormat::NvdJson11).unwrap();
        assert!(recs[0].rejected);
    }

    #[test]
    fn missing_v2_diagnosed() {
        let recs = ingest_feed(&feed(&[item("CVE-3", "x", r#""baseMetricV3":{}"#)]), FeedFormat::NvdJson11).unwrap();
        assert_eq!(recs.len(), 1);
        assert!(recs[0].diagnostics.contains(&Diagnostic::MissingCvss));
    }

    #[test]
    fn bad_submetric_diagnosed() {
        let v2 = V2.replace("\"PARTIAL\",\"integrity", "\"WEIRD\",\"integrity");
        let recs = ingest_feed(&feed(&[item("CVE-4", "x", &v2)]), FeedFormat::NvdJson11).unwrap();
        assert!(matches!(recs[0].diagnostics[0], Diagnostic::BadMetric { metric: CvssMetric::Confidentiality, .. }));
    }

    #[test]
    fn malformed_document_reports_offset() {
        let bytes = b"{\"CVE_Items\": [\n  {\"cve\": oops}]}";
        match ingest_feed(bytes, FeedFormat::NvdJson11) {
            Err(Error::Parse { offset, .. }) => assert!((17..=30).contains(&offset), "{offset}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn vector_strings() {
        let v = parse_cvss2_vector("AV:L/AC:L/Au:N/C:C/I:C/A:C").unwrap();
        let names: Vec<_> = v.iter().map(|c| c.name()).collect();
        assert_eq!(names, ["Local", "Low", "None", "Complete", "Complete", "Complete"]);
        assert!(parse_cvss2_vector("AV:N/AC:L").is_err());
        assert!(parse_cvss2_vector("AV:X/AC:L/Au:N/C:C/I:C/A:C").is_err());
    }
}
