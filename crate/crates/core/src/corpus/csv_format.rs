//! Native corpus CSV:
//! `id,published,access_vector,access_complexity,authentication,confidentiality,integrity,availability,severity,description`

use std::io::{Read, Write};

use super::{build_corpus, parse_timestamp, Corpus, CvssMetric, Diagnostic, RawRecord, REJECT_MARKER};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 10] = [
    "id",
    "published",
    "access_vector",
    "access_complexity",
    "authentication",
    "confidentiality",
    "integrity",
    "availability",
    "severity",
    "description",
];

fn parse_error(e: csv::Error) -> Error {
    let offset = e.position().map(|p| p.byte()).unwrap_or(0);
    Error::Parse { offset, message: e.to_string() }
}

pub(super) fn parse_raw(bytes: &[u8]) -> Result<Vec<RawRecord>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let header = reader.headers().map_err(parse_error)?.clone();
    if header.iter().map(str::trim).ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Parse {
            offset: 0,
            message: format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(parse_error)?;
        let mut rec = RawRecord::new(row[0].trim());
        if rec.id.is_empty() {
            rec.diagnostics.push(Diagnostic::MissingId);
        }
        match parse_timestamp(&row[1]) {
            Some(t) => rec.published = Some(t),
            None => rec.diagnostics.push(Diagnostic::BadTimestamp(row[1].to_string())),
        }
        for (i, metric) in CvssMetric::ALL.into_iter().enumerate() {
            let raw = row[2 + i].trim();
            match metric.parse_class(raw) {
                Some(c) => rec.labels[metric.index()] = Some(c),
                None => rec.diagnostics.push(Diagnostic::BadMetric { metric, value: raw.to_string() }),
            }
        }
        let desc = &row[9];
        if desc.trim().is_empty() {
            rec.diagnostics.push(Diagnostic::MissingDescription);
        } else {
            rec.rejected = desc.contains(REJECT_MARKER);
            rec.description = Some(desc.to_string());
        }
        out.push(rec);
    }
    Ok(out)
}

/// Reads a native CSV corpus and validates it.
pub fn read_corpus_csv(mut reader: impl Read) -> Result<Corpus> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    Ok(build_corpus(parse_raw(&bytes)?)?.0)
}

/// Writes the native CSV. The description column is always quoted.
pub fn write_corpus_csv(corpus: &Corpus, mut writer: impl Write) -> Result<()> {
    writeln!(writer, "{}", CSV_HEADER.join(","))?;
    for r in corpus.records() {
        write!(writer, "{},{}", quote_if_needed(&r.id), r.published.format("%Y-%m-%dT%H:%M:%SZ"))?;
        for m in CvssMetric::ALL {
            write!(writer, ",{}", r.label(m).name())?;
        }
        writeln!(writer, ",\"{}\"", r.description.replace('"', "\"\""))?;
    }
    writer.flush()?;
    Ok(())
}

fn quote_if_needed(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "id,published,access_vector,access_complexity,authentication,confidentiality,integrity,availability,severity,description\n\
CVE-1999-0315,1999-12-30T05:00:00Z,Local,Low,None,Complete,Complete,Complete,High,\"Buffer overflow in Solaris fdformat command gives root access to local users.\"\n\
CVE-2000-0001,2000-01-02T00:00:00Z,Network,Medium,Single,Partial,None,None,Medium,\"XSS, CSRF and \"\"quoted\"\" text\"\n";

    #[test]
    fn reads_sample() {
        let c = read_corpus_csv(SAMPLE.as_bytes()).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.records()[1].description, "XSS, CSRF and \"quoted\" text");
        assert_eq!(c.records()[0].label(CvssMetric::AccessVector).name(), "Local");
    }

    #[test]
    fn write_then_read_is_identity() {
        let c = read_corpus_csv(SAMPLE.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_corpus_csv(&c, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), SAMPLE);
        assert_eq!(read_corpus_csv(buf.as_slice()).unwrap(), c);
    }

    #[test]
    fn bad_header_rejected() {
        assert!(matches!(parse_raw(b"id,description\nx,y\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn unparseable_metric_is_diagnosed() {
        let bad = SAMPLE.replace("Local,Low", "Local,Sideways");
        let raw = parse_raw(bad.as_bytes()).unwrap();
        assert!(matches!(raw[0].diagnostics[0], Diagnostic::BadMetric { metric: CvssMetric::AccessComplexity, .. }));
    }
}
