use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{PairExampleI, PairExampleII};
use crate::error::{Error, Result};

/// A record type stored one JSON object per line.
pub trait PairRecord: Serialize + DeserializeOwned {
    fn validate(&self) -> std::result::Result<(), String>;
    fn tokens(&self) -> Box<dyn Iterator<Item = &str> + '_>;
}

impl PairRecord for PairExampleI {
    fn validate(&self) -> std::result::Result<(), String> {
        PairExampleI::validate(self)
    }

    fn tokens(&self) -> Box<dyn Iterator<Item = &str> + '_> {
        Box::new(self.x.iter().chain(&self.y).map(String::as_str))
    }
}

impl PairRecord for PairExampleII {
    fn validate(&self) -> std::result::Result<(), String> {
        PairExampleII::validate(self)
    }

    fn tokens(&self) -> Box<dyn Iterator<Item = &str> + '_> {
        Box::new(self.tokens.iter().map(String::as_str))
    }
}

pub fn write_pairs_to<W: Write, T: PairRecord>(mut out: W, records: &[T]) -> Result<()> {
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| Error::Format(e.to_string()))?;
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_pairs<T: PairRecord>(path: &Path, records: &[T]) -> Result<()> {
    write_pairs_to(BufWriter::new(File::create(path)?), records)
}

/// Reads and validates every line; blank lines are skipped.
pub fn read_pairs_from<B: BufRead, T: PairRecord>(reader: B, path: &Path) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: T = serde_json::from_str(&line)
            .map_err(|e| Error::parse(path, lineno + 1, e.to_string()))?;
        rec.validate()
            .map_err(|msg| Error::parse(path, lineno + 1, msg))?;
        out.push(rec);
    }
    Ok(out)
}

pub fn read_pairs<T: PairRecord>(path: &Path) -> Result<Vec<T>> {
    read_pairs_from(BufReader::new(File::open(path)?), path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn sample_ii() -> Vec<PairExampleII> {
        (0..3)
            .map(|k| PairExampleII {
                tokens: vec!["@Ponoun".into(), "saw".into(), "her".into(), ".".into()],
                i: 1,
                j: 3,
                label: (k % 2) as u8,
                source_id: format!("s{k}"),
            })
            .collect()
    }

    #[test]
    fn round_trip_keeps_order_and_fields() {
        let recs = sample_ii();
        let mut buf = Vec::new();
        write_pairs_to(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            r#"{"tokens":["@Ponoun","saw","her","."],"i":1,"j":3,"label":0,"source_id":"s0"}"#
        ));
        let back: Vec<PairExampleII> = read_pairs_from(Cursor::new(buf), Path::new("p")).unwrap();
        assert_eq!(back, recs);
    }

    #[test]
    fn truncated_line_reports_its_number() {
        let mut buf = Vec::new();
        write_pairs_to(&mut buf, &sample_ii()).unwrap();
        let mut text = String::from_utf8(buf).unwrap();
        text.truncate(text.len() - 10);
        let err =
            read_pairs_from::<_, PairExampleII>(Cursor::new(text), Path::new("p")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn invariant_violations_are_rejected() {
        let text = r#"{"tokens":["he","saw","her"],"i":1,"j":3,"label":1,"source_id":"x"}"#;
        let err =
            read_pairs_from::<_, PairExampleII>(Cursor::new(text), Path::new("p")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let text = r#"{"x":["a","cat"],"nouns":[2],"y":["saw","it"],"source_id":"x"}"#;
        assert!(read_pairs_from::<_, PairExampleI>(Cursor::new(text), Path::new("p")).is_err());
    }
}
