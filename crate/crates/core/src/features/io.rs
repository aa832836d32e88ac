//! Line-oriented feature file: `<sample-id> <kind> <extractor> <dim> <v1> ...`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Extractor, FeatureKind, FeatureVector};
use crate::error::{Error, Result};
use crate::textfmt::sig9;

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureRecord {
    pub sample_id: String,
    pub feature: FeatureVector,
}

pub fn format_record(rec: &FeatureRecord) -> String {
    let f = &rec.feature;
    let mut line = format!(
        "{} {} {} {}",
        rec.sample_id,
        f.kind().as_str(),
        f.extractor().as_str(),
        f.dim()
    );
    for &v in f.values() {
        let _ = write!(line, " {}", sig9(v));
    }
    line
}

pub fn write_features(path: impl AsRef<Path>, records: &[FeatureRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for rec in records {
        if rec.sample_id.is_empty() || rec.sample_id.contains(char::is_whitespace) {
            return Err(Error::InvalidParams(format!(
                "sample id `{}` must be non-empty and free of whitespace",
                rec.sample_id
            )));
        }
        out.push_str(&format_record(rec));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::write_io(path, e))
}

pub fn read_features(path: impl AsRef<Path>) -> Result<Vec<FeatureRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::read_io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_record(l, i + 1))
        .collect()
}

pub fn parse_record(line: &str, line_no: usize) -> Result<FeatureRecord> {
    let bad = |message: String| Error::Parse {
        what: "feature record",
        line: line_no,
        message,
    };
    let mut tokens = line.split_whitespace();
    let mut next = |name: &str| tokens.next().ok_or_else(|| bad(format!("missing {name}")));
    let sample_id = next("sample id")?.to_string();
    let kind: FeatureKind = next("kind")?.parse().map_err(bad)?;
    let extractor: Extractor = next("extractor")?.parse().map_err(bad)?;
    let dim: usize = next("dim")?.parse().map_err(|_| bad("dim is not an integer".into()))?;
    if extractor.kind() != kind {
        return Err(bad(format!("{extractor} is not a {} extractor", kind.as_str())));
    }
    let values = tokens
        .map(|t| t.parse::<f64>().map_err(|_| bad(format!("bad value `{t}`"))))
        .collect::<Result<Vec<_>>>()?;
    if values.len() != dim {
        return Err(bad(format!("declared dim {dim}, found {} values", values.len())));
    }
    let feature = FeatureVector::new(extractor, values).map_err(|e| bad(e.to_string()))?;
    Ok(FeatureRecord { sample_id, feature })
}
