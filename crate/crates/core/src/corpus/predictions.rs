//! Predictions file: JSON Lines `{"id": ..., "spans": [[a, b, "LABEL"], ...]}` with inclusive `b`.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LabelSet, Segmentation, Span};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionRecord {
    pub id: String,
    pub spans: Vec<(usize, usize, String)>,
}

impl PredictionRecord {
    pub fn from_segmentation(id: impl Into<String>, seg: &Segmentation, labels: &LabelSet) -> Self {
        PredictionRecord {
            id: id.into(),
            spans: seg
                .spans()
                .iter()
                .map(|s| (s.a, s.b, labels.name(s.y).to_string()))
                .collect(),
        }
    }

    /// Converts to a validated segmentation; labels must be present in `labels`.
    pub fn to_segmentation(&self, labels: &LabelSet) -> Result<Segmentation> {
        let spans = self
            .spans
            .iter()
            .map(|(a, b, name)| {
                if b < a {
                    return Err(Error::InvalidSegmentation { m: *a });
                }
                let y = labels.index(name).ok_or_else(|| Error::UnknownLabel {
                    doc: self.id.clone(),
                    label: name.clone(),
                })?;
                Ok(Span::new(*a, *b, y))
            })
            .collect::<Result<Vec<_>>>()?;
        Segmentation::new(spans)
    }
}

pub fn write_predictions(path: impl AsRef<Path>, records: &[PredictionRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut out = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    for record in records {
        let line = serde_json::to_string(record).expect("record serializes");
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<Vec<PredictionRecord>> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PredictionRecord = serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
            path: path.to_path_buf(),
            line: lineno + 1,
            message: e.to_string(),
        })?;
        if !seen.insert(record.id.clone()) {
            return Err(Error::DuplicateId(record.id));
        }
        out.push(record);
    }
    Ok(out)
}
