//! Documents, label inventories, labeled segmentations and the on-disk corpus formats.
//!
//! A corpus file is UTF-8 JSON Lines with one document per line:
//!
//! ```text
//! {"id": "doc-1", "sentences": ["...", "..."], "labels": ["FAC", "ARG"]}
//! ```
//!
//! `labels` may be omitted for unlabeled prediction input. Sentence embeddings live
//! in a binary sidecar file (see [`semb`]), keyed by document id.

mod labels;
pub mod predictions;
mod segmentation;
pub mod semb;

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use labels::LabelSet;
pub use segmentation::{derive_spans, split_to_max_len, Segmentation, Span};

/// A document: an ordered list of sentences with optional gold labels and embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub sentences: Vec<String>,
    /// One label index per sentence, into the corpus [`LabelSet`].
    pub gold_labels: Option<Vec<usize>>,
    /// `m × d` sentence embedding matrix, one row per sentence.
    pub embeddings: Option<Array2<f32>>,
}

impl Document {
    pub fn new(id: impl Into<String>, sentences: Vec<String>) -> Self {
        Document {
            id: id.into(),
            sentences,
            gold_labels: None,
            embeddings: None,
        }
    }

    pub fn with_labels(mut self, labels: Vec<usize>) -> Self {
        self.gold_labels = Some(labels);
        self
    }

    pub fn with_embeddings(mut self, embeddings: Array2<f32>) -> Self {
        self.embeddings = Some(embeddings);
        self
    }

    /// Number of sentences.
    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Gold segmentation from maximal runs of identical sentence labels.
    pub fn gold_segmentation(&self) -> Result<Segmentation> {
        let labels = self
            .gold_labels
            .as_deref()
            .ok_or_else(|| Error::MissingGold(self.id.clone()))?;
        derive_spans(labels)
    }

    pub fn embeddings_or_err(&self) -> Result<&Array2<f32>> {
        self.embeddings
            .as_ref()
            .ok_or_else(|| Error::MissingEmbeddings(self.id.clone()))
    }

    /// Checks the document invariants against a label inventory of size `num_labels`.
    pub fn validate(&self, num_labels: usize) -> Result<()> {
        if self.sentences.is_empty() {
            return Err(Error::EmptyDocument(self.id.clone()));
        }
        if let Some(labels) = &self.gold_labels {
            if labels.len() != self.sentences.len() {
                return Err(Error::LabelCountMismatch {
                    id: self.id.clone(),
                    sentences: self.sentences.len(),
                    labels: labels.len(),
                });
            }
            if let Some(&bad) = labels.iter().find(|&&l| l >= num_labels) {
                return Err(Error::UnknownLabel {
                    doc: self.id.clone(),
                    label: format!("#{bad}"),
                });
            }
        }
        if let Some(emb) = &self.embeddings {
            if emb.nrows() != self.sentences.len() {
                return Err(Error::SentenceCountMismatch {
                    id: self.id.clone(),
                    expected: self.sentences.len(),
                    found: emb.nrows(),
                });
            }
            if emb.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("embeddings of `{}`", self.id)));
            }
        }
        Ok(())
    }
}

/// A loaded corpus. `labels` is `None` only when no document carries labels.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub labels: Option<LabelSet>,
    pub docs: Vec<Document>,
}

impl Corpus {
    pub fn label_set(&self) -> Result<&LabelSet> {
        self.labels
            .as_ref()
            .ok_or_else(|| Error::InvalidLabelSet("corpus carries no labels".into()))
    }
}

/// How gold labels found in a corpus file are interpreted.
#[derive(Debug, Clone, Copy)]
pub enum LabelMode<'a> {
    /// Build the label set from the labels present (sorted, deduplicated).
    Infer,
    /// Map onto a fixed label set; unknown labels are an error.
    Fixed(&'a LabelSet),
    /// Drop gold labels entirely.
    Ignore,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocumentRecord {
    id: String,
    sentences: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

/// Reads a JSON Lines corpus. Blank lines are skipped.
pub fn load_corpus(path: impl AsRef<Path>, mode: LabelMode<'_>) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);

    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| Error::MalformedLine {
            path: path.to_path_buf(),
            line: lineno + 1,
            message,
        };
        let record: DocumentRecord = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        if record.sentences.is_empty() {
            return Err(malformed(format!("document `{}` has no sentences", record.id)));
        }
        if let Some(labels) = &record.labels {
            if labels.len() != record.sentences.len() {
                return Err(Error::LabelCountMismatch {
                    id: record.id,
                    sentences: record.sentences.len(),
                    labels: labels.len(),
                });
            }
        }
        if !seen.insert(record.id.clone()) {
            return Err(Error::DuplicateId(record.id));
        }
        records.push(record);
    }

    let labels = match mode {
        LabelMode::Infer => {
            let mut names: Vec<&str> = records
                .iter()
                .filter_map(|r| r.labels.as_ref())
                .flatten()
                .map(String::as_str)
                .collect();
            names.sort_unstable();
            names.dedup();
            if names.is_empty() {
                None
            } else {
                Some(LabelSet::new(names)?)
            }
        }
        LabelMode::Fixed(set) => Some(set.clone()),
        LabelMode::Ignore => None,
    };

    let mut docs = Vec::with_capacity(records.len());
    for record in records {
        let gold_labels = match (&labels, record.labels, mode) {
            (_, _, LabelMode::Ignore) | (_, None, _) | (None, _, _) => None,
            (Some(set), Some(names), _) => Some(
                names
                    .iter()
                    .map(|name| {
                        set.index(name).ok_or_else(|| Error::UnknownLabel {
                            doc: record.id.clone(),
                            label: name.clone(),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
        };
        docs.push(Document {
            id: record.id,
            sentences: record.sentences,
            gold_labels,
            embeddings: None,
        });
    }
    Ok(Corpus { labels, docs })
}

/// Writes documents as JSON Lines; labels are written when present.
pub fn write_corpus(path: impl AsRef<Path>, docs: &[Document], labels: Option<&LabelSet>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for doc in docs {
        let names = match (&doc.gold_labels, labels) {
            (Some(idx), Some(set)) => Some(idx.iter().map(|&i| set.name(i).to_string()).collect()),
            _ => None,
        };
        let record = DocumentRecord {
            id: doc.id.clone(),
            sentences: doc.sentences.clone(),
            labels: names,
        };
        let line = serde_json::to_string(&record).expect("record serializes");
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Attaches embeddings from a SEMB file to every document of the corpus.
///
/// Every document id must be present with a matching sentence count. Entries
/// for ids not in the corpus are ignored.
pub fn load_embeddings(path: impl AsRef<Path>, docs: &mut [Document]) -> Result<usize> {
    let file = semb::read_semb(path)?;
    let index: std::collections::HashMap<&str, &Array2<f32>> =
        file.entries.iter().map(|e| (e.id.as_str(), &e.matrix)).collect();
    for doc in docs.iter_mut() {
        let matrix = index
            .get(doc.id.as_str())
            .ok_or_else(|| Error::MissingEmbeddings(doc.id.clone()))?;
        if matrix.nrows() != doc.sentences.len() {
            return Err(Error::SentenceCountMismatch {
                id: doc.id.clone(),
                expected: doc.sentences.len(),
                found: matrix.nrows(),
            });
        }
        doc.embeddings = Some((*matrix).clone());
    }
    Ok(file.dim)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_single_document() {
        let f =
            write_tmp(r#"{"id": "d1", "sentences": ["a b", "c", "d e f"], "labels": ["FAC", "FAC", "ARG"]}"#);
        let corpus = load_corpus(f.path(), LabelMode::Infer).unwrap();
        assert_eq!(corpus.docs.len(), 1);
        let doc = &corpus.docs[0];
        assert_eq!(doc.len(), 3);
        let labels = corpus.labels.unwrap();
        assert_eq!(labels.names(), &["ARG", "FAC"]);
        assert_eq!(doc.gold_labels.as_deref(), Some(&[1, 1, 0][..]));
    }

    #[test]
    fn empty_file_is_empty_corpus() {
        let f = write_tmp("");
        let corpus = load_corpus(f.path(), LabelMode::Infer).unwrap();
        assert!(corpus.docs.is_empty());
        assert!(corpus.labels.is_none());
    }

    #[test]
    fn label_count_mismatch_names_document() {
        let f = write_tmp(r#"{"id": "bad-doc", "sentences": ["a", "b"], "labels": ["X"]}"#);
        let err = load_corpus(f.path(), LabelMode::Infer).unwrap_err();
        assert!(err.to_string().contains("bad-doc"), "{err}");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let f = write_tmp("{\"id\": \"a\", \"sentences\": [\"x\"]}\n{not json}\n");
        match load_corpus(f.path(), LabelMode::Infer).unwrap_err() {
            Error::MalformedLine { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_ids_rejected() {
        let f =
            write_tmp("{\"id\": \"a\", \"sentences\": [\"x\"]}\n{\"id\": \"a\", \"sentences\": [\"y\"]}\n");
        assert!(matches!(
            load_corpus(f.path(), LabelMode::Infer),
            Err(Error::DuplicateId(id)) if id == "a"
        ));
    }

    #[test]
    fn fixed_label_set_rejects_unknown() {
        let set = LabelSet::new(["FAC"]).unwrap();
        let f = write_tmp(r#"{"id": "d", "sentences": ["x"], "labels": ["RPC"]}"#);
        assert!(matches!(
            load_corpus(f.path(), LabelMode::Fixed(&set)),
            Err(Error::UnknownLabel { label, .. }) if label == "RPC"
        ));
        let corpus = load_corpus(f.path(), LabelMode::Ignore).unwrap();
        assert!(corpus.docs[0].gold_labels.is_none());
    }

    #[test]
    fn corpus_write_read_round_trip() {
        let f = write_tmp(
            "{\"id\": \"a\", \"sentences\": [\"x\", \"y\"], \"labels\": [\"B\", \"A\"]}\n{\"id\": \"b\", \"sentences\": [\"z\"]}\n",
        );
        let corpus = load_corpus(f.path(), LabelMode::Infer).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        write_corpus(out.path(), &corpus.docs, corpus.labels.as_ref()).unwrap();
        let again = load_corpus(out.path(), LabelMode::Infer).unwrap();
        assert_eq!(again.docs, corpus.docs);
    }

    #[test]
    fn missing_embedding_entry_names_id() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.semb");
        let m = Array2::<f32>::zeros((1, 2));
        semb::write_semb(&path, 2, [("present", &m)]).unwrap();
        let mut docs = vec![
            Document::new("present", vec!["s".into()]),
            Document::new("absent#del", vec!["s".into()]),
        ];
        let err = load_embeddings(&path, &mut docs).unwrap_err();
        assert!(matches!(err, Error::MissingEmbeddings(ref id) if id == "absent#del"));
    }

    #[test]
    fn sentence_count_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.semb");
        let m = Array2::<f32>::zeros((2, 3));
        semb::write_semb(&path, 3, [("d", &m)]).unwrap();
        let mut docs = vec![Document::new("d", vec!["only one".into()])];
        assert!(matches!(
            load_embeddings(&path, &mut docs),
            Err(Error::SentenceCountMismatch {
                expected: 1,
                found: 2,
                ..
            })
        ));
    }
}
