use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A labeled span over sentences `a..=b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub a: usize,
    /// Inclusive end.
    pub b: usize,
    pub y: usize,
}

impl Span {
    pub fn new(a: usize, b: usize, y: usize) -> Self {
        debug_assert!(a <= b);
        Span { a, b, y }
    }

    pub fn len(&self) -> usize {
        self.b - self.a + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Contiguous, exhaustive sequence of labeled spans over a document.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Segmentation {
    spans: Vec<Span>,
}

impl Segmentation {
    /// Validates contiguity: first span starts at 0 and each span starts right after the previous.
    pub fn new(spans: Vec<Span>) -> Result<Self> {
        let mut next = 0;
        for span in &spans {
            if span.a != next || span.b < span.a {
                return Err(Error::InvalidSegmentation { m: next });
            }
            next = span.b + 1;
        }
        Ok(Segmentation { spans })
    }

    /// Like [`Segmentation::new`], additionally requiring coverage of exactly `m` sentences.
    pub fn covering(spans: Vec<Span>, m: usize) -> Result<Self> {
        let seg = Self::new(spans)?;
        if seg.num_sentences() != m {
            return Err(Error::InvalidSegmentation { m });
        }
        Ok(seg)
    }

    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    pub fn into_spans(self) -> Vec<Span> {
        self.spans
    }

    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    /// Total number of sentences covered.
    pub fn num_sentences(&self) -> usize {
        self.spans.last().map_or(0, |s| s.b + 1)
    }

    /// Per-sentence label sequence.
    pub fn flatten(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.num_sentences());
        for span in &self.spans {
            out.extend(std::iter::repeat_n(span.y, span.len()));
        }
        out
    }

    pub fn max_span_len(&self) -> usize {
        self.spans.iter().map(Span::len).max().unwrap_or(0)
    }
}

/// Merges maximal runs of identical labels into spans.
pub fn derive_spans(labels: &[usize]) -> Result<Segmentation> {
    if labels.is_empty() {
        return Err(Error::EmptyLabels);
    }
    let mut spans = Vec::new();
    let mut start = 0;
    for i in 1..=labels.len() {
        if i == labels.len() || labels[i] != labels[start] {
            spans.push(Span::new(start, i - 1, labels[start]));
            start = i;
        }
    }
    Ok(Segmentation { spans })
}

/// Splits spans longer than `lmax` greedily left to right into chunks of `lmax`
/// followed by a remainder.
pub fn split_to_max_len(seg: &Segmentation, lmax: usize) -> Segmentation {
    assert!(lmax >= 1, "maximum span length must be positive");
    let mut spans = Vec::with_capacity(seg.len());
    for span in seg.spans() {
        let mut a = span.a;
        while a <= span.b {
            let b = (a + lmax - 1).min(span.b);
            spans.push(Span::new(a, b, span.y));
            a = b + 1;
        }
    }
    Segmentation { spans }
}
