use rand::Rng;

use crate::corpus::{Document, Segmentation};
use crate::error::{Error, Result};

/// Deletes whitespace tokens independently with probability `rate`.
///
/// A sentence that would lose every token keeps one uniformly chosen token instead.
/// Sentences with no deletion are returned verbatim, whitespace included; edited
/// sentences are re-joined with single spaces.
pub fn word_delete(doc: &Document, rate: f64, rng: &mut impl Rng) -> Result<Document> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::InvalidConfig(format!(
            "deletion rate {rate} outside [0, 1]"
        )));
    }
    let sentences = doc
        .sentences
        .iter()
        .map(|sentence| {
            let tokens: Vec<&str> = sentence.split_whitespace().collect();
            if tokens.is_empty() {
                return sentence.clone();
            }
            let mut keep: Vec<bool> = tokens.iter().map(|_| !rng.random_bool(rate)).collect();
            if keep.iter().all(|&k| k) {
                return sentence.clone();
            }
            if keep.iter().all(|&k| !k) {
                keep[rng.random_range(0..tokens.len())] = true;
            }
            tokens
                .iter()
                .zip(&keep)
                .filter(|(_, &k)| k)
                .map(|(t, _)| *t)
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    Ok(Document {
        sentences,
        ..doc.clone()
    })
}

/// Number of adjacent swaps applied to a span of `len` sentences.
pub fn swap_count(len: usize, rate: f64) -> usize {
    if len < 2 {
        0
    } else {
        ((rate * (len - 1) as f64).round() as usize).max(1)
    }
}

/// Applies random adjacent swaps inside each gold span, leaving span boundaries and
/// therefore the per-sentence label sequence untouched.
pub fn sentence_swap(doc: &Document, gold: &Segmentation, rate: f64, rng: &mut impl Rng) -> Result<Document> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::InvalidConfig(format!("swap rate {rate} outside [0, 1]")));
    }
    if gold.num_sentences() != doc.len() {
        return Err(Error::LabelCountMismatch {
            id: doc.id.clone(),
            sentences: doc.len(),
            labels: gold.num_sentences(),
        });
    }
    let mut sentences = doc.sentences.clone();
    for span in gold.spans() {
        for _ in 0..swap_count(span.len(), rate) {
            let i = rng.random_range(span.a..span.b);
            sentences.swap(i, i + 1);
        }
    }
    Ok(Document {
        sentences,
        ..doc.clone()
    })
}
