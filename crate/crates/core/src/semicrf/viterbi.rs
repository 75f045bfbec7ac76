use ndarray::Array2;

use super::ScoreLattice;
use crate::corpus::{Segmentation, Span};

/// Highest-scoring labeled segmentation and its score.
///
/// Ties are resolved deterministically. The final label is the smallest index among
/// the best; at every cell the longer current segment wins, then the smaller previous
/// label. Equivalently, among equal-scoring paths the one whose reversed sequence of
/// `(label ascending, length descending)` keys is lexicographically smallest is returned.
pub fn viterbi_with_score(lat: &ScoreLattice) -> (Segmentation, f64) {
    let (m, ny) = (lat.num_sentences(), lat.num_labels());

    // Best entry score for a span starting at `a` with label `y`, and the previous label.
    let mut enter = Array2::from_elem((m, ny), f64::NEG_INFINITY);
    let mut enter_prev = Array2::<usize>::zeros((m, ny));
    // Best score of a prefix `0..i` ending in label `y`, with (length, previous label).
    let mut delta = Array2::from_elem((m + 1, ny), f64::NEG_INFINITY);
    let mut back = Array2::<usize>::zeros((m + 1, ny));

    for y in 0..ny {
        enter[[0, y]] = lat.start(y);
    }
    for i in 1..=m {
        for y in 0..ny {
            let mut best = f64::NEG_INFINITY;
            let mut best_len = 0;
            for len in (1..=lat.lmax().min(i)).rev() {
                let a = i - len;
                let score = enter[[a, y]] + lat.phi(a, len, y);
                if score > best {
                    best = score;
                    best_len = len;
                }
            }
            delta[[i, y]] = best;
            back[[i, y]] = best_len;
        }
        if i < m {
            for y in 0..ny {
                let mut best = f64::NEG_INFINITY;
                let mut best_prev = 0;
                for p in 0..ny {
                    let score = delta[[i, p]] + lat.transition(p, y);
                    if score > best {
                        best = score;
                        best_prev = p;
                    }
                }
                enter[[i, y]] = best;
                enter_prev[[i, y]] = best_prev;
            }
        }
    }

    let mut y = 0;
    for l in 1..ny {
        if delta[[m, l]] > delta[[m, y]] {
            y = l;
        }
    }
    let score = delta[[m, y]];

    let mut spans = Vec::new();
    let mut i = m;
    loop {
        let len = back[[i, y]];
        let a = i - len;
        spans.push(Span::new(a, i - 1, y));
        if a == 0 {
            break;
        }
        y = enter_prev[[a, y]];
        i = a;
    }
    spans.reverse();
    let seg = Segmentation::new(spans).expect("backtrace yields a contiguous segmentation");
    (seg, score)
}

/// Highest-scoring labeled segmentation.
pub fn viterbi(lat: &ScoreLattice) -> Segmentation {
    viterbi_with_score(lat).0
}
