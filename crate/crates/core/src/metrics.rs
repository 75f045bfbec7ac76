//! Span-level and sentence-level evaluation and McNemar's paired test.
//!
//! Span metrics score exact `(a, b, y)` matches after merging consecutive identical
//! labels; the segmentation variant matches `(a, b)` only. Sentence metrics treat
//! every sentence as a single-label classification.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, DiscreteCDF};

use crate::corpus::{derive_spans, LabelSet, Segmentation};
use crate::error::{Error, Result};

/// Merges runs of identical per-sentence labels into spans.
pub fn merge_consecutive(pred_labels: &[usize]) -> Result<Segmentation> {
    derive_spans(pred_labels)
}

/// True-positive, false-positive and false-negative counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Counts {
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_)
    }

    pub fn gold(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn predicted(&self) -> usize {
        self.tp + self.fp
    }

    fn add(&mut self, other: Counts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Which labels enter the macro average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MacroAverage {
    /// Labels that occur in gold or predictions.
    #[default]
    PresentOnly,
    /// Every label of the inventory; absent labels count as F1 = 0.
    AllLabels,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EvalOptions {
    pub macro_average: MacroAverage,
    /// Label excluded from labeled span metrics and sentence metrics (typically `None`).
    pub exclude: Option<usize>,
}

/// Per-label counts plus pooled micro counts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Prf {
    pub per_label: BTreeMap<usize, Counts>,
    pub micro: Counts,
}

impl Prf {
    pub fn micro_f1(&self) -> f64 {
        self.micro.f1()
    }

    /// Unweighted mean of per-label F1.
    pub fn macro_f1(&self, mode: MacroAverage, num_labels: usize, exclude: Option<usize>) -> f64 {
        let labels: Vec<usize> = match mode {
            MacroAverage::PresentOnly => self
                .per_label
                .iter()
                .filter(|(_, c)| c.gold() + c.predicted() > 0)
                .map(|(&l, _)| l)
                .collect(),
            MacroAverage::AllLabels => (0..num_labels).filter(|&l| Some(l) != exclude).collect(),
        };
        if labels.is_empty() {
            return 0.0;
        }
        labels
            .iter()
            .map(|l| self.per_label.get(l).copied().unwrap_or_default().f1())
            .sum::<f64>()
            / labels.len() as f64
    }

    fn merge(&mut self, other: &Prf) {
        for (&l, &c) in &other.per_label {
            self.per_label.entry(l).or_default().add(c);
        }
        self.micro.add(other.micro);
    }
}

/// Exact-match span precision/recall/F1.
///
/// In labeled mode a predicted span is correct iff `(a, b, y)` matches a gold span; in
/// unlabeled mode `(a, b)` must match and `per_label` stays empty.
pub fn span_prf(gold: &Segmentation, pred: &Segmentation, labeled: bool) -> Result<Prf> {
    span_prf_excluding(gold, pred, labeled, None)
}

fn span_prf_excluding(
    gold: &Segmentation,
    pred: &Segmentation,
    labeled: bool,
    exclude: Option<usize>,
) -> Result<Prf> {
    if gold.num_sentences() != pred.num_sentences() {
        return Err(Error::CoverageMismatch {
            gold: gold.num_sentences(),
            pred: pred.num_sentences(),
        });
    }
    let mut prf = Prf::default();
    if labeled {
        let keep = |y: usize| Some(y) != exclude;
        let gold_set: HashSet<_> = gold.spans().iter().filter(|s| keep(s.y)).copied().collect();
        let pred_set: HashSet<_> = pred.spans().iter().filter(|s| keep(s.y)).copied().collect();
        for span in &pred_set {
            let c = prf.per_label.entry(span.y).or_default();
            if gold_set.contains(span) {
                c.tp += 1;
            } else {
                c.fp += 1;
            }
        }
        for span in gold_set.difference(&pred_set) {
            prf.per_label.entry(span.y).or_default().fn_ += 1;
        }
        for c in prf.per_label.values() {
            prf.micro.add(*c);
        }
    } else {
        let gold_set: HashSet<_> = gold.spans().iter().map(|s| (s.a, s.b)).collect();
        let pred_set: HashSet<_> = pred.spans().iter().map(|s| (s.a, s.b)).collect();
        let tp = gold_set.intersection(&pred_set).count();
        prf.micro = Counts {
            tp,
            fp: pred_set.len() - tp,
            fn_: gold_set.len() - tp,
        };
    }
    Ok(prf)
}

/// Per-sentence single-label classification counts.
pub fn sentence_counts(gold: &[usize], pred: &[usize], exclude: Option<usize>) -> Result<Prf> {
    if gold.len() != pred.len() {
        return Err(Error::LengthMismatch(gold.len(), pred.len()));
    }
    let mut prf = Prf::default();
    let keep = |y: usize| Some(y) != exclude;
    for (&g, &p) in gold.iter().zip(pred) {
        if g == p {
            if keep(g) {
                prf.per_label.entry(g).or_default().tp += 1;
            }
        } else {
            if keep(p) {
                prf.per_label.entry(p).or_default().fp += 1;
            }
            if keep(g) {
                prf.per_label.entry(g).or_default().fn_ += 1;
            }
        }
    }
    for c in prf.per_label.values() {
        prf.micro.add(*c);
    }
    Ok(prf)
}

/// Sentence-level micro and macro F1 (macro over labels present in gold or predictions).
pub fn sentence_f1(gold: &[usize], pred: &[usize]) -> Result<(f64, f64)> {
    let prf = sentence_counts(gold, pred, None)?;
    Ok((prf.micro_f1(), prf.macro_f1(MacroAverage::PresentOnly, 0, None)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub gold_count: usize,
    pub pred_count: usize,
}

impl From<Counts> for LabelScores {
    fn from(c: Counts) -> Self {
        LabelScores {
            precision: c.precision(),
            recall: c.recall(),
            f1: c.f1(),
            gold_count: c.gold(),
            pred_count: c.predicted(),
        }
    }
}

/// Corpus-level evaluation summary. `per_label` is span-level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub documents: usize,
    pub span_micro_f1: f64,
    pub span_macro_f1: f64,
    pub span_seg_f1: f64,
    pub sentence_micro_f1: f64,
    pub sentence_macro_f1: f64,
    pub per_label: BTreeMap<String, LabelScores>,
    pub sentence_per_label: BTreeMap<String, LabelScores>,
}

impl MetricsReport {
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "documents            {}", self.documents);
        let _ = writeln!(out, "span micro-F1        {:.4}", self.span_micro_f1);
        let _ = writeln!(out, "span macro-F1        {:.4}", self.span_macro_f1);
        let _ = writeln!(out, "span segmentation-F1 {:.4}", self.span_seg_f1);
        let _ = writeln!(out, "sentence micro-F1    {:.4}", self.sentence_micro_f1);
        let _ = writeln!(out, "sentence macro-F1    {:.4}", self.sentence_macro_f1);
        let width = self.per_label.keys().map(String::len).max().unwrap_or(5).max(5);
        let _ = writeln!(
            out,
            "\n{:<width$}  {:>9}  {:>9}  {:>9}  {:>6}  {:>6}",
            "label", "precision", "recall", "f1", "gold", "pred"
        );
        for (name, s) in &self.per_label {
            let _ = writeln!(
                out,
                "{:<width$}  {:>9.4}  {:>9.4}  {:>9.4}  {:>6}  {:>6}",
                name, s.precision, s.recall, s.f1, s.gold_count, s.pred_count
            );
        }
        out
    }
}

/// Accumulates span and sentence counts over documents in a fixed order.
#[derive(Debug, Clone)]
pub struct Evaluator {
    labels: LabelSet,
    options: EvalOptions,
    documents: usize,
    spans: Prf,
    segments: Prf,
    sentences: Prf,
}

impl Evaluator {
    pub fn new(labels: LabelSet, options: EvalOptions) -> Self {
        Evaluator {
            labels,
            options,
            documents: 0,
            spans: Prf::default(),
            segments: Prf::default(),
            sentences: Prf::default(),
        }
    }

    /// Adds one document. Consecutive spans with the same label are merged on both
    /// sides before span matching.
    pub fn add(&mut self, gold: &Segmentation, pred: &Segmentation) -> Result<()> {
        let exclude = self.options.exclude;
        if gold.num_sentences() != pred.num_sentences() {
            return Err(Error::CoverageMismatch {
                gold: gold.num_sentences(),
                pred: pred.num_sentences(),
            });
        }
        let gold = &merge_consecutive(&gold.flatten())?;
        let pred = &merge_consecutive(&pred.flatten())?;
        let labeled = span_prf_excluding(gold, pred, true, exclude)?;
        let unlabeled = span_prf_excluding(gold, pred, false, None)?;
        let sentences = sentence_counts(&gold.flatten(), &pred.flatten(), exclude)?;
        self.spans.merge(&labeled);
        self.segments.merge(&unlabeled);
        self.sentences.merge(&sentences);
        self.documents += 1;
        Ok(())
    }

    pub fn report(&self) -> MetricsReport {
        let (mode, n, ex) = (
            self.options.macro_average,
            self.labels.len(),
            self.options.exclude,
        );
        let named = |prf: &Prf| {
            prf.per_label
                .iter()
                .map(|(&l, &c)| (self.labels.name(l).to_string(), LabelScores::from(c)))
                .collect()
        };
        MetricsReport {
            documents: self.documents,
            span_micro_f1: self.spans.micro_f1(),
            span_macro_f1: self.spans.macro_f1(mode, n, ex),
            span_seg_f1: self.segments.micro_f1(),
            sentence_micro_f1: self.sentences.micro_f1(),
            sentence_macro_f1: self.sentences.macro_f1(mode, n, ex),
            per_label: named(&self.spans),
            sentence_per_label: named(&self.sentences),
        }
    }
}

/// McNemar's paired test on per-sentence correctness of two systems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McNemar {
    /// Sentences system A gets right and system B gets wrong.
    pub b: usize,
    /// Sentences system A gets wrong and system B gets right.
    pub c: usize,
    /// Continuity-corrected chi-squared statistic.
    pub statistic: f64,
    /// Upper tail of the chi-squared distribution with one degree of freedom.
    pub p_value: f64,
    /// Two-sided exact binomial p-value, reported when `b + c < 25`.
    pub exact_p_value: Option<f64>,
}

pub fn mcnemar(gold: &[usize], pred_a: &[usize], pred_b: &[usize]) -> Result<McNemar> {
    if gold.len() != pred_a.len() {
        return Err(Error::LengthMismatch(gold.len(), pred_a.len()));
    }
    if gold.len() != pred_b.len() {
        return Err(Error::LengthMismatch(gold.len(), pred_b.len()));
    }
    let mut b = 0;
    let mut c = 0;
    for ((g, x), y) in gold.iter().zip(pred_a).zip(pred_b) {
        match (x == g, y == g) {
            (true, false) => b += 1,
            (false, true) => c += 1,
            _ => {}
        }
    }
    Ok(mcnemar_from_counts(b, c))
}

pub fn mcnemar_from_counts(b: usize, c: usize) -> McNemar {
    let n = b + c;
    let (statistic, p_value) = if n == 0 {
        (0.0, 1.0)
    } else {
        let diff = (b as f64 - c as f64).abs() - 1.0;
        let stat = diff.max(0.0).powi(2) / n as f64;
        let chi = ChiSquared::new(1.0).expect("one degree of freedom");
        (stat, chi.sf(stat))
    };
    McNemar {
        b,
        c,
        statistic,
        p_value,
        exact_p_value: (n < 25).then(|| mcnemar_exact(b, c)),
    }
}

/// Two-sided exact binomial McNemar p-value.
pub fn mcnemar_exact(b: usize, c: usize) -> f64 {
    let n = b + c;
    if n == 0 {
        return 1.0;
    }
    let binom = Binomial::new(0.5, n as u64).expect("valid binomial");
    (2.0 * binom.cdf(b.min(c) as u64)).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Span;
    use proptest::prelude::*;

    const F: usize = 0;
    const A: usize = 1;

    fn seg(spans: &[(usize, usize, usize)]) -> Segmentation {
        Segmentation::new(spans.iter().map(|&(a, b, y)| Span::new(a, b, y)).collect()).unwrap()
    }

    #[test]
    fn merge_examples() {
        assert_eq!(
            merge_consecutive(&[F, F, A]).unwrap(),
            seg(&[(0, 1, F), (2, 2, A)])
        );
        assert_eq!(merge_consecutive(&[F; 5]).unwrap(), seg(&[(0, 4, F)]));
        assert_eq!(merge_consecutive(&[F, A, F, A]).unwrap().len(), 4);
        assert!(merge_consecutive(&[]).is_err());
    }

    #[test]
    fn perfect_prediction() {
        let g = seg(&[(0, 1, F), (2, 2, A)]);
        assert_eq!(span_prf(&g, &g, true).unwrap().micro_f1(), 1.0);
        assert_eq!(span_prf(&g, &g, false).unwrap().micro_f1(), 1.0);
    }

    #[test]
    fn disjoint_boundaries() {
        let g = seg(&[(0, 1, F), (2, 2, A)]);
        let p = seg(&[(0, 2, F)]);
        assert_eq!(span_prf(&g, &p, true).unwrap().micro_f1(), 0.0);
        assert_eq!(span_prf(&g, &p, false).unwrap().micro_f1(), 0.0);
    }

    #[test]
    fn boundary_match_label_miss() {
        let g = seg(&[(0, 1, F), (2, 2, A)]);
        let p = seg(&[(0, 1, A), (2, 2, A)]);
        assert_eq!(span_prf(&g, &p, false).unwrap().micro_f1(), 1.0);
        let labeled = span_prf(&g, &p, true).unwrap();
        assert_eq!(labeled.micro.tp, 1);
        assert_eq!(labeled.micro.precision(), 0.5);
        assert_eq!(labeled.micro.recall(), 0.5);
        assert_eq!(labeled.micro_f1(), 0.5);
    }

    #[test]
    fn coverage_mismatch() {
        let g = seg(&[(0, 1, F)]);
        let p = seg(&[(0, 2, F)]);
        assert!(matches!(
            span_prf(&g, &p, true),
            Err(Error::CoverageMismatch { .. })
        ));
    }

    #[test]
    fn sentence_examples() {
        assert_eq!(sentence_f1(&[F, A, A], &[F, A, A]).unwrap(), (1.0, 1.0));
        let (micro, macro_) = sentence_f1(&[F, F, A, A], &[F, A, A, A]).unwrap();
        assert_eq!(micro, 0.75);
        assert!((macro_ - (2.0 / 3.0 + 0.8) / 2.0).abs() < 1e-12);
        assert!((macro_ - 0.7333).abs() < 1e-4);
        let (micro, _) = sentence_f1(&[F, F, A, A], &[F, F, F, F]).unwrap();
        assert_eq!(micro, 0.5);
        assert!(sentence_f1(&[F], &[F, A]).is_err());
    }

    #[test]
    fn mcnemar_examples() {
        let r = mcnemar(&[0, 1, 1], &[0, 1, 0], &[0, 1, 0]).unwrap();
        assert_eq!((r.b, r.c, r.statistic, r.p_value), (0, 0, 0.0, 1.0));

        let r = mcnemar_from_counts(15, 5);
        assert!((r.statistic - 4.05).abs() < 1e-12);
        assert!(r.p_value < 0.05);
        assert!(r.statistic > 3.841);

        let r = mcnemar_from_counts(6, 5);
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert!(mcnemar(&[0], &[0, 1], &[0]).is_err());
    }

    #[test]
    fn mcnemar_exact_binomial() {
        // 2 · P(X ≤ 5 | n = 20, p = 1/2) = 2 · 21700 / 2^20.
        let want = 2.0 * 21700.0 / 1048576.0;
        assert!((mcnemar_exact(15, 5) - want).abs() < 1e-12);
        assert_eq!(mcnemar_exact(3, 3), 1.0);
        assert_eq!(
            mcnemar_from_counts(15, 5).exact_p_value,
            Some(mcnemar_exact(15, 5))
        );
        assert_eq!(mcnemar_from_counts(20, 5).exact_p_value, None);
    }

    #[test]
    fn excluded_label_dropped() {
        let g = seg(&[(0, 1, F), (2, 2, A)]);
        let p = seg(&[(0, 1, A), (2, 2, F)]);
        let labels = LabelSet::new(["F", "None"]).unwrap();
        let mut ev = Evaluator::new(
            labels,
            EvalOptions {
                exclude: Some(A),
                ..Default::default()
            },
        );
        ev.add(&g, &p).unwrap();
        let r = ev.report();
        assert_eq!(r.per_label.len(), 1);
        assert_eq!(r.per_label["F"].gold_count, 1);
        assert_eq!(r.per_label["F"].pred_count, 1);
        assert_eq!(r.span_micro_f1, 0.0);
        assert_eq!(r.span_seg_f1, 1.0);
    }

    #[test]
    fn evaluator_merges_split_predictions() {
        let g = seg(&[(0, 2, F), (3, 3, A)]);
        let p = seg(&[(0, 0, F), (1, 2, F), (3, 3, A)]);
        let mut ev = Evaluator::new(LabelSet::new(["F", "A"]).unwrap(), EvalOptions::default());
        ev.add(&g, &p).unwrap();
        let r = ev.report();
        assert_eq!(r.span_micro_f1, 1.0);
        assert_eq!(r.span_seg_f1, 1.0);
    }

    #[test]
    fn macro_all_labels_counts_absent_as_zero() {
        let g = seg(&[(0, 0, F)]);
        let labels = LabelSet::new(["F", "A", "N"]).unwrap();
        let mut present = Evaluator::new(labels.clone(), EvalOptions::default());
        present.add(&g, &g).unwrap();
        assert_eq!(present.report().span_macro_f1, 1.0);
        let mut all = Evaluator::new(
            labels,
            EvalOptions {
                macro_average: MacroAverage::AllLabels,
                exclude: None,
            },
        );
        all.add(&g, &g).unwrap();
        assert!((all.report().span_macro_f1 - 1.0 / 3.0).abs() < 1e-12);
    }

    fn labels_strategy() -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
        (1usize..30).prop_flat_map(|m| {
            (
                prop::collection::vec(0usize..3, m),
                prop::collection::vec(0usize..3, m),
            )
        })
    }

    proptest! {
        #[test]
        fn span_metric_properties((g, p) in labels_strategy()) {
            let gs = merge_consecutive(&g).unwrap();
            let ps = merge_consecutive(&p).unwrap();
            let fwd = span_prf(&gs, &ps, true).unwrap();
            let rev = span_prf(&ps, &gs, true).unwrap();
            prop_assert_eq!(fwd.micro.precision(), rev.micro.recall());
            prop_assert_eq!(fwd.micro.recall(), rev.micro.precision());
            let seg = span_prf(&gs, &ps, false).unwrap();
            prop_assert!(seg.micro_f1() >= fwd.micro_f1());
            let pooled: usize = fwd.per_label.values().map(|c| c.tp).sum();
            prop_assert_eq!(pooled, fwd.micro.tp);
            for v in [fwd.micro_f1(), seg.micro_f1(), fwd.macro_f1(MacroAverage::PresentOnly, 3, None)] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            prop_assert_eq!(merge_consecutive(&gs.flatten()).unwrap(), gs);
        }

        #[test]
        fn sentence_micro_is_accuracy((g, p) in labels_strategy()) {
            let (micro, macro_) = sentence_f1(&g, &p).unwrap();
            let acc = g.iter().zip(&p).filter(|(a, b)| a == b).count() as f64 / g.len() as f64;
            prop_assert!((micro - acc).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&macro_));
        }
    }
}
