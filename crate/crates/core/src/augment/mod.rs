//! Offline training-data augmentation.
//!
//! Three strategies each produce one rewritten copy of every training document:
//! random word deletion, adjacent sentence swaps inside gold spans, and
//! back-translation through a language chain. All of them keep the sentence count and
//! the per-sentence gold labels. Copies carry an id suffix (`#del`, `#swap`, `#bt`)
//! and no embeddings, so they must be re-embedded before training.

mod mt;
mod ops;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::Document;
use crate::error::{Error, Result};

pub use mt::{back_translate, cache_key, CacheStats, CachedTranslator, HttpClient, IdentityClient, MtClient};
pub use ops::{sentence_swap, swap_count, word_delete};

/// Largest deletion rate accepted without `allow_high_deletion_rate`.
pub const MAX_DELETION_RATE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Deletion,
    Swap,
    Backtranslation,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Deletion, Strategy::Swap, Strategy::Backtranslation];

    /// Id suffix of the copies this strategy produces.
    pub fn suffix(self) -> &'static str {
        match self {
            Strategy::Deletion => "#del",
            Strategy::Swap => "#swap",
            Strategy::Backtranslation => "#bt",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Deletion => "deletion",
            Strategy::Swap => "swap",
            Strategy::Backtranslation => "backtranslation",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "deletion" | "del" | "delete" => Ok(Strategy::Deletion),
            "swap" => Ok(Strategy::Swap),
            "backtranslation" | "bt" | "back-translation" => Ok(Strategy::Backtranslation),
            other => Err(Error::InvalidConfig(format!(
                "unknown augmentation strategy {other:?} (expected deletion, swap or backtranslation)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    pub deletion_rate: f64,
    /// Permits a deletion rate above [`MAX_DELETION_RATE`].
    pub allow_high_deletion_rate: bool,
    pub swap_rate: f64,
    pub bt_language_chain: Vec<String>,
    pub seed: u64,
    pub strategies: Vec<Strategy>,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            deletion_rate: 0.2,
            allow_high_deletion_rate: false,
            swap_rate: 0.3,
            bt_language_chain: ["en", "de", "es", "en"].map(String::from).to_vec(),
            seed: 0,
            strategies: Strategy::ALL.to_vec(),
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(0.0..=1.0).contains(&self.deletion_rate) {
            return bad(format!("deletion_rate {} outside [0, 1]", self.deletion_rate));
        }
        if self.deletion_rate > MAX_DELETION_RATE && !self.allow_high_deletion_rate {
            return bad(format!(
                "deletion_rate {} exceeds {MAX_DELETION_RATE}; set allow_high_deletion_rate to override",
                self.deletion_rate
            ));
        }
        if !(0.0..=1.0).contains(&self.swap_rate) {
            return bad(format!("swap_rate {} outside [0, 1]", self.swap_rate));
        }
        if self.strategies.is_empty() {
            return bad("no augmentation strategies selected".into());
        }
        if self.strategies.contains(&Strategy::Backtranslation) {
            let chain = &self.bt_language_chain;
            if chain.len() < 2 || chain.first() != chain.last() {
                return bad(format!(
                    "back-translation chain {chain:?} must start and end with the same language"
                ));
            }
        }
        Ok(())
    }

    /// Enabled strategies, deduplicated, in canonical order.
    pub fn enabled(&self) -> Vec<Strategy> {
        Strategy::ALL
            .into_iter()
            .filter(|s| self.strategies.contains(s))
            .collect()
    }
}

/// Independent RNG stream for one (seed, document, strategy) triple.
pub fn document_rng(seed: u64, doc_id: &str, strategy: Strategy) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(doc_id.as_bytes());
    h.update([0]);
    h.update(strategy.name().as_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedDocument {
    pub id: String,
    pub strategy: Strategy,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentSummary {
    pub input_docs: usize,
    pub output_docs: usize,
    /// Copies produced per strategy.
    pub produced: BTreeMap<Strategy, usize>,
    pub skipped: Vec<SkippedDocument>,
    pub cache: Option<CacheStats>,
}

impl AugmentSummary {
    /// Strategies that were enabled but produced no copy of a non-empty corpus.
    pub fn failed_strategies(&self) -> Vec<Strategy> {
        if self.input_docs == 0 {
            return Vec::new();
        }
        self.produced
            .iter()
            .filter(|(_, &n)| n == 0)
            .map(|(&s, _)| s)
            .collect()
    }

    pub fn render(&self) -> String {
        let mut out = format!(
            "input documents:  {}\noutput documents: {}\n",
            self.input_docs, self.output_docs
        );
        for (s, n) in &self.produced {
            out.push_str(&format!("  {s:<16} {n}\n"));
        }
        out.push_str(&format!("skipped: {}\n", self.skipped.len()));
        for s in &self.skipped {
            out.push_str(&format!("  {} ({}): {}\n", s.id, s.strategy, s.reason));
        }
        if let Some(c) = self.cache {
            out.push_str(&format!(
                "MT cache: {} hits, {} misses, hit rate {:.3}\n",
                c.hits,
                c.misses,
                c.hit_rate()
            ));
        }
        out
    }
}

/// Returns the originals followed by one block of copies per enabled strategy.
///
/// Every input document needs gold labels. Deletion and swap failures are errors;
/// a back-translation failure skips that document with a warning and is listed in
/// the summary. `translator` is required when back-translation is enabled.
pub fn augment_corpus(
    docs: &[Document],
    cfg: &AugmentConfig,
    translator: Option<&CachedTranslator>,
) -> Result<(Vec<Document>, AugmentSummary)> {
    cfg.validate()?;
    let enabled = cfg.enabled();
    let golds = docs
        .iter()
        .map(|d| d.gold_segmentation())
        .collect::<Result<Vec<_>>>()?;
    if enabled.contains(&Strategy::Backtranslation) && translator.is_none() {
        return Err(Error::InvalidConfig(
            "back-translation requires an MT endpoint or cache".into(),
        ));
    }

    let mut out: Vec<Document> = docs.to_vec();
    let mut produced = BTreeMap::new();
    let mut skipped = Vec::new();
    for strategy in enabled {
        let results: Vec<Result<Document>> = docs
            .par_iter()
            .zip(&golds)
            .map(|(doc, gold)| {
                let mut rng = document_rng(cfg.seed, &doc.id, strategy);
                let copy = match strategy {
                    Strategy::Deletion => word_delete(doc, cfg.deletion_rate, &mut rng)?,
                    Strategy::Swap => sentence_swap(doc, gold, cfg.swap_rate, &mut rng)?,
                    Strategy::Backtranslation => {
                        back_translate(doc, translator.expect("checked above"), &cfg.bt_language_chain)?
                    }
                };
                Ok(Document {
                    id: format!("{}{}", doc.id, strategy.suffix()),
                    embeddings: None,
                    ..copy
                })
            })
            .collect();
        let mut count = 0;
        for (doc, result) in docs.iter().zip(results) {
            match result {
                Ok(copy) => {
                    out.push(copy);
                    count += 1;
                }
                Err(e @ Error::Translation(_)) => {
                    warn!("skipping {} for {strategy}: {e}", doc.id);
                    skipped.push(SkippedDocument {
                        id: doc.id.clone(),
                        strategy,
                        reason: e.to_string(),
                    });
                }
                Err(e) => return Err(e),
            }
        }
        produced.insert(strategy, count);
    }
    let summary = AugmentSummary {
        input_docs: docs.len(),
        output_docs: out.len(),
        produced,
        skipped,
        cache: translator.map(|t| t.stats()),
    };
    Ok((out, summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs(n: usize) -> Vec<Document> {
        (0..n)
            .map(|i| {
                Document::new(
                    format!("d{i}"),
                    vec!["a b c".into(), "d e f g".into(), "h i".into(), "j k l".into()],
                )
                .with_labels(vec![0, 0, 1, 1])
            })
            .collect()
    }

    struct Flaky;

    impl MtClient for Flaky {
        fn translate(&self, text: &str, _: &str, _: &str) -> Result<String> {
            if text.starts_with('h') {
                Err(Error::Translation("boom".into()))
            } else {
                Ok(text.to_uppercase())
            }
        }
    }

    #[test]
    fn all_strategies_quadruple() {
        let mt = CachedTranslator::in_memory(Some(Box::new(IdentityClient)));
        let (out, summary) = augment_corpus(&docs(10), &AugmentConfig::default(), Some(&mt)).unwrap();
        assert_eq!(out.len(), 40);
        assert_eq!(summary.output_docs, 40);
        assert!(summary.failed_strategies().is_empty());
        assert_eq!(out[10].id, "d0#del");
        assert_eq!(out[20].id, "d0#swap");
        assert_eq!(out[30].id, "d0#bt");
        for copy in &out[10..] {
            assert_eq!(copy.gold_labels, Some(vec![0, 0, 1, 1]));
            assert!(copy.embeddings.is_none());
        }
    }

    #[test]
    fn single_strategy_doubles() {
        let cfg = AugmentConfig {
            strategies: vec![Strategy::Deletion],
            ..Default::default()
        };
        let (out, _) = augment_corpus(&docs(10), &cfg, None).unwrap();
        assert_eq!(out.len(), 20);
    }

    #[test]
    fn empty_strategy_set_rejected() {
        let cfg = AugmentConfig {
            strategies: vec![],
            ..Default::default()
        };
        assert!(matches!(
            augment_corpus(&docs(1), &cfg, None),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn config_validation() {
        let high = AugmentConfig {
            deletion_rate: 0.5,
            ..Default::default()
        };
        assert!(high.validate().is_err());
        assert!(AugmentConfig {
            allow_high_deletion_rate: true,
            ..high
        }
        .validate()
        .is_ok());
        let chain = AugmentConfig {
            bt_language_chain: vec!["en".into(), "de".into()],
            ..Default::default()
        };
        assert!(chain.validate().is_err());
        let no_bt = AugmentConfig {
            strategies: vec![Strategy::Swap],
            ..chain
        };
        assert!(no_bt.validate().is_ok());
        assert!(serde_json::from_str::<AugmentConfig>("{\"bogus\": 1}").is_err());
    }

    #[test]
    fn backtranslation_needs_translator() {
        assert!(matches!(
            augment_corpus(&docs(1), &AugmentConfig::default(), None),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn translation_failures_are_skipped() {
        let mt = CachedTranslator::in_memory(Some(Box::new(Flaky)));
        let cfg = AugmentConfig {
            strategies: vec![Strategy::Backtranslation],
            ..Default::default()
        };
        let (out, summary) = augment_corpus(&docs(3), &cfg, Some(&mt)).unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(summary.skipped.len(), 3);
        assert_eq!(summary.failed_strategies(), vec![Strategy::Backtranslation]);
        assert!(summary.render().contains("skipped: 3"));
    }

    #[test]
    fn unlabeled_input_rejected() {
        let d = vec![Document::new("u", vec!["x".into()])];
        let cfg = AugmentConfig {
            strategies: vec![Strategy::Swap],
            ..Default::default()
        };
        assert!(matches!(
            augment_corpus(&d, &cfg, None),
            Err(Error::MissingGold(_))
        ));
    }

    #[test]
    fn streams_depend_on_doc_and_strategy_only() {
        use rand::Rng;
        let a: u64 = document_rng(1, "d", Strategy::Swap).random();
        assert_eq!(a, document_rng(1, "d", Strategy::Swap).random::<u64>());
        assert_ne!(a, document_rng(1, "d", Strategy::Deletion).random::<u64>());
        assert_ne!(a, document_rng(2, "d", Strategy::Swap).random::<u64>());
        assert_ne!(a, document_rng(1, "e", Strategy::Swap).random::<u64>());
    }

    #[test]
    fn order_independent_of_input_position() {
        let cfg = AugmentConfig {
            strategies: vec![Strategy::Deletion, Strategy::Swap],
            ..Default::default()
        };
        let mut input = docs(4);
        let (a, _) = augment_corpus(&input, &cfg, None).unwrap();
        input.reverse();
        let (b, _) = augment_corpus(&input, &cfg, None).unwrap();
        let find = |v: &[Document], id: &str| v.iter().find(|d| d.id == id).cloned().unwrap();
        for id in ["d0#del", "d3#swap"] {
            assert_eq!(find(&a, id), find(&b, id));
        }
    }

    #[test]
    fn strategy_parsing() {
        assert_eq!("bt".parse::<Strategy>().unwrap(), Strategy::Backtranslation);
        assert_eq!("Deletion".parse::<Strategy>().unwrap(), Strategy::Deletion);
        assert!("paraphrase".parse::<Strategy>().is_err());
        assert_eq!(
            serde_json::to_string(&Strategy::Backtranslation).unwrap(),
            "\"backtranslation\""
        );
    }
}
