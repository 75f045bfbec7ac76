//! Word deletion, within-span sentence swaps and back-translation through a cached
//! translator.
//!
//! ```bash
//! cargo run --example augment_corpus
//! ```

use spancrf::augment::{augment_corpus, AugmentConfig, CachedTranslator, MtClient};
use spancrf::corpus::{Document, LabelSet};

/// Stand-in for a translation service: tags the text with the target language.
struct Tagger;

impl MtClient for Tagger {
    fn translate(&self, text: &str, _from: &str, to: &str) -> spancrf::Result<String> {
        let body = text.split_once("] ").map_or(text, |(_, rest)| rest);
        Ok(format!("[{to}] {body}"))
    }
}

fn main() -> spancrf::Result<()> {
    let labels = LabelSet::new(["Facts", "Ruling"])?;
    let docs = vec![Document::new(
        "case-1",
        vec![
            "The appellant was convicted in 2019.".into(),
            "The trial court rejected the alibi.".into(),
            "An appeal was filed within time.".into(),
            "The appeal is dismissed.".into(),
            "No order as to costs.".into(),
        ],
    )
    .with_labels(vec![0, 0, 0, 1, 1])];

    let translator = CachedTranslator::in_memory(Some(Box::new(Tagger)));
    let cfg = AugmentConfig {
        seed: 3,
        ..AugmentConfig::default()
    };
    let (out, summary) = augment_corpus(&docs, &cfg, Some(&translator))?;
    print!("{}", summary.render());
    for doc in &out {
        println!("\n{}", doc.id);
        let gold = doc.gold_labels.as_deref().unwrap_or_default();
        for (s, &y) in doc.sentences.iter().zip(gold) {
            println!("  {:<7} {s}", labels.name(y));
        }
    }

    // A second pass is served entirely from the cache.
    let (again, _) = augment_corpus(&docs, &cfg, Some(&translator))?;
    assert_eq!(again, out);
    println!("\ncache: {:?}", translator.stats());
    Ok(())
}
