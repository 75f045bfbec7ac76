//! Regenerates the shipped synthetic fixture: train/val corpora, SEMB embeddings
//! and a training config.
//!
//! ```bash
//! cargo run --example generate_fixture -- crates/core/tests/fixtures/separable
//! ```

use std::path::PathBuf;

use spancrf::cli::RunConfig;
use spancrf::synth::{fixture_train_config, separable_fixture, write_split};

fn main() -> spancrf::Result<()> {
    let dir = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/separable"));
    std::fs::create_dir_all(&dir).map_err(|e| spancrf::Error::Io {
        path: dir.clone(),
        source: e,
    })?;

    let (labels, train, val) = separable_fixture();
    write_split(&dir, "train", &train, &labels)?;
    write_split(&dir, "val", &val, &labels)?;

    let config = RunConfig {
        corpus: Some("train.jsonl".into()),
        embeddings: Some("train.semb".into()),
        val_corpus: Some("val.jsonl".into()),
        val_embeddings: Some("val.semb".into()),
        train: fixture_train_config(10),
        ..RunConfig::default()
    };
    let path = dir.join("train_config.json");
    let json = serde_json::to_string_pretty(&config).expect("config serializes") + "\n";
    std::fs::write(&path, json).map_err(|e| spancrf::Error::Io { path, source: e })?;

    let sentences: usize = train.iter().chain(&val).map(|d| d.len()).sum();
    println!(
        "wrote {} train and {} val documents ({sentences} sentences, labels {}) to {}",
        train.len(),
        val.len(),
        labels.names().join(","),
        dir.display()
    );
    Ok(())
}
