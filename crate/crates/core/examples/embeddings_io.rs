//! Writes sentence embeddings to a SEMB file, inspects the header, and attaches
//! them to a corpus.
//!
//! ```bash
//! cargo run --example embeddings_io
//! ```

use ndarray::Array2;
use spancrf::corpus::{load_corpus, load_embeddings, semb, write_corpus, Document, LabelMode, LabelSet};

fn main() -> spancrf::Result<()> {
    let dir = std::env::temp_dir().join(format!("spancrf-embeddings-io-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| spancrf::Error::Io {
        path: dir.clone(),
        source: e,
    })?;

    let labels = LabelSet::new(["A", "B"])?;
    let docs = vec![
        Document::new("d1", vec!["one".into(), "two".into(), "three".into()]).with_labels(vec![0, 0, 1]),
        Document::new("d2", vec!["four".into()]).with_labels(vec![1]),
    ];
    let corpus_path = dir.join("corpus.jsonl");
    write_corpus(&corpus_path, &docs, Some(&labels))?;

    let dim = 3;
    let matrices: Vec<Array2<f32>> = docs
        .iter()
        .map(|d| Array2::from_shape_fn((d.len(), dim), |(i, j)| (i * dim + j) as f32 * 0.5))
        .collect();
    let semb_path = dir.join("corpus.semb");
    semb::write_semb(&semb_path, dim, docs.iter().map(|d| d.id.as_str()).zip(&matrices))?;

    let header = semb::read_header(&semb_path)?;
    println!("SEMB v{} dim {}: {:?}", header.version, header.dim, header.docs);

    let mut loaded = load_corpus(&corpus_path, LabelMode::Infer)?.docs;
    let d = load_embeddings(&semb_path, &mut loaded)?;
    for doc in &loaded {
        let e = doc.embeddings_or_err()?;
        println!("{}: {} sentences, embeddings {:?}", doc.id, doc.len(), e.shape());
    }
    assert_eq!(d, dim);
    assert_eq!(loaded[0].embeddings.as_ref(), Some(&matrices[0]));

    // Ids must line up exactly; a document missing from the file is an error.
    let mut extra = vec![Document::new("d3", vec!["five".into()])];
    println!(
        "missing id: {}",
        load_embeddings(&semb_path, &mut extra).unwrap_err()
    );

    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}
