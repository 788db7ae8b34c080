//! Inverted-indexing embeddings from the fixture verse corpus, with the
//! nearest cross-lingual neighbours of a few source words.
//!
//! cargo run --release --example build_embeddings -- [dims]

use std::path::PathBuf;

use xltag::embeddings::{build_embeddings, VerseCorpus, DEFAULT_DIMS};

fn main() -> xltag::Result<()> {
    let dims = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(DEFAULT_DIMS);
    let fx = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let verses = VerseCorpus::read(fx.join("verses.txt"))?;
    let built = build_embeddings(&verses, dims, 42)?;
    println!("{} word types, {} verses, {dims} dimensions", built.table.len(), verses.num_verses());
    let head: Vec<String> = built.singular_values.iter().take(8).map(|s| format!("{s:.2}")).collect();
    println!("leading singular values: {}", head.join(" "));

    let target: Vec<(&str, &[f64])> = built.table.iter().filter(|(k, _)| k.starts_with("tgt:")).collect();
    for (word, v) in built.table.iter().filter(|(k, _)| k.strip_prefix("src1:").is_some_and(|w| w.chars().all(char::is_alphabetic))).take(5) {
        let (best, cos) = target
            .iter()
            .map(|(w, u)| (*w, v.iter().zip(*u).map(|(a, b)| a * b).sum::<f64>()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("target words exist");
        println!("{word:>14} ~ {best:<14} cosine {cos:.3}");
    }
    Ok(())
}
