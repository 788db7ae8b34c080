//! Merges per-source projected votes into a majority-vote training corpus.
//!
//! cargo run --example project_votes

use std::path::PathBuf;

use xltag::corpus::{majority_vote, ProjectionTable};
use xltag::Tagset;

fn main() -> xltag::Result<()> {
    let fx = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let tables = ["src1", "src2", "src3"]
        .iter()
        .map(|s| ProjectionTable::read(fx.join(format!("votes.{s}.txt"))))
        .collect::<xltag::Result<Vec<_>>>()?;
    let merged = ProjectionTable::merge(&tables)?;

    let mut unaligned = 0;
    let mut tokens = 0;
    for s in merged.sentences() {
        tokens += s.votes().len();
        unaligned += s.votes().iter().filter(|v| v.is_empty()).count();
    }
    let corpus = majority_vote(&merged, Tagset);
    println!("{} sentences, {tokens} tokens, {unaligned} without any vote (tagged X)", corpus.len());

    let first = &merged.sentences()[0];
    for (token, (votes, tag)) in first
        .sentence()
        .tokens()
        .iter()
        .zip(first.votes().iter().zip(corpus.sentences()[0].tags()))
    {
        let shown: Vec<String> = votes.iter().map(|v| format!("{}:{}", v.source, Tagset.name(v.tag))).collect();
        println!("{token:>10}  {:<32} -> {}", shown.join(","), Tagset.name(*tag));
    }
    Ok(())
}
