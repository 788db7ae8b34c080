//! Runs every subcommand on the shipped fixtures:
//! embed, train sources, estimate-priors, project, train target, tag, eval, diagnose.
//!
//! cargo run --release --example fixture_pipeline -- [work-dir]

use std::path::{Path, PathBuf};

fn xltag(args: &[&str]) {
    let mut argv = vec!["xltag"];
    argv.extend_from_slice(args);
    println!("$ {}", argv.join(" "));
    let status = xltag::cli::main_with_args(argv);
    assert_eq!(status, 0, "command failed");
}

fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

fn main() {
    let fx = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let work = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("xltag-pipeline"));
    std::fs::create_dir_all(&work).expect("work dir");
    let config = fx.join("pipeline.toml");
    let cfg = ["--config", p(&config)];
    let emb = work.join("emb.txt");

    xltag(&[&cfg[..], &["embed", "--verses", p(&fx.join("verses.txt")), "--out", p(&emb)]].concat());
    let mut models = Vec::new();
    for src in ["src1", "src2", "src3"] {
        let model = work.join(format!("{src}.model"));
        let corpus = fx.join(format!("train.{src}.txt"));
        xltag(&[&cfg[..], &["train", "--learner", "crf-l2", "--corpus", p(&corpus)],
            &["--embeddings", p(&emb), "--lang", src, "--out", p(&model)]].concat());
        models.push(model);
    }
    let prior = work.join("prior.txt");
    let mut args = vec!["estimate-priors", "--out", p(&prior), "--models"];
    args.extend(models.iter().map(|m| p(m)));
    xltag(&[&cfg[..], &args].concat());

    let projected = work.join("projected.txt");
    let votes: Vec<PathBuf> = ["src1", "src2", "src3"].iter().map(|s| fx.join(format!("votes.{s}.txt"))).collect();
    let mut args = vec!["project", "--out", p(&projected), "--votes"];
    args.extend(votes.iter().map(|v| p(v)));
    xltag(&[&cfg[..], &args].concat());

    let gold = fx.join("test.tgt.txt");
    for learner in ["crf-l2", "crf-empgauss", "perc-l2", "perc-noise"] {
        let model = work.join(format!("tgt.{learner}.model"));
        let pred = work.join(format!("pred.{learner}.txt"));
        let tgt = ["--embeddings", p(&emb), "--lang", "tgt"];
        xltag(&[&cfg[..], &["train", "--learner", learner, "--prior", p(&prior)],
            &["--corpus", p(&projected), "--out", p(&model)], &tgt[..]].concat());
        xltag(&[&cfg[..], &["tag", "--model", p(&model), "--corpus", p(&gold), "--out", p(&pred)], &tgt[..]].concat());
        xltag(&[&cfg[..], &["eval", "--pred", p(&pred), "--gold", p(&gold)],
            &["--out", p(&work.join(format!("eval.{learner}.txt")))]].concat());
    }
    let tgt = ["--embeddings", p(&emb), "--lang", "tgt", "--prior", p(&prior)];
    let rademacher = work.join("rademacher.txt");
    xltag(&[&cfg[..], &["diagnose", "rademacher", "--learner", "crf-empgauss"],
        &["--corpus", p(&projected), "--out", p(&rademacher)], &tgt[..]].concat());
    let variance = work.join("variance.txt");
    xltag(&[&cfg[..], &["diagnose", "variance", "--learner", "crf-empgauss"],
        &["--corpus", p(&projected), "--validation", p(&gold), "--out", p(&variance)], &tgt[..]].concat());
    println!("outputs in {}", work.display());
}
