#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::StandardNormal;
use xltag::features::global_features;
use xltag::{EmbeddingTable, FeatureSpace, Sentence, TaggedCorpus, TaggedSentence};

const WORDS: [&str; 10] = ["the", "Anna", "x-ray", "42", "run", "Oslo", "well-known", "b2b", "of", "-"];

/// A random labelled instance over `num_tags` tags with sentences of at most
/// `max_len` tokens. Roughly half of the vocabulary has embeddings.
pub fn random_instance(
    rng: &mut impl Rng,
    num_tags: usize,
    max_dim: usize,
    sentences: usize,
    max_len: usize,
) -> (FeatureSpace, EmbeddingTable, TaggedCorpus) {
    let dim = rng.random_range(0..=max_dim);
    let mut emb = EmbeddingTable::empty(dim);
    for w in WORDS {
        if dim > 0 && rng.random_bool(0.5) {
            let v = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            emb.insert(w, v).unwrap();
        }
    }
    let corpus = TaggedCorpus::new(
        (0..sentences)
            .map(|_| {
                let n = rng.random_range(1..=max_len);
                let tokens: Vec<&str> = (0..n).map(|_| WORDS[rng.random_range(0..WORDS.len())]).collect();
                let tags = (0..n).map(|_| rng.random_range(0..num_tags)).collect();
                TaggedSentence::new(Sentence::new(tokens).unwrap(), tags).unwrap()
            })
            .collect(),
    );
    (FeatureSpace::truncated(num_tags, dim), emb, corpus)
}

pub fn random_weights(rng: &mut impl Rng, m: usize, scale: f64) -> Vec<f64> {
    (0..m).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Every tag sequence in lexicographic order with its score `w · Φ(x, y)`.
pub fn enumerate(
    space: &FeatureSpace,
    weights: &[f64],
    sentence: &Sentence,
    emb: &EmbeddingTable,
) -> Vec<(Vec<usize>, f64)> {
    let n = sentence.len();
    let t = space.num_tags();
    let total = t.pow(n as u32);
    (0..total)
        .map(|mut code| {
            let mut tags = vec![0; n];
            for slot in tags.iter_mut().rev() {
                *slot = code % t;
                code /= t;
            }
            let score = global_features(space, sentence, &tags, emb).unwrap().dot(weights);
            (tags, score)
        })
        .collect()
}

/// Plain log-sum-exp over a slice, kept separate from the crate's version.
pub fn lse(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `|a - b| / max(|a|, |b|, 1e-3)`: relative error that turns absolute near zero.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn s(p: &Path) -> String {
    p.to_str().unwrap().to_string()
}

/// Runs the built binary; returns the exit code and stdout.
pub fn xltag<S: AsRef<std::ffi::OsStr>>(args: &[S]) -> (i32, String) {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_xltag"))
        .args(args)
        .output()
        .expect("spawn xltag");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn run_ok(args: Vec<String>) {
    let (status, _) = xltag(&args);
    assert_eq!(status, 0, "xltag {} failed", args.join(" "));
}

/// Runs embed, source training, estimate-priors, project, target training,
/// tag, eval and both diagnostics on the fixtures, writing into `work`.
/// Returns every file produced.
pub fn run_pipeline(work: &Path, seed: u64, threads: usize) -> Vec<PathBuf> {
    let fx = fixtures();
    let common = |mut args: Vec<String>| {
        args.extend([
            "--config".into(),
            s(&fx.join("pipeline.toml")),
            "--seed".into(),
            seed.to_string(),
            "--threads".into(),
            threads.to_string(),
        ]);
        run_ok(args)
    };
    let emb = work.join("emb.txt");
    common(vec!["embed".into(), "--verses".into(), s(&fx.join("verses.txt")), "--out".into(), s(&emb)]);

    let mut models = Vec::new();
    for src in ["src1", "src2", "src3"] {
        let model = work.join(format!("{src}.model"));
        common(
            [
                "train", "--learner", "crf-l2", "--corpus",
                &s(&fx.join(format!("train.{src}.txt"))),
                "--embeddings", &s(&emb), "--lang", src, "--out", &s(&model),
            ]
            .map(String::from)
            .to_vec(),
        );
        models.push(model);
    }
    let prior = work.join("prior.txt");
    let mut args: Vec<String> = ["estimate-priors", "--out", &s(&prior), "--models"].map(String::from).to_vec();
    args.extend(models.iter().map(|m| s(m)));
    common(args);

    let projected = work.join("projected.txt");
    let mut args: Vec<String> = ["project", "--out", &s(&projected), "--votes"].map(String::from).to_vec();
    args.extend(["src1", "src2", "src3"].map(|v| s(&fx.join(format!("votes.{v}.txt")))));
    common(args);

    let gold = fx.join("test.tgt.txt");
    let tgt = ["--embeddings".to_string(), s(&emb), "--lang".into(), "tgt".into()];
    for learner in ["crf-l2", "crf-l2prior", "crf-empgauss", "perc-l2", "perc-noise"] {
        let model = work.join(format!("tgt.{learner}.model"));
        let pred = work.join(format!("pred.{learner}.txt"));
        let mut args: Vec<String> = ["train", "--learner", learner, "--prior", &s(&prior), "--corpus", &s(&projected)]
            .map(String::from)
            .to_vec();
        args.extend(["--out".into(), s(&model)]);
        args.extend(tgt.clone());
        common(args);
        let mut args: Vec<String> = ["tag", "--model", &s(&model), "--corpus", &s(&gold), "--out", &s(&pred)]
            .map(String::from)
            .to_vec();
        args.extend(tgt.clone());
        common(args);
        common(
            ["eval", "--pred", &s(&pred), "--gold", &s(&gold), "--out", &s(&work.join(format!("eval.{learner}.txt")))]
                .map(String::from)
                .to_vec(),
        );
    }
    for (kind, extra) in [("rademacher", vec![]), ("variance", vec!["--validation".to_string(), s(&gold)])] {
        let mut args: Vec<String> = ["diagnose", kind, "--learner", "crf-empgauss", "--prior", &s(&prior)]
            .map(String::from)
            .to_vec();
        args.extend(["--corpus".into(), s(&projected), "--out".into(), s(&work.join(format!("{kind}.txt")))]);
        args.extend(extra);
        args.extend(tgt.clone());
        common(args);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(work)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    files
}
