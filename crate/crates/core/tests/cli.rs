mod common;

use std::fs;
use std::path::Path;

use common::{fixtures, xltag};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use xltag::corpus::{majority_vote, ProjectionTable};
use xltag::crf::tag_corpus;
use xltag::priors::estimate_prior;
use xltag::{EmbeddingTable, FeatureModel, FeatureSpace, GaussianPrior, TaggedCorpus, Tagset};

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_model(path: &Path, weight: f64) {
    let space = FeatureSpace::universal(0);
    let mut w = vec![0.0; space.num_features()];
    w[space.parse_key("ortho:ADJ:capital").unwrap()] = weight;
    FeatureModel::new(space, w).unwrap().write(path).unwrap();
}

#[test]
fn exit_codes() {
    assert_eq!(xltag(&["--help"]).0, 0);
    assert_eq!(xltag(&["--version"]).0, 0);
    assert_eq!(xltag::<&str>(&[]).0, 1);
    assert_eq!(xltag(&["frobnicate"]).0, 1);
    assert_eq!(xltag(&["train", "--corpus", "x", "--out", "y"]).0, 1, "missing learner");
    assert_eq!(xltag(&["train", "--learner", "crf-l9", "--corpus", "x", "--out", "y"]).0, 1);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m");
    assert_eq!(xltag(&["train", "--learner", "crf-l2", "--corpus", "/nonexistent", "--out", p(&out)]).0, 2);
    let tiny = fixtures().join("tiny.txt");
    assert_eq!(xltag(&["train", "--learner", "crf-l2", "--c", "-1", "--corpus", p(&tiny), "--out", p(&out)]).0, 1);
    assert_eq!(xltag(&["train", "--learner", "crf-empgauss", "--corpus", p(&tiny), "--out", p(&out)]).0, 1);
}

#[test]
fn two_point_prior_file() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, prior) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("prior"));
    write_model(&a, 0.0);
    write_model(&b, 2.0);
    let (status, stdout) = xltag(&["estimate-priors", "--models", p(&a), p(&b), "--out", p(&prior)]);
    assert_eq!(status, 0);
    assert!(stdout.contains("k\t2\n") && stdout.contains("m\t180\n"), "{stdout}");
    let text = fs::read_to_string(&prior).unwrap();
    assert!(text.lines().any(|l| l == "ortho:ADJ:capital\t1\t1"), "{text}");
}

#[test]
fn single_source_prior_resolves_to_c() {
    let dir = tempfile::tempdir().unwrap();
    let (a, prior) = (dir.path().join("a"), dir.path().join("prior"));
    write_model(&a, 1.5);
    assert_eq!(xltag(&["estimate-priors", "--models", p(&a), "--out", p(&prior)]).0, 0);
    let text = fs::read_to_string(&prior).unwrap();
    let body: Vec<&str> = text.lines().filter(|l| l.contains(':')).collect();
    assert!(!body.is_empty() && body.iter().all(|l| l.ends_with("\tsingle-source")), "{text}");

    let tiny = fixtures().join("tiny.txt");
    let models: Vec<Vec<u8>> = ["crf-l2prior", "crf-empgauss"]
        .iter()
        .map(|learner| {
            let out = dir.path().join(learner);
            let args = ["train", "--learner", learner, "--prior", p(&prior), "--c", "0.3", "--corpus", p(&tiny), "--out", p(&out)];
            assert_eq!(xltag(&args).0, 0);
            fs::read(out).unwrap()
        })
        .collect();
    assert_eq!(models[0], models[1]);
}

#[test]
fn five_model_prior_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let space = FeatureSpace::universal(2);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let models: Vec<FeatureModel> = (0..5)
        .map(|_| FeatureModel::new(space.clone(), common::random_weights(&mut rng, space.num_features(), 1.0)).unwrap())
        .collect();
    let paths: Vec<_> = (0..5).map(|i| dir.path().join(format!("m{i}"))).collect();
    for (m, path) in models.iter().zip(&paths) {
        m.write(path).unwrap();
    }
    let out = dir.path().join("prior");
    let mut args = vec!["estimate-priors", "--out", p(&out), "--models"];
    args.extend(paths.iter().map(|x| p(x)));
    assert_eq!(xltag(&args).0, 0);
    assert_eq!(GaussianPrior::read(&out).unwrap(), estimate_prior(&models).unwrap());
}

#[test]
fn separable_fixture_is_learned_and_tagging_matches_viterbi() {
    let dir = tempfile::tempdir().unwrap();
    let tiny = fixtures().join("tiny.txt");
    let (model, pred) = (dir.path().join("model"), dir.path().join("pred"));
    assert_eq!(xltag(&["train", "--learner", "crf-l2", "--corpus", p(&tiny), "--out", p(&model)]).0, 0);
    let trace = fs::read_to_string(dir.path().join("model.trace")).unwrap();
    assert!(!trace.is_empty());
    assert_eq!(xltag(&["tag", "--model", p(&model), "--corpus", p(&tiny), "--out", p(&pred)]).0, 0);
    let gold = TaggedCorpus::read(&tiny).unwrap();
    let tagged = TaggedCorpus::read(&pred).unwrap();
    assert_eq!(tagged, gold);
    let direct = tag_corpus(&FeatureModel::read(&model).unwrap(), &gold, &EmbeddingTable::empty(0)).unwrap();
    assert_eq!(tagged, direct);

    let (status, stdout) = xltag(&["eval", "--pred", p(&pred), "--gold", p(&tiny)]);
    assert_eq!(status, 0);
    assert!(stdout.ends_with("macro_average\t1\n"), "{stdout}");
}

#[test]
fn floor_prior_dominates_training() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, prior, out) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("prior"), dir.path().join("m"));
    write_model(&a, 0.8);
    write_model(&b, 0.8);
    assert_eq!(xltag(&["estimate-priors", "--models", p(&a), p(&b), "--out", p(&prior)]).0, 0);
    let tiny = fixtures().join("tiny.txt");
    let args = ["train", "--learner", "crf-empgauss", "--prior", p(&prior), "--corpus", p(&tiny), "--out", p(&out)];
    assert_eq!(xltag(&args).0, 0);
    let model = FeatureModel::read(&out).unwrap();
    let prior = GaussianPrior::read(&prior).unwrap();
    assert!(prior.variances().iter().all(|&v| v == 1e-6));
    for (w, mu) in model.weights().iter().zip(prior.means()) {
        assert!((w - mu).abs() <= 1e-3);
    }
}

#[test]
fn projection_and_manifest_eval() {
    let dir = tempfile::tempdir().unwrap();
    let fx = fixtures();
    let votes: Vec<_> = ["src1", "src2", "src3"].iter().map(|s| fx.join(format!("votes.{s}.txt"))).collect();
    let out = dir.path().join("projected.txt");
    let mut args = vec!["project", "--out", p(&out), "--votes"];
    args.extend(votes.iter().map(|v| p(v)));
    assert_eq!(xltag(&args).0, 0);
    let tables: Vec<_> = votes.iter().map(|v| ProjectionTable::read(v).unwrap()).collect();
    let expected = majority_vote(&ProjectionTable::merge(&tables).unwrap(), Tagset);
    assert_eq!(TaggedCorpus::read(&out).unwrap(), expected);

    fs::write(dir.path().join("manifest"), "a\tprojected.txt\tprojected.txt\nb\tprojected.txt\tprojected.txt\n").unwrap();
    let report = dir.path().join("eval");
    let (status, stdout) = xltag(&["eval", "--manifest", p(&dir.path().join("manifest")), "--out", p(&report)]);
    assert_eq!(status, 0);
    assert_eq!(stdout, "a\t1\nb\t1\nmacro_average\t1\n");
    assert_eq!(fs::read_to_string(report).unwrap(), stdout);
    assert_eq!(xltag(&["eval", "--pred", p(&out), "--gold", p(&fx.join("test.tgt.txt"))]).0, 2);
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let tiny = fixtures().join("tiny.txt");
    let config = dir.path().join("run.toml");
    fs::write(&config, "learner = \"crf-l2\"\nc = 100.0\n").unwrap();
    let train = |extra: &[&str], out: &str| {
        let out = dir.path().join(out);
        let mut args = vec!["train", "--corpus", p(&tiny), "--out", p(&out)];
        args.extend_from_slice(extra);
        assert_eq!(xltag(&args).0, 0);
        fs::read(out).unwrap()
    };
    let from_file = train(&["--config", p(&config)], "a");
    let overridden = train(&["--config", p(&config), "--c", "1"], "b");
    let plain = train(&["--learner", "crf-l2", "--c", "1"], "c");
    assert_eq!(overridden, plain);
    assert_ne!(from_file, plain);
    fs::write(&config, "colour = \"blue\"\n").unwrap();
    assert_eq!(xltag(&["--config", p(&config), "train", "--corpus", p(&tiny), "--out", "x"]).0, 1);
}

#[test]
fn variance_needs_validation() {
    let tiny = fixtures().join("tiny.txt");
    let args = ["diagnose", "variance", "--learner", "crf-l2", "--corpus", p(&tiny), "--out", "/tmp/never"];
    assert_eq!(xltag(&args).0, 1);
}

#[test]
fn pipeline_is_thread_count_invariant() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let files_a = common::run_pipeline(a.path(), 42, 1);
    let files_b = common::run_pipeline(b.path(), 42, 4);
    assert_eq!(files_a.len(), files_b.len());
    for (fa, fb) in files_a.iter().zip(&files_b) {
        assert_eq!(fa.file_name(), fb.file_name());
        assert!(fs::read(fa).unwrap() == fs::read(fb).unwrap(), "{} differs", fa.display());
    }
    // Tagging quality on the fixture target with the prior-based CRF.
    let eval = fs::read_to_string(a.path().join("eval.crf-empgauss.txt")).unwrap();
    let acc: f64 = eval.lines().last().unwrap().split('\t').nth(1).unwrap().parse().unwrap();
    assert!(acc > 0.9, "{eval}");
}
