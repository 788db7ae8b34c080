//! Source CRFs define an empirical prior; three CRF objectives are then
//! trained on projected target data and scored on the fixture test set.
//!
//! cargo run --release --example train_crf_priors

use std::path::PathBuf;

use xltag::corpus::{majority_vote, token_accuracy, ProjectionTable};
use xltag::crf::tag_corpus;
use xltag::embeddings::{build_embeddings, VerseCorpus};
use xltag::optimizer::OptimizerConfig;
use xltag::systems::train_crf;
use xltag::{estimate_prior, FeatureSpace, RegularizedObjective, RegularizerKind, TaggedCorpus, Tagset};

fn main() -> xltag::Result<()> {
    let fx = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let emb = build_embeddings(&VerseCorpus::read(fx.join("verses.txt"))?, 40, 42)?.table;
    let space = FeatureSpace::universal(emb.dim());
    let cfg = OptimizerConfig::default();

    let mut sources = Vec::new();
    for src in ["src1", "src2", "src3"] {
        let corpus = TaggedCorpus::read(fx.join(format!("train.{src}.txt")))?;
        let (model, opt) = train_crf(&RegularizedObjective::l2(&space, 1.0)?, &space, &corpus, &emb.for_language(src), &cfg)?;
        println!("{src}: {} after {} iterations", opt.termination, opt.trace.len());
        sources.push(model);
    }
    let prior = estimate_prior(&sources)?;
    println!("prior over {} features, default variance {:.4}", prior.means().len(), prior.default_variance());

    let tables = ["src1", "src2", "src3"]
        .iter()
        .map(|s| ProjectionTable::read(fx.join(format!("votes.{s}.txt"))))
        .collect::<xltag::Result<Vec<_>>>()?;
    let train = majority_vote(&ProjectionTable::merge(&tables)?, Tagset);
    let test = TaggedCorpus::read(fx.join("test.tgt.txt"))?;
    let target = emb.for_language("tgt");

    for kind in [RegularizerKind::L2, RegularizerKind::L2Prior, RegularizerKind::EmpGauss] {
        let obj = RegularizedObjective::new(kind, 1.0, &space, Some(&prior))?;
        let (model, _) = train_crf(&obj, &space, &train, &target, &cfg)?;
        let acc = token_accuracy(&tag_corpus(&model, &test, &target)?, &test)?;
        println!("{:<10} test accuracy {acc:.4}", kind.to_string());
    }
    Ok(())
}
