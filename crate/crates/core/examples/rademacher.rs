//! How well each learner fits uniformly random tags, relative to the 1/12
//! chance level. Lower excess means less capacity to memorize noise.
//!
//! cargo run --release --example rademacher -- [trials]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use xltag::diagnostics::rademacher_estimate;
use xltag::synthetic::{World, WorldConfig};
use xltag::systems::train_crf;
use xltag::{estimate_prior, FeatureSpace, RegularizedObjective, Sentence, System, SystemKind};

fn main() -> xltag::Result<()> {
    let trials = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(10);
    let world = World::generate(WorldConfig::default(), 5)?;
    let space = FeatureSpace::universal(world.config().embed_dim);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sources = (0..5)
        .map(|l| {
            let corpus = world.sample_corpus(l, 200, &mut rng);
            Ok(train_crf(&RegularizedObjective::l2(&space, 1.0)?, &space, &corpus, &world.embeddings(l), &Default::default())?.0)
        })
        .collect::<xltag::Result<Vec<_>>>()?;
    let prior = estimate_prior(&sources)?;
    let sentences: Vec<Sentence> = world.sample_corpus(5, 15, &mut rng).iter().map(|s| s.sentence().clone()).collect();

    for (kind, c) in [
        (SystemKind::CrfL2, 1e3),
        (SystemKind::CrfL2, 1.0),
        (SystemKind::CrfL2Prior, 1.0),
        (SystemKind::CrfEmpGauss, 1.0),
        (SystemKind::PercL2, 1.0),
        (SystemKind::PercNoise, 1.0),
    ] {
        let system = System::new(kind, space.clone(), world.embeddings(5)).with_prior(prior.clone()).with_c(c);
        let r = rademacher_estimate(&system, &sentences, trials, 42)?;
        println!("{:<13} C={c:<6} fit {:.4}  excess {:+.4} +- {:.4}", r.learner, r.fit, r.excess, r.std_error);
    }
    Ok(())
}
