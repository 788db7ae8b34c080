//! Transfer from five clean source languages to a noisily labelled target.
//!
//! Source CRFs trained on clean synthetic data define an empirical prior; the
//! four target systems then learn from a small corpus with 20% label noise and
//! are scored on clean held-out text.
//!
//! cargo run --release --example synthetic_transfer -- [reps]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use xltag::diagnostics::accuracy;
use xltag::synthetic::{corrupt_labels, World, WorldConfig};
use xltag::{estimate_prior, FeatureSpace, Learner, RegularizedObjective, System, SystemKind};

fn main() -> xltag::Result<()> {
    let reps: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(5);
    println!("rep\tcrf-l2\tcrf-empgauss\tperc-l2\tperc-noise");
    for rep in 0..reps {
        let world = World::generate(WorldConfig::default(), 1000 + rep)?;
        let space = FeatureSpace::universal(world.config().embed_dim);
        let mut rng = ChaCha8Rng::seed_from_u64(rep);

        let sources = (0..5)
            .map(|lang| {
                let corpus = world.sample_corpus(lang, 200, &mut rng);
                let obj = RegularizedObjective::l2(&space, 1.0)?;
                let cfg = Default::default();
                Ok(xltag::systems::train_crf(&obj, &space, &corpus, &world.embeddings(lang), &cfg)?.0)
            })
            .collect::<xltag::Result<Vec<_>>>()?;
        let prior = estimate_prior(&sources)?;

        let target = 5;
        let emb = world.embeddings(target);
        let clean = world.sample_corpus(target, 30, &mut rng);
        let train = corrupt_labels(&clean, 0.2, &mut rng);
        let test = world.sample_corpus(target, 300, &mut rng);

        let mut row = vec![rep.to_string()];
        for kind in [SystemKind::CrfL2, SystemKind::CrfEmpGauss, SystemKind::PercL2, SystemKind::PercNoise] {
            let system = System::new(kind, space.clone(), emb.clone()).with_prior(prior.clone());
            let tagger = system.train(&train, rep)?;
            row.push(format!("{:.4}", accuracy(tagger.as_ref(), &test)));
        }
        println!("{}", row.join("\t"));
    }
    Ok(())
}
