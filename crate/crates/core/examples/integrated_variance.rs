//! Disagreement between models trained on random subsamples of noisy
//! projected data, measured on held-out sentences.
//!
//! cargo run --release --example integrated_variance

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use xltag::corpus::majority_vote;
use xltag::diagnostics::integrated_variance;
use xltag::synthetic::{simulate_projection, World, WorldConfig};
use xltag::systems::train_crf;
use xltag::{estimate_prior, FeatureSpace, RegularizedObjective, Sentence, System, SystemKind, Tagset};

fn main() -> xltag::Result<()> {
    let world = World::generate(WorldConfig::default(), 6)?;
    let space = FeatureSpace::universal(world.config().embed_dim);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let sources = (0..5)
        .map(|l| {
            let corpus = world.sample_corpus(l, 100, &mut rng);
            Ok(train_crf(&RegularizedObjective::l2(&space, 1.0)?, &space, &corpus, &world.embeddings(l), &Default::default())?.0)
        })
        .collect::<xltag::Result<Vec<_>>>()?;
    let prior = estimate_prior(&sources)?;

    let names: Vec<&str> = world.languages()[..5].iter().map(|l| l.name.as_str()).collect();
    let gold = world.sample_corpus(5, 60, &mut rng);
    let train = majority_vote(&simulate_projection(&gold, &names, 0.85, 0.75, &mut rng), Tagset);
    let validation: Vec<Sentence> = world.sample_corpus(5, 50, &mut rng).iter().map(|s| s.sentence().clone()).collect();

    for kind in SystemKind::ALL {
        let system = System::new(kind, space.clone(), world.embeddings(5)).with_prior(prior.clone());
        let report = integrated_variance(&system, &train, &validation, 20, 4, 42)?;
        print!("{report}");
        println!();
    }
    Ok(())
}
