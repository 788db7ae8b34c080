//! The averaged perceptron with and without prior-driven feature noise on a
//! synthetic transfer task, plus the moments of the corruption draws.
//!
//! cargo run --release --example noise_perceptron

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use xltag::diagnostics::accuracy;
use xltag::perceptron::{sample_corruption, PerceptronConfig};
use xltag::synthetic::{corrupt_labels, World, WorldConfig};
use xltag::systems::train_crf;
use xltag::{estimate_prior, FeatureSpace, Learner, RegularizedObjective, System, SystemKind};

fn main() -> xltag::Result<()> {
    let world = World::generate(WorldConfig::default(), 11)?;
    let space = FeatureSpace::universal(world.config().embed_dim);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let sources = (0..5)
        .map(|l| {
            let corpus = world.sample_corpus(l, 200, &mut rng);
            Ok(train_crf(&RegularizedObjective::l2(&space, 1.0)?, &space, &corpus, &world.embeddings(l), &Default::default())?.0)
        })
        .collect::<xltag::Result<Vec<_>>>()?;
    let prior = estimate_prior(&sources)?;

    let all: Vec<usize> = (0..space.num_features()).collect();
    let draws: Vec<f64> = (0..10_000).map(|_| sample_corruption(&prior, &all, &mut rng).get(0)).collect();
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    let sd = (draws.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / draws.len() as f64).sqrt();
    println!("feature {}: sigma {:.4}, draws mean {mean:.4} sd {sd:.4}", space.key(0), prior.variances()[0].sqrt());

    let emb = world.embeddings(5);
    let train = corrupt_labels(&world.sample_corpus(5, 30, &mut rng), 0.2, &mut rng);
    let test = world.sample_corpus(5, 300, &mut rng);
    for kind in [SystemKind::PercL2, SystemKind::PercNoise] {
        let system = System::new(kind, space.clone(), emb.clone())
            .with_prior(prior.clone())
            .with_perceptron(PerceptronConfig { shuffle: true, ..Default::default() });
        let (_, log) = system.fit(&train, 42)?;
        let mut trace = Vec::new();
        log.write_to(&mut trace).expect("in-memory write");
        let mistakes: Vec<&str> = std::str::from_utf8(&trace).unwrap_or("").lines().map(|l| l.split('\t').nth(1).unwrap_or("")).collect();
        let acc = accuracy(system.train(&train, 42)?.as_ref(), &test);
        println!("{:<11} accuracy {acc:.4}  mistakes per epoch {}", kind.to_string(), mistakes.join(" "));
    }
    Ok(())
}
