//! Averaged structured perceptrons: the weight-decay baseline and the variant
//! that corrupts feature values with multiplicative Gaussian noise drawn from
//! an empirical prior.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::corpus::TaggedCorpus;
use crate::crf::{decode, CrfData, FeatureModel};
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::features::FeatureSpace;
use crate::priors::GaussianPrior;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerceptronConfig {
    pub epochs: usize,
    /// Multiplicative weight decay after every instance (baseline only).
    pub decay: f64,
    pub seed: u64,
    /// Visit instances in a seeded random order each epoch.
    pub shuffle: bool,
}

impl Default for PerceptronConfig {
    fn default() -> Self {
        PerceptronConfig {
            epochs: 10,
            decay: 1e-6,
            seed: 42,
            shuffle: false,
        }
    }
}

impl PerceptronConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("perceptron needs at least one epoch".into()));
        }
        if !(0.0..1.0).contains(&self.decay) {
            return Err(Error::InvalidConfig(format!("decay must lie in [0, 1), got {}", self.decay)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PerceptronOutcome {
    /// Averaged weights.
    pub model: FeatureModel,
    /// Instances decoded incorrectly (under noise, for the noisy learner) per epoch.
    pub mistakes_per_epoch: Vec<usize>,
}

/// Multiplicative noise for one instance; features without a draw keep 1.
#[derive(Debug, Clone, PartialEq)]
pub struct CorruptionVector {
    multipliers: Vec<f64>,
}

impl CorruptionVector {
    pub fn identity(num_features: usize) -> Self {
        CorruptionVector {
            multipliers: vec![1.0; num_features],
        }
    }

    pub fn multipliers(&self) -> &[f64] {
        &self.multipliers
    }

    pub fn get(&self, feature: usize) -> f64 {
        self.multipliers[feature]
    }
}

/// Draws `g_j ~ N(1, σ_j)` for each active feature, σ_j the prior standard deviation.
pub fn sample_corruption(prior: &GaussianPrior, active: &[usize], rng: &mut impl Rng) -> CorruptionVector {
    let stds: Vec<f64> = prior.variances().iter().map(|v| v.sqrt()).collect();
    let mut g = CorruptionVector::identity(stds.len());
    draw_into(&stds, active.iter().copied(), rng, &mut g.multipliers);
    g
}

fn draw_into(stds: &[f64], active: impl Iterator<Item = usize>, rng: &mut impl Rng, out: &mut [f64]) {
    for j in active {
        let z: f64 = rng.sample(StandardNormal);
        out[j] = 1.0 + stds[j] * z;
    }
}

/// Running sum of weight snapshots, updated lazily per feature.
///
/// Weights are stored as `scale · v` so that decay costs O(1); each feature
/// remembers the cumulative scale at its last change and settles its share of
/// the sum only when it changes again.
struct Averager {
    v: Vec<f64>,
    scale: f64,
    scale_sum: f64,
    mark: Vec<f64>,
    partial: Vec<f64>,
    steps: usize,
}

impl Averager {
    fn new(init: Vec<f64>) -> Self {
        let m = init.len();
        Averager {
            v: init,
            scale: 1.0,
            scale_sum: 0.0,
            mark: vec![0.0; m],
            partial: vec![0.0; m],
            steps: 0,
        }
    }

    fn weights_into(&self, out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(&self.v) {
            *o = self.scale * v;
        }
    }

    fn add(&mut self, feature: usize, delta: f64) {
        self.partial[feature] += self.v[feature] * (self.scale_sum - self.mark[feature]);
        self.mark[feature] = self.scale_sum;
        self.v[feature] += delta / self.scale;
    }

    fn end_step(&mut self, decay: f64) {
        if decay > 0.0 {
            self.scale *= 1.0 - decay;
        }
        self.scale_sum += self.scale;
        self.steps += 1;
    }

    fn average(&self) -> Vec<f64> {
        let steps = self.steps.max(1) as f64;
        (0..self.v.len())
            .map(|f| (self.partial[f] + self.v[f] * (self.scale_sum - self.mark[f])) / steps)
            .collect()
    }
}

fn run(
    data: &CrfData,
    init: Vec<f64>,
    noise_stds: Option<&[f64]>,
    decay: f64,
    cfg: &PerceptronConfig,
) -> Result<PerceptronOutcome> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("perceptron training corpus is empty"));
    }
    let space = data.space();
    let m = space.num_features();
    // Separate streams, so that drawing noise never changes the visiting order.
    let mut order_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    noise_rng.set_stream(1);
    let mut avg = Averager::new(init);
    let mut weights = vec![0.0; m];
    let mut g = vec![1.0; m];
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut mistakes_per_epoch = Vec::with_capacity(cfg.epochs);

    for _ in 0..cfg.epochs {
        if cfg.shuffle {
            order.shuffle(&mut order_rng);
        }
        let mut mistakes = 0;
        for &i in &order {
            let (feats, gold) = &data.items()[i];
            avg.weights_into(&mut weights);
            if let Some(stds) = noise_stds {
                draw_into(stds, 0..m, &mut noise_rng, &mut g);
                weights.iter_mut().zip(&g).for_each(|(w, gj)| *w *= gj);
            }
            let (predicted, _) = decode(space, &weights, feats);
            if &predicted != gold {
                mistakes += 1;
                let delta = feats.global(space, gold)?.sub(&feats.global(space, &predicted)?);
                for &(f, d) in delta.entries() {
                    avg.add(f, d * g[f]);
                }
            }
            avg.end_step(decay);
        }
        mistakes_per_epoch.push(mistakes);
    }
    Ok(PerceptronOutcome {
        model: FeatureModel::new(space.clone(), avg.average())?,
        mistakes_per_epoch,
    })
}

/// Averaged perceptron with additive updates and L2 weight decay, from zero.
pub fn train_baseline(
    space: &FeatureSpace,
    corpus: &TaggedCorpus,
    emb: &EmbeddingTable,
    cfg: &PerceptronConfig,
) -> Result<PerceptronOutcome> {
    let data = CrfData::new(space, corpus, emb)?;
    run(&data, vec![0.0; space.num_features()], None, cfg.decay, cfg)
}

/// Averaged perceptron started at the prior means, with one corruption vector
/// per instance scaling features both when decoding and when updating.
/// `cfg.decay` is ignored: the noise is the only regularizer.
pub fn train_noise(
    corpus: &TaggedCorpus,
    emb: &EmbeddingTable,
    prior: &GaussianPrior,
    cfg: &PerceptronConfig,
) -> Result<PerceptronOutcome> {
    let data = CrfData::new(prior.space(), corpus, emb)?;
    let stds: Vec<f64> = prior.variances().iter().map(|v| v.sqrt()).collect();
    run(&data, prior.means().to_vec(), Some(&stds), 0.0, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Sentence, TaggedSentence};

    #[test]
    fn averager_matches_stored_snapshots() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = 6;
        let init: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let decay = 0.05;
        let mut avg = Averager::new(init.clone());
        let mut naive = init;
        let mut sum = vec![0.0; m];
        for _ in 0..40 {
            for _ in 0..rng.random_range(0..3) {
                let f = rng.random_range(0..m);
                let d: f64 = rng.random_range(-2.0..2.0);
                avg.add(f, d);
                naive[f] += d;
            }
            avg.end_step(decay);
            naive.iter_mut().for_each(|w| *w *= 1.0 - decay);
            sum.iter_mut().zip(&naive).for_each(|(s, w)| *s += w);
        }
        for (a, s) in avg.average().iter().zip(&sum) {
            assert!((a - s / 40.0).abs() < 1e-12, "{a} vs {}", s / 40.0);
        }
    }

    #[test]
    fn correct_decode_leaves_weights_alone() {
        // Zero weights decode to tag 0 everywhere, which is already gold.
        let space = FeatureSpace::truncated(3, 0);
        let s = TaggedSentence::new(Sentence::new(["a", "b"]).unwrap(), vec![0, 0]).unwrap();
        let corpus = TaggedCorpus::new(vec![s]);
        let cfg = PerceptronConfig {
            epochs: 3,
            ..Default::default()
        };
        let out = train_baseline(&space, &corpus, &EmbeddingTable::empty(0), &cfg).unwrap();
        assert!(out.model.weights().iter().all(|&w| w == 0.0));
        assert_eq!(out.mistakes_per_epoch, vec![0, 0, 0]);
    }

    #[test]
    fn invalid_config() {
        let space = FeatureSpace::truncated(2, 0);
        let corpus = TaggedCorpus::new(vec![
            TaggedSentence::new(Sentence::new(["a"]).unwrap(), vec![1]).unwrap(),
        ]);
        let emb = EmbeddingTable::empty(0);
        for cfg in [
            PerceptronConfig { epochs: 0, ..Default::default() },
            PerceptronConfig { decay: 1.0, ..Default::default() },
        ] {
            assert!(matches!(train_baseline(&space, &corpus, &emb, &cfg), Err(Error::InvalidConfig(_))));
        }
        assert!(train_baseline(&space, &TaggedCorpus::default(), &emb, &PerceptronConfig::default()).is_err());
    }
}
