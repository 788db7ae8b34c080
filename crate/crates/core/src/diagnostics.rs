//! Overfitting diagnostics.
//!
//! * Random-label fit: how far above the 1/12 chance level a learner can push
//!   training accuracy when every tag is drawn uniformly at random. This is an
//!   empirical proxy for Rademacher complexity, not a bound.
//! * Integrated variance: disagreement among models trained on independent
//!   random subsamples, measured on held-out sentences.

use std::fmt;
use std::io::Write;
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus::{Sentence, TaggedCorpus, TaggedSentence, Tagset};
use crate::error::{Error, Result};
use crate::systems::{Learner, Tagger};

/// Independent RNG for the `index`-th unit of work under `seed`.
fn substream(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

fn derived_seed(seed: u64, index: usize) -> u64 {
    substream(seed, index).random()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RademacherReport {
    pub learner: String,
    /// Training tokens per trial.
    pub sample_size: usize,
    pub trials: usize,
    /// Mean training accuracy on random labels.
    pub fit: f64,
    pub chance: f64,
    pub excess: f64,
    pub std_error: f64,
    pub per_trial: Vec<f64>,
}

impl RademacherReport {
    pub fn write_to(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "report\trademacher")?;
        writeln!(out, "learner\t{}", self.learner)?;
        writeln!(out, "sample_size\t{}", self.sample_size)?;
        writeln!(out, "trials\t{}", self.trials)?;
        writeln!(out, "fit\t{}", self.fit)?;
        writeln!(out, "chance\t{}", self.chance)?;
        writeln!(out, "excess\t{}", self.excess)?;
        writeln!(out, "std_error\t{}", self.std_error)?;
        for (i, f) in self.per_trial.iter().enumerate() {
            writeln!(out, "trial_{}\t{}", i + 1, f)?;
        }
        Ok(())
    }
}

impl fmt::Display for RademacherReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_display(f, |buf| self.write_to(buf))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceReport {
    pub learner: String,
    pub subsample_size: usize,
    pub subsamples: usize,
    pub validation_sentences: usize,
    pub validation_tokens: usize,
    pub integrated_variance: f64,
}

impl VarianceReport {
    pub fn write_to(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "report\tintegrated-variance")?;
        writeln!(out, "learner\t{}", self.learner)?;
        writeln!(out, "subsample_size\t{}", self.subsample_size)?;
        writeln!(out, "subsamples\t{}", self.subsamples)?;
        writeln!(out, "validation_sentences\t{}", self.validation_sentences)?;
        writeln!(out, "validation_tokens\t{}", self.validation_tokens)?;
        writeln!(out, "integrated_variance\t{}", self.integrated_variance)
    }
}

impl fmt::Display for VarianceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_display(f, |buf| self.write_to(buf))
    }
}

fn write_display(
    f: &mut fmt::Formatter<'_>,
    write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
) -> fmt::Result {
    let mut buf = Vec::new();
    write(&mut buf).map_err(|_| fmt::Error)?;
    f.write_str(&String::from_utf8_lossy(&buf))
}

/// Writes any report to `path`.
pub fn write_report(path: impl AsRef<Path>, report: &impl fmt::Display) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, report.to_string()).map_err(|e| Error::io(path, e))
}

/// Labels every token uniformly at random; trial `t` uses substream `t` of `seed`.
pub fn random_labels(sentences: &[Sentence], seed: u64, trial: usize) -> TaggedCorpus {
    let mut rng = substream(seed, trial);
    let tagged = sentences
        .iter()
        .map(|s| {
            let tags = (0..s.len()).map(|_| rng.random_range(0..Tagset::SIZE)).collect();
            TaggedSentence::new(s.clone(), tags).expect("random tags are in range")
        })
        .collect();
    TaggedCorpus::new(tagged)
}

/// Token accuracy of `tagger` against the tags of `corpus`.
pub fn accuracy(tagger: &dyn Tagger, corpus: &TaggedCorpus) -> f64 {
    let mut correct = 0usize;
    for s in corpus.iter() {
        let predicted = tagger.tag(s.sentence());
        correct += predicted.iter().zip(s.tags()).filter(|(a, b)| a == b).count();
    }
    correct as f64 / corpus.num_tokens().max(1) as f64
}

/// Mean training accuracy on uniformly random tags over `trials` draws.
///
/// The labels of trial `t` depend only on `seed` and `t`, so two learners run
/// with the same seed see identical labels.
pub fn rademacher_estimate(
    learner: &dyn Learner,
    sentences: &[Sentence],
    trials: usize,
    seed: u64,
) -> Result<RademacherReport> {
    if trials < 3 {
        return Err(Error::InvalidConfig(format!("need at least 3 trials, got {trials}")));
    }
    if sentences.is_empty() {
        return Err(Error::Empty("no sentences to label"));
    }
    let per_trial = (0..trials)
        .map(|t| {
            let corpus = random_labels(sentences, seed, t);
            let tagger = learner.train(&corpus, derived_seed(seed ^ 0x5eed, t))?;
            Ok(accuracy(tagger.as_ref(), &corpus))
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = per_trial.len() as f64;
    let fit = per_trial.iter().sum::<f64>() / n;
    let var = per_trial.iter().map(|f| (f - fit) * (f - fit)).sum::<f64>() / (n - 1.0);
    let chance = Tagset.chance_level();
    Ok(RademacherReport {
        learner: learner.id(),
        sample_size: sentences.iter().map(Sentence::len).sum(),
        trials,
        fit,
        chance,
        excess: fit - chance,
        std_error: (var / n).sqrt(),
        per_trial,
    })
}

/// Mean over tokens of `1 - (share of models agreeing with the modal tag)`.
///
/// `predictions[i][s][t]` is model `i`'s tag for token `t` of sentence `s`.
/// Modal ties go to the lowest tag index, which does not change the share.
pub fn disagreement(predictions: &[Vec<Vec<usize>>]) -> Result<f64> {
    let Some(first) = predictions.first() else {
        return Err(Error::Empty("no model predictions"));
    };
    let k = predictions.len() as f64;
    let mut total = 0.0;
    let mut tokens = 0usize;
    for (s, sentence) in first.iter().enumerate() {
        for t in 0..sentence.len() {
            let mut counts = [0usize; Tagset::SIZE];
            for model in predictions {
                let tag = *model
                    .get(s)
                    .and_then(|p| p.get(t))
                    .ok_or_else(|| Error::StructureMismatch("ragged prediction table".into()))?;
                counts[tag.min(Tagset::SIZE - 1)] += 1;
            }
            let modal = counts.iter().copied().max().unwrap_or(0) as f64;
            total += 1.0 - modal / k;
            tokens += 1;
        }
    }
    if tokens == 0 {
        return Err(Error::Empty("no validation tokens"));
    }
    Ok(total / tokens as f64)
}

/// Trains `k` models on random `l`-sentence subsamples and measures how much
/// their predictions on `validation` disagree.
pub fn integrated_variance(
    learner: &dyn Learner,
    train: &TaggedCorpus,
    validation: &[Sentence],
    l: usize,
    k: usize,
    seed: u64,
) -> Result<VarianceReport> {
    if l == 0 {
        return Err(Error::InvalidConfig("subsample size must be positive".into()));
    }
    if l >= train.len() {
        return Err(Error::InvalidConfig(format!(
            "subsample size {l} must be below the training size {}",
            train.len()
        )));
    }
    if k < 2 {
        return Err(Error::InvalidConfig("need at least 2 subsamples".into()));
    }
    let predictions = (0..k)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, i);
            let mut picked = index::sample(&mut rng, train.len(), l).into_vec();
            picked.sort_unstable();
            let subsample = TaggedCorpus::new(picked.iter().map(|&j| train.sentences()[j].clone()).collect());
            let tagger = learner.train(&subsample, derived_seed(seed ^ 0x5eed, i))?;
            Ok(validation.iter().map(|s| tagger.tag(s)).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VarianceReport {
        learner: learner.id(),
        subsample_size: l,
        subsamples: k,
        validation_sentences: validation.len(),
        validation_tokens: validation.iter().map(Sentence::len).sum(),
        integrated_variance: disagreement(&predictions)?,
    })
}

/// Predicts the same tag everywhere, whatever the data.
#[derive(Debug, Clone, Copy)]
pub struct ConstantLearner(pub usize);

impl Tagger for ConstantLearner {
    fn tag(&self, sentence: &Sentence) -> Vec<usize> {
        vec![self.0; sentence.len()]
    }
}

impl Learner for ConstantLearner {
    fn id(&self) -> String {
        format!("constant-{}", Tagset.name(self.0))
    }

    fn train(&self, _corpus: &TaggedCorpus, _seed: u64) -> Result<Box<dyn Tagger>> {
        Ok(Box::new(*self))
    }
}
