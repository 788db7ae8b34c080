//! The five trainable systems behind one interface.

use std::fmt;
use std::str::FromStr;

use crate::corpus::{Sentence, TaggedCorpus};
use crate::crf::{decode, CrfData, FeatureModel};
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::features::{FeatureSpace, SentenceFeatures};
use crate::optimizer::{maximize, Optimum, OptimizerConfig};
use crate::perceptron::{train_baseline, train_noise, PerceptronConfig};
use crate::priors::{GaussianPrior, RegularizedObjective, RegularizerKind};

/// Assigns tags to a sentence.
pub trait Tagger: Send + Sync {
    fn tag(&self, sentence: &Sentence) -> Vec<usize>;
}

/// A training procedure, as seen by the diagnostics.
pub trait Learner: Sync {
    fn id(&self) -> String;
    fn train(&self, corpus: &TaggedCorpus, seed: u64) -> Result<Box<dyn Tagger>>;
}

/// A weight vector plus the embeddings it reads.
#[derive(Debug, Clone)]
pub struct ModelTagger {
    pub model: FeatureModel,
    pub emb: EmbeddingTable,
}

impl Tagger for ModelTagger {
    fn tag(&self, sentence: &Sentence) -> Vec<usize> {
        let feats = SentenceFeatures::extract(sentence, &self.emb);
        decode(self.model.space(), self.model.weights(), &feats).0
    }
}

/// Trains a CRF under `obj`, starting from the objective's centre.
pub fn train_crf(
    obj: &RegularizedObjective,
    space: &FeatureSpace,
    corpus: &TaggedCorpus,
    emb: &EmbeddingTable,
    cfg: &OptimizerConfig,
) -> Result<(FeatureModel, Optimum)> {
    if corpus.is_empty() {
        return Err(Error::Empty("CRF training corpus is empty"));
    }
    let data = CrfData::new(space, corpus, emb)?;
    let optimum = maximize(&obj.on(&data)?, &obj.initial_weights(), cfg)?;
    let model = FeatureModel::new(space.clone(), optimum.weights.clone())?;
    Ok((model, optimum))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SystemKind {
    CrfL2,
    CrfL2Prior,
    CrfEmpGauss,
    PercL2,
    PercNoise,
}

impl SystemKind {
    pub const ALL: [SystemKind; 5] = [
        SystemKind::CrfL2,
        SystemKind::CrfL2Prior,
        SystemKind::CrfEmpGauss,
        SystemKind::PercL2,
        SystemKind::PercNoise,
    ];

    pub fn needs_prior(self) -> bool {
        !matches!(self, SystemKind::CrfL2 | SystemKind::PercL2)
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SystemKind::CrfL2 => "crf-l2",
            SystemKind::CrfL2Prior => "crf-l2prior",
            SystemKind::CrfEmpGauss => "crf-empgauss",
            SystemKind::PercL2 => "perc-l2",
            SystemKind::PercNoise => "perc-noise",
        })
    }
}

impl FromStr for SystemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SystemKind::ALL
            .into_iter()
            .find(|k| k.to_string() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown learner `{s}`")))
    }
}

/// A fully configured learner.
#[derive(Debug, Clone)]
pub struct System {
    pub kind: SystemKind,
    pub space: FeatureSpace,
    pub emb: EmbeddingTable,
    pub prior: Option<GaussianPrior>,
    /// Regularization strength for the CRF objectives.
    pub c: f64,
    pub optimizer: OptimizerConfig,
    pub perceptron: PerceptronConfig,
}

/// What training produced besides the weights.
#[derive(Debug, Clone)]
pub enum TrainingLog {
    Optimizer(Optimum),
    Perceptron { mistakes_per_epoch: Vec<usize> },
}

impl TrainingLog {
    /// Optimizer trace lines, or one `epoch<TAB>mistakes` line per epoch.
    pub fn write_to(&self, out: &mut impl std::io::Write) -> std::io::Result<()> {
        match self {
            TrainingLog::Optimizer(opt) => opt.write_trace(out),
            TrainingLog::Perceptron { mistakes_per_epoch } => {
                for (epoch, m) in mistakes_per_epoch.iter().enumerate() {
                    writeln!(out, "{}\t{}", epoch + 1, m)?;
                }
                Ok(())
            }
        }
    }
}

impl System {
    pub fn new(kind: SystemKind, space: FeatureSpace, emb: EmbeddingTable) -> Self {
        System {
            kind,
            space,
            emb,
            prior: None,
            c: 1.0,
            optimizer: OptimizerConfig::default(),
            perceptron: PerceptronConfig::default(),
        }
    }

    pub fn with_prior(mut self, prior: GaussianPrior) -> Self {
        self.prior = Some(prior);
        self
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn with_optimizer(mut self, cfg: OptimizerConfig) -> Self {
        self.optimizer = cfg;
        self
    }

    pub fn with_perceptron(mut self, cfg: PerceptronConfig) -> Self {
        self.perceptron = cfg;
        self
    }

    fn prior(&self) -> Result<&GaussianPrior> {
        let prior = self
            .prior
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig(format!("{} needs a prior", self.kind)))?;
        if prior.space() != &self.space {
            return Err(Error::FeatureSpaceMismatch("prior does not match the feature space".into()));
        }
        Ok(prior)
    }

    /// Trains on `corpus`. `seed` only affects the noisy perceptron.
    pub fn fit(&self, corpus: &TaggedCorpus, seed: u64) -> Result<(FeatureModel, TrainingLog)> {
        let crf = |kind: RegularizerKind, prior: Option<&GaussianPrior>| -> Result<(FeatureModel, TrainingLog)> {
            let obj = RegularizedObjective::new(kind, self.c, &self.space, prior)?;
            let (model, opt) = train_crf(&obj, &self.space, corpus, &self.emb, &self.optimizer)?;
            Ok((model, TrainingLog::Optimizer(opt)))
        };
        match self.kind {
            SystemKind::CrfL2 => crf(RegularizerKind::L2, None),
            SystemKind::CrfL2Prior => crf(RegularizerKind::L2Prior, Some(self.prior()?)),
            SystemKind::CrfEmpGauss => crf(RegularizerKind::EmpGauss, Some(self.prior()?)),
            SystemKind::PercL2 => {
                let out = train_baseline(&self.space, corpus, &self.emb, &self.perceptron)?;
                Ok((
                    out.model,
                    TrainingLog::Perceptron {
                        mistakes_per_epoch: out.mistakes_per_epoch,
                    },
                ))
            }
            SystemKind::PercNoise => {
                let cfg = PerceptronConfig {
                    seed,
                    ..self.perceptron
                };
                let out = train_noise(corpus, &self.emb, self.prior()?, &cfg)?;
                Ok((
                    out.model,
                    TrainingLog::Perceptron {
                        mistakes_per_epoch: out.mistakes_per_epoch,
                    },
                ))
            }
        }
    }
}

impl Learner for System {
    fn id(&self) -> String {
        self.kind.to_string()
    }

    fn train(&self, corpus: &TaggedCorpus, seed: u64) -> Result<Box<dyn Tagger>> {
        let (model, _) = self.fit(corpus, seed)?;
        Ok(Box::new(ModelTagger {
            model,
            emb: self.emb.clone(),
        }))
    }
}
