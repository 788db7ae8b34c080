//! Cross-lingual part-of-speech tagging with empirical Gaussian priors.
//!
//! Source-language taggers are projected onto a target language through a
//! parallel corpus; the weight vectors of several source models then define
//! per-feature Gaussian priors that regularize a CRF or inject noise into an
//! averaged perceptron.

pub mod cli;
pub mod corpus;
pub mod crf;
pub mod diagnostics;
pub mod embeddings;
pub mod error;
pub mod features;
pub mod optimizer;
pub mod perceptron;
pub mod priors;
pub mod svd;
pub mod synthetic;
pub mod systems;

pub use corpus::{Sentence, TaggedCorpus, TaggedSentence, Tagset};
pub use crf::FeatureModel;
pub use embeddings::EmbeddingTable;
pub use error::{Error, Result};
pub use features::FeatureSpace;
pub use priors::{estimate_prior, GaussianPrior, RegularizedObjective, RegularizerKind};
pub use systems::{Learner, System, SystemKind, Tagger};
