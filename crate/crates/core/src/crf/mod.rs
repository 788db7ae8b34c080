//! Linear-chain CRF: exact inference, conditional log-likelihood and its
//! gradient, and Viterbi decoding.

mod lattice;
mod model;

use rayon::prelude::*;

pub use lattice::Lattice;
pub use lattice::logsumexp;
pub use model::FeatureModel;
pub(crate) use model::{header_field, parse_finite, read_header, write_header};

use crate::corpus::{Sentence, TaggedCorpus};
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::features::{FeatureSpace, SentenceFeatures};

/// Sentences per work unit. Fixed so that sums do not depend on the thread count.
const CHUNK: usize = 16;

/// A training corpus with features extracted once.
#[derive(Debug, Clone)]
pub struct CrfData {
    space: FeatureSpace,
    items: Vec<(SentenceFeatures, Vec<usize>)>,
}

impl CrfData {
    pub fn new(space: &FeatureSpace, corpus: &TaggedCorpus, emb: &EmbeddingTable) -> Result<Self> {
        check_embeddings(space, emb)?;
        let items = corpus
            .iter()
            .map(|s| {
                if let Some(&bad) = s.tags().iter().find(|&&t| t >= space.num_tags()) {
                    return Err(Error::FeatureSpaceMismatch(format!(
                        "tag #{bad} outside a {}-tag feature space",
                        space.num_tags()
                    )));
                }
                Ok((SentenceFeatures::extract(s.sentence(), emb), s.tags().to_vec()))
            })
            .collect::<Result<_>>()?;
        Ok(CrfData {
            space: space.clone(),
            items,
        })
    }

    pub fn space(&self) -> &FeatureSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[(SentenceFeatures, Vec<usize>)] {
        &self.items
    }

    pub fn log_likelihood(&self, weights: &[f64]) -> f64 {
        self.items
            .par_chunks(CHUNK)
            .map(|chunk| {
                chunk
                    .iter()
                    .map(|(feats, gold)| {
                        let lattice = Lattice::new(&self.space, weights, feats);
                        lattice.score(gold) - lattice.log_z()
                    })
                    .sum::<f64>()
            })
            .collect::<Vec<_>>()
            .into_iter()
            .sum()
    }

    /// Log-likelihood and its gradient (observed minus expected feature counts).
    pub fn value_and_gradient(&self, weights: &[f64]) -> (f64, Vec<f64>) {
        let m = self.space.num_features();
        let partials: Vec<(f64, Vec<f64>)> = self
            .items
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut grad = vec![0.0; m];
                let mut ll = 0.0;
                for (feats, gold) in chunk {
                    ll += accumulate_sentence(&self.space, weights, feats, gold, &mut grad);
                }
                (ll, grad)
            })
            .collect();
        let mut grad = vec![0.0; m];
        let mut ll = 0.0;
        for (part_ll, part_grad) in partials {
            ll += part_ll;
            grad.iter_mut().zip(&part_grad).for_each(|(g, p)| *g += p);
        }
        (ll, grad)
    }
}

fn accumulate_sentence(
    space: &FeatureSpace,
    weights: &[f64],
    feats: &SentenceFeatures,
    gold: &[usize],
    grad: &mut [f64],
) -> f64 {
    let lattice = Lattice::new(space, weights, feats);
    let tags = space.num_tags();
    for (t, token) in feats.tokens().iter().enumerate() {
        let gold_base = space.emission_index(gold[t], 0);
        for &(o, v) in token.entries() {
            grad[gold_base + o] += v;
        }
        if t > 0 {
            grad[space.transition_index(gold[t], gold[t - 1])] += 1.0;
        }
        for y in 0..tags {
            let p = lattice.node_marginal(t, y);
            let base = space.emission_index(y, 0);
            for &(o, v) in token.entries() {
                grad[base + o] -= p * v;
            }
            if t > 0 {
                for prev in 0..tags {
                    grad[space.transition_index(y, prev)] -= lattice.edge_marginal(t, y, prev);
                }
            }
        }
    }
    lattice.score(gold) - lattice.log_z()
}

fn check_embeddings(space: &FeatureSpace, emb: &EmbeddingTable) -> Result<()> {
    if !emb.is_empty() && emb.dim() != space.embed_dim() {
        return Err(Error::FeatureSpaceMismatch(format!(
            "embeddings have {} dimensions, model expects {}",
            emb.dim(),
            space.embed_dim()
        )));
    }
    Ok(())
}

pub fn build_lattice(sentence: &Sentence, model: &FeatureModel, emb: &EmbeddingTable) -> Result<Lattice> {
    check_embeddings(model.space(), emb)?;
    let feats = SentenceFeatures::extract(sentence, emb);
    Ok(Lattice::new(model.space(), model.weights(), &feats))
}

/// Σ log P(y|x) over the corpus; zero for an empty corpus.
pub fn log_likelihood(model: &FeatureModel, corpus: &TaggedCorpus, emb: &EmbeddingTable) -> Result<f64> {
    Ok(CrfData::new(model.space(), corpus, emb)?.log_likelihood(model.weights()))
}

pub fn gradient_log_likelihood(
    model: &FeatureModel,
    corpus: &TaggedCorpus,
    emb: &EmbeddingTable,
) -> Result<Vec<f64>> {
    Ok(CrfData::new(model.space(), corpus, emb)?
        .value_and_gradient(model.weights())
        .1)
}

/// Highest-scoring tag sequence and its score.
///
/// Among equally scoring sequences the one with the lowest tag index at the
/// earliest differing position wins.
pub fn decode(space: &FeatureSpace, weights: &[f64], feats: &SentenceFeatures) -> (Vec<usize>, f64) {
    let tags = space.num_tags();
    let n = feats.len();
    let edge = |y: usize, prev: usize| weights[space.transition_index(y, prev)];
    // best[t][y]: best score of positions t.. given y at t
    let mut best = vec![0.0; n * tags];
    for t in (0..n).rev() {
        for y in 0..tags {
            let node = feats.tokens()[t].score(space, y, weights);
            let tail = if t + 1 < n {
                (0..tags)
                    .map(|next| edge(next, y) + best[(t + 1) * tags + next])
                    .fold(f64::NEG_INFINITY, f64::max)
            } else {
                0.0
            };
            best[t * tags + y] = node + tail;
        }
    }
    let mut path = Vec::with_capacity(n);
    let mut score = f64::NEG_INFINITY;
    let mut choice = 0;
    for y in 0..tags {
        if best[y] > score {
            score = best[y];
            choice = y;
        }
    }
    path.push(choice);
    for t in 1..n {
        let prev = path[t - 1];
        let mut top = f64::NEG_INFINITY;
        let mut choice = 0;
        for y in 0..tags {
            let s = edge(y, prev) + best[t * tags + y];
            if s > top {
                top = s;
                choice = y;
            }
        }
        path.push(choice);
    }
    (path, score)
}

pub fn viterbi(sentence: &Sentence, model: &FeatureModel, emb: &EmbeddingTable) -> Result<Vec<usize>> {
    check_embeddings(model.space(), emb)?;
    let feats = SentenceFeatures::extract(sentence, emb);
    Ok(decode(model.space(), model.weights(), &feats).0)
}

/// Total score Σ w·Φ(x, y) of a tag sequence.
pub fn sequence_score(space: &FeatureSpace, weights: &[f64], feats: &SentenceFeatures, tags: &[usize]) -> f64 {
    tags.iter()
        .enumerate()
        .map(|(t, &y)| {
            let e = if t > 0 { weights[space.transition_index(y, tags[t - 1])] } else { 0.0 };
            feats.tokens()[t].score(space, y, weights) + e
        })
        .sum()
}

/// Tags every sentence of `corpus` with Viterbi.
pub fn tag_corpus(model: &FeatureModel, corpus: &TaggedCorpus, emb: &EmbeddingTable) -> Result<TaggedCorpus> {
    check_embeddings(model.space(), emb)?;
    let sentences = corpus
        .iter()
        .map(|s| {
            let feats = SentenceFeatures::extract(s.sentence(), emb);
            s.with_tags(decode(model.space(), model.weights(), &feats).0)
        })
        .collect::<Result<_>>()?;
    Ok(TaggedCorpus::new(sentences))
}
