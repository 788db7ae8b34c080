use crate::features::{FeatureSpace, SentenceFeatures};

pub fn logsumexp<I>(values: I) -> f64
where
    I: Iterator<Item = f64> + Clone,
{
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Log-space forward-backward tables for one sentence.
///
/// `alpha[t][y]` scores every prefix ending in `y` at `t` (node score
/// included), `beta[t][y]` every suffix after `t` given `y` at `t` (node score
/// at `t` excluded).
#[derive(Debug, Clone)]
pub struct Lattice {
    num_tags: usize,
    len: usize,
    node: Vec<f64>,
    edge: Vec<f64>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    log_z: f64,
}

impl Lattice {
    pub fn new(space: &FeatureSpace, weights: &[f64], feats: &SentenceFeatures) -> Self {
        let tags = space.num_tags();
        let n = feats.len();
        let mut node = vec![0.0; n * tags];
        for (t, token) in feats.tokens().iter().enumerate() {
            for y in 0..tags {
                node[t * tags + y] = token.score(space, y, weights);
            }
        }
        let mut edge = vec![0.0; tags * tags];
        for y in 0..tags {
            for prev in 0..tags {
                edge[y * tags + prev] = weights[space.transition_index(y, prev)];
            }
        }

        let mut alpha = vec![0.0; n * tags];
        alpha[..tags].copy_from_slice(&node[..tags]);
        for t in 1..n {
            for y in 0..tags {
                let incoming = logsumexp(
                    (0..tags).map(|prev| alpha[(t - 1) * tags + prev] + edge[y * tags + prev]),
                );
                alpha[t * tags + y] = node[t * tags + y] + incoming;
            }
        }

        let mut beta = vec![0.0; n * tags];
        for t in (0..n.saturating_sub(1)).rev() {
            for y in 0..tags {
                beta[t * tags + y] = logsumexp((0..tags).map(|next| {
                    edge[next * tags + y] + node[(t + 1) * tags + next] + beta[(t + 1) * tags + next]
                }));
            }
        }

        let log_z = logsumexp(alpha[(n - 1) * tags..].iter().copied());
        Lattice {
            num_tags: tags,
            len: n,
            node,
            edge,
            alpha,
            beta,
            log_z,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn num_tags(&self) -> usize {
        self.num_tags
    }

    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    /// Partition function recomputed from the backward messages.
    pub fn log_z_backward(&self) -> f64 {
        logsumexp((0..self.num_tags).map(|y| self.beta[y] + self.node[y]))
    }

    pub fn node_score(&self, t: usize, y: usize) -> f64 {
        self.node[t * self.num_tags + y]
    }

    pub fn edge_score(&self, y: usize, prev: usize) -> f64 {
        self.edge[y * self.num_tags + prev]
    }

    pub fn alpha(&self, t: usize, y: usize) -> f64 {
        self.alpha[t * self.num_tags + y]
    }

    pub fn beta(&self, t: usize, y: usize) -> f64 {
        self.beta[t * self.num_tags + y]
    }

    /// Unnormalized log-score of a full tag sequence.
    pub fn score(&self, tags: &[usize]) -> f64 {
        tags.iter()
            .enumerate()
            .map(|(t, &y)| {
                let e = if t > 0 { self.edge_score(y, tags[t - 1]) } else { 0.0 };
                self.node_score(t, y) + e
            })
            .sum()
    }

    /// P(y_t = y | x)
    pub fn node_marginal(&self, t: usize, y: usize) -> f64 {
        (self.alpha(t, y) + self.beta(t, y) - self.log_z).exp()
    }

    /// P(y_{t-1} = prev, y_t = y | x) for `t ≥ 1`.
    pub fn edge_marginal(&self, t: usize, y: usize, prev: usize) -> f64 {
        (self.alpha(t - 1, prev) + self.edge_score(y, prev) + self.node_score(t, y) + self.beta(t, y)
            - self.log_z)
            .exp()
    }
}
