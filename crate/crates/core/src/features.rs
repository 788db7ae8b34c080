//! Language-independent feature template.
//!
//! Every tag owns one emission block of `3 + embed_dim` weights: the three
//! orthographic indicators followed by the embedding coordinates. Transition
//! weights for every `(tag, previous tag)` pair follow the emission blocks.
//! There are no word-identity features, so the same weight vector applies to
//! any language whose words live in the shared embedding space.

use std::collections::BTreeMap;
use std::fmt;

use crate::corpus::{Sentence, Tagset};
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};

pub const ORTHO_FLAGS: [&str; 3] = ["capital", "hyphen", "digit"];
pub const NUM_ORTHO: usize = ORTHO_FLAGS.len();

/// Shape of the weight vector: tag inventory and embedding width.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSpace {
    tags: Vec<String>,
    embed_dim: usize,
}

impl FeatureSpace {
    pub fn new<S: Into<String>>(tags: impl IntoIterator<Item = S>, embed_dim: usize) -> Result<Self> {
        let tags: Vec<String> = tags.into_iter().map(Into::into).collect();
        if tags.is_empty() {
            return Err(Error::InvalidConfig("feature space needs at least one tag".into()));
        }
        let mut sorted = tags.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != tags.len() || tags.iter().any(|t| t.is_empty() || t.contains([':', ',', '\t', ' '])) {
            return Err(Error::InvalidConfig("tag names must be distinct plain words".into()));
        }
        Ok(FeatureSpace { tags, embed_dim })
    }

    /// The universal tagset with `embed_dim` embedding features per tag.
    pub fn universal(embed_dim: usize) -> Self {
        FeatureSpace {
            tags: Tagset.names().iter().map(|s| s.to_string()).collect(),
            embed_dim,
        }
    }

    /// The first `num_tags` universal tags; small spaces keep exhaustive checks cheap.
    pub fn truncated(num_tags: usize, embed_dim: usize) -> Self {
        assert!((1..=Tagset::SIZE).contains(&num_tags));
        FeatureSpace {
            tags: Tagset.names()[..num_tags].iter().map(|s| s.to_string()).collect(),
            embed_dim,
        }
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    pub fn num_tags(&self) -> usize {
        self.tags.len()
    }

    pub fn embed_dim(&self) -> usize {
        self.embed_dim
    }

    pub fn block_size(&self) -> usize {
        NUM_ORTHO + self.embed_dim
    }

    fn transition_base(&self) -> usize {
        self.num_tags() * self.block_size()
    }

    pub fn num_features(&self) -> usize {
        self.transition_base() + self.num_tags() * self.num_tags()
    }

    #[inline]
    pub fn emission_index(&self, tag: usize, offset: usize) -> usize {
        tag * self.block_size() + offset
    }

    #[inline]
    pub fn transition_index(&self, tag: usize, prev: usize) -> usize {
        self.transition_base() + tag * self.num_tags() + prev
    }

    pub fn index(&self, id: FeatureId) -> usize {
        match id {
            FeatureId::Ortho { tag, flag } => self.emission_index(tag, flag),
            FeatureId::Embed { tag, dim } => self.emission_index(tag, NUM_ORTHO + dim),
            FeatureId::Transition { tag, prev } => self.transition_index(tag, prev),
        }
    }

    pub fn feature(&self, index: usize) -> FeatureId {
        assert!(index < self.num_features(), "feature index {index} out of range");
        if index >= self.transition_base() {
            let rel = index - self.transition_base();
            FeatureId::Transition {
                tag: rel / self.num_tags(),
                prev: rel % self.num_tags(),
            }
        } else {
            let tag = index / self.block_size();
            let offset = index % self.block_size();
            if offset < NUM_ORTHO {
                FeatureId::Ortho { tag, flag: offset }
            } else {
                FeatureId::Embed {
                    tag,
                    dim: offset - NUM_ORTHO,
                }
            }
        }
    }

    /// Textual key used in model and prior files, e.g. `trans:NOUN:DET`.
    pub fn key(&self, index: usize) -> String {
        match self.feature(index) {
            FeatureId::Ortho { tag, flag } => format!("ortho:{}:{}", self.tags[tag], ORTHO_FLAGS[flag]),
            FeatureId::Embed { tag, dim } => format!("embed:{}:{}", self.tags[tag], dim),
            FeatureId::Transition { tag, prev } => {
                format!("trans:{}:{}", self.tags[tag], self.tags[prev])
            }
        }
    }

    pub fn parse_key(&self, key: &str) -> Option<usize> {
        let mut parts = key.splitn(3, ':');
        let kind = parts.next()?;
        let tag = self.tag_index(parts.next()?)?;
        let detail = parts.next()?;
        let id = match kind {
            "ortho" => FeatureId::Ortho {
                tag,
                flag: ORTHO_FLAGS.iter().position(|f| *f == detail)?,
            },
            "embed" => {
                let dim: usize = detail.parse().ok()?;
                if dim >= self.embed_dim {
                    return None;
                }
                FeatureId::Embed { tag, dim }
            }
            "trans" => FeatureId::Transition {
                tag,
                prev: self.tag_index(detail)?,
            },
            _ => return None,
        };
        Some(self.index(id))
    }

    fn tag_index(&self, name: &str) -> Option<usize> {
        self.tags.iter().position(|t| t == name)
    }
}

/// Structured name of one weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FeatureId {
    Ortho { tag: usize, flag: usize },
    Embed { tag: usize, dim: usize },
    /// Fires when `tag` follows `prev`.
    Transition { tag: usize, prev: usize },
}

/// Sparse feature values sorted by index, without duplicates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureVector {
    entries: Vec<(usize, f64)>,
}

impl FeatureVector {
    /// Builds a vector from unsorted entries, summing duplicates.
    pub fn from_entries(entries: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        for (i, v) in entries {
            *acc.entry(i).or_insert(0.0) += v;
        }
        FeatureVector {
            entries: acc.into_iter().collect(),
        }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map(|pos| self.entries[pos].1)
            .unwrap_or(0.0)
    }

    pub fn dot(&self, weights: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| weights[i] * v).sum()
    }

    /// `self - other`, keeping every index present in either operand.
    pub fn sub(&self, other: &FeatureVector) -> FeatureVector {
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some(&&(i, x)), Some(&&(j, y))) => {
                    if i == j {
                        out.push((i, x - y));
                        a.next();
                        b.next();
                    } else if i < j {
                        out.push((i, x));
                        a.next();
                    } else {
                        out.push((j, -y));
                        b.next();
                    }
                }
                (Some(&&(i, x)), None) => {
                    out.push((i, x));
                    a.next();
                }
                (None, Some(&&(j, y))) => {
                    out.push((j, -y));
                    b.next();
                }
                (None, None) => break,
            }
        }
        FeatureVector { entries: out }
    }

    pub fn add_to(&self, dense: &mut [f64], scale: f64) {
        for &(i, v) in &self.entries {
            dense[i] += scale * v;
        }
    }
}

impl fmt::Display for FeatureVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, (i, v)) in self.entries.iter().enumerate() {
            if n > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{i}:{v}")?;
        }
        Ok(())
    }
}

/// `(has-capital, has-hyphen, has-digit)` over Unicode characters.
pub fn ortho_flags(token: &str) -> [bool; 3] {
    [
        token.chars().any(char::is_uppercase),
        token.chars().any(is_dash),
        token.chars().any(char::is_numeric),
    ]
}

fn is_dash(c: char) -> bool {
    // Unicode Pd (dash punctuation).
    matches!(
        c,
        '-' | '\u{058A}'
            | '\u{05BE}'
            | '\u{1400}'
            | '\u{1806}'
            | '\u{2010}'..='\u{2015}'
            | '\u{2E17}'
            | '\u{2E1A}'
            | '\u{2E3A}'
            | '\u{2E3B}'
            | '\u{2E40}'
            | '\u{2E5D}'
            | '\u{301C}'
            | '\u{3030}'
            | '\u{30A0}'
            | '\u{FE31}'
            | '\u{FE32}'
            | '\u{FE58}'
            | '\u{FE63}'
            | '\u{FF0D}'
            | '\u{10EAD}'
    )
}

/// Tag-independent observation of one token: `(block offset, value)` pairs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TokenFeatures {
    entries: Vec<(usize, f64)>,
}

impl TokenFeatures {
    pub fn extract(token: &str, emb: &EmbeddingTable) -> Self {
        let mut entries: Vec<(usize, f64)> = ortho_flags(token)
            .iter()
            .enumerate()
            .filter(|(_, &on)| on)
            .map(|(flag, _)| (flag, 1.0))
            .collect();
        if let Some(vector) = emb.get(token) {
            entries.extend(vector.iter().enumerate().map(|(d, &v)| (NUM_ORTHO + d, v)));
        }
        TokenFeatures { entries }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    /// Emission score of this token under `tag`.
    #[inline]
    pub fn score(&self, space: &FeatureSpace, tag: usize, weights: &[f64]) -> f64 {
        let base = space.emission_index(tag, 0);
        self.entries.iter().map(|&(o, v)| weights[base + o] * v).sum()
    }
}

/// Precomputed observations for every position of a sentence.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SentenceFeatures {
    tokens: Vec<TokenFeatures>,
}

impl SentenceFeatures {
    pub fn extract(sentence: &Sentence, emb: &EmbeddingTable) -> Self {
        SentenceFeatures {
            tokens: sentence
                .tokens()
                .iter()
                .map(|t| TokenFeatures::extract(t, emb))
                .collect(),
        }
    }

    pub fn tokens(&self) -> &[TokenFeatures] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Φ(x, y) for a full tag sequence.
    pub fn global(&self, space: &FeatureSpace, tags: &[usize]) -> Result<FeatureVector> {
        if tags.len() != self.len() {
            return Err(Error::StructureMismatch(format!(
                "{} tokens but {} tags",
                self.len(),
                tags.len()
            )));
        }
        let mut entries = Vec::new();
        for (t, (token, &tag)) in self.tokens.iter().zip(tags).enumerate() {
            let base = space.emission_index(tag, 0);
            entries.extend(token.entries.iter().map(|&(o, v)| (base + o, v)));
            if t > 0 {
                entries.push((space.transition_index(tag, tags[t - 1]), 1.0));
            }
        }
        Ok(FeatureVector::from_entries(entries))
    }
}

fn check_dims(space: &FeatureSpace, emb: &EmbeddingTable) -> Result<()> {
    if !emb.is_empty() && emb.dim() != space.embed_dim() {
        return Err(Error::FeatureSpaceMismatch(format!(
            "embeddings have {} dimensions, feature space expects {}",
            emb.dim(),
            space.embed_dim()
        )));
    }
    Ok(())
}

pub fn emission_features(
    space: &FeatureSpace,
    token: &str,
    tag: usize,
    emb: &EmbeddingTable,
) -> Result<FeatureVector> {
    check_dims(space, emb)?;
    if tag >= space.num_tags() {
        return Err(Error::UnknownTag(format!("#{tag}")));
    }
    let base = space.emission_index(tag, 0);
    Ok(FeatureVector::from_entries(
        TokenFeatures::extract(token, emb)
            .entries
            .into_iter()
            .map(|(o, v)| (base + o, v)),
    ))
}

pub fn global_features(
    space: &FeatureSpace,
    sentence: &Sentence,
    tags: &[usize],
    emb: &EmbeddingTable,
) -> Result<FeatureVector> {
    check_dims(space, emb)?;
    if let Some(&bad) = tags.iter().find(|&&t| t >= space.num_tags()) {
        return Err(Error::UnknownTag(format!("#{bad}")));
    }
    SentenceFeatures::extract(sentence, emb).global(space, tags)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags() {
        assert_eq!(ortho_flags("Copenhagen"), [true, false, false]);
        assert_eq!(ortho_flags("well-known"), [false, true, false]);
        assert_eq!(ortho_flags("B-52"), [true, true, true]);
        assert_eq!(ortho_flags("Ärger—x"), [true, true, false]);
        assert_eq!(ortho_flags("٣"), [false, false, true]);
    }

    #[test]
    fn indexing_is_a_bijection() {
        let space = FeatureSpace::universal(5);
        assert_eq!(space.num_features(), 12 * 8 + 144);
        for i in 0..space.num_features() {
            assert_eq!(space.index(space.feature(i)), i);
            assert_eq!(space.parse_key(&space.key(i)), Some(i));
        }
        assert_eq!(space.parse_key("embed:NOUN:5"), None);
        assert_eq!(space.parse_key("trans:NOUN:NN"), None);
    }

    #[test]
    fn oov_tokens() {
        let space = FeatureSpace::universal(4);
        let emb = EmbeddingTable::empty(4);
        assert!(emission_features(&space, "xyzzy", 0, &emb).unwrap().is_empty());
        let fv = emission_features(&space, "Dog", Tagset::NOUN, &emb).unwrap();
        assert_eq!(
            fv.entries(),
            &[(space.index(FeatureId::Ortho { tag: Tagset::NOUN, flag: 0 }), 1.0)]
        );
    }

    #[test]
    fn transition_multiplicity() {
        let space = FeatureSpace::truncated(3, 2);
        let emb = EmbeddingTable::empty(2);
        let s = Sentence::new(["a", "b", "c"]).unwrap();
        let fv = global_features(&space, &s, &[1, 1, 1], &emb).unwrap();
        assert_eq!(fv.get(space.transition_index(1, 1)), 2.0);
        let one = Sentence::new(["a"]).unwrap();
        assert!(global_features(&space, &one, &[2], &emb).unwrap().is_empty());
        assert!(global_features(&space, &s, &[1, 1], &emb).is_err());
    }

    #[test]
    fn sub_merges() {
        let a = FeatureVector::from_entries([(1, 1.0), (3, 2.0)]);
        let b = FeatureVector::from_entries([(0, 1.0), (3, 2.0)]);
        assert_eq!(a.sub(&b).entries(), &[(0, -1.0), (1, 1.0), (3, 0.0)]);
    }
}
