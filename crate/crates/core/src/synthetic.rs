//! Synthetic multilingual data for experiments and fixtures.
//!
//! A master HMM over the universal tags generates sentences of abstract
//! concepts. Each language perturbs the master transition logits and renders
//! concepts with its own word forms, so the languages share syntax only
//! approximately and vocabulary not at all. Cross-lingual embeddings either
//! come straight from per-tag prototypes or are learned from a generated
//! multi-parallel verse corpus.

use std::collections::HashSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::corpus::{ProjectedSentence, ProjectionTable, Sentence, TaggedCorpus, TaggedSentence, Tagset, Vote};
use crate::embeddings::{EmbeddingTable, VerseCorpus};
use crate::error::{Error, Result};

const T: usize = Tagset::SIZE;
const ADJ: usize = 0;
const NUM: usize = 6;
const PUNCT: usize = 9;
const PUNCTUATION: [&str; 12] = [".", ",", ";", ":", "!", "?", "-", "\u{2013}", "(", ")", "\"", "..."];
const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

#[derive(Debug, Clone, PartialEq)]
pub struct WorldConfig {
    pub languages: Vec<String>,
    pub concepts_per_tag: usize,
    /// Dimension of the prototype embeddings.
    pub embed_dim: usize,
    /// Scale of the master transition logits.
    pub sharpness: f64,
    /// Std of the per-language perturbation of transition logits.
    pub drift: f64,
    /// Spread of concept vectors around their tag prototype.
    pub concept_spread: f64,
    /// Spread of a word's vector around its concept.
    pub word_spread: f64,
    pub min_len: usize,
    pub max_len: usize,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            languages: (0..6).map(|i| format!("l{i}")).collect(),
            concepts_per_tag: 8,
            embed_dim: 16,
            sharpness: 2.0,
            drift: 0.7,
            concept_spread: 0.8,
            word_spread: 0.3,
            min_len: 4,
            max_len: 9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Language {
    pub name: String,
    start: Vec<f64>,
    transitions: Vec<Vec<f64>>,
    /// `forms[tag][concept]`
    forms: Vec<Vec<String>>,
}

impl Language {
    pub fn form(&self, tag: usize, concept: usize) -> &str {
        &self.forms[tag][concept]
    }

    /// Row `prev` of the transition matrix.
    pub fn transitions(&self, prev: usize) -> &[f64] {
        &self.transitions[prev]
    }
}

#[derive(Debug, Clone)]
pub struct World {
    config: WorldConfig,
    languages: Vec<Language>,
    /// `concepts[tag][concept]`
    concepts: Vec<Vec<Vec<f64>>>,
    capitalized: Vec<Vec<bool>>,
    seed: u64,
}

fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / z).collect()
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

fn syllables(rng: &mut impl Rng, n: usize) -> String {
    (0..n)
        .flat_map(|_| {
            [
                CONSONANTS[rng.random_range(0..CONSONANTS.len())] as char,
                VOWELS[rng.random_range(0..VOWELS.len())] as char,
            ]
        })
        .collect()
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

impl World {
    pub fn generate(config: WorldConfig, seed: u64) -> Result<World> {
        if config.languages.is_empty() || config.concepts_per_tag == 0 {
            return Err(Error::InvalidConfig("world needs languages and concepts".into()));
        }
        if config.min_len == 0 || config.min_len > config.max_len {
            return Err(Error::InvalidConfig("sentence lengths must satisfy 1 <= min <= max".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = config.embed_dim;
        let k = config.concepts_per_tag;

        let master_start: Vec<f64> = (0..T).map(|_| config.sharpness * normal(&mut rng)).collect();
        let master: Vec<Vec<f64>> = (0..T)
            .map(|_| (0..T).map(|_| config.sharpness * normal(&mut rng)).collect())
            .collect();

        let scale = 1.0 / (d.max(1) as f64).sqrt();
        let concepts: Vec<Vec<Vec<f64>>> = (0..T)
            .map(|_| {
                let proto: Vec<f64> = normalized((0..d).map(|_| normal(&mut rng)).collect());
                (0..k)
                    .map(|_| {
                        proto
                            .iter()
                            .map(|p| p + config.concept_spread * scale * normal(&mut rng))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let capitalized: Vec<Vec<bool>> = (0..T)
            .map(|tag| (0..k).map(|_| tag == Tagset::NOUN && rng.random_bool(0.25)).collect())
            .collect();
        let hyphenated: Vec<Vec<bool>> = (0..T)
            .map(|tag| (0..k).map(|_| tag == ADJ && rng.random_bool(0.2)).collect())
            .collect();

        let mut languages = Vec::with_capacity(config.languages.len());
        for name in &config.languages {
            let perturb = |logits: &[f64], rng: &mut ChaCha8Rng| -> Vec<f64> {
                softmax(&logits.iter().map(|l| l + config.drift * normal(rng)).collect::<Vec<_>>())
            };
            let start = perturb(&master_start, &mut rng);
            let transitions = master.iter().map(|row| perturb(row, &mut rng)).collect();
            let mut used = HashSet::new();
            let mut forms = vec![Vec::new(); T];
            for (tag, tag_forms) in forms.iter_mut().enumerate() {
                for c in 0..k {
                    let form = loop {
                        let candidate = match tag {
                            PUNCT => PUNCTUATION[c % PUNCTUATION.len()].repeat(c / PUNCTUATION.len() + 1),
                            NUM => rng.random_range(0..100_000u32).to_string(),
                            _ if hyphenated[tag][c] => {
                                let n = rng.random_range(1..3);
                                format!("{}-{}", syllables(&mut rng, n), syllables(&mut rng, 2))
                            }
                            _ => {
                                let n = rng.random_range(2..4);
                                let w = syllables(&mut rng, n);
                                if capitalized[tag][c] {
                                    capitalize(&w)
                                } else {
                                    w
                                }
                            }
                        };
                        if used.insert(candidate.clone()) {
                            break candidate;
                        }
                    };
                    tag_forms.push(form);
                }
            }
            languages.push(Language {
                name: name.clone(),
                start,
                transitions,
                forms,
            });
        }
        Ok(World {
            config,
            languages,
            concepts,
            capitalized,
            seed,
        })
    }

    pub fn config(&self) -> &WorldConfig {
        &self.config
    }

    pub fn languages(&self) -> &[Language] {
        &self.languages
    }

    pub fn language(&self, name: &str) -> Result<&Language> {
        self.languages
            .iter()
            .find(|l| l.name == name)
            .ok_or_else(|| Error::InvalidConfig(format!("no language `{name}`")))
    }

    pub fn is_capitalized(&self, tag: usize, concept: usize) -> bool {
        self.capitalized[tag][concept]
    }

    /// Samples `n` tagged sentences in language `lang`.
    pub fn sample_corpus(&self, lang: usize, n: usize, rng: &mut impl Rng) -> TaggedCorpus {
        let language = &self.languages[lang];
        let k = self.config.concepts_per_tag;
        // Zipf-like concept frequencies.
        let concept_dist = WeightedIndex::new((0..k).map(|c| 1.0 / (c + 1) as f64)).expect("k > 0");
        let start = WeightedIndex::new(&language.start).expect("softmax is positive");
        let rows: Vec<WeightedIndex<f64>> = language
            .transitions
            .iter()
            .map(|row| WeightedIndex::new(row).expect("softmax is positive"))
            .collect();
        let sentences = (0..n)
            .map(|_| {
                let len = rng.random_range(self.config.min_len..=self.config.max_len);
                let mut tags = Vec::with_capacity(len);
                let mut tokens = Vec::with_capacity(len);
                let mut tag = start.sample(rng);
                for i in 0..len {
                    if i > 0 {
                        tag = rows[tag].sample(rng);
                    }
                    tags.push(tag);
                    tokens.push(language.forms[tag][concept_dist.sample(rng)].clone());
                }
                TaggedSentence::new(Sentence::new(tokens).expect("non-empty"), tags).expect("valid tags")
            })
            .collect();
        TaggedCorpus::new(sentences)
    }

    /// Prototype embeddings for the words of `lang`, keyed by bare word form.
    pub fn embeddings(&self, lang: usize) -> EmbeddingTable {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(lang as u64 + 1);
        let d = self.config.embed_dim;
        let scale = 1.0 / (d.max(1) as f64).sqrt();
        let mut table = EmbeddingTable::empty(d);
        for tag in 0..T {
            for (c, concept) in self.concepts[tag].iter().enumerate() {
                let v: Vec<f64> = concept
                    .iter()
                    .map(|x| x + self.config.word_spread * scale * normal(&mut rng))
                    .collect();
                table
                    .insert(self.languages[lang].forms[tag][c].clone(), normalized(v))
                    .expect("finite vector of the table's dimension");
            }
        }
        table
    }

    /// A multi-parallel verse corpus in every language.
    ///
    /// Each verse switches every tag on at a high or a low rate and then
    /// includes each concept of that tag independently at that rate, so words
    /// of one tag share a verse profile and translations share it exactly.
    pub fn verse_corpus(&self, verses: usize, rng: &mut impl Rng) -> VerseCorpus {
        let mut corpus = VerseCorpus::default();
        let width = verses.to_string().len();
        for v in 0..verses {
            let mut present = Vec::new();
            for tag in 0..T {
                let rate = if rng.random_bool(0.3) { 0.6 } else { 0.05 };
                for c in 0..self.config.concepts_per_tag {
                    if rng.random_bool(rate) {
                        present.push((tag, c));
                    }
                }
            }
            let id = format!("v{v:0width$}");
            for language in &self.languages {
                let text: Vec<&str> = present.iter().map(|&(t, c)| language.form(t, c)).collect();
                corpus.push(id.clone(), language.name.clone(), &text.join(" "));
            }
        }
        corpus
    }
}

/// Replaces each tag, with probability `rate`, by a different tag drawn uniformly.
pub fn corrupt_labels(corpus: &TaggedCorpus, rate: f64, rng: &mut impl Rng) -> TaggedCorpus {
    let sentences = corpus
        .iter()
        .map(|s| {
            let tags = s
                .tags()
                .iter()
                .map(|&t| {
                    if rng.random_bool(rate) {
                        (t + rng.random_range(1..T)) % T
                    } else {
                        t
                    }
                })
                .collect();
            s.with_tags(tags).expect("same length")
        })
        .collect();
    TaggedCorpus::new(sentences)
}

/// Simulated projected votes for a gold-tagged target corpus: each source
/// aligns a token with probability `coverage` and then votes for the gold tag
/// with probability `accuracy`, otherwise for a uniformly drawn wrong tag.
pub fn simulate_projection(
    gold: &TaggedCorpus,
    sources: &[&str],
    coverage: f64,
    accuracy: f64,
    rng: &mut impl Rng,
) -> ProjectionTable {
    let sentences = gold
        .iter()
        .map(|s| {
            let votes = s
                .tags()
                .iter()
                .map(|&t| {
                    sources
                        .iter()
                        .filter_map(|&src| {
                            if !rng.random_bool(coverage) {
                                return None;
                            }
                            let tag = if rng.random_bool(accuracy) {
                                t
                            } else {
                                (t + rng.random_range(1..T)) % T
                            };
                            Some(Vote {
                                source: src.to_string(),
                                tag,
                            })
                        })
                        .collect()
                })
                .collect();
            ProjectedSentence::new(s.sentence().clone(), votes).expect("one vote list per token")
        })
        .collect();
    ProjectionTable::new(sentences)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::ortho_flags;

    fn world() -> World {
        World::generate(WorldConfig::default(), 3).unwrap()
    }

    #[test]
    fn generation_is_seeded() {
        let a = world();
        let b = world();
        let mut r1 = ChaCha8Rng::seed_from_u64(1);
        let mut r2 = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(a.sample_corpus(2, 5, &mut r1), b.sample_corpus(2, 5, &mut r2));
        assert_eq!(a.embeddings(1), b.embeddings(1));
    }

    #[test]
    fn every_token_has_an_embedding() {
        let w = world();
        let emb = w.embeddings(0);
        let corpus = w.sample_corpus(0, 20, &mut ChaCha8Rng::seed_from_u64(2));
        for s in corpus.iter() {
            for tok in s.tokens() {
                let v = emb.get(tok).unwrap();
                assert!((v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn orthography_follows_tags() {
        let w = world();
        let lang = &w.languages()[0];
        for c in 0..w.config().concepts_per_tag {
            assert!(ortho_flags(lang.form(NUM, c))[2]);
            assert_eq!(ortho_flags(lang.form(Tagset::NOUN, c))[0], w.is_capitalized(Tagset::NOUN, c));
        }
    }

    #[test]
    fn corruption_rate() {
        let w = world();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let clean = w.sample_corpus(0, 400, &mut rng);
        let noisy = corrupt_labels(&clean, 0.2, &mut rng);
        let changed = clean
            .iter()
            .zip(noisy.iter())
            .flat_map(|(a, b)| a.tags().iter().zip(b.tags()))
            .filter(|(a, b)| a != b)
            .count() as f64
            / clean.num_tokens() as f64;
        assert!((changed - 0.2).abs() < 0.02, "{changed}");
    }

    #[test]
    fn verses_are_parallel() {
        let w = world();
        let verses = w.verse_corpus(10, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(verses.num_verses(), 10);
        assert_eq!(verses.lines().len(), 10 * w.languages().len());
        let first: Vec<usize> = verses.lines()[..6].iter().map(|l| l.tokens.len()).collect();
        assert!(first.windows(2).all(|p| p[0] == p[1]));
    }
}
