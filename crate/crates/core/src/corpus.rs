//! Tagged corpora, the universal tagset and projected-annotation merging.
//!
//! Corpora use a two-column interchange format: one `token<TAB>TAG` pair per
//! line, with a blank line closing every sentence. Projected annotation uses
//! the same layout, except that the second column holds a comma-separated list
//! of `lang:TAG` votes (possibly empty).

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

const UNIVERSAL_TAGS: [&str; 12] = [
    "ADJ", "ADP", "ADV", "CONJ", "DET", "NOUN", "NUM", "PRON", "PRT", "PUNCT", "VERB", "X",
];

/// The 12-tag universal POS inventory in canonical order.
///
/// Canonical order decides every tie in this crate: the lower index wins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Tagset;

impl Tagset {
    pub const SIZE: usize = UNIVERSAL_TAGS.len();
    /// Index of `X`, the fallback for tokens without projected votes.
    pub const X: usize = 11;
    pub const NOUN: usize = 5;

    pub fn universal() -> Self {
        Tagset
    }

    pub fn len(&self) -> usize {
        Self::SIZE
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn names(&self) -> &'static [&'static str] {
        &UNIVERSAL_TAGS
    }

    pub fn name(&self, tag: usize) -> &'static str {
        UNIVERSAL_TAGS[tag]
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        UNIVERSAL_TAGS
            .iter()
            .position(|t| *t == name)
            .ok_or_else(|| Error::UnknownTag(name.to_string()))
    }

    /// Probability of guessing a tag uniformly at random.
    pub fn chance_level(&self) -> f64 {
        1.0 / Self::SIZE as f64
    }
}

/// A non-empty sequence of non-empty tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sentence {
    tokens: Vec<String>,
}

impl Sentence {
    pub fn new<S: Into<String>>(tokens: impl IntoIterator<Item = S>) -> Result<Self> {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        if tokens.is_empty() {
            return Err(Error::Empty("sentence has no tokens"));
        }
        if tokens.iter().any(String::is_empty) {
            return Err(Error::Empty("sentence contains an empty token"));
        }
        Ok(Sentence { tokens })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedSentence {
    sentence: Sentence,
    tags: Vec<usize>,
}

impl TaggedSentence {
    pub fn new(sentence: Sentence, tags: Vec<usize>) -> Result<Self> {
        if tags.len() != sentence.len() {
            return Err(Error::StructureMismatch(format!(
                "{} tokens but {} tags",
                sentence.len(),
                tags.len()
            )));
        }
        if let Some(&bad) = tags.iter().find(|&&t| t >= Tagset::SIZE) {
            return Err(Error::UnknownTag(format!("#{bad}")));
        }
        Ok(TaggedSentence { sentence, tags })
    }

    pub fn sentence(&self) -> &Sentence {
        &self.sentence
    }

    pub fn tokens(&self) -> &[String] {
        self.sentence.tokens()
    }

    pub fn tags(&self) -> &[usize] {
        &self.tags
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    /// Same tokens, different tags.
    pub fn with_tags(&self, tags: Vec<usize>) -> Result<Self> {
        TaggedSentence::new(self.sentence.clone(), tags)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TaggedCorpus {
    sentences: Vec<TaggedSentence>,
    tagset: Tagset,
}

impl TaggedCorpus {
    pub fn new(sentences: Vec<TaggedSentence>) -> Self {
        TaggedCorpus {
            sentences,
            tagset: Tagset,
        }
    }

    pub fn sentences(&self) -> &[TaggedSentence] {
        &self.sentences
    }

    pub fn tagset(&self) -> Tagset {
        self.tagset
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn num_tokens(&self) -> usize {
        self.sentences.iter().map(TaggedSentence::len).sum()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, TaggedSentence> {
        self.sentences.iter()
    }

    /// Reads a two-column file. See [`TaggedCorpus::parse`].
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(BufReader::new(file))
    }

    /// Parses `token<TAB>TAG` lines with blank lines between sentences.
    pub fn parse(reader: impl BufRead) -> Result<Self> {
        let mut sentences = Vec::new();
        let mut tokens = Vec::new();
        let mut tags = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let lineno = lineno + 1;
            let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                flush_sentence(&mut sentences, &mut tokens, &mut tags)?;
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 2 {
                return Err(Error::parse(
                    lineno,
                    format!("expected 2 tab-separated columns, found {}", cols.len()),
                ));
            }
            if cols[0].is_empty() {
                return Err(Error::parse(lineno, "empty token"));
            }
            tokens.push(cols[0].to_string());
            tags.push(Tagset.index_of(cols[1])?);
        }
        flush_sentence(&mut sentences, &mut tokens, &mut tags)?;
        if sentences.is_empty() {
            return Err(Error::Empty("corpus has no sentences"));
        }
        Ok(TaggedCorpus::new(sentences))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        self.write_to(&mut out).map_err(|e| Error::io(path, e))?;
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_to(&self, out: &mut impl Write) -> std::io::Result<()> {
        for sentence in &self.sentences {
            for (token, &tag) in sentence.tokens().iter().zip(sentence.tags()) {
                writeln!(out, "{}\t{}", token, self.tagset.name(tag))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

impl fmt::Display for TaggedCorpus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut buf = Vec::new();
        self.write_to(&mut buf).map_err(|_| fmt::Error)?;
        f.write_str(&String::from_utf8_lossy(&buf))
    }
}

fn flush_sentence(
    sentences: &mut Vec<TaggedSentence>,
    tokens: &mut Vec<String>,
    tags: &mut Vec<usize>,
) -> Result<()> {
    if tokens.is_empty() {
        return Ok(());
    }
    let sentence = Sentence::new(std::mem::take(tokens))?;
    sentences.push(TaggedSentence::new(sentence, std::mem::take(tags))?);
    Ok(())
}

/// One projected label: which source language voted for which tag.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Vote {
    pub source: String,
    pub tag: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectedSentence {
    sentence: Sentence,
    votes: Vec<Vec<Vote>>,
}

impl ProjectedSentence {
    pub fn new(sentence: Sentence, votes: Vec<Vec<Vote>>) -> Result<Self> {
        if votes.len() != sentence.len() {
            return Err(Error::StructureMismatch(format!(
                "{} tokens but {} vote lists",
                sentence.len(),
                votes.len()
            )));
        }
        if votes.iter().flatten().any(|v| v.tag >= Tagset::SIZE) {
            return Err(Error::UnknownTag("vote tag out of range".into()));
        }
        Ok(ProjectedSentence { sentence, votes })
    }

    pub fn sentence(&self) -> &Sentence {
        &self.sentence
    }

    pub fn votes(&self) -> &[Vec<Vote>] {
        &self.votes
    }
}

/// Per-token multisets of projected votes for a target-language corpus.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ProjectionTable {
    sentences: Vec<ProjectedSentence>,
}

impl ProjectionTable {
    pub fn new(sentences: Vec<ProjectedSentence>) -> Self {
        ProjectionTable { sentences }
    }

    pub fn sentences(&self) -> &[ProjectedSentence] {
        &self.sentences
    }

    /// Projects every sentence of a tagged source-side corpus as votes from `source`.
    pub fn from_corpus(source: &str, corpus: &TaggedCorpus) -> Self {
        let sentences = corpus
            .iter()
            .map(|s| ProjectedSentence {
                sentence: s.sentence().clone(),
                votes: s
                    .tags()
                    .iter()
                    .map(|&tag| {
                        vec![Vote {
                            source: source.to_string(),
                            tag,
                        }]
                    })
                    .collect(),
            })
            .collect();
        ProjectionTable { sentences }
    }

    /// Concatenates the votes of several tables over the same tokens.
    pub fn merge(tables: &[ProjectionTable]) -> Result<Self> {
        let Some((first, rest)) = tables.split_first() else {
            return Err(Error::Empty("no projection tables to merge"));
        };
        let mut merged = first.clone();
        for table in rest {
            if table.sentences.len() != merged.sentences.len() {
                return Err(Error::StructureMismatch(format!(
                    "{} vs {} sentences",
                    merged.sentences.len(),
                    table.sentences.len()
                )));
            }
            for (i, (acc, other)) in merged.sentences.iter_mut().zip(&table.sentences).enumerate() {
                if acc.sentence != other.sentence {
                    return Err(Error::StructureMismatch(format!(
                        "sentence {} has different tokens",
                        i + 1
                    )));
                }
                for (votes, extra) in acc.votes.iter_mut().zip(&other.votes) {
                    votes.extend(extra.iter().cloned());
                }
            }
        }
        Ok(merged)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(BufReader::new(file))
    }

    /// Parses `token<TAB>lang:TAG,lang:TAG,...` lines; the vote column may be empty.
    pub fn parse(reader: impl BufRead) -> Result<Self> {
        let mut sentences = Vec::new();
        let mut tokens = Vec::new();
        let mut votes = Vec::new();
        let mut flush = |tokens: &mut Vec<String>, votes: &mut Vec<Vec<Vote>>| -> Result<()> {
            if !tokens.is_empty() {
                let sentence = Sentence::new(std::mem::take(tokens))?;
                sentences.push(ProjectedSentence::new(sentence, std::mem::take(votes))?);
            }
            Ok(())
        };
        for (lineno, line) in reader.lines().enumerate() {
            let lineno = lineno + 1;
            let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                flush(&mut tokens, &mut votes)?;
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() > 2 || cols[0].is_empty() {
                return Err(Error::parse(lineno, "expected `token<TAB>votes`"));
            }
            let mut token_votes = Vec::new();
            if let Some(field) = cols.get(1).filter(|f| !f.is_empty()) {
                for vote in field.split(',') {
                    let (source, tag) = vote
                        .split_once(':')
                        .ok_or_else(|| Error::parse(lineno, format!("malformed vote `{vote}`")))?;
                    token_votes.push(Vote {
                        source: source.to_string(),
                        tag: Tagset.index_of(tag)?,
                    });
                }
            }
            tokens.push(cols[0].to_string());
            votes.push(token_votes);
        }
        flush(&mut tokens, &mut votes)?;
        if sentences.is_empty() {
            return Err(Error::Empty("vote file has no sentences"));
        }
        Ok(ProjectionTable { sentences })
    }

    pub fn write_to(&self, out: &mut impl Write) -> std::io::Result<()> {
        for sentence in &self.sentences {
            for (token, votes) in sentence.sentence.tokens().iter().zip(&sentence.votes) {
                let field: Vec<String> = votes
                    .iter()
                    .map(|v| format!("{}:{}", v.source, Tagset.name(v.tag)))
                    .collect();
                writeln!(out, "{}\t{}", token, field.join(","))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        self.write_to(&mut out).map_err(|e| Error::io(path, e))?;
        out.flush().map_err(|e| Error::io(path, e))
    }
}

/// Reads untagged text: the first tab-separated column of every line is a
/// token, blank lines end sentences. Any further columns are ignored, so a
/// two-column corpus can be read as raw text.
pub fn read_sentences(path: impl AsRef<Path>) -> Result<Vec<Sentence>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_sentences(BufReader::new(file))
}

pub fn parse_sentences(reader: impl BufRead) -> Result<Vec<Sentence>> {
    let mut sentences = Vec::new();
    let mut tokens: Vec<String> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::parse(lineno + 1, e.to_string()))?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            if !tokens.is_empty() {
                sentences.push(Sentence::new(std::mem::take(&mut tokens))?);
            }
            continue;
        }
        let token = line.split('\t').next().unwrap_or_default();
        if token.is_empty() {
            return Err(Error::parse(lineno + 1, "empty token"));
        }
        tokens.push(token.to_string());
    }
    if !tokens.is_empty() {
        sentences.push(Sentence::new(tokens)?);
    }
    if sentences.is_empty() {
        return Err(Error::Empty("text has no sentences"));
    }
    Ok(sentences)
}

/// Tag with the most votes; ties go to the lowest canonical index, no votes to `X`.
pub fn majority_tag(votes: &[Vote]) -> usize {
    if votes.is_empty() {
        return Tagset::X;
    }
    let mut counts = [0usize; Tagset::SIZE];
    for vote in votes {
        counts[vote.tag] += 1;
    }
    // `max_by_key` keeps the last maximum, so scan in reverse to favour low indices.
    (0..Tagset::SIZE)
        .rev()
        .max_by_key(|&t| counts[t])
        .unwrap_or(Tagset::X)
}

pub fn majority_vote(table: &ProjectionTable, _tagset: Tagset) -> TaggedCorpus {
    let sentences = table
        .sentences
        .iter()
        .map(|s| TaggedSentence {
            sentence: s.sentence.clone(),
            tags: s.votes.iter().map(|v| majority_tag(v)).collect(),
        })
        .collect();
    TaggedCorpus::new(sentences)
}

pub fn token_accuracy(pred: &TaggedCorpus, gold: &TaggedCorpus) -> Result<f64> {
    if pred.len() != gold.len() {
        return Err(Error::StructureMismatch(format!(
            "{} predicted vs {} gold sentences",
            pred.len(),
            gold.len()
        )));
    }
    let mut correct = 0usize;
    let mut total = 0usize;
    for (i, (p, g)) in pred.iter().zip(gold.iter()).enumerate() {
        if p.tokens() != g.tokens() {
            return Err(Error::StructureMismatch(format!(
                "sentence {} differs in tokens",
                i + 1
            )));
        }
        correct += p.tags().iter().zip(g.tags()).filter(|(a, b)| a == b).count();
        total += g.len();
    }
    if total == 0 {
        return Err(Error::Empty("no tokens to score"));
    }
    Ok(correct as f64 / total as f64)
}

pub fn macro_average(per_language: &[f64]) -> Result<f64> {
    if per_language.is_empty() {
        return Err(Error::Empty("no accuracies to average"));
    }
    Ok(per_language.iter().sum::<f64>() / per_language.len() as f64)
}
