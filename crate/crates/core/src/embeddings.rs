//! Cross-lingual word embeddings from verse co-occurrence.
//!
//! Every `(language, word)` type becomes a binary row recording the verses it
//! occurs in. Columns are mean-centred, the matrix is reduced with a truncated
//! SVD and each row of `U Σ` is scaled to unit length. Translations that share
//! verses end up close to each other regardless of language.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::svd::{randomized_svd, CenteredBinaryMatrix, SvdParams};

pub const DEFAULT_DIMS: usize = 40;

/// Word vectors of a fixed width; unknown words have no entry (zero vector).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn empty(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            vectors: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn insert(&mut self, word: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::FeatureSpaceMismatch(format!(
                "vector has {} dimensions, table has {}",
                vector.len(),
                self.dim
            )));
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("embedding values must be finite".into()));
        }
        self.vectors.insert(word.into(), vector);
        Ok(())
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.vectors.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Keeps the `lang:word` entries of one language, keyed by bare word.
    pub fn for_language(&self, lang: &str) -> EmbeddingTable {
        let prefix = format!("{lang}:");
        EmbeddingTable {
            dim: self.dim,
            vectors: self
                .vectors
                .iter()
                .filter_map(|(k, v)| k.strip_prefix(&prefix).map(|w| (w.to_string(), v.clone())))
                .collect(),
        }
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(BufReader::new(file))
    }

    /// One `key v_1 ... v_d` line per word.
    pub fn parse(reader: impl BufRead) -> Result<Self> {
        let mut table: Option<EmbeddingTable> = None;
        for (lineno, line) in reader.lines().enumerate() {
            let lineno = lineno + 1;
            let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
            let mut fields = line.split(' ').filter(|f| !f.is_empty());
            let Some(key) = fields.next() else { continue };
            let vector = fields
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::parse(lineno, e.to_string()))?;
            let table = table.get_or_insert_with(|| EmbeddingTable::empty(vector.len()));
            table
                .insert(key, vector)
                .map_err(|e| Error::parse(lineno, e.to_string()))?;
        }
        table.ok_or(Error::Empty("embedding file has no vectors"))
    }

    pub fn write_to(&self, out: &mut impl Write) -> std::io::Result<()> {
        for (key, vector) in &self.vectors {
            write!(out, "{key}")?;
            for v in vector {
                write!(out, " {v}")?;
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

/// One verse rendered in one language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerseLine {
    pub verse: String,
    pub lang: String,
    pub tokens: Vec<String>,
}

/// Multi-parallel text keyed by verse identifiers.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VerseCorpus {
    lines: Vec<VerseLine>,
}

impl VerseCorpus {
    pub fn new(lines: Vec<VerseLine>) -> Self {
        VerseCorpus { lines }
    }

    pub fn lines(&self) -> &[VerseLine] {
        &self.lines
    }

    pub fn push(&mut self, verse: impl Into<String>, lang: impl Into<String>, text: &str) {
        self.lines.push(VerseLine {
            verse: verse.into(),
            lang: lang.into(),
            tokens: text.split_whitespace().map(str::to_string).collect(),
        });
    }

    pub fn num_verses(&self) -> usize {
        self.lines.iter().map(|l| l.verse.as_str()).collect::<BTreeSet<_>>().len()
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(BufReader::new(file))
    }

    /// `verse-id<TAB>lang<TAB>space separated text` per line.
    pub fn parse(reader: impl BufRead) -> Result<Self> {
        let mut corpus = VerseCorpus::default();
        for (lineno, line) in reader.lines().enumerate() {
            let lineno = lineno + 1;
            let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.splitn(3, '\t').collect();
            if cols.len() != 3 || cols[0].is_empty() || cols[1].is_empty() || cols[1].contains(':') {
                return Err(Error::parse(lineno, "expected `verse<TAB>lang<TAB>text`"));
            }
            corpus.push(cols[0], cols[1], cols[2]);
        }
        Ok(corpus)
    }

    pub fn write_to(&self, out: &mut impl Write) -> std::io::Result<()> {
        for line in &self.lines {
            writeln!(out, "{}\t{}\t{}", line.verse, line.lang, line.tokens.join(" "))?;
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

    /// Rows are `lang:word` types in sorted order, columns verse ids in sorted order.
    pub fn occurrence_matrix(&self) -> (Vec<String>, CenteredBinaryMatrix) {
        let verses: BTreeMap<&str, usize> = self
            .lines
            .iter()
            .map(|l| l.verse.as_str())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .enumerate()
            .map(|(i, v)| (v, i))
            .collect();
        let mut rows: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for line in &self.lines {
            let col = verses[line.verse.as_str()];
            for token in &line.tokens {
                rows.entry(format!("{}:{}", line.lang, token)).or_default().push(col);
            }
        }
        let (keys, rows): (Vec<String>, Vec<Vec<usize>>) = rows.into_iter().unzip();
        (keys, CenteredBinaryMatrix::new(rows, verses.len()))
    }
}

#[derive(Debug, Clone)]
pub struct BuiltEmbeddings {
    /// Keys are `lang:word`.
    pub table: EmbeddingTable,
    pub singular_values: Vec<f64>,
}

/// Rows with a norm at or below this are emitted as exact zeros.
const ZERO_ROW: f64 = 1e-12;

pub fn build_embeddings(corpus: &VerseCorpus, dims: usize, seed: u64) -> Result<BuiltEmbeddings> {
    if corpus.lines.iter().all(|l| l.tokens.is_empty()) {
        return Err(Error::Empty("verse corpus has no tokens"));
    }
    let verses = corpus.num_verses();
    if verses < dims {
        return Err(Error::TooFewVerses { verses, dims });
    }
    let (keys, matrix) = corpus.occurrence_matrix();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let svd = randomized_svd(&matrix, dims, SvdParams::default(), &mut rng);
    let us = svd.scaled_u();

    let mut table = EmbeddingTable::empty(dims);
    for (i, key) in keys.into_iter().enumerate() {
        let mut row: Vec<f64> = us.row(i).iter().copied().collect();
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= ZERO_ROW {
            row.iter_mut().for_each(|v| *v = 0.0);
        } else {
            row.iter_mut().for_each(|v| *v /= norm);
        }
        table.insert(key, row)?;
    }
    Ok(BuiltEmbeddings {
        table,
        singular_values: svd.singular_values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_corpus() -> VerseCorpus {
        let mut c = VerseCorpus::default();
        for v in 0..6 {
            c.push(format!("v{v}"), "en", if v % 2 == 0 { "the dog" } else { "a cat" });
            c.push(format!("v{v}"), "da", if v % 2 == 0 { "hunden" } else { "en kat" });
        }
        c
    }

    #[test]
    fn translations_share_vectors() {
        let built = build_embeddings(&toy_corpus(), 4, 7).unwrap();
        let t = &built.table;
        let cos: f64 = t.get("en:dog").unwrap().iter().zip(t.get("da:hunden").unwrap()).map(|(a, b)| a * b).sum();
        assert!((cos - 1.0).abs() < 1e-12);
        for (_, v) in t.iter() {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(n == 0.0 || (n - 1.0).abs() < 1e-12);
        }
        assert_eq!(t.for_language("da").get("kat"), t.get("da:kat"));
    }

    #[test]
    fn too_few_verses() {
        assert!(matches!(
            build_embeddings(&toy_corpus(), 40, 1),
            Err(Error::TooFewVerses { verses: 6, dims: 40 })
        ));
        assert!(matches!(build_embeddings(&VerseCorpus::default(), 0, 1), Err(Error::Empty(_))));
    }

    #[test]
    fn file_formats_round_trip() {
        let built = build_embeddings(&toy_corpus(), 3, 7).unwrap();
        let mut buf = Vec::new();
        built.table.write_to(&mut buf).unwrap();
        let back = EmbeddingTable::parse(buf.as_slice()).unwrap();
        assert_eq!(back, built.table);

        let mut buf = Vec::new();
        toy_corpus().write_to(&mut buf).unwrap();
        assert_eq!(VerseCorpus::parse(buf.as_slice()).unwrap(), toy_corpus());
    }

    #[test]
    fn rejects_ragged_embedding_file() {
        assert!(EmbeddingTable::parse("a 1 2\nb 1\n".as_bytes()).is_err());
        assert!(EmbeddingTable::parse("".as_bytes()).is_err());
    }
}
