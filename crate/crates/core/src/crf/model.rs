use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::{FeatureSpace, ORTHO_FLAGS};

/// Dense weight vector over a [`FeatureSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureModel {
    space: FeatureSpace,
    weights: Vec<f64>,
}

impl FeatureModel {
    pub fn zeros(space: FeatureSpace) -> Self {
        let weights = vec![0.0; space.num_features()];
        FeatureModel { space, weights }
    }

    pub fn new(space: FeatureSpace, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != space.num_features() {
            return Err(Error::FeatureSpaceMismatch(format!(
                "{} weights for {} features",
                weights.len(),
                space.num_features()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite { iteration: 0 });
        }
        Ok(FeatureModel { space, weights })
    }

    pub fn space(&self) -> &FeatureSpace {
        &self.space
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(BufReader::new(file))
    }

    /// Parses a model file. Features without a line get weight zero.
    pub fn parse(reader: impl BufRead) -> Result<Self> {
        let mut lines = reader.lines().enumerate().map(|(i, l)| {
            l.map(|l| (i + 1, l))
                .map_err(|e| Error::parse(i + 1, e.to_string()))
        });
        let space = read_header(&mut lines, "model")?;
        let mut weights = vec![0.0; space.num_features()];
        let mut seen = HashSet::new();
        for line in lines {
            let (lineno, line) = line?;
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(lineno, "expected `key<TAB>weight`"))?;
            let index = space
                .parse_key(key)
                .ok_or_else(|| Error::parse(lineno, format!("unknown feature `{key}`")))?;
            if !seen.insert(index) {
                return Err(Error::parse(lineno, format!("duplicate feature `{key}`")));
            }
            weights[index] = parse_finite(value, lineno)?;
        }
        Ok(FeatureModel { space, weights })
    }

    /// Writes every feature in canonical order.
    pub fn write_to(&self, out: &mut impl Write) -> std::io::Result<()> {
        write_header(out, "model", &self.space)?;
        for (i, w) in self.weights.iter().enumerate() {
            writeln!(out, "{}\t{}", self.space.key(i), w)?;
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

pub(crate) fn parse_finite(value: &str, lineno: usize) -> Result<f64> {
    let v: f64 = value
        .trim()
        .parse()
        .map_err(|_| Error::parse(lineno, format!("invalid number `{value}`")))?;
    if !v.is_finite() {
        return Err(Error::parse(lineno, format!("non-finite number `{value}`")));
    }
    Ok(v)
}

pub(crate) fn write_header(out: &mut impl Write, kind: &str, space: &FeatureSpace) -> std::io::Result<()> {
    writeln!(out, "{kind}\tv1")?;
    writeln!(out, "tagset\t{}", space.tags().join(","))?;
    writeln!(out, "ortho\t{}", ORTHO_FLAGS.join(","))?;
    writeln!(out, "embed_dim\t{}", space.embed_dim())
}

pub(crate) fn header_field<I>(lines: &mut I, name: &str) -> Result<String>
where
    I: Iterator<Item = Result<(usize, String)>>,
{
    let (lineno, line) = lines.next().ok_or(Error::Empty("truncated header"))??;
    match line.split_once('\t') {
        Some((key, value)) if key == name => Ok(value.to_string()),
        _ => Err(Error::parse(lineno, format!("expected header field `{name}`"))),
    }
}

pub(crate) fn read_header<I>(lines: &mut I, kind: &str) -> Result<FeatureSpace>
where
    I: Iterator<Item = Result<(usize, String)>>,
{
    let version = header_field(lines, kind)?;
    if version != "v1" {
        return Err(Error::parse(1, format!("unsupported {kind} version `{version}`")));
    }
    let tags = header_field(lines, "tagset")?;
    let ortho = header_field(lines, "ortho")?;
    if ortho != ORTHO_FLAGS.join(",") {
        return Err(Error::FeatureSpaceMismatch(format!("orthographic flags `{ortho}`")));
    }
    let dim = header_field(lines, "embed_dim")?;
    let dim: usize = dim
        .parse()
        .map_err(|_| Error::parse(4, format!("invalid embedding dimension `{dim}`")))?;
    FeatureSpace::new(tags.split(','), dim)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_file_fills_zeros() {
        let text = "model\tv1\ntagset\tADJ,ADP\northo\tcapital,hyphen,digit\nembed_dim\t1\ntrans:ADP:ADJ\t2.5\n";
        let model = FeatureModel::parse(text.as_bytes()).unwrap();
        assert_eq!(model.weights().len(), 2 * 4 + 4);
        let idx = model.space().transition_index(1, 0);
        assert_eq!(model.weights()[idx], 2.5);
        assert_eq!(model.weights().iter().filter(|w| **w != 0.0).count(), 1);
    }

    #[test]
    fn round_trip_is_exact() {
        let space = FeatureSpace::truncated(3, 2);
        let weights: Vec<f64> = (0..space.num_features()).map(|i| (i as f64).sin() * 1e-3 / 7.0).collect();
        let model = FeatureModel::new(space, weights).unwrap();
        let mut buf = Vec::new();
        model.write_to(&mut buf).unwrap();
        let back = FeatureModel::parse(buf.as_slice()).unwrap();
        assert_eq!(back, model);
        let mut again = Vec::new();
        back.write_to(&mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn rejects_bad_lines() {
        let head = "model\tv1\ntagset\tADJ\northo\tcapital,hyphen,digit\nembed_dim\t0\n";
        assert!(FeatureModel::parse(format!("{head}trans:NOUN:ADJ\t1\n").as_bytes()).is_err());
        assert!(FeatureModel::parse(format!("{head}trans:ADJ:ADJ\tnan\n").as_bytes()).is_err());
        assert!(FeatureModel::parse(format!("{head}trans:ADJ:ADJ\t1\ntrans:ADJ:ADJ\t1\n").as_bytes()).is_err());
        assert!(FeatureModel::parse("prior\tv1\n".as_bytes()).is_err());
    }
}
