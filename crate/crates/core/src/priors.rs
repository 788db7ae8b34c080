//! Gaussian priors estimated from source-language models and the three
//! regularized training objectives built on them.
//!
//! Every objective has the form `LL(w) - Σ_j (w_j - μ_j)² / (2 σ_j²)`:
//!
//! | kind        | centre `μ_j`         | variance `σ_j²`          |
//! |-------------|----------------------|--------------------------|
//! | `L2`        | 0                    | `C`                      |
//! | `L2Prior`   | mean source weight   | `C`                      |
//! | `EmpGauss`  | mean source weight   | source-weight variance   |
//!
//! With a single source model the observed variance is zero everywhere, so
//! `EmpGauss` falls back to `C` and coincides with `L2Prior`.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use crate::corpus::TaggedCorpus;
use crate::crf::{header_field, parse_finite, read_header, write_header, CrfData, FeatureModel};
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::features::FeatureSpace;
use crate::optimizer::Objective;

pub const VARIANCE_FLOOR: f64 = 1e-6;
const SINGLE_SOURCE: &str = "single-source";

/// Per-feature Gaussian over weights.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPrior {
    space: FeatureSpace,
    means: Vec<f64>,
    variances: Vec<f64>,
    default_variance: f64,
    sources: usize,
    floor: f64,
}

impl GaussianPrior {
    /// Assembles a prior directly. Variances below `floor` are rejected.
    pub fn from_parts(
        space: FeatureSpace,
        means: Vec<f64>,
        variances: Vec<f64>,
        sources: usize,
        floor: f64,
    ) -> Result<Self> {
        let m = space.num_features();
        if means.len() != m || variances.len() != m {
            return Err(Error::FeatureSpaceMismatch(format!(
                "prior has {} means and {} variances for {m} features",
                means.len(),
                variances.len()
            )));
        }
        if sources == 0 {
            return Err(Error::Empty("prior needs at least one source"));
        }
        if !(floor >= 0.0) || variances.iter().any(|v| !v.is_finite() || *v < floor) {
            return Err(Error::InvalidConfig("prior variances must be finite and above the floor".into()));
        }
        if means.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("prior means must be finite".into()));
        }
        let default_variance = if m == 0 {
            floor
        } else {
            variances.iter().sum::<f64>() / m as f64
        };
        Ok(GaussianPrior {
            space,
            means,
            variances,
            default_variance,
            sources,
            floor,
        })
    }

    pub fn space(&self) -> &FeatureSpace {
        &self.space
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    /// σ²_av: variance assigned to features no source model uses.
    pub fn default_variance(&self) -> f64 {
        self.default_variance
    }

    pub fn sources(&self) -> usize {
        self.sources
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn is_single_source(&self) -> bool {
        self.sources == 1
    }

    /// Variances to regularize with; a single-source prior has none, so `c` stands in.
    pub fn resolved_variances(&self, c: f64) -> Vec<f64> {
        if self.is_single_source() {
            vec![c; self.variances.len()]
        } else {
            self.variances.clone()
        }
    }

    /// The prior mode as a model.
    pub fn mean_model(&self) -> FeatureModel {
        FeatureModel::new(self.space.clone(), self.means.clone()).expect("means are finite")
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(BufReader::new(file))
    }

    pub fn parse(reader: impl BufRead) -> Result<Self> {
        let mut lines = reader.lines().enumerate().map(|(i, l)| {
            l.map(|l| (i + 1, l))
                .map_err(|e| Error::parse(i + 1, e.to_string()))
        });
        let space = read_header(&mut lines, "prior")?;
        let sources: usize = header_field(&mut lines, "sources")?
            .parse()
            .map_err(|_| Error::parse(5, "invalid source count"))?;
        if sources == 0 {
            return Err(Error::parse(5, "source count must be positive"));
        }
        let default_variance = parse_finite(&header_field(&mut lines, "default_variance")?, 6)?;
        let floor = parse_finite(&header_field(&mut lines, "floor")?, 7)?;

        let m = space.num_features();
        let mut means = vec![0.0; m];
        let mut variances = vec![default_variance; m];
        let mut seen = vec![false; m];
        for line in lines {
            let (lineno, line) = line?;
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(Error::parse(lineno, "expected `key<TAB>mean<TAB>variance`"));
            }
            let index = space
                .parse_key(cols[0])
                .ok_or_else(|| Error::parse(lineno, format!("unknown feature `{}`", cols[0])))?;
            if std::mem::replace(&mut seen[index], true) {
                return Err(Error::parse(lineno, format!("duplicate feature `{}`", cols[0])));
            }
            means[index] = parse_finite(cols[1], lineno)?;
            variances[index] = match (cols[2], sources) {
                (SINGLE_SOURCE, 1) => floor,
                (SINGLE_SOURCE, _) => {
                    return Err(Error::parse(lineno, "single-source variance in a multi-source prior"))
                }
                (v, _) => parse_finite(v, lineno)?,
            };
            if variances[index] < floor {
                return Err(Error::parse(lineno, "variance below floor"));
            }
        }
        Ok(GaussianPrior {
            space,
            means,
            variances,
            default_variance,
            sources,
            floor,
        })
    }

    pub fn write_to(&self, out: &mut impl Write) -> std::io::Result<()> {
        write_header(out, "prior", &self.space)?;
        writeln!(out, "sources\t{}", self.sources)?;
        writeln!(out, "default_variance\t{}", self.default_variance)?;
        writeln!(out, "floor\t{}", self.floor)?;
        for (i, (mean, var)) in self.means.iter().zip(&self.variances).enumerate() {
            if self.is_single_source() {
                writeln!(out, "{}\t{}\t{}", self.space.key(i), mean, SINGLE_SOURCE)?;
            } else {
                writeln!(out, "{}\t{}\t{}", self.space.key(i), mean, var)?;
            }
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

pub fn estimate_prior(sources: &[FeatureModel]) -> Result<GaussianPrior> {
    estimate_prior_with_floor(sources, VARIANCE_FLOOR)
}

/// Mean and population variance of every weight across the source models.
///
/// A feature whose weight is zero in every source counts as unseen and gets
/// mean zero with the average variance of the seen features. Weights are
/// sorted before summation, so the result does not depend on source order.
pub fn estimate_prior_with_floor(sources: &[FeatureModel], floor: f64) -> Result<GaussianPrior> {
    let Some(first) = sources.first() else {
        return Err(Error::Empty("no source models"));
    };
    let space = first.space().clone();
    if let Some(other) = sources.iter().find(|s| s.space() != &space) {
        return Err(Error::FeatureSpaceMismatch(format!(
            "source models disagree: {} vs {} features",
            space.num_features(),
            other.space().num_features()
        )));
    }
    let k = sources.len() as f64;
    let m = space.num_features();
    let mut means = vec![0.0; m];
    let mut variances = vec![0.0; m];
    let mut seen = vec![false; m];
    let mut column = Vec::with_capacity(sources.len());
    for j in 0..m {
        column.clear();
        column.extend(sources.iter().map(|s| s.weights()[j]));
        if column.iter().all(|&w| w == 0.0) {
            continue;
        }
        column.sort_by(f64::total_cmp);
        let mean = column.iter().sum::<f64>() / k;
        let var = column.iter().map(|w| (w - mean) * (w - mean)).sum::<f64>() / k;
        means[j] = mean;
        variances[j] = var.max(floor);
        seen[j] = true;
    }
    let observed: Vec<f64> = (0..m).filter(|&j| seen[j]).map(|j| variances[j]).collect();
    let default_variance = if observed.is_empty() {
        floor
    } else {
        observed.iter().sum::<f64>() / observed.len() as f64
    };
    for j in (0..m).filter(|&j| !seen[j]) {
        variances[j] = default_variance;
    }
    Ok(GaussianPrior {
        space,
        means,
        variances,
        default_variance,
        sources: sources.len(),
        floor,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegularizerKind {
    L2,
    L2Prior,
    EmpGauss,
}

impl fmt::Display for RegularizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegularizerKind::L2 => "l2",
            RegularizerKind::L2Prior => "l2-prior",
            RegularizerKind::EmpGauss => "emp-gauss",
        })
    }
}

impl FromStr for RegularizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l2" => Ok(RegularizerKind::L2),
            "l2-prior" => Ok(RegularizerKind::L2Prior),
            "emp-gauss" => Ok(RegularizerKind::EmpGauss),
            _ => Err(Error::InvalidConfig(format!("unknown regularizer `{s}`"))),
        }
    }
}

/// A concave Gaussian penalty with per-feature centre and variance.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizedObjective {
    kind: RegularizerKind,
    c: f64,
    centre: Vec<f64>,
    variance: Vec<f64>,
}

impl RegularizedObjective {
    pub fn new(
        kind: RegularizerKind,
        c: f64,
        space: &FeatureSpace,
        prior: Option<&GaussianPrior>,
    ) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidConfig(format!("regularization strength must be positive, got {c}")));
        }
        let m = space.num_features();
        let (centre, variance) = match kind {
            RegularizerKind::L2 => (vec![0.0; m], vec![c; m]),
            RegularizerKind::L2Prior | RegularizerKind::EmpGauss => {
                let prior = prior.ok_or_else(|| Error::InvalidConfig(format!("{kind} needs a prior")))?;
                if prior.space() != space {
                    return Err(Error::FeatureSpaceMismatch("prior and model spaces differ".into()));
                }
                let variance = match kind {
                    RegularizerKind::L2Prior => vec![c; m],
                    _ => prior.resolved_variances(c),
                };
                if variance.iter().any(|v| !(*v > 0.0)) {
                    return Err(Error::InvalidConfig("prior variances must be positive".into()));
                }
                (prior.means().to_vec(), variance)
            }
        };
        Ok(RegularizedObjective {
            kind,
            c,
            centre,
            variance,
        })
    }

    pub fn l2(space: &FeatureSpace, c: f64) -> Result<Self> {
        Self::new(RegularizerKind::L2, c, space, None)
    }

    pub fn l2_prior(prior: &GaussianPrior, c: f64) -> Result<Self> {
        Self::new(RegularizerKind::L2Prior, c, prior.space(), Some(prior))
    }

    pub fn emp_gauss(prior: &GaussianPrior, c: f64) -> Result<Self> {
        Self::new(RegularizerKind::EmpGauss, c, prior.space(), Some(prior))
    }

    pub fn kind(&self) -> RegularizerKind {
        self.kind
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn centre(&self) -> &[f64] {
        &self.centre
    }

    pub fn variances(&self) -> &[f64] {
        &self.variance
    }

    pub fn dim(&self) -> usize {
        self.centre.len()
    }

    /// Σ_j (w_j - μ_j)² / (2σ_j²)
    pub fn penalty(&self, weights: &[f64]) -> f64 {
        weights
            .iter()
            .zip(&self.centre)
            .zip(&self.variance)
            .map(|((w, mu), var)| (w - mu) * (w - mu) / (2.0 * var))
            .sum()
    }

    /// ∂ penalty / ∂ w_j = (w_j - μ_j) / σ_j²
    pub fn penalty_gradient(&self, weights: &[f64]) -> Vec<f64> {
        weights
            .iter()
            .zip(&self.centre)
            .zip(&self.variance)
            .map(|((w, mu), var)| (w - mu) / var)
            .collect()
    }

    /// Where training starts: zero for L2, the prior mode otherwise.
    pub fn initial_weights(&self) -> Vec<f64> {
        self.centre.clone()
    }

    /// Binds the penalty to a training set.
    pub fn on<'a>(&'a self, data: &'a CrfData) -> Result<CrfObjective<'a>> {
        if data.space().num_features() != self.dim() {
            return Err(Error::FeatureSpaceMismatch(format!(
                "objective over {} features, data over {}",
                self.dim(),
                data.space().num_features()
            )));
        }
        Ok(CrfObjective { reg: self, data })
    }
}

/// Regularized conditional log-likelihood of a fixed data set.
#[derive(Debug, Clone, Copy)]
pub struct CrfObjective<'a> {
    reg: &'a RegularizedObjective,
    data: &'a CrfData,
}

impl Objective for CrfObjective<'_> {
    fn dim(&self) -> usize {
        self.reg.dim()
    }

    fn value(&self, weights: &[f64]) -> f64 {
        self.data.log_likelihood(weights) - self.reg.penalty(weights)
    }

    fn value_and_gradient(&self, weights: &[f64]) -> (f64, Vec<f64>) {
        let (ll, mut grad) = self.data.value_and_gradient(weights);
        for (g, p) in grad.iter_mut().zip(self.reg.penalty_gradient(weights)) {
            *g -= p;
        }
        (ll - self.reg.penalty(weights), grad)
    }
}

pub fn objective_value(
    obj: &RegularizedObjective,
    model: &FeatureModel,
    corpus: &TaggedCorpus,
    emb: &EmbeddingTable,
) -> Result<f64> {
    let data = CrfData::new(model.space(), corpus, emb)?;
    Ok(obj.on(&data)?.value(model.weights()))
}

pub fn objective_gradient(
    obj: &RegularizedObjective,
    model: &FeatureModel,
    corpus: &TaggedCorpus,
    emb: &EmbeddingTable,
) -> Result<Vec<f64>> {
    let data = CrfData::new(model.space(), corpus, emb)?;
    Ok(obj.on(&data)?.value_and_gradient(model.weights()).1)
}
