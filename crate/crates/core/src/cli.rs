//! Command-line front end.
//!
//! Every option can also come from a TOML file given with `--config`; keys are
//! the long flag names and flags win over the file. Exit status is 0 on
//! success, 1 for usage errors, 2 for data errors and 3 for numerical failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::corpus::{macro_average, majority_vote, read_sentences, token_accuracy, ProjectionTable, TaggedCorpus, Tagset};
use crate::crf::{tag_corpus, FeatureModel};
use crate::diagnostics::{integrated_variance, rademacher_estimate, write_report};
use crate::embeddings::{build_embeddings, EmbeddingTable, VerseCorpus, DEFAULT_DIMS};
use crate::error::{Error, Result};
use crate::features::FeatureSpace;
use crate::optimizer::OptimizerConfig;
use crate::perceptron::PerceptronConfig;
use crate::priors::{estimate_prior_with_floor, GaussianPrior, VARIANCE_FLOOR};
use crate::systems::{System, SystemKind};

#[derive(Debug, Parser)]
#[command(name = "xltag", version, about = "Cross-lingual POS tagging with empirical Gaussian priors")]
pub struct Cli {
    /// TOML file with default values for any long option.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random choice [default: 42].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads [default: 1]. Results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build word embeddings from a multi-parallel verse corpus.
    Embed {
        /// Verse file: `verse_id<TAB>lang<TAB>tokens`.
        #[arg(long)]
        verses: PathBuf,
        /// Embedding file to write.
        #[arg(long)]
        out: PathBuf,
        /// Embedding dimension [default: 40].
        #[arg(long)]
        dims: Option<usize>,
    },
    /// Merge projected vote files into a majority-vote training corpus.
    Project {
        /// Per-source vote files.
        #[arg(long, required = true, num_args = 1..)]
        votes: Vec<PathBuf>,
        /// Two-column training corpus to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate a Gaussian prior from source-language models.
    EstimatePriors {
        /// Source model files.
        #[arg(long, required = true, num_args = 1..)]
        models: Vec<PathBuf>,
        /// Prior file to write.
        #[arg(long)]
        out: PathBuf,
        /// Variance floor [default: 1e-6].
        #[arg(long)]
        floor: Option<f64>,
    },
    /// Train a tagger.
    Train {
        #[command(flatten)]
        learner: LearnerArgs,
        /// Two-column training text.
        #[arg(long)]
        corpus: PathBuf,
        /// Model file to write.
        #[arg(long)]
        out: PathBuf,
        /// Optimizer or epoch trace [default: OUT.trace].
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Tag raw or two-column text with a trained model.
    Tag {
        /// Model file from `train`.
        #[arg(long)]
        model: PathBuf,
        /// Raw text, or two-column text whose tags are ignored.
        #[arg(long)]
        corpus: PathBuf,
        /// Two-column output.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        embeddings: EmbeddingArgs,
    },
    /// Token accuracy per prediction file and the macro-average.
    Eval {
        /// Tagged prediction files.
        #[arg(long, num_args = 1..)]
        pred: Vec<PathBuf>,
        /// Gold files, one per prediction.
        #[arg(long, num_args = 1..)]
        gold: Vec<PathBuf>,
        /// Lines of `name<TAB>pred<TAB>gold`, paths relative to the manifest.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Also write the report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Overfitting diagnostics.
    Diagnose {
        kind: DiagnosticKind,
        #[command(flatten)]
        learner: LearnerArgs,
        /// Training text; tags are ignored for `rademacher`.
        #[arg(long)]
        corpus: PathBuf,
        /// Held-out text for `variance`.
        #[arg(long)]
        validation: Option<PathBuf>,
        /// Report file to write.
        #[arg(long)]
        out: PathBuf,
        /// Random-label trials [default: 10].
        #[arg(long)]
        trials: Option<usize>,
        /// Sentences per subsample [default: 20].
        #[arg(long)]
        subsample: Option<usize>,
        /// Number of subsamples [default: 4].
        #[arg(long)]
        subsamples: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DiagnosticKind {
    Rademacher,
    Variance,
}

#[derive(Debug, Args)]
pub struct EmbeddingArgs {
    /// Embedding file from `embed`.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Keep only `LANG:` entries of the embedding file, without the prefix.
    #[arg(long)]
    pub lang: Option<String>,
}

#[derive(Debug, Args)]
pub struct LearnerArgs {
    /// crf-l2, crf-l2prior, crf-empgauss, perc-l2 or perc-noise.
    #[arg(long)]
    pub learner: Option<String>,
    /// Prior file from `estimate-priors`; required by the prior-based learners.
    #[arg(long)]
    pub prior: Option<PathBuf>,
    /// Regularization strength [default: 1].
    #[arg(long)]
    pub c: Option<f64>,
    #[command(flatten)]
    pub embeddings: EmbeddingArgs,
    /// L-BFGS iteration cap [default: 200].
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// L-BFGS memory [default: 10].
    #[arg(long)]
    pub memory: Option<usize>,
    /// Relative gradient tolerance [default: 1e-5].
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Perceptron epochs [default: 10].
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Perceptron weight decay [default: 1e-6].
    #[arg(long)]
    pub decay: Option<f64>,
    /// Shuffle perceptron instances every epoch.
    #[arg(long)]
    pub shuffle: bool,
}

/// Values read from `--config`.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub dims: Option<usize>,
    pub floor: Option<f64>,
    pub learner: Option<String>,
    pub prior: Option<PathBuf>,
    pub c: Option<f64>,
    pub embeddings: Option<PathBuf>,
    pub lang: Option<String>,
    pub max_iterations: Option<usize>,
    pub memory: Option<usize>,
    pub tolerance: Option<f64>,
    pub epochs: Option<usize>,
    pub decay: Option<f64>,
    pub shuffle: Option<bool>,
    pub trials: Option<usize>,
    pub subsample: Option<usize>,
    pub subsamples: Option<usize>,
}

impl FileConfig {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }
}

/// Parses `args` (program name first), runs the command and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("xltag: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => FileConfig::read(path)?,
        None => FileConfig::default(),
    };
    let seed = cli.seed.or(file.seed).unwrap_or(42);
    let threads = cli.threads.or(file.threads).unwrap_or(1);
    if threads == 0 {
        return Err(Error::InvalidConfig("--threads must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    pool.install(|| dispatch(cli.command, &file, seed))
}

fn dispatch(command: Command, file: &FileConfig, seed: u64) -> Result<()> {
    match command {
        Command::Embed { verses, out, dims } => {
            let dims = dims.or(file.dims).unwrap_or(DEFAULT_DIMS);
            let built = build_embeddings(&VerseCorpus::read(&verses)?, dims, seed)?;
            built.table.write(&out)?;
            println!("words\t{}", built.table.len());
            println!("dims\t{dims}");
            Ok(())
        }
        Command::Project { votes, out } => {
            let tables = votes.iter().map(ProjectionTable::read).collect::<Result<Vec<_>>>()?;
            let corpus = majority_vote(&ProjectionTable::merge(&tables)?, Tagset);
            corpus.write(&out)?;
            println!("sentences\t{}", corpus.len());
            println!("tokens\t{}", corpus.num_tokens());
            Ok(())
        }
        Command::EstimatePriors { models, out, floor } => {
            let floor = floor.or(file.floor).unwrap_or(VARIANCE_FLOOR);
            let models = models.iter().map(FeatureModel::read).collect::<Result<Vec<_>>>()?;
            let prior = estimate_prior_with_floor(&models, floor)?;
            prior.write(&out)?;
            println!("k\t{}", prior.sources());
            println!("m\t{}", prior.space().num_features());
            println!("default_variance\t{}", prior.default_variance());
            Ok(())
        }
        Command::Train {
            learner,
            corpus,
            out,
            trace,
        } => {
            let system = build_system(&learner, file, seed)?;
            let corpus = TaggedCorpus::read(&corpus)?;
            let (model, log) = system.fit(&corpus, seed)?;
            model.write(&out)?;
            let trace = trace.unwrap_or_else(|| with_suffix(&out, ".trace"));
            let mut buf = Vec::new();
            log.write_to(&mut buf).expect("writing to memory");
            fs::write(&trace, buf).map_err(|e| Error::io(&trace, e))?;
            Ok(())
        }
        Command::Tag {
            model,
            corpus,
            out,
            embeddings,
        } => {
            let model = FeatureModel::read(&model)?;
            let emb = load_embeddings(&embeddings, file, Some(model.space().embed_dim()))?;
            let sentences = read_sentences(&corpus)?;
            let blank = TaggedCorpus::new(
                sentences
                    .into_iter()
                    .map(|s| {
                        let n = s.len();
                        crate::corpus::TaggedSentence::new(s, vec![Tagset::X; n])
                    })
                    .collect::<Result<Vec<_>>>()?,
            );
            tag_corpus(&model, &blank, &emb)?.write(&out)
        }
        Command::Eval {
            pred,
            gold,
            manifest,
            out,
        } => {
            let mut pairs: Vec<(String, PathBuf, PathBuf)> = Vec::new();
            if pred.len() != gold.len() {
                return Err(Error::InvalidConfig("--pred and --gold need the same number of files".into()));
            }
            for (p, g) in pred.into_iter().zip(gold) {
                let name = p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned());
                pairs.push((name, p, g));
            }
            if let Some(manifest) = manifest {
                pairs.extend(read_manifest(&manifest)?);
            }
            if pairs.is_empty() {
                return Err(Error::InvalidConfig("nothing to evaluate".into()));
            }
            let mut report = String::new();
            let mut scores = Vec::new();
            for (name, p, g) in &pairs {
                let acc = token_accuracy(&TaggedCorpus::read(p)?, &TaggedCorpus::read(g)?)?;
                report.push_str(&format!("{name}\t{acc}\n"));
                scores.push(acc);
            }
            report.push_str(&format!("macro_average\t{}\n", macro_average(&scores)?));
            print!("{report}");
            if let Some(out) = out {
                fs::write(&out, report).map_err(|e| Error::io(&out, e))?;
            }
            Ok(())
        }
        Command::Diagnose {
            kind,
            learner,
            corpus,
            validation,
            out,
            trials,
            subsample,
            subsamples,
        } => {
            let system = build_system(&learner, file, seed)?;
            let report = match kind {
                DiagnosticKind::Rademacher => {
                    let trials = trials.or(file.trials).unwrap_or(10);
                    rademacher_estimate(&system, &read_sentences(&corpus)?, trials, seed)?.to_string()
                }
                DiagnosticKind::Variance => {
                    let validation = validation
                        .ok_or_else(|| Error::InvalidConfig("variance needs --validation".into()))?;
                    let l = subsample.or(file.subsample).unwrap_or(20);
                    let k = subsamples.or(file.subsamples).unwrap_or(4);
                    let train = TaggedCorpus::read(&corpus)?;
                    integrated_variance(&system, &train, &read_sentences(&validation)?, l, k, seed)?.to_string()
                }
            };
            write_report(&out, &report)?;
            print!("{report}");
            std::io::stdout().flush().ok();
            Ok(())
        }
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn read_manifest(path: &Path) -> Result<Vec<(String, PathBuf, PathBuf)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(Error::parse(i + 1, "expected `name<TAB>pred<TAB>gold`"));
        }
        out.push((cols[0].to_string(), base.join(cols[1]), base.join(cols[2])));
    }
    Ok(out)
}

fn load_embeddings(args: &EmbeddingArgs, file: &FileConfig, dim: Option<usize>) -> Result<EmbeddingTable> {
    let path = args.embeddings.as_ref().or(file.embeddings.as_ref());
    let lang = args.lang.as_ref().or(file.lang.as_ref());
    let table = match path {
        Some(path) => {
            let table = EmbeddingTable::read(path)?;
            match lang {
                Some(lang) => table.for_language(lang),
                None => table,
            }
        }
        None => EmbeddingTable::empty(dim.unwrap_or(0)),
    };
    if let Some(d) = dim {
        if table.dim() != d {
            return Err(Error::FeatureSpaceMismatch(format!(
                "model uses {d}-dimensional embeddings, file has {}",
                table.dim()
            )));
        }
    }
    Ok(table)
}

fn build_system(args: &LearnerArgs, file: &FileConfig, seed: u64) -> Result<System> {
    let kind: SystemKind = args
        .learner
        .as_ref()
        .or(file.learner.as_ref())
        .ok_or_else(|| Error::InvalidConfig("--learner is required".into()))?
        .parse()?;
    let c = args.c.or(file.c).unwrap_or(1.0);
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidConfig(format!("C must be positive, got {c}")));
    }
    let emb = load_embeddings(&args.embeddings, file, None)?;
    let space = FeatureSpace::universal(emb.dim());
    let defaults = OptimizerConfig::default();
    let optimizer = OptimizerConfig {
        max_iterations: args.max_iterations.or(file.max_iterations).unwrap_or(defaults.max_iterations),
        memory: args.memory.or(file.memory).unwrap_or(defaults.memory),
        gradient_tolerance: args.tolerance.or(file.tolerance).unwrap_or(defaults.gradient_tolerance),
        ..defaults
    };
    optimizer.validate()?;
    let defaults = PerceptronConfig::default();
    let perceptron = PerceptronConfig {
        epochs: args.epochs.or(file.epochs).unwrap_or(defaults.epochs),
        decay: args.decay.or(file.decay).unwrap_or(defaults.decay),
        shuffle: args.shuffle || file.shuffle.unwrap_or(false),
        seed,
    };
    perceptron.validate()?;
    let mut system = System::new(kind, space, emb)
        .with_c(c)
        .with_optimizer(optimizer)
        .with_perceptron(perceptron);
    match args.prior.as_ref().or(file.prior.as_ref()) {
        Some(path) => {
            let prior = GaussianPrior::read(path)?;
            if prior.space().embed_dim() != system.space.embed_dim() {
                return Err(Error::FeatureSpaceMismatch(format!(
                    "prior uses {}-dimensional embeddings, the embedding file {}",
                    prior.space().embed_dim(),
                    system.space.embed_dim()
                )));
            }
            system = system.with_prior(prior);
        }
        None if kind.needs_prior() => {
            return Err(Error::InvalidConfig(format!("{kind} needs --prior")));
        }
        None => {}
    }
    Ok(system)
}
