//! The `vsc` command-line tool.
//!
//! Every subcommand is a pure function of the config file, the command-line
//! overrides and the input files. Exit codes: 0 success, 1 usage error,
//! 2 data error, 3 numeric abort.

pub mod config;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;
use vsc_core::analysis::emit::{self, Artifact, Format};
use vsc_core::analysis::{self, AnalysisError, Metric};
use vsc_core::data::idx::{read_maybe_gz, verify_checksum};
use vsc_core::data::{parse_idx_images, parse_idx_labels, DataError};
use vsc_core::trainer::{self, load_checkpoint, CheckpointError, TrainError, TrainingLog, LOG_HEADER};
use vsc_core::{Checkpoint, LabeledDataset, VscModel};

pub use config::RunConfig;
use config::Split;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("data: {0}")]
    Data(String),
    #[error("numeric: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(format!("data ingest: {e}"))
    }
}

impl From<CheckpointError> for CliError {
    fn from(e: CheckpointError) -> Self {
        CliError::Data(format!("checkpoint: {e}"))
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Data(d) => d.into(),
            TrainError::Checkpoint(c) => c.into(),
            TrainError::InvalidConfig(msg) => CliError::Usage(format!("trainer: {msg}")),
            e if e.is_numeric() => CliError::Numeric(format!("trainer: {e}")),
            e => CliError::Data(format!("trainer: {e}")),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::DimOutOfRange { .. } | AnalysisError::TooFewSteps(_) | AnalysisError::BadThreshold(_) | AnalysisError::NoPairs => {
                CliError::Usage(format!("analysis: {e}"))
            }
            e => CliError::Data(format!("analysis: {e}")),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "vsc", version, about = "Train and inspect class-aligned sparse-coding VAEs")]
#[command(after_help = "Any config leaf can be overridden as --dotted.path VALUE (e.g. --train.epochs 5); \
--seed, --lambda-max and --out-dir are shorthands for --train.seed, --train.sched.lambda_max and --out_dir.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct WithCheckpoint {
    #[command(flatten)]
    common: Common,
    /// Checkpoint to analyse; defaults to the run directory's checkpoint.bin.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check IDX headers, image/label agreement and optional checksums.
    VerifyData(Common),
    /// Train and write checkpoint.bin and log.csv to the run directory.
    Train {
        #[command(flatten)]
        common: Common,
        /// Continue from this checkpoint instead of starting fresh.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Print the objective breakdown and alignment score on the analysis split.
    Eval(WithCheckpoint),
    /// Write the class × dimension mean-γ matrix as CSV (and optionally PGM).
    Heatmap {
        #[command(flatten)]
        ckpt: WithCheckpoint,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also render the matrix as a PGM image here.
        #[arg(long)]
        pgm: Option<PathBuf>,
    },
    /// Write class-similarity matrices (pearson, cosine_distance, euclidean).
    Similarity {
        #[command(flatten)]
        ckpt: WithCheckpoint,
        /// Only this metric; all three by default.
        #[arg(long)]
        metric: Option<String>,
        /// Output directory; defaults to the run directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render latent traversals as PGM strips.
    Traverse {
        #[command(flatten)]
        ckpt: WithCheckpoint,
        /// Dimension to sweep (repeatable); every dimension by default.
        #[arg(long = "dim")]
        dims: Vec<usize>,
        /// Output directory; defaults to the run directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-emit columns of a training log as CSV.
    Curves {
        #[command(flatten)]
        common: Common,
        /// Log to read; defaults to the run directory's log.csv.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Comma-separated columns; all by default.
        #[arg(long)]
        columns: Option<String>,
        /// Write here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Runs the tool on `argv` (without the program name), printing results to
/// standard output and returning the exit code.
pub fn run(argv: &[String]) -> i32 {
    let mut out = std::io::stdout().lock();
    match run_to(argv, &mut out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// As [`run`], but writes results to `out` and returns the error.
pub fn run_to(argv: &[String], out: &mut dyn std::io::Write) -> Result<(), CliError> {
    let (rest, overrides) = config::extract_overrides(argv)?;
    let cli = match Cli::try_parse_from(std::iter::once("vsc".to_owned()).chain(rest)) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            write!(out, "{e}").map_err(io_out)?;
            return Ok(());
        }
        Err(e) => {
            let msg = e.render().to_string();
            return Err(CliError::Usage(msg.trim_start_matches("error: ").trim_end().to_owned()));
        }
    };
    let load = |c: &Common| RunConfig::load(c.config.as_deref(), &overrides);
    match cli.command {
        Command::VerifyData(c) => verify_data(&load(&c)?, out),
        Command::Train { common, resume } => train(&load(&common)?, resume.as_deref(), out),
        Command::Eval(w) => eval(&load(&w.common)?, w.checkpoint.as_deref(), out),
        Command::Heatmap { ckpt, out: path, pgm } => {
            heatmap(&load(&ckpt.common)?, ckpt.checkpoint.as_deref(), path, pgm, out)
        }
        Command::Similarity { ckpt, metric, out: dir } => {
            similarity(&load(&ckpt.common)?, ckpt.checkpoint.as_deref(), metric, dir, out)
        }
        Command::Traverse { ckpt, dims, out: dir } => {
            traverse(&load(&ckpt.common)?, ckpt.checkpoint.as_deref(), dims, dir, out)
        }
        Command::Curves {
            common,
            log,
            columns,
            out: path,
        } => curves(&load(&common)?, log, columns, path, out),
    }
}

fn io_out(e: std::io::Error) -> CliError {
    CliError::Data(format!("cannot write output: {e}"))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))
}

fn load_split(config: &RunConfig, split: Split) -> Result<LabeledDataset, CliError> {
    let d = &config.data;
    let (images, labels) = match split {
        Split::Train => (&d.train_images, &d.train_labels),
        Split::Test => (&d.test_images, &d.test_labels),
    };
    let ds = LabeledDataset::load(images, labels, config.tag()?)?;
    Ok(match (split, d.limit) {
        (Split::Train, Some(n)) => ds.take(n),
        _ => ds,
    })
}

fn open_model(config: &RunConfig, path: Option<&Path>) -> Result<(Checkpoint, VscModel), CliError> {
    let path = path.map_or_else(|| config.run_dir().join("checkpoint.bin"), Path::to_path_buf);
    let ckpt = load_checkpoint(&path)?;
    let model = VscModel::from_params(ckpt.config.model, ckpt.params.clone())
        .map_err(|e| CliError::Data(format!("checkpoint {}: {e}", path.display())))?;
    Ok((ckpt, model))
}

fn verify_data(config: &RunConfig, out: &mut dyn std::io::Write) -> Result<(), CliError> {
    let d = &config.data;
    for (name, images, labels) in [
        ("train", &d.train_images, &d.train_labels),
        ("test", &d.test_images, &d.test_labels),
    ] {
        let x = parse_idx_images(&read_maybe_gz(images)?, true)?;
        let y = parse_idx_labels(&read_maybe_gz(labels)?, true)?;
        if x.rows() != y.len() {
            return Err(DataError::CountMismatch {
                images: x.rows(),
                labels: y.len(),
            }
            .into());
        }
        let mut counts = [0usize; 10];
        y.iter().for_each(|&l| counts[l as usize] += 1);
        writeln!(out, "{name}: {} images, per-class counts {counts:?}", x.rows()).map_err(io_out)?;
    }
    if let Some(manifest) = &d.checksums {
        let text = std::fs::read_to_string(manifest).map_err(|source| DataError::Io {
            path: manifest.clone(),
            source,
        })?;
        let base = manifest.parent().unwrap_or(Path::new(""));
        let mut checked = 0;
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (hash, file) = line
                .split_once(char::is_whitespace)
                .ok_or_else(|| CliError::Data(format!("malformed checksum line {line:?}")))?;
            verify_checksum(&base.join(file.trim_start().trim_start_matches('*')), hash)?;
            checked += 1;
        }
        writeln!(out, "checksums: {checked} files ok").map_err(io_out)?;
    }
    Ok(())
}

fn train(config: &RunConfig, resume: Option<&Path>, out: &mut dyn std::io::Write) -> Result<(), CliError> {
    let dataset = load_split(config, Split::Train)?;
    let dir = config.run_dir();
    match resume {
        None => {
            trainer::train(config.train.clone(), &dataset, Some(&dir))?;
        }
        Some(path) => {
            let ckpt = load_checkpoint(path)?;
            if ckpt.config.seed != config.train.seed {
                return Err(CliError::Usage(format!(
                    "checkpoint seed {} differs from configured seed {}",
                    ckpt.config.seed, config.train.seed
                )));
            }
            let prior_path = path.with_file_name("log.csv");
            let mut prior = if prior_path.exists() {
                TrainingLog::load(&prior_path)?
            } else {
                TrainingLog::default()
            };
            prior.records.retain(|r| r.epoch <= ckpt.epoch);
            let mut t = trainer::Trainer::from_checkpoint(ckpt)?;
            t.set_epochs(config.train.epochs);
            trainer::run_to_end(&mut t, &dataset, Some(&dir), &prior)?;
        }
    }
    writeln!(out, "{}", dir.display()).map_err(io_out)
}

fn eval(config: &RunConfig, ckpt: Option<&Path>, out: &mut dyn std::io::Write) -> Result<(), CliError> {
    let (ckpt, model) = open_model(config, ckpt)?;
    let dataset = load_split(config, config.analysis.split)?;
    let b = trainer::evaluate(&model, &dataset, &ckpt.config, ckpt.epoch.max(1))?;
    let align = analysis::alignment_score(&model, &dataset, config.analysis.pairs_per_class, ckpt.config.seed)?;
    writeln!(
        out,
        "epoch {}\nrecon {}\nkl {}\nneg_elbo {}\njsd {}\nlambda {}\ntotal {}\nalignment {}",
        ckpt.epoch,
        b.recon,
        b.kl,
        b.neg_elbo(),
        b.jsd,
        b.lambda,
        b.total,
        align
    )
    .map_err(io_out)
}

fn heatmap(
    config: &RunConfig,
    ckpt: Option<&Path>,
    path: Option<PathBuf>,
    pgm: Option<PathBuf>,
    out: &mut dyn std::io::Write,
) -> Result<(), CliError> {
    let (_, model) = open_model(config, ckpt)?;
    let m = analysis::class_gamma_matrix(&model, &load_split(config, config.analysis.split)?)?;
    let path = match path {
        Some(p) => p,
        None => {
            create_dir(&config.run_dir())?;
            config.run_dir().join("heatmap.csv")
        }
    };
    emit::emit(Artifact::ClassProbs(&m), &path, Format::Csv)?;
    writeln!(out, "{}", path.display()).map_err(io_out)?;
    if let Some(p) = pgm {
        emit::emit(Artifact::ClassProbs(&m), &p, Format::Pgm)?;
        writeln!(out, "{}", p.display()).map_err(io_out)?;
    }
    let sets = analysis::active_dimension_sets(&m, config.analysis.threshold)?;
    writeln!(out, "global dimensions {:?}", sets.global).map_err(io_out)?;
    for (c, s) in sets.class_specific.iter().filter(|(_, s)| !s.is_empty()) {
        writeln!(out, "class {c} specific dimensions {s:?}").map_err(io_out)?;
    }
    Ok(())
}

fn similarity(
    config: &RunConfig,
    ckpt: Option<&Path>,
    metric: Option<String>,
    dir: Option<PathBuf>,
    out: &mut dyn std::io::Write,
) -> Result<(), CliError> {
    let metrics: Vec<Metric> = match metric {
        Some(m) => vec![m.parse().map_err(|e: AnalysisError| CliError::Usage(e.to_string()))?],
        None => Metric::ALL.to_vec(),
    };
    let (_, model) = open_model(config, ckpt)?;
    let dataset = load_split(config, config.analysis.split)?;
    let m = analysis::class_gamma_matrix(&model, &dataset)?;
    let dir = dir.unwrap_or_else(|| config.run_dir());
    create_dir(&dir)?;
    for metric in metrics {
        let s = analysis::similarity_matrix(&m, metric)?;
        let path = dir.join(format!("similarity_{metric}.csv"));
        emit::emit(Artifact::Similarity(&s), &path, Format::Csv)?;
        writeln!(out, "{}", path.display()).map_err(io_out)?;
        if !s.degenerate.is_empty() {
            writeln!(out, "degenerate rows (pearson undefined): {:?}", s.degenerate).map_err(io_out)?;
        }
        if metric == Metric::Pearson {
            if let Some((within, cross)) = analysis::category_contrast(&s, dataset.tag()) {
                writeln!(out, "pearson within-category {within:.6} cross-category {cross:.6}").map_err(io_out)?;
            }
        }
    }
    Ok(())
}

fn traverse(
    config: &RunConfig,
    ckpt: Option<&Path>,
    dims: Vec<usize>,
    dir: Option<PathBuf>,
    out: &mut dyn std::io::Write,
) -> Result<(), CliError> {
    let (_, model) = open_model(config, ckpt)?;
    let dataset = load_split(config, config.analysis.split)?;
    let a = &config.analysis;
    if a.traverse_sample >= dataset.len() {
        return Err(CliError::Usage(format!(
            "analysis.traverse_sample {} is beyond the {} images of the split",
            a.traverse_sample,
            dataset.len()
        )));
    }
    let dims = if dims.is_empty() {
        (0..model.config().latent_dim).collect()
    } else {
        dims
    };
    let dir = dir.unwrap_or_else(|| config.run_dir());
    create_dir(&dir)?;
    let x = dataset.image(a.traverse_sample);
    for dim in dims {
        let grid = analysis::latent_traversal(&model, x, dim, a.traverse_lo, a.traverse_hi, a.traverse_steps)?;
        let path = dir.join(format!("traverse_dim{dim}.pgm"));
        emit::emit(Artifact::Traversal(&grid), &path, Format::Pgm)?;
        writeln!(out, "{}", path.display()).map_err(io_out)?;
    }
    Ok(())
}

fn curves(
    config: &RunConfig,
    log: Option<PathBuf>,
    columns: Option<String>,
    path: Option<PathBuf>,
    out: &mut dyn std::io::Write,
) -> Result<(), CliError> {
    let log_path = log.unwrap_or_else(|| config.run_dir().join("log.csv"));
    let log = TrainingLog::load(&log_path)?;
    let header: Vec<&str> = LOG_HEADER.split(',').collect();
    let wanted: Vec<usize> = match columns {
        None => (0..header.len()).collect(),
        Some(spec) => spec
            .split(',')
            .map(|c| {
                header
                    .iter()
                    .position(|h| *h == c.trim())
                    .ok_or_else(|| CliError::Usage(format!("unknown log column {c:?}; have {LOG_HEADER}")))
            })
            .collect::<Result<_, _>>()?,
    };
    let full = log.to_csv();
    let mut text = String::new();
    for line in full.lines() {
        let fields: Vec<&str> = line.split(',').collect();
        let picked: Vec<&str> = wanted.iter().map(|&i| fields[i]).collect();
        text.push_str(&picked.join(","));
        text.push('\n');
    }
    match path {
        Some(p) => std::fs::write(&p, text).map_err(io_out),
        None => out.write_all(text.as_bytes()).map_err(io_out),
    }
}
