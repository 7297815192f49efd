use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use protoclust::{fit, mention_f1, predict, BregmanOptions, FitConfig, TagMap, Variant};

use crate::error::FormatError;
use crate::labels::{read_labels, read_tags, write_labels, write_tags, LabelFile};
use crate::model_file::{format_trace, read_model, write_linear, write_model};
use crate::synth::{gen_synth, SynthConfig};
use crate::{read_dmat, write_dmat};

#[derive(Debug, Parser)]
#[command(name = "protoclust", version, about = "Weakly-supervised prototype clustering for IO tagging")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit prototypes to a feature matrix and partial labels.
    Fit(FitArgs),
    /// Tag rows with the nearest prototype of a fitted model.
    Predict(PredictArgs),
    /// Mention-level precision, recall and F1 of predicted tags.
    Eval(EvalArgs),
    /// Generate a seeded synthetic corpus.
    Synth(SynthArgs),
    /// Write a fitted model as a linear scorer (weights DMAT, then bias DMAT).
    ExportLinear(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Hard,
    Soft,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    /// Tag names, one per line, `O` first.
    #[arg(long)]
    pub tags: PathBuf,
    #[arg(long, value_enum, default_value_t = VariantArg::Hard)]
    pub variant: VariantArg,
    /// Expected share of `O` rows, in [0, 1].
    #[arg(long)]
    pub ratio: Option<f64>,
    #[arg(long = "o-protos", default_value_t = 10)]
    pub o_protos: usize,
    #[arg(long, default_value_t = 10)]
    pub iters: usize,
    #[arg(long)]
    pub no_subspace: bool,
    #[arg(long, default_value_t = 100)]
    pub bregman_iters: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub bregman_tol: f64,
    /// Use plain alternating ratio/simplex projections in the soft E-step.
    #[arg(long)]
    pub plain_bregman: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the per-round trace as CSV.
    #[arg(long)]
    pub trace_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// TOML file with the generator settings.
    #[arg(long)]
    pub config: PathBuf,
    /// Writes `<prefix>.x.dmat`, `<prefix>.labels`, `<prefix>.gold` and
    /// `<prefix>.tags`.
    #[arg(long)]
    pub out_prefix: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Runs one command; anything printed for the user goes to `stdout`.
pub fn run(cli: Cli, stdout: &mut impl std::io::Write) -> Result<()> {
    match cli.command {
        Command::Fit(a) => run_fit(&a),
        Command::Predict(a) => run_predict(&a),
        Command::Eval(a) => run_eval(&a, stdout),
        Command::Synth(a) => run_synth(&a),
        Command::ExportLinear(a) => run_export(&a),
    }
}

/// Exit code for an error returned by [`run`].
pub fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<FormatError>() {
        Some(e) => e.exit_code(),
        None => match err.downcast_ref::<protoclust::Error>() {
            Some(_) => 9,
            None => 1,
        },
    }
}

/// Tag map for a tags file: `o_protos` prototypes for `O`, one per entity tag.
pub fn tag_map_for(tags: Vec<String>, o_protos: usize) -> protoclust::Result<TagMap> {
    let mut counts = vec![1; tags.len()];
    if let Some(c) = counts.first_mut() {
        *c = o_protos;
    }
    TagMap::with_counts(tags, &counts)
}

fn run_fit(a: &FitArgs) -> Result<()> {
    let cfg = FitConfig {
        variant: match a.variant {
            VariantArg::Hard => Variant::Hard,
            VariantArg::Soft => Variant::Soft,
        },
        ratio: a.ratio,
        o_prototypes: a.o_protos,
        acs_iters: a.iters,
        use_subspace: !a.no_subspace,
        bregman: BregmanOptions {
            max_iters: a.bregman_iters,
            tol: a.bregman_tol,
            accelerate: !a.plain_bregman,
        },
        ..FitConfig::default()
    };
    cfg.validate()?;
    let phi = tag_map_for(read_tags(&a.tags)?, cfg.o_prototypes)?;
    let x = read_dmat(&a.x)?;
    let labels = read_labels(&a.labels, &phi)?;
    let out = fit(&x, &labels.labels, &phi, &cfg)?;
    write_model(&a.out, &out.model)?;
    if let Some(path) = &a.trace_csv {
        write_text(path, &format_trace(&out.model.trace))?;
    }
    Ok(())
}

fn run_predict(a: &PredictArgs) -> Result<()> {
    let model = read_model(&a.model)?;
    let x = read_dmat(&a.x)?;
    let tags = predict(&x, &model)?;
    let file = LabelFile::single(tags.into_iter().map(Some).collect());
    write_labels(&a.out, &file, &model.tag_map)?;
    Ok(())
}

fn run_eval(a: &EvalArgs, stdout: &mut impl std::io::Write) -> Result<()> {
    // Tag indices only need to agree between the two files, so the names
    // seen in them define the inventory.
    let phi = inventory_of(&[&a.gold, &a.pred])?;
    let gold = read_labels(&a.gold, &phi)?;
    let pred = read_labels(&a.pred, &phi)?.with_segmentation(&gold.sentence_lengths)?;
    let s = mention_f1(&gold.sequences()?, &pred.sequences()?)?;
    writeln!(stdout, "{:?} {:?} {:?}", s.precision, s.recall, s.f1)?;
    Ok(())
}

fn inventory_of(paths: &[&Path]) -> Result<TagMap> {
    let mut names = vec![protoclust::O_TAG.to_owned()];
    for p in paths {
        let text = fs::read_to_string(p).map_err(FormatError::io(*p))?;
        for line in text.lines().map(str::trim) {
            if !line.is_empty() && line != crate::labels::UNLABELED && !names.iter().any(|n| n == line) {
                names.push(line.to_owned());
            }
        }
    }
    let counts = vec![1; names.len()];
    Ok(TagMap::with_counts(names, &counts)?)
}

fn run_synth(a: &SynthArgs) -> Result<()> {
    let text = fs::read_to_string(&a.config).map_err(FormatError::io(&a.config))?;
    let cfg = SynthConfig::from_toml(&text)?;
    let data = gen_synth(&cfg)?;
    let phi = tag_map_for(data.tags.clone(), 1)?;
    let prefix = a.out_prefix.as_os_str().to_string_lossy();
    let path = |suffix: &str| PathBuf::from(format!("{prefix}.{suffix}"));
    write_dmat(path("x.dmat"), &data.x)?;
    let labels = LabelFile {
        labels: data.labels.clone(),
        sentence_lengths: data.sentence_lengths.clone(),
    };
    write_labels(path("labels"), &labels, &phi)?;
    let gold = LabelFile {
        labels: data.gold.iter().copied().map(Some).collect(),
        sentence_lengths: data.sentence_lengths.clone(),
    };
    write_labels(path("gold"), &gold, &phi)?;
    write_tags(path("tags"), &data.tags)?;
    Ok(())
}

fn run_export(a: &ExportArgs) -> Result<()> {
    let model = read_model(&a.model)?;
    write_linear(&a.out, &model.linear_model()?)?;
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
