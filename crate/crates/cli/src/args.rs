use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use repgeo::profile::DEFAULT_PEAK_MARGIN;
use repgeo::synth::ManifoldKind;
use serde::{Deserialize, Serialize};

/// Intrinsic dimension and information imbalance of layer representations.
///
/// Every command writes `report.json` and its CSV outputs under `--out`.
/// `REPGEO_THREADS` caps the worker pool.
#[derive(Debug, Parser)]
#[command(name = "repgeo", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Intrinsic dimension of a tensor file, or the per-layer profile of a run.
    Id(IdArgs),
    /// Information imbalance profiles of a run.
    Ii(IiArgs),
    /// Information imbalance between the same layer of two runs (or two tensor files).
    Cross(CrossArgs),
    /// Transition report over runs with different bottleneck sizes.
    Sweep(SweepArgs),
    /// Sample a synthetic manifold with known intrinsic dimension.
    Synth(SynthArgs),
    /// Every profile of every epoch of every run, plus training series.
    Report(ReportArgs),
    /// Re-execute a report from its recorded parameters and compare results.
    #[serde(skip)]
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct Sampling {
    /// Use this many randomly chosen samples instead of all of them.
    #[arg(long)]
    pub n: Option<usize>,
    /// Seed for the sample choice.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct IdArgs {
    /// Run directory, manifest file, or `.rga` tensor file.
    pub input: PathBuf,
    /// Epoch to analyse; defaults to the last dumped epoch.
    #[arg(long)]
    pub epoch: Option<u32>,
    /// Fraction of the largest neighbor-distance ratios to drop.
    #[arg(long, default_value_t = 0.0)]
    pub discard_fraction: f64,
    #[command(flatten)]
    pub sampling: Sampling,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IiMode {
    /// delta(layer -> input) for every layer.
    ToInput,
    /// Relative difference between adjacent layers.
    Adjacent,
    /// Both directions between layers `--a` and `--b`.
    Pair,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct IiArgs {
    pub run: PathBuf,
    #[arg(long)]
    pub epoch: Option<u32>,
    #[arg(long, value_enum)]
    pub mode: IiMode,
    /// First layer of a pair.
    #[arg(long, required_if_eq("mode", "pair"))]
    pub a: Option<usize>,
    /// Second layer of a pair.
    #[arg(long, required_if_eq("mode", "pair"))]
    pub b: Option<usize>,
    #[command(flatten)]
    pub sampling: Sampling,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CrossArgs {
    /// Run directory or `.rga` tensor file.
    pub a: PathBuf,
    /// Run directory or `.rga` tensor file.
    pub b: PathBuf,
    /// Layer compared in both runs; ignored for tensor files.
    #[arg(long, default_value_t = 5)]
    pub layer: usize,
    /// Epoch; defaults to the last epoch of each run.
    #[arg(long)]
    pub epoch: Option<u32>,
    #[command(flatten)]
    pub sampling: Sampling,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    /// One run directory per bottleneck size.
    #[arg(required = true)]
    pub runs: Vec<PathBuf>,
    /// Epoch; defaults to the last epoch of each run.
    #[arg(long)]
    pub epoch: Option<u32>,
    /// Relative margin a hunchback peak must clear over its flanks.
    #[arg(long, default_value_t = DEFAULT_PEAK_MARGIN)]
    pub tau: f64,
    #[arg(long, default_value_t = 0.0)]
    pub discard_fraction: f64,
    #[command(flatten)]
    pub sampling: Sampling,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Hypercube,
    Hypersphere,
    Gaussian,
    /// Pair of clouds: x uniform on an interval and sin(x).
    SinPair,
}

impl From<Kind> for ManifoldKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Hypercube => ManifoldKind::Hypercube,
            Kind::Hypersphere => ManifoldKind::Hypersphere,
            Kind::Gaussian => ManifoldKind::Gaussian,
            Kind::SinPair => ManifoldKind::SinPair,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    /// Intrinsic dimension.
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long)]
    pub ambient: usize,
    #[arg(long)]
    pub n: usize,
    /// Standard deviation of isotropic ambient noise.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ReportArgs {
    #[arg(required = true)]
    pub runs: Vec<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_PEAK_MARGIN)]
    pub tau: f64,
    #[arg(long, default_value_t = 0.0)]
    pub discard_fraction: f64,
    #[command(flatten)]
    pub sampling: Sampling,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct RerunArgs {
    /// A `report.json` written by any other command.
    pub report: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Id(_) => "id",
            Command::Ii(_) => "ii",
            Command::Cross(_) => "cross",
            Command::Sweep(_) => "sweep",
            Command::Synth(_) => "synth",
            Command::Report(_) => "report",
            Command::Rerun(_) => "rerun",
        }
    }

    pub fn out(&self) -> &PathBuf {
        match self {
            Command::Id(a) => &a.out,
            Command::Ii(a) => &a.out,
            Command::Cross(a) => &a.out,
            Command::Sweep(a) => &a.out,
            Command::Synth(a) => &a.out,
            Command::Report(a) => &a.out,
            Command::Rerun(a) => &a.out,
        }
    }

    pub fn set_out(&mut self, out: PathBuf) {
        match self {
            Command::Id(a) => a.out = out,
            Command::Ii(a) => a.out = out,
            Command::Cross(a) => a.out = out,
            Command::Sweep(a) => a.out = out,
            Command::Synth(a) => a.out = out,
            Command::Report(a) => a.out = out,
            Command::Rerun(a) => a.out = out,
        }
    }

    /// Makes every input path absolute so the recorded parameters replay from
    /// any working directory.
    pub fn absolutize(&mut self) -> std::io::Result<()> {
        let fix = |p: &mut PathBuf| -> std::io::Result<()> {
            *p = std::path::absolute(&*p)?;
            Ok(())
        };
        match self {
            Command::Id(a) => fix(&mut a.input),
            Command::Ii(a) => fix(&mut a.run),
            Command::Cross(a) => fix(&mut a.a).and_then(|_| fix(&mut a.b)),
            Command::Sweep(a) => a.runs.iter_mut().try_for_each(fix),
            Command::Report(a) => a.runs.iter_mut().try_for_each(fix),
            Command::Synth(_) => Ok(()),
            Command::Rerun(a) => fix(&mut a.report),
        }
    }
}
