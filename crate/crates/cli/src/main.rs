//! `qxg`: generate scenes, build graphs, train and query action explainers.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qxg_core::synthgen::{ScenarioKind, Split, MIN_FRAMES};

#[derive(Debug, Parser)]
#[command(name = "qxg", version, about = "Qualitative explainable scene graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic traces with planted causes.
    Gen(GenArgs),
    /// Build a graph from one trace and export it.
    Build(BuildArgs),
    /// Train per-action explainers on a directory of traces.
    Train(TrainArgs),
    /// Rank the objects that explain an annotated action.
    Explain(ExplainArgs),
    /// Precision and recall on a directory of traces.
    Eval(EvalArgs),
    /// Time per-frame graph updates on dense synthetic frames.
    Bench(BenchArgs),
    /// Summarise a trace, graph or model file.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Scenario kind; repeat for several. Defaults to all kinds.
    #[arg(long = "kind", value_parser = parse_kind)]
    pub kinds: Vec<ScenarioKind>,
    /// Number of scenes; kinds are assigned round-robin.
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    pub scenes: u64,
    #[arg(long, default_value_t = 4)]
    pub distractors: usize,
    /// Standard deviation of the position noise, metres.
    #[arg(long, default_value_t = 0.1, value_parser = parse_non_negative)]
    pub jitter: f64,
    #[arg(long, default_value_t = 20, value_parser = parse_frames)]
    pub frames: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GraphFormat {
    Json,
    Dot,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub trace: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = GraphFormat::Json)]
    pub format: GraphFormat,
    /// Stop after this frame index.
    #[arg(long)]
    pub until: Option<u32>,
    /// Print per-frame update statistics to stderr.
    #[arg(long, short)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Test,
    All,
}

impl SplitArg {
    pub fn accepts(self, split: Split) -> bool {
        match self {
            SplitArg::All => true,
            SplitArg::Train => split == Split::Train,
            SplitArg::Test => split == Split::Test,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub traces: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitArg::Train)]
    pub split: SplitArg,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Chain window length in frames.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub t: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub trees: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub trace: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Annotated frame; defaults to the trace's first action line.
    #[arg(long)]
    pub frame: Option<u32>,
    #[arg(long)]
    pub actor: Option<String>,
    #[arg(long)]
    pub action: Option<String>,
    #[arg(long = "top-k")]
    pub top_k: Option<usize>,
    #[arg(long, value_parser = parse_non_negative)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub traces: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    pub split: SplitArg,
    #[arg(long, value_parser = parse_non_negative)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Print the JSON report instead of the table.
    #[arg(long)]
    pub json: bool,
    /// Also write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 160, value_parser = clap::value_parser!(u64).range(2..))]
    pub objects: u64,
    #[arg(long, default_value_t = 40, value_parser = clap::value_parser!(u64).range(1..))]
    pub frames: u64,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    pub repeats: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also fit the growth exponent over 20, 40, 80 and 160 objects.
    #[arg(long)]
    pub scaling: bool,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct InspectArgs {
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
}

fn parse_kind(s: &str) -> Result<ScenarioKind, String> {
    s.parse().map_err(|e: qxg_core::synthgen::SynthError| e.to_string())
}

fn parse_non_negative(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err("must be a finite non-negative number".into())
    }
}

fn parse_frames(s: &str) -> Result<usize, String> {
    let v: usize = s.parse().map_err(|e| format!("{e}"))?;
    if v >= MIN_FRAMES {
        Ok(v)
    } else {
        Err(format!("must be at least {MIN_FRAMES}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
