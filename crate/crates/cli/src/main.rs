use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod manifest;

#[derive(Parser, Debug)]
#[command(name = "cfbounds", version, about = "Bounds on counterfactual probabilities in discrete causal models")]
struct Cli {
    /// Output format. JSON is the stable one; text and LaTeX are for reading.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Log progress to stderr and print error details.
    #[arg(long, short, global = true)]
    verbose: bool,

    /// Default directory for files the tool writes.
    #[arg(long, global = true, env = "CFBOUNDS_OUT_DIR")]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Latex,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print the latent projection of a graph.
    Project {
        #[arg(long)]
        graph: PathBuf,
    },
    /// Lower (and optionally upper) bound on a counterfactual event.
    Bound(BoundArgs),
    /// Generalized instrumental inequalities implied by the graph.
    Constraints(ConstraintArgs),
    /// Check bounds and constraints against sampled structural models.
    Verify(VerifyArgs),
    /// Bound-width study: ACE bound width against instrument strength.
    Simulate(SimulateArgs),
    /// Evaluate a JSON expression on a distribution.
    Evaluate {
        #[arg(long)]
        graph: PathBuf,
        /// Expression document, or a `bound --format json` output with `--field`.
        #[arg(long)]
        expr: PathBuf,
        /// Take the expression from this field of the document, e.g. `lower`.
        #[arg(long)]
        field: Option<String>,
        /// Distribution table, CSV or JSON.
        #[arg(long)]
        dist: PathBuf,
    },
}

#[derive(Args, Debug)]
pub struct BoundArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Single-world event, e.g. `Y(A=1)=1`.
    #[arg(long)]
    pub target: String,
    /// Instrument variables, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub instrument: Vec<String>,
    /// Also derive the upper bound.
    #[arg(long)]
    pub upper: bool,
    /// Print the derivation.
    #[arg(long)]
    pub trace: bool,
    /// Evaluate the bounds on a distribution table (CSV or JSON).
    #[arg(long)]
    pub eval: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ConstraintArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub instrument: Vec<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub treatment: Vec<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub outcome: Vec<String>,
    /// Largest triple set considered (default: all triples, at most 12).
    #[arg(long)]
    pub max_size: Option<usize>,
    /// Report which constraints a distribution table violates.
    #[arg(long)]
    pub check: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct SamplerArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Beta prior on conditional probabilities of unconfounded variables.
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Dirichlet prior on confounded districts' latent laws.
    #[arg(long, default_value_t = 0.1)]
    pub dirichlet: f64,
    /// `canonical` (every response-function tuple) or a number of latent states.
    #[arg(long, default_value = "canonical")]
    pub latent: String,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub target: String,
    /// Use the instrument-based bounds with these instruments.
    #[arg(long, value_delimiter = ',', conflicts_with = "subset")]
    pub instrument: Vec<String>,
    /// Use the bounds from intervening on this part of the treatment only.
    #[arg(long, value_delimiter = ',')]
    pub subset: Vec<String>,
    /// Also check the generated constraints (instrument, treatment, and
    /// every other variable as outcome) on each sampled law.
    #[arg(long, requires = "instrument")]
    pub constraints: bool,
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[command(flatten)]
    pub sampler: SamplerArgs,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// CSV output; defaults to `study.csv` in the output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "A")]
    pub treatment: String,
    #[arg(long, default_value = "Y")]
    pub outcome: String,
    #[arg(long, default_value = "Z")]
    pub instrument: String,
    #[command(flatten)]
    pub sampler: SamplerArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.verbose {
        env_logger::Builder::new().filter_level(log::LevelFilter::Debug).init();
    }
    let ctx = commands::Context {
        format: cli.format,
        out_dir: cli.out_dir.clone(),
    };
    match commands::run(&ctx, &cli.command) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            if cli.verbose {
                eprintln!("{e:?}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
