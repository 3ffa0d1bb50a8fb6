//! `ibmap`: generate synthetic Markov networks, learn structures with
//! IBMAP-HC or GSMN, evaluate them, and run the EDA experiments.
//!
//! Every subcommand prints one JSON record per result to stdout (or appends
//! to `--records`). `--csv` additionally appends the same records as CSV.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod record;

#[derive(Parser, Debug)]
#[command(name = "ibmap", version, about = "IB-score Markov network structure learning")]
struct Cli {
    /// Worker threads for parallel work (default: all cores).
    #[arg(long, global = true, env = "IBMAP_WORKERS")]
    workers: Option<usize>,

    /// Append JSON-line records here instead of printing them.
    #[arg(long, global = true)]
    records: Option<PathBuf>,

    /// Also append records as CSV rows to this file.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a random or grid Markov network and a dataset from it.
    Gen(GenArgs),
    /// Learn a structure from a CSV dataset.
    Learn(LearnArgs),
    /// Compare a learned structure with the truth and/or test data.
    Eval(EvalArgs),
    /// Score every structure on at most 6 variables.
    Landscape(LandscapeArgs),
    /// Run the MOA optimizer or a critical population search.
    Eda(EdaArgs),
    /// Sweep learners over a grid of sizes, densities and sample counts.
    Bench(BenchArgs),
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Number of variables.
    #[arg(long, required_unless_present = "ising")]
    pub n: Option<usize>,
    /// Average degree of the random structure.
    #[arg(long, default_value_t = 2.0)]
    pub tau: f64,
    /// Use a ROWSxCOLS grid instead of a random structure.
    #[arg(long, value_name = "ROWSxCOLS", conflicts_with_all = ["n", "tau"])]
    pub ising: Option<String>,
    /// Log-odds of every pairwise factor.
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Training rows (D).
    #[arg(long)]
    pub rows: usize,
    /// Extra rows written to `<name>.test.csv`.
    #[arg(long, default_value_t = 0)]
    pub test_rows: usize,
    #[arg(long, default_value_t = ibmap::synth::DEFAULT_BURN_IN)]
    pub burn_in: usize,
    #[arg(long, default_value_t = ibmap::synth::DEFAULT_THIN)]
    pub thin: usize,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Base name of the written files.
    #[arg(long, default_value = "gen")]
    pub name: String,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algo {
    IbmapHc,
    Gsmn,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Combine {
    Or,
    And,
}

#[derive(Args, Debug)]
pub struct LearnArgs {
    #[arg(long, value_enum, default_value = "ibmap-hc")]
    pub algo: Algo,
    #[arg(long)]
    pub data: PathBuf,
    /// Where to write the learned structure.
    #[arg(long)]
    pub out: PathBuf,
    /// Dirichlet prior of the independence test.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Hill-climbing iteration guard (default 10·n²).
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// GSMN edge rule.
    #[arg(long, value_enum, default_value = "or")]
    pub combine: Combine,
    /// True structure, for Hamming distance and F-measures.
    #[arg(long = "true")]
    pub truth: Option<PathBuf>,
    /// Seed of the triplet sample used for the triplet F-measure.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub learned: PathBuf,
    #[arg(long = "true", required_unless_present = "test")]
    pub truth: Option<PathBuf>,
    /// Held-out dataset for independence-test accuracy.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Seed of the triplet sample.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct LandscapeArgs {
    /// Dataset to score; generated from --n/--tau/--rows when absent.
    #[arg(long, requires = "truth")]
    pub data: Option<PathBuf>,
    #[arg(long = "true")]
    pub truth: Option<PathBuf>,
    #[arg(long, conflicts_with = "data")]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    #[arg(long, conflicts_with = "data")]
    pub rows: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Table of structure_index, score, hamming.
    #[arg(long, default_value = "landscape.tsv")]
    pub out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitnessKind {
    Onemax,
    RoyalRoad,
    Zeromax,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum LearnerKind {
    IbmapHc,
    Mi,
}

#[derive(Args, Debug)]
pub struct EdaArgs {
    /// Genes per individual.
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum, default_value = "onemax")]
    pub fitness: FitnessKind,
    /// Royal Road group size.
    #[arg(long, default_value_t = 4)]
    pub gamma: usize,
    #[arg(long, value_enum, default_value = "ibmap-hc")]
    pub learner: LearnerKind,
    /// Neighbor cap of the MI learner.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// MI threshold in nats.
    #[arg(long, default_value_t = ibmap::eda::DEFAULT_MI_THRESHOLD)]
    pub threshold: f64,
    /// Population size (D).
    #[arg(long, default_value_t = 50)]
    pub population: usize,
    #[arg(long, default_value_t = 0.5)]
    pub selection: f64,
    #[arg(long, default_value_t = 0.5)]
    pub elitism: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_generations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Search the population ladder for the smallest always-successful size.
    #[arg(long)]
    pub critical: bool,
    #[arg(long, value_delimiter = ',', default_values_t = ibmap::eda::DEFAULT_LADDER)]
    pub ladder: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub repetitions: usize,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [25])]
    pub n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0])]
    pub tau: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [100, 400, 1600, 3200])]
    pub rows: Vec<usize>,
    #[arg(long, value_delimiter = ',', value_enum, default_values_t = [Algo::IbmapHc, Algo::Gsmn])]
    pub algos: Vec<Algo>,
    /// Repetitions per cell; seeds run from --seed upward.
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,
    /// Held-out rows for accuracy (0 disables).
    #[arg(long, default_value_t = 0)]
    pub test_rows: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(w) = cli.workers {
        anyhow::ensure!(w > 0, "--workers must be positive");
        rayon::ThreadPoolBuilder::new().num_threads(w).build_global()?;
    }
    let mut sink = record::Sink::open(cli.records, cli.csv)?;
    match cli.command {
        Command::Gen(a) => commands::gen(&a, &mut sink),
        Command::Learn(a) => commands::learn(&a, &mut sink),
        Command::Eval(a) => commands::eval(&a, &mut sink),
        Command::Landscape(a) => commands::landscape(&a, &mut sink),
        Command::Eda(a) => commands::eda(&a, &mut sink),
        Command::Bench(a) => commands::bench(&a, &mut sink),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn list_flags_split_on_commas() {
        let cli = Cli::try_parse_from(["ibmap", "bench", "--n", "6,8", "--algos", "gsmn"]).unwrap();
        let Command::Bench(b) = cli.command else { panic!() };
        assert_eq!(b.n, [6, 8]);
        assert_eq!(b.algos, [Algo::Gsmn]);
    }

    #[test]
    fn ising_conflicts_with_n() {
        assert!(Cli::try_parse_from(["ibmap", "gen", "--n", "4", "--ising", "2x2", "--rows", "5"]).is_err());
    }
}
