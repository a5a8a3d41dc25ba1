mod commands;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "kxt", version, about = "Balanced tables, Kolmogorov extractors and their parameter algebra")]
pub struct Cli {
    /// Master RNG seed; every random stream derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Verification budget in cell inspections.
    #[arg(long, global = true, default_value_t = 1_000_000_000)]
    pub budget: u64,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<std::path::PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Check a KXTB table for balance.
    Verify(VerifyArgs),
    /// Search for a balanced table and write it as KXTB.
    Gen(GenArgs),
    /// Evaluate the union bound on unbalanced random tables.
    Feasible(FeasibleArgs),
    /// Estimate the fraction of random tables that are balanced.
    Fraction(FractionArgs),
    /// Look up E(x, y).
    Extract(ExtractArgs),
    /// Least good seed of a row for a color set.
    Advice(AdviceArgs),
    /// Output distribution of a flat source.
    Dist(DistArgs),
    /// Smooth min-entropy of a flat source's output.
    Smooth(SmoothArgs),
    /// Chain-rule parameter algebra and the two-source experiment.
    #[command(subcommand)]
    Soi(SoiCommand),
    /// Impossibility bound and advice-length check.
    #[command(subcommand)]
    Bounds(BoundsCommand),
    /// Toy Nisan-Wigderson generator.
    #[command(subcommand)]
    Nw(NwCommand),
}

// Log-scale thresholds: K = ⌈2^k⌉, D = 2^d, Δ = 2^delta.
#[derive(Args, Debug, Serialize, Clone)]
pub struct ThresholdArgs {
    /// Row threshold exponent: K = ⌈2^k⌉.
    #[arg(long)]
    pub k: String,
    /// Color density exponent: sets of at least M/2^d colors.
    #[arg(long)]
    pub d: String,
    /// Allowed excess exponent: Δ = 2^delta.
    #[arg(long)]
    pub delta: String,
}

#[derive(Args, Debug, Serialize, Clone)]
pub struct ParamArgs {
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub n1: u32,
    #[arg(long)]
    pub m: u32,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Naive,
    Exact,
    Sampled,
}

#[derive(Args, Debug, Serialize)]
pub struct VerifyArgs {
    pub table: std::path::PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    pub mode: Mode,
    /// Rectangles drawn in sampled mode.
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    #[arg(long)]
    pub k: Option<String>,
    #[arg(long)]
    pub d: Option<String>,
    #[arg(long)]
    pub delta: Option<String>,
    /// Two-source row threshold exponent.
    #[arg(long)]
    pub kx: Option<String>,
    /// Two-source column threshold exponent.
    #[arg(long)]
    pub ky: Option<String>,
    /// Two-source bound factor.
    #[arg(long, default_value = "2")]
    pub factor: String,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyArg {
    RandomRetry,
    Exhaustive,
}

#[derive(Args, Debug, Serialize)]
pub struct GenArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, value_enum, default_value_t = StrategyArg::RandomRetry)]
    pub strategy: StrategyArg,
    #[arg(long, default_value_t = 1000)]
    pub max_candidates: u64,
    /// Destination of the KXTB table.
    #[arg(long)]
    pub table: std::path::PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct FeasibleArgs {
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub m: u32,
    #[arg(long)]
    pub n1: Option<u32>,
    #[arg(long)]
    pub k: Option<String>,
    #[arg(long)]
    pub d: String,
    #[arg(long)]
    pub delta: Option<String>,
    /// Evaluate the two-source bound; needs --kx and --ky.
    #[arg(long)]
    pub two_source: bool,
    #[arg(long)]
    pub kx: Option<String>,
    #[arg(long)]
    pub ky: Option<String>,
    /// Decimal digits (default: KXT_PRECISION or 50).
    #[arg(long)]
    pub digits: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
pub struct FractionArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, default_value_t = 200)]
    pub trials: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct ExtractArgs {
    pub table: std::path::PathBuf,
    #[arg(long)]
    pub x: u32,
    #[arg(long)]
    pub y: u32,
}

#[derive(Args, Debug, Serialize)]
pub struct AdviceArgs {
    pub table: std::path::PathBuf,
    #[arg(long)]
    pub x: u32,
    /// Comma-separated color set.
    #[arg(long, value_delimiter = ',', required = true)]
    pub colors: Vec<u32>,
}

#[derive(Args, Debug, Serialize)]
pub struct DistArgs {
    pub table: std::path::PathBuf,
    /// Comma-separated support of the flat source.
    #[arg(long, value_delimiter = ',', required = true)]
    pub rows: Vec<u32>,
    /// Also report the heaviest mass of this many colors.
    #[arg(long)]
    pub heavy: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
pub struct SmoothArgs {
    pub table: std::path::PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub rows: Vec<u32>,
    /// Trimmed mass, as p/q or a decimal.
    #[arg(long)]
    pub eps: String,
    /// With --delta, report the floor m - delta - c.
    #[arg(long)]
    pub delta: Option<String>,
    /// Additive constant in d = delta + c.
    #[arg(long, default_value = "1")]
    pub c: String,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SoiCommand {
    /// Extractor parameters and the chain-rule lower bound.
    Ledger(LedgerArgs),
    /// Build a balanced two-source table and probe its bad-row bound.
    Experiment(ExperimentArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct LedgerArgs {
    #[arg(long)]
    pub n: i64,
    /// Shorthand: tx = ty = tyx = n - c.
    #[arg(long)]
    pub random: Option<i64>,
    #[arg(long)]
    pub tx: Option<i64>,
    #[arg(long)]
    pub ty: Option<i64>,
    #[arg(long)]
    pub tyx: Option<i64>,
    #[arg(long, default_value_t = 1)]
    pub c2x: i64,
    #[arg(long, default_value_t = 1)]
    pub c2y: i64,
    #[arg(long, default_value_t = 1)]
    pub c2yx: i64,
    #[arg(long, default_value_t = 0)]
    pub c0: i64,
}

#[derive(Args, Debug, Serialize)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub m: u32,
    #[arg(long)]
    pub kx: String,
    #[arg(long)]
    pub ky: String,
    #[arg(long)]
    pub d: String,
    #[arg(long, default_value = "2")]
    pub factor: String,
    /// Column sets per color set.
    #[arg(long, default_value_t = 16)]
    pub samples: u64,
    /// Candidate tables tried.
    #[arg(long, default_value_t = 100)]
    pub construction_budget: u64,
    /// Also write the accepted table as KXTB.
    #[arg(long)]
    pub table: Option<std::path::PathBuf>,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundsCommand {
    /// Least rate loss forced on extractors with h bits of advice.
    Epsilon(EpsilonArgs),
    /// Whether h bits of advice clear the length threshold.
    Advice(AdviceBoundArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct EpsilonArgs {
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub m: u64,
    #[arg(long)]
    pub h: u32,
    #[arg(long)]
    pub sigma: f64,
    #[arg(long, default_value_t = kxt_core::bounds::DEFAULT_SLACK)]
    pub slack: f64,
    /// Also run the advice-length check at this ratio.
    #[arg(long)]
    pub ratio: Option<String>,
}

#[derive(Args, Debug, Serialize)]
pub struct AdviceBoundArgs {
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub m: u64,
    #[arg(long)]
    pub h: u32,
    #[arg(long)]
    pub ratio: String,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NwCommand {
    /// Greedy design of sets with bounded pairwise intersections.
    Design(DesignArgs),
    /// Expand a seed through a design and a hard function.
    Expand(ExpandArgs),
    /// First seed whose expansion is a balanced table.
    Search(SearchArgs),
}

#[derive(Args, Debug, Serialize, Clone)]
pub struct DesignArgs {
    #[arg(long)]
    pub t: usize,
    #[arg(long)]
    pub l: usize,
    #[arg(long)]
    pub a: usize,
    #[arg(long)]
    pub seed_len_budget: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HardArg {
    Random,
    Parity,
}

#[derive(Args, Debug, Serialize)]
pub struct ExpandArgs {
    /// Design JSON: an array of sorted position arrays.
    #[arg(long)]
    pub design: std::path::PathBuf,
    /// Intersection bound claimed for the design (default: from the file).
    #[arg(long)]
    pub a: Option<usize>,
    /// Seed length (default: from the file).
    #[arg(long)]
    pub seed_len: Option<usize>,
    #[arg(long, value_enum, default_value_t = HardArg::Random)]
    pub hard: HardArg,
    /// Seed bits, e.g. 0110.
    #[arg(long)]
    pub bits: String,
}

#[derive(Args, Debug, Serialize)]
pub struct SearchArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long)]
    pub l: usize,
    #[arg(long)]
    pub a: usize,
    #[arg(long)]
    pub seed_len_budget: usize,
    #[arg(long, value_enum, default_value_t = HardArg::Random)]
    pub hard: HardArg,
    #[arg(long, default_value_t = 1 << 16)]
    pub seed_budget: u64,
    /// Also write the table as KXTB.
    #[arg(long)]
    pub table: Option<std::path::PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
