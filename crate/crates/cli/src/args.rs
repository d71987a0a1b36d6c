use std::fmt::Display;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use srk_core::oracle::InfSepMode;

#[derive(Debug, Parser)]
#[command(name = "srk", version, about = "Separation-rank oracle, bounds and depth/width planner")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact separation profile of a spec under sampled weights
    Oracle(OracleArgs),
    /// Upper or lower separation-rank bounds
    Bound(BoundArgs),
    /// Randomized check that oracle <= propagated <= closed form
    Verify(VerifyArgs),
    /// Optimal depth/width under a parameter budget
    Plan(PlanArgs),
    /// Class-bound gap between linear transformers and mixers over depth
    Gap(GapArgs),
    /// Depth/width sweep configuration for the training harness
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Mixer,
    #[value(alias = "linear_transformer", alias = "linear-transformer")]
    Transformer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InfModeArg {
    MinMin,
    MinMax,
}

impl From<InfModeArg> for InfSepMode {
    fn from(m: InfModeArg) -> Self {
        match m {
            InfModeArg::MinMin => InfSepMode::MinMin,
            InfModeArg::MinMax => InfSepMode::MinMax,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundMode {
    Propagate,
    Closed,
    Lower,
}

#[derive(Debug, Clone, Args)]
pub struct Output {
    /// Output file; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

/// Integers given as `a`, `a..b` / `a..=b` (inclusive) or `a,b,c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntList<T>(pub Vec<T>);

impl<T> FromStr for IntList<T>
where
    T: FromStr + Copy + Ord + TryFrom<u64> + Into<u64>,
    T::Err: Display,
{
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |x: &str| x.trim().parse::<T>().map_err(|e| format!("`{x}`: {e}"));
        if let Some((a, b)) = s.split_once("..") {
            let (a, b) = (parse(a)?, parse(b.trim_start_matches('='))?);
            if a > b {
                return Err(format!("empty range {s}"));
            }
            let (lo, hi): (u64, u64) = (a.into(), b.into());
            if hi - lo > 1_000_000 {
                return Err(format!("range {s} is too long"));
            }
            let v = (lo..=hi)
                .map(|x| T::try_from(x).map_err(|_| format!("{x} out of range")))
                .collect::<Result<_, _>>()?;
            return Ok(IntList(v));
        }
        let v = s.split(',').map(parse).collect::<Result<Vec<_>, _>>()?;
        if v.is_empty() {
            return Err("empty list".into());
        }
        Ok(IntList(v))
    }
}

/// Comma-separated floats.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatList(pub Vec<f64>);

impl FromStr for FloatList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|x| {
                let v: f64 = x.trim().parse().map_err(|e| format!("`{x}`: {e}"))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(format!("`{x}` is not finite"))
                }
            })
            .collect::<Result<_, _>>()
            .map(FloatList)
    }
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Architecture spec (JSON)
    #[arg(long)]
    pub spec: PathBuf,
    /// Weight seeds; defaults to the seed stored in the spec
    #[arg(long)]
    pub seeds: Option<IntList<u64>>,
    #[arg(long, value_enum, default_value = "min-min")]
    pub inf_mode: InfModeArg,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    /// Architecture spec (JSON); replaces the shape flags
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    #[arg(long)]
    pub p: Option<IntList<u32>>,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub m: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub heads: u64,
    /// Attention degree d
    #[arg(long, default_value_t = 3)]
    pub degree: u32,
    /// Defaults to `propagate` with --spec, `closed` otherwise
    #[arg(long, value_enum)]
    pub mode: Option<BoundMode>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "mixer")]
    pub family: FamilyArg,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    #[arg(long, default_value = "1..2")]
    pub p: IntList<u32>,
    #[arg(long, default_value = "2")]
    pub n: IntList<u32>,
    #[arg(long, default_value = "2")]
    pub m: IntList<u32>,
    /// Head counts to draw from (transformers)
    #[arg(long, default_value = "1..2")]
    pub heads: IntList<u32>,
    #[arg(long, default_value_t = 3)]
    pub degree: u32,
    /// Base seed; the first value is used
    #[arg(long, default_value = "0")]
    pub seeds: IntList<u64>,
    #[arg(long, value_enum, default_value = "min-min")]
    pub inf_mode: InfModeArg,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long, value_enum, default_value = "transformer")]
    pub family: FamilyArg,
    /// Parameter budget B
    #[arg(long)]
    pub budget: f64,
    /// With a ratio, pick the smallest depth with p / log2 d > ratio instead
    #[arg(long)]
    pub ratio: Option<f64>,
    /// Override the family's exponent base
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Budget-law constant C in |params| = C·p·d²
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = srk_core::planner::DEFAULT_P_MAX)]
    pub p_max: u32,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct GapArgs {
    #[arg(long, default_value = "4..30")]
    pub p: IntList<u32>,
    #[arg(long, default_value_t = 81.0)]
    pub m: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Budgets in parameters; defaults to 32K..256K with K = 1024
    #[arg(long)]
    pub budget: Option<IntList<u64>>,
    #[arg(long)]
    pub ratio: Option<FloatList>,
    #[arg(long, default_value = "0..5")]
    pub seeds: IntList<u64>,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = srk_core::planner::DEFAULT_P_MAX)]
    pub p_max: u32,
    #[command(flatten)]
    pub output: Output,
}
