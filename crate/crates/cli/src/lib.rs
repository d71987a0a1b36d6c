//! The `srk` command-line surface: oracle runs, bound queries, randomized
//! sandwich verification, planning, gap curves and sweep configs.

pub mod args;
pub mod error;
pub mod verify;

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use srk_core::arch::{
    build_linear_transformer, build_mixer, sample_weights, symbolic_forward, ArchSpec, Family, MixerPermutations,
    DEFAULT_DEGREE_CAP,
};
use srk_core::bounds::{
    class_lower_log3, class_upper_log3, family_closed_form, gap_ratio, gap_ratio_exact, propagate_bound,
    transformer_lower_bound, Bound,
};
use srk_core::oracle::{network_profile, EntryRange, InfSepMode, OracleConfig, DEFAULT_PARTITION_CAP};
use srk_core::planner::{
    check_dominance, depth_selection, grid_search_optimum, make_sweep_config, BudgetLaw, DominanceVerdict,
    PlanFamily, PlanResult, QuadraticLaw, PAPER_BUDGETS, PAPER_RATIOS,
};

use crate::args::{
    BoundArgs, BoundMode, Command, FamilyArg, Format, GapArgs, OracleArgs, Output, PlanArgs, SweepArgs, VerifyArgs,
};
pub use crate::error::CliError;
use crate::verify::{run_verify, spec_digest, VerifyPlan};

pub const ENV_PARTITION_CAP: &str = "SRK_PARTITION_CAP";
pub const ENV_DEGREE_CAP: &str = "SRK_DEGREE_CAP";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    pub partition_cap: usize,
    pub degree_cap: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            partition_cap: DEFAULT_PARTITION_CAP,
            degree_cap: DEFAULT_DEGREE_CAP,
        }
    }
}

impl Caps {
    /// Defaults overridden by `SRK_PARTITION_CAP` / `SRK_DEGREE_CAP`.
    pub fn from_env() -> Result<Caps, CliError> {
        fn read<T: std::str::FromStr>(key: &str, default: T) -> Result<T, CliError> {
            match std::env::var(key) {
                Ok(v) => v
                    .trim()
                    .parse()
                    .map_err(|_| CliError::Parse(format!("{key}={v} is not a nonnegative integer"))),
                Err(_) => Ok(default),
            }
        }
        let d = Caps::default();
        Ok(Caps {
            partition_cap: read(ENV_PARTITION_CAP, d.partition_cap)?,
            degree_cap: read(ENV_DEGREE_CAP, d.degree_cap)?,
        })
    }
}

/// Rendered command output plus the verification failure count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub body: String,
    pub failures: usize,
}

impl Outcome {
    fn ok(body: String) -> Self {
        Outcome { body, failures: 0 }
    }
}

fn output_of(cmd: &Command) -> &Output {
    match cmd {
        Command::Oracle(a) => &a.output,
        Command::Bound(a) => &a.output,
        Command::Verify(a) => &a.output,
        Command::Plan(a) => &a.output,
        Command::Gap(a) => &a.output,
        Command::Sweep(a) => &a.output,
    }
}

/// Runs a command and writes its output to `--out` or stdout.
pub fn run(cmd: &Command, caps: &Caps) -> Result<(), CliError> {
    let outcome = execute(cmd, caps)?;
    match &output_of(cmd).out {
        Some(path) => std::fs::write(path, &outcome.body)?,
        None => std::io::stdout().lock().write_all(outcome.body.as_bytes())?,
    }
    if outcome.failures > 0 {
        if let Command::Verify(a) = cmd {
            return Err(CliError::VerifyFailed {
                failures: outcome.failures,
                total: a.trials,
            });
        }
    }
    Ok(())
}

pub fn execute(cmd: &Command, caps: &Caps) -> Result<Outcome, CliError> {
    match cmd {
        Command::Oracle(a) => cmd_oracle(a, caps).map(Outcome::ok),
        Command::Bound(a) => cmd_bound(a).map(Outcome::ok),
        Command::Verify(a) => cmd_verify(a, caps),
        Command::Plan(a) => cmd_plan(a).map(Outcome::ok),
        Command::Gap(a) => cmd_gap(a).map(Outcome::ok),
        Command::Sweep(a) => cmd_sweep(a).map(Outcome::ok),
    }
}

fn family_of(f: FamilyArg) -> Family {
    match f {
        FamilyArg::Mixer => Family::Mixer,
        FamilyArg::Transformer => Family::LinearTransformer,
    }
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("output serializes");
    s.push('\n');
    s
}

fn csv_body(f: impl FnOnce(&mut Vec<u8>) -> csv::Result<()>) -> Result<String, CliError> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

fn csv_rows<const N: usize>(header: [&str; N], rows: impl IntoIterator<Item = [String; N]>) -> Result<String, CliError> {
    csv_body(|buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    })
}

pub fn read_spec(path: &Path) -> Result<ArchSpec, CliError> {
    let text = std::fs::read_to_string(path)?;
    Ok(ArchSpec::from_json(&text)?)
}

#[derive(Debug, Serialize)]
pub struct SeedProfile {
    pub seed: u64,
    pub sup_sep: usize,
    pub inf_sep: usize,
    pub entries: Vec<Vec<EntryRange>>,
}

#[derive(Debug, Serialize)]
pub struct Aggregate {
    pub sup_sep: usize,
    pub inf_sep: usize,
}

#[derive(Debug, Serialize)]
pub struct OracleReport {
    pub spec_digest: String,
    pub spec: ArchSpec,
    pub inf_mode: InfSepMode,
    pub profiles: Vec<SeedProfile>,
    /// Maxima over seeds.
    pub aggregate: Aggregate,
}

fn cmd_oracle(a: &OracleArgs, caps: &Caps) -> Result<String, CliError> {
    let spec = read_spec(&a.spec)?;
    let seeds = a.seeds.as_ref().map_or_else(|| vec![spec.seed], |s| s.0.clone());
    let cfg = OracleConfig {
        partition_cap: caps.partition_cap,
        inf_mode: a.inf_mode.into(),
    };
    let profiles = seeds
        .iter()
        .map(|&seed| {
            let f = symbolic_forward(&spec, &sample_weights(&spec, seed), caps.degree_cap)?;
            let p = network_profile(&f, &cfg)?;
            Ok(SeedProfile {
                seed,
                sup_sep: p.sup_sep,
                inf_sep: p.inf_sep,
                entries: p.entries,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let aggregate = Aggregate {
        sup_sep: profiles.iter().map(|p| p.sup_sep).max().unwrap_or(0),
        inf_sep: profiles.iter().map(|p| p.inf_sep).max().unwrap_or(0),
    };
    let report = OracleReport {
        spec_digest: spec_digest(&spec),
        spec,
        inf_mode: cfg.inf_mode,
        profiles,
        aggregate,
    };
    match a.output.format.unwrap_or(Format::Json) {
        Format::Json => Ok(json(&report)),
        Format::Csv => {
            let rows = report
                .profiles
                .iter()
                .map(|p| [p.seed.to_string(), p.sup_sep.to_string(), p.inf_sep.to_string()])
                .chain([[
                    "max".to_string(),
                    report.aggregate.sup_sep.to_string(),
                    report.aggregate.inf_sep.to_string(),
                ]]);
            csv_rows(["seed", "sup_sep", "inf_sep"], rows)
        }
    }
}

#[derive(Debug, Serialize)]
pub struct BoundPoint {
    pub p: u32,
    pub bound: Bound,
    pub rule_trace_id: String,
}

#[derive(Debug, Serialize)]
pub struct BoundReport {
    pub mode: &'static str,
    pub family: Family,
    pub n: Option<u64>,
    pub m: Option<u64>,
    #[serde(rename = "H")]
    pub heads: u64,
    pub d: u32,
    pub points: Vec<BoundPoint>,
}

fn mode_name(m: BoundMode) -> &'static str {
    match m {
        BoundMode::Propagate => "propagate",
        BoundMode::Closed => "closed",
        BoundMode::Lower => "lower",
    }
}

fn require<T: Copy>(v: Option<T>, flag: &str, mode: BoundMode) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::InvalidInput(format!("--{flag} is required for mode {}", mode_name(mode))))
}

fn build_spec(family: Family, p: u32, n: u64, m: u64, heads: u64, d: u32) -> Result<ArchSpec, CliError> {
    let (p, n, m) = (p as usize, n as usize, m as usize);
    Ok(match family {
        Family::Mixer => build_mixer(p, n, m, &[], MixerPermutations::default())?,
        Family::LinearTransformer => build_linear_transformer(p, n, m, heads as usize, d, None, &[])?,
    })
}

fn cmd_bound(a: &BoundArgs) -> Result<String, CliError> {
    let spec = a.spec.as_deref().map(read_spec).transpose()?;
    let mode = a
        .mode
        .unwrap_or(if spec.is_some() { BoundMode::Propagate } else { BoundMode::Closed });
    let report = match &spec {
        Some(s) => {
            let bound = match mode {
                BoundMode::Propagate => propagate_bound(s),
                BoundMode::Closed => family_closed_form(s),
                BoundMode::Lower => lower_bound(s.family, s.p as u32, Some(s.m as u64), s.heads as u64)?,
            };
            BoundReport {
                mode: mode_name(mode),
                family: s.family,
                n: Some(s.n as u64),
                m: Some(s.m as u64),
                heads: s.heads as u64,
                d: s.degree,
                points: vec![BoundPoint {
                    p: s.p as u32,
                    rule_trace_id: bound.trace_id(),
                    bound,
                }],
            }
        }
        None => {
            let family = family_of(require(a.family, "family", mode)?);
            let depths = a
                .p
                .as_ref()
                .ok_or_else(|| CliError::InvalidInput("--p (or --spec) is required".into()))?;
            let d = if family == Family::Mixer { 2 } else { a.degree };
            let points = depths
                .0
                .iter()
                .map(|&p| {
                    let bound = match mode {
                        BoundMode::Lower => lower_bound(family, p, a.m, a.heads)?,
                        BoundMode::Closed | BoundMode::Propagate => {
                            let n = require(a.n, "n", mode)?;
                            let m = require(a.m, "m", mode)?;
                            let s = build_spec(family, p, n, m, a.heads, d)?;
                            if mode == BoundMode::Closed {
                                family_closed_form(&s)
                            } else {
                                propagate_bound(&s)
                            }
                        }
                    };
                    Ok(BoundPoint {
                        p,
                        rule_trace_id: bound.trace_id(),
                        bound,
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            BoundReport {
                mode: mode_name(mode),
                family,
                n: a.n,
                m: a.m,
                heads: a.heads,
                d,
                points,
            }
        }
    };
    match a.output.format.unwrap_or(Format::Json) {
        Format::Json => Ok(json(&report)),
        Format::Csv => csv_rows(
            ["p", "family", "mode", "log3", "exact", "rule_trace_id"],
            report.points.iter().map(|pt| {
                [
                    pt.p.to_string(),
                    report.family.as_str().to_string(),
                    report.mode.to_string(),
                    pt.bound.log3.to_string(),
                    pt.bound.exact.as_ref().map(ToString::to_string).unwrap_or_default(),
                    pt.rule_trace_id.clone(),
                ]
            }),
        ),
    }
}

fn lower_bound(family: Family, p: u32, m: Option<u64>, heads: u64) -> Result<Bound, CliError> {
    if family != Family::LinearTransformer {
        return Err(CliError::InvalidInput(
            "lower bounds are only available for linear transformers".into(),
        ));
    }
    let m = require(m, "m", BoundMode::Lower)?;
    Ok(transformer_lower_bound(p, m as u128, heads as u128, None)?)
}

fn cmd_verify(a: &VerifyArgs, caps: &Caps) -> Result<Outcome, CliError> {
    let plan = VerifyPlan {
        family: family_of(a.family),
        trials: a.trials,
        depths: a.p.0.clone(),
        ns: a.n.0.clone(),
        ms: a.m.0.clone(),
        heads: a.heads.0.clone(),
        degree: a.degree,
        seed: a.seeds.0[0],
    };
    let cfg = OracleConfig {
        partition_cap: caps.partition_cap,
        inf_mode: a.inf_mode.into(),
    };
    let report = run_verify(&plan, &cfg, caps.degree_cap)?;
    let body = match a.output.format.unwrap_or(Format::Json) {
        Format::Json => json(&report),
        Format::Csv => csv_body(|buf| report.write_csv(buf))?,
    };
    Ok(Outcome {
        body,
        failures: report.summary.failures,
    })
}

#[derive(Debug, Serialize)]
pub struct PlanReport {
    pub family: PlanFamily,
    pub budget: f64,
    pub c: f64,
    pub alpha: f64,
    #[serde(flatten)]
    pub result: PlanResult,
}

#[derive(Debug, Serialize)]
pub struct DepthReport {
    pub budget: u64,
    pub ratio: f64,
    pub c: f64,
    pub p: u32,
    pub d: u64,
    /// `p / log₂ d` at the selected cell.
    pub achieved_ratio: f64,
}

fn cmd_plan(a: &PlanArgs) -> Result<String, CliError> {
    let format = a.output.format.unwrap_or(Format::Json);
    if let Some(ratio) = a.ratio {
        if a.budget.is_nan() || a.budget < 1.0 || a.budget.fract() != 0.0 {
            return Err(CliError::InvalidInput(format!("--budget must be a positive integer with --ratio, got {}", a.budget)));
        }
        let budget = a.budget as u64;
        let (p, d) = depth_selection(budget, ratio, &QuadraticLaw { c: a.c }, a.p_max)?;
        let r = DepthReport {
            budget,
            ratio,
            c: a.c,
            p,
            d,
            achieved_ratio: p as f64 / (d as f64).log2(),
        };
        return match format {
            Format::Json => Ok(json(&r)),
            Format::Csv => csv_rows(
                ["budget", "ratio", "p", "d", "achieved_ratio"],
                [[budget.to_string(), ratio.to_string(), p.to_string(), d.to_string(), r.achieved_ratio.to_string()]],
            ),
        };
    }
    let family = match a.family {
        FamilyArg::Mixer => PlanFamily::Mixer,
        FamilyArg::Transformer => PlanFamily::Transformer,
    };
    let alpha = a.alpha.unwrap_or(family.alpha());
    let reduced = BudgetLaw { c: a.c }.reduced(a.budget)?;
    let result = grid_search_optimum(reduced, alpha)?;
    let r = PlanReport {
        family,
        budget: a.budget,
        c: a.c,
        alpha,
        result,
    };
    match format {
        Format::Json => Ok(json(&r)),
        Format::Csv => csv_rows(
            ["p_star", "d_star", "objective_value", "regime", "ratio_log2", "ratio_log3"],
            [[
                r.result.p_star.to_string(),
                r.result.d_star.to_string(),
                r.result.objective_value.to_string(),
                serde_json::to_value(r.result.regime)?.as_str().unwrap_or_default().to_string(),
                r.result.ratio_log2.to_string(),
                r.result.ratio_log3.to_string(),
            ]],
        ),
    }
}

#[derive(Debug, Serialize)]
pub struct GapRow {
    pub p: u32,
    pub m: f64,
    pub log3_lower: f64,
    pub log3_upper: f64,
    pub ratio: f64,
    /// The ratio as an exact fraction, independent of `m`.
    pub ratio_exact: String,
}

#[derive(Debug, Serialize)]
pub struct GapReport {
    pub rows: Vec<GapRow>,
    /// Dominance of the ratio over `(3/2)^p`; absent for short ranges.
    pub dominance: Option<DominanceVerdict>,
}

pub const GAP_CSV_HEADER: [&str; 5] = ["p", "m", "log3_lower", "log3_upper", "ratio"];

fn cmd_gap(a: &GapArgs) -> Result<String, CliError> {
    if let Some(&p) = a.p.0.iter().find(|&&p| p < 4) {
        return Err(CliError::InvalidInput(format!("gap curves start at p = 4, got {p}")));
    }
    if a.m.is_nan() || a.m <= 1.0 {
        return Err(CliError::InvalidInput(format!("--m must exceed 1, got {}", a.m)));
    }
    let rows = a
        .p
        .0
        .iter()
        .map(|&p| {
            Ok(GapRow {
                p,
                m: a.m,
                log3_lower: class_lower_log3(p, a.m),
                log3_upper: class_upper_log3(p, a.m),
                ratio: gap_ratio(p, a.m)?,
                ratio_exact: gap_ratio_exact(p).to_string(),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    match a.output.format.unwrap_or(Format::Csv) {
        Format::Csv => csv_rows(
            GAP_CSV_HEADER,
            rows.iter().map(|r| {
                [
                    r.p.to_string(),
                    r.m.to_string(),
                    r.log3_lower.to_string(),
                    r.log3_upper.to_string(),
                    r.ratio.to_string(),
                ]
            }),
        ),
        Format::Json => {
            let lb: Vec<_> = rows.iter().map(|r| (r.p, r.log3_lower)).collect();
            let ub: Vec<_> = rows.iter().map(|r| (r.p, r.log3_upper)).collect();
            let dominance = check_dominance(&lb, &ub, |p| 1.5f64.powi(p as i32)).ok();
            Ok(json(&GapReport { rows, dominance }))
        }
    }
}

fn cmd_sweep(a: &SweepArgs) -> Result<String, CliError> {
    let budgets = a.budget.as_ref().map_or_else(|| PAPER_BUDGETS.to_vec(), |b| b.0.clone());
    let ratios = a.ratio.as_ref().map_or_else(|| PAPER_RATIOS.to_vec(), |r| r.0.clone());
    let cfg = make_sweep_config(&budgets, &ratios, &a.seeds.0, &QuadraticLaw { c: a.c }, a.p_max)?;
    match a.output.format.unwrap_or(Format::Json) {
        Format::Json => Ok(json(&cfg)),
        Format::Csv => csv_rows(
            ["budget", "ratio", "seed", "p", "d"],
            cfg.cells
                .iter()
                .map(|c| [c.budget.to_string(), c.ratio.to_string(), c.seed.to_string(), c.p.to_string(), c.d.to_string()]),
        ),
    }
}
