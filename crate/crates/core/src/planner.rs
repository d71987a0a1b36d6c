//! Depth/width planning under a parameter budget `|Θ| = C·p·d²`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::PlanError;

pub const TRANSFORMER_ALPHA: f64 = 3.0;
pub const MIXER_ALPHA: f64 = 2.0;
pub const DEFAULT_P_MAX: u32 = 64;
/// Budgets of the reference sweep, in parameters (K = 1024).
pub const PAPER_BUDGETS: [u64; 4] = [32 * 1024, 64 * 1024, 128 * 1024, 256 * 1024];
pub const PAPER_RATIOS: [f64; 6] = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0];
pub const PAPER_SEEDS: [u64; 6] = [0, 1, 2, 3, 4, 5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanFamily {
    Transformer,
    Mixer,
}

impl PlanFamily {
    /// Exponent base of the depth-efficient regime.
    pub fn alpha(self) -> f64 {
        match self {
            PlanFamily::Transformer => TRANSFORMER_ALPHA,
            PlanFamily::Mixer => MIXER_ALPHA,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetLaw {
    pub c: f64,
}

impl Default for BudgetLaw {
    fn default() -> Self {
        BudgetLaw { c: 1.0 }
    }
}

impl BudgetLaw {
    /// `D = B / C`.
    pub fn reduced(&self, budget: f64) -> Result<f64, PlanError> {
        if self.c.is_nan() || self.c <= 0.0 || budget.is_nan() || budget <= 0.0 {
            return Err(PlanError::InvalidInput(format!("need C > 0 and B > 0 (C={}, B={budget})", self.c)));
        }
        Ok(budget / self.c)
    }
}

fn log_base(x: f64, alpha: f64) -> f64 {
    x.ln() / alpha.ln()
}

/// `p ≤ log_α d`, with the boundary counted as depth-efficient.
fn is_depth_efficient(p: u32, d: u64, alpha: f64) -> bool {
    let l = log_base(d as f64, alpha);
    p as f64 <= l + 1e-9 * l.abs().max(1.0)
}

/// `α^p·log_α d` for `p ≤ log_α d`, else `d·log_α d`.
pub fn piecewise_objective(p: u32, d: u64, alpha: f64) -> f64 {
    let l = log_base(d as f64, alpha);
    if is_depth_efficient(p, d, alpha) {
        alpha.powi(p as i32) * l
    } else {
        d as f64 * l
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    DepthEfficient,
    Saturated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanResult {
    pub p_star: u32,
    pub d_star: u64,
    pub objective_value: f64,
    pub regime: Regime,
    /// `p / log₂ d`
    pub ratio_log2: f64,
    /// `p / log₃ d`
    pub ratio_log3: f64,
}

impl PlanResult {
    fn new(p: u32, d: u64, alpha: f64) -> Self {
        PlanResult {
            p_star: p,
            d_star: d,
            objective_value: piecewise_objective(p, d, alpha),
            regime: if is_depth_efficient(p, d, alpha) {
                Regime::DepthEfficient
            } else {
                Regime::Saturated
            },
            ratio_log2: p as f64 / (d as f64).log2(),
            ratio_log3: p as f64 / log_base(d as f64, 3.0),
        }
    }
}

/// Integer optimum of the objective over `{(p, d) : p·d² ≤ D}`.
///
/// For fixed `p` the objective increases in `d` within each regime, so only
/// the widest width and the widest width still in the saturated regime
/// (`d < α^p`) can win. Ties go to the smaller `p`, then the smaller `d`.
pub fn grid_search_optimum(budget: f64, alpha: f64) -> Result<PlanResult, PlanError> {
    if budget.is_nan() || budget < 4.0 || alpha.is_nan() || alpha <= 1.0 {
        return Err(PlanError::InvalidInput(format!("need D >= 4 and alpha > 1 (D={budget}, alpha={alpha})")));
    }
    let d_total = budget.floor() as u64;
    let best = (1..=d_total)
        .into_par_iter()
        .map(|p| {
            let d_max = ((d_total / p) as f64).sqrt().floor() as u64;
            let d_max = fix_isqrt(d_max, d_total / p);
            let p = p as u32;
            let mut cands = Vec::with_capacity(2);
            let sat = alpha.powi(p as i32).ceil() - 1.0;
            if sat >= 1.0 && (sat as u64) < d_max {
                let mut ds = sat as u64;
                while ds + 1 < d_max && !is_depth_efficient(p, ds + 1, alpha) {
                    ds += 1;
                }
                while ds > 1 && is_depth_efficient(p, ds, alpha) {
                    ds -= 1;
                }
                cands.push(ds);
            }
            cands.push(d_max);
            cands
                .into_iter()
                .map(|d| (piecewise_objective(p, d, alpha), p, d))
                .fold(None, pick_better)
                .expect("at least one candidate")
        })
        .map(Some)
        .reduce(|| None, |a, b| match (a, b) {
            (None, x) | (x, None) => x,
            (Some(a), Some(b)) => pick_better(Some(a), b),
        })
        .expect("D >= 4 gives at least one cell");
    Ok(PlanResult::new(best.1, best.2, alpha))
}

/// Largest `d` with `d² ≤ x`, correcting float rounding of `√x`.
fn fix_isqrt(mut d: u64, x: u64) -> u64 {
    while d * d > x {
        d -= 1;
    }
    while (d + 1) * (d + 1) <= x {
        d += 1;
    }
    d
}

type Cell = (f64, u32, u64);

fn pick_better(best: Option<Cell>, c: Cell) -> Option<Cell> {
    match best {
        None => Some(c),
        Some(b) => {
            let c_wins = c.0 > b.0 || (c.0 == b.0 && (c.1, c.2) < (b.1, b.2));
            Some(if c_wins { c } else { b })
        }
    }
}

/// Maps `(p, B)` to the width used for depth `p` under budget `B`.
pub trait CountLaw: Sync {
    fn width(&self, p: u32, budget: u64) -> u64;
}

/// Width `round(√(B / (C·p)))`, halves rounded up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticLaw {
    pub c: f64,
}

impl Default for QuadraticLaw {
    fn default() -> Self {
        QuadraticLaw { c: 1.0 }
    }
}

impl CountLaw for QuadraticLaw {
    fn width(&self, p: u32, budget: u64) -> u64 {
        ((budget as f64 / (self.c * p as f64)).sqrt() + 0.5).floor() as u64
    }
}

/// Widest `d` whose exact parameter count `params(p, d)` fits in the budget.
pub struct ParamCountLaw<F: Fn(u32, u64) -> u64 + Sync> {
    pub params: F,
}

impl<F: Fn(u32, u64) -> u64 + Sync> CountLaw for ParamCountLaw<F> {
    fn width(&self, p: u32, budget: u64) -> u64 {
        let mut d = 0;
        while (self.params)(p, d + 1) <= budget {
            d += 1;
        }
        d
    }
}

/// `p / log₂ d(p, B) > R`; a width of 1 makes the ratio infinite.
fn ratio_exceeds(p: u32, d: u64, ratio: f64) -> bool {
    d >= 1 && p as f64 / (d as f64).log2() > ratio
}

/// Smallest depth whose width satisfies `p / log₂ d(p, B) > R`.
pub fn depth_selection(budget: u64, ratio: f64, law: &dyn CountLaw, p_max: u32) -> Result<(u32, u64), PlanError> {
    (1..=p_max)
        .map(|p| (p, law.width(p, budget)))
        .find(|&(p, d)| ratio_exceeds(p, d, ratio))
        .ok_or(PlanError::NoFeasibleDepth { budget, ratio, p_max })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub budget: u64,
    pub ratio: f64,
    pub seed: u64,
    pub p: u32,
    pub d: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub optimizer: String,
    pub lr: f64,
    pub weight_decay: f64,
    pub betas: [f64; 2],
    pub batch_size: u32,
    pub epochs: u32,
    pub patch: [u32; 2],
    pub dropout: f64,
    pub augment: Vec<String>,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            optimizer: "adam".into(),
            lr: 1e-3,
            weight_decay: 5e-5,
            betas: [0.9, 0.999],
            batch_size: 128,
            epochs: 40,
            patch: [4, 4],
            dropout: 0.5,
            augment: vec!["random_crop".into(), "normalize".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub cells: Vec<SweepCell>,
    pub hyperparameters: Hyperparameters,
}

impl SweepConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sweep serializes")
    }
}

/// Cross product budgets × ratios × seeds (in that nesting order) with
/// each cell's depth chosen by [`depth_selection`].
pub fn make_sweep_config(
    budgets: &[u64],
    ratios: &[f64],
    seeds: &[u64],
    law: &dyn CountLaw,
    p_max: u32,
) -> Result<SweepConfig, PlanError> {
    if budgets.is_empty() || ratios.is_empty() || seeds.is_empty() {
        return Err(PlanError::InvalidInput("budgets, ratios and seeds must be nonempty".into()));
    }
    let mut cells = Vec::with_capacity(budgets.len() * ratios.len() * seeds.len());
    for &budget in budgets {
        for &ratio in ratios {
            let (p, d) = depth_selection(budget, ratio, law, p_max)?;
            cells.extend(seeds.iter().map(|&seed| SweepCell { budget, ratio, seed, p, d }));
        }
    }
    Ok(SweepConfig {
        cells,
        hyperparameters: Hyperparameters::default(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceVerdict {
    pub dominates: bool,
    pub eventually_increasing: bool,
    pub bounded_below: bool,
    /// `min ratio(p)/f(p)` over the tail of the range.
    pub lower_constant: f64,
    /// `min tail q / q(tail start)`; below 1/2 counts as decay.
    pub tail_retention: f64,
}

pub const MIN_DOMINANCE_POINTS: usize = 8;

/// Numerical Ω-check that `lb/ub` grows at least like `f`.
///
/// Over the second half of the shared `p` range, `lb/ub` must be
/// nondecreasing and `q = (lb/ub)/f` must stay positive without losing more
/// than half of its value from the start of that half.
pub fn check_dominance(
    lb: &[(u32, f64)],
    ub: &[(u32, f64)],
    growth: impl Fn(u32) -> f64,
) -> Result<DominanceVerdict, PlanError> {
    let ratios: Vec<(u32, f64)> = lb
        .iter()
        .filter_map(|&(p, l)| ub.iter().find(|&&(q, _)| q == p).map(|&(_, u)| (p, l / u)))
        .collect();
    if ratios.len() < MIN_DOMINANCE_POINTS {
        return Err(PlanError::InsufficientRange {
            need: MIN_DOMINANCE_POINTS,
            got: ratios.len(),
        });
    }
    let tail = &ratios[ratios.len() / 2..];
    let eventually_increasing = tail.windows(2).all(|w| w[1].1 >= w[0].1 * (1.0 - 1e-12));
    let q: Vec<f64> = tail.iter().map(|&(p, r)| r / growth(p)).collect();
    let lower_constant = q.iter().copied().fold(f64::INFINITY, f64::min);
    let tail_retention = lower_constant / q[0];
    let bounded_below = lower_constant > 0.0 && lower_constant.is_finite() && tail_retention >= 0.5;
    Ok(DominanceVerdict {
        dominates: eventually_increasing && bounded_below,
        eventually_increasing,
        bounded_below,
        lower_constant,
        tail_retention,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DepthThreshold {
    /// `log₂ 3`
    pub value: f64,
    /// The three-decimal figure usually quoted, 1.584.
    pub quoted: f64,
}

/// Depth-scaling factor below which the attention class keeps an exponential edge.
pub fn depth_scaling_threshold() -> DepthThreshold {
    DepthThreshold {
        value: 3f64.log2(),
        quoted: 1.584,
    }
}

/// Base `3 / 2^α` of the dominance growth when mixers are `α` times deeper.
pub fn dominance_base(alpha: f64) -> f64 {
    3.0 / 2f64.powf(alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn objective_branches() {
        assert!((piecewise_objective(3, 27, 3.0) - 81.0).abs() < 1e-9);
        assert!((piecewise_objective(1, 243, 3.0) - 15.0).abs() < 1e-9);
        let v = piecewise_objective(5, 108, 3.0);
        assert!((v - 108.0 * 108f64.ln() / 3f64.ln()).abs() < 1e-9);
        assert!((v - 460.2).abs() < 0.1);
        assert!(is_depth_efficient(3, 27, 3.0));
        assert!(!is_depth_efficient(4, 27, 3.0));
    }

    #[test]
    fn transformer_witness() {
        let r = grid_search_optimum(59049.0, 3.0).unwrap();
        assert_eq!((r.p_star, r.d_star), (5, 108));
        assert_eq!(r.regime, Regime::Saturated);
        assert!((r.p_star as f64 - 108f64.ln() / 3f64.ln()).abs() <= 1.0);
        let r = grid_search_optimum(2187.0, 3.0).unwrap();
        assert!((r.p_star as f64 - (r.d_star as f64).ln() / 3f64.ln()).abs() <= 1.0);
    }

    #[test]
    fn mixer_ratio_band() {
        let r = grid_search_optimum(2187.0, 2.0).unwrap();
        assert!(r.ratio_log2 > 1.0 && r.ratio_log2 < 2.0, "{r:?}");
    }

    #[test]
    fn grid_rejects_tiny_budget() {
        assert!(grid_search_optimum(3.0, 3.0).is_err());
        assert!(grid_search_optimum(100.0, 1.0).is_err());
    }

    #[test]
    fn depth_selection_reference() {
        let law = QuadraticLaw::default();
        assert_eq!(depth_selection(2187, 1.0, &law, 64), Ok((5, 21)));
        let ratios: Vec<f64> = (1..=5)
            .map(|p| p as f64 / (law.width(p, 2187) as f64).log2())
            .collect();
        let want = [0.18, 0.40, 0.63, 0.89, 1.14];
        for (r, w) in ratios.iter().zip(want) {
            assert!((r - w).abs() < 0.01, "{ratios:?}");
        }
        assert_eq!(depth_selection(5000, 0.0, &law, 64).unwrap().0, 1);
        assert!(matches!(
            depth_selection(2187, 100.0, &law, 64),
            Err(PlanError::NoFeasibleDepth { .. })
        ));
    }

    #[test]
    fn width_rounding_half_up() {
        // B/p = 42.25 -> sqrt = 6.5 -> 7
        assert_eq!(QuadraticLaw::default().width(4, 169), 7);
        assert_eq!(QuadraticLaw::default().width(1, 48), 7);
        assert_eq!(QuadraticLaw { c: 2.0 }.width(1, 50), 5);
    }

    #[test]
    fn param_count_law() {
        let law = ParamCountLaw {
            params: |p: u32, d: u64| p as u64 * d * d + 10 * d,
        };
        assert_eq!(law.width(2, 100), 5);
        assert_eq!(depth_selection(100, 0.0, &law, 8).unwrap(), (1, 6));
    }

    #[test]
    fn sweep_defaults() {
        let law = QuadraticLaw::default();
        let cfg = make_sweep_config(&PAPER_BUDGETS, &PAPER_RATIOS, &PAPER_SEEDS, &law, DEFAULT_P_MAX).unwrap();
        assert_eq!(cfg.cells.len(), 144);
        for c in &cfg.cells {
            assert!(ratio_exceeds(c.p, c.d, c.ratio));
            if c.p > 1 {
                assert!(!ratio_exceeds(c.p - 1, law.width(c.p - 1, c.budget), c.ratio));
            }
        }
        let one = make_sweep_config(&[32768], &[1.0], &[0], &law, DEFAULT_P_MAX).unwrap();
        assert_eq!(one.cells.len(), 1);
        assert!(make_sweep_config(&[], &[1.0], &[0], &law, 64).is_err());
    }

    #[test]
    fn sweep_json_shape() {
        let cfg = make_sweep_config(&[2187], &[1.0], &[0], &QuadraticLaw::default(), 64).unwrap();
        let v: serde_json::Value = serde_json::from_str(&cfg.to_json()).unwrap();
        assert_eq!(
            v["cells"][0],
            serde_json::json!({"budget": 2187, "ratio": 1.0, "seed": 0, "p": 5, "d": 21})
        );
        assert_eq!(
            v["hyperparameters"],
            serde_json::json!({
                "optimizer": "adam", "lr": 1e-3, "weight_decay": 5e-5, "betas": [0.9, 0.999],
                "batch_size": 128, "epochs": 40, "patch": [4, 4], "dropout": 0.5,
                "augment": ["random_crop", "normalize"]
            })
        );
    }

    type Curve = Vec<(u32, f64)>;

    fn curves(m: f64, range: std::ops::RangeInclusive<u32>) -> (Curve, Curve) {
        let lm = m.ln() / 3f64.ln();
        let lb = range.clone().map(|p| (p, 3f64.powi(p as i32 - 3) * lm)).collect();
        let ub = range.map(|p| (p, 11.0 * 2f64.powi(p as i32) * lm)).collect();
        (lb, ub)
    }

    #[test]
    fn dominance_of_class_bounds() {
        let (lb, ub) = curves(81.0, 4..=60);
        let v = check_dominance(&lb, &ub, |p| 1.5f64.powi(p as i32)).unwrap();
        assert!(v.dominates);
        assert!((v.lower_constant - 1.0 / 297.0).abs() < 1e-12);
        let v = check_dominance(&lb, &ub, |p| 1.6f64.powi(p as i32)).unwrap();
        assert!(!v.dominates);
        assert!(v.eventually_increasing);
    }

    #[test]
    fn dominance_negative_and_scaled_depth() {
        let lb: Vec<_> = (1..=20).map(|p| (p, 2f64.powi(p as i32))).collect();
        let v = check_dominance(&lb, &lb, |p| 1.5f64.powi(p as i32)).unwrap();
        assert!(!v.dominates);
        let lb: Vec<_> = (1..=40).map(|p| (p, 3f64.powi(p as i32))).collect();
        let ub: Vec<_> = (1..=40).map(|p| (p, 2f64.powf(1.3 * p as f64))).collect();
        let base = dominance_base(1.3);
        assert!(check_dominance(&lb, &ub, |p| base.powi(p as i32)).unwrap().dominates);
        assert!(matches!(
            check_dominance(&lb[..5], &ub, |_| 1.0),
            Err(PlanError::InsufficientRange { need: 8, got: 5 })
        ));
    }

    #[test]
    fn threshold() {
        let t = depth_scaling_threshold();
        assert_eq!(t.quoted, 1.584);
        assert!((t.value - 1.584_962_500_721_156).abs() < 1e-12);
        assert!(dominance_base(1.5) > 1.0);
        assert!(dominance_base(1.6) < 1.0);
        assert!((dominance_base(t.value) - 1.0).abs() < 1e-12);
    }
}
