//! Certified separation-rank bounds.
//!
//! Every [`Bound`] carries an exact big integer while it stays below
//! [`EXACT_BIT_LIMIT`] bits and always carries `log₃` of its value, so the
//! double-exponential closed forms stay usable at any depth.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize, Serializer};

use crate::arch::{ArchSpec, Family, LayerSpec};
use crate::error::BoundError;

/// Exact values are dropped (never rounded) above this many bits.
pub const EXACT_BIT_LIMIT: u64 = 1_000_000;

const LN3: f64 = 1.098_612_288_668_109_8;

pub fn log3(x: f64) -> f64 {
    x.ln() / LN3
}

/// `log₃` of a big integer; `-∞` for zero.
pub fn log3_big(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        return log3(x.to_f64().expect("finite below 2^1000"));
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().expect("64-bit mantissa");
    log3(top) + shift as f64 * std::f64::consts::LN_2 / LN3
}

/// `log₃(3^a + 3^b)` without leaving log space.
fn log3_sum(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + log3(1.0 + 3f64.powf(lo - hi))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bound {
    pub exact: Option<BigUint>,
    pub log3: f64,
    pub provenance: Vec<String>,
}

impl Serialize for Bound {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            exact: Option<String>,
            log3: f64,
            provenance: &'a [String],
        }
        Repr {
            exact: self.exact.as_ref().map(ToString::to_string),
            log3: self.log3,
            provenance: &self.provenance,
        }
        .serialize(s)
    }
}

impl Bound {
    pub fn exact(v: BigUint) -> Self {
        let log3 = log3_big(&v);
        Bound {
            exact: Some(v),
            log3,
            provenance: Vec::new(),
        }
    }

    pub fn from_u64(v: u64) -> Self {
        Bound::exact(BigUint::from(v))
    }

    /// A bound known only through its logarithm.
    pub fn from_log3(log3: f64) -> Self {
        Bound {
            exact: None,
            log3,
            provenance: Vec::new(),
        }
    }

    pub fn with_rule(mut self, rule: impl Into<String>) -> Self {
        self.provenance.push(rule.into());
        self
    }

    fn inherit(mut self, parents: &[&Bound]) -> Self {
        let mut prov: Vec<String> = parents.iter().flat_map(|b| b.provenance.iter().cloned()).collect();
        prov.append(&mut self.provenance);
        self.provenance = prov;
        self
    }

    fn cap(v: BigUint) -> Option<BigUint> {
        (v.bits() <= EXACT_BIT_LIMIT).then_some(v)
    }

    pub fn add(&self, other: &Bound) -> Bound {
        let exact = match (&self.exact, &other.exact) {
            (Some(a), Some(b)) => Bound::cap(a + b),
            _ => None,
        };
        Bound {
            log3: exact.as_ref().map_or_else(|| log3_sum(self.log3, other.log3), log3_big),
            exact,
            provenance: Vec::new(),
        }
        .inherit(&[self, other])
    }

    pub fn mul(&self, other: &Bound) -> Bound {
        let exact = match (&self.exact, &other.exact) {
            (Some(a), Some(b)) if a.bits() + b.bits() <= EXACT_BIT_LIMIT + 1 => Bound::cap(a * b),
            (Some(a), Some(b)) if a.is_zero() || b.is_zero() => Some(BigUint::zero()),
            _ => None,
        };
        Bound {
            log3: exact.as_ref().map_or(self.log3 + other.log3, log3_big),
            exact,
            provenance: Vec::new(),
        }
        .inherit(&[self, other])
    }

    pub fn scale(&self, c: u64) -> Bound {
        self.mul(&Bound::from_u64(c))
    }

    pub fn pow(&self, e: u64) -> Bound {
        let exact = self.exact.as_ref().and_then(|a| {
            if e == 0 {
                return Some(BigUint::one());
            }
            if a.bits().saturating_sub(1).saturating_mul(e) > EXACT_BIT_LIMIT {
                return None;
            }
            let e32 = u32::try_from(e).ok()?;
            Bound::cap(a.pow(e32))
        });
        Bound {
            log3: exact.as_ref().map_or(self.log3 * e as f64, log3_big),
            exact,
            provenance: self.provenance.clone(),
        }
    }

    /// `|log3 - log₃(exact)|` relative to `max(1, |log3|)`; zero when no exact value.
    pub fn track_disagreement(&self) -> f64 {
        match &self.exact {
            Some(v) if !v.is_zero() => (self.log3 - log3_big(v)).abs() / self.log3.abs().max(1.0),
            _ => 0.0,
        }
    }

    /// Compares the value of two bounds, exactly when possible.
    pub fn le(&self, other: &Bound) -> bool {
        match (&self.exact, &other.exact) {
            (Some(a), Some(b)) => a <= b,
            _ => self.log3 <= other.log3 + 1e-9 * other.log3.abs().max(1.0),
        }
    }

    /// Is the certified value at least `v`?
    pub fn covers(&self, v: u64) -> bool {
        match &self.exact {
            Some(e) => *e >= BigUint::from(v),
            None => v == 0 || log3(v as f64) <= self.log3 + 1e-9,
        }
    }

    pub fn trace_id(&self) -> String {
        self.provenance.join(">")
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.exact {
            Some(v) => write!(f, "{v} (log3 {:.6})", self.log3),
            None => write!(f, "3^{:.6}", self.log3),
        }
    }
}

/// Elementary separation-rank rules for the operations networks are built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Add,
    Permute,
    Transpose,
    Identity,
    HadamardSquare,
    ScalarMul,
    Matmul,
    LinearMap,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::Add => "add",
            Rule::Permute => "permute",
            Rule::Transpose => "transpose",
            Rule::Identity => "identity",
            Rule::HadamardSquare => "hadamard_square",
            Rule::ScalarMul => "scalar_mul",
            Rule::Matmul => "matmul",
            Rule::LinearMap => "linear_map",
        }
    }
}

impl FromStr for Rule {
    type Err = BoundError;
    fn from_str(s: &str) -> Result<Self, BoundError> {
        Ok(match s {
            "add" => Rule::Add,
            "permute" => Rule::Permute,
            "transpose" => Rule::Transpose,
            "identity" => Rule::Identity,
            "hadamard_square" => Rule::HadamardSquare,
            "scalar_mul" => Rule::ScalarMul,
            "matmul" => Rule::Matmul,
            "linear_map" => Rule::LinearMap,
            other => return Err(BoundError::UnknownRule(other.to_string())),
        })
    }
}

/// Applies one elementary rule.
///
/// `inputs` are the operand bounds (`k`, or `k_f, k_g`); `dim` is the
/// contraction length for `matmul` and `linear_map`.
pub fn elementary_rule_bound(rule: Rule, inputs: &[Bound], dim: Option<u64>) -> Result<Bound, BoundError> {
    let arg = |i: usize| {
        inputs.get(i).ok_or(BoundError::MissingInput {
            rule: rule.name().into(),
            what: "operand bound",
        })
    };
    let dim = || {
        dim.filter(|&d| d >= 1).ok_or(BoundError::MissingInput {
            rule: rule.name().into(),
            what: "dimension >= 1",
        })
    };
    let out = match rule {
        Rule::Identity => Bound::from_u64(2),
        Rule::Add => arg(0)?.add(arg(1)?),
        Rule::Permute | Rule::Transpose => arg(0)?.clone(),
        Rule::HadamardSquare => {
            let k = arg(0)?;
            match &k.exact {
                Some(v) => Bound::exact(v * (v + 1u32) / 2u32).inherit(&[k]),
                // C(k+1, 2) = k(k+1)/2 <= k²
                None => k.pow(2),
            }
        }
        Rule::ScalarMul => arg(0)?.mul(arg(1)?),
        Rule::Matmul => arg(0)?.mul(arg(1)?).scale(dim()?),
        Rule::LinearMap => arg(0)?.scale(dim()?),
    };
    Ok(out.with_rule(rule.name()))
}

/// One σ₂ mixer layer over a contraction of length `n`: `n²k² + k`.
pub fn mixer_layer_bound(k: &Bound, n: u64) -> Bound {
    let sq = k.pow(2).scale(n * n);
    let mut out = sq.add(k);
    out.provenance = k.provenance.clone();
    out.with_rule(format!("mixer_layer(n={n})"))
}

/// One linearized attention layer with equal-shape weights: `H·m^d·n^{d+1}·k^d`.
pub fn attention_layer_bound(k: &Bound, n: u64, m: u64, heads: u64, d: u32) -> Bound {
    let coeff = BigUint::from(heads) * BigUint::from(m).pow(d) * BigUint::from(n).pow(d + 1);
    let mut out = k.pow(d as u64).mul(&Bound::exact(coeff));
    out.provenance = k.provenance.clone();
    out.with_rule(format!("attention_layer(H={heads},n={n},m={m},d={d})"))
}

/// Folds the layer rules over the stack, starting from the identity leaf.
///
/// Mixer layers use their own contraction length; attention layers with a
/// residual connection add the incoming bound.
pub fn propagate_bound(spec: &ArchSpec) -> Bound {
    let mut k = elementary_rule_bound(Rule::Identity, &[], None).expect("identity takes no inputs");
    for layer in &spec.layers {
        k = match layer {
            LayerSpec::Mixer(l) => mixer_layer_bound(&k, l.contraction() as u64),
            LayerSpec::Attention(l) => {
                let body = attention_layer_bound(&k, spec.n as u64, spec.m as u64, l.heads as u64, l.degree);
                if l.residual {
                    let mut out = body.add(&k);
                    out.provenance = body.provenance;
                    out.with_rule("residual_add")
                } else {
                    body
                }
            }
        };
    }
    k
}

fn closed_form(base: BigUint, exponent: f64, rule: String) -> Bound {
    let log3 = exponent * log3_big(&base);
    let bits = exponent * base.bits() as f64;
    let exact = if bits > EXACT_BIT_LIMIT as f64 {
        None
    } else {
        u32::try_from(exponent as u64).ok().map(|e| base.pow(e))
    };
    match exact {
        Some(v) => Bound::exact(v).with_rule(rule),
        None => Bound::from_log3(log3).with_rule(rule),
    }
}

fn closed_base(n: u64, m: u64, heads: u64) -> BigUint {
    BigUint::from(2u32) * BigUint::from(heads) * BigUint::from(m).pow(2) * BigUint::from(n).pow(2)
}

/// `(2H·m²·n²)^{2^p}`.
pub fn mixer_closed_form(p: u32, n: u64, m: u64, heads: u64) -> Bound {
    closed_form(
        closed_base(n, m, heads),
        2f64.powi(p as i32),
        format!("mixer_closed_form(p={p},n={n},m={m},H={heads})"),
    )
}

/// `(2H·m²·n²)^{d^p}`.
pub fn transformer_closed_form(p: u32, n: u64, m: u64, heads: u64, d: u32) -> Bound {
    closed_form(
        closed_base(n, m, heads),
        (d as f64).powi(p as i32),
        format!("transformer_closed_form(p={p},n={n},m={m},H={heads},d={d})"),
    )
}

/// Closed-form upper bound for the family of `spec`.
pub fn family_closed_form(spec: &ArchSpec) -> Bound {
    let (p, n, m, h) = (spec.p as u32, spec.n as u64, spec.m as u64, spec.heads as u64);
    match spec.family {
        Family::Mixer => mixer_closed_form(p, n, m, h),
        Family::LinearTransformer => transformer_closed_form(p, n, m, h, spec.degree),
    }
}

/// Is `p < log₃ m`, i.e. `3^p < m`?
pub fn in_depth_efficient_regime(p: u32, m: u128) -> bool {
    3u128.checked_pow(p).is_some_and(|t| t < m)
}

/// Lower-bound formula `3^{p−2}·(log₃(m−H) + a)` with the default offset
/// `a = −p + 2 − log₃2`, clamped at 0. No regime check.
pub fn transformer_lower_bound_formula(p: u32, m: u128, heads: u128, offset: Option<f64>) -> f64 {
    let a = offset.unwrap_or(-(p as f64) + 2.0 - log3(2.0));
    let v = 3f64.powi(p as i32 - 2) * (log3((m - heads) as f64) + a);
    v.max(0.0)
}

/// `log₃` lower bound on the separation rank of some weight assignment of a
/// depth-`p` linearized transformer, valid for `p < log₃ m` and `H < m`.
pub fn transformer_lower_bound(p: u32, m: u128, heads: u128, offset: Option<f64>) -> Result<Bound, BoundError> {
    if p == 0 {
        return Err(BoundError::PreconditionViolation("p must be >= 1".into()));
    }
    if heads >= m {
        return Err(BoundError::PreconditionViolation(format!("H={heads} must be < m={m}")));
    }
    if !in_depth_efficient_regime(p, m) {
        return Err(BoundError::RegimeViolation(format!(
            "p={p} >= log3 m = {:.4}; the lower bound only holds for p < log3 m",
            log3(m as f64)
        )));
    }
    let v = transformer_lower_bound_formula(p, m, heads, offset);
    Ok(Bound::from_log3(v).with_rule(format!("transformer_lower_bound(p={p},m={m},H={heads})")))
}

/// Monomial-support bound for deep mixers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LargeDepthBound {
    /// `|{a ∈ N^{nm} : Σa ≤ 2^p}| = C(2^p + nm, nm)`
    #[serde(serialize_with = "ser_big")]
    pub exact_count: BigUint,
    /// `2^p · C(2^p + nm, nm)`
    #[serde(serialize_with = "ser_big")]
    pub chain_bound: BigUint,
    /// The literal sum `Σ_{l=1}^{2^p} C(l + nm − 1, nm)`, kept for comparison.
    #[serde(serialize_with = "ser_big")]
    pub literal_sum: BigUint,
    /// Analytic envelope `p·nm + p + nm·log₂e` on `log₂ γ`, valid for `p > log₂ m`.
    pub log2_envelope: f64,
}

fn ser_big<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

impl LargeDepthBound {
    pub fn as_bound(&self) -> Bound {
        Bound::exact(self.exact_count.clone()).with_rule("large_depth_monomial_count")
    }
}

pub fn binomial(n: &BigUint, k: u64) -> BigUint {
    if BigUint::from(k) > *n {
        return BigUint::zero();
    }
    let rest = n - BigUint::from(k);
    let k = match rest.to_u64() {
        Some(r) if r < k => r,
        _ => k,
    };
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - BigUint::from(i)) / BigUint::from(i + 1);
    }
    acc
}

pub fn large_p_mixer_bound(p: u32, nm: u64) -> LargeDepthBound {
    let top = BigUint::one() << p;
    let exact_count = binomial(&(&top + nm), nm);
    // Σ_{l=1}^{L} C(l+k−1, k) = C(L+k, k+1)
    let literal_sum = binomial(&(&top + nm), nm + 1);
    LargeDepthBound {
        chain_bound: &top * &exact_count,
        exact_count,
        literal_sum,
        log2_envelope: p as f64 * nm as f64 + p as f64 + nm as f64 * std::f64::consts::LOG2_E,
    }
}

/// `3^{p−3}·log₃m / (11·2^p·log₃m) = 3^{p−3} / (11·2^p)`, exactly.
pub fn gap_ratio_exact(p: u32) -> BigRational {
    let num = BigUint::from(3u32).pow(p);
    let den = BigUint::from(27u32 * 11) * (BigUint::one() << p);
    BigRational::new(num.into(), den.into())
}

pub fn gap_ratio(p: u32, m: f64) -> Result<f64, BoundError> {
    if p < 4 {
        return Err(BoundError::PreconditionViolation(format!("gap ratio needs p >= 4, got {p}")));
    }
    if m <= 1.0 {
        return Err(BoundError::PreconditionViolation(format!("gap ratio needs m > 1, got {m}")));
    }
    Ok(gap_ratio_exact(p).to_f64().unwrap_or(f64::INFINITY))
}

/// `log₃` lower bound on the transformer class, `3^{p−3}·log₃m`.
pub fn class_lower_log3(p: u32, m: f64) -> f64 {
    3f64.powi(p as i32 - 3) * log3(m)
}

/// `log₃` upper bound on the mixer class, `11·2^p·log₃m`.
pub fn class_upper_log3(p: u32, m: f64) -> f64 {
    11.0 * 2f64.powi(p as i32) * log3(m)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    pub holds: bool,
    /// `2^p·log₃(2H·m²·n²)`
    pub mixer_upper_log3: f64,
    /// `3^{p−2}·log₃(m−H)`
    pub transformer_lower_log3: f64,
}

/// Checks the endpoint of the depth-13 inequality chain,
/// `2^p·log₃(2Hm²n²) ≤ 3^{p−2}·log₃(m−H)`.
///
/// Preconditions: `m ≥ 9`, `1 ≤ H < m/2`, `n ≤ m²`, `3^p < m`.
pub fn verify_regime_conditions(p: u32, m: u128, n: u128, heads: u128) -> Result<RegimeReport, BoundError> {
    let mut failed = Vec::new();
    if m < 9 {
        failed.push(format!("m >= 9 (m={m})"));
    }
    if heads == 0 || 2 * heads >= m {
        failed.push(format!("1 <= H < m/2 (H={heads}, m={m})"));
    }
    if m.checked_mul(m).is_some_and(|m2| n > m2) {
        failed.push(format!("n <= m^2 (n={n})"));
    }
    if !in_depth_efficient_regime(p, m) {
        failed.push(format!("p < log3 m (p={p}, log3 m={:.4})", log3(m as f64)));
    }
    if !failed.is_empty() {
        return Err(BoundError::PreconditionViolation(failed.join("; ")));
    }
    let (mf, nf, hf) = (m as f64, n as f64, heads as f64);
    let lhs = 2f64.powi(p as i32) * (log3(2.0) + log3(hf) + 2.0 * log3(mf) + 2.0 * log3(nf));
    let rhs = 3f64.powi(p as i32 - 2) * log3((m - heads) as f64);
    Ok(RegimeReport {
        holds: lhs <= rhs,
        mixer_upper_log3: lhs,
        transformer_lower_log3: rhs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub p: u32,
    pub upper: Bound,
    pub lower: Option<Bound>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassBoundCurve {
    pub family: Family,
    pub n: u64,
    pub m: u64,
    pub heads: u64,
    pub d: u32,
    pub points: Vec<CurvePoint>,
}

/// Closed-form upper bounds (and, for transformers in regime, lower bounds)
/// over a range of depths.
pub fn class_bound_curve(
    family: Family,
    n: u64,
    m: u64,
    heads: u64,
    d: u32,
    depths: impl IntoIterator<Item = u32>,
) -> ClassBoundCurve {
    let points = depths
        .into_iter()
        .map(|p| match family {
            Family::Mixer => CurvePoint {
                p,
                upper: mixer_closed_form(p, n, m, heads),
                lower: None,
            },
            Family::LinearTransformer => CurvePoint {
                p,
                upper: transformer_closed_form(p, n, m, heads, d),
                lower: transformer_lower_bound(p, m as u128, heads as u128, None).ok(),
            },
        })
        .collect();
    ClassBoundCurve {
        family,
        n,
        m,
        heads,
        d,
        points,
    }
}

pub const CURVE_CSV_HEADER: [&str; 6] = [
    "p",
    "family",
    "log3_upper",
    "log3_lower",
    "exact_upper_if_available",
    "rule_trace_id",
];

impl ClassBoundCurve {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(CURVE_CSV_HEADER)?;
        for pt in &self.points {
            out.write_record([
                pt.p.to_string(),
                self.family.as_str().to_string(),
                pt.upper.log3.to_string(),
                pt.lower.as_ref().map(|b| b.log3.to_string()).unwrap_or_default(),
                pt.upper.exact.as_ref().map(ToString::to_string).unwrap_or_default(),
                pt.upper.trace_id(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}
