//! Declarative mixer / linearized-attention stacks and their symbolic evaluation.
//!
//! A mixer layer on `F ∈ R^{n×m}` computes
//!
//! ```text
//! odd k:   σ₂(W_k · π_e(F))          + [k ∈ R] π_r(F)     W_k ∈ R^{n×n}
//! even k:  σ₂((W_k · π_o(Fᵀ))ᵀ)      + [k ∈ R] π_r(F)     W_k ∈ R^{m×m}
//! ```
//!
//! and a linearized attention layer of degree `d` with `H` heads computes
//!
//! ```text
//! W_O · Σ_h ∏_{j=1..d} M_{j,h}  + [i ∈ R] F,   M_{j,h} = W_{j,h}F  if j ∈ T_h, else (W_{j,h}F)ᵀ
//! ```
//!
//! with `W_{j,h} ∈ R^{m×n}` and `W_O ∈ R^{n×m}`, so every product factor is
//! `m×m` and the output is `n×m` again.

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ArchError;
use crate::poly::{check_permutation, ConstMatrix, PolyMatrix};

pub const DEFAULT_DEGREE_CAP: u64 = 64;
/// Attention degree used by the standard (cubic) linearized attention.
pub const DEFAULT_ATTENTION_DEGREE: u32 = 3;
pub const WEIGHT_RANGE: i64 = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Mixer,
    LinearTransformer,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Mixer => "mixer",
            Family::LinearTransformer => "linear_transformer",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = ArchError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mixer" => Ok(Family::Mixer),
            "linear_transformer" | "transformer" => Ok(Family::LinearTransformer),
            other => Err(ArchError::InvalidShape(format!("unknown family `{other}`"))),
        }
    }
}

/// Odd layers mix along the token (row) axis, even layers along channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Token,
    Channel,
}

impl Orientation {
    pub fn of_layer(k: usize) -> Self {
        if k % 2 == 1 {
            Orientation::Token
        } else {
            Orientation::Channel
        }
    }
}

/// Entry permutations of a mixer; `None` is the identity.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixerPermutations {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi_e: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi_o: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi_r: Option<Vec<usize>>,
}

impl MixerPermutations {
    pub fn is_identity(&self) -> bool {
        let id = |p: &Option<Vec<usize>>| p.as_ref().is_none_or(|v| v.iter().enumerate().all(|(i, &x)| i == x));
        id(&self.pi_e) && id(&self.pi_o) && id(&self.pi_r)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixerLayerSpec {
    /// 1-based layer index.
    pub index: usize,
    pub orientation: Orientation,
    pub weight_shape: (usize, usize),
    pub residual: bool,
    pub permutations: MixerPermutations,
}

impl MixerLayerSpec {
    /// Length of the contraction performed by the weight matrix.
    pub fn contraction(&self) -> usize {
        self.weight_shape.1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttentionLayerSpec {
    pub index: usize,
    pub heads: usize,
    pub degree: u32,
    /// Per head, the 1-based factor indices that are *not* transposed.
    pub transpose_sets: Vec<Vec<usize>>,
    pub residual: bool,
    pub weight_shape: (usize, usize),
    pub output_shape: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LayerSpec {
    Mixer(MixerLayerSpec),
    Attention(AttentionLayerSpec),
}

impl LayerSpec {
    pub fn residual(&self) -> bool {
        match self {
            LayerSpec::Mixer(l) => l.residual,
            LayerSpec::Attention(l) => l.residual,
        }
    }
}

/// A validated architecture. Serializes to the flat JSON form
/// `{"family", "p", "n", "m", "H"?, "d"?, "residual", "transpose_sets"?, "permutations"?, "seed"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawArchSpec", into = "RawArchSpec")]
pub struct ArchSpec {
    pub family: Family,
    pub p: usize,
    pub n: usize,
    pub m: usize,
    /// Head count; 1 for mixers.
    pub heads: usize,
    /// Per-layer polynomial degree: 2 for σ₂ mixers, `d` for attention.
    pub degree: u32,
    pub layers: Vec<LayerSpec>,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawArchSpec {
    pub family: Family,
    pub p: usize,
    pub n: usize,
    pub m: usize,
    #[serde(rename = "H", default, skip_serializing_if = "Option::is_none")]
    pub heads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<u32>,
    #[serde(default)]
    pub residual: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transpose_sets: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permutations: Option<MixerPermutations>,
    #[serde(default)]
    pub seed: u64,
}

impl TryFrom<RawArchSpec> for ArchSpec {
    type Error = ArchError;
    fn try_from(raw: RawArchSpec) -> Result<Self, ArchError> {
        if raw.p == 0 {
            return identity_spec(&raw);
        }
        let spec = match raw.family {
            Family::Mixer => {
                if raw.transpose_sets.is_some() {
                    return Err(ArchError::InvalidShape("mixers take no transpose_sets".into()));
                }
                if raw.d.is_some_and(|d| d != 2) {
                    return Err(ArchError::InvalidShape("mixer layers have degree 2".into()));
                }
                let mut s = build_mixer(raw.p, raw.n, raw.m, &raw.residual, raw.permutations.unwrap_or_default())?;
                s.heads = raw.heads.unwrap_or(1);
                if s.heads == 0 {
                    return Err(ArchError::InvalidShape("H must be positive".into()));
                }
                s
            }
            Family::LinearTransformer => {
                if raw.permutations.is_some() {
                    return Err(ArchError::InvalidShape("transformers take no permutations".into()));
                }
                build_linear_transformer(
                    raw.p,
                    raw.n,
                    raw.m,
                    raw.heads.unwrap_or(1),
                    raw.d.unwrap_or(DEFAULT_ATTENTION_DEGREE),
                    raw.transpose_sets,
                    &raw.residual,
                )?
            }
        };
        Ok(spec.with_seed(raw.seed))
    }
}

/// The depth-0 network `y = X`.
fn identity_spec(raw: &RawArchSpec) -> Result<ArchSpec, ArchError> {
    check_dims(1, raw.n, raw.m)?;
    if !raw.residual.is_empty() {
        return Err(ArchError::InvalidShape("a depth-0 network has no residual layers".into()));
    }
    let degree = match raw.family {
        Family::Mixer => 2,
        Family::LinearTransformer => raw.d.unwrap_or(DEFAULT_ATTENTION_DEGREE),
    };
    Ok(ArchSpec {
        family: raw.family,
        p: 0,
        n: raw.n,
        m: raw.m,
        heads: raw.heads.unwrap_or(1),
        degree,
        layers: Vec::new(),
        seed: raw.seed,
    })
}

impl From<ArchSpec> for RawArchSpec {
    fn from(s: ArchSpec) -> Self {
        let residual = s.residual_set();
        let (transpose_sets, permutations) = match s.layers.first() {
            Some(LayerSpec::Attention(l)) => (Some(l.transpose_sets.clone()), None),
            Some(LayerSpec::Mixer(l)) if !l.permutations.is_identity() => (None, Some(l.permutations.clone())),
            _ => (None, None),
        };
        RawArchSpec {
            family: s.family,
            p: s.p,
            n: s.n,
            m: s.m,
            heads: Some(s.heads),
            d: Some(s.degree),
            residual,
            transpose_sets,
            permutations,
            seed: s.seed,
        }
    }
}

impl ArchSpec {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn residual_set(&self) -> Vec<usize> {
        self.layers
            .iter()
            .enumerate()
            .filter(|(_, l)| l.residual())
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// Number of input symbols, `n·m`.
    pub fn universe(&self) -> usize {
        self.n * self.m
    }

    /// Upper bound on the output degree: `degree^p`, saturating.
    pub fn degree_bound(&self) -> u64 {
        (self.degree as u64).saturating_pow(self.p.min(u32::MAX as usize) as u32)
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }
}

fn check_dims(p: usize, n: usize, m: usize) -> Result<(), ArchError> {
    if p == 0 || n == 0 || m == 0 {
        return Err(ArchError::InvalidShape(format!("need p, n, m >= 1 (got p={p}, n={n}, m={m})")));
    }
    Ok(())
}

fn residual_flags(p: usize, residual_set: &[usize]) -> Result<Vec<bool>, ArchError> {
    let mut flags = vec![false; p];
    for &k in residual_set {
        if k == 0 || k > p {
            return Err(ArchError::InvalidShape(format!("residual layer {k} outside 1..={p}")));
        }
        flags[k - 1] = true;
    }
    Ok(flags)
}

pub fn build_mixer(
    p: usize,
    n: usize,
    m: usize,
    residual_set: &[usize],
    permutations: MixerPermutations,
) -> Result<ArchSpec, ArchError> {
    check_dims(p, n, m)?;
    let flags = residual_flags(p, residual_set)?;
    for perm in [&permutations.pi_e, &permutations.pi_o, &permutations.pi_r].into_iter().flatten() {
        check_permutation(perm, n * m)?;
    }
    let layers = (1..=p)
        .map(|k| {
            let orientation = Orientation::of_layer(k);
            LayerSpec::Mixer(MixerLayerSpec {
                index: k,
                orientation,
                weight_shape: match orientation {
                    Orientation::Token => (n, n),
                    Orientation::Channel => (m, m),
                },
                residual: flags[k - 1],
                permutations: permutations.clone(),
            })
        })
        .collect();
    Ok(ArchSpec {
        family: Family::Mixer,
        p,
        n,
        m,
        heads: 1,
        degree: 2,
        layers,
        seed: 0,
    })
}

pub fn build_linear_transformer(
    p: usize,
    n: usize,
    m: usize,
    heads: usize,
    degree: u32,
    transpose_sets: Option<Vec<Vec<usize>>>,
    residual_set: &[usize],
) -> Result<ArchSpec, ArchError> {
    check_dims(p, n, m)?;
    if heads == 0 || degree == 0 {
        return Err(ArchError::InvalidShape(format!("need H, d >= 1 (got H={heads}, d={degree})")));
    }
    let flags = residual_flags(p, residual_set)?;
    let d = degree as usize;
    let sets = transpose_sets.unwrap_or_else(|| vec![(1..=d).collect(); heads]);
    if sets.len() != heads {
        return Err(ArchError::InvalidTransposeSet(format!("{} sets for {heads} heads", sets.len())));
    }
    let sets = sets
        .into_iter()
        .map(|mut t| {
            t.sort_unstable();
            t.dedup();
            if t.is_empty() || t.iter().any(|&j| j == 0 || j > d) {
                Err(ArchError::InvalidTransposeSet(format!("{t:?} is not a nonempty subset of 1..={d}")))
            } else {
                Ok(t)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let layers = (1..=p)
        .map(|i| {
            LayerSpec::Attention(AttentionLayerSpec {
                index: i,
                heads,
                degree,
                transpose_sets: sets.clone(),
                residual: flags[i - 1],
                weight_shape: (m, n),
                output_shape: (n, m),
            })
        })
        .collect();
    Ok(ArchSpec {
        family: Family::LinearTransformer,
        p,
        n,
        m,
        heads,
        degree,
        layers,
        seed: 0,
    })
}

/// Exact sum of weight-matrix entry counts.
pub fn param_count(spec: &ArchSpec) -> u64 {
    spec.layers
        .iter()
        .map(|l| match l {
            LayerSpec::Mixer(l) => (l.weight_shape.0 * l.weight_shape.1) as u64,
            LayerSpec::Attention(l) => {
                let w = (l.weight_shape.0 * l.weight_shape.1) as u64;
                let o = (l.output_shape.0 * l.output_shape.1) as u64;
                l.heads as u64 * l.degree as u64 * w + o
            }
        })
        .sum()
}

pub type IntMatrix = Vec<Vec<i64>>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerWeights {
    Mixer { w: IntMatrix },
    /// `heads[h][j]` is `W_{j+1,h+1}`.
    Attention { heads: Vec<Vec<IntMatrix>>, w_o: IntMatrix },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightAssignment {
    pub seed: u64,
    pub layers: Vec<LayerWeights>,
}

/// Deterministic integer weights, uniform over `[-9, 9] \ {0}`.
pub fn sample_weights(spec: &ArchSpec, seed: u64) -> WeightAssignment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |(r, c): (usize, usize)| -> IntMatrix {
        (0..r)
            .map(|_| {
                (0..c)
                    .map(|_| {
                        let v = rng.gen_range(1..=2 * WEIGHT_RANGE);
                        if v <= WEIGHT_RANGE {
                            -v
                        } else {
                            v - WEIGHT_RANGE
                        }
                    })
                    .collect()
            })
            .collect()
    };
    let layers = spec
        .layers
        .iter()
        .map(|l| match l {
            LayerSpec::Mixer(l) => LayerWeights::Mixer { w: draw(l.weight_shape) },
            LayerSpec::Attention(l) => LayerWeights::Attention {
                heads: (0..l.heads)
                    .map(|_| (0..l.degree).map(|_| draw(l.weight_shape)).collect())
                    .collect(),
                w_o: draw(l.output_shape),
            },
        })
        .collect();
    WeightAssignment { seed, layers }
}

fn to_const(w: &IntMatrix, want: (usize, usize), what: &str) -> Result<ConstMatrix, ArchError> {
    let shape = (w.len(), w.first().map_or(0, Vec::len));
    if shape != want || w.iter().any(|r| r.len() != want.1) {
        return Err(ArchError::WeightMismatch(format!("{what}: expected {want:?}, got {shape:?}")));
    }
    let data = w.iter().flatten().map(|&x| BigRational::from_integer(BigInt::from(x))).collect();
    Ok(ConstMatrix::new(want.0, want.1, data)?)
}

fn permute_opt(f: &PolyMatrix, perm: &Option<Vec<usize>>) -> Result<PolyMatrix, ArchError> {
    Ok(match perm {
        Some(p) => f.permute(p)?,
        None => f.clone(),
    })
}

fn mixer_layer(l: &MixerLayerSpec, w: &IntMatrix, f: &PolyMatrix) -> Result<PolyMatrix, ArchError> {
    let w = to_const(w, l.weight_shape, &format!("mixer layer {}", l.index))?;
    let pre = match l.orientation {
        Orientation::Token => PolyMatrix::const_left_mul(&w, &permute_opt(f, &l.permutations.pi_e)?)?,
        Orientation::Channel => {
            PolyMatrix::const_left_mul(&w, &permute_opt(&f.transpose(), &l.permutations.pi_o)?)?.transpose()
        }
    };
    let out = pre.entrywise_square();
    if l.residual {
        Ok(out.add(&permute_opt(f, &l.permutations.pi_r)?)?)
    } else {
        Ok(out)
    }
}

fn attention_layer(
    l: &AttentionLayerSpec,
    heads: &[Vec<IntMatrix>],
    w_o: &IntMatrix,
    f: &PolyMatrix,
) -> Result<PolyMatrix, ArchError> {
    if heads.len() != l.heads || heads.iter().any(|h| h.len() != l.degree as usize) {
        return Err(ArchError::WeightMismatch(format!(
            "attention layer {}: expected {} heads of {} matrices",
            l.index, l.heads, l.degree
        )));
    }
    let m = l.weight_shape.0;
    let mut sum = PolyMatrix::zeros(m, m);
    for (h, (mats, untransposed)) in heads.iter().zip(&l.transpose_sets).enumerate() {
        let mut prod: Option<PolyMatrix> = None;
        for (j, w) in mats.iter().enumerate() {
            let w = to_const(w, l.weight_shape, &format!("W[{},{}] of layer {}", j + 1, h + 1, l.index))?;
            let mut factor = PolyMatrix::const_left_mul(&w, f)?;
            if untransposed.binary_search(&(j + 1)).is_err() {
                factor = factor.transpose();
            }
            prod = Some(match prod {
                None => factor,
                Some(acc) => acc.matmul(&factor)?,
            });
        }
        sum = sum.add(&prod.expect("degree >= 1"))?;
    }
    let w_o = to_const(w_o, l.output_shape, &format!("W_O of layer {}", l.index))?;
    let out = PolyMatrix::const_left_mul(&w_o, &sum)?;
    if l.residual {
        Ok(out.add(f)?)
    } else {
        Ok(out)
    }
}

/// Evaluates the network on the symbolic input `X` (entries `x0 .. x{nm-1}`).
pub fn symbolic_forward(spec: &ArchSpec, w: &WeightAssignment, degree_cap: u64) -> Result<PolyMatrix, ArchError> {
    let degree = spec.degree_bound();
    if degree > degree_cap {
        return Err(ArchError::DegreeCapExceeded { degree, cap: degree_cap });
    }
    if w.layers.len() != spec.layers.len() {
        return Err(ArchError::WeightMismatch(format!(
            "{} weight layers for {} spec layers",
            w.layers.len(),
            spec.layers.len()
        )));
    }
    let mut f = PolyMatrix::symbols(spec.n, spec.m);
    for (layer, weights) in spec.layers.iter().zip(&w.layers) {
        f = match (layer, weights) {
            (LayerSpec::Mixer(l), LayerWeights::Mixer { w }) => mixer_layer(l, w, &f)?,
            (LayerSpec::Attention(l), LayerWeights::Attention { heads, w_o }) => attention_layer(l, heads, w_o, &f)?,
            _ => return Err(ArchError::WeightMismatch("layer kind differs from spec".into())),
        };
    }
    Ok(f)
}
