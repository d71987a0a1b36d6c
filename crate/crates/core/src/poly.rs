//! Exact multivariate polynomials over the rationals and matrices of them.
//!
//! A network evaluated on a symbolic input `X ∈ R^{n×m}` becomes a
//! [`PolyMatrix`] whose entries are polynomials in the `n·m` input symbols.
//! Symbols are flattened row-major: `x(i, j)` has index `i·m + j`.
//!
//! All arithmetic is exact (`BigRational` coefficients) and every value is
//! kept in canonical form: no zero exponents inside a [`Monomial`], no zero
//! coefficients inside a [`Poly`].

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::PolyError;

/// Index of one scalar entry of the input matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarId(pub u32);

impl VarId {
    /// Row-major index of entry `(i, j)` of an `n×m` input.
    pub fn from_entry(i: usize, j: usize, m: usize) -> Self {
        VarId((i * m + j) as u32)
    }

    /// Inverse of [`VarId::from_entry`].
    pub fn entry(self, m: usize) -> (usize, usize) {
        let k = self.0 as usize;
        (k / m, k % m)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

/// Sparse power product `∏ x_v^{e_v}`, sorted by variable, exponents positive.
///
/// Ordered graded-lexicographically: total degree first, then the exponent
/// of the lowest-indexed variable, and so on. The constant monomial `1` is
/// the minimum.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial {
    factors: Vec<(VarId, u32)>,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial { factors: Vec::new() }
    }

    pub fn var(v: VarId) -> Self {
        Monomial {
            factors: vec![(v, 1)],
        }
    }

    /// Builds a monomial from arbitrary `(var, exp)` pairs, merging repeats
    /// and dropping zero exponents.
    pub fn from_pairs<I: IntoIterator<Item = (VarId, u32)>>(pairs: I) -> Self {
        let mut map: BTreeMap<VarId, u32> = BTreeMap::new();
        for (v, e) in pairs {
            *map.entry(v).or_insert(0) += e;
        }
        Monomial {
            factors: map.into_iter().filter(|&(_, e)| e > 0).collect(),
        }
    }

    pub fn factors(&self) -> &[(VarId, u32)] {
        &self.factors
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.factors.iter().map(|&(_, e)| e).sum()
    }

    pub fn exponent(&self, v: VarId) -> u32 {
        self.factors
            .binary_search_by_key(&v, |&(w, _)| w)
            .map(|i| self.factors[i].1)
            .unwrap_or(0)
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.factors.iter().map(|&(v, _)| v)
    }

    /// Splits into the factor over variables satisfying `left` and the rest.
    pub fn split<F: Fn(VarId) -> bool>(&self, left: F) -> (Monomial, Monomial) {
        let (a, b): (Vec<_>, Vec<_>) = self.factors.iter().partition(|&&(v, _)| left(v));
        (Monomial { factors: a }, Monomial { factors: b })
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.factors.len() + other.factors.len());
        let (mut i, mut j) = (0, 0);
        while i < self.factors.len() && j < other.factors.len() {
            let (va, ea) = self.factors[i];
            let (vb, eb) = other.factors[j];
            match va.cmp(&vb) {
                Ordering::Less => {
                    out.push((va, ea));
                    i += 1;
                }
                Ordering::Greater => {
                    out.push((vb, eb));
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((va, ea + eb));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.factors[i..]);
        out.extend_from_slice(&other.factors[j..]);
        Monomial { factors: out }
    }

    /// Applies a variable renaming. The map must be injective on the
    /// variables that occur.
    pub fn rename<F: Fn(VarId) -> VarId>(&self, f: F) -> Monomial {
        Monomial::from_pairs(self.factors.iter().map(|&(v, e)| (f(v), e)))
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        // Lex on dense exponent vectors, lowest variable index most significant.
        let (mut i, mut j) = (0, 0);
        loop {
            match (self.factors.get(i), other.factors.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some(&(va, ea)), Some(&(vb, eb))) => match va.cmp(&vb) {
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => match ea.cmp(&eb) {
                        Ordering::Equal => {
                            i += 1;
                            j += 1;
                        }
                        ord => return ord,
                    },
                },
            }
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return write!(f, "1");
        }
        for (k, (v, e)) in self.factors.iter().enumerate() {
            if k > 0 {
                write!(f, " * ")?;
            }
            write!(f, "{v}^{e}")?;
        }
        Ok(())
    }
}

/// A polynomial with exact rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, BigRational>,
}

fn rat(c: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(c))
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Poly::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        Poly::term(c, Monomial::one())
    }

    pub fn var(v: VarId) -> Self {
        Poly::term(BigRational::one(), Monomial::var(v))
    }

    pub fn term(c: BigRational, mono: Monomial) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(mono, c);
        }
        Poly { terms }
    }

    /// Collects `(coefficient, monomial)` pairs, summing like terms.
    pub fn from_terms<I: IntoIterator<Item = (BigRational, Monomial)>>(it: I) -> Self {
        let mut p = Poly::zero();
        for (c, m) in it {
            p.add_term(m, c);
        }
        p
    }

    pub fn from_int_terms<I: IntoIterator<Item = (i64, Monomial)>>(it: I) -> Self {
        Poly::from_terms(it.into_iter().map(|(c, m)| (rat(c), m)))
    }

    fn add_term(&mut self, mono: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(mono) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in ascending graded-lex order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, mono: &Monomial) -> BigRational {
        self.terms.get(mono).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Total degree; 0 for constants and for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Sorted list of variables that occur with nonzero coefficient.
    pub fn vars(&self) -> Vec<VarId> {
        let mut vs: Vec<VarId> = self.terms.keys().flat_map(|m| m.vars()).collect();
        vs.sort_unstable();
        vs.dedup();
        vs
    }

    pub fn scale(&self, c: &BigRational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, a)| (m.clone(), a * c)).collect(),
        }
    }

    pub fn square(&self) -> Poly {
        self * self
    }

    pub fn rename<F: Fn(VarId) -> VarId + Copy>(&self, f: F) -> Poly {
        Poly::from_terms(self.terms.iter().map(|(m, c)| (c.clone(), m.rename(f))))
    }

    /// Sum of absolute values of the coefficients.
    pub fn l1_norm(&self) -> BigRational {
        self.terms.values().map(|c| c.abs()).fold(BigRational::zero(), |a, b| a + b)
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &(-rhs)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr for Poly {
            type Output = Poly;
            fn $f(self, rhs: Poly) -> Poly {
                (&self).$f(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl fmt::Display for Poly {
    /// Canonical text form `coeff * x{i}^{e} * ...`, terms joined by ` + `
    /// in ascending monomial order. The constant term prints as its
    /// coefficient alone; the zero polynomial prints as `0`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            if m.is_one() {
                write!(f, "{c}")?;
            } else {
                write!(f, "{c} * {m}")?;
            }
        }
        Ok(())
    }
}

/// Dense matrix of exact rational constants (weights).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigRational>,
}

impl ConstMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<BigRational>) -> Result<Self, PolyError> {
        if data.len() != rows * cols {
            return Err(PolyError::ShapeMismatch {
                op: "const_matrix",
                left: (rows, cols),
                right: (data.len(), 1),
            });
        }
        Ok(ConstMatrix { rows, cols, data })
    }

    pub fn from_ints(rows: &[Vec<i64>]) -> Result<Self, PolyError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(PolyError::ShapeMismatch {
                op: "const_matrix",
                left: (r, c),
                right: (r, 0),
            });
        }
        ConstMatrix::new(r, c, rows.iter().flatten().map(|&x| rat(x)).collect())
    }

    pub fn identity(n: usize) -> Self {
        let data = (0..n * n)
            .map(|k| if k / n == k % n { BigRational::one() } else { BigRational::zero() })
            .collect();
        ConstMatrix { rows: n, cols: n, data }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.data[i * self.cols + j]
    }
}

/// `rows × cols` grid of polynomials, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PolyMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Poly>,
}

impl PolyMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Poly>) -> Result<Self, PolyError> {
        if rows == 0 || cols == 0 || entries.len() != rows * cols {
            return Err(PolyError::ShapeMismatch {
                op: "poly_matrix",
                left: (rows, cols),
                right: (entries.len(), 1),
            });
        }
        Ok(PolyMatrix { rows, cols, entries })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        PolyMatrix {
            rows,
            cols,
            entries: vec![Poly::zero(); rows * cols],
        }
    }

    /// The symbolic input `X`: entry `(i, j)` is the single variable `x(i·m + j)`.
    pub fn symbols(n: usize, m: usize) -> Self {
        PolyMatrix {
            rows: n,
            cols: m,
            entries: (0..n * m).map(|k| Poly::var(VarId(k as u32))).collect(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Poly {
        &self.entries[i * self.cols + j]
    }

    pub fn entries(&self) -> &[Poly] {
        &self.entries
    }

    fn check_same_shape(&self, other: &PolyMatrix, op: &'static str) -> Result<(), PolyError> {
        if self.shape() != other.shape() {
            return Err(PolyError::ShapeMismatch {
                op,
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &PolyMatrix) -> Result<PolyMatrix, PolyError> {
        self.check_same_shape(other, "add")?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn hadamard(&self, other: &PolyMatrix) -> Result<PolyMatrix, PolyError> {
        self.check_same_shape(other, "hadamard")?;
        Ok(self.zip_with(other, |a, b| a * b))
    }

    fn zip_with<F: Fn(&Poly, &Poly) -> Poly>(&self, other: &PolyMatrix, f: F) -> PolyMatrix {
        PolyMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn neg(&self) -> PolyMatrix {
        PolyMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|p| -p).collect(),
        }
    }

    pub fn matmul(&self, other: &PolyMatrix) -> Result<PolyMatrix, PolyError> {
        if self.cols != other.rows {
            return Err(PolyError::ShapeMismatch {
                op: "matmul",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let mut entries = Vec::with_capacity(self.rows * other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = Poly::zero();
                for l in 0..self.cols {
                    acc = &acc + &(self.get(i, l) * other.get(l, j));
                }
                entries.push(acc);
            }
        }
        Ok(PolyMatrix {
            rows: self.rows,
            cols: other.cols,
            entries,
        })
    }

    /// `W · F` for a constant matrix `W`.
    pub fn const_left_mul(w: &ConstMatrix, f: &PolyMatrix) -> Result<PolyMatrix, PolyError> {
        if w.cols != f.rows {
            return Err(PolyError::ShapeMismatch {
                op: "const_left_mul",
                left: w.shape(),
                right: f.shape(),
            });
        }
        let mut entries = Vec::with_capacity(w.rows * f.cols);
        for i in 0..w.rows {
            for j in 0..f.cols {
                let mut acc = Poly::zero();
                for l in 0..w.cols {
                    let c = w.get(i, l);
                    if !c.is_zero() {
                        acc = &acc + &f.get(l, j).scale(c);
                    }
                }
                entries.push(acc);
            }
        }
        Ok(PolyMatrix {
            rows: w.rows,
            cols: f.cols,
            entries,
        })
    }

    pub fn transpose(&self) -> PolyMatrix {
        let mut entries = Vec::with_capacity(self.entries.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                entries.push(self.get(i, j).clone());
            }
        }
        PolyMatrix {
            rows: self.cols,
            cols: self.rows,
            entries,
        }
    }

    /// Relocates entries: the entry at flat (row-major) index `k` moves to
    /// index `perm[k]`. The shape is unchanged.
    pub fn permute(&self, perm: &[usize]) -> Result<PolyMatrix, PolyError> {
        check_permutation(perm, self.entries.len())?;
        let mut entries = vec![Poly::zero(); self.entries.len()];
        for (k, p) in self.entries.iter().enumerate() {
            entries[perm[k]] = p.clone();
        }
        Ok(PolyMatrix {
            rows: self.rows,
            cols: self.cols,
            entries,
        })
    }

    /// σ₂ applied entrywise; over polynomials `|p|² = p²`.
    pub fn entrywise_square(&self) -> PolyMatrix {
        PolyMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(Poly::square).collect(),
        }
    }

    /// Maximum total degree over all entries.
    pub fn total_degree(&self) -> u32 {
        self.entries.iter().map(Poly::degree).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Poly::is_zero)
    }
}

/// Checks that `perm` is a bijection on `0..len`.
pub fn check_permutation(perm: &[usize], len: usize) -> Result<(), PolyError> {
    if perm.len() != len {
        return Err(PolyError::InvalidPermutation(format!(
            "expected {len} images, got {}",
            perm.len()
        )));
    }
    let mut seen = vec![false; len];
    for &p in perm {
        if p >= len || std::mem::replace(&mut seen[p], true) {
            return Err(PolyError::InvalidPermutation(format!(
                "{p} is out of range or repeated"
            )));
        }
    }
    Ok(())
}
