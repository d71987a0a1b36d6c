use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::Zero;

use super::partition::Partition;
use crate::error::OracleError;
use crate::poly::{Monomial, Poly};

/// Coefficient matrix of a polynomial with respect to a bipartition.
///
/// Rows are indexed by the A-side monomials that occur, columns by the
/// B-side monomials, both in ascending graded-lex order (the constant
/// monomial `1` included when it occurs). Entry `(r, c)` is the coefficient
/// of `row_index[r] · col_index[c]` in the source polynomial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoeffMatricization {
    pub row_index: Vec<Monomial>,
    pub col_index: Vec<Monomial>,
    pub matrix: Vec<Vec<BigRational>>,
}

impl CoeffMatricization {
    pub fn is_empty(&self) -> bool {
        self.row_index.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.row_index.len(), self.col_index.len())
    }

    pub fn rank(&self) -> usize {
        super::rank::exact_rank(&self.matrix)
    }
}

pub fn matricize(p: &Poly, part: &Partition) -> Result<CoeffMatricization, OracleError> {
    if let Some(v) = p.vars().into_iter().find(|&v| !part.contains(v)) {
        return Err(OracleError::UnknownVariable(v.0));
    }
    let split: Vec<(Monomial, Monomial, &BigRational)> = p
        .terms()
        .map(|(m, c)| {
            let (a, b) = m.split(|v| part.in_a(v));
            (a, b, c)
        })
        .collect();
    let rows: BTreeMap<&Monomial, usize> = index_of(split.iter().map(|(a, _, _)| a));
    let cols: BTreeMap<&Monomial, usize> = index_of(split.iter().map(|(_, b, _)| b));
    let mut matrix = vec![vec![BigRational::zero(); cols.len()]; rows.len()];
    for (a, b, c) in &split {
        matrix[rows[a]][cols[b]] = (*c).clone();
    }
    Ok(CoeffMatricization {
        row_index: rows.keys().map(|&m| m.clone()).collect(),
        col_index: cols.keys().map(|&m| m.clone()).collect(),
        matrix,
    })
}

fn index_of<'a, I: Iterator<Item = &'a Monomial>>(it: I) -> BTreeMap<&'a Monomial, usize> {
    let mut map: BTreeMap<&Monomial, usize> = it.map(|m| (m, 0)).collect();
    for (k, v) in map.values_mut().enumerate() {
        *v = k;
    }
    map
}

/// Separation rank of `p` with respect to `part`: the rank of its
/// coefficient matricization. Zero for the zero polynomial.
pub fn sep_rank_entry(p: &Poly, part: &Partition) -> Result<usize, OracleError> {
    Ok(matricize(p, part)?.rank())
}
