#![allow(dead_code)]

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::Rng;
use srk_core::oracle::Partition;
use srk_core::poly::{Monomial, Poly, PolyMatrix, VarId};

pub const VARS: u32 = 6;
pub const MAX_DEG: usize = 4;

/// Sparse polynomial over `x0..x{vars-1}` with small integer coefficients.
pub fn poly(vars: u32, max_deg: usize, max_terms: usize) -> impl Strategy<Value = Poly> {
    prop::collection::vec((-3i64..=3, prop::collection::vec(0..vars, 0..=max_deg)), 0..=max_terms).prop_map(
        |terms| {
            Poly::from_int_terms(
                terms
                    .into_iter()
                    .map(|(c, vs)| (c, Monomial::from_pairs(vs.into_iter().map(|v| (VarId(v), 1))))),
            )
        },
    )
}

pub fn poly_matrix(rows: usize, cols: usize) -> impl Strategy<Value = PolyMatrix> {
    prop::collection::vec(poly(VARS, MAX_DEG, 4), rows * cols)
        .prop_map(move |e| PolyMatrix::new(rows, cols, e).unwrap())
}

fn eval_at(p: &Poly, point: &[BigRational]) -> BigRational {
    p.terms().fold(BigRational::zero(), |acc, (mono, c)| {
        let v = mono
            .factors()
            .iter()
            .fold(c.clone(), |t, &(x, e)| t * num_traits::pow(point[x.index()].clone(), e as usize));
        acc + v
    })
}

/// Plain Gaussian elimination over the rationals.
pub fn gauss_rank(mut m: Vec<Vec<BigRational>>) -> usize {
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..m.len()).find(|&r| !m[r][c].is_zero()) else {
            continue;
        };
        m.swap(rank, piv);
        let inv = BigRational::one() / &m[rank][c];
        for r in 0..m.len() {
            if r != rank && !m[r][c].is_zero() {
                let f = &m[r][c] * &inv;
                for k in c..cols {
                    let d = &f * &m[rank][k];
                    m[r][k] -= d;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Separation rank estimated from the function's values: the rank of
/// `[f(a_i, b_j)]` over random integer points, as many as there are
/// distinct monomials on each side.
pub fn eval_rank<R: Rng>(p: &Poly, part: &Partition, rng: &mut R) -> usize {
    if p.is_zero() {
        return 0;
    }
    let side = |keep_a: bool| -> BTreeSet<Vec<(VarId, u32)>> {
        p.terms()
            .map(|(m, _)| {
                m.factors()
                    .iter()
                    .copied()
                    .filter(|&(v, _)| part.in_a(v) == keep_a)
                    .collect()
            })
            .collect()
    };
    let (na, nb) = (side(true).len(), side(false).len());
    let mut draw = |on_a: bool| -> Vec<BigRational> {
        (0..part.universe())
            .map(|v| {
                let x = if part.in_a(VarId(v as u32)) == on_a { rng.gen_range(-1_000_000_000i64..=1_000_000_000) } else { 0 };
                BigRational::from_integer(BigInt::from(x))
            })
            .collect()
    };
    let a_pts: Vec<_> = (0..na).map(|_| draw(true)).collect();
    let b_pts: Vec<_> = (0..nb).map(|_| draw(false)).collect();
    let m = a_pts
        .iter()
        .map(|a| {
            b_pts
                .iter()
                .map(|b| {
                    let pt: Vec<_> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                    eval_at(p, &pt)
                })
                .collect()
        })
        .collect();
    gauss_rank(m)
}
