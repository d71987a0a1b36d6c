//! Exact rank by fraction-free (Bareiss) elimination.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Rank over the rationals of a rectangular matrix given as rows.
pub fn exact_rank(m: &[Vec<BigRational>]) -> usize {
    let rows: Vec<Vec<BigInt>> = m.iter().map(|row| clear_denominators(row)).collect();
    integer_rank(rows)
}

/// Scales a rational row by the lcm of its denominators.
fn clear_denominators(row: &[BigRational]) -> Vec<BigInt> {
    let l = row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    row.iter().map(|x| x.numer() * (&l / x.denom())).collect()
}

/// Rank of an integer matrix. Every intermediate entry is a minor of the
/// input, so each division is exact.
pub fn integer_rank(mut a: Vec<Vec<BigInt>>) -> usize {
    let n_rows = a.len();
    let n_cols = a.first().map_or(0, Vec::len);
    let mut rank = 0;
    let mut prev = BigInt::one();
    for col in 0..n_cols {
        if rank == n_rows {
            break;
        }
        let Some(pivot) = (rank..n_rows).find(|&i| !a[i][col].is_zero()) else {
            continue;
        };
        a.swap(rank, pivot);
        let (top, rest) = a.split_at_mut(rank + 1);
        let prow = &top[rank];
        let p = &prow[col];
        for row in rest.iter_mut() {
            let factor = std::mem::take(&mut row[col]);
            for j in col + 1..n_cols {
                let num = p * &row[j] - &factor * &prow[j];
                debug_assert!((&num % &prev).is_zero());
                row[j] = num / &prev;
            }
        }
        prev = top[rank][col].clone();
        rank += 1;
    }
    rank
}
