//! Exact separation ranks of polynomial functions.
//!
//! For a polynomial `y` and a bipartition `(A, B)` of its variables, the
//! minimal `R` with `y = Σ_{r≤R} g_r(A)·h_r(B)` equals the rank of the
//! coefficient matrix indexed by A-monomials × B-monomials. This module
//! computes that rank exactly and aggregates it over output entries and
//! over every balanced partition.

mod matricize;
mod partition;
mod rank;

pub use matricize::{matricize, sep_rank_entry, CoeffMatricization};
pub use partition::{enumerate_balanced_partitions, Partition, DEFAULT_PARTITION_CAP};
pub use rank::{exact_rank, integer_rank};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::OracleError;
use crate::poly::PolyMatrix;

/// How the matrix-level inf-sep aggregates per-entry values.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfSepMode {
    /// min over entries of min over partitions
    #[default]
    MinMin,
    /// min over entries of max over partitions
    MinMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleConfig {
    pub partition_cap: usize,
    pub inf_mode: InfSepMode,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            partition_cap: DEFAULT_PARTITION_CAP,
            inf_mode: InfSepMode::MinMin,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryRange {
    pub min: usize,
    pub max: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SepProfile {
    pub sup_sep: usize,
    pub inf_sep: usize,
    pub entries: Vec<Vec<EntryRange>>,
}

impl SepProfile {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("profile serializes")
    }
}

/// Rank of every entry under every partition: `out[entry][partition]`,
/// entries in row-major order.
pub fn rank_table(f: &PolyMatrix, partitions: &[Partition]) -> Result<Vec<Vec<usize>>, OracleError> {
    f.entries()
        .par_iter()
        .map(|p| {
            partitions
                .par_iter()
                .map(|part| sep_rank_entry(p, part))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect()
}

/// Exhaustive separation profile of `f` whose entries are polynomials over
/// the universe `0..universe`.
pub fn sep_profile(f: &PolyMatrix, universe: usize, cfg: &OracleConfig) -> Result<SepProfile, OracleError> {
    let partitions = enumerate_balanced_partitions(universe, cfg.partition_cap)?;
    let table = rank_table(f, &partitions)?;
    Ok(profile_from_table(f.rows(), f.cols(), &table, cfg.inf_mode))
}

/// Profile of a network output, whose universe is its own `rows·cols` input entries.
pub fn network_profile(f: &PolyMatrix, cfg: &OracleConfig) -> Result<SepProfile, OracleError> {
    sep_profile(f, f.rows() * f.cols(), cfg)
}

pub fn profile_from_table(rows: usize, cols: usize, table: &[Vec<usize>], mode: InfSepMode) -> SepProfile {
    let ranges: Vec<EntryRange> = table
        .iter()
        .map(|r| EntryRange {
            min: r.iter().copied().min().unwrap_or(0),
            max: r.iter().copied().max().unwrap_or(0),
        })
        .collect();
    let sup_sep = ranges.iter().map(|r| r.max).max().unwrap_or(0);
    let inf_sep = ranges
        .iter()
        .map(|r| match mode {
            InfSepMode::MinMin => r.min,
            InfSepMode::MinMax => r.max,
        })
        .min()
        .unwrap_or(0);
    SepProfile {
        sup_sep,
        inf_sep,
        entries: ranges.chunks(cols.max(1)).take(rows).map(<[_]>::to_vec).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{Monomial, Poly, VarId};
    use num_rational::BigRational;

    fn x(i: u32) -> Poly {
        Poly::var(VarId(i))
    }

    fn ints(m: &CoeffMatricization) -> Vec<Vec<i64>> {
        m.matrix
            .iter()
            .map(|r| r.iter().map(|c| c.to_integer().try_into().unwrap()).collect())
            .collect()
    }

    // variables 0,1 on side A and 2,3 on side B
    fn part4() -> Partition {
        Partition::from_side(4, &[VarId(0), VarId(1)]).unwrap()
    }

    #[test]
    fn identity_matricization() {
        let p = x(0) * x(2) + x(1) * x(3);
        let m = matricize(&p, &part4()).unwrap();
        assert_eq!(ints(&m), vec![vec![1, 0], vec![0, 1]]);
        assert_eq!(m.row_index, vec![Monomial::var(VarId(1)), Monomial::var(VarId(0))]);
        assert_eq!(sep_rank_entry(&p, &part4()).unwrap(), 2);
    }

    #[test]
    fn antidiagonal_matricization() {
        // (x_a + x_b)^2 with a = x0, b = x2
        let p = (x(0) + x(2)).square();
        let m = matricize(&p, &part4()).unwrap();
        assert_eq!(
            m.row_index,
            vec![Monomial::one(), Monomial::var(VarId(0)), Monomial::from_pairs([(VarId(0), 2)])]
        );
        assert_eq!(ints(&m), vec![vec![0, 0, 1], vec![0, 2, 0], vec![1, 0, 0]]);
        assert_eq!(m.rank(), 3);
    }

    #[test]
    fn zero_and_constants() {
        let m = matricize(&Poly::zero(), &part4()).unwrap();
        assert!(m.is_empty());
        assert_eq!(m.rank(), 0);
        let c = Poly::constant(BigRational::from_integer(7.into()));
        assert_eq!(sep_rank_entry(&c, &part4()).unwrap(), 1);
        assert_eq!(sep_rank_entry(&(x(0) * x(2)), &part4()).unwrap(), 1);
        // a one-sided monomial lands at (x0^2, 1)
        let m = matricize(&x(0).square(), &part4()).unwrap();
        assert_eq!(m.col_index, vec![Monomial::one()]);
    }

    #[test]
    fn unknown_variable() {
        assert_eq!(
            matricize(&x(5), &part4()),
            Err(OracleError::UnknownVariable(5))
        );
    }

    #[test]
    fn symbol_matrix_profile_is_one() {
        let f = PolyMatrix::symbols(2, 2);
        let prof = network_profile(&f, &OracleConfig::default()).unwrap();
        assert_eq!((prof.sup_sep, prof.inf_sep), (1, 1));
        assert!(prof.entries.iter().flatten().all(|e| e.min == 1 && e.max == 1));
    }

    #[test]
    fn zero_matrix_profile() {
        let prof = network_profile(&PolyMatrix::zeros(2, 2), &OracleConfig::default()).unwrap();
        assert_eq!((prof.sup_sep, prof.inf_sep), (0, 0));
    }

    #[test]
    fn two_product_sum_over_three_partitions() {
        // x0 x2 + x1 x3: the pairing {0,1}|{2,3} splits both products across
        // the cut; the other two partitions leave one product on each side,
        // giving g(A)·1 + 1·h(B), which is also rank 2.
        let f = PolyMatrix::new(1, 1, vec![x(0) * x(2) + x(1) * x(3)]).unwrap();
        let parts = enumerate_balanced_partitions(4, 12).unwrap();
        let table = rank_table(&f, &parts).unwrap();
        assert_eq!(table, vec![vec![2, 2, 2]]);
        // a sum that is separable under two of the cuts
        let g = PolyMatrix::new(1, 1, vec![x(0) * x(1) * (x(2) + x(3))]).unwrap();
        let table = rank_table(&g, &parts).unwrap();
        assert_eq!(table, vec![vec![1, 2, 2]]);
        let prof = sep_profile(&g, 4, &OracleConfig::default()).unwrap();
        assert_eq!((prof.sup_sep, prof.inf_sep), (2, 1));
    }

    #[test]
    fn inf_mode_alternative() {
        let f = PolyMatrix::new(1, 2, vec![x(0) * x(1) * (x(2) + x(3)), x(0) * x(1)]).unwrap();
        let min_min = sep_profile(&f, 4, &OracleConfig::default()).unwrap();
        let cfg = OracleConfig {
            inf_mode: InfSepMode::MinMax,
            ..OracleConfig::default()
        };
        let min_max = sep_profile(&f, 4, &cfg).unwrap();
        assert_eq!(min_min.inf_sep, 1);
        assert_eq!(min_max.inf_sep, 1);
        let g = PolyMatrix::new(1, 1, vec![x(0) * x(1) * (x(2) + x(3))]).unwrap();
        assert_eq!(sep_profile(&g, 4, &cfg).unwrap().inf_sep, 2);
    }

    #[test]
    fn profile_json_shape() {
        let prof = network_profile(&PolyMatrix::symbols(1, 2), &OracleConfig::default()).unwrap();
        assert_eq!(
            prof.to_json(),
            r#"{"sup_sep":1,"inf_sep":1,"entries":[[{"min":1,"max":1},{"min":1,"max":1}]]}"#
        );
    }

    #[test]
    fn cap_and_parity_errors() {
        let f = PolyMatrix::symbols(1, 3);
        assert_eq!(network_profile(&f, &OracleConfig::default()), Err(OracleError::OddUniverse(3)));
        let cfg = OracleConfig {
            partition_cap: 4,
            ..OracleConfig::default()
        };
        assert!(matches!(
            network_profile(&PolyMatrix::symbols(2, 3), &cfg),
            Err(OracleError::CapExceeded { size: 6, cap: 4 })
        ));
    }
}
