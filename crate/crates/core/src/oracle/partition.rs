use serde::{Deserialize, Serialize};

use crate::error::OracleError;
use crate::poly::VarId;

/// Default bound on the universe size for exhaustive partition sweeps
/// (`C(12, 6) / 2 = 462` partitions).
pub const DEFAULT_PARTITION_CAP: usize = 12;

/// A balanced bipartition of the variable universe.
///
/// The canonical representative of `{A, B}` is the one with `VarId(0)` in `a`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    a: Vec<VarId>,
    b: Vec<VarId>,
}

impl Partition {
    /// Builds the partition of `0..universe` with side `a`; `b` is the complement.
    pub fn from_side(universe: usize, a: &[VarId]) -> Result<Self, OracleError> {
        let mut side = vec![false; universe];
        for v in a {
            if v.index() >= universe {
                return Err(OracleError::UnknownVariable(v.0));
            }
            side[v.index()] = true;
        }
        let (av, bv): (Vec<_>, Vec<_>) = (0..universe as u32).map(VarId).partition(|v| side[v.index()]);
        if av.len() != a.len() || av.len() * 2 != universe {
            return Err(OracleError::OddUniverse(universe));
        }
        Ok(Partition { a: av, b: bv })
    }

    pub fn a(&self) -> &[VarId] {
        &self.a
    }

    pub fn b(&self) -> &[VarId] {
        &self.b
    }

    pub fn universe(&self) -> usize {
        self.a.len() + self.b.len()
    }

    pub fn in_a(&self, v: VarId) -> bool {
        self.a.binary_search(&v).is_ok()
    }

    pub fn contains(&self, v: VarId) -> bool {
        self.in_a(v) || self.b.binary_search(&v).is_ok()
    }
}

/// All balanced partitions of `0..universe_size`, each unordered pair once,
/// in lexicographic order of side `a`.
pub fn enumerate_balanced_partitions(universe_size: usize, cap: usize) -> Result<Vec<Partition>, OracleError> {
    if universe_size == 0 || universe_size % 2 == 1 {
        return Err(OracleError::OddUniverse(universe_size));
    }
    if universe_size > cap {
        return Err(OracleError::CapExceeded { size: universe_size, cap });
    }
    let half = universe_size / 2;
    let mut out = Vec::new();
    let mut chosen = vec![0usize; half];
    // side a always holds variable 0; choose the remaining half-1 from 1..n
    fn rec(start: usize, depth: usize, n: usize, chosen: &mut Vec<usize>, out: &mut Vec<Partition>) {
        if depth == chosen.len() {
            let mut in_a = vec![false; n];
            for &c in chosen.iter() {
                in_a[c] = true;
            }
            let (a, b) = (0..n as u32).map(VarId).partition(|v| in_a[v.index()]);
            out.push(Partition { a, b });
            return;
        }
        let remaining = chosen.len() - depth;
        for c in start..=(n - remaining) {
            chosen[depth] = c;
            rec(c + 1, depth + 1, n, chosen, out);
        }
    }
    chosen[0] = 0;
    rec(1, 1, universe_size, &mut chosen, &mut out);
    Ok(out)
}
