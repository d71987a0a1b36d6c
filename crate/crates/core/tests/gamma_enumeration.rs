use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use srk_core::bounds::large_p_mixer_bound;

/// `counts[k][l]`: exponent vectors in `k` variables of total degree `<= l`.
fn degree_table(max_vars: usize, max_deg: usize) -> Vec<Vec<BigUint>> {
    let mut t = vec![vec![BigUint::one(); max_deg + 1]];
    for k in 1..=max_vars {
        let prev = &t[k - 1];
        let mut row = Vec::with_capacity(max_deg + 1);
        let mut acc = BigUint::zero();
        for v in prev {
            acc += v;
            row.push(acc.clone());
        }
        t.push(row);
    }
    t
}

fn enumerate(vars: usize, max_deg: u32) -> usize {
    fn go(vars: usize, left: u32) -> usize {
        if vars == 0 {
            return 1;
        }
        (0..=left).map(|e| go(vars - 1, left - e)).sum()
    }
    go(vars, max_deg)
}

#[test]
fn count_matches_dynamic_programme() {
    for p in 1..=13u32 {
        let top = 1usize << p;
        let max_nm = 10_000 / top;
        if max_nm == 0 {
            continue;
        }
        let table = degree_table(max_nm, top);
        for nm in 1..=max_nm {
            let b = large_p_mixer_bound(p, nm as u64);
            assert_eq!(b.exact_count, table[nm][top], "p={p} nm={nm}");
            assert!(b.exact_count <= b.chain_bound);
            let log2 = b.exact_count.bits() as f64 - 1.0;
            assert!(log2 <= b.log2_envelope, "p={p} nm={nm}");
        }
    }
}

#[test]
fn count_matches_brute_force() {
    for (p, nm) in [(1u32, 2usize), (2, 2), (2, 3), (3, 4), (4, 4)] {
        let b = large_p_mixer_bound(p, nm as u64);
        assert_eq!(b.exact_count.to_usize().unwrap(), enumerate(nm, 1 << p));
    }
    assert_eq!(large_p_mixer_bound(1, 2).exact_count, BigUint::from(6u32));
    assert_eq!(large_p_mixer_bound(4, 4).exact_count, BigUint::from(4845u32));
}

#[test]
fn literal_sum_is_the_quoted_series() {
    for p in 1..=6u32 {
        for nm in 1..=6u64 {
            let want: BigUint = (1..=1u64 << p)
                .map(|l| num_integer::binomial(BigUint::from(l + nm - 1), BigUint::from(nm)))
                .sum();
            assert_eq!(large_p_mixer_bound(p, nm).literal_sum, want, "p={p} nm={nm}");
        }
    }
    let b = large_p_mixer_bound(1, 2);
    assert_eq!((b.literal_sum, b.exact_count), (BigUint::from(4u32), BigUint::from(6u32)));
}
