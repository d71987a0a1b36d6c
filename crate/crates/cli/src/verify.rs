//! Randomized sandwich checks: oracle ≤ propagated bound ≤ closed form.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};
use srk_core::arch::{
    build_linear_transformer, build_mixer, sample_weights, symbolic_forward, ArchSpec, Family, MixerPermutations,
};
use srk_core::bounds::{family_closed_form, propagate_bound, Bound};
use srk_core::oracle::{network_profile, OracleConfig};

use crate::error::CliError;

/// Ranges the random specs are drawn from.
#[derive(Debug, Clone)]
pub struct VerifyPlan {
    pub family: Family,
    pub trials: usize,
    pub depths: Vec<u32>,
    pub ns: Vec<u32>,
    pub ms: Vec<u32>,
    pub heads: Vec<u32>,
    pub degree: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyInstance {
    pub trial: usize,
    pub spec_digest: String,
    pub spec: ArchSpec,
    pub seed: u64,
    pub oracle_sup_sep: usize,
    pub oracle_inf_sep: usize,
    pub propagated: Bound,
    pub closed_form: Bound,
    pub sandwich_ok: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct VerifySummary {
    pub total: usize,
    pub passed: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub family: Family,
    pub base_seed: u64,
    pub instances: Vec<VerifyInstance>,
    pub summary: VerifySummary,
}

pub const VERIFY_CSV_HEADER: [&str; 9] = [
    "trial",
    "spec_digest",
    "seed",
    "oracle_sup_sep",
    "oracle_inf_sep",
    "propagated_log3",
    "closed_form_log3",
    "propagated_exact",
    "sandwich_ok",
];

impl VerifyReport {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(VERIFY_CSV_HEADER)?;
        for r in &self.instances {
            out.write_record([
                r.trial.to_string(),
                r.spec_digest.clone(),
                r.seed.to_string(),
                r.oracle_sup_sep.to_string(),
                r.oracle_inf_sep.to_string(),
                r.propagated.log3.to_string(),
                r.closed_form.log3.to_string(),
                r.propagated.exact.as_ref().map(ToString::to_string).unwrap_or_default(),
                r.sandwich_ok.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Lowercase hex SHA-256 of the spec's canonical JSON.
pub fn spec_digest(spec: &ArchSpec) -> String {
    format!("{:x}", Sha256::digest(spec.to_json().as_bytes()))
}

fn random_subset(rng: &mut ChaCha8Rng, upto: usize) -> Vec<usize> {
    (1..=upto).filter(|_| rng.gen_bool(0.5)).collect()
}

fn random_perm(rng: &mut ChaCha8Rng, len: usize) -> Option<Vec<usize>> {
    rng.gen_bool(0.5).then(|| {
        let mut v: Vec<usize> = (0..len).collect();
        v.shuffle(rng);
        v
    })
}

fn pick<T: Copy>(rng: &mut ChaCha8Rng, v: &[T]) -> T {
    *v.choose(rng).expect("nonempty choice list")
}

/// Draws the spec and weight seed of one trial.
pub fn random_instance(plan: &VerifyPlan, trial: usize) -> Result<(ArchSpec, u64), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed.wrapping_add(trial as u64));
    let p = pick(&mut rng, &plan.depths) as usize;
    let n = pick(&mut rng, &plan.ns) as usize;
    let m = pick(&mut rng, &plan.ms) as usize;
    let residual = random_subset(&mut rng, p);
    let spec = match plan.family {
        Family::Mixer => {
            let perms = MixerPermutations {
                pi_e: random_perm(&mut rng, n * m),
                pi_o: random_perm(&mut rng, n * m),
                pi_r: random_perm(&mut rng, n * m),
            };
            build_mixer(p, n, m, &residual, perms)?
        }
        Family::LinearTransformer => {
            let heads = pick(&mut rng, &plan.heads) as usize;
            let d = plan.degree as usize;
            let sets = (n == m).then(|| {
                (0..heads)
                    .map(|_| {
                        let mut t = random_subset(&mut rng, d);
                        if t.is_empty() {
                            t.push(rng.gen_range(1..=d));
                        }
                        t
                    })
                    .collect()
            });
            build_linear_transformer(p, n, m, heads, plan.degree, sets, &residual)?
        }
    };
    let seed = rng.gen();
    Ok((spec.with_seed(seed), seed))
}

pub fn check_instance(
    trial: usize,
    spec: ArchSpec,
    seed: u64,
    oracle: &OracleConfig,
    degree_cap: u64,
) -> Result<VerifyInstance, CliError> {
    let w = sample_weights(&spec, seed);
    let f = symbolic_forward(&spec, &w, degree_cap)?;
    let profile = network_profile(&f, oracle)?;
    let propagated = propagate_bound(&spec);
    let closed_form = family_closed_form(&spec);
    let sandwich_ok = propagated.covers(profile.sup_sep as u64) && propagated.le(&closed_form);
    Ok(VerifyInstance {
        trial,
        spec_digest: spec_digest(&spec),
        spec,
        seed,
        oracle_sup_sep: profile.sup_sep,
        oracle_inf_sep: profile.inf_sep,
        propagated,
        closed_form,
        sandwich_ok,
    })
}

pub fn run_verify(plan: &VerifyPlan, oracle: &OracleConfig, degree_cap: u64) -> Result<VerifyReport, CliError> {
    for (name, v) in [("p", &plan.depths), ("n", &plan.ns), ("m", &plan.ms), ("heads", &plan.heads)] {
        if v.is_empty() {
            return Err(CliError::InvalidInput(format!("no values to draw {name} from")));
        }
    }
    let instances = (0..plan.trials)
        .map(|t| {
            let (spec, seed) = random_instance(plan, t)?;
            check_instance(t, spec, seed, oracle, degree_cap)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let failures = instances.iter().filter(|r| !r.sandwich_ok).count();
    Ok(VerifyReport {
        family: plan.family,
        base_seed: plan.seed,
        summary: VerifySummary {
            total: instances.len(),
            passed: instances.len() - failures,
            failures,
        },
        instances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan(family: Family, trials: usize) -> VerifyPlan {
        VerifyPlan {
            family,
            trials,
            depths: vec![1, 2],
            ns: vec![2],
            ms: vec![2],
            heads: vec![1, 2],
            degree: 3,
            seed: 7,
        }
    }

    #[test]
    fn instances_are_deterministic() {
        let p = plan(Family::Mixer, 3);
        let a = random_instance(&p, 2).unwrap();
        let b = random_instance(&p, 2).unwrap();
        assert_eq!(a, b);
        assert_eq!(spec_digest(&a.0).len(), 64);
    }

    #[test]
    fn small_runs_pass() {
        let cfg = OracleConfig::default();
        let r = run_verify(&plan(Family::Mixer, 4), &cfg, 64).unwrap();
        assert_eq!(r.summary, VerifySummary { total: 4, passed: 4, failures: 0 });
        let mut t = plan(Family::LinearTransformer, 3);
        t.depths = vec![1];
        let r = run_verify(&t, &cfg, 64).unwrap();
        assert_eq!(r.summary.failures, 0);
    }

    #[test]
    fn zero_trials_is_empty() {
        let r = run_verify(&plan(Family::Mixer, 0), &OracleConfig::default(), 64).unwrap();
        assert!(r.instances.is_empty());
        assert_eq!(r.summary.failures, 0);
    }

    #[test]
    fn odd_universe_is_a_cap_violation() {
        let mut p = plan(Family::Mixer, 1);
        p.ns = vec![1];
        p.ms = vec![3];
        assert!(matches!(
            run_verify(&p, &OracleConfig::default(), 64),
            Err(CliError::CapViolation(_))
        ));
    }
}
