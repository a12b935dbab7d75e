//! Latin hypercube sampling over boxes.

use rand::distributions::Open01;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rules::Rule;

/// Generator used for every seeded draw in the crate; recorded in run
/// manifests.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha 0.3), seed_from_u64";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub bounds: Vec<(f64, f64)>,
    pub n: usize,
    pub seed: u64,
}

impl SamplingPlan {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("sample count must be at least 1".into()));
        }
        if self.bounds.is_empty() {
            return Err(Error::InvalidParameter("no variables to sample".into()));
        }
        for (i, (lo, hi)) in self.bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidParameter(format!(
                    "variable {i}: bounds [{lo}, {hi}] are not ordered"
                )));
            }
        }
        Ok(())
    }
}

/// `n` samples (rows) over the plan's box. Every variable has exactly one
/// sample in each of its `n` equal strata; positions within a stratum are
/// uniform and the stratum order is a seeded permutation per variable.
pub fn lhs(plan: &SamplingPlan) -> Result<Vec<Vec<f64>>> {
    plan.validate()?;
    let n = plan.n;
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mut samples = vec![vec![0.0; plan.bounds.len()]; n];
    let mut strata: Vec<usize> = (0..n).collect();
    for (j, &(lo, hi)) in plan.bounds.iter().enumerate() {
        strata.shuffle(&mut rng);
        for (row, &stratum) in samples.iter_mut().zip(&strata) {
            let u: f64 = rng.sample(Open01);
            let t = (stratum as f64 + u) / n as f64;
            row[j] = (lo + t * (hi - lo)).clamp(lo, hi);
        }
    }
    Ok(samples)
}

/// LHS restricted to a rule's design box.
pub fn lhs_in_rule(rule: &Rule, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if rule.bounds.iter().any(|(lo, hi)| !(lo < hi)) {
        return Err(Error::InvalidParameter(format!(
            "rule {} has an empty box",
            rule.id
        )));
    }
    lhs(&SamplingPlan {
        bounds: rule.bounds.clone(),
        n,
        seed,
    })
}

/// Advisory minimum design count for `k` independent variables: 3k.
pub fn sample_count_heuristic(k: usize) -> usize {
    3 * k
}
