//! Indexability census over random instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandit::{BanditBuilder, RestlessBandit};
use crate::conditions::{check_pcl, PclMode};
use crate::error::{Error, Result};
use crate::oracle::test_indexability;
use crate::setsys::{family_full, family_nested};

/// Largest state count the census accepts.
pub const MAX_CENSUS_STATES: usize = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusConfig {
    pub ns: Vec<usize>,
    pub betas: Vec<f64>,
    pub samples: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusRow {
    pub beta: f64,
    pub n: usize,
    pub samples: u64,
    pub nonindexable: u64,
    /// Indexable, but not PCL-indexable relative to its own nested family.
    pub indexable_non_pcl: u64,
    /// Indexable, but not PCL-indexable relative to the power set.
    pub indexable_non_pcl_full: u64,
    pub rate_nonindexable: f64,
    pub rate_indexable_non_pcl: f64,
    pub rate_indexable_non_pcl_full: f64,
}

/// Census verdict on one instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InstanceClass {
    pub indexable: bool,
    /// PCL-indexable relative to the oracle's nested family; `false` when
    /// nonindexable.
    pub pcl_nested: bool,
    /// PCL-indexable relative to the power set.
    pub pcl_full: bool,
}

fn random_stochastic(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let row: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let s: f64 = row.iter().sum();
            row.into_iter().map(|v| v / s).collect()
        })
        .collect()
}

/// Instance `index` of the census stream for `n` states: active rewards
/// and both transition matrices uniform on `(0, 1)` with rows normalized,
/// zero passive rewards, unit active work. The draw does not depend on
/// `beta`, so every discount factor sees the same instances.
pub fn census_instance(n: usize, beta: f64, seed: u64, index: u64) -> Result<RestlessBandit> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add((n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)));
    rng.set_stream(index);
    let reward1: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let trans0 = random_stochastic(&mut rng, n);
    let trans1 = random_stochastic(&mut rng, n);
    BanditBuilder::new(beta, reward1, trans0, trans1).build()
}

pub fn classify(b: &RestlessBandit) -> Result<InstanceClass> {
    let verdict = test_indexability(b)?;
    let pcl_full = check_pcl(b, &family_full(b.partition()), PclMode::Exhaustive)?.pcl_indexable() == Some(true);
    if !verdict.indexable {
        return Ok(InstanceClass { indexable: false, pcl_nested: false, pcl_full });
    }
    let nested = family_nested(&verdict.nested_family)?;
    let pcl_nested = check_pcl(b, &nested, PclMode::Exhaustive)?.pcl_indexable() == Some(true);
    Ok(InstanceClass { indexable: true, pcl_nested, pcl_full })
}

/// Counts nonindexable and indexable-but-not-PCL instances per `(beta, n)`.
pub fn census(cfg: &CensusConfig) -> Result<Vec<CensusRow>> {
    let mut rows = Vec::new();
    for &n in &cfg.ns {
        if n == 0 || n > MAX_CENSUS_STATES {
            return Err(Error::SizeGuard { what: "census states", actual: n, limit: MAX_CENSUS_STATES });
        }
        for &beta in &cfg.betas {
            let (non, nonpcl, nonfull) = (0..cfg.samples)
                .into_par_iter()
                .map(|i| {
                    let c = classify(&census_instance(n, beta, cfg.seed, i)?)?;
                    let count = |x: bool| u64::from(c.indexable && x);
                    Ok((u64::from(!c.indexable), count(!c.pcl_nested), count(!c.pcl_full)))
                })
                .try_reduce(|| (0, 0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1, a.2 + b.2)))?;
            let s = cfg.samples.max(1) as f64;
            rows.push(CensusRow {
                beta,
                n,
                samples: cfg.samples,
                nonindexable: non,
                indexable_non_pcl: nonpcl,
                indexable_non_pcl_full: nonfull,
                rate_nonindexable: non as f64 / s,
                rate_indexable_non_pcl: nonpcl as f64 / s,
                rate_indexable_non_pcl_full: nonfull as f64 / s,
            });
        }
    }
    Ok(rows)
}
