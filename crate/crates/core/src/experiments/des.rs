//! Discrete-event simulation of a controlled chain under a fixed policy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::ctmc::ControlledChain;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Simulated time per replication, warm-up included.
    pub horizon: f64,
    /// Initial stretch of each replication left out of the average.
    pub warmup: f64,
    pub replications: usize,
    pub seed: u64,
}

/// Mean cost rate across replications with a 95% Student-t interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEstimate {
    pub mean: f64,
    pub half_width: f64,
    pub replications: usize,
}

impl SimEstimate {
    pub fn covers(&self, x: f64) -> bool {
        (x - self.mean).abs() <= self.half_width
    }
}

fn replication(chain: &ControlledChain, policy: &[usize], cfg: &SimConfig, rep: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(rep);
    let (mut t, mut state, mut total) = (0.0, 0usize, 0.0);
    while t < cfg.horizon {
        let act = &chain.actions(state)[policy[state]];
        let rate: f64 = act.trans.iter().map(|x| x.1).sum();
        let dwell = if rate > 0.0 {
            Exp::new(rate).expect("positive rate").sample(&mut rng)
        } else {
            f64::INFINITY
        };
        let end = (t + dwell).min(cfg.horizon);
        let counted = end - t.max(cfg.warmup);
        if counted > 0.0 {
            total += act.cost * counted;
        }
        t = end;
        if t >= cfg.horizon {
            break;
        }
        let mut u = rng.random::<f64>() * rate;
        state = act.trans.last().expect("positive rate").0;
        for &(to, r) in &act.trans {
            if u < r {
                state = to;
                break;
            }
            u -= r;
        }
    }
    total / (cfg.horizon - cfg.warmup)
}

/// Simulates independent replications from the empty state, each on its
/// own random stream, in parallel. Deterministic given the seed.
pub fn des_simulate(chain: &ControlledChain, policy: &[usize], cfg: &SimConfig) -> Result<SimEstimate> {
    if !(cfg.horizon > cfg.warmup && cfg.warmup >= 0.0) || cfg.replications == 0 {
        return Err(Error::Invalid("need horizon > warmup >= 0 and at least one replication".into()));
    }
    if policy.len() != chain.n_states() {
        return Err(Error::Invalid("policy length differs from the state count".into()));
    }
    let means: Vec<f64> = (0..cfg.replications as u64)
        .into_par_iter()
        .map(|rep| replication(chain, policy, cfg, rep))
        .collect();
    let r = means.len() as f64;
    let mean = means.iter().sum::<f64>() / r;
    let half_width = if means.len() < 2 {
        f64::INFINITY
    } else {
        let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (r - 1.0);
        let t = StudentsT::new(0.0, 1.0, r - 1.0)
            .map_err(|e| Error::Numerical(e.to_string()))?
            .inverse_cdf(0.975);
        t * (var / r).sqrt()
    };
    Ok(SimEstimate { mean, half_width, replications: means.len() })
}
