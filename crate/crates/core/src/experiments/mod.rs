//! Policy comparisons on queueing models and the random-instance census.

pub mod census;
pub mod ctmc;
pub mod des;
pub mod routing;
pub mod scheduling;

pub use census::{census, CensusConfig, CensusRow};
pub use ctmc::{average_cost, optimal_cost, ControlledChain, OptimalSolution, SolverOptions};
pub use des::{des_simulate, SimConfig, SimEstimate};
pub use routing::{routing_sweep, RoutingGrid, RoutingModel, RoutingPolicy, RoutingRow};
pub use scheduling::{scheduling_point, SchedulingModel, SchedulingPolicy, SchedulingRow};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Random two-class delay-sensitive scheduling instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomScheduling {
    pub count: usize,
    #[serde(default = "default_max_buffer")]
    pub max_buffer: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_max_buffer() -> usize {
    10
}

/// A sweep configuration, tagged by `"model"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum SweepConfig {
    Routing(RoutingGrid),
    Scheduling {
        #[serde(default)]
        instances: Vec<SchedulingModel>,
        #[serde(default)]
        random: Option<RandomScheduling>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepReport {
    Routing(Vec<RoutingRow>),
    Scheduling(Vec<SchedulingRow>),
}

impl SweepReport {
    pub fn len(&self) -> usize {
        match self {
            SweepReport::Routing(r) => r.len(),
            SweepReport::Scheduling(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl SweepConfig {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Invalid(format!("sweep config: {e}")))
    }

    /// Scheduling instances in table order: explicit ones first, then the
    /// random draws.
    pub fn scheduling_instances(&self) -> Vec<SchedulingModel> {
        let SweepConfig::Scheduling { instances, random } = self else {
            return Vec::new();
        };
        let mut out = instances.clone();
        if let Some(r) = random {
            let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
            out.extend((0..r.count).map(|_| scheduling::random_delay_sensitive(&mut rng, r.max_buffer)));
        }
        out
    }
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    match cfg {
        SweepConfig::Routing(grid) => {
            if !(grid.lambda > 0.0) {
                return Err(Error::Invalid("routing sweep needs a positive arrival rate".into()));
            }
            routing_sweep(grid).map(SweepReport::Routing)
        }
        SweepConfig::Scheduling { .. } => {
            let models = cfg.scheduling_instances();
            models
                .par_iter()
                .enumerate()
                .map(|(k, m)| scheduling_point(k + 1, m))
                .collect::<Result<Vec<_>>>()
                .map(SweepReport::Scheduling)
        }
    }
}
