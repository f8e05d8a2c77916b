//! Marginal productivity indices for restless bandits.

pub mod active_set;
pub mod bandit;
pub mod conditions;
pub mod error;
pub mod experiments;
pub mod fixtures;
pub mod greedy;
pub mod hull;
pub mod instance;
pub mod linalg;
pub mod oracle;
pub mod queueing;
pub mod reformulate;
pub mod setsys;

pub use active_set::ActiveSet;
pub use bandit::{evaluate_policy, marginal_measures, partition_states, BanditBuilder, RestlessBandit};
pub use error::{Error, Result};
pub use greedy::{adaptive_greedy, MpiResult};
pub use oracle::{region, solve_wage, test_indexability, IndexabilityVerdict, WorkRewardRegion};
pub use setsys::{family_full, family_nested, SetSystem};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/bandits.md")]
    mod bandits {}
    #[doc = include_str!("../../../book/src/indexability.md")]
    mod indexability {}
    #[doc = include_str!("../../../book/src/adaptive_greedy.md")]
    mod adaptive_greedy {}
    #[doc = include_str!("../../../book/src/reformulations.md")]
    mod reformulations {}
    #[doc = include_str!("../../../book/src/queueing.md")]
    mod queueing {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
