//! Small worked instances used throughout the docs and tests.
//!
//! All three restless instances share `beta = 0.9`, `Q^a = a`, zero passive
//! rewards (except [`figure2`]) and a uniform initial distribution.

use crate::bandit::{BanditBuilder, RestlessBandit};
use crate::reformulate::ClassicBandit;

/// Indexable and PCL-indexable; upper boundary `{}, {1}, {1,2}, {1,2,3}`.
pub fn figure1() -> RestlessBandit {
    BanditBuilder::new(
        0.9,
        vec![0.9016, 0.10949, 0.01055],
        vec![
            vec![0.1810, 0.4801, 0.3389],
            vec![0.2676, 0.2646, 0.4678],
            vec![0.5304, 0.2843, 0.1853],
        ],
        vec![
            vec![0.2841, 0.4827, 0.2332],
            vec![0.5131, 0.0212, 0.4657],
            vec![0.4612, 0.0081, 0.5307],
        ],
    )
    .build()
    .expect("valid instance")
}

/// Nonindexable: the upper boundary is not a nested family.
pub fn figure2() -> RestlessBandit {
    BanditBuilder::new(
        0.9,
        vec![0.9631, 0.7963, 0.1057],
        vec![
            vec![0.1902, 0.4156, 0.3942],
            vec![0.5676, 0.4191, 0.0133],
            vec![0.0191, 0.1097, 0.8712],
        ],
        vec![
            vec![0.7796, 0.0903, 0.1301],
            vec![0.1903, 0.1863, 0.6234],
            vec![0.2901, 0.3901, 0.3198],
        ],
    )
    .reward0(vec![0.458, 0.5308, 0.6873])
    .build()
    .expect("valid instance")
}

/// Indexable but not PCL-indexable: `w_1^{2} < 0`.
pub fn figure3() -> RestlessBandit {
    BanditBuilder::new(
        0.9,
        vec![0.44138, 0.8033, 0.14257],
        vec![
            vec![0.3629, 0.5028, 0.1343],
            vec![0.0823, 0.7534, 0.1643],
            vec![0.2460, 0.0294, 0.7246],
        ],
        vec![
            vec![0.1719, 0.1749, 0.6532],
            vec![0.0547, 0.9317, 0.0136],
            vec![0.1547, 0.6271, 0.2182],
        ],
    )
    .build()
    .expect("valid instance")
}

/// Three-state classic bandit with `beta = 0.95` and startup cost `c`.
/// Its Gittins indices are 0.4242, 0.061487 and 0.048002 for states 2, 3, 1.
pub fn switching_example(startup_cost: f64) -> ClassicBandit {
    ClassicBandit {
        beta: 0.95,
        reward: vec![0.0250, 0.4242, 0.0338],
        trans: vec![
            vec![0.6635, 0.0285, 0.3080],
            vec![0.6345, 0.3583, 0.0072],
            vec![0.4868, 0.0530, 0.4602],
        ],
        startup_cost,
    }
}
