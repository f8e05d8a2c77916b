//! Instance files: JSON objects tagged by `"type"`.
//!
//! ```json
//! {"type": "restless", "n": 2, "beta": 0.9,
//!  "R1": [1.0, 0.5], "P0": [[1, 0], [0, 1]], "P1": [[0.5, 0.5], [0.5, 0.5]]}
//! ```
//!
//! `R0` defaults to zero, `Q0`/`Q1` to `0`/`1` and `p0` to uniform.
//! Classic instances carry `R`, `P` and optional `startup_cost` and
//! `horizon`. States are numbered from 1 wherever they are printed.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bandit::{BanditBuilder, RestlessBandit};
use crate::error::{Error, Result};
use crate::reformulate::{embed_classic, ClassicBandit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum InstanceFile {
    Restless(RestlessFile),
    Classic(ClassicFile),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RestlessFile {
    pub n: usize,
    pub beta: f64,
    #[serde(rename = "R0", default, skip_serializing_if = "Option::is_none")]
    pub r0: Option<Vec<f64>>,
    #[serde(rename = "R1")]
    pub r1: Vec<f64>,
    #[serde(rename = "Q0", default, skip_serializing_if = "Option::is_none")]
    pub q0: Option<Vec<f64>>,
    #[serde(rename = "Q1", default, skip_serializing_if = "Option::is_none")]
    pub q1: Option<Vec<f64>>,
    #[serde(rename = "P0")]
    pub p0_matrix: Vec<Vec<f64>>,
    #[serde(rename = "P1")]
    pub p1_matrix: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicFile {
    pub n: usize,
    pub beta: f64,
    #[serde(rename = "R")]
    pub r: Vec<f64>,
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub startup_cost: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
}

/// A validated instance.
#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    Restless(RestlessBandit),
    Classic { bandit: ClassicBandit, horizon: Option<usize> },
}

impl Instance {
    /// The restless form used by `full` and `nested` families: classic
    /// instances embed with frozen passive dynamics and no start-up cost.
    pub fn restless(&self) -> Result<RestlessBandit> {
        match self {
            Instance::Restless(b) => Ok(b.clone()),
            Instance::Classic { bandit, .. } => embed_classic(&ClassicBandit { startup_cost: 0.0, ..bandit.clone() }),
        }
    }
}

fn check_n(n: usize, len: usize) -> Result<()> {
    if n != len {
        return Err(Error::Invalid(format!("n is {n} but the reward vector has {len} entries")));
    }
    Ok(())
}

impl InstanceFile {
    pub fn validate(&self) -> Result<Instance> {
        match self {
            InstanceFile::Restless(f) => {
                check_n(f.n, f.r1.len())?;
                let mut b = BanditBuilder::new(f.beta, f.r1.clone(), f.p0_matrix.clone(), f.p1_matrix.clone());
                if let Some(r0) = &f.r0 {
                    b = b.reward0(r0.clone());
                }
                if f.q0.is_some() || f.q1.is_some() {
                    let q0 = f.q0.clone().unwrap_or_else(|| vec![0.0; f.n]);
                    let q1 = f.q1.clone().unwrap_or_else(|| vec![1.0; f.n]);
                    b = b.work(q0, q1);
                }
                if let Some(p) = &f.p0 {
                    b = b.init_dist(p.clone());
                }
                if let Some(l) = &f.labels {
                    b = b.labels(l.clone());
                }
                Ok(Instance::Restless(b.build()?))
            }
            InstanceFile::Classic(f) => {
                check_n(f.n, f.r.len())?;
                let bandit = ClassicBandit {
                    beta: f.beta,
                    reward: f.r.clone(),
                    trans: f.p.clone(),
                    startup_cost: f.startup_cost.unwrap_or(0.0),
                };
                embed_classic(&ClassicBandit { startup_cost: 0.0, ..bandit.clone() })?;
                if f.horizon == Some(0) {
                    return Err(Error::Invalid("horizon must be at least 1".into()));
                }
                Ok(Instance::Classic { bandit, horizon: f.horizon })
            }
        }
    }

    pub fn from_restless(b: &RestlessBandit) -> Self {
        InstanceFile::Restless(RestlessFile {
            n: b.n_states(),
            beta: b.beta(),
            r0: Some(b.reward(0).to_vec()),
            r1: b.reward(1).to_vec(),
            q0: Some(b.work(0).to_vec()),
            q1: Some(b.work(1).to_vec()),
            p0_matrix: b.trans(0).to_rows(),
            p1_matrix: b.trans(1).to_rows(),
            p0: Some(b.init_dist().to_vec()),
            labels: b.labels().map(<[String]>::to_vec),
        })
    }

    pub fn from_classic(cb: &ClassicBandit, horizon: Option<usize>) -> Self {
        InstanceFile::Classic(ClassicFile {
            n: cb.n_states(),
            beta: cb.beta,
            r: cb.reward.clone(),
            p: cb.trans.clone(),
            startup_cost: (cb.startup_cost != 0.0).then_some(cb.startup_cost),
            horizon,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Invalid(format!("instance file: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }
}

/// Reads and validates an instance file.
pub fn load_instance(path: &Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))?;
    InstanceFile::parse(&text)?.validate()
}

pub fn save_instance(path: &Path, file: &InstanceFile) -> Result<()> {
    std::fs::write(path, file.to_json() + "\n")
        .map_err(|e| Error::Invalid(format!("cannot write {}: {e}", path.display())))
}
