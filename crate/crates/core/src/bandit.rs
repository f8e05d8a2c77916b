//! The restless-bandit data model and exact policy evaluation.
//!
//! A [`RestlessBandit`] is a finite-state, two-action discounted Markov
//! project. Action `1` is *active* (work is expended) and action `0` is
//! *passive*. Each stationary deterministic policy is identified with the
//! [`ActiveSet`] of controllable states where it works; evaluating it means
//! solving two linear systems `v = c^S + beta P^S v`, one for rewards and one
//! for work.

use crate::active_set::ActiveSet;
use crate::error::{Error, Result};
use crate::linalg::{dot, Lu, Matrix};

/// Tolerance for probability row sums and for deciding controllability.
pub const PROB_TOL: f64 = 1e-9;
/// Marginal work below this magnitude is treated as exactly zero.
pub const ZERO_WORK_TOL: f64 = 1e-12;

/// Finite-state two-action discounted project with per-state work rates.
#[derive(Debug, Clone, PartialEq)]
pub struct RestlessBandit {
    beta: f64,
    reward0: Vec<f64>,
    reward1: Vec<f64>,
    work0: Vec<f64>,
    work1: Vec<f64>,
    trans0: Matrix,
    trans1: Matrix,
    init_dist: Vec<f64>,
    labels: Option<Vec<String>>,
    partition: ControllabilityPartition,
}

/// Uncontrollable states (both actions identical in work and dynamics) and
/// the remaining controllable ones, both ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControllabilityPartition {
    pub uncontrollable: Vec<usize>,
    pub controllable: Vec<usize>,
}

impl ControllabilityPartition {
    pub fn n_controllable(&self) -> usize {
        self.controllable.len()
    }

    /// The set of all controllable states.
    pub fn full_set(&self) -> ActiveSet {
        self.controllable.iter().copied().collect()
    }
}

/// Builder for [`RestlessBandit`]; the only way to construct one.
#[derive(Debug, Clone)]
pub struct BanditBuilder {
    beta: f64,
    reward0: Option<Vec<f64>>,
    reward1: Vec<f64>,
    work0: Option<Vec<f64>>,
    work1: Option<Vec<f64>>,
    trans0: Vec<Vec<f64>>,
    trans1: Vec<Vec<f64>>,
    init_dist: Option<Vec<f64>>,
    labels: Option<Vec<String>>,
}

impl BanditBuilder {
    /// Passive rewards default to zero, work rates to `Q^a = a` and the
    /// initial distribution to uniform.
    pub fn new(beta: f64, reward1: Vec<f64>, trans0: Vec<Vec<f64>>, trans1: Vec<Vec<f64>>) -> Self {
        Self {
            beta,
            reward0: None,
            reward1,
            work0: None,
            work1: None,
            trans0,
            trans1,
            init_dist: None,
            labels: None,
        }
    }

    pub fn reward0(mut self, r: Vec<f64>) -> Self {
        self.reward0 = Some(r);
        self
    }

    pub fn work(mut self, work0: Vec<f64>, work1: Vec<f64>) -> Self {
        self.work0 = Some(work0);
        self.work1 = Some(work1);
        self
    }

    pub fn init_dist(mut self, p: Vec<f64>) -> Self {
        self.init_dist = Some(p);
        self
    }

    pub fn labels(mut self, labels: Vec<String>) -> Self {
        self.labels = Some(labels);
        self
    }

    pub fn build(self) -> Result<RestlessBandit> {
        let n = self.reward1.len();
        if n == 0 {
            return Err(Error::Invalid("instance has no states".into()));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::Invalid(format!("discount factor {} not in (0,1)", self.beta)));
        }
        let reward0 = self.reward0.unwrap_or_else(|| vec![0.0; n]);
        let work0 = self.work0.unwrap_or_else(|| vec![0.0; n]);
        let work1 = self.work1.unwrap_or_else(|| vec![1.0; n]);
        let init_dist = self.init_dist.unwrap_or_else(|| vec![1.0 / n as f64; n]);
        for (name, v) in [
            ("R0", &reward0),
            ("Q0", &work0),
            ("Q1", &work1),
            ("p0", &init_dist),
        ] {
            if v.len() != n {
                return Err(Error::Invalid(format!("{name} has length {}, expected {n}", v.len())));
            }
        }
        if let Some(l) = &self.labels {
            if l.len() != n {
                return Err(Error::Invalid(format!("{} labels for {n} states", l.len())));
            }
        }
        let all = reward0.iter().chain(&self.reward1).chain(&work0).chain(&work1);
        if all.clone().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("non-finite reward or work rate".into()));
        }
        for i in 0..n {
            if !(work1[i] >= work0[i] && work0[i] >= 0.0) {
                return Err(Error::Invalid(format!(
                    "state {}: need Q1 >= Q0 >= 0, got Q0={} Q1={}",
                    i + 1,
                    work0[i],
                    work1[i]
                )));
            }
        }
        let trans0 = validate_stochastic("P0", &self.trans0, n)?;
        let trans1 = validate_stochastic("P1", &self.trans1, n)?;
        if init_dist.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::Invalid("initial distribution must be strictly positive".into()));
        }
        let total: f64 = init_dist.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::Invalid(format!("initial distribution sums to {total}")));
        }
        let partition = partition_raw(&work0, &work1, &trans0, &trans1);
        Ok(RestlessBandit {
            beta: self.beta,
            reward0,
            reward1: self.reward1,
            work0,
            work1,
            trans0,
            trans1,
            init_dist,
            labels: self.labels,
            partition,
        })
    }
}

fn validate_stochastic(name: &'static str, rows: &[Vec<f64>], n: usize) -> Result<Matrix> {
    if rows.len() != n {
        return Err(Error::Invalid(format!("{name} has {} rows, expected {n}", rows.len())));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Invalid(format!(
                "row {} of {name} has {} entries, expected {n}",
                i + 1,
                row.len()
            )));
        }
        if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::Invalid(format!("row {} of {name} has a negative entry", i + 1)));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(Error::RowSum { matrix: name, row: i + 1, sum });
        }
    }
    Ok(Matrix::from_rows(rows))
}

fn partition_raw(work0: &[f64], work1: &[f64], p0: &Matrix, p1: &Matrix) -> ControllabilityPartition {
    let (mut uncontrollable, mut controllable) = (Vec::new(), Vec::new());
    for i in 0..work0.len() {
        let same = (work1[i] - work0[i]).abs() <= PROB_TOL
            && p0.row(i).iter().zip(p1.row(i)).all(|(a, b)| (a - b).abs() <= PROB_TOL);
        if same {
            uncontrollable.push(i);
        } else {
            controllable.push(i);
        }
    }
    ControllabilityPartition {
        uncontrollable,
        controllable,
    }
}

/// Splits the state space into uncontrollable and controllable states.
pub fn partition_states(b: &RestlessBandit) -> ControllabilityPartition {
    b.partition.clone()
}

impl RestlessBandit {
    pub fn n_states(&self) -> usize {
        self.reward1.len()
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn reward(&self, action: usize) -> &[f64] {
        if action == 1 { &self.reward1 } else { &self.reward0 }
    }
    pub fn work(&self, action: usize) -> &[f64] {
        if action == 1 { &self.work1 } else { &self.work0 }
    }
    pub fn trans(&self, action: usize) -> &Matrix {
        if action == 1 { &self.trans1 } else { &self.trans0 }
    }
    pub fn init_dist(&self) -> &[f64] {
        &self.init_dist
    }
    pub fn partition(&self) -> &ControllabilityPartition {
        &self.partition
    }
    pub fn controllable(&self) -> &[usize] {
        &self.partition.controllable
    }
    pub fn is_controllable(&self, i: usize) -> bool {
        self.partition.controllable.binary_search(&i).is_ok()
    }

    /// Display label of state `i` (0-based): a custom label when the instance
    /// carries one, otherwise the 1-based index.
    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(l) => l[i].clone(),
            None => (i + 1).to_string(),
        }
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Same instance with a different initial-state distribution.
    pub fn with_init_dist(&self, p: Vec<f64>) -> Result<Self> {
        self.to_builder().init_dist(p).build()
    }

    pub fn to_builder(&self) -> BanditBuilder {
        BanditBuilder {
            beta: self.beta,
            reward0: Some(self.reward0.clone()),
            reward1: self.reward1.clone(),
            work0: Some(self.work0.clone()),
            work1: Some(self.work1.clone()),
            trans0: self.trans0.to_rows(),
            trans1: self.trans1.to_rows(),
            init_dist: Some(self.init_dist.clone()),
            labels: self.labels.clone(),
        }
    }

    /// Relabels states: new state `perm[i]` is old state `i`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n_states();
        let mut inv = vec![usize::MAX; n];
        for (old, &new) in perm.iter().enumerate() {
            inv[new] = old;
        }
        if perm.len() != n || inv.contains(&usize::MAX) {
            return Err(Error::Invalid("not a permutation".into()));
        }
        let vec_of = |v: &[f64]| inv.iter().map(|&o| v[o]).collect::<Vec<_>>();
        let mat_of = |m: &Matrix| {
            inv.iter()
                .map(|&oi| inv.iter().map(|&oj| m[(oi, oj)]).collect())
                .collect::<Vec<Vec<f64>>>()
        };
        let mut builder = BanditBuilder::new(self.beta, vec_of(&self.reward1), mat_of(&self.trans0), mat_of(&self.trans1))
            .reward0(vec_of(&self.reward0))
            .work(vec_of(&self.work0), vec_of(&self.work1))
            .init_dist(vec_of(&self.init_dist));
        if let Some(l) = &self.labels {
            builder = builder.labels(inv.iter().map(|&o| l[o].clone()).collect());
        }
        builder.build()
    }

    fn check_set(&self, s: &ActiveSet) -> Result<()> {
        match s.iter().find(|&i| i >= self.n_states() || !self.is_controllable(i)) {
            Some(i) => Err(Error::Invalid(format!(
                "active set {s} contains state {} which is not controllable",
                i + 1
            ))),
            None => Ok(()),
        }
    }
}

/// Reward and work measures of one stationary deterministic policy.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyValue {
    pub f_per_state: Vec<f64>,
    pub g_per_state: Vec<f64>,
    pub f_agg: f64,
    pub g_agg: f64,
}

/// Exact reward and work measures of the `s`-active policy.
pub fn evaluate_policy(b: &RestlessBandit, s: &ActiveSet) -> Result<PolicyValue> {
    b.check_set(s)?;
    let n = b.n_states();
    let mut a = Matrix::identity(n);
    let mut rew = vec![0.0; n];
    let mut wrk = vec![0.0; n];
    for i in 0..n {
        let act = usize::from(s.contains(i));
        let p = b.trans(act).row(i);
        for (j, &pij) in p.iter().enumerate() {
            a[(i, j)] -= b.beta * pij;
        }
        rew[i] = b.reward(act)[i];
        wrk[i] = b.work(act)[i];
    }
    let lu = Lu::factor(a)?;
    let f = lu.solve(&rew);
    let g = lu.solve(&wrk);
    Ok(PolicyValue {
        f_agg: dot(&b.init_dist, &f),
        g_agg: dot(&b.init_dist, &g),
        f_per_state: f,
        g_per_state: g,
    })
}

/// Marginal work, reward and productivity of working now rather than
/// resting, then following the `S`-active policy. Indexed by state; zero at
/// uncontrollable states.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalMeasures {
    pub w: Vec<f64>,
    pub r: Vec<f64>,
    pub nu: Vec<Option<f64>>,
}

impl MarginalMeasures {
    pub fn from_value(b: &RestlessBandit, v: &PolicyValue) -> Self {
        let n = b.n_states();
        let (mut w, mut r, mut nu) = (vec![0.0; n], vec![0.0; n], vec![None; n]);
        for &i in b.controllable() {
            let (p1, p0) = (b.trans1.row(i), b.trans0.row(i));
            let mut dg = 0.0;
            let mut df = 0.0;
            for j in 0..n {
                let d = p1[j] - p0[j];
                dg += d * v.g_per_state[j];
                df += d * v.f_per_state[j];
            }
            w[i] = b.work1[i] - b.work0[i] + b.beta * dg;
            r[i] = b.reward1[i] - b.reward0[i] + b.beta * df;
            if w[i].abs() > ZERO_WORK_TOL {
                nu[i] = Some(r[i] / w[i]);
            }
        }
        Self { w, r, nu }
    }
}

pub fn marginal_measures(b: &RestlessBandit, s: &ActiveSet) -> Result<MarginalMeasures> {
    Ok(MarginalMeasures::from_value(b, &evaluate_policy(b, s)?))
}

/// Evaluation and marginal measures from a single factorization.
pub fn evaluate_with_marginals(b: &RestlessBandit, s: &ActiveSet) -> Result<(PolicyValue, MarginalMeasures)> {
    let v = evaluate_policy(b, s)?;
    let m = MarginalMeasures::from_value(b, &v);
    Ok((v, m))
}

/// Value of taking `action` at `i` for one period and then following the
/// `S`-active policy, as `(reward, work)`.
pub fn one_step(b: &RestlessBandit, v: &PolicyValue, i: usize, action: usize) -> (f64, f64) {
    let p = b.trans(action).row(i);
    (
        b.reward(action)[i] + b.beta * dot(p, &v.f_per_state),
        b.work(action)[i] + b.beta * dot(p, &v.g_per_state),
    )
}
