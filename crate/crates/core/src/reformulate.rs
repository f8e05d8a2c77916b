//! Restless embeddings of classic bandits: plain, with startup costs, and
//! with a finite horizon, together with the set systems their indices are
//! computed over.
//!
//! Augmented states are packed into flat indices as `a * n + i` for
//! `(previous action a, base state i)` and `t * n + i` for
//! `(remaining time t, base state i)`.

use serde::{Deserialize, Serialize};

use crate::active_set::ActiveSet;
use crate::bandit::{BanditBuilder, RestlessBandit};
use crate::error::{Error, Result};
use crate::greedy::adaptive_greedy;
use crate::setsys::{family_full, SetSystem};

/// A classic bandit: the passive action freezes the state and earns nothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicBandit {
    pub beta: f64,
    pub reward: Vec<f64>,
    pub trans: Vec<Vec<f64>>,
    /// Charged whenever the bandit is engaged after resting.
    #[serde(default)]
    pub startup_cost: f64,
}

impl ClassicBandit {
    pub fn n_states(&self) -> usize {
        self.reward.len()
    }

    fn check(&self) -> Result<()> {
        if !(self.startup_cost >= 0.0 && self.startup_cost.is_finite()) {
            return Err(Error::Invalid(format!("startup cost must be nonnegative, got {}", self.startup_cost)));
        }
        if self.trans.len() != self.n_states() {
            return Err(Error::Invalid("transition matrix size must match the reward vector".into()));
        }
        Ok(())
    }
}

fn base_label(i: usize) -> String {
    (i + 1).to_string()
}

/// Embeds a classic bandit without switching costs.
pub fn embed_classic(cb: &ClassicBandit) -> Result<RestlessBandit> {
    cb.check()?;
    if cb.startup_cost != 0.0 {
        return Err(Error::Invalid("use embed_switching for a positive startup cost".into()));
    }
    let n = cb.n_states();
    let identity: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    BanditBuilder::new(cb.beta, cb.reward.clone(), identity, cb.trans.clone()).build()
}

/// Previous-action augmentation: flat state of `(a, i)`.
pub fn switching_state(n: usize, prev_action: usize, i: usize) -> usize {
    prev_action * n + i
}

/// Inverse of [`switching_state`].
pub fn switching_unpack(n: usize, flat: usize) -> (usize, usize) {
    (flat / n, flat % n)
}

/// Remaining-time augmentation: flat state of `(t, i)`.
pub fn horizon_state(n: usize, t: usize, i: usize) -> usize {
    t * n + i
}

/// Inverse of [`horizon_state`].
pub fn horizon_unpack(n: usize, flat: usize) -> (usize, usize) {
    (flat / n, flat % n)
}

/// Embeds a classic bandit with startup cost over states `(a, i)`, where
/// `a` is the previous action.
pub fn embed_switching(cb: &ClassicBandit) -> Result<RestlessBandit> {
    cb.check()?;
    let n = cb.n_states();
    let m = 2 * n;
    let mut reward1 = vec![0.0; m];
    let mut trans0 = vec![vec![0.0; m]; m];
    let mut trans1 = vec![vec![0.0; m]; m];
    let mut labels = Vec::with_capacity(m);
    for a in 0..2 {
        for i in 0..n {
            let s = switching_state(n, a, i);
            reward1[s] = cb.reward[i] - if a == 0 { cb.startup_cost } else { 0.0 };
            trans0[s][switching_state(n, 0, i)] = 1.0;
            for (j, &p) in cb.trans[i].iter().enumerate() {
                trans1[s][switching_state(n, 1, j)] = p;
            }
            labels.push(format!("({a},{})", base_label(i)));
        }
    }
    BanditBuilder::new(cb.beta, reward1, trans0, trans1).labels(labels).build()
}

/// Embeds a classic bandit over states `(t, i)` with `t = horizon..1`
/// periods remaining, plus an absorbing, uncontrollable layer `t = 0`.
pub fn embed_finite_horizon(cb: &ClassicBandit, horizon: usize) -> Result<RestlessBandit> {
    cb.check()?;
    if horizon == 0 {
        return Err(Error::Invalid("horizon must be at least 1".into()));
    }
    if cb.startup_cost != 0.0 {
        return Err(Error::Invalid("finite-horizon embedding takes no startup cost".into()));
    }
    let n = cb.n_states();
    let m = (horizon + 1) * n;
    let mut reward1 = vec![0.0; m];
    let mut work1 = vec![0.0; m];
    let mut trans0 = vec![vec![0.0; m]; m];
    let mut trans1 = vec![vec![0.0; m]; m];
    let mut labels = Vec::with_capacity(m);
    for t in 0..=horizon {
        for i in 0..n {
            let s = horizon_state(n, t, i);
            labels.push(format!("({t},{})", base_label(i)));
            if t == 0 {
                trans0[s][s] = 1.0;
                trans1[s][s] = 1.0;
                continue;
            }
            reward1[s] = cb.reward[i];
            work1[s] = 1.0;
            trans0[s][horizon_state(n, t - 1, i)] = 1.0;
            for (j, &p) in cb.trans[i].iter().enumerate() {
                trans1[s][horizon_state(n, t - 1, j)] = p;
            }
        }
    }
    BanditBuilder::new(cb.beta, reward1, trans0, trans1)
        .work(vec![0.0; m], work1)
        .labels(labels)
        .build()
}

/// Gittins indices of a classic bandit, by base state.
pub fn gittins_indices(cb: &ClassicBandit) -> Result<Vec<f64>> {
    let plain = ClassicBandit { startup_cost: 0.0, ..cb.clone() };
    let b = embed_classic(&plain)?;
    let r = adaptive_greedy(&b, &family_full(b.partition()))?;
    let mut out = vec![0.0; cb.n_states()];
    for (&i, &v) in r.order.iter().zip(&r.values) {
        out[i] = v;
    }
    Ok(out)
}

/// Active sets `S_0 ⊕ S_1` over `(a, i)` with `S_0 ⊆ S_1`: a bandit that
/// would be engaged after resting is also kept engaged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwitchingFamily {
    n: usize,
    ground: Vec<usize>,
}

pub fn family_switching(n: usize) -> SwitchingFamily {
    SwitchingFamily { n, ground: (0..2 * n).collect() }
}

impl SwitchingFamily {
    fn slices(&self, s: &ActiveSet) -> (ActiveSet, ActiveSet) {
        let mut parts = (ActiveSet::empty(), ActiveSet::empty());
        for x in s.iter() {
            match switching_unpack(self.n, x) {
                (0, i) => parts.0.insert(i),
                (_, i) => parts.1.insert(i),
            };
        }
        parts
    }
}

impl SetSystem for SwitchingFamily {
    fn ground(&self) -> &[usize] {
        &self.ground
    }
    fn contains(&self, s: &ActiveSet) -> bool {
        let in_ground = s.iter().all(|x| x < 2 * self.n);
        let (s0, s1) = self.slices(s);
        in_ground && s0.is_subset(&s1)
    }
    fn outer_boundary(&self, s: &ActiveSet) -> Vec<usize> {
        let (_, s1) = self.slices(s);
        self.ground
            .iter()
            .copied()
            .filter(|&x| !s.contains(x))
            .filter(|&x| match switching_unpack(self.n, x) {
                (0, i) => s1.contains(i),
                _ => true,
            })
            .collect()
    }
    fn inner_boundary(&self, s: &ActiveSet) -> Vec<usize> {
        let (s0, _) = self.slices(s);
        s.iter()
            .filter(|&x| match switching_unpack(self.n, x) {
                (0, _) => true,
                (_, i) => !s0.contains(i),
            })
            .collect()
    }
    fn member_count(&self) -> Option<u128> {
        3u128.checked_pow(self.n as u32)
    }
    fn monotone_connected_certificate(&self) -> bool {
        true
    }
    fn describe(&self) -> String {
        format!("switching family over {} base states", self.n)
    }
}

/// Active sets over `(t, i)`, `t = 1..=horizon`, whose time slices grow
/// with the remaining time: `S_1 ⊆ S_2 ⊆ ... ⊆ S_T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HorizonFamily {
    n: usize,
    horizon: usize,
    ground: Vec<usize>,
}

pub fn family_horizon(n: usize, horizon: usize) -> HorizonFamily {
    HorizonFamily {
        n,
        horizon,
        ground: (n..(horizon + 1) * n).collect(),
    }
}

impl HorizonFamily {
    /// `slices[t]` is `S_t`; `slices[0]` is always empty.
    pub fn slices(&self, s: &ActiveSet) -> Vec<ActiveSet> {
        let mut out = vec![ActiveSet::empty(); self.horizon + 2];
        for x in s.iter() {
            let (t, i) = horizon_unpack(self.n, x);
            out[t.min(self.horizon + 1)].insert(i);
        }
        out
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }
}

impl SetSystem for HorizonFamily {
    fn ground(&self) -> &[usize] {
        &self.ground
    }
    fn contains(&self, s: &ActiveSet) -> bool {
        let sl = self.slices(s);
        sl[0].is_empty() && sl[self.horizon + 1].is_empty() && (1..self.horizon).all(|t| sl[t].is_subset(&sl[t + 1]))
    }
    fn outer_boundary(&self, s: &ActiveSet) -> Vec<usize> {
        let sl = self.slices(s);
        self.ground
            .iter()
            .copied()
            .filter(|&x| !s.contains(x))
            .filter(|&x| {
                let (t, i) = horizon_unpack(self.n, x);
                t == self.horizon || sl[t + 1].contains(i)
            })
            .collect()
    }
    fn inner_boundary(&self, s: &ActiveSet) -> Vec<usize> {
        let sl = self.slices(s);
        s.iter()
            .filter(|&x| {
                let (t, i) = horizon_unpack(self.n, x);
                t == 1 || !sl[t - 1].contains(i)
            })
            .collect()
    }
    fn member_count(&self) -> Option<u128> {
        (self.horizon as u128 + 1).checked_pow(self.n as u32)
    }
    fn monotone_connected_certificate(&self) -> bool {
        true
    }
    fn describe(&self) -> String {
        format!("horizon family over {} base states and {} periods", self.n, self.horizon)
    }
}
