//! The adaptive-greedy index algorithm over a set system.

use crate::active_set::ActiveSet;
use crate::bandit::{evaluate_with_marginals, MarginalMeasures, RestlessBandit, ZERO_WORK_TOL};
use crate::error::{Error, Result};
use crate::setsys::SetSystem;

/// Index values closer than this (relative) count as ties.
pub const TIE_TOL: f64 = 1e-10;

/// A nonpositive marginal work value `w_i^S`.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkWitness {
    pub state: usize,
    pub set: ActiveSet,
    pub w: f64,
}

impl std::fmt::Display for WorkWitness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "w_{}^{{{}}} = {:.6e}", self.state + 1, self.set, self.w)
    }
}

/// Output of [`adaptive_greedy`].
#[derive(Debug, Clone, PartialEq)]
pub struct MpiResult {
    /// States in the order they were added.
    pub order: Vec<usize>,
    /// `values[k]` is the index of `order[k]`.
    pub values: Vec<f64>,
    /// Values are nonincreasing up to [`TIE_TOL`].
    pub monotone: bool,
    /// Every ground state has positive marginal work at every visited set.
    pub marginal_work_ok: bool,
    /// First nonpositive marginal work found along the chain.
    pub witness: Option<WorkWitness>,
    /// `S_0 = {} ⊂ S_1 ⊂ ... ⊂ S_n`.
    pub family: Vec<ActiveSet>,
    /// Marginal measures at each `S_k`, `k = 0..=n`.
    pub measures: Vec<MarginalMeasures>,
}

impl MpiResult {
    pub fn index_of(&self, i: usize) -> Option<f64> {
        self.order.iter().position(|&s| s == i).map(|k| self.values[k])
    }

    /// Rows of `(rank, state, index, cumulative active set)`.
    pub fn rows(&self) -> impl Iterator<Item = (usize, usize, f64, &ActiveSet)> + '_ {
        self.order
            .iter()
            .zip(&self.values)
            .enumerate()
            .map(|(k, (&i, &v))| (k + 1, i, v, &self.family[k + 1]))
    }
}

pub(crate) fn is_tie(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Runs `AG_F`: starting from the empty set, repeatedly adds the outer
/// boundary state of largest marginal productivity rate. Ties go to the
/// smallest state.
pub fn adaptive_greedy(b: &RestlessBandit, sys: &dyn SetSystem) -> Result<MpiResult> {
    for &i in sys.ground() {
        if !b.is_controllable(i) {
            return Err(Error::SetSystem(format!("ground state {} is not controllable", b.label(i))));
        }
    }
    let n = sys.ground().len();
    let mut s = ActiveSet::empty();
    let mut order = Vec::with_capacity(n);
    let mut values: Vec<f64> = Vec::with_capacity(n);
    let mut family = vec![s.clone()];
    let mut measures = Vec::with_capacity(n + 1);
    let mut witness = None;
    for k in 0..=n {
        let (_, m) = evaluate_with_marginals(b, &s)?;
        if witness.is_none() {
            witness = sys
                .ground()
                .iter()
                .find(|&&i| m.w[i] <= ZERO_WORK_TOL)
                .map(|&i| WorkWitness { state: i, set: s.clone(), w: m.w[i] });
        }
        if k == n {
            measures.push(m);
            break;
        }
        let outer = sys.outer_boundary(&s);
        if outer.is_empty() {
            return Err(Error::SetSystem(format!("empty outer boundary at proper member {s}")));
        }
        let mut best: Option<(usize, f64)> = None;
        for i in outer {
            let nu = m.nu[i].ok_or_else(|| Error::ZeroMarginalWork {
                state: i,
                set: s.to_string(),
            })?;
            if best.is_none_or(|(_, bv)| nu > bv) {
                best = Some((i, nu));
            }
        }
        let (i, nu) = best.expect("outer boundary is nonempty");
        order.push(i);
        values.push(nu);
        s.insert(i);
        family.push(s.clone());
        measures.push(m);
    }
    let monotone = values.windows(2).all(|w| w[1] <= w[0] || is_tie(w[0], w[1]));
    Ok(MpiResult {
        order,
        values,
        monotone,
        marginal_work_ok: witness.is_none(),
        witness,
        family,
        measures,
    })
}
