//! Ground-truth indexability by exhaustive enumeration.
//!
//! Two independent views of the same question live here:
//!
//! * [`region`] evaluates every active set and extracts the upper boundary
//!   of the achievable work-reward region;
//! * [`test_indexability`] sweeps the wage `nu` across every candidate
//!   breakpoint (each marginal productivity rate `nu_i^S`), solves the
//!   `nu`-wage problem between consecutive candidates and checks that the
//!   minimal optimal active sets grow as a chain from the empty set to all
//!   controllable states.
//!
//! Both are exponential in the number of controllable states and guarded by
//! [`OracleOptions::max_controllable`].

use rayon::prelude::*;

use crate::active_set::ActiveSet;
use crate::bandit::{evaluate_policy, evaluate_with_marginals, RestlessBandit, ZERO_WORK_TOL};
use crate::error::{Error, Result};
use crate::hull;
use crate::linalg::{dot, Lu, Matrix};

/// Relative tolerance used to merge candidate breakpoints.
pub const BREAKPOINT_TOL: f64 = 1e-9;
/// Relative threshold on the active advantage in the minimal optimal set.
pub const ADVANTAGE_TOL: f64 = 1e-9;
/// Collinearity tolerance of the upper-boundary hull.
pub const HULL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleOptions {
    /// Largest number of controllable states the enumeration accepts.
    pub max_controllable: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { max_controllable: 20 }
    }
}

impl OracleOptions {
    pub fn check(&self, b: &RestlessBandit) -> Result<()> {
        let n = b.controllable().len();
        if n > self.max_controllable || n >= 64 {
            return Err(Error::SizeGuard {
                what: "controllable states",
                actual: n,
                limit: self.max_controllable.min(63),
            });
        }
        Ok(())
    }
}

/// One stationary deterministic policy's aggregate performance.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionPoint {
    pub set: ActiveSet,
    /// Bitmask of `set` over the controllable states in ascending order.
    pub mask: u64,
    pub g: f64,
    pub f: f64,
}

/// Every deterministic policy's `(g^S, f^S)` and the upper-boundary chain.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkRewardRegion {
    pub points: Vec<RegionPoint>,
    /// Indices into `points`, left to right.
    pub upper_chain: Vec<usize>,
}

impl WorkRewardRegion {
    pub fn chain_sets(&self) -> Vec<ActiveSet> {
        self.upper_chain.iter().map(|&k| self.points[k].set.clone()).collect()
    }

    /// Whether point `k` lies on the upper boundary (vertex or on a segment).
    pub fn on_upper_boundary(&self, k: usize) -> bool {
        let pts: Vec<(f64, f64)> = self.points.iter().map(|p| (p.g, p.f)).collect();
        let scale = pts.iter().fold(1.0_f64, |m, p| m.max(p.1.abs()));
        match hull::envelope_at(&pts, &self.upper_chain, pts[k].0) {
            Some(h) => (pts[k].1 - h).abs() <= 1e-9 * scale,
            None => false,
        }
    }

    /// Whether the chain is a nested family growing one state at a time.
    pub fn is_single_step_nested(&self) -> bool {
        self.chain_sets()
            .windows(2)
            .all(|w| w[0].is_subset(&w[1]) && w[1].len() == w[0].len() + 1)
    }

    /// Slopes between consecutive chain vertices.
    pub fn slopes(&self) -> Vec<f64> {
        self.upper_chain
            .windows(2)
            .map(|w| {
                let (a, b) = (&self.points[w[0]], &self.points[w[1]]);
                (b.f - a.f) / (b.g - a.g)
            })
            .collect()
    }
}

pub fn region(b: &RestlessBandit) -> Result<WorkRewardRegion> {
    region_with(b, &OracleOptions::default())
}

pub fn region_with(b: &RestlessBandit, opts: &OracleOptions) -> Result<WorkRewardRegion> {
    opts.check(b)?;
    let ground = b.controllable();
    let points = (0..1u64 << ground.len())
        .into_par_iter()
        .map(|mask| {
            let set = ActiveSet::from_mask(ground, mask);
            let v = evaluate_policy(b, &set)?;
            Ok(RegionPoint { set, mask, g: v.g_agg, f: v.f_agg })
        })
        .collect::<Result<Vec<_>>>()?;
    let xy: Vec<(f64, f64)> = points.iter().map(|p| (p.g, p.f)).collect();
    let upper_chain = hull::upper_chain(&xy, HULL_TOL);
    Ok(WorkRewardRegion { points, upper_chain })
}

/// Optimal solution of the `nu`-wage problem.
#[derive(Debug, Clone, PartialEq)]
pub struct WageSolution {
    pub wage: f64,
    pub value_per_state: Vec<f64>,
    /// States where working is strictly better than resting.
    pub minimal_active_set: ActiveSet,
    /// States where working is optimal, ties included.
    pub maximal_active_set: ActiveSet,
    /// Controllable states whose advantage is within ten times the tie
    /// tolerance of zero without being an exact structural tie.
    pub borderline: Vec<usize>,
}

/// Solves `max_S f^S - nu g^S` by policy iteration from the all-passive
/// policy.
pub fn solve_wage(b: &RestlessBandit, nu: f64) -> Result<WageSolution> {
    let n = b.n_states();
    let beta = b.beta();
    let net = |a: usize, i: usize| b.reward(a)[i] - nu * b.work(a)[i];
    let mut active = vec![false; n];
    let max_iter = 10 * n + 100;
    for _ in 0..max_iter {
        let v = policy_value(b, &active, nu)?;
        let scale = v.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
        let mut changed = false;
        for &i in b.controllable() {
            let q1 = net(1, i) + beta * dot(b.trans(1).row(i), &v);
            let q0 = net(0, i) + beta * dot(b.trans(0).row(i), &v);
            let want = if q1 > q0 + 1e-12 * scale {
                true
            } else if q0 > q1 + 1e-12 * scale {
                false
            } else {
                active[i]
            };
            if want != active[i] {
                active[i] = want;
                changed = true;
            }
        }
        if !changed {
            return Ok(classify(b, nu, v));
        }
    }
    Err(Error::Numerical(format!("policy iteration did not terminate at wage {nu}")))
}

fn policy_value(b: &RestlessBandit, active: &[bool], nu: f64) -> Result<Vec<f64>> {
    let n = b.n_states();
    let mut a = Matrix::identity(n);
    let mut c = vec![0.0; n];
    for i in 0..n {
        let act = usize::from(active[i]);
        for (j, p) in b.trans(act).row(i).iter().enumerate() {
            a[(i, j)] -= b.beta() * p;
        }
        c[i] = b.reward(act)[i] - nu * b.work(act)[i];
    }
    Ok(Lu::factor(a)?.solve(&c))
}

fn classify(b: &RestlessBandit, nu: f64, v: Vec<f64>) -> WageSolution {
    let scale = v.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
    let mut minimal = ActiveSet::empty();
    let mut maximal = ActiveSet::empty();
    let mut borderline = Vec::new();
    for &i in b.controllable() {
        let q1 = b.reward(1)[i] - nu * b.work(1)[i] + b.beta() * dot(b.trans(1).row(i), &v);
        let q0 = b.reward(0)[i] - nu * b.work(0)[i] + b.beta() * dot(b.trans(0).row(i), &v);
        let adv = q1 - q0;
        if adv > ADVANTAGE_TOL * scale {
            minimal.insert(i);
        }
        if adv >= -ADVANTAGE_TOL * scale {
            maximal.insert(i);
        }
        if adv != 0.0 && adv.abs() <= 10.0 * ADVANTAGE_TOL * scale {
            borderline.push(i);
        }
    }
    WageSolution {
        wage: nu,
        value_per_state: v,
        minimal_active_set: minimal,
        maximal_active_set: maximal,
        borderline,
    }
}

/// Evidence that the minimal optimal active sets do not grow as a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct NonindexabilityWitness {
    pub wage_high: f64,
    pub wage_low: f64,
    pub set_high: ActiveSet,
    pub set_low: ActiveSet,
    /// Neither set contains the other.
    pub incomparable: bool,
}

/// Outcome of the breakpoint sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexabilityVerdict {
    pub indexable: bool,
    /// `(state, index)` pairs in insertion order, when indexable.
    pub mpi: Vec<(usize, f64)>,
    /// `S_0 = {} ⊂ S_1 ⊂ ... ⊂ S_n`, one state per step, when indexable.
    pub nested_family: Vec<ActiveSet>,
    pub witness: Option<NonindexabilityWitness>,
    /// Every wage probed and its solution, from high to low.
    pub sweep: Vec<WageSolution>,
    /// Distinct candidate breakpoints, descending.
    pub breakpoints: Vec<f64>,
}

impl IndexabilityVerdict {
    /// Index of state `i`, if indexable and `i` controllable.
    pub fn index_of(&self, i: usize) -> Option<f64> {
        self.mpi.iter().find(|(s, _)| *s == i).map(|&(_, v)| v)
    }

    /// States in insertion order.
    pub fn order(&self) -> Vec<usize> {
        self.mpi.iter().map(|&(s, _)| s).collect()
    }

    /// States reported near a tie at some probed wage.
    pub fn borderline_states(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.sweep.iter().flat_map(|s| s.borderline.iter().copied()).collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// All marginal productivity rates over every active set, sorted descending
/// and merged within [`BREAKPOINT_TOL`].
pub fn candidate_breakpoints(b: &RestlessBandit, opts: &OracleOptions) -> Result<Vec<f64>> {
    opts.check(b)?;
    let ground = b.controllable();
    let per_set = (0..1u64 << ground.len())
        .into_par_iter()
        .map(|mask| {
            let set = ActiveSet::from_mask(ground, mask);
            let (_, m) = evaluate_with_marginals(b, &set)?;
            Ok(ground
                .iter()
                .filter(|&&i| m.w[i].abs() > ZERO_WORK_TOL)
                .map(|&i| m.r[i] / m.w[i])
                .collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut all: Vec<f64> = per_set.into_iter().flatten().filter(|v| v.is_finite()).collect();
    all.sort_by(|a, b| b.total_cmp(a));
    let mut out: Vec<f64> = Vec::with_capacity(all.len());
    for v in all {
        match out.last() {
            Some(&last) if (last - v).abs() <= BREAKPOINT_TOL * last.abs().max(v.abs()) + 1e-15 => {}
            _ => out.push(v),
        }
    }
    Ok(out)
}

pub fn test_indexability(b: &RestlessBandit) -> Result<IndexabilityVerdict> {
    test_indexability_with(b, &OracleOptions::default())
}

pub fn test_indexability_with(b: &RestlessBandit, opts: &OracleOptions) -> Result<IndexabilityVerdict> {
    opts.check(b)?;
    let full = b.partition().full_set();
    if full.is_empty() {
        return Ok(IndexabilityVerdict {
            indexable: true,
            mpi: Vec::new(),
            nested_family: vec![ActiveSet::empty()],
            witness: None,
            sweep: Vec::new(),
            breakpoints: Vec::new(),
        });
    }
    let bps = candidate_breakpoints(b, opts)?;
    let wages = probe_wages(&bps);
    let sweep = wages
        .par_iter()
        .map(|&nu| solve_wage(b, nu))
        .collect::<Result<Vec<_>>>()?;

    let mut witness = None;
    let top = &sweep[0];
    let bottom = sweep.last().expect("at least two probes");
    if !top.minimal_active_set.is_empty() {
        witness = Some(NonindexabilityWitness {
            wage_high: f64::INFINITY,
            wage_low: top.wage,
            set_high: ActiveSet::empty(),
            set_low: top.minimal_active_set.clone(),
            incomparable: false,
        });
    } else if bottom.minimal_active_set != full {
        witness = Some(NonindexabilityWitness {
            wage_high: bottom.wage,
            wage_low: f64::NEG_INFINITY,
            set_high: bottom.minimal_active_set.clone(),
            set_low: full.clone(),
            incomparable: false,
        });
    } else if let Some(w) = sweep.windows(2).find(|w| !w[0].minimal_active_set.is_subset(&w[1].minimal_active_set)) {
        let (hi, lo) = (&w[0], &w[1]);
        witness = Some(NonindexabilityWitness {
            wage_high: hi.wage,
            wage_low: lo.wage,
            set_high: hi.minimal_active_set.clone(),
            set_low: lo.minimal_active_set.clone(),
            incomparable: !lo.minimal_active_set.is_subset(&hi.minimal_active_set),
        });
    }
    if witness.is_some() {
        return Ok(IndexabilityVerdict {
            indexable: false,
            mpi: Vec::new(),
            nested_family: Vec::new(),
            witness,
            sweep,
            breakpoints: bps,
        });
    }

    // Between probes k and k+1 lies exactly one candidate, bps[k].
    let mut mpi = Vec::with_capacity(full.len());
    let mut family = vec![ActiveSet::empty()];
    for (k, w) in sweep.windows(2).enumerate() {
        let entering = w[1].minimal_active_set.difference(&w[0].minimal_active_set);
        for i in entering.iter() {
            mpi.push((i, bps[k]));
            let next = family.last().unwrap().with(i);
            family.push(next);
        }
    }
    Ok(IndexabilityVerdict {
        indexable: true,
        mpi,
        nested_family: family,
        witness: None,
        sweep,
        breakpoints: bps,
    })
}

/// A wage above every candidate, the midpoints, and one below all of them.
fn probe_wages(bps: &[f64]) -> Vec<f64> {
    let (Some(&hi), Some(&lo)) = (bps.first(), bps.last()) else {
        return vec![1.0, -1.0];
    };
    let mut w = Vec::with_capacity(bps.len() + 1);
    w.push(hi + hi.abs().max(1.0));
    w.extend(bps.windows(2).map(|p| 0.5 * (p[0] + p[1])));
    w.push(lo - lo.abs().max(1.0));
    w
}

/// Checks `theta_i(nu) = max_{S in F_0} f_i^S - nu g_i^S` for every state.
pub fn optimal_value_check(b: &RestlessBandit, verdict: &IndexabilityVerdict, nu: f64) -> Result<bool> {
    if !verdict.indexable {
        return Err(Error::Invalid("optimal value representation needs an indexable instance".into()));
    }
    let sol = solve_wage(b, nu)?;
    let values = verdict
        .nested_family
        .iter()
        .map(|s| evaluate_policy(b, s))
        .collect::<Result<Vec<_>>>()?;
    Ok((0..b.n_states()).all(|i| {
        let best = values
            .iter()
            .map(|v| v.f_per_state[i] - nu * v.g_per_state[i])
            .fold(f64::NEG_INFINITY, f64::max);
        let theta = sol.value_per_state[i];
        (best - theta).abs() <= 1e-8 * theta.abs().max(1.0)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{figure1, figure2, figure3};

    fn sets(v: &[&[usize]]) -> Vec<ActiveSet> {
        v.iter().map(|s| s.iter().map(|i| i - 1).collect()).collect()
    }

    #[test]
    fn figure1_region_chain() {
        let r = region(&figure1()).unwrap();
        assert_eq!(r.chain_sets(), sets(&[&[], &[1], &[1, 2], &[1, 2, 3]]));
        assert_eq!(r.points.len(), 8);
        // numpy reference values for {1,2}
        let p = r.points.iter().find(|p| p.set == sets(&[&[1, 2]])[0]).unwrap();
        assert!((p.g - 7.0793230056172485).abs() < 1e-10);
        assert!((p.f - 4.0567190813785805).abs() < 1e-10);
    }

    #[test]
    fn figure2_region_not_nested() {
        let r = region(&figure2()).unwrap();
        assert!(!r.is_single_step_nested());
        assert_eq!(
            r.chain_sets(),
            sets(&[&[], &[2], &[1, 2], &[1], &[1, 3], &[1, 2, 3]])
        );
    }

    #[test]
    fn figure3_region_chain() {
        let r = region(&figure3()).unwrap();
        assert_eq!(r.chain_sets(), sets(&[&[], &[2], &[2, 3], &[1, 2, 3]]));
    }

    #[test]
    fn extreme_wages() {
        let b = figure1();
        assert!(solve_wage(&b, 1e6).unwrap().minimal_active_set.is_empty());
        assert_eq!(solve_wage(&b, -1e6).unwrap().minimal_active_set, b.partition().full_set());
    }

    #[test]
    fn figure1_indexable_with_decreasing_index() {
        let b = figure1();
        let v = test_indexability(&b).unwrap();
        assert!(v.indexable);
        assert_eq!(v.order(), vec![0, 1, 2]);
        assert!(v.mpi[0].1 > v.mpi[1].1 && v.mpi[1].1 > v.mpi[2].1);
        // The wage between the second and third index values activates {1,2}.
        let mid = 0.5 * (v.mpi[1].1 + v.mpi[2].1);
        assert_eq!(solve_wage(&b, mid).unwrap().minimal_active_set, sets(&[&[1, 2]])[0]);
        assert!(optimal_value_check(&b, &v, 0.0).unwrap());
    }

    #[test]
    fn figure2_nonindexable() {
        let v = test_indexability(&figure2()).unwrap();
        assert!(!v.indexable);
        let w = v.witness.as_ref().unwrap();
        assert!(w.wage_high > w.wage_low);
        assert!(!w.set_high.is_subset(&w.set_low));
        assert!(optimal_value_check(&figure2(), &v, 0.0).is_err());
    }

    #[test]
    fn figure3_indexable() {
        let b = figure3();
        let v = test_indexability(&b).unwrap();
        assert!(v.indexable);
        assert_eq!(v.nested_family, sets(&[&[], &[2], &[2, 3], &[1, 2, 3]]));
        let mid = 0.5 * (v.mpi[0].1 + v.mpi[1].1);
        assert!(optimal_value_check(&b, &v, mid).unwrap());
    }

    #[test]
    fn uncontrollable_only_is_vacuously_indexable() {
        let p = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        let b = crate::bandit::BanditBuilder::new(0.9, vec![1.0, 0.0], p.clone(), p)
            .work(vec![1.0, 1.0], vec![1.0, 1.0])
            .build()
            .unwrap();
        let v = test_indexability(&b).unwrap();
        assert!(v.indexable && v.mpi.is_empty());
    }

    #[test]
    fn size_guard() {
        let b = figure1();
        let opts = OracleOptions { max_controllable: 2 };
        assert!(matches!(region_with(&b, &opts), Err(Error::SizeGuard { .. })));
        assert!(matches!(test_indexability_with(&b, &opts), Err(Error::SizeGuard { .. })));
    }

    #[test]
    fn mpi_equals_chain_slopes() {
        for b in [figure1(), figure3()] {
            let v = test_indexability(&b).unwrap();
            let r = region(&b).unwrap();
            for (k, s) in r.slopes().iter().enumerate() {
                assert!((s - v.mpi[k].1).abs() <= 1e-8 * s.abs().max(1.0));
            }
        }
    }
}
