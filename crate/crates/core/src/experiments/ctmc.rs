//! Controlled continuous-time Markov chains over occupancy vectors.
//!
//! States are vectors `x` with `0 <= x_k <= B_k`, encoded in mixed radix
//! with the first coordinate varying fastest. Every transition changes one
//! coordinate by one, so generators are banded with half-bandwidth equal to
//! the stride of the last coordinate, and all linear solves are banded.

use crate::error::{Error, Result};
use crate::linalg::Banded;

/// Default cap on the number of joint states.
pub const MAX_CHAIN_STATES: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    /// Cost accrued per unit time while this action is in force.
    pub cost: f64,
    /// `(target state, rate)` pairs; self-loops are not allowed.
    pub trans: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
pub struct ControlledChain {
    radix: Vec<usize>,
    strides: Vec<usize>,
    band: usize,
    actions: Vec<Vec<Action>>,
}

impl ControlledChain {
    /// `buffers[k]` is the largest value of coordinate `k`. `actions` is
    /// called once per state with its decoded occupancy vector.
    pub fn build(buffers: &[usize], mut actions: impl FnMut(&[usize]) -> Vec<Action>) -> Result<Self> {
        let radix: Vec<usize> = buffers.iter().map(|b| b + 1).collect();
        let n = radix
            .iter()
            .try_fold(1usize, |acc, &r| acc.checked_mul(r))
            .filter(|&n| n <= MAX_CHAIN_STATES)
            .ok_or(Error::SizeGuard {
                what: "joint states",
                actual: usize::MAX,
                limit: MAX_CHAIN_STATES,
            })?;
        let mut strides = Vec::with_capacity(radix.len());
        let mut s = 1;
        for &r in &radix {
            strides.push(s);
            s *= r;
        }
        let mut chain = Self { radix, strides, band: 0, actions: Vec::with_capacity(n) };
        let mut x = vec![0; buffers.len()];
        for state in 0..n {
            chain.decode_into(state, &mut x);
            let acts = actions(&x);
            if acts.is_empty() {
                return Err(Error::Invalid(format!("state {x:?} has no action")));
            }
            for a in &acts {
                for &(to, rate) in &a.trans {
                    if to >= n || to == state || !(rate >= 0.0) {
                        return Err(Error::Invalid(format!("bad transition {state} -> {to} at rate {rate}")));
                    }
                    chain.band = chain.band.max(to.abs_diff(state));
                }
            }
            chain.actions.push(acts);
        }
        Ok(chain)
    }

    pub fn n_states(&self) -> usize {
        self.actions.len()
    }

    pub fn encode(&self, x: &[usize]) -> usize {
        x.iter().zip(&self.strides).map(|(a, s)| a * s).sum()
    }

    pub fn decode(&self, state: usize) -> Vec<usize> {
        let mut x = vec![0; self.radix.len()];
        self.decode_into(state, &mut x);
        x
    }

    fn decode_into(&self, mut state: usize, x: &mut [usize]) {
        for (xi, &r) in x.iter_mut().zip(&self.radix) {
            *xi = state % r;
            state /= r;
        }
    }

    /// Flat index of `x` with coordinate `k` moved up or down by one.
    pub fn neighbor(&self, x: &[usize], k: usize, up: bool) -> usize {
        let s = self.encode(x);
        if up {
            s + self.strides[k]
        } else {
            s - self.strides[k]
        }
    }

    pub fn actions(&self, state: usize) -> &[Action] {
        &self.actions[state]
    }

    fn check_policy(&self, policy: &[usize]) -> Result<()> {
        if policy.len() != self.n_states() {
            return Err(Error::Invalid("policy length differs from the state count".into()));
        }
        for (s, &a) in policy.iter().enumerate() {
            if a >= self.actions[s].len() {
                return Err(Error::Invalid(format!("action {a} unavailable at state {s}")));
            }
        }
        Ok(())
    }

    /// Largest total outflow rate over all states and actions.
    pub fn max_rate(&self) -> f64 {
        self.actions
            .iter()
            .flatten()
            .map(|a| a.trans.iter().map(|t| t.1).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Stationary distribution under a stationary policy. Requires every state
/// to reach state 0, which makes the reduced balance equations nonsingular;
/// states not reachable from 0 get probability 0.
pub fn stationary(chain: &ControlledChain, policy: &[usize]) -> Result<Vec<f64>> {
    chain.check_policy(policy)?;
    let n = chain.n_states();
    if n == 1 {
        return Ok(vec![1.0]);
    }
    // Balance equations pi Q = 0 with pi_0 = 1, unknowns pi_1.., rows 1..
    let band = chain.band.max(1);
    let mut a = Banded::zeros(n - 1, band, band);
    let mut rhs = vec![0.0; n - 1];
    for (s, &act) in policy.iter().enumerate() {
        let out: f64 = chain.actions[s][act].trans.iter().map(|t| t.1).sum();
        if s > 0 {
            a.add(s - 1, s - 1, -out);
        }
        for &(to, rate) in &chain.actions[s][act].trans {
            if to == 0 {
                continue;
            }
            if s == 0 {
                rhs[to - 1] -= rate;
            } else {
                a.add(to - 1, s - 1, rate);
            }
        }
    }
    let sol = a.solve(rhs)?;
    let mut pi = Vec::with_capacity(n);
    pi.push(1.0);
    pi.extend(sol);
    // Round-off can leave tiny negatives at transient states.
    for p in &mut pi {
        if *p < 0.0 {
            if *p < -1e-8 {
                return Err(Error::Numerical("negative stationary probability; does every state reach 0?".into()));
            }
            *p = 0.0;
        }
    }
    let total: f64 = pi.iter().sum();
    if !total.is_finite() || total <= 0.0 {
        return Err(Error::Numerical("stationary distribution did not normalize".into()));
    }
    pi.iter_mut().for_each(|p| *p /= total);
    Ok(pi)
}

/// Long-run average cost rate under a stationary policy.
pub fn average_cost(chain: &ControlledChain, policy: &[usize]) -> Result<f64> {
    let pi = stationary(chain, policy)?;
    Ok(pi.iter().zip(policy).enumerate().map(|(s, (p, &a))| p * chain.actions[s][a].cost).sum())
}

/// Relative values `h` with `h_0 = 0` solving `c - g + Q h = 0`.
fn relative_values(chain: &ControlledChain, policy: &[usize], g: f64) -> Result<Vec<f64>> {
    let n = chain.n_states();
    if n == 1 {
        return Ok(vec![0.0]);
    }
    let band = chain.band.max(1);
    let mut a = Banded::zeros(n - 1, band, band);
    let mut rhs = vec![0.0; n - 1];
    for s in 1..n {
        let act = &chain.actions[s][policy[s]];
        let out: f64 = act.trans.iter().map(|t| t.1).sum();
        a.add(s - 1, s - 1, -out);
        for &(to, rate) in &act.trans {
            if to > 0 {
                a.add(s - 1, to - 1, rate);
            }
        }
        rhs[s - 1] = g - act.cost;
    }
    let mut h = vec![0.0];
    h.extend(a.solve(rhs)?);
    Ok(h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalSolution {
    /// Optimal average cost rate, the midpoint of the final bounds.
    pub cost: f64,
    pub lower: f64,
    pub upper: f64,
    pub policy: Vec<usize>,
    pub policy_iterations: usize,
    pub value_iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Span of the relative value iteration increments at which to stop.
    pub span_tol: f64,
    pub max_value_iterations: usize,
    pub max_policy_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            span_tol: 1e-9,
            max_value_iterations: 1_000_000,
            max_policy_iterations: 1_000,
        }
    }
}

fn q_value(a: &Action, h: &[f64], here: f64) -> f64 {
    a.cost + a.trans.iter().map(|&(to, rate)| rate * (h[to] - here)).sum::<f64>()
}

/// Minimum average cost. Policy iteration finds a candidate optimal policy
/// and its relative values; relative value iteration on the uniformized
/// chain then runs from those values until the span of its increments is
/// below `span_tol`, which certifies the cost between the reported bounds.
pub fn optimal_cost(chain: &ControlledChain, start: Option<&[usize]>, opts: &SolverOptions) -> Result<OptimalSolution> {
    let n = chain.n_states();
    let mut policy: Vec<usize> = match start {
        Some(p) => {
            chain.check_policy(p)?;
            p.to_vec()
        }
        None => vec![0; n],
    };
    let mut h = vec![0.0; n];
    let mut pi_iter = 0;
    loop {
        pi_iter += 1;
        if pi_iter > opts.max_policy_iterations {
            return Err(Error::NoConvergence { iterations: pi_iter - 1, residual: f64::NAN });
        }
        let g = average_cost(chain, &policy)?;
        h = relative_values(chain, &policy, g)?;
        let scale = h.iter().fold(g.abs(), |m, v| m.max(v.abs())).max(1.0);
        let mut changed = false;
        for s in 0..n {
            let acts = &chain.actions[s];
            let cur = q_value(&acts[policy[s]], &h, h[s]);
            let (best, bv) = acts
                .iter()
                .enumerate()
                .map(|(k, a)| (k, q_value(a, &h, h[s])))
                .fold((policy[s], cur), |acc, (k, v)| if v < acc.1 { (k, v) } else { acc });
            if bv < cur - 1e-12 * scale {
                policy[s] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    // Relative value iteration, uniformized slightly above the largest rate
    // so every state keeps a self-loop.
    let lam = chain.max_rate().max(1e-300) * 1.05;
    let mut vi = 0;
    loop {
        vi += 1;
        let mut next = vec![0.0; n];
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for s in 0..n {
            let (k, v) = chain.actions[s]
                .iter()
                .enumerate()
                .map(|(k, a)| (k, q_value(a, &h, h[s])))
                .fold((usize::MAX, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
            // T h - h, in cost-rate units.
            lo = lo.min(v);
            hi = hi.max(v);
            next[s] = h[s] + v / lam;
            if k != policy[s] && v < q_value(&chain.actions[s][policy[s]], &h, h[s]) {
                policy[s] = k;
            }
        }
        if hi - lo <= opts.span_tol * hi.abs().max(1.0) {
            return Ok(OptimalSolution {
                cost: 0.5 * (lo + hi),
                lower: lo,
                upper: hi,
                policy,
                policy_iterations: pi_iter,
                value_iterations: vi,
            });
        }
        if vi >= opts.max_value_iterations {
            return Err(Error::NoConvergence { iterations: vi, residual: hi - lo });
        }
        let base = next[0];
        next.iter_mut().for_each(|v| *v -= base);
        h = next;
    }
}
