//! Routing a Poisson stream to parallel finite-buffer M/M/1 queues.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ctmc::{average_cost, optimal_cost, stationary, Action, ControlledChain, SolverOptions};
use crate::error::{Error, Result};
use crate::queueing::admission_index;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingModel {
    pub lambda: f64,
    pub mus: Vec<f64>,
    pub buffers: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoutingPolicy {
    /// Nonfull queue of smallest admission index.
    Mpi,
    /// Shortest nonfull queue, ties to the faster server.
    Jsq,
    /// Nonfull queue of smallest expected sojourn `(x_k + 1) / mu_k`.
    Ior,
}

impl RoutingPolicy {
    pub const ALL: [RoutingPolicy; 3] = [RoutingPolicy::Mpi, RoutingPolicy::Jsq, RoutingPolicy::Ior];
}

impl RoutingModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || self.mus.iter().any(|&m| !(m > 0.0)) {
            return Err(Error::Invalid("rates must be positive".into()));
        }
        if self.mus.len() != self.buffers.len() || self.mus.is_empty() {
            return Err(Error::Invalid("one buffer per queue is required".into()));
        }
        if self.buffers.contains(&0) {
            return Err(Error::Invalid("buffers must hold at least one customer".into()));
        }
        Ok(())
    }

    fn nonfull(&self, x: &[usize]) -> Vec<usize> {
        (0..x.len()).filter(|&k| x[k] < self.buffers[k]).collect()
    }

    /// Destination of an arrival at occupancy `x`, `None` if all are full.
    pub fn route(&self, policy: RoutingPolicy, x: &[usize]) -> Option<usize> {
        let open = self.nonfull(x);
        let key = |k: usize| -> (f64, f64) {
            match policy {
                RoutingPolicy::Mpi => (admission_index(1.0, self.mus[k], self.lambda / self.mus[k], x[k]), 0.0),
                RoutingPolicy::Jsq => (x[k] as f64, -self.mus[k]),
                RoutingPolicy::Ior => ((x[k] + 1) as f64 / self.mus[k], 0.0),
            }
        };
        open.into_iter()
            .map(|k| (k, key(k)))
            .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0).then(a.1 .1.total_cmp(&b.1 .1)).then(a.0.cmp(&b.0)))
            .map(|(k, _)| k)
    }

    /// The controlled chain: one action per nonfull destination, in queue
    /// order, and a single rejecting action when every queue is full. The
    /// cost rate is the number in system.
    pub fn chain(&self) -> Result<ControlledChain> {
        self.validate()?;
        let strides: Vec<usize> = self
            .buffers
            .iter()
            .scan(1, |s, &b| {
                let cur = *s;
                *s *= b + 1;
                Some(cur)
            })
            .collect();
        ControlledChain::build(&self.buffers, |x| {
            let here: usize = x.iter().zip(&strides).map(|(a, s)| a * s).sum();
            let cost = x.iter().sum::<usize>() as f64;
            let mut departures = Vec::new();
            for k in 0..x.len() {
                if x[k] > 0 {
                    departures.push((here - strides[k], self.mus[k]));
                }
            }
            let open = self.nonfull(x);
            if open.is_empty() || self.lambda == 0.0 {
                return vec![Action { cost, trans: departures }];
            }
            open.into_iter()
                .map(|k| {
                    let mut trans = departures.clone();
                    trans.push((here + strides[k], self.lambda));
                    Action { cost, trans }
                })
                .collect()
        })
    }

    /// Action indices of `policy` in [`RoutingModel::chain`].
    pub fn policy_actions(&self, chain: &ControlledChain, policy: RoutingPolicy) -> Vec<usize> {
        (0..chain.n_states())
            .map(|s| {
                let x = chain.decode(s);
                match self.route(policy, &x) {
                    Some(k) if self.lambda > 0.0 => self.nonfull(&x).iter().position(|&j| j == k).unwrap(),
                    _ => 0,
                }
            })
            .collect()
    }
}

/// Long-run averages of one routing policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoutingPerformance {
    pub number_in_system: f64,
    /// Admitted arrival rate.
    pub throughput: f64,
    /// Mean sojourn time of admitted customers, by Little's law.
    pub sojourn: f64,
}

pub fn evaluate_routing(model: &RoutingModel, chain: &ControlledChain, actions: &[usize]) -> Result<RoutingPerformance> {
    let pi = stationary(chain, actions)?;
    let full = chain.encode(&model.buffers);
    let number_in_system = average_cost(chain, actions)?;
    let throughput = model.lambda * (1.0 - pi[full]);
    Ok(RoutingPerformance {
        number_in_system,
        throughput,
        sojourn: if throughput > 0.0 { number_in_system / throughput } else { 0.0 },
    })
}

/// One grid point of a two-queue sweep. Costs are average numbers in
/// system; gaps are relative to the optimum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoutingRow {
    pub mu1: f64,
    pub mu2: f64,
    pub rho: f64,
    pub optimal: f64,
    pub mpi: f64,
    pub jsq: f64,
    pub ior: f64,
    pub gap_mpi: f64,
    pub gap_jsq: f64,
    pub gap_ior: f64,
    /// `(jsq - mpi) / jsq`.
    pub gain_vs_jsq: f64,
    /// `(ior - mpi) / ior`; negative where the MPI policy is worse.
    pub gain_vs_ior: f64,
    pub sojourn_mpi: f64,
    pub sojourn_jsq: f64,
    pub sojourn_ior: f64,
}

pub fn routing_point(model: &RoutingModel) -> Result<RoutingRow> {
    if model.mus.len() != 2 {
        return Err(Error::Invalid("grid rows describe two queues".into()));
    }
    let chain = model.chain()?;
    let mut perf = Vec::with_capacity(3);
    for p in RoutingPolicy::ALL {
        perf.push(evaluate_routing(model, &chain, &model.policy_actions(&chain, p))?);
    }
    let start = model.policy_actions(&chain, RoutingPolicy::Mpi);
    let opt = optimal_cost(&chain, Some(&start), &SolverOptions::default())?;
    let (m, j, i) = (perf[0].number_in_system, perf[1].number_in_system, perf[2].number_in_system);
    let gap = |v: f64| if opt.cost > 0.0 { (v - opt.cost) / opt.cost } else { 0.0 };
    let rel = |base: f64| if base > 0.0 { (base - m) / base } else { 0.0 };
    Ok(RoutingRow {
        mu1: model.mus[0],
        mu2: model.mus[1],
        rho: model.lambda / (model.mus[0] + model.mus[1]),
        optimal: opt.cost,
        mpi: m,
        jsq: j,
        ior: i,
        gap_mpi: gap(m),
        gap_jsq: gap(j),
        gap_ior: gap(i),
        gain_vs_jsq: rel(j),
        gain_vs_ior: rel(i),
        sojourn_mpi: perf[0].sojourn,
        sojourn_jsq: perf[1].sojourn,
        sojourn_ior: perf[2].sojourn,
    })
}

/// Grid of service-rate pairs on multiples of `width` with total load
/// `lambda / (mu1 + mu2)` strictly inside `(rho_min, rho_max)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingGrid {
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    pub width: f64,
    #[serde(default = "default_rho_min")]
    pub rho_min: f64,
    #[serde(default = "default_rho_max")]
    pub rho_max: f64,
    #[serde(default = "default_buffers")]
    pub buffers: [usize; 2],
}

fn default_lambda() -> f64 {
    1.0
}
fn default_rho_min() -> f64 {
    0.5
}
fn default_rho_max() -> f64 {
    1.0
}
fn default_buffers() -> [usize; 2] {
    [30, 30]
}

impl RoutingGrid {
    pub fn points(&self) -> Vec<(f64, f64)> {
        if !(self.width > 0.0) || !(self.rho_min > 0.0) || self.rho_max <= self.rho_min {
            return Vec::new();
        }
        let lo = self.lambda / self.rho_max;
        let hi = self.lambda / self.rho_min;
        let top = (hi / self.width).ceil() as usize;
        let eps = 1e-9 * self.width;
        let mut out = Vec::new();
        for a in 1..top {
            for b in 1..top {
                let total = (a + b) as f64 * self.width;
                if total > lo + eps && total < hi - eps {
                    out.push((a as f64 * self.width, b as f64 * self.width));
                }
            }
        }
        out
    }
}

/// Evaluates every grid point in parallel; rows keep the grid order.
pub fn routing_sweep(grid: &RoutingGrid) -> Result<Vec<RoutingRow>> {
    grid.points()
        .into_par_iter()
        .map(|(mu1, mu2)| {
            routing_point(&RoutingModel {
                lambda: grid.lambda,
                mus: vec![mu1, mu2],
                buffers: grid.buffers.to_vec(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_mpi_is_jsq() {
        let m = RoutingModel { lambda: 1.0, mus: vec![0.7, 0.7], buffers: vec![6, 6] };
        for a in 0..=6 {
            for b in 0..=6 {
                let x = [a, b];
                assert_eq!(m.route(RoutingPolicy::Mpi, &x), m.route(RoutingPolicy::Jsq, &x), "{x:?}");
            }
        }
    }

    #[test]
    fn full_queues() {
        let m = RoutingModel { lambda: 1.0, mus: vec![0.4, 0.9], buffers: vec![3, 3] };
        for p in RoutingPolicy::ALL {
            assert_eq!(m.route(p, &[3, 1]), Some(1));
            assert_eq!(m.route(p, &[0, 3]), Some(0));
            assert_eq!(m.route(p, &[3, 3]), None);
        }
    }

    #[test]
    fn single_slot_queues_match_hand_chain() {
        // States (0,0), (1,0), (0,1), (1,1); JSQ sends a lone arrival to the
        // faster queue 2.
        let (l, m1, m2) = (1.0, 0.5, 0.8);
        let m = RoutingModel { lambda: l, mus: vec![m1, m2], buffers: vec![1, 1] };
        let chain = m.chain().unwrap();
        let perf = evaluate_routing(&m, &chain, &m.policy_actions(&chain, RoutingPolicy::Jsq)).unwrap();
        // Balance equations solved by hand for the 4-state chain.
        let q = crate::linalg::Matrix::from_rows(&[
            vec![-l, 0.0, l, 0.0],
            vec![m1, -(m1 + l), 0.0, l],
            vec![m2, 0.0, -(m2 + l), l],
            vec![0.0, m2, m1, -(m1 + m2)],
        ]);
        let mut a = crate::linalg::Matrix::zeros(4);
        for i in 0..4 {
            for j in 0..4 {
                a[(j, i)] = q[(i, j)];
            }
        }
        for j in 0..4 {
            a[(0, j)] = 1.0;
        }
        let pi = crate::linalg::Lu::factor(a).unwrap().solve(&[1.0, 0.0, 0.0, 0.0]);
        let mean = pi[1] + pi[2] + 2.0 * pi[3];
        assert!((perf.number_in_system - mean).abs() < 1e-12);
        assert!((perf.throughput - l * (1.0 - pi[3])).abs() < 1e-12);
    }

    #[test]
    fn symmetric_optimum_equals_jsq() {
        let m = RoutingModel { lambda: 1.0, mus: vec![0.6, 0.6], buffers: vec![8, 8] };
        let row = routing_point(&m).unwrap();
        assert!((row.optimal - row.jsq).abs() < 1e-8, "{row:?}");
    }

    #[test]
    fn grid_respects_load_window() {
        let g = RoutingGrid { lambda: 1.0, width: 0.25, rho_min: 0.5, rho_max: 1.0, buffers: [2, 2] };
        let pts = g.points();
        assert!(pts.iter().all(|&(a, b)| a + b > 1.0 && a + b < 2.0));
        assert_eq!(pts.len(), 4 + 5 + 6);
        let empty = RoutingGrid { width: 0.0, ..g };
        assert!(empty.points().is_empty());
    }
}
