//! Preemptive single-server scheduling of finite-buffer customer classes
//! with holding and rejection costs.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ctmc::{average_cost, optimal_cost, Action, ControlledChain, SolverOptions};
use crate::error::{Error, Result};
use crate::queueing::{bias_mpi, second_order_mpi};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassParams {
    pub lambda: f64,
    pub mu: f64,
    /// Holding cost rate per customer.
    pub c: f64,
    /// Cost per rejected arrival.
    pub r: f64,
    pub buffer: usize,
}

impl ClassParams {
    pub fn rho(&self) -> f64 {
        self.lambda / self.mu
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulingModel {
    pub classes: Vec<ClassParams>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchedulingPolicy {
    /// Largest limiting index; classes without holding cost tie on `r mu`
    /// and then prefer the smaller second-order index.
    Mpi,
    /// Largest `c mu`.
    CMu,
    /// Smallest residual buffer capacity.
    Src,
}

impl SchedulingPolicy {
    pub const ALL: [SchedulingPolicy; 3] = [SchedulingPolicy::Mpi, SchedulingPolicy::CMu, SchedulingPolicy::Src];
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

impl SchedulingModel {
    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() {
            return Err(Error::Invalid("at least one class is required".into()));
        }
        for (k, c) in self.classes.iter().enumerate() {
            if !(c.lambda >= 0.0 && c.mu > 0.0 && c.c >= 0.0 && c.r >= 0.0) || c.buffer == 0 {
                return Err(Error::Invalid(format!("class {} has invalid parameters", k + 1)));
            }
        }
        Ok(())
    }

    fn buffers(&self) -> Vec<usize> {
        self.classes.iter().map(|c| c.buffer).collect()
    }

    /// Class served at occupancy `x`, `None` when the system is empty.
    /// Remaining ties go to the lower class label.
    pub fn serve(&self, policy: SchedulingPolicy, x: &[usize]) -> Option<usize> {
        let busy = (0..x.len()).filter(|&k| x[k] > 0);
        match policy {
            SchedulingPolicy::CMu => {
                busy.fold(None, |best: Option<usize>, k| {
                    let v = self.classes[k].c * self.classes[k].mu;
                    match best {
                        Some(b) if self.classes[b].c * self.classes[b].mu >= v => Some(b),
                        _ => Some(k),
                    }
                })
            }
            SchedulingPolicy::Src => busy.min_by_key(|&k| (self.classes[k].buffer - x[k], k)),
            SchedulingPolicy::Mpi => {
                let mut best: Option<(usize, f64)> = None;
                for k in busy {
                    let v = self.mpi_index(k, x[k]);
                    best = match best {
                        None => Some((k, v)),
                        Some((b, bv)) if same(v, bv) => {
                            if self.tie_prefers(k, x[k], b, x[b]) {
                                Some((k, v))
                            } else {
                                Some((b, bv))
                            }
                        }
                        Some((_, bv)) if v > bv => Some((k, v)),
                        keep => keep,
                    };
                }
                best.map(|(k, _)| k)
            }
        }
    }

    /// Limiting index of class `k` with `i >= 1` customers present.
    pub fn mpi_index(&self, k: usize, i: usize) -> f64 {
        let c = &self.classes[k];
        bias_mpi(c.c, c.r, c.mu, c.rho(), c.buffer, i).expect("occupancy within the buffer")
    }

    fn tie_prefers(&self, k: usize, xk: usize, b: usize, xb: usize) -> bool {
        let (ck, cb) = (&self.classes[k], &self.classes[b]);
        if ck.c == 0.0 && cb.c == 0.0 {
            let gk = second_order_mpi(ck.r, ck.rho(), ck.buffer - xk);
            let gb = second_order_mpi(cb.r, cb.rho(), cb.buffer - xb);
            return gk < gb && !same(gk, gb);
        }
        false
    }

    /// The controlled chain: one action per nonempty class (serve it), or a
    /// single idling action when empty. The cost rate is holding cost plus
    /// rejection cost rate at full buffers.
    pub fn chain(&self) -> Result<ControlledChain> {
        self.validate()?;
        let buffers = self.buffers();
        let strides: Vec<usize> = buffers
            .iter()
            .scan(1, |s, &b| {
                let cur = *s;
                *s *= b + 1;
                Some(cur)
            })
            .collect();
        ControlledChain::build(&buffers, |x| {
            let here: usize = x.iter().zip(&strides).map(|(a, s)| a * s).sum();
            let mut cost = 0.0;
            let mut arrivals = Vec::new();
            for (k, c) in self.classes.iter().enumerate() {
                cost += c.c * x[k] as f64;
                if x[k] == c.buffer {
                    cost += c.r * c.lambda;
                } else if c.lambda > 0.0 {
                    arrivals.push((here + strides[k], c.lambda));
                }
            }
            let busy: Vec<usize> = (0..x.len()).filter(|&k| x[k] > 0).collect();
            if busy.is_empty() {
                return vec![Action { cost, trans: arrivals }];
            }
            busy.into_iter()
                .map(|k| {
                    let mut trans = arrivals.clone();
                    trans.push((here - strides[k], self.classes[k].mu));
                    Action { cost, trans }
                })
                .collect()
        })
    }

    pub fn policy_actions(&self, chain: &ControlledChain, policy: SchedulingPolicy) -> Vec<usize> {
        (0..chain.n_states())
            .map(|s| {
                let x = chain.decode(s);
                match self.serve(policy, &x) {
                    Some(k) => (0..k).filter(|&j| x[j] > 0).count(),
                    None => 0,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchedulingRow {
    pub instance: usize,
    pub optimal: f64,
    pub mpi: f64,
    pub cmu: f64,
    pub src: f64,
    pub gap_mpi: f64,
    pub gap_cmu: f64,
    pub gap_src: f64,
}

pub fn scheduling_point(instance: usize, model: &SchedulingModel) -> Result<SchedulingRow> {
    let chain = model.chain()?;
    let mut costs = [0.0; 3];
    for (c, p) in costs.iter_mut().zip(SchedulingPolicy::ALL) {
        *c = average_cost(&chain, &model.policy_actions(&chain, p))?;
    }
    let start = model.policy_actions(&chain, SchedulingPolicy::Mpi);
    let opt = optimal_cost(&chain, Some(&start), &SolverOptions::default())?;
    let gap = |v: f64| if opt.cost > 0.0 { (v - opt.cost) / opt.cost } else { 0.0 };
    Ok(SchedulingRow {
        instance,
        optimal: opt.cost,
        mpi: costs[0],
        cmu: costs[1],
        src: costs[2],
        gap_mpi: gap(costs[0]),
        gap_cmu: gap(costs[1]),
        gap_src: gap(costs[2]),
    })
}

/// A random two-class instance where both classes carry holding costs:
/// rates and costs uniform on fixed ranges, total load uniform on
/// `[0.5, 1.2]`, buffers uniform on `2..=max_buffer`.
pub fn random_delay_sensitive(rng: &mut impl Rng, max_buffer: usize) -> SchedulingModel {
    let load: f64 = rng.random_range(0.5..1.2);
    let share: f64 = rng.random_range(0.2..0.8);
    let classes = [share, 1.0 - share]
        .into_iter()
        .map(|frac| {
            let mu: f64 = rng.random_range(0.5..2.0);
            ClassParams {
                lambda: frac * load * mu,
                mu,
                c: rng.random_range(0.5..2.0),
                r: rng.random_range(0.0..2.0),
                buffer: rng.random_range(2..=max_buffer.max(2)),
            }
        })
        .collect();
    SchedulingModel { classes }
}
