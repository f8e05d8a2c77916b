//! Closed-form marginal productivity indices for single-queue control
//! problems: M/M/1 admission control, make-to-stock production and
//! finite-buffer scheduling classes.

use crate::error::{Error, Result};

/// `|rho - 1|` at or below this uses the `rho = 1` branch.
pub const RHO_BRANCH_TOL: f64 = 1e-9;
/// Tails below this end the expectation in [`mts_index_general`].
pub const TAIL_CUTOFF: f64 = 1e-12;
const MAX_TAIL_TERMS: usize = 10_000_000;

/// M/M/1 parameters shared by the index formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mm1Params {
    pub lambda: f64,
    pub mu: f64,
    /// Holding cost rate per customer.
    pub c: f64,
    /// Rejection cost per customer.
    pub r: f64,
}

impl Mm1Params {
    pub fn rho(&self) -> f64 {
        self.lambda / self.mu
    }

    pub fn admission_index(&self, j: usize) -> f64 {
        admission_index(self.c, self.mu, self.rho(), j)
    }
}

fn unit_rho(rho: f64) -> bool {
    (rho - 1.0).abs() <= RHO_BRANCH_TOL
}

/// Admission-control index at `j` customers in system under linear holding
/// cost `c`: `(c/mu) * sum_{i=1}^{j+1} (1 + rho + ... + rho^{i-1})`.
/// Arrivals are rejected where the index exceeds the rejection wage.
pub fn admission_index(c: f64, mu: f64, rho: f64, j: usize) -> f64 {
    let j = j as f64;
    if unit_rho(rho) {
        c / mu * (j + 1.0) * (j + 2.0) / 2.0
    } else {
        let d = rho - 1.0;
        c / mu * ((rho.powf(j + 2.0) - 1.0) / (d * d) - (j + 2.0) / d)
    }
}

/// Term-by-term evaluation of the admission index's defining sum.
pub fn admission_index_sum(c: f64, mu: f64, rho: f64, j: usize) -> f64 {
    let mut total = 0.0;
    let mut inner = 0.0;
    let mut power = 1.0;
    for _ in 0..=j {
        inner += power;
        power *= rho;
        total += inner;
    }
    c / mu * total
}

/// Make-to-stock index `mu * E[dh(X + i)]`, where `X` has complementary CDF
/// `tail(k) = P{X >= k}` over the nonnegative integers and `dh(m)` is the
/// cost-rate increment `h_m - h_{m-1}`. Evaluated by summation by parts,
/// stopping once the tail drops below [`TAIL_CUTOFF`].
pub fn mts_index_general(dh: impl Fn(i64) -> f64, tail: impl Fn(u64) -> f64, mu: f64, i: i64) -> Result<f64> {
    let t0 = tail(0);
    if (t0 - 1.0).abs() > 1e-12 {
        return Err(Error::Invalid(format!("tail at 0 must be 1, got {t0}")));
    }
    let mut expect = dh(i);
    let mut prev = t0;
    for k in 1..=MAX_TAIL_TERMS as u64 {
        let t = tail(k);
        if !(0.0..=1.0).contains(&t) || t > prev {
            return Err(Error::Invalid(format!("tail is not a nonincreasing probability at {k}")));
        }
        if t < TAIL_CUTOFF {
            return Ok(mu * expect);
        }
        let ki = i + k as i64;
        expect += t * (dh(ki) - dh(ki - 1));
        prev = t;
    }
    Err(Error::NoConvergence {
        iterations: MAX_TAIL_TERMS,
        residual: prev,
    })
}

/// Cost-rate increments of the linear backorder/stock cost `h_m = b m` for
/// `m >= 1`, `-h m` otherwise.
pub fn linear_cost_increment(b: f64, h: f64) -> impl Fn(i64) -> f64 {
    move |m| if m >= 1 { b } else { -h }
}

/// Number-in-system tail of a stable M/M/1 queue, `P{X >= k} = rho^k`.
pub fn geometric_tail(rho: f64) -> impl Fn(u64) -> f64 {
    move |k| rho.powi(k.min(i32::MAX as u64) as i32)
}

/// Make-to-stock index under linear costs at net backorder level `i`, with
/// the M/M/1 number-in-system tail.
pub fn mts_index_linear(b: f64, h: f64, mu: f64, rho: f64, i: i64) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Invalid(format!("geometric tail needs 0 < rho < 1, got {rho}")));
    }
    Ok(mts_index_linear_with(b, h, mu, geometric_tail(rho), i))
}

/// As [`mts_index_linear`] with an arbitrary tail `P{X >= k}`.
pub fn mts_index_linear_with(b: f64, h: f64, mu: f64, tail: impl Fn(u64) -> f64, i: i64) -> f64 {
    if i >= 1 {
        b * mu
    } else {
        ((b + h) * tail((1 - i) as u64) - h) * mu
    }
}

/// Limiting myopic index `mu * dh(i)` under linear costs.
pub fn mts_index_myopic(b: f64, h: f64, mu: f64, i: i64) -> f64 {
    if i >= 1 {
        b * mu
    } else {
        -h * mu
    }
}

/// Second-order index of a pure loss-sensitive class with `i` empty buffer
/// spaces. Smaller values get higher priority.
pub fn second_order_mpi(r: f64, rho: f64, i: usize) -> f64 {
    let x = i as f64;
    if unit_rho(rho) {
        r * (x + 1.0) * (x + 2.0) / 2.0
    } else {
        let d = 1.0 - rho;
        r / rho * (x + 1.0 + (rho.powi(-(i as i32)) - d * x - 1.0) / (d * d))
    }
}

/// Limiting index of a delay-sensitive class with buffer `n` and `i`
/// customers present. Larger values get higher priority.
pub fn bias_mpi(c: f64, r: f64, mu: f64, rho: f64, n: usize, i: usize) -> Result<f64> {
    if i < 1 || i > n {
        return Err(Error::Invalid(format!("number in system {i} outside 1..={n}")));
    }
    let (nf, x) = (n as f64, i as f64);
    let holding = if unit_rho(rho) {
        c * (nf - (x - 1.0) / 2.0)
    } else {
        let p = rho.powi(i as i32);
        c / rho * (nf - rho / (1.0 - rho) + x * p / (1.0 - p))
    };
    Ok(holding + r * mu)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sensitivity {
    Loss,
    Delay,
}

/// A class is loss-sensitive when `alpha r >= c` for discount rate `alpha`.
pub fn loss_sensitivity_class(c: f64, r: f64, alpha: f64) -> Sensitivity {
    if alpha * r >= c {
        Sensitivity::Loss
    } else {
        Sensitivity::Delay
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn admission_examples() {
        assert!((admission_index(3.0, 2.0, 0.7, 0) - 1.5).abs() < 1e-12);
        assert!((admission_index(2.0, 1.0, 0.5, 1) - 5.0).abs() < 1e-12);
        assert_eq!(admission_index(1.0, 1.0, 1.0, 3), 10.0);
        assert_eq!(admission_index_sum(1.0, 1.0, 1.0, 3), 10.0);
    }

    #[test]
    fn admission_closed_form_matches_sum_on_grid() {
        for r in 1..=30 {
            let rho = r as f64 / 10.0;
            for j in 0..=50 {
                let (a, b) = (admission_index(1.3, 0.7, rho, j), admission_index_sum(1.3, 0.7, rho, j));
                assert!(rel(a, b) < 1e-10, "rho={rho} j={j}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn unit_rho_branches_are_continuous() {
        for eps in [1e-4, -1e-4] {
            let rho = 1.0 + eps;
            for j in 0..10 {
                assert!(rel(admission_index(1.0, 1.0, rho, j), admission_index(1.0, 1.0, 1.0, j)) < 1e-2);
            }
        }
        // Symmetric extrapolation cancels the first-order term.
        let sym = |f: &dyn Fn(f64) -> f64| (f(1.0 + 1e-4) + f(1.0 - 1e-4)) / 2.0;
        assert!((sym(&|p| second_order_mpi(1.0, p, 2)) - 6.0).abs() < 1e-6);
        assert!((sym(&|p| admission_index(1.0, 1.0, p, 7)) - 36.0).abs() < 1e-5);
        assert!((sym(&|p| bias_mpi(1.0, 0.5, 2.0, p, 5, 3).unwrap()) - 5.0).abs() < 1e-6);
    }

    #[test]
    fn mts_examples() {
        assert_eq!(mts_index_linear(3.0, 1.0, 2.0, 0.5, 4).unwrap(), 6.0);
        assert_eq!(mts_index_linear(1.0, 1.0, 2.0, 0.5, 0).unwrap(), 0.0);
        assert!((mts_index_linear(1.0, 2.0, 1.0, 0.5, -60).unwrap() + 2.0).abs() < 1e-12);
        assert!(mts_index_linear(1.0, 1.0, 1.0, 1.0, 0).is_err());
        assert_eq!(mts_index_myopic(2.0, 1.0, 3.0, 1), 6.0);
        assert_eq!(mts_index_myopic(2.0, 1.0, 3.0, 0), -3.0);
        assert_eq!(mts_index_myopic(2.0, 2.0, 3.0, -1), -6.0);
    }

    #[test]
    fn mts_general_special_cases() {
        let point_mass = |k: u64| if k == 0 { 1.0 } else { 0.0 };
        assert_eq!(mts_index_general(|m| m as f64, point_mass, 2.0, 5).unwrap(), 10.0);
        let v = mts_index_general(|_| 0.3, geometric_tail(0.9), 2.0, -4).unwrap();
        assert!((v - 0.6).abs() < 1e-12);
        assert!(mts_index_general(|_| 1.0, |k| if k == 3 { 0.9 } else { 0.5f64.powi(k as i32) }, 1.0, 0).is_err());
    }

    #[test]
    fn gamma_and_bias_examples() {
        assert_eq!(second_order_mpi(1.0, 1.0, 0), 1.0);
        assert!((second_order_mpi(2.0, 0.5, 1) - 16.0).abs() < 1e-12);
        assert_eq!(bias_mpi(1.0, 0.0, 1.0, 1.0, 5, 3).unwrap(), 4.0);
        assert_eq!(bias_mpi(2.0, 3.0, 0.5, 1.0, 4, 1).unwrap(), 2.0 * 4.0 + 1.5);
        assert_eq!(bias_mpi(0.0, 3.0, 0.5, 0.3, 4, 2).unwrap(), 1.5);
        assert!(bias_mpi(1.0, 1.0, 1.0, 0.5, 3, 0).is_err());
        assert!(bias_mpi(1.0, 1.0, 1.0, 0.5, 3, 4).is_err());
    }

    #[test]
    fn loss_classes() {
        assert_eq!(loss_sensitivity_class(1.0, 100.0, 0.1), Sensitivity::Loss);
        assert_eq!(loss_sensitivity_class(1.0, 1.0, 0.1), Sensitivity::Delay);
        assert_eq!(loss_sensitivity_class(0.0, 1.0, 1e-6), Sensitivity::Loss);
    }

    proptest! {
        #[test]
        fn admission_nondecreasing(rho in 0.05..4.0f64, j in 0usize..60) {
            prop_assert!(admission_index(1.0, 1.0, rho, j + 1) >= admission_index(1.0, 1.0, rho, j));
        }

        #[test]
        fn mts_linear_is_monotone_capped_and_matches_general(
            b in 0.0..5.0f64, h in 0.0..5.0f64, mu in 0.1..3.0f64, rho in 0.05..0.95f64, i in -30i64..5,
        ) {
            let v = mts_index_linear(b, h, mu, rho, i).unwrap();
            prop_assert!(v <= b * mu + 1e-12);
            prop_assert!(mts_index_linear(b, h, mu, rho, i + 1).unwrap() >= v - 1e-12);
            let g = mts_index_general(linear_cost_increment(b, h), geometric_tail(rho), mu, i).unwrap();
            prop_assert!((g - v).abs() <= 1e-12 * (b + h + 1.0) * mu);
        }

        #[test]
        fn bias_nonincreasing_gamma_increasing(
            c in 0.01..5.0f64, r in 0.0..5.0f64, mu in 0.1..3.0f64, rho in 0.05..3.0f64, n in 2usize..30,
        ) {
            for i in 1..n {
                let (a, b) = (bias_mpi(c, r, mu, rho, n, i).unwrap(), bias_mpi(c, r, mu, rho, n, i + 1).unwrap());
                prop_assert!(b <= a + 1e-9 * a.abs().max(1.0));
            }
            for i in 0..n {
                prop_assert!(second_order_mpi(r.max(0.01), rho, i + 1) > second_order_mpi(r.max(0.01), rho, i));
            }
        }
    }
}
