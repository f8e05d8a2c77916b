//! Small dense and banded linear solvers.
//!
//! Policy evaluation only ever needs `(I - beta P) x = b` for a handful of
//! right-hand sides, so a row-major LU with partial pivoting is all we need.
//! The banded variant serves the CTMC solvers, whose generators couple each
//! state only to states a bounded distance away in mixed-radix order.

use crate::error::{Error, Result};

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "matrix must be square");
            m.data[i * n..(i + 1) * n].copy_from_slice(row);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    /// `self * x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| dot(self.row(i), x)).collect()
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// LU factorization with partial (row) pivoting.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(mut a: Matrix) -> Result<Self> {
        let n = a.n;
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.data.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, a[(i, k)].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot <= f64::EPSILON * scale * n as f64 {
                return Err(Error::Numerical(format!("singular matrix at column {k}")));
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    a.data.swap(p * n + j, k * n + j);
                }
            }
            let d = a[(k, k)];
            for i in k + 1..n {
                let l = a[(i, k)] / d;
                a[(i, k)] = l;
                if l != 0.0 {
                    for j in k + 1..n {
                        a.data[i * n + j] -= l * a.data[k * n + j];
                    }
                }
            }
        }
        Ok(Self { lu: a, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let s: f64 = (0..i).map(|j| row[j] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: f64 = (i + 1..n).map(|j| row[j] * x[j]).sum();
            x[i] = (x[i] - s) / row[i];
        }
        x
    }
}

/// Banded matrix stored by rows, with `lower` sub- and `upper`
/// super-diagonals. Elimination runs without pivoting, which is stable for
/// the diagonally dominant systems produced by irreducible generators.
#[derive(Debug, Clone)]
pub struct Banded {
    n: usize,
    lower: usize,
    upper: usize,
    // Row i holds columns i - lower ..= i + upper + lower (room for fill).
    width: usize,
    data: Vec<f64>,
}

impl Banded {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        // Without pivoting there is no fill beyond the band, but keep the
        // layout simple: columns i-lower ..= i+upper.
        let width = lower + upper + 1;
        Self {
            n,
            lower,
            upper,
            width,
            data: vec![0.0; n * width],
        }
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if j + self.lower < i || j > i + self.upper {
            None
        } else {
            Some(i * self.width + (j + self.lower - i))
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self
            .slot(i, j)
            .unwrap_or_else(|| panic!("entry ({i},{j}) outside band"));
        self.data[s] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    /// Solves `A x = b` in place by banded Gaussian elimination.
    pub fn solve(mut self, mut b: Vec<f64>) -> Result<Vec<f64>> {
        let n = self.n;
        for k in 0..n {
            let d = self.get(k, k);
            if d.abs() < 1e-300 {
                return Err(Error::Numerical(format!("zero pivot at row {k}")));
            }
            let last_row = (k + self.lower).min(n - 1);
            let last_col = (k + self.upper).min(n - 1);
            for i in k + 1..=last_row {
                let Some(sik) = self.slot(i, k) else { continue };
                let l = self.data[sik] / d;
                if l == 0.0 {
                    continue;
                }
                self.data[sik] = 0.0;
                for j in k + 1..=last_col {
                    let akj = self.get(k, j);
                    if akj != 0.0 {
                        let s = self.slot(i, j).expect("fill stays inside band");
                        self.data[s] -= l * akj;
                    }
                }
                b[i] -= l * b[k];
            }
        }
        for i in (0..n).rev() {
            let last_col = (i + self.upper).min(n - 1);
            let mut s = b[i];
            for j in i + 1..=last_col {
                s -= self.get(i, j) * b[j];
            }
            b[i] = s / self.get(i, i);
        }
        Ok(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_pivoting_system() {
        let a = Matrix::from_rows(&[
            vec![0.0, 2.0, 1.0],
            vec![1.0, 1.0, 0.0],
            vec![2.0, 0.0, 3.0],
        ]);
        let x = [1.0, -2.0, 0.5];
        let b = a.mul_vec(&x);
        let got = Lu::factor(a).unwrap().solve(&b);
        for (g, e) in got.iter().zip(x) {
            assert!((g - e).abs() < 1e-12);
        }
    }

    #[test]
    fn lu_rejects_singular() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(Lu::factor(a), Err(Error::Numerical(_))));
    }

    #[test]
    fn banded_matches_dense() {
        let n = 7;
        let mut dense = Matrix::zeros(n);
        let mut band = Banded::zeros(n, 2, 1);
        for i in 0..n {
            for j in i.saturating_sub(2)..=(i + 1).min(n - 1) {
                let v = if i == j { 5.0 + i as f64 } else { -((i + 2 * j) as f64) / 10.0 };
                dense[(i, j)] = v;
                band.add(i, j, v);
            }
        }
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let want = Lu::factor(dense).unwrap().solve(&b);
        let got = band.solve(b).unwrap();
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-12);
        }
    }
}
