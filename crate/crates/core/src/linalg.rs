//! Dense LU with a 1-norm condition estimate.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::prelude::*;

pub(crate) struct DenseLu {
    lu: PartialPivLu<f64>,
    n: usize,
    norm1: f64,
}

impl DenseLu {
    pub fn factor(a: &Mat<f64>) -> Self {
        let n = a.nrows();
        let norm1 = (0..n)
            .map(|j| (0..n).map(|i| a[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max);
        DenseLu {
            lu: a.partial_piv_lu(),
            n,
            norm1,
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let rhs = Col::<f64>::from_fn(self.n, |i| b[i]);
        let x = self.lu.solve(&rhs);
        (0..self.n).map(|i| x[i]).collect()
    }

    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let rhs = Col::<f64>::from_fn(self.n, |i| b[i]);
        let x = self.lu.solve_transpose(&rhs);
        (0..self.n).map(|i| x[i]).collect()
    }

    /// `‖A‖₁ · est(‖A⁻¹‖₁)` by Hager's method with Higham's extra test vector.
    pub fn condition_estimate(&self) -> f64 {
        let n = self.n;
        if n == 0 {
            return 1.0;
        }
        let norm1 = |v: &[f64]| v.iter().map(|x| x.abs()).sum::<f64>();
        let mut x = vec![1.0 / n as f64; n];
        let mut estimate = 0.0f64;
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let y = self.solve(&x);
            estimate = estimate.max(norm1(&y));
            let xi: Vec<f64> = y.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect();
            let z = self.solve_transpose(&xi);
            let (j, zmax) = z.iter().enumerate().fold(
                (0, 0.0f64),
                |(bj, bm), (i, v)| if v.abs() > bm { (i, v.abs()) } else { (bj, bm) },
            );
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            if zmax <= ztx || j == last_j {
                break;
            }
            last_j = j;
            x = vec![0.0; n];
            x[j] = 1.0;
        }
        let alt: Vec<f64> = (0..n)
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                sign * (1.0 + i as f64 / (n.max(2) - 1) as f64)
            })
            .collect();
        let y = self.solve(&alt);
        estimate = estimate.max(2.0 * norm1(&y) / (3.0 * n as f64));
        if !estimate.is_finite() {
            return f64::INFINITY;
        }
        self.norm1 * estimate
    }
}
