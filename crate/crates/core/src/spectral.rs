//! Even zero-mean cosine series, collocation grids, Fourier multipliers and
//! dyadic block norms.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `φ(x) = Σ_{k=1}^{M} a_k cos(kx)`; `coeffs[k-1] = a_k`.
///
/// With `antisymmetric` set every even-index coefficient is held at zero, so
/// `φ(x + π) = -φ(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosineSeries {
    coeffs: Vec<f64>,
    antisymmetric: bool,
}

impl CosineSeries {
    pub fn new(coeffs: Vec<f64>) -> Self {
        CosineSeries {
            coeffs,
            antisymmetric: false,
        }
    }

    /// Odd-frequency series; even-index entries of `coeffs` are zeroed.
    pub fn new_antisymmetric(coeffs: Vec<f64>) -> Self {
        let mut s = CosineSeries {
            coeffs,
            antisymmetric: true,
        };
        s.project_odd();
        s
    }

    pub fn zeros(m: usize) -> Self {
        CosineSeries::new(vec![0.0; m])
    }

    /// `amplitude · cos(k·)` truncated at `m` modes.
    pub fn mode(k: usize, amplitude: f64, m: usize) -> Self {
        let mut s = CosineSeries::zeros(m);
        s.set(k, amplitude);
        s
    }

    /// Number of modes `M`.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_antisymmetric(&self) -> bool {
        self.antisymmetric
    }

    /// Sets the flag and zeroes the even modes.
    pub fn with_antisymmetry(mut self, antisymmetric: bool) -> Self {
        self.antisymmetric = antisymmetric;
        if antisymmetric {
            self.project_odd();
        }
        self
    }

    fn project_odd(&mut self) {
        for (i, a) in self.coeffs.iter_mut().enumerate() {
            if (i + 1) % 2 == 0 {
                *a = 0.0;
            }
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// `a_k`, or 0 beyond the truncation.
    pub fn coeff(&self, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        self.coeffs.get(k - 1).copied().unwrap_or(0.0)
    }

    /// Sets `a_k`; panics if `k` is 0 or beyond the truncation.
    pub fn set(&mut self, k: usize, value: f64) {
        assert!(k >= 1 && k <= self.coeffs.len(), "mode {k} out of range");
        self.coeffs[k - 1] = value;
    }

    /// Copy truncated or zero-padded to `m` modes.
    pub fn resized(&self, m: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(m, 0.0);
        CosineSeries {
            coeffs,
            antisymmetric: self.antisymmetric,
        }
    }

    /// Direct evaluation at one point.
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| a * ((i + 1) as f64 * x).cos())
            .sum()
    }

    /// `Σ_k |a_k|`, a bound on the max-norm.
    pub fn abs_sum(&self) -> f64 {
        self.coeffs.iter().map(|a| a.abs()).sum()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut s = self.clone();
        s.coeffs.iter_mut().for_each(|a| *a *= factor);
        s
    }

    /// `self + factor · other`, truncated to `self.len()`.
    pub fn axpy(&self, factor: f64, other: &CosineSeries) -> Self {
        let mut s = self.clone();
        for (a, b) in s.coeffs.iter_mut().zip(&other.coeffs) {
            *a += factor * b;
        }
        s
    }
}

/// Fourier multiplier families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolFamily {
    /// `|k|^{-α}`
    NegOrder,
    /// `(tanh k / k)^α`
    WhithamPower,
    /// `(1 + k²)^{-α/2}`
    Bessel,
}

impl std::str::FromStr for SymbolFamily {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "neg_order" => Ok(SymbolFamily::NegOrder),
            "whitham_power" => Ok(SymbolFamily::WhithamPower),
            "bessel" => Ok(SymbolFamily::Bessel),
            other => Err(format!(
                "unknown symbol family '{other}' (expected neg_order, whitham_power or bessel)"
            )),
        }
    }
}

impl std::fmt::Display for SymbolFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SymbolFamily::NegOrder => "neg_order",
            SymbolFamily::WhithamPower => "whitham_power",
            SymbolFamily::Bessel => "bessel",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymbolSpec {
    pub family: SymbolFamily,
    pub alpha: f64,
}

impl SymbolSpec {
    pub fn neg_order(alpha: f64) -> Self {
        SymbolSpec {
            family: SymbolFamily::NegOrder,
            alpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::Domain {
                what: "alpha must be positive",
                value: self.alpha,
            });
        }
        Ok(())
    }

    /// `m(k)`; `m(0) = 1` for every family.
    pub fn multiplier(&self, k: f64) -> f64 {
        let k = k.abs();
        if k == 0.0 {
            return 1.0;
        }
        match self.family {
            SymbolFamily::NegOrder => k.powf(-self.alpha),
            SymbolFamily::WhithamPower => (k.tanh() / k).powf(self.alpha),
            SymbolFamily::Bessel => (1.0 + k * k).powf(-0.5 * self.alpha),
        }
    }

    /// `a_k ← m(k) a_k`.
    pub fn apply(&self, series: &CosineSeries) -> CosineSeries {
        let mut out = series.clone();
        for (i, a) in out.coeffs.iter_mut().enumerate() {
            *a *= self.multiplier((i + 1) as f64);
        }
        out
    }
}

/// `a_k ← m(k) a_k`.
pub fn apply_symbol(series: &CosineSeries, symbol: &SymbolSpec) -> CosineSeries {
    symbol.apply(series)
}

/// `N` collocation nodes `x_j = -π + 2πj/N` with cached FFT plans.
#[derive(Clone)]
pub struct Grid {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid").field("n", &self.n).finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

/// Result of [`Grid::analyze_with_defect`].
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub series: CosineSeries,
    /// `max_j |v_j - v_{-j}|` of the input before symmetrization.
    pub symmetry_defect: f64,
    /// Grid mean removed from the input.
    pub mean: f64,
}

/// Symmetrization defects above this are logged.
pub const SYMMETRY_WARNING: f64 = 1e-8;

impl Grid {
    /// `n` must be a power of two, at least 4.
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::GridSize { n });
        }
        let mut planner = FftPlanner::new();
        Ok(Grid {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        TAU / self.n as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        -PI + TAU * j as f64 / self.n as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Index of the node at `x = 0`.
    pub fn origin_index(&self) -> usize {
        self.n / 2
    }

    fn check_modes(&self, m: usize) -> Result<()> {
        if 2 * m > self.n {
            return Err(Error::Aliasing { n: self.n, m });
        }
        Ok(())
    }

    /// `φ(x_j)` for every node.
    pub fn synthesize(&self, series: &CosineSeries) -> Result<Vec<f64>> {
        self.check_modes(series.len())?;
        let n = self.n;
        let half = n / 2;
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        for (i, &a) in series.coeffs.iter().enumerate() {
            let k = i + 1;
            // cos(k x_j) = (-1)^k cos(2πkj/N)
            let signed = if k % 2 == 0 { a } else { -a };
            if k == half {
                buf[k].re += signed;
            } else {
                buf[k].re += 0.5 * signed;
                buf[n - k].re += 0.5 * signed;
            }
        }
        self.inverse.process(&mut buf);
        Ok(buf.into_iter().map(|z| z.re).collect())
    }

    /// Discrete cosine coefficients `ĝ_k = (2/N) Σ_j v_j cos(k x_j)` for
    /// `k = 0..=N/2`, without symmetrization.
    pub fn cosine_coefficients(&self, values: &[f64]) -> Vec<f64> {
        assert_eq!(values.len(), self.n, "value count must match the grid");
        let n = self.n;
        let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        let scale = 2.0 / n as f64;
        (0..=n / 2)
            .map(|k| {
                let c = scale * buf[k].re;
                if k % 2 == 0 {
                    c
                } else {
                    -c
                }
            })
            .collect()
    }

    /// `a_k`, `k = 1..=m`, of the even zero-mean part of `values`.
    pub fn analyze(&self, values: &[f64], m: usize) -> Result<CosineSeries> {
        Ok(self.analyze_with_defect(values, m)?.series)
    }

    /// As [`Grid::analyze`], also returning the symmetry defect and mean.
    pub fn analyze_with_defect(&self, values: &[f64], m: usize) -> Result<Analysis> {
        self.check_modes(m)?;
        if values.len() != self.n {
            return Err(Error::Domain {
                what: "value count must equal the grid size",
                value: values.len() as f64,
            });
        }
        let n = self.n;
        let mut defect = 0.0f64;
        let sym: Vec<f64> = (0..n)
            .map(|j| {
                let r = values[(n - j) % n];
                defect = defect.max((values[j] - r).abs());
                0.5 * (values[j] + r)
            })
            .collect();
        if defect > SYMMETRY_WARNING {
            log::warn!("analyze: input deviates from evenness by {defect:e}");
        }
        let hat = self.cosine_coefficients(&sym);
        let mut coeffs: Vec<f64> = hat[1..=m].to_vec();
        if m == n / 2 {
            coeffs[m - 1] *= 0.5;
        }
        Ok(Analysis {
            series: CosineSeries::new(coeffs),
            symmetry_defect: defect,
            mean: 0.5 * hat[0],
        })
    }

    /// `Σ_k b_k sin(k x_j)` at every node.
    pub fn synthesize_sine(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        self.check_modes(coeffs.len())?;
        let n = self.n;
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        for (i, &b) in coeffs.iter().enumerate() {
            let k = i + 1;
            if k == n / 2 {
                // sin vanishes at every node
                continue;
            }
            let signed = if k % 2 == 0 { b } else { -b };
            // sin θ = (e^{iθ} - e^{-iθ}) / 2i
            buf[k] += Complex::new(0.0, -0.5 * signed);
            buf[n - k] += Complex::new(0.0, 0.5 * signed);
        }
        self.inverse.process(&mut buf);
        Ok(buf.into_iter().map(|z| z.re).collect())
    }

    /// Grid mean `(1/N) Σ_j v_j`.
    pub fn mean(values: &[f64]) -> f64 {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Synthesizes `series` on `grid`.
pub fn synthesize(series: &CosineSeries, grid: &Grid) -> Result<Vec<f64>> {
    grid.synthesize(series)
}

/// Recovers `m` cosine coefficients from grid values.
pub fn analyze(values: &[f64], grid: &Grid, m: usize) -> Result<CosineSeries> {
    grid.analyze(values, m)
}

/// `max_j |φ(x_j + π) + φ(x_j)|`.
pub fn antisymmetry_defect(values: &[f64]) -> f64 {
    let n = values.len();
    let half = n / 2;
    (0..n)
        .map(|j| (values[(j + half) % n] + values[j]).abs())
        .fold(0.0, f64::max)
}

/// Low-pass profile: 1 on `[0, 1]`, 0 on `[2, ∞)`, joined by the degree-7
/// smoothstep (three continuous derivatives at both ends).
pub fn partition_bump(xi: f64) -> f64 {
    let t = (xi.abs() - 1.0).clamp(0.0, 1.0);
    let t4 = t * t * t * t;
    let step = t4 * (35.0 + t * (-84.0 + t * (70.0 - 20.0 * t)));
    1.0 - step
}

/// Weight of dyadic block `j` at frequency `ξ`: `ψ(ξ)` for `j = 0`,
/// `ψ(ξ/2^j) - ψ(ξ/2^{j-1})` otherwise (supported on `2^{j-1} < |ξ| < 2^{j+1}`).
pub fn block_weight(j: u32, xi: f64) -> f64 {
    if j == 0 {
        partition_bump(xi)
    } else {
        let scale = (j as f64).exp2();
        partition_bump(xi / scale) - partition_bump(2.0 * xi / scale)
    }
}

/// `sup_j 2^{js} ‖ρ_j(D)φ‖_∞`, block max-norms taken on a grid oversampled
/// eightfold relative to the truncation.
pub fn zygmund_norm(series: &CosineSeries, s: f64) -> f64 {
    let m = series.len();
    if m == 0 {
        return 0.0;
    }
    let n = (8 * m).next_power_of_two().max(32);
    let grid = Grid::new(n).expect("power of two");
    let mut best = 0.0f64;
    let mut j = 0u32;
    // block j starts above 2^{j-1}
    while j == 0 || (j as f64 - 1.0).exp2() < m as f64 {
        let mut block = series.clone();
        for (i, a) in block.coeffs.iter_mut().enumerate() {
            *a *= block_weight(j, (i + 1) as f64);
        }
        if block.max_abs_coeff() > 0.0 {
            let values = grid.synthesize(&block).expect("oversampled grid");
            let sup = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            best = best.max((j as f64 * s).exp2() * sup);
        }
        j += 1;
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_round_trip() {
        let grid = Grid::new(64).unwrap();
        let values = grid.synthesize(&CosineSeries::mode(1, 1.0, 8)).unwrap();
        for (j, v) in values.iter().enumerate() {
            assert!((v - grid.node(j).cos()).abs() < 1e-14);
        }
        let s = CosineSeries::new((1..=32).map(|k| 1.0 / k as f64).collect());
        let back = grid.analyze(&grid.synthesize(&s).unwrap(), 32).unwrap();
        for (a, b) in s.coeffs().iter().zip(back.coeffs()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn analyze_single_mode_and_constant() {
        let grid = Grid::new(32).unwrap();
        let values: Vec<f64> = grid.nodes().iter().map(|x| (3.0 * x).cos()).collect();
        let s = grid.analyze(&values, 10).unwrap();
        for k in 1..=10 {
            let expect = if k == 3 { 1.0 } else { 0.0 };
            assert!((s.coeff(k) - expect).abs() < 1e-13);
        }
        let s = grid.analyze(&[2.5; 32], 10).unwrap();
        assert!(s.max_abs_coeff() < 1e-15);
    }

    #[test]
    fn aliasing_and_grid_size_errors() {
        assert!(matches!(Grid::new(12), Err(Error::GridSize { .. })));
        assert!(matches!(Grid::new(2), Err(Error::GridSize { .. })));
        let grid = Grid::new(16).unwrap();
        assert!(matches!(
            grid.synthesize(&CosineSeries::zeros(9)),
            Err(Error::Aliasing { .. })
        ));
    }

    #[test]
    fn antisymmetric_synthesis() {
        let grid = Grid::new(64).unwrap();
        let s = CosineSeries::new_antisymmetric(vec![1.0, 5.0, 0.3, 2.0, -0.2]);
        assert_eq!(s.coeff(2), 0.0);
        let v = grid.synthesize(&s).unwrap();
        assert!(antisymmetry_defect(&v) < 1e-13);
    }

    #[test]
    fn sine_synthesis() {
        let grid = Grid::new(32).unwrap();
        let v = grid.synthesize_sine(&[0.0, 1.0, 0.5]).unwrap();
        for (j, val) in v.iter().enumerate() {
            let x = grid.node(j);
            assert!((val - ((2.0 * x).sin() + 0.5 * (3.0 * x).sin())).abs() < 1e-14);
        }
    }

    #[test]
    fn symbols_and_composition() {
        let s = CosineSeries::mode(2, 1.0, 4);
        let out = SymbolSpec::neg_order(1.0).apply(&s);
        assert!((out.coeff(2) - 0.5).abs() < 1e-15);
        for family in [SymbolFamily::NegOrder, SymbolFamily::WhithamPower, SymbolFamily::Bessel] {
            let sym = SymbolSpec { family, alpha: 0.7 };
            assert_eq!(sym.multiplier(0.0), 1.0);
            let m: Vec<f64> = (1..50).map(|k| sym.multiplier(k as f64)).collect();
            assert!(m.windows(2).all(|w| w[1] < w[0] && w[1] > 0.0));
        }
    }

    #[test]
    fn zygmund_pure_modes_have_unit_weight() {
        for j in 1..=8u32 {
            let k = 1usize << j;
            let phi = CosineSeries::mode(k, 1.0, 2 * k);
            let norm = zygmund_norm(&phi, 0.5);
            assert!((norm - (0.5 * j as f64).exp2()).abs() < 1e-12, "j {j}: {norm}");
        }
        assert_eq!(zygmund_norm(&CosineSeries::zeros(16), 1.0), 0.0);
    }

    #[test]
    fn partition_sums_to_one() {
        for i in 0..400 {
            let xi = i as f64 * 0.37;
            let total: f64 = (0..12).map(|j| block_weight(j, xi)).sum();
            assert!((total - 1.0).abs() < 1e-14, "xi {xi}: {total}");
        }
    }
}
