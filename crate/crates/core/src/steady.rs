//! The regularised steady equation
//!
//! ```text
//! F^ε(φ, c) = L φ - c φ + n^ε(φ) - mean(n^ε(φ)) = 0
//! ```
//!
//! projected onto the first `M` cosine modes, with `L` a Fourier multiplier.
//! Nonlinear terms are evaluated pointwise on a grid of `N ≥ 4M` nodes.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseLu;
use crate::nonlinearity::{NonlinearityKind, NonlinearitySpec};
use crate::spectral::{antisymmetry_defect, CosineSeries, Grid, SymbolSpec};

/// Padding factor between grid size and mode count.
pub const PADDING: usize = 4;
/// Condition estimate above which a Jacobian is treated as singular.
pub const CONDITION_LIMIT: f64 = 1e14;

#[derive(Debug, Clone)]
pub struct SteadyProblem {
    pub symbol: SymbolSpec,
    pub nonlinearity: NonlinearitySpec,
    pub grid: Grid,
    pub m: usize,
    /// Unknown modes: all of `1..=M`, or the odd ones for `sgn`.
    modes: Vec<usize>,
}

/// Side condition closing the Newton system.
#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    /// `c` held fixed; only coefficients are unknown.
    FixSpeed,
    /// `a_mode = s`; `c` is unknown.
    FixAmplitude { mode: usize, s: f64 },
    /// `tangent · (u - anchor) = ds` in the packed unknown layout
    /// (coefficients of the active modes, then `c`).
    Arclength {
        tangent: Vec<f64>,
        anchor: Vec<f64>,
        ds: f64,
    },
}

/// One solution state on a branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub phi: CosineSeries,
    pub c: f64,
    /// Amplitude of the branch's base mode.
    pub s: f64,
    /// Max-norm on the grid of the projected residual.
    pub residual_norm: f64,
    pub max_value: f64,
    pub mu_eps: f64,
}

/// Newton outcome with its iteration record.
#[derive(Debug, Clone)]
pub struct NewtonReport {
    pub point: BranchPoint,
    pub iterations: usize,
    /// Residual norm before each iteration and after the last.
    pub history: Vec<f64>,
    /// Condition estimate of the last factorised Jacobian.
    pub condition: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-12,
            max_iterations: 25,
        }
    }
}

impl SteadyProblem {
    pub fn new(symbol: SymbolSpec, nonlinearity: NonlinearitySpec, n: usize, m: usize) -> Result<Self> {
        symbol.validate()?;
        nonlinearity.validate()?;
        let grid = Grid::new(n)?;
        if m == 0 || PADDING * m > n {
            return Err(Error::Aliasing { n, m });
        }
        let modes = if nonlinearity.kind == NonlinearityKind::Sgn {
            (1..=m).step_by(2).collect()
        } else {
            (1..=m).collect()
        };
        Ok(SteadyProblem {
            symbol,
            nonlinearity,
            grid,
            m,
            modes,
        })
    }

    /// Same discretisation with another nonlinearity (e.g. a new `ε`).
    pub fn with_nonlinearity(&self, nonlinearity: NonlinearitySpec) -> Result<Self> {
        SteadyProblem::new(self.symbol, nonlinearity, self.grid.n(), self.m)
    }

    pub fn is_antisymmetric(&self) -> bool {
        self.nonlinearity.kind == NonlinearityKind::Sgn
    }

    /// Active modes in unknown order.
    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    /// Dimension of the packed unknown `(coefficients, c)`.
    pub fn unknowns(&self) -> usize {
        self.modes.len() + 1
    }

    pub fn zero_series(&self) -> CosineSeries {
        CosineSeries::zeros(self.m).with_antisymmetry(self.is_antisymmetric())
    }

    /// Series conformed to the problem: resized to `M`, odd-projected for `sgn`.
    pub fn conform(&self, phi: &CosineSeries) -> CosineSeries {
        phi.resized(self.m).with_antisymmetry(self.is_antisymmetric())
    }

    pub fn pack(&self, phi: &CosineSeries, c: f64) -> Vec<f64> {
        let mut u: Vec<f64> = self.modes.iter().map(|&k| phi.coeff(k)).collect();
        u.push(c);
        u
    }

    pub fn unpack(&self, u: &[f64]) -> (CosineSeries, f64) {
        let mut phi = self.zero_series();
        for (&k, &a) in self.modes.iter().zip(u) {
            phi.set(k, a);
        }
        (phi, u[self.modes.len()])
    }

    pub fn values(&self, phi: &CosineSeries) -> Result<Vec<f64>> {
        self.grid.synthesize(&phi.resized(self.m))
    }

    /// `F^ε(φ, c)` as a series; for `sgn`, projected onto odd modes.
    pub fn residual(&self, phi: &CosineSeries, c: f64) -> Result<CosineSeries> {
        Ok(self.residual_with_defect(phi, c)?.0)
    }

    /// Residual together with its even-mode content before projection.
    pub fn residual_with_defect(&self, phi: &CosineSeries, c: f64) -> Result<(CosineSeries, f64)> {
        let phi = phi.resized(self.m);
        let values = self.grid.synthesize(&phi)?;
        let nonlinear: Vec<f64> = values.iter().map(|&v| self.nonlinearity.value(v)).collect();
        // analyze drops the mean, which is the ∮ n^ε(φ) term
        let projected = self.grid.analyze(&nonlinear, self.m)?;
        let linear = self.symbol.apply(&phi);
        let mut out = linear.axpy(-c, &phi).axpy(1.0, &projected);
        let mut defect = 0.0f64;
        if self.is_antisymmetric() {
            for k in (2..=self.m).step_by(2) {
                defect = defect.max(out.coeff(k).abs());
            }
            out = out.with_antisymmetry(true);
        }
        Ok((out, defect))
    }

    /// Max-norm over the grid of the projected residual.
    pub fn residual_norm(&self, phi: &CosineSeries, c: f64) -> Result<f64> {
        let r = self.residual(phi, c)?;
        self.series_max_norm(&r)
    }

    fn series_max_norm(&self, r: &CosineSeries) -> Result<f64> {
        Ok(self.grid.synthesize(r)?.into_iter().fold(0.0, |m, v| m.max(v.abs())))
    }

    /// `∂_φ F^ε(φ, c) h`.
    pub fn jacobian_apply(&self, phi: &CosineSeries, c: f64, h: &CosineSeries) -> Result<CosineSeries> {
        let phi = phi.resized(self.m);
        let h = h.resized(self.m);
        let values = self.grid.synthesize(&phi)?;
        let hv = self.grid.synthesize(&h)?;
        let product: Vec<f64> = values
            .iter()
            .zip(&hv)
            .map(|(&v, &w)| self.nonlinearity.d1(v) * w)
            .collect();
        let projected = self.grid.analyze(&product, self.m)?;
        let mut out = self.symbol.apply(&h).axpy(-c, &h).axpy(1.0, &projected);
        if self.is_antisymmetric() {
            out = out.with_antisymmetry(true);
        }
        Ok(out)
    }

    /// Coefficient-space Jacobian on the active modes.
    ///
    /// With `ĝ_l = (2/N) Σ_i g(x_i) cos(l x_i)` for `g = (n^ε)'(φ)`, the
    /// projection of `g cos(j·)` onto `cos(k·)` is `(ĝ_{|k-j|} + ĝ_{k+j}) / 2`
    /// exactly, since `k + j ≤ 2M ≤ N/2`.
    pub fn jacobian_matrix(&self, phi: &CosineSeries, c: f64) -> Result<Mat<f64>> {
        let phi = phi.resized(self.m);
        let values = self.grid.synthesize(&phi)?;
        let g: Vec<f64> = values.iter().map(|&v| self.nonlinearity.d1(v)).collect();
        let ghat = self.grid.cosine_coefficients(&g);
        let d = self.modes.len();
        Ok(Mat::from_fn(d, d, |r, col| {
            let (k, j) = (self.modes[r], self.modes[col]);
            let diag = if k == j {
                self.symbol.multiplier(k as f64) - c
            } else {
                0.0
            };
            diag + 0.5 * (ghat[k.abs_diff(j)] + ghat[k + j])
        }))
    }

    /// Same matrix assembled column by column from [`Self::jacobian_apply`].
    pub fn jacobian_matrix_by_columns(&self, phi: &CosineSeries, c: f64) -> Result<Mat<f64>> {
        let d = self.modes.len();
        let mut a = Mat::<f64>::zeros(d, d);
        for (col, &j) in self.modes.iter().enumerate() {
            let h = CosineSeries::mode(j, 1.0, self.m);
            let out = self.jacobian_apply(phi, c, &h)?;
            for (r, &k) in self.modes.iter().enumerate() {
                a[(r, col)] = out.coeff(k);
            }
        }
        Ok(a)
    }

    /// Builds a [`BranchPoint`] with all derived fields filled.
    pub fn branch_point(&self, phi: CosineSeries, c: f64, base_mode: usize) -> Result<BranchPoint> {
        let phi = self.conform(&phi);
        let residual_norm = self.residual_norm(&phi, c)?;
        let values = self.values(&phi)?;
        let max_value = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(BranchPoint {
            s: phi.coeff(base_mode),
            mu_eps: self.nonlinearity.mu_eps(c)?,
            phi,
            c,
            residual_norm,
            max_value,
        })
    }

    /// Newton's method on `F^ε = 0` closed by `constraint`.
    ///
    /// Each step factorises the dense Jacobian; a condition estimate above
    /// [`CONDITION_LIMIT`] aborts with [`Error::NearSingular`].
    pub fn newton(
        &self,
        phi: &CosineSeries,
        c: f64,
        constraint: &Constraint,
        options: NewtonOptions,
    ) -> Result<NewtonReport> {
        let d = self.modes.len();
        let base_mode = match constraint {
            Constraint::FixAmplitude { mode, .. } => *mode,
            _ => 1,
        };
        if let Constraint::FixAmplitude { mode, .. } = constraint {
            if !self.modes.contains(mode) {
                return Err(Error::Domain {
                    what: "amplitude mode is not an active unknown",
                    value: *mode as f64,
                });
            }
        }
        if let Constraint::Arclength { tangent, anchor, .. } = constraint {
            if tangent.len() != d + 1 || anchor.len() != d + 1 {
                return Err(Error::Domain {
                    what: "arclength vectors must match the unknown count",
                    value: tangent.len() as f64,
                });
            }
        }
        let mut u = self.pack(&self.conform(phi), c);
        let constraint_value = |u: &[f64]| -> f64 {
            match constraint {
                Constraint::FixSpeed => 0.0,
                Constraint::FixAmplitude { mode, s } => {
                    let idx = self.modes.iter().position(|k| k == mode).expect("checked");
                    u[idx] - s
                }
                Constraint::Arclength { tangent, anchor, ds } => {
                    tangent
                        .iter()
                        .zip(u.iter().zip(anchor))
                        .map(|(t, (x, a))| t * (x - a))
                        .sum::<f64>()
                        - ds
                }
            }
        };
        let mut history = Vec::new();
        let mut condition = 1.0;
        let mut iterations = 0;
        loop {
            let (phi_u, c_u) = self.unpack(&u);
            let r = self.residual(&phi_u, c_u)?;
            let norm = self.series_max_norm(&r)?;
            let g = constraint_value(&u);
            history.push(norm.max(g.abs()));
            if !norm.is_finite() {
                return Err(Error::Convergence {
                    iterations,
                    residual: norm,
                });
            }
            if norm <= options.tol && g.abs() <= options.tol {
                let point = self.branch_point(phi_u, c_u, base_mode)?;
                return Ok(NewtonReport {
                    point,
                    iterations,
                    history,
                    condition,
                });
            }
            let diverging = history.len() > 3 && norm > 1e3 * history[0].max(options.tol);
            if iterations >= options.max_iterations || diverging {
                return Err(Error::Convergence {
                    iterations,
                    residual: norm,
                });
            }
            let jac = self.jacobian_matrix(&phi_u, c_u)?;
            let mut rhs: Vec<f64> = self.modes.iter().map(|&k| -r.coeff(k)).collect();
            let step = match constraint {
                Constraint::FixSpeed => {
                    let lu = DenseLu::factor(&jac);
                    condition = lu.condition_estimate();
                    if condition > CONDITION_LIMIT {
                        return Err(Error::NearSingular { condition });
                    }
                    let mut s = lu.solve(&rhs);
                    s.push(0.0);
                    s
                }
                _ => {
                    let mut full = Mat::<f64>::zeros(d + 1, d + 1);
                    for i in 0..d {
                        for j in 0..d {
                            full[(i, j)] = jac[(i, j)];
                        }
                        // ∂F/∂c = -φ
                        full[(i, d)] = -u[i];
                    }
                    match constraint {
                        Constraint::FixAmplitude { mode, .. } => {
                            let idx = self.modes.iter().position(|k| k == mode).expect("checked");
                            full[(d, idx)] = 1.0;
                        }
                        Constraint::Arclength { tangent, .. } => {
                            for (j, t) in tangent.iter().enumerate() {
                                full[(d, j)] = *t;
                            }
                        }
                        Constraint::FixSpeed => unreachable!(),
                    }
                    rhs.push(-g);
                    let lu = DenseLu::factor(&full);
                    condition = lu.condition_estimate();
                    if condition > CONDITION_LIMIT {
                        return Err(Error::NearSingular { condition });
                    }
                    lu.solve(&rhs)
                }
            };
            if step.iter().any(|v| !v.is_finite()) {
                return Err(Error::NearSingular {
                    condition: f64::INFINITY,
                });
            }
            for (x, dx) in u.iter_mut().zip(&step) {
                *x += dx;
            }
            iterations += 1;
        }
    }

    /// Newton solve from a guess point; see [`Self::newton`].
    pub fn newton_solve(&self, guess: &BranchPoint, constraint: &Constraint, tol: f64) -> Result<BranchPoint> {
        let options = NewtonOptions {
            tol,
            ..NewtonOptions::default()
        };
        Ok(self.newton(&guess.phi, guess.c, constraint, options)?.point)
    }

    /// Max over the grid of `|φ(x + π) + φ(x)|`.
    pub fn antisymmetry_defect(&self, phi: &CosineSeries) -> Result<f64> {
        Ok(antisymmetry_defect(&self.values(phi)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::SymbolFamily;

    fn problem(kind: NonlinearityKind, p: f64, eps: f64, m: usize) -> SteadyProblem {
        SteadyProblem::new(
            SymbolSpec::neg_order(0.5),
            NonlinearitySpec::new(kind, p, eps),
            PADDING * m,
            m,
        )
        .unwrap()
    }

    fn random_series(m: usize, scale: f64, seed: u64) -> CosineSeries {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        CosineSeries::new(
            (1..=m)
                .map(|k| scale * rng.random_range(-1.0..1.0) / (k * k) as f64)
                .collect(),
        )
    }

    #[test]
    fn trivial_line_is_exact() {
        let pr = problem(NonlinearityKind::Abs, 2.5, 0.1, 16);
        for c in [0.3, 1.0, 2.7] {
            let r = pr.residual(&CosineSeries::zeros(16), c).unwrap();
            assert_eq!(r.max_abs_coeff(), 0.0);
        }
    }

    #[test]
    fn trivial_jacobian_is_diagonal() {
        let pr = problem(NonlinearityKind::Abs, 2.0, 0.1, 16);
        let c = 0.8;
        let j = pr.jacobian_matrix(&CosineSeries::zeros(16), c).unwrap();
        for r in 0..16 {
            for col in 0..16 {
                let expect = if r == col { ((r + 1) as f64).powf(-0.5) - c } else { 0.0 };
                assert!((j[(r, col)] - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn residual_is_second_order_at_the_bifurcation_point() {
        let pr = problem(NonlinearityKind::Abs, 2.5, 0.1, 16);
        let ratios: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&s| pr.residual_norm(&CosineSeries::mode(1, s, 16), 1.0).unwrap() / (s * s))
            .collect();
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().copied().fold(0.0, f64::max);
        assert!(hi < 1.1 * lo, "{ratios:?}");
    }

    #[test]
    fn fast_jacobian_matches_column_build() {
        for (kind, p) in [(NonlinearityKind::Abs, 2.5), (NonlinearityKind::Sgn, 2.5)] {
            let pr = problem(kind, p, 0.1, 32);
            let phi = pr.conform(&random_series(32, 0.3, 3));
            let fast = pr.jacobian_matrix(&phi, 0.9).unwrap();
            let slow = pr.jacobian_matrix_by_columns(&phi, 0.9).unwrap();
            for r in 0..fast.nrows() {
                for col in 0..fast.ncols() {
                    assert!((fast[(r, col)] - slow[(r, col)]).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn jacobian_is_linear_and_matches_central_differences() {
        let pr = problem(NonlinearityKind::Abs, 2.5, 0.1, 32);
        let phi = random_series(32, 0.5, 7);
        let h1 = random_series(32, 1.0, 8);
        let h2 = random_series(32, 1.0, 9);
        let c = 1.1;
        let lhs = pr.jacobian_apply(&phi, c, &h1.scaled(2.0).axpy(-3.0, &h2)).unwrap();
        let rhs = pr
            .jacobian_apply(&phi, c, &h1)
            .unwrap()
            .scaled(2.0)
            .axpy(-3.0, &pr.jacobian_apply(&phi, c, &h2).unwrap());
        assert!(lhs.axpy(-1.0, &rhs).max_abs_coeff() < 1e-12);
        let jh = pr.jacobian_apply(&phi, c, &h1).unwrap();
        let err = |delta: f64| {
            let plus = pr.residual(&phi.axpy(delta, &h1), c).unwrap();
            let minus = pr.residual(&phi.axpy(-delta, &h1), c).unwrap();
            plus.axpy(-1.0, &minus)
                .scaled(0.5 / delta)
                .axpy(-1.0, &jh)
                .max_abs_coeff()
        };
        let ratio = err(1e-2) / err(1e-3);
        assert!(ratio > 80.0 && ratio < 120.0, "{ratio}");
    }

    #[test]
    fn sgn_residual_stays_odd() {
        let pr = problem(NonlinearityKind::Sgn, 2.5, 0.1, 32);
        let phi = CosineSeries::new_antisymmetric(random_series(32, 0.5, 11).into_coeffs());
        let (_, defect) = pr.residual_with_defect(&phi, 1.0).unwrap();
        assert!(defect < 1e-12, "{defect}");
    }

    #[test]
    fn trivial_point_takes_no_iterations() {
        let pr = problem(NonlinearityKind::Abs, 2.0, 0.1, 16);
        let report = pr
            .newton(
                &CosineSeries::zeros(16),
                0.8,
                &Constraint::FixSpeed,
                NewtonOptions::default(),
            )
            .unwrap();
        assert_eq!(report.iterations, 0);
        assert_eq!(report.point.c, 0.8);
        assert_eq!(report.point.phi.max_abs_coeff(), 0.0);
    }

    #[test]
    fn small_amplitude_solve_matches_second_order_coefficient() {
        let pr = problem(NonlinearityKind::Abs, 2.0, 0.1, 32);
        let s = 1e-2;
        let m2 = 2f64.powf(-0.5);
        let coef = 0.5 / (1.0 - m2);
        let mut guess = CosineSeries::mode(1, s, 32);
        guess.set(2, s * s * coef);
        let report = pr
            .newton(
                &guess,
                1.0,
                &Constraint::FixAmplitude { mode: 1, s },
                NewtonOptions::default(),
            )
            .unwrap();
        assert!(report.iterations <= 5);
        assert!(report.point.residual_norm < 1e-12);
        let a2 = report.point.phi.coeff(2);
        assert!((a2 / (s * s) - coef).abs() < 0.02 * coef, "{}", a2 / (s * s));
        // quadratic convergence once the residual is small
        for w in report.history.windows(2) {
            if w[0] < 1e-3 && w[1] > 0.0 {
                assert!(w[1] <= 1e3 * w[0] * w[0] + 1e-15, "{:?}", report.history);
            }
        }
    }

    #[test]
    fn padding_rule_is_enforced() {
        let r = SteadyProblem::new(
            SymbolSpec {
                family: SymbolFamily::Bessel,
                alpha: 0.5,
            },
            NonlinearitySpec::new(NonlinearityKind::Abs, 2.0, 0.1),
            64,
            17,
        );
        assert!(matches!(r, Err(Error::Aliasing { .. })));
    }
}
