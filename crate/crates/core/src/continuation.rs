//! Branch start-up from small-amplitude expansions, pseudo-arclength
//! continuation toward the highest wave, and the `ε ↘ 0` homotopy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinearity::{NonlinearityKind, NonlinearitySpec};
use crate::spectral::{CosineSeries, Grid, SymbolFamily};
use crate::steady::{BranchPoint, Constraint, NewtonOptions, SteadyProblem};

/// Slack on first differences in the monotonicity check.
pub const MONOTONE_SLACK: f64 = -1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContinuationConfig {
    /// Branch index `k`: bifurcation from `c = m(k)`. Not serialised; run
    /// configurations set it through their own `k`.
    #[serde(skip)]
    pub mode: usize,
    pub s0: f64,
    pub ds: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    /// Stop once `μ^ε - max φ < crest_margin · μ^ε`.
    pub crest_margin: f64,
    pub max_steps: usize,
    pub newton_tol: f64,
    pub max_newton_iterations: usize,
    /// Strictly decreasing positive `ε` values for the homotopy.
    pub eps_schedule: Vec<f64>,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        ContinuationConfig {
            mode: 1,
            s0: 1e-3,
            ds: 2e-3,
            ds_min: 1e-7,
            ds_max: 5e-2,
            crest_margin: 1e-2,
            max_steps: 2000,
            newton_tol: 1e-11,
            max_newton_iterations: 12,
            eps_schedule: vec![1e-1, 1e-2, 1e-3],
        }
    }
}

impl ContinuationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: &str| Err(Error::config(field, msg));
        if self.mode == 0 {
            return bad("mode", "must be at least 1");
        }
        if !(self.s0 > 0.0 && self.s0.is_finite()) {
            return bad("s0", "must be positive");
        }
        if !(self.ds_min > 0.0 && self.ds_min <= self.ds && self.ds <= self.ds_max) {
            return bad("ds", "need 0 < ds_min <= ds <= ds_max");
        }
        if !(self.crest_margin > 0.0 && self.crest_margin < 1.0) {
            return bad("crest_margin", "must lie in (0, 1)");
        }
        if self.max_steps == 0 {
            return bad("max_steps", "must be positive");
        }
        if !(self.newton_tol > 0.0) {
            return bad("newton_tol", "must be positive");
        }
        if self.max_newton_iterations == 0 {
            return bad("max_newton_iterations", "must be positive");
        }
        if self.eps_schedule.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return bad("eps_schedule", "entries must be positive");
        }
        if self.eps_schedule.windows(2).any(|w| w[1] >= w[0]) {
            return bad("eps_schedule", "must be strictly decreasing");
        }
        Ok(())
    }

    fn newton_options(&self) -> NewtonOptions {
        NewtonOptions {
            tol: self.newton_tol,
            max_iterations: self.max_newton_iterations,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    CrestReached,
    StepFloor,
    MaxSteps,
    Error,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Termination::CrestReached => "crest_reached",
            Termination::StepFloor => "step_floor",
            Termination::MaxSteps => "max_steps",
            Termination::Error => "error",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    pub terminated_reason: Termination,
    /// Notes on rejected steps and the reason for stopping.
    pub diagnostics: Vec<String>,
}

impl Branch {
    pub fn last(&self) -> Option<&BranchPoint> {
        self.points.last()
    }
}

/// Truncated small-amplitude expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictor {
    pub phi: CosineSeries,
    pub c: f64,
    /// Coefficient of the leading correction mode (`2k` for abs, `3k` for sgn
    /// when `ε > 0`).
    pub wave_coefficient: f64,
    /// `(c - m(k)) / s^q` with `q` the order of the speed correction.
    pub speed_coefficient: f64,
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// The two candidate speed coefficients of the `ε > 0` expansion
/// `c = m(k) + ς₂ s² + O(s⁴)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedCandidates {
    /// `2C` (abs) or `(3/4)(p-1)ε^{p-3}` (sgn), twice the solvability value;
    /// kept as the alternative the fit must rule out.
    pub doubled: f64,
    /// `a₂ C` (abs) or `(3/8)(p-1)ε^{p-3}` (sgn), from the order-`s³`
    /// solvability condition.
    pub solvability_derived: f64,
}

/// Wave coefficient `C` of the `ε > 0` expansion and both speed candidates.
pub fn bifurcation_coefficients(problem: &SteadyProblem, k: usize) -> Result<(f64, SpeedCandidates)> {
    let nl = problem.nonlinearity;
    if nl.eps <= 0.0 {
        return Err(Error::Unsupported("regularised expansion needs eps > 0".into()));
    }
    let m = |j: usize| problem.symbol.multiplier(j as f64);
    let (p, eps) = (nl.p, nl.eps);
    Ok(match nl.kind {
        NonlinearityKind::Abs => {
            let c_wave = 0.25 * p * eps.powf(p - 2.0) / (m(k) - m(2 * k));
            let a2 = 0.5 * p * eps.powf(p - 2.0);
            (
                c_wave,
                SpeedCandidates {
                    doubled: 2.0 * c_wave,
                    solvability_derived: a2 * c_wave,
                },
            )
        }
        NonlinearityKind::Sgn => {
            let c_wave = (p - 1.0) * eps.powf(p - 3.0) / 8.0 / (m(k) - m(3 * k));
            let base = (p - 1.0) * eps.powf(p - 3.0);
            (
                c_wave,
                SpeedCandidates {
                    doubled: 0.75 * base,
                    solvability_derived: 0.375 * base,
                },
            )
        }
    })
}

/// Small-amplitude expansion of branch `k` at amplitude `s`.
///
/// For `ε > 0`: `s cos(k·) + s² C cos(2k·)` (abs) or `s cos(k·) + s³ C cos(3k·)`
/// (sgn), with the solvability-derived speed. For `ε = 0` and integer `p`
/// whose parity matches the family (even for abs, odd for sgn):
/// `s cos(k·) + s^p Φ_k`.
pub fn local_predictor(k: usize, s: f64, problem: &SteadyProblem) -> Result<Predictor> {
    let nl = problem.nonlinearity;
    let m_modes = problem.m;
    if k == 0 {
        return Err(Error::Domain {
            what: "branch index must be positive",
            value: 0.0,
        });
    }
    if problem.is_antisymmetric() && k.is_multiple_of(2) {
        return Err(Error::Domain {
            what: "sgn branches need an odd index",
            value: k as f64,
        });
    }
    let mult = |j: usize| problem.symbol.multiplier(j as f64);
    let mut phi = CosineSeries::zeros(m_modes);
    let set = |phi: &mut CosineSeries, j: usize, v: f64| {
        if j >= 1 && j <= m_modes {
            phi.set(j, phi.coeff(j) + v);
        }
    };
    set(&mut phi, k, s);
    if nl.eps > 0.0 {
        let (c_wave, speed) = bifurcation_coefficients(problem, k)?;
        let (order_mode, power) = match nl.kind {
            NonlinearityKind::Abs => (2 * k, 2),
            NonlinearityKind::Sgn => (3 * k, 3),
        };
        set(&mut phi, order_mode, s.powi(power) * c_wave);
        return Ok(Predictor {
            phi: problem.conform(&phi),
            c: mult(k) + speed.solvability_derived * s * s,
            wave_coefficient: c_wave,
            speed_coefficient: speed.solvability_derived,
        });
    }
    let p = nl.p;
    if p.fract() != 0.0 || p < 2.0 {
        return Err(Error::Unsupported(format!(
            "no analytic expansion for p = {p} without regularisation; start from a small-amplitude Newton solve"
        )));
    }
    let pi = p as u32;
    let even = pi.is_multiple_of(2);
    match (nl.kind, even) {
        (NonlinearityKind::Abs, true) | (NonlinearityKind::Sgn, false) => {}
        _ => {
            return Err(Error::Unsupported(format!(
                "p = {pi} is not a polynomial case for {}",
                nl.kind
            )))
        }
    }
    let scale = 2f64.powi(1 - pi as i32);
    // cos^p(θ) = 2^{1-p} Σ_{j < p/2} binom(p, j) cos((p-2j)θ) + constant
    let c_kj = |j: u32| {
        let l = (pi - 2 * j) as usize * k;
        scale * binomial(pi, j) / (mult(k) - mult(l))
    };
    let sp = s.powi(pi as i32);
    let (speed_coefficient, c, lead) = if even {
        for j in 0..pi / 2 {
            set(&mut phi, (pi - 2 * j) as usize * k, sp * c_kj(j));
        }
        let mut acc = c_kj(0);
        for j in 1..pi / 2 {
            acc += (binomial(pi - 1, j) + binomial(pi - 1, j - 1)) * c_kj(j);
        }
        let coef = p * scale * acc;
        (coef, mult(k) + s.powi(2 * pi as i32 - 2) * coef, c_kj(0))
    } else {
        for j in 0..(pi - 1) / 2 {
            set(&mut phi, (pi - 2 * j) as usize * k, sp * c_kj(j));
        }
        let coef = scale * binomial(pi, (pi - 1) / 2);
        (coef, mult(k) + s.powi(pi as i32 - 1) * coef, c_kj(0))
    };
    Ok(Predictor {
        phi: problem.conform(&phi),
        c,
        wave_coefficient: lead,
        speed_coefficient,
    })
}

/// Which speed candidate a fitted coefficient agrees with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedMatch {
    Doubled,
    SolvabilityDerived,
    Both,
    Neither,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticsSample {
    pub s: f64,
    pub c: f64,
    pub c_negative_s: f64,
    pub wave_ratio: f64,
    pub speed_ratio: f64,
    pub residual_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticsReport {
    pub mode: usize,
    pub samples: Vec<AsymptoticsSample>,
    /// Intercept of `a_{2k}/s²` (abs) or `a_{3k}/s³` (sgn) fitted linearly in `s²`.
    pub fitted_wave_coefficient: f64,
    pub formula_wave_coefficient: f64,
    pub wave_deviation: f64,
    /// Intercept of `(c - m(k))/s²` fitted linearly in `s²`.
    pub fitted_speed_coefficient: f64,
    /// Speed coefficient from quadrature of the order-`s³` solvability condition.
    pub solvability_quadrature: f64,
    pub fit_vs_quadrature_deviation: f64,
    pub candidates: SpeedCandidates,
    pub doubled_deviation: f64,
    pub solvability_deviation: f64,
    pub speed_match: SpeedMatch,
    /// `max |c(s) - c(-s)|`.
    pub evenness_defect: f64,
}

/// Relative agreement threshold used in [`AsymptoticsReport::speed_match`].
pub const MATCH_TOLERANCE: f64 = 0.02;

fn intercept(xs: &[f64], ys: &[f64]) -> f64 {
    if xs.len() == 1 {
        return ys[0];
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    my - sxy / sxx * mx
}

/// `ς₂ = ⟨2a₂ φ₁ φ₂ + a₃ φ₁³⟩_k` with `φ₁ = cos(k·)` and
/// `φ₂ = -(L - m(k))⁻¹ [a₂ φ₁²]`, by discrete quadrature on a fresh grid.
///
/// `a₂ = n''(0)/2` and `a₃ = n'''(0)/6`, the latter by a central difference
/// of `n''`.
pub fn solvability_speed_coefficient(problem: &SteadyProblem, k: usize) -> Result<f64> {
    let nl = problem.nonlinearity;
    if nl.eps <= 0.0 {
        return Err(Error::Unsupported("solvability quadrature needs eps > 0".into()));
    }
    let a2 = 0.5 * nl.d2(0.0);
    let h = 1e-3 * nl.eps;
    let a3 = (nl.d2(h) - nl.d2(-h)) / (2.0 * h) / 6.0;
    let modes = 4 * k;
    let grid = Grid::new((16 * k).next_power_of_two().max(64))?;
    let phi1: Vec<f64> = grid.nodes().iter().map(|x| (k as f64 * x).cos()).collect();
    let quad: Vec<f64> = phi1.iter().map(|v| a2 * v * v).collect();
    let q = grid.analyze(&quad, modes)?;
    let mut phi2 = CosineSeries::zeros(modes);
    for l in 1..=modes {
        if l != k {
            let ml = problem.symbol.multiplier(l as f64);
            let mk = problem.symbol.multiplier(k as f64);
            phi2.set(l, q.coeff(l) / (mk - ml));
        }
    }
    let phi2v = grid.synthesize(&phi2)?;
    let cubic: Vec<f64> = phi1
        .iter()
        .zip(&phi2v)
        .map(|(u, w)| 2.0 * a2 * u * w + a3 * u * u * u)
        .collect();
    Ok(grid.analyze(&cubic, modes)?.coeff(k))
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Solves at each `±s` with the amplitude pinned, fits the expansion
/// coefficients and compares them with the formulas and with an independent
/// solvability quadrature.
pub fn verify_asymptotics(problem: &SteadyProblem, k: usize, s_list: &[f64], tol: f64) -> Result<AsymptoticsReport> {
    if s_list.is_empty() {
        return Err(Error::Domain {
            what: "s_list must not be empty",
            value: 0.0,
        });
    }
    let (c_wave, candidates) = bifurcation_coefficients(problem, k)?;
    let mk = problem.symbol.multiplier(k as f64);
    let (wave_mode, wave_power) = match problem.nonlinearity.kind {
        NonlinearityKind::Abs => (2 * k, 2),
        NonlinearityKind::Sgn => (3 * k, 3),
    };
    let options = NewtonOptions {
        tol,
        ..NewtonOptions::default()
    };
    let mut samples = Vec::with_capacity(s_list.len());
    for &s in s_list {
        let solve = |s: f64| -> Result<BranchPoint> {
            let pred = local_predictor(k, s, problem)?;
            problem
                .newton(&pred.phi, pred.c, &Constraint::FixAmplitude { mode: k, s }, options)
                .map(|r| r.point)
                .map_err(|e| e.in_stage(format!("newton at s = {s:e}")))
        };
        let plus = solve(s)?;
        let minus = solve(-s)?;
        samples.push(AsymptoticsSample {
            s,
            c: plus.c,
            c_negative_s: minus.c,
            wave_ratio: plus.phi.coeff(wave_mode) / s.powi(wave_power),
            speed_ratio: (plus.c - mk) / (s * s),
            residual_norm: plus.residual_norm.max(minus.residual_norm),
        });
    }
    let s2: Vec<f64> = samples.iter().map(|x| x.s * x.s).collect();
    let fitted_wave = intercept(&s2, &samples.iter().map(|x| x.wave_ratio).collect::<Vec<_>>());
    let fitted_speed = intercept(&s2, &samples.iter().map(|x| x.speed_ratio).collect::<Vec<_>>());
    let quadrature = solvability_speed_coefficient(problem, k)?;
    let doubled_deviation = relative(fitted_speed, candidates.doubled);
    let solvability_deviation = relative(fitted_speed, candidates.solvability_derived);
    let speed_match = match (
        doubled_deviation < MATCH_TOLERANCE,
        solvability_deviation < MATCH_TOLERANCE,
    ) {
        (true, true) => SpeedMatch::Both,
        (true, false) => SpeedMatch::Doubled,
        (false, true) => SpeedMatch::SolvabilityDerived,
        (false, false) => SpeedMatch::Neither,
    };
    let evenness_defect = samples.iter().map(|x| (x.c - x.c_negative_s).abs()).fold(0.0, f64::max);
    Ok(AsymptoticsReport {
        mode: k,
        samples,
        fitted_wave_coefficient: fitted_wave,
        formula_wave_coefficient: c_wave,
        wave_deviation: relative(fitted_wave, c_wave),
        fitted_speed_coefficient: fitted_speed,
        solvability_quadrature: quadrature,
        fit_vs_quadrature_deviation: relative(fitted_speed, quadrature),
        candidates,
        doubled_deviation,
        solvability_deviation,
        speed_match,
        evenness_defect,
    })
}

/// First differences of `values` on `(-π, 0]` are all `≥ MONOTONE_SLACK`.
pub fn monotone_on_left_half(values: &[f64]) -> bool {
    monotone_with_slack(values, -MONOTONE_SLACK)
}

/// First differences of `values` on `(-π, 0]` are all `≥ -slack`.
pub fn monotone_with_slack(values: &[f64], slack: f64) -> bool {
    let half = values.len() / 2;
    values[..=half].windows(2).all(|w| w[1] - w[0] >= -slack)
}

/// `max |a_k|` over the upper half of the retained modes: the size of the
/// Gibbs oscillation left by truncating a steep profile.
pub fn truncation_level(phi: &CosineSeries) -> f64 {
    let m = phi.len();
    (m / 2 + 1..=m).map(|k| phi.coeff(k).abs()).fold(0.0, f64::max)
}

/// Monotonicity slack for a wave: [`MONOTONE_SLACK`], widened to the
/// truncation level once the profile is no longer resolved to rounding.
pub fn monotone_slack(phi: &CosineSeries) -> f64 {
    (-MONOTONE_SLACK).max(truncation_level(phi))
}

/// Whether the wave increases on `(-π, 0)` up to [`monotone_slack`].
pub fn is_monotone(problem: &SteadyProblem, phi: &CosineSeries) -> Result<bool> {
    Ok(monotone_with_slack(&problem.values(phi)?, monotone_slack(phi)))
}

/// Reason a candidate point is rejected, if any.
fn admissibility(problem: &SteadyProblem, point: &BranchPoint, previous_max: f64) -> Result<Option<String>> {
    if !is_monotone(problem, &point.phi)? {
        return Ok(Some("profile not monotone on (-pi, 0)".into()));
    }
    if point.max_value >= point.mu_eps {
        return Ok(Some(format!(
            "max {:.6e} at or above mu_eps {:.6e}",
            point.max_value, point.mu_eps
        )));
    }
    if point.max_value < previous_max {
        return Ok(Some(format!(
            "max value decreased from {previous_max:.6e} to {:.6e}",
            point.max_value
        )));
    }
    Ok(None)
}

fn crest_reached(point: &BranchPoint, margin: f64) -> bool {
    point.mu_eps - point.max_value < margin * point.mu_eps
}

/// Solves with the amplitude of the base mode pinned, starting from `guess`.
pub fn solve_at_amplitude(
    problem: &SteadyProblem,
    mode: usize,
    s: f64,
    phi: &CosineSeries,
    c: f64,
    options: NewtonOptions,
) -> Result<BranchPoint> {
    let mut guess = problem.conform(phi);
    guess.set(mode, s);
    problem
        .newton(&guess, c, &Constraint::FixAmplitude { mode, s }, options)
        .map(|r| r.point)
}

/// Starting pair for branch `k`: amplitude-pinned solves at `s0` and `2 s0`
/// seeded by the local expansion, or by a pure mode at `c = m(k)` when no
/// expansion exists.
pub fn branch_start(problem: &SteadyProblem, config: &ContinuationConfig) -> Result<(BranchPoint, BranchPoint)> {
    let k = config.mode;
    let options = config.newton_options();
    let seed = |s: f64| -> Result<(CosineSeries, f64)> {
        match local_predictor(k, s, problem) {
            Ok(p) => Ok((p.phi, p.c)),
            Err(Error::Unsupported(_)) => {
                Ok((CosineSeries::mode(k, s, problem.m), problem.symbol.multiplier(k as f64)))
            }
            Err(e) => Err(e),
        }
    };
    let (phi0, c0) = seed(config.s0)?;
    let first =
        solve_at_amplitude(problem, k, config.s0, &phi0, c0, options).map_err(|e| e.in_stage("branch start"))?;
    let s1 = 2.0 * config.s0;
    let (phi1, c1) = seed(s1)?;
    let second = solve_at_amplitude(problem, k, s1, &phi1, c1, options).map_err(|e| e.in_stage("branch start"))?;
    Ok((first, second))
}

/// Follows branch `config.mode` from its bifurcation point toward the crest.
pub fn branch_follow(problem: &SteadyProblem, config: &ContinuationConfig) -> Result<Branch> {
    config.validate()?;
    let (first, second) = branch_start(problem, config)?;
    continue_branch(problem, config, first, second)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Pseudo-arclength continuation from two consecutive solutions.
///
/// The secant through the last two accepted points gives predictor and
/// constraint row. A step is rejected (and `ds` halved) on Newton failure or
/// when the corrected wave fails the admissibility checks; after a fast
/// correction `ds` grows by 1.3.
pub fn continue_branch(
    problem: &SteadyProblem,
    config: &ContinuationConfig,
    first: BranchPoint,
    second: BranchPoint,
) -> Result<Branch> {
    config.validate()?;
    let options = config.newton_options();
    let mut diagnostics = Vec::new();
    let mut points = vec![first, second];
    for p in &points {
        if let Some(reason) = admissibility(problem, p, f64::NEG_INFINITY)? {
            return Err(Error::Convergence {
                iterations: 0,
                residual: p.residual_norm,
            }
            .in_stage(format!("start point rejected: {reason}")));
        }
    }
    if crest_reached(&points[1], config.crest_margin) {
        return Ok(Branch {
            points,
            terminated_reason: Termination::CrestReached,
            diagnostics,
        });
    }
    let mut ds = config.ds;
    let mut steps = 0;
    loop {
        if steps >= config.max_steps {
            diagnostics.push(format!("stopped after {steps} steps"));
            return Ok(Branch {
                points,
                terminated_reason: Termination::MaxSteps,
                diagnostics,
            });
        }
        steps += 1;
        let n = points.len();
        let u_prev = problem.pack(&points[n - 2].phi, points[n - 2].c);
        let u_last = problem.pack(&points[n - 1].phi, points[n - 1].c);
        let secant: Vec<f64> = u_last.iter().zip(&u_prev).map(|(a, b)| a - b).collect();
        let len = norm(&secant);
        if !(len > 0.0) {
            diagnostics.push("secant has zero length".into());
            return Ok(Branch {
                points,
                terminated_reason: Termination::Error,
                diagnostics,
            });
        }
        let tangent: Vec<f64> = secant.iter().map(|x| x / len).collect();
        let previous_max = points[n - 1].max_value;
        loop {
            let guess: Vec<f64> = u_last.iter().zip(&tangent).map(|(u, t)| u + ds * t).collect();
            let (phi_g, c_g) = problem.unpack(&guess);
            let constraint = Constraint::Arclength {
                tangent: tangent.clone(),
                anchor: u_last.clone(),
                ds,
            };
            let outcome = problem.newton(&phi_g, c_g, &constraint, options);
            let rejection = match outcome {
                Ok(report) => match admissibility(problem, &report.point, previous_max)? {
                    None => {
                        let fast = report.iterations <= 3;
                        let point = report.point;
                        let done = crest_reached(&point, config.crest_margin);
                        points.push(point);
                        if done {
                            return Ok(Branch {
                                points,
                                terminated_reason: Termination::CrestReached,
                                diagnostics,
                            });
                        }
                        if fast {
                            ds = (1.3 * ds).min(config.ds_max);
                        }
                        None
                    }
                    Some(reason) => Some(reason),
                },
                Err(e) => Some(e.to_string()),
            };
            match rejection {
                None => break,
                Some(reason) => {
                    log::debug!("step {steps}: rejected at ds = {ds:e}: {reason}");
                    ds *= 0.5;
                    if ds < config.ds_min {
                        diagnostics.push(format!(
                            "step floor {:e} reached after {} points; last rejection: {reason}",
                            config.ds_min,
                            points.len()
                        ));
                        return Ok(Branch {
                            points,
                            terminated_reason: Termination::StepFloor,
                            diagnostics,
                        });
                    }
                }
            }
        }
    }
}

/// One stage of the `ε`-homotopy.
#[derive(Debug, Clone)]
pub struct HomotopyStage {
    pub eps: f64,
    pub point: BranchPoint,
    pub branch_points: usize,
    pub terminated_reason: Termination,
    /// `|φ(0) - μ(p, c)| / μ(p, c)` against the unregularised crest value.
    pub crest_gap: f64,
}

#[derive(Debug)]
pub struct Homotopy {
    pub stages: Vec<HomotopyStage>,
    /// Stage and error that stopped the schedule early.
    pub failure: Option<(f64, Error)>,
}

/// Crest ratio `max φ / μ^ε` below which a branch point anchors the next
/// homotopy stage.
pub const HOMOTOPY_ANCHOR_RATIO: f64 = 0.8;
/// Smallest `|log ε|` step in a stage transfer.
const MIN_LOG_EPS_STEP: f64 = 1e-3;

/// Last point of `branch` with crest ratio at most [`HOMOTOPY_ANCHOR_RATIO`],
/// or the first point if none qualifies.
fn homotopy_anchor(branch: &Branch) -> &BranchPoint {
    branch
        .points
        .iter()
        .rev()
        .find(|p| p.max_value <= HOMOTOPY_ANCHOR_RATIO * p.mu_eps)
        .unwrap_or(&branch.points[0])
}

/// Carries `point` from `from` to `to` in `ε` at fixed base amplitude,
/// shrinking the geometric `ε` step after a failed solve.
fn transfer_eps(
    template: &SteadyProblem,
    config: &ContinuationConfig,
    point: &BranchPoint,
    from: f64,
    to: f64,
) -> Result<BranchPoint> {
    let options = config.newton_options();
    let mut current = point.clone();
    let mut eps = from;
    let mut log_step = (to / from).ln();
    loop {
        let remaining = (to / eps).ln();
        let next = if remaining.abs() <= log_step.abs() {
            to
        } else {
            eps * log_step.exp()
        };
        let problem = template.with_nonlinearity(template.nonlinearity.with_eps(next))?;
        match solve_at_amplitude(&problem, config.mode, current.s, &current.phi, current.c, options) {
            Ok(p) => {
                current = p;
                eps = next;
                if eps == to {
                    return Ok(current);
                }
            }
            Err(e) => {
                log_step *= 0.5;
                if log_step.abs() < MIN_LOG_EPS_STEP {
                    return Err(e);
                }
            }
        }
    }
}

/// Runs the branch at the first `ε`, then for each later `ε` carries a
/// well-resolved point of the previous branch to the new `ε` at fixed
/// amplitude and continues to the crest margin again.
pub fn eps_homotopy(template: &SteadyProblem, config: &ContinuationConfig) -> Result<Homotopy> {
    config.validate()?;
    if config.eps_schedule.is_empty() {
        return Err(Error::config("eps_schedule", "must not be empty"));
    }
    let mut stages: Vec<HomotopyStage> = Vec::new();
    let mut previous: Option<(f64, BranchPoint)> = None;
    let k = config.mode;
    let options = config.newton_options();
    for &eps in &config.eps_schedule {
        let stage = (|| -> Result<(HomotopyStage, BranchPoint)> {
            let problem = template.with_nonlinearity(template.nonlinearity.with_eps(eps))?;
            let branch = match &previous {
                None => branch_follow(&problem, config)?,
                Some((from, anchor)) => {
                    let anchor = transfer_eps(template, config, anchor, *from, eps)?;
                    let s = anchor.s;
                    let ds_back = (config.ds * 0.5).min(0.05 * s.abs());
                    let behind = solve_at_amplitude(&problem, k, s - ds_back, &anchor.phi, anchor.c, options)?;
                    continue_branch(&problem, config, behind, anchor)?
                }
            };
            let point = branch.last().cloned().expect("branch has points");
            let mu = NonlinearitySpec {
                eps: 0.0,
                ..problem.nonlinearity
            }
            .mu(point.c);
            let values = problem.values(&point.phi)?;
            let crest = values[problem.grid.origin_index()];
            let anchor = homotopy_anchor(&branch).clone();
            Ok((
                HomotopyStage {
                    eps,
                    crest_gap: (crest - mu).abs() / mu,
                    branch_points: branch.points.len(),
                    terminated_reason: branch.terminated_reason,
                    point,
                },
                anchor,
            ))
        })();
        match stage {
            Ok((s, anchor)) => {
                previous = Some((eps, anchor));
                stages.push(s);
            }
            Err(e) => {
                return Ok(Homotopy {
                    stages,
                    failure: Some((eps, e.in_stage(format!("eps = {eps:e}")))),
                })
            }
        }
    }
    Ok(Homotopy { stages, failure: None })
}

/// The `k`-branch image of a solution of the homogeneous problem:
/// `φ ↦ k^{-β} φ(k·)`, `c ↦ k^{-α} c`, `ε ↦ k^{-β} ε` with `β = α/(p-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rescaled {
    pub phi: CosineSeries,
    pub c: f64,
    pub eps: f64,
}

pub fn rescale(problem: &SteadyProblem, phi: &CosineSeries, c: f64, k: usize) -> Result<Rescaled> {
    if problem.symbol.family != SymbolFamily::NegOrder {
        return Err(Error::Unsupported("rescaling needs the homogeneous symbol".into()));
    }
    if k == 0 {
        return Err(Error::Domain {
            what: "scaling factor must be positive",
            value: 0.0,
        });
    }
    let alpha = problem.symbol.alpha;
    let beta = alpha / (problem.nonlinearity.p - 1.0);
    let kf = k as f64;
    let factor = kf.powf(-beta);
    let mut out = CosineSeries::zeros(phi.len() * k);
    for j in 1..=phi.len() {
        out.set(j * k, factor * phi.coeff(j));
    }
    Ok(Rescaled {
        phi: out,
        c: kf.powf(-alpha) * c,
        eps: factor * problem.nonlinearity.eps,
    })
}
