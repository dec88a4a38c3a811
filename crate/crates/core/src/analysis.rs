//! Post-hoc diagnostics on computed waves: cusp exponent fits, two-sided
//! `|x|^α` ratio checks, speed-bound, monotonicity and antisymmetry audits.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::continuation::monotone_slack;
use crate::error::{Error, Result};
use crate::kernel::{Kernel, KernelSpec};
use crate::spectral::{antisymmetry_defect, SymbolFamily};
use crate::steady::{BranchPoint, SteadyProblem};

/// Minimum number of nodes a fit window must contain.
pub const MIN_FIT_NODES: usize = 8;
/// Slack on the range condition `(n^ε)'(φ) ≤ c`.
pub const RANGE_SLACK: f64 = 1e-10;
/// Number of grid spacings spanned by the local crest fit.
pub const LOCAL_SPAN: usize = 12;
/// Trough gaps below this multiple of the monotonicity slack are dropped.
pub const TROUGH_RIPPLE_FACTOR: f64 = 10.0;

/// Diagnostics of one wave.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    /// Fitted crest exponent; absent when the window holds too few nodes.
    pub alpha_hat: Option<f64>,
    pub fit_window: (f64, f64),
    /// `(min, max)` of `(μ^ε - φ(x)) / |x|^α` over the window.
    pub ratio_bounds: (f64, f64),
    /// `c < p/(p-1) ‖K_α‖₁`; absent for symbols without a kernel.
    pub speed_bound_ok: Option<bool>,
    pub monotone_ok: bool,
    /// Slack allowed on first differences in the monotonicity check.
    pub monotone_slack: f64,
    /// `max |φ(x + π) + φ(x)|`; only for odd nonlinearities.
    pub antisymmetry_defect: Option<f64>,
    /// `μ^ε - φ(0)`.
    pub max_gap: f64,
    /// `(n^ε)'(φ) ≤ c + 1e-10` at every node.
    pub range_ok: bool,
    /// Exponent of `φ(0) - φ(x)` on the first grid spacings.
    pub crest_local_exponent: Option<f64>,
    /// Exponent at the trough: of `φ(-π + x) - φ(-π)` for even nonlinearities,
    /// of `φ(-π + x) + μ^ε` for odd ones.
    pub trough_exponent: Option<f64>,
    /// The window's `ε` dependence is heuristic.
    pub note: String,
}

/// Result of the one-sided bound `μ^ε - φ(x) ≳ |x|^α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBound {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub floor: f64,
    pub passed: bool,
}

/// Dispersion order used for `|x|^α` normalisation.
fn order(problem: &SteadyProblem) -> f64 {
    problem.symbol.alpha
}

/// `(max(4h, 2ε^{1/α}), π/8)`.
pub fn auto_window(problem: &SteadyProblem) -> (f64, f64) {
    let h = problem.grid.spacing();
    let eps = problem.nonlinearity.eps;
    let alpha = order(problem);
    let regularised = if eps > 0.0 { 2.0 * eps.powf(1.0 / alpha) } else { 0.0 };
    ((4.0 * h).max(regularised), PI / 8.0)
}

/// Least-squares slope of `log gap` against `log x`.
///
/// Needs at least [`MIN_FIT_NODES`] samples with positive `x` and `gap`.
pub fn fit_exponent(xs: &[f64], gaps: &[f64]) -> Result<f64> {
    if xs.len() != gaps.len() {
        return Err(Error::Domain {
            what: "abscissae and gaps differ in length",
            value: gaps.len() as f64,
        });
    }
    if xs.len() < MIN_FIT_NODES {
        return Err(Error::InsufficientData {
            nodes: xs.len(),
            required: MIN_FIT_NODES,
        });
    }
    let mut points = Vec::with_capacity(xs.len());
    for (&x, &g) in xs.iter().zip(gaps) {
        if !(x > 0.0 && g > 0.0) {
            return Err(Error::Domain {
                what: "fit needs positive abscissae and gaps",
                value: if x > 0.0 { g } else { x },
            });
        }
        points.push((x.ln(), g.ln()));
    }
    let n = points.len() as f64;
    let (mx, my) = points.iter().fold((0.0, 0.0), |(a, b), (u, v)| (a + u / n, b + v / n));
    let (sxy, sxx) = points.iter().fold((0.0, 0.0), |(a, b), (u, v)| {
        (a + (u - mx) * (v - my), b + (u - mx) * (u - mx))
    });
    Ok(sxy / sxx)
}

fn check_window(window: (f64, f64), limit: f64) -> Result<()> {
    let (lo, hi) = window;
    if !(lo > 0.0 && lo < hi && hi <= limit) {
        return Err(Error::Domain {
            what: "fit window must satisfy 0 < lo < hi within the allowed range",
            value: if lo > 0.0 { hi } else { lo },
        });
    }
    Ok(())
}

/// `(x_j, φ(x_j))` at nodes `x_j ∈ [lo, hi]` right of the origin.
fn crest_samples(problem: &SteadyProblem, values: &[f64], window: (f64, f64)) -> (Vec<f64>, Vec<f64>) {
    let grid = &problem.grid;
    let origin = grid.origin_index();
    (origin + 1..grid.n())
        .map(|j| (grid.node(j), values[j]))
        .filter(|(x, _)| *x >= window.0 && *x <= window.1)
        .unzip()
}

/// Slope of `log(μ^ε - φ(x))` against `log x` over grid nodes in `window`.
///
/// The window must lie in `(0, π/4]`; the fit is meaningful for near-crest
/// waves.
pub fn cusp_exponent_fit(wave: &BranchPoint, problem: &SteadyProblem, window: (f64, f64)) -> Result<f64> {
    check_window(window, PI / 4.0)?;
    let values = problem.values(&wave.phi)?;
    let (xs, phi) = crest_samples(problem, &values, window);
    let gaps: Vec<f64> = phi.iter().map(|v| wave.mu_eps - v).collect();
    fit_exponent(&xs, &gaps)
}

/// Exponent of `φ(0) - φ(x)` over the first [`LOCAL_SPAN`] grid spacings:
/// about 2 for a smooth crest.
pub fn crest_local_exponent(wave: &BranchPoint, problem: &SteadyProblem) -> Result<f64> {
    let values = problem.values(&wave.phi)?;
    let origin = problem.grid.origin_index();
    let top = values[origin];
    let (xs, gaps): (Vec<f64>, Vec<f64>) = (1..=LOCAL_SPAN)
        .map(|i| (problem.grid.node(origin + i), top - values[origin + i]))
        .unzip();
    fit_exponent(&xs, &gaps)
}

/// Exponent at the trough over `window` (offsets from `-π`), skipping
/// nodes whose gap is within [`TROUGH_RIPPLE_FACTOR`] truncation levels.
///
/// Even nonlinearities: `φ(-π + x) - φ(-π)`, above 1.5 for a smooth trough.
/// Odd nonlinearities: `φ(-π + x) + μ^ε`, the mirrored crest gap.
pub fn trough_exponent(wave: &BranchPoint, problem: &SteadyProblem, window: (f64, f64)) -> Result<f64> {
    check_window(window, PI / 4.0)?;
    let values = problem.values(&wave.phi)?;
    let reference = if problem.nonlinearity.is_odd() {
        -wave.mu_eps
    } else {
        values[0]
    };
    let h = problem.grid.spacing();
    // gaps within the truncation ripple carry no slope information
    let floor = TROUGH_RIPPLE_FACTOR * monotone_slack(&wave.phi);
    let (xs, gaps): (Vec<f64>, Vec<f64>) = (1..problem.grid.origin_index())
        .map(|j| (j as f64 * h, values[j] - reference))
        .filter(|(x, g)| *x >= window.0 && *x <= window.1 && *g > floor)
        .unzip();
    fit_exponent(&xs, &gaps)
}

/// `(min, max)` of `(μ^ε - φ(x)) / x^α` over nodes in `window`.
pub fn ratio_bounds(wave: &BranchPoint, problem: &SteadyProblem, window: (f64, f64)) -> Result<(f64, f64)> {
    check_window(window, PI)?;
    let alpha = order(problem);
    let values = problem.values(&wave.phi)?;
    let (xs, phi) = crest_samples(problem, &values, window);
    if xs.is_empty() {
        return Err(Error::InsufficientData { nodes: 0, required: 1 });
    }
    Ok(xs
        .iter()
        .zip(&phi)
        .map(|(x, v)| (wave.mu_eps - v) / x.powf(alpha))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r))))
}

/// Checks `min (μ^ε - φ(x)) / x^α ≥ floor` over `window`.
pub fn lower_bound_check(
    wave: &BranchPoint,
    problem: &SteadyProblem,
    window: (f64, f64),
    floor: f64,
) -> Result<LowerBound> {
    let (min_ratio, max_ratio) = ratio_bounds(wave, problem, window)?;
    Ok(LowerBound {
        min_ratio,
        max_ratio,
        floor,
        passed: min_ratio >= floor,
    })
}

/// `‖K_α‖₁` for the negative-order family.
pub fn kernel_norm(problem: &SteadyProblem) -> Option<f64> {
    if problem.symbol.family != SymbolFamily::NegOrder {
        return None;
    }
    let kernel = Kernel::new(KernelSpec::new(problem.symbol.alpha)).ok()?;
    kernel.l1_norm().ok().map(|e| e.value)
}

/// Full audit; never fails. Computes `‖K_α‖₁` when the symbol has a kernel.
pub fn wave_audit(wave: &BranchPoint, problem: &SteadyProblem) -> RegularityReport {
    wave_audit_with_norm(wave, problem, kernel_norm(problem))
}

/// [`wave_audit`] with a precomputed `‖K_α‖₁`.
pub fn wave_audit_with_norm(wave: &BranchPoint, problem: &SteadyProblem, kernel_l1: Option<f64>) -> RegularityReport {
    let window = auto_window(problem);
    let nl = &problem.nonlinearity;
    let values = problem.values(&wave.phi).unwrap_or_default();
    let origin = problem.grid.origin_index();
    let crest = values.get(origin).copied().unwrap_or(f64::NAN);
    let slack = monotone_slack(&wave.phi);
    let monotone_ok = values.len() > origin && values[..=origin].windows(2).all(|w| w[1] - w[0] >= -slack);
    let range_ok = !values.is_empty() && values.iter().all(|&v| nl.d1(v) <= wave.c + RANGE_SLACK);
    let speed_bound_ok = kernel_l1.map(|norm| wave.c < nl.p / (nl.p - 1.0) * norm);
    let antisymmetry = if nl.is_odd() && !values.is_empty() {
        Some(antisymmetry_defect(&values))
    } else {
        None
    };
    RegularityReport {
        alpha_hat: cusp_exponent_fit(wave, problem, window).ok(),
        fit_window: window,
        ratio_bounds: ratio_bounds(wave, problem, window).unwrap_or((f64::NAN, f64::NAN)),
        speed_bound_ok,
        monotone_ok,
        monotone_slack: slack,
        antisymmetry_defect: antisymmetry,
        max_gap: wave.mu_eps - crest,
        range_ok,
        crest_local_exponent: crest_local_exponent(wave, problem).ok(),
        trough_exponent: trough_exponent(wave, problem, window).ok(),
        note: format!(
            "fit window lower edge max(4h, 2 eps^(1/alpha)) is a heuristic; eps = {:e}",
            nl.eps
        ),
    }
}
