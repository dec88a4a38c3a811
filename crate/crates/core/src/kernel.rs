//! The periodic convolution kernel of `|D|^{-α}`,
//! `K_α(x) = (1/π) Σ_{k≥1} k^{-α} cos(kx)`.
//!
//! Values come from the Laplace-type representation
//!
//! ```text
//! K_α(x) = 1/(π Γ(α)) ∫_0^∞ t^{α-1} (e^t cos x - 1) / (1 - 2 e^t cos x + e^{2t}) dt
//! ```
//!
//! integrated on panels: a Gauss–Jacobi panel on `(0, τ₀)` carrying the
//! `t^{α-1}` weight, geometrically graded Gauss–Legendre panels up to
//! `t_split`, then doubling panels up to `t_max`. The exponential tail beyond
//! `t_max` is bounded and folded into the error estimate. The Fourier series
//! itself is kept as an independent oracle.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::quadrature::{JacobiPair, LegendrePair};

pub use crate::quadrature::Estimate;

/// Parameters controlling how `K_α` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub alpha: f64,
    /// Gauss nodes per panel (the refinement pass uses twice as many).
    pub quad_nodes: usize,
    /// End of the graded panels near `t = 0`.
    pub t_split: f64,
    /// Truncation point of the `t`-integral.
    pub t_max: f64,
    /// Number of terms for the Fourier-series oracle.
    pub fourier_terms: usize,
    /// Relative tolerance on the error estimate of every returned value.
    pub tolerance: f64,
}

impl KernelSpec {
    pub fn new(alpha: f64) -> Self {
        KernelSpec {
            alpha,
            quad_nodes: 20,
            t_split: 1.0,
            t_max: 40.0,
            fourier_terms: 1_000_000,
            tolerance: 1e-9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::Domain {
                what: "alpha must be positive",
                value: self.alpha,
            });
        }
        if self.quad_nodes < 4 {
            return Err(Error::Domain {
                what: "quad_nodes must be at least 4",
                value: self.quad_nodes as f64,
            });
        }
        if !(self.t_split > 0.0 && self.t_split < self.t_max && self.t_max.is_finite()) {
            return Err(Error::Domain {
                what: "need 0 < t_split < t_max",
                value: self.t_split,
            });
        }
        if self.fourier_terms == 0 {
            return Err(Error::Domain {
                what: "fourier_terms must be positive",
                value: 0.0,
            });
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Domain {
                what: "tolerance must be positive",
                value: self.tolerance,
            });
        }
        Ok(())
    }
}

/// `γ_α = 1 / (2 Γ(α) sin(π(1-α)/2))`, the coefficient of `|x|^{α-1}` in the
/// kernel of `|D|^{-α}` on the line.
pub fn gamma_coefficient(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain {
            what: "singular-part coefficient needs alpha in (0, 1)",
            value: alpha,
        });
    }
    Ok(1.0 / (2.0 * libm::tgamma(alpha) * (0.5 * PI * (1.0 - alpha)).sin()))
}

/// `K_1(x) = -(1/2π) log(2(1 - cos x))`.
pub fn kernel_alpha_one(x: f64) -> f64 {
    let half_sin = (0.5 * x).sin();
    // 2(1 - cos x) = 4 sin²(x/2)
    -(1.0 / (2.0 * PI)) * (4.0 * half_sin * half_sin).ln()
}

/// Reduces `x` to `(-π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    if x > -PI && x <= PI {
        return x;
    }
    let mut r = x.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    r
}

/// Truncated Fourier series with its truncation and rounding bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierSum {
    pub value: f64,
    /// Bound on `|(1/π) Σ_{k>M} k^{-α} cos(kx)|` from summation by parts.
    pub tail_bound: f64,
    pub rounding: f64,
}

impl FourierSum {
    pub fn error(&self) -> f64 {
        self.tail_bound + self.rounding
    }
}

/// `(1/π) Σ_{k=1}^{M} k^{-α} cos(kx)` by direct compensated summation.
///
/// The series converges only conditionally; the truncation error decays like
/// `M^{-α} / |sin(x/2)|` and is reported in `tail_bound`.
pub fn kernel_fourier_sum(alpha: f64, x: f64, terms: usize) -> Result<FourierSum> {
    let half_sin = (0.5 * x).sin().abs();
    if half_sin == 0.0 {
        return Err(Error::Singularity { x });
    }
    let terms = terms.max(1);
    let (mut sum, mut comp, mut abs) = (0.0f64, 0.0f64, 0.0f64);
    for k in 1..=terms {
        let kf = k as f64;
        let term = kf.powf(-alpha) * (kf * x).cos();
        // Neumaier summation
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
        abs += term.abs();
    }
    let tail = ((terms + 1) as f64).powf(-alpha) / half_sin;
    Ok(FourierSum {
        value: (sum + comp) / PI,
        tail_bound: tail / PI,
        rounding: 4.0 * f64::EPSILON * abs / PI,
    })
}

/// Fourier sum with an explicit tail correction obtained by `order`-fold
/// summation by parts (series acceleration, not a plain truncation).
///
/// The returned error bounds the remainder after the correction plus
/// rounding. Requires `terms >= 1000` so the forward differences of
/// `k^{-α}` can be taken from their binomial expansion without cancellation.
pub fn kernel_fourier_sum_accelerated(alpha: f64, x: f64, terms: usize, order: usize) -> Result<Estimate> {
    if terms < 1000 {
        return Err(Error::Domain {
            what: "accelerated sum needs at least 1000 terms",
            value: terms as f64,
        });
    }
    if order == 0 {
        return Err(Error::Domain {
            what: "acceleration order must be positive",
            value: 0.0,
        });
    }
    let direct = kernel_fourier_sum(alpha, x, terms)?;
    let start = (terms + 1) as f64;
    // z = e^{ix}; T = Σ_j (z/(1-z))^j z^{M+1}/(1-z) Δ^j f(M+1)
    let (zr, zi) = (x.cos(), x.sin());
    let (dr, di) = (1.0 - zr, -zi);
    let dn = dr * dr + di * di;
    // 1/(1-z)
    let (ir, ii) = (dr / dn, -di / dn);
    // z/(1-z)
    let (qr, qi) = (zr * ir - zi * ii, zr * ii + zi * ir);
    let phase = start * x;
    // z^{M+1}/(1-z)
    let (mut wr, mut wi) = (phase.cos() * ir - phase.sin() * ii, phase.cos() * ii + phase.sin() * ir);
    let mut tail = 0.0;
    let mut last_diff = 0.0;
    for j in 0..order {
        let diff = forward_difference_power(alpha, start, j);
        tail += wr * diff;
        last_diff = diff;
        let nr = wr * qr - wi * qi;
        wi = wr * qi + wi * qr;
        wr = nr;
    }
    let ratio = 1.0 / (2.0 * (0.5 * x).sin().abs());
    // |Σ_{k>M} Δ^J f(k) z^k| ≤ |Δ^{J-1} f(M+1)| for completely monotone f
    let remainder = ratio.powi(order as i32) * last_diff.abs();
    Ok(Estimate::new(
        direct.value + tail / PI,
        direct.rounding + remainder / PI,
    ))
}

/// `Δ^j f(m)` for `f(k) = k^{-α}`, from
/// `Δ^j f(m) = m^{-α} Σ_{r≥j} binom(-α, r) j! S(r, j) m^{-r}`.
fn forward_difference_power(alpha: f64, m: f64, j: usize) -> f64 {
    const EXTRA: usize = 10;
    let rmax = j + EXTRA;
    // Stirling numbers of the second kind S(r, j) for r ≤ rmax.
    let mut stirling = vec![vec![0.0f64; j + 1]; rmax + 1];
    stirling[0][0] = 1.0;
    for r in 1..=rmax {
        for i in 1..=j.min(r) {
            stirling[r][i] = i as f64 * stirling[r - 1][i] + stirling[r - 1][i - 1];
        }
    }
    let factorial: f64 = (1..=j).map(|i| i as f64).product();
    let mut binom = 1.0; // binom(-α, r)
    let mut sum = 0.0;
    for (r, row) in stirling.iter().enumerate() {
        if r > 0 {
            binom *= (-alpha - (r as f64 - 1.0)) / r as f64;
        }
        if r >= j {
            sum += binom * factorial * row[j] * m.powi(-(r as i32));
        }
    }
    m.powf(-alpha) * sum
}

/// Singular/regular split `K_α = γ_α |x|^{α-1} + K_{α,reg}` at one abscissa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposed {
    pub singular: f64,
    pub regular: f64,
    /// Error estimate inherited from the kernel value.
    pub error: f64,
}

/// Decomposition data: `γ_α` plus sampled regular part.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelDecomposition {
    pub gamma_alpha: f64,
    pub regular_at: Vec<(f64, f64)>,
}

/// One row of a kernel table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelRow {
    pub x: f64,
    pub value: f64,
    pub singular: f64,
    pub regular: f64,
}

/// Kernel evaluator with quadrature rules prepared for one `α`.
#[derive(Debug, Clone)]
pub struct Kernel {
    spec: KernelSpec,
    weighted: JacobiPair,
    plain: LegendrePair,
    gamma_fn: f64,
    gamma_alpha: Option<f64>,
}

/// Near-origin cut used when splitting off the singular part.
const SINGULAR_CUT: f64 = 0.5;
const MAX_DEPTH: usize = 30;

impl Kernel {
    pub fn new(spec: KernelSpec) -> Result<Self> {
        spec.validate()?;
        let gamma_alpha = if spec.alpha < 1.0 {
            Some(gamma_coefficient(spec.alpha)?)
        } else {
            None
        };
        Ok(Kernel {
            spec,
            weighted: JacobiPair::new(spec.quad_nodes, spec.alpha - 1.0),
            plain: LegendrePair::new(spec.quad_nodes),
            gamma_fn: libm::tgamma(spec.alpha),
            gamma_alpha,
        })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn alpha(&self) -> f64 {
        self.spec.alpha
    }

    /// `γ_α` when `α < 1`.
    pub fn gamma_alpha(&self) -> Option<f64> {
        self.gamma_alpha
    }

    fn check(&self, est: Estimate) -> Result<Estimate> {
        let tolerance = self.spec.tolerance * est.value.abs().max(1.0);
        if est.error > tolerance || !est.value.is_finite() {
            return Err(Error::Accuracy {
                estimate: est.error,
                tolerance,
            });
        }
        Ok(est)
    }

    /// `K_α(x)`. `α = 1` uses the closed form.
    pub fn eval(&self, x: f64) -> Result<Estimate> {
        if self.spec.alpha == 1.0 {
            let r = wrap_angle(x);
            if r == 0.0 {
                return Err(Error::Singularity { x });
            }
            let v = kernel_alpha_one(r);
            return Ok(Estimate::new(v, 4.0 * f64::EPSILON * v.abs().max(1.0)));
        }
        match self.gamma_alpha {
            Some(gamma) => {
                let d = self.split(x, gamma)?;
                Ok(Estimate::new(d.singular + d.regular, d.error))
            }
            None => self.eval_quadrature(x),
        }
    }

    /// Quadrature value split into `γ_α|x|^{α-1}` and the rest; [`Kernel::eval`]
    /// reports their sum so the two pieces add up to it exactly.
    fn split(&self, x: f64, gamma: f64) -> Result<Decomposed> {
        let k = self.eval_quadrature(x)?;
        let singular = gamma * wrap_angle(x).abs().powf(self.spec.alpha - 1.0);
        Ok(Decomposed {
            singular,
            regular: k.value - singular,
            error: k.error,
        })
    }

    /// `K_α(x)` through the integral representation for every `α`.
    pub fn eval_quadrature(&self, x: f64) -> Result<Estimate> {
        let r = wrap_angle(x);
        if r == 0.0 {
            return Err(Error::Singularity { x });
        }
        let sigma = {
            let s = (0.5 * r).sin();
            2.0 * s * s
        };
        // (e^t cos x - 1)/(1 - 2 e^t cos x + e^{2t}) with e^t - 1 kept exact
        let h = |t: f64| {
            let em = t.exp_m1();
            (em - (1.0 + em) * sigma) / (em * em + 2.0 * (1.0 + em) * sigma)
        };
        let raw = self.t_integral(r, h)?;
        let scale = 1.0 / (PI * self.gamma_fn);
        self.check(raw * scale)
    }

    /// `K_α'(x)` from the differentiated representation.
    pub fn derivative(&self, x: f64) -> Result<Estimate> {
        let r = wrap_angle(x);
        if r == 0.0 {
            return Err(Error::Singularity { x });
        }
        if self.spec.alpha == 1.0 {
            let v = -0.5 / PI / (0.5 * r).tan();
            return Ok(Estimate::new(v, 4.0 * f64::EPSILON * v.abs().max(1.0)));
        }
        let sigma = {
            let s = (0.5 * r).sin();
            2.0 * s * s
        };
        let h = |t: f64| {
            let em = t.exp_m1();
            let den = em * em + 2.0 * (1.0 + em) * sigma;
            (1.0 + em) * em * (em + 2.0) / (den * den)
        };
        let raw = self.t_integral(r, h)?;
        let scale = -r.sin() / (PI * self.gamma_fn);
        self.check(raw * scale)
    }

    /// `∫_0^{t_max} t^{α-1} h(t) dt` plus a bound on the truncated tail, for
    /// an integrand bounded by `2 e^{-t}` at large `t`.
    fn t_integral(&self, r: f64, h: impl Fn(f64) -> f64) -> Result<Estimate> {
        let alpha = self.spec.alpha;
        let t_split = self.spec.t_split;
        let t_max = self.spec.t_max;
        // scale of the near-origin feature: |1 - e^{ix}|
        let scale = 2.0 * (0.5 * r).sin().abs();
        let tau0 = scale.min(t_split);
        let mut total = self.weighted.panel(tau0, &h);
        let weight = |t: f64| t.powf(alpha - 1.0);
        let mut a = tau0;
        while a < t_split {
            let b = (2.0 * a).min(t_split);
            total += self.plain.panel(a, b, |t| weight(t) * h(t));
            a = b;
        }
        let mut a = t_split;
        let mut width = t_split;
        while a < t_max {
            let b = (a + width).min(t_max);
            total += self.plain.panel(a, b, |t| weight(t) * h(t));
            a = b;
            width *= 2.0;
        }
        total.error += tail_bound(alpha, t_max);
        Ok(total)
    }

    /// `K_α(x) = γ_α|x|^{α-1} + K_{α,reg}(x)` on `(-π, π) \ {0}`.
    pub fn decompose(&self, x: f64) -> Result<Decomposed> {
        let gamma = self.gamma_alpha.ok_or(Error::Domain {
            what: "decomposition needs alpha in (0, 1)",
            value: self.spec.alpha,
        })?;
        if !(x > -PI && x < PI) || x == 0.0 {
            return Err(Error::Domain {
                what: "decomposition abscissa must lie in (-pi, pi) without 0",
                value: x,
            });
        }
        self.split(x, gamma)
    }

    /// `γ_α` with the regular part sampled at `points`.
    pub fn decomposition(&self, points: &[f64]) -> Result<KernelDecomposition> {
        let gamma_alpha = self.gamma_alpha.ok_or(Error::Domain {
            what: "decomposition needs alpha in (0, 1)",
            value: self.spec.alpha,
        })?;
        let regular_at = points
            .iter()
            .map(|&x| self.decompose(x).map(|d| (x, d.regular)))
            .collect::<Result<Vec<_>>>()?;
        Ok(KernelDecomposition {
            gamma_alpha,
            regular_at,
        })
    }

    /// Direct Fourier sum with the configured number of terms.
    pub fn fourier_sum(&self, x: f64) -> Result<FourierSum> {
        kernel_fourier_sum(self.spec.alpha, x, self.spec.fourier_terms)
    }

    /// `∫_0^π K_α(z) g(z) dz` for a smooth `g`.
    ///
    /// For `α < 1` the piece `γ_α z^{α-1}` on `(0, 1/2)` is integrated with
    /// the Jacobi weight and the regular remainder with Legendre panels; for
    /// `α ≥ 1` panels are graded geometrically towards the origin.
    pub fn integrate_against(&self, mut g: impl FnMut(f64) -> f64) -> Result<Estimate> {
        let tol = self.spec.tolerance;
        let mut kernel = |z: f64| self.eval(z).map(|e| e.value);
        let mut first_error: Option<Error> = None;
        let mut guarded = |z: f64, kern: &mut dyn FnMut(f64) -> Result<f64>| match kern(z) {
            Ok(v) => v,
            Err(e) => {
                first_error.get_or_insert(e);
                0.0
            }
        };
        let mut total;
        match self.gamma_alpha {
            Some(gamma) => {
                let alpha = self.spec.alpha;
                total = self.weighted.panel(SINGULAR_CUT, &mut g) * gamma;
                total += self.plain.adaptive(0.0, SINGULAR_CUT, tol, MAX_DEPTH, &mut |z| {
                    let k = guarded(z, &mut kernel);
                    (k - gamma * z.powf(alpha - 1.0)) * g(z)
                });
            }
            None => {
                total = Estimate::ZERO;
                let mut b = SINGULAR_CUT;
                let floor = 1e-40;
                while b > floor {
                    let a = 0.5 * b;
                    total += self
                        .plain
                        .adaptive(a, b, tol, MAX_DEPTH, &mut |z| guarded(z, &mut kernel) * g(z));
                    b = a;
                }
                // |K| ≤ (1/π)(|log z| + 1) near 0 for α = 1, bounded for α > 1
                let gmax = g(0.0).abs().max(1.0);
                total.error += gmax * b * (b.ln().abs() + 2.0);
            }
        }
        total += self.plain.adaptive(SINGULAR_CUT, PI, tol, MAX_DEPTH, &mut |z| {
            guarded(z, &mut kernel) * g(z)
        });
        if let Some(e) = first_error {
            return Err(e);
        }
        Ok(total)
    }

    /// `∫_T K_α(x) cos(kx) dx`, the Fourier multiplier of convolution with
    /// `K_α`; equals `k^{-α}` for `k ≥ 1` and 0 for `k = 0`.
    pub fn cosine_moment(&self, k: u32) -> Result<Estimate> {
        let kf = k as f64;
        let est = self.integrate_against(|z| (kf * z).cos())?;
        Ok(est * 2.0)
    }

    /// `(K_α * f)(x) = ∫_T K_α(x - y) f(y) dy` for a smooth periodic `f`.
    pub fn convolve(&self, f: impl Fn(f64) -> f64, x: f64) -> Result<Estimate> {
        self.integrate_against(|z| f(x - z) + f(x + z))
    }

    /// The unique zero of `K_α` on `(0, π)`, by bisection.
    pub fn zero_crossing(&self) -> Result<f64> {
        let mut lo = 1e-6f64;
        let mut hi = PI;
        while self.eval(lo)?.value <= 0.0 {
            lo *= 1e-3;
            if lo < 1e-300 {
                return Err(Error::RootFind("kernel not positive near the origin".into()));
            }
        }
        if self.eval(hi)?.value >= 0.0 {
            return Err(Error::RootFind("kernel not negative at pi".into()));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= 4.0 * f64::EPSILON * mid {
                break;
            }
            if self.eval(mid)?.value > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// `‖K_α‖_{L¹(T)}`.
    ///
    /// Near the origin the singular part is integrated in closed form
    /// (`∫_{-δ}^{δ} γ_α|x|^{α-1} = 2γ_α δ^α/α`); elsewhere `|K_α|` is integrated
    /// adaptively on either side of its zero.
    pub fn l1_norm(&self) -> Result<Estimate> {
        let tol = self.spec.tolerance;
        let root = self.zero_crossing()?;
        // largest sample error relative to max(1, |K|)
        let worst = std::cell::Cell::new(0.0f64);
        let kernel = |z: f64| {
            self.eval(z).map(|e| {
                worst.set(worst.get().max(e.error / e.value.abs().max(1.0)));
                e.value
            })
        };
        let mut first_error: Option<Error> = None;
        let mut value = |z: f64| match kernel(z) {
            Ok(v) => v,
            Err(e) => {
                first_error.get_or_insert(e);
                0.0
            }
        };
        let delta = (0.5 * root).min(SINGULAR_CUT);
        let mut positive = match self.gamma_alpha {
            Some(gamma) => {
                let alpha = self.spec.alpha;
                let analytic = gamma * delta.powf(alpha) / alpha;
                Estimate::new(analytic, 4.0 * f64::EPSILON * analytic)
                    + self.plain.adaptive(0.0, delta, tol, MAX_DEPTH, &mut |z| {
                        value(z) - gamma * z.powf(alpha - 1.0)
                    })
            }
            None => {
                let mut acc = Estimate::ZERO;
                let mut b = delta;
                while b > 1e-40 {
                    let a = 0.5 * b;
                    acc += self.plain.adaptive(a, b, tol, MAX_DEPTH, &mut value);
                    b = a;
                }
                acc.error += b * (b.ln().abs() + 2.0);
                acc
            }
        };
        positive += self.plain.adaptive(delta, root, tol, MAX_DEPTH, &mut value);
        let negative = self.plain.adaptive(root, PI, tol, MAX_DEPTH, &mut value);
        if let Some(e) = first_error {
            return Err(e);
        }
        let value = 2.0 * (positive.value - negative.value);
        let sampling = worst.get() * (TAU + value);
        let total = Estimate::new(value, 2.0 * (positive.error + negative.error) + sampling);
        self.check(total)
    }

    /// Rows `(x, K_α, singular, regular)` at `nodes` equispaced points of
    /// `(-π, π)` that avoid the origin.
    pub fn table(&self, nodes: usize) -> Result<Vec<KernelRow>> {
        let mut rows = Vec::with_capacity(nodes);
        for x in table_abscissae(nodes) {
            let value = self.eval(x)?.value;
            let (singular, regular) = match self.gamma_alpha {
                Some(gamma) => {
                    let s = gamma * x.abs().powf(self.spec.alpha - 1.0);
                    (s, value - s)
                }
                None if self.spec.alpha == 1.0 => {
                    let s = -x.abs().ln() / PI;
                    (s, value - s)
                }
                None => (0.0, value),
            };
            rows.push(KernelRow {
                x,
                value,
                singular,
                regular,
            });
        }
        Ok(rows)
    }
}

/// Midpoints of `nodes` equal cells on `(-π, π)`, skipping any point at 0.
pub fn table_abscissae(nodes: usize) -> Vec<f64> {
    let h = TAU / nodes as f64;
    (0..nodes)
        .map(|j| -PI + h * (j as f64 + 0.5))
        .filter(|&x| x != 0.0 && x.abs() > 1e-15)
        .collect()
}

/// `∫_T^∞ t^{α-1} 2e^{-t} dt` bounded by `2 T^{α-1} e^{-T} / (1 - (α-1)/T)`.
fn tail_bound(alpha: f64, t_max: f64) -> f64 {
    let a = alpha - 1.0;
    let shrink = if a > 0.0 { 1.0 - a / t_max } else { 1.0 };
    if shrink <= 0.0 {
        return f64::INFINITY;
    }
    2.0 * t_max.powf(a) * (-t_max).exp() / shrink
}

/// `K_α(x)` with a default [`KernelSpec`] for `α`.
pub fn kernel_eval(spec: &KernelSpec, x: f64) -> Result<Estimate> {
    Kernel::new(*spec)?.eval(x)
}

pub fn kernel_decompose(spec: &KernelSpec, x: f64) -> Result<Decomposed> {
    Kernel::new(*spec)?.decompose(x)
}

pub fn kernel_l1_norm(spec: &KernelSpec) -> Result<Estimate> {
    Kernel::new(*spec)?.l1_norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kernel(alpha: f64) -> Kernel {
        Kernel::new(KernelSpec::new(alpha)).unwrap()
    }

    #[test]
    fn gamma_at_one_half_is_inverse_sqrt_two_pi() {
        // Γ(1/2) = √π and sin(π/4) = 1/√2 give γ^{-1} = √(2π)
        let g = gamma_coefficient(0.5).unwrap();
        assert!((g - 1.0 / TAU.sqrt()).abs() < 1e-14);
        assert!((g - 0.398_942_3).abs() < 1e-7);
    }

    #[test]
    fn gamma_is_monotone_with_limits() {
        let samples: Vec<f64> = (1..100).map(|i| gamma_coefficient(i as f64 / 100.0).unwrap()).collect();
        assert!(samples.windows(2).all(|w| w[1] > w[0]));
        assert!(gamma_coefficient(1e-6).unwrap() < 1e-5);
        assert!(gamma_coefficient(1.0 - 1e-6).unwrap() > 1e4);
    }

    #[test]
    fn gamma_rejects_out_of_range() {
        for a in [0.0, 1.0, -0.5, 1.5, f64::NAN] {
            assert!(matches!(gamma_coefficient(a), Err(Error::Domain { .. })));
        }
    }

    #[test]
    fn alpha_one_at_pi() {
        let v = kernel(1.0).eval(PI).unwrap().value;
        assert!((v + 4f64.ln() / TAU).abs() < 1e-15);
        assert!((v + 0.220_635_6).abs() < 1e-7);
        let q = kernel(1.0).eval_quadrature(PI).unwrap();
        assert!((q.value - v).abs() < 1e-12, "{} vs {v}", q.value);
    }

    #[test]
    fn singular_point_is_rejected() {
        let k = kernel(0.5);
        assert!(matches!(k.eval(0.0), Err(Error::Singularity { .. })));
        assert!(matches!(k.eval(TAU), Err(Error::Singularity { .. })));
        assert!(matches!(k.eval(-2.0 * TAU), Err(Error::Singularity { .. })));
        assert!(kernel_fourier_sum(0.5, 0.0, 10).is_err());
    }

    #[test]
    fn kernel_is_even() {
        let k = kernel(0.37);
        for x in [0.01, 0.3, 1.7, 3.0] {
            assert_eq!(k.eval(x).unwrap().value, k.eval(-x).unwrap().value);
        }
        let a = kernel_fourier_sum(0.4, 0.8, 500).unwrap();
        let b = kernel_fourier_sum(0.4, -0.8, 500).unwrap();
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn accelerated_sum_matches_quadrature_at_small_x() {
        // the direct sum with 10^7 terms would still be off by ~1e-3 here
        let k = kernel(0.5);
        let quad = k.eval(0.1).unwrap();
        let acc = kernel_fourier_sum_accelerated(0.5, 0.1, 100_000, 4).unwrap();
        assert!((quad.value - acc.value).abs() < 1e-7, "{} vs {}", quad.value, acc.value);
        assert!((quad.value - acc.value).abs() <= quad.error + acc.error + 1e-12);
    }

    #[test]
    fn alpha_one_fourier_sum_approaches_closed_form() {
        let exact = -4f64.ln() / TAU;
        let s = kernel_fourier_sum(1.0, PI, 200_000).unwrap();
        assert!((s.value - exact).abs() <= s.error());
        assert!((s.value - exact).abs() < 1e-5);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let k = kernel(0.6);
        for x in [-2.5, -1.0, -0.2, 0.4, 2.0] {
            let h = 1e-5;
            let fd = (k.eval(x + h).unwrap().value - k.eval(x - h).unwrap().value) / (2.0 * h);
            let d = k.derivative(x).unwrap().value;
            assert!((fd - d).abs() < 1e-6 * d.abs().max(1.0), "x {x}: {fd} vs {d}");
        }
    }

    #[test]
    fn decomposition_sums_exactly() {
        let k = kernel(0.5);
        for x in [-2.0, -0.01, 0.3, 3.0] {
            let d = k.decompose(x).unwrap();
            let v = k.eval(x).unwrap().value;
            assert_eq!(d.singular + d.regular, v);
        }
        assert!(k.decompose(0.0).is_err());
        assert!(k.decompose(PI).is_err());
        assert!(kernel(1.0).decompose(0.5).is_err());
    }

    #[test]
    fn zero_mean() {
        for alpha in [0.3, 0.8] {
            let m = kernel(alpha).cosine_moment(0).unwrap();
            assert!(m.value.abs() < 1e-8, "alpha {alpha}: {}", m.value);
        }
    }

    #[test]
    fn l1_norm_alpha_one_matches_clausen_value() {
        // ∫_T |log(2 - 2cos x)| dx = 8 Cl₂(π/3)
        let theta = PI / 3.0;
        let terms = 1_000_000usize;
        let cl2: f64 = (1..=terms).map(|k| (k as f64 * theta).sin() / (k as f64).powi(2)).sum();
        let exact = 8.0 * cl2 / TAU;
        let est = kernel(1.0).l1_norm().unwrap();
        assert!((est.value - exact).abs() < 1e-8, "{} vs {exact}", est.value);
    }

    #[test]
    fn spec_validation() {
        let mut s = KernelSpec::new(0.5);
        s.quad_nodes = 3;
        assert!(Kernel::new(s).is_err());
        let mut s = KernelSpec::new(0.5);
        s.t_split = 50.0;
        assert!(Kernel::new(s).is_err());
        assert!(Kernel::new(KernelSpec::new(-1.0)).is_err());
    }
}
