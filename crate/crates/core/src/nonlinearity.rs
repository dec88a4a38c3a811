//! The two nonlinearity families and their analytic regularisations
//!
//! ```text
//! abs: n^ε(x) = (x² + ε²)^{p/2} - ε^p
//! sgn: n^ε(x) = x ((x² + ε²)^{(p-1)/2} - ε^{p-1})
//! ```
//!
//! with `ε = 0` giving `|x|^p` and `x|x|^{p-1}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NonlinearityKind {
    Abs,
    Sgn,
}

impl std::str::FromStr for NonlinearityKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "abs" => Ok(NonlinearityKind::Abs),
            "sgn" => Ok(NonlinearityKind::Sgn),
            other => Err(format!("unknown nonlinearity kind '{other}' (expected abs or sgn)")),
        }
    }
}

impl std::fmt::Display for NonlinearityKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NonlinearityKind::Abs => "abs",
            NonlinearityKind::Sgn => "sgn",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearitySpec {
    pub kind: NonlinearityKind,
    pub p: f64,
    pub eps: f64,
}

/// `(x² + ε²)^{e} - ε^{2e}` without cancellation for `|x| < ε`.
fn shifted_power(x2: f64, eps: f64, e: f64) -> f64 {
    let e2 = eps * eps;
    if x2 < e2 {
        eps.powf(2.0 * e) * (e * (x2 / e2).ln_1p()).exp_m1()
    } else {
        (x2 + e2).powf(e) - eps.powf(2.0 * e)
    }
}

impl NonlinearitySpec {
    pub fn new(kind: NonlinearityKind, p: f64, eps: f64) -> Self {
        NonlinearitySpec { kind, p, eps }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p.is_finite() && self.p > 1.0) {
            return Err(Error::Domain {
                what: "exponent p must exceed 1",
                value: self.p,
            });
        }
        if !(self.eps.is_finite() && self.eps >= 0.0) {
            return Err(Error::Domain {
                what: "regularisation eps must be nonnegative",
                value: self.eps,
            });
        }
        Ok(())
    }

    /// Same family with a different `ε`.
    pub fn with_eps(&self, eps: f64) -> Self {
        NonlinearitySpec { eps, ..*self }
    }

    /// `n^ε(x)`.
    pub fn value(&self, x: f64) -> f64 {
        let (p, eps) = (self.p, self.eps);
        let ax = x.abs();
        match self.kind {
            NonlinearityKind::Abs => {
                if eps == 0.0 {
                    ax.powf(p)
                } else {
                    shifted_power(x * x, eps, 0.5 * p)
                }
            }
            NonlinearityKind::Sgn => {
                if eps == 0.0 {
                    x * ax.powf(p - 1.0)
                } else {
                    x * shifted_power(x * x, eps, 0.5 * (p - 1.0))
                }
            }
        }
    }

    /// `(n^ε)'(x)`.
    pub fn d1(&self, x: f64) -> f64 {
        let (p, eps) = (self.p, self.eps);
        let ax = x.abs();
        match self.kind {
            NonlinearityKind::Abs => {
                if eps == 0.0 {
                    if x == 0.0 {
                        0.0
                    } else {
                        p * x.signum() * ax.powf(p - 1.0)
                    }
                } else {
                    let r = x * x + eps * eps;
                    p * x * r.powf(0.5 * p - 1.0)
                }
            }
            NonlinearityKind::Sgn => {
                if eps == 0.0 {
                    p * ax.powf(p - 1.0)
                } else {
                    let q = p - 1.0;
                    let r = x * x + eps * eps;
                    shifted_power(x * x, eps, 0.5 * q) + q * x * x * r.powf(0.5 * q - 1.0)
                }
            }
        }
    }

    /// `(n^ε)''(x)`; infinite or undefined at the nonsmooth point (see [`Self::eval`]).
    pub fn d2(&self, x: f64) -> f64 {
        let (p, eps) = (self.p, self.eps);
        let ax = x.abs();
        match self.kind {
            NonlinearityKind::Abs => {
                if eps == 0.0 {
                    if x == 0.0 {
                        return if p < 2.0 {
                            f64::INFINITY
                        } else if p == 2.0 {
                            2.0
                        } else {
                            0.0
                        };
                    }
                    p * (p - 1.0) * ax.powf(p - 2.0)
                } else {
                    let r = x * x + eps * eps;
                    p * r.powf(0.5 * p - 2.0) * ((p - 1.0) * x * x + eps * eps)
                }
            }
            NonlinearityKind::Sgn => {
                let q = p - 1.0;
                if eps == 0.0 {
                    if x == 0.0 {
                        return if p > 2.0 { 0.0 } else { f64::NAN };
                    }
                    p * q * x.signum() * ax.powf(q - 1.0)
                } else {
                    let r = x * x + eps * eps;
                    q * x * r.powf(0.5 * q - 2.0) * (3.0 * eps * eps + (q + 1.0) * x * x)
                }
            }
        }
    }

    /// `n^ε`, `(n^ε)'` or `(n^ε)''` at `x`.
    ///
    /// Without regularisation the second derivative at 0 does not exist for
    /// `abs` with `p < 2` (unbounded) or `sgn` with `p ≤ 2` (unbounded, or a
    /// jump at `p = 2`).
    pub fn eval(&self, x: f64, order: u8) -> Result<f64> {
        self.validate()?;
        match order {
            0 => Ok(self.value(x)),
            1 => Ok(self.d1(x)),
            2 => {
                if self.eps == 0.0 && x == 0.0 {
                    let bad = match self.kind {
                        NonlinearityKind::Abs => self.p < 2.0,
                        NonlinearityKind::Sgn => self.p <= 2.0,
                    };
                    if bad {
                        return Err(Error::NonsmoothPoint { p: self.p });
                    }
                }
                Ok(self.d2(x))
            }
            _ => Err(Error::Domain {
                what: "derivative order must be 0, 1 or 2",
                value: order as f64,
            }),
        }
    }

    /// `μ = (c/p)^{1/(p-1)}`, the crest value without regularisation.
    pub fn mu(&self, c: f64) -> f64 {
        (c / self.p).powf(1.0 / (self.p - 1.0))
    }

    /// `μ^ε`: the positive root of `(n^ε)'(x) = c`.
    ///
    /// `(n^ε)'` is increasing on `(0, ∞)` for both families, so the root is
    /// unique. It is bracketed by doubling, narrowed by bisection to 1e-3
    /// relative, then polished by Newton steps kept inside the bracket.
    pub fn mu_eps(&self, c: f64) -> Result<f64> {
        self.validate()?;
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::Domain {
                what: "speed c must be positive",
                value: c,
            });
        }
        if self.eps == 0.0 {
            return Ok(self.mu(c));
        }
        let mut lo = 0.0f64;
        let mut hi = (2.0 * c / self.p).powf(1.0 / (self.p - 1.0)).max(1.0) + self.eps;
        let mut doublings = 0;
        while self.d1(hi) <= c {
            lo = hi;
            hi *= 2.0;
            doublings += 1;
            if doublings > 2000 || !hi.is_finite() {
                return Err(Error::RootFind(format!(
                    "no bracket for (n^eps)'(x) = {c} below {hi:e} (p = {}, eps = {})",
                    self.p, self.eps
                )));
            }
        }
        while hi - lo > 1e-3 * hi {
            let mid = 0.5 * (lo + hi);
            if self.d1(mid) > c {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..100 {
            let f = self.d1(x) - c;
            if f == 0.0 {
                return Ok(x);
            }
            if f > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let slope = self.d2(x);
            let mut next = x - f / slope;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let step = (next - x).abs();
            x = next;
            if step <= 1e-15 * x || hi - lo <= 2e-16 * x {
                return Ok(x);
            }
        }
        Err(Error::RootFind(format!(
            "Newton polish for mu_eps did not settle (bracket [{lo:e}, {hi:e}])"
        )))
    }

    /// `n^ε(x) = a₂ x² + a₃ x³ + O(x⁴)`: returns `(a₂, a₃)` for `ε > 0`.
    pub fn taylor_coefficients(&self) -> (f64, f64) {
        let (p, eps) = (self.p, self.eps);
        match self.kind {
            NonlinearityKind::Abs => (0.5 * p * eps.powf(p - 2.0), 0.0),
            NonlinearityKind::Sgn => (0.0, 0.5 * (p - 1.0) * eps.powf(p - 3.0)),
        }
    }

    /// Whether the family respects `x ↦ -x` oddness.
    pub fn is_odd(&self) -> bool {
        self.kind == NonlinearityKind::Sgn
    }
}

/// `n^ε`, `(n^ε)'` or `(n^ε)''` at `x`.
pub fn n_eval(spec: &NonlinearitySpec, x: f64, order: u8) -> Result<f64> {
    spec.eval(x, order)
}

/// `μ^ε` for speed `c`.
pub fn mu_of_speed(spec: &NonlinearitySpec, c: f64) -> Result<f64> {
    spec.mu_eps(c)
}
