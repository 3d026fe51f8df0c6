//! The profile `β(t)` on `t = log(r₀/r)` and the cutoff `α(r) = β(log(r₀/r))`.
//!
//! `β` is the logistic solution of `β' = kβ(1+ε−β)` multiplied by a smooth
//! ramp near `t = 0` and passed through a smooth clamp that saturates at 1.

use std::sync::OnceLock;

use gauss_quad::GaussLegendre;
use serde::Serialize;

use crate::error::{Error, Result};

pub const CLAMP_GAP: f64 = 1e-3;
pub const SPLICE_TOL: f64 = 1e-4;
/// The ramp switches on over this `t` interval; `β ≡ 0` before it.
pub const RAMP: (f64, f64) = (0.25, 1.0);

pub(crate) fn gauss() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(20.try_into().unwrap()))
}

/// `C^∞` step: 0 for `s ≤ 0`, 1 for `s ≥ 1`, with `χ(s) + χ(1−s) = 1`.
pub fn smooth_step(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / s).exp();
    let b = (-1.0 / (1.0 - s)).exp();
    a / (a + b)
}

pub fn smooth_step_prime(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        return 0.0;
    }
    let a = (-1.0 / s).exp();
    let b = (-1.0 / (1.0 - s)).exp();
    a * b * (1.0 / (s * s) + 1.0 / ((1.0 - s) * (1.0 - s))) / ((a + b) * (a + b))
}

/// Smooth clamp: identity below `1 − gap`, constant 1 above `1 + gap`,
/// slope `1 − χ` in between. Returns `(m, m')`.
fn clamp(x: f64) -> (f64, f64) {
    let lo = 1.0 - CLAMP_GAP;
    if x <= lo {
        return (x, 1.0);
    }
    if x >= 1.0 + CLAMP_GAP {
        return (1.0, 0.0);
    }
    let w = 2.0 * CLAMP_GAP;
    let s = (x - lo) / w;
    // ∫₀ˢ(1−χ), evaluated from the nearer end using χ(y) + χ(1−y) = 1
    let integral = if s <= 0.5 {
        s - gauss().integrate(0.0, s, smooth_step)
    } else {
        0.5 - gauss().integrate(0.0, 1.0 - s, smooth_step)
    };
    ((lo + w * integral).min(x), 1.0 - smooth_step(s))
}

/// Constants of the set S and of the background entering the construction.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SConstants {
    /// Lower bound for `‖X₁‖²` over unit `X ∈ S`, i.e. `k(S)²`.
    pub k: f64,
    /// Lower bound for the background curvature form on unit `X ∈ S`.
    pub k0: f64,
    pub eps: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Profile {
    pub eps: f64,
    pub k: f64,
    pub k0: f64,
    pub c: f64,
    pub d: f64,
    pub r0: f64,
    /// Logistic constant `A`.
    pub a: f64,
    pub ramp: (f64, f64),
    /// `β ≡ 1` for `t ≥ t_flat`.
    pub t_flat: f64,
    /// Smallest value of `k₀r₀²e^{−2t} + kβ(1+ε−β) − β'` on the check grid.
    pub min_margin: f64,
}

impl Profile {
    /// Logistic solution and its derivative.
    fn logistic(&self, t: f64) -> (f64, f64) {
        let rate = (1.0 + self.eps) * self.k;
        let q = self.a * (rate * t).exp();
        let l = (1.0 + self.eps) / (1.0 + 1.0 / q);
        (l, self.k * l * (1.0 + self.eps - l))
    }

    fn ramp(&self, t: f64) -> (f64, f64) {
        let w = self.ramp.1 - self.ramp.0;
        let s = (t - self.ramp.0) / w;
        (smooth_step(s), smooth_step_prime(s) / w)
    }

    pub fn beta(&self, t: f64) -> f64 {
        self.beta_and_prime(t).0
    }

    pub fn beta_and_prime(&self, t: f64) -> (f64, f64) {
        if t <= self.ramp.0 {
            return (0.0, 0.0);
        }
        if t >= self.t_flat {
            return (1.0, 0.0);
        }
        let (l, lp) = self.logistic(t);
        let (p, pp) = self.ramp(t);
        let (m, mp) = clamp(p * l);
        (m, mp * (pp * l + p * lp))
    }

    pub fn t_of(&self, r: f64) -> f64 {
        (self.r0 / r).ln()
    }

    pub fn alpha(&self, r: f64) -> f64 {
        self.beta(self.t_of(r))
    }

    /// `α'(r) = −β'(t)/r`.
    pub fn alpha_prime(&self, r: f64) -> f64 {
        -self.beta_and_prime(self.t_of(r)).1 / r
    }

    /// `∫_{t₁}^{t₂} β`.
    pub fn beta_integral(&self, t1: f64, t2: f64) -> f64 {
        let (lo, hi, sign) = if t1 <= t2 { (t1, t2, 1.0) } else { (t2, t1, -1.0) };
        if hi <= self.ramp.0 {
            return 0.0;
        }
        // panels no longer than 0.005 so the clamp transition is resolved
        let lo = lo.max(self.ramp.0);
        let panels = ((hi - lo) / 5e-3).ceil().max(1.0) as usize;
        let h = (hi - lo) / panels as f64;
        let s: f64 = (0..panels)
            .map(|i| {
                let a = lo + i as f64 * h;
                gauss().integrate(a, a + h, |t| self.beta(t))
            })
            .sum();
        sign * s
    }

    /// `k₀r₀²e^{−2t} + kβ(1+ε−β) − β'`, which must stay positive.
    pub fn margin(&self, t: f64) -> f64 {
        let (b, bp) = self.beta_and_prime(t);
        self.k0 * self.r0 * self.r0 * (-2.0 * t).exp() + self.k * b * (1.0 + self.eps - b) - bp
    }
}

/// Builds the profile for the given constants; `c`, `d` come from the
/// background (see [`super::Background::constants`]). The strict inequality
/// is checked on `samples` points of `[0, t_flat + 2]`.
pub fn build_profile(s: &SConstants, c: f64, d: f64, samples: usize) -> Result<Profile> {
    if !(s.k > 0.0 && s.k0 > 0.0) {
        return Err(Error::Precondition(format!("need k > 0 and k0 > 0 (k = {}, k0 = {})", s.k, s.k0)));
    }
    if !(s.eps > CLAMP_GAP && s.eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps = {} must lie in ({CLAMP_GAP}, 1)", s.eps)));
    }
    if !(d > 0.0 && c >= 0.0) || samples < 2 {
        return Err(Error::InvalidParameter("need D > 0, C ≥ 0 and at least two samples".into()));
    }
    let r0 = (s.k * (1.0 - s.eps) / d).sqrt();
    let rate = (1.0 + s.eps) * s.k;
    let a = SPLICE_TOL / (1.0 + s.eps - SPLICE_TOL) * (-rate * RAMP.1).exp();
    let y = (1.0 + CLAMP_GAP) / (1.0 + s.eps);
    let t_flat = (y / ((1.0 - y) * a)).ln() / rate;
    let mut p = Profile { eps: s.eps, k: s.k, k0: s.k0, c, d, r0, a, ramp: RAMP, t_flat, min_margin: f64::INFINITY };
    let t_max = t_flat + 2.0;
    let mut worst = (0.0, f64::INFINITY);
    for i in 0..samples {
        let t = t_max * i as f64 / (samples - 1) as f64;
        let m = p.margin(t);
        if m < worst.1 {
            worst = (t, m);
        }
    }
    if worst.1 <= 0.0 {
        return Err(Error::InequalityViolated { t: worst.0, margin: worst.1 });
    }
    p.min_margin = worst.1;
    Ok(p)
}
