//! Positivity over S of the glued metric, neck diagnostics and the pointwise
//! inequality chain.

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::Serialize;

use super::geometry::{RadialCurvature, RadialGeometry};
use crate::cones::{certify, in_a0, tangential_mass_max, Budget, InvariantSet};
use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Relative agreement required between the diagonal reduction and a full
/// certification of `R̃(r)`.
pub const CROSS_TOL: f64 = 1e-5;
/// Slack for the lower bounds (h), (i), which hold with equality where `α = 0`.
pub const CHAIN_TOL: f64 = 1e-6;
pub const CROSS_CHECKS: usize = 5;

/// Range of tangential mass `a = ‖X₁‖²` over unit `X ∈ S`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MassRange {
    /// `k(S)`; the lower end of the range is `k²`.
    pub k: f64,
    pub a_max: f64,
}

impl MassRange {
    pub fn of(set: &InvariantSet, n: usize, budget: Budget, seed: u64) -> Result<Self> {
        let d = in_a0(set, n, budget, seed)?;
        if d.in_a0 {
            return Err(Error::InA0(format!("radial k = {:.3e}; positivity scan needs k > 0", d.k.unwrap_or(0.0))));
        }
        let k = d.k.expect("optimizer decisions carry k");
        let a_max = tangential_mass_max(set, n, budget, seed)?.max(k * k);
        Ok(Self { k, a_max })
    }

    /// Minimum of `a·K_sph + (1−a)·K_rad` over the range, and its minimizer.
    pub fn minimize(&self, k_rad: f64, k_sph: f64) -> (f64, f64) {
        let lo = self.k * self.k;
        let at = |a: f64| a * k_sph + (1.0 - a) * k_rad;
        if at(lo) <= at(self.a_max) {
            (at(lo), lo)
        } else {
            (at(self.a_max), self.a_max)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub r: f64,
    pub u: f64,
    pub w: f64,
    pub k_rad: f64,
    pub k_sph: f64,
    pub qmin: f64,
    pub a_argmin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossCheck {
    pub r: f64,
    pub reduced: f64,
    pub certified: f64,
    /// Difference after dividing both by `max(|K_rad|, |K_sph|)`.
    pub relative_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub range: MassRange,
    pub rows: Vec<ScanRow>,
    pub min: f64,
    /// Minimum of `f²·qmin`, scale free.
    pub min_scaled: f64,
    pub worst_r: f64,
    pub worst_a: f64,
    pub cross_checks: Vec<CrossCheck>,
    pub max_cross_gap: f64,
}

impl ScanReport {
    pub fn positive(&self) -> bool {
        self.min > 0.0
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,u,w,K_rad,K_sph,qmin,a_argmin\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                r.r, r.u, r.w, r.k_rad, r.k_sph, r.qmin, r.a_argmin
            ));
        }
        s
    }
}

/// Minimum over unit `X ∈ S` of `qform(R̃(r), X)` at every grid radius, using
/// `qform = a·K_sph + (1−a)·K_rad` with `a = ‖X₁‖² ∈ [k², a_max]`.
pub fn positivity_scan(
    geom: &RadialGeometry,
    curv: &RadialCurvature,
    set: &InvariantSet,
    budget: Budget,
    seed: u64,
) -> Result<ScanReport> {
    let range = MassRange::of(set, geom.n, budget, seed)?;
    positivity_scan_with(geom, curv, set, range, budget, seed)
}

/// As [`positivity_scan`] with a precomputed mass range.
pub fn positivity_scan_with(
    geom: &RadialGeometry,
    curv: &RadialCurvature,
    set: &InvariantSet,
    range: MassRange,
    budget: Budget,
    seed: u64,
) -> Result<ScanReport> {
    let rows: Vec<ScanRow> = curv
        .points
        .iter()
        .map(|p| {
            let (qmin, a) = range.minimize(p.k_rad, p.k_sph);
            ScanRow { r: p.r, u: p.u, w: p.w, k_rad: p.k_rad, k_sph: p.k_sph, qmin, a_argmin: a }
        })
        .collect();
    let (mut min, mut worst_r, mut worst_a, mut min_scaled) = (f64::INFINITY, 0.0, 0.0, f64::INFINITY);
    for (row, p) in rows.iter().zip(&curv.points) {
        if row.qmin < min {
            (min, worst_r, worst_a) = (row.qmin, row.r, row.a_argmin);
        }
        min_scaled = min_scaled.min(row.qmin * p.f * p.f);
    }
    let mut rng = stream_rng(seed, 0x5ca);
    let picks = sample(&mut rng, rows.len(), CROSS_CHECKS.min(rows.len())).into_vec();
    let cross_checks = picks
        .par_iter()
        .enumerate()
        .map(|(j, &i)| {
            let p = &curv.points[i];
            let scale = p.k_rad.abs().max(p.k_sph.abs()).max(f64::MIN_POSITIVE);
            let op = p.operator(geom.n).scale(1.0 / scale);
            let cert = certify(&op, set, budget, seed.wrapping_add(j as u64 + 1))?;
            let reduced = rows[i].qmin;
            Ok(CrossCheck {
                r: p.r,
                reduced,
                certified: cert.min_value * scale,
                relative_gap: (cert.min_value - reduced / scale).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_cross_gap = cross_checks.iter().map(|c| c.relative_gap).fold(0.0, f64::max);
    Ok(ScanReport { range, rows, min, min_scaled, worst_r, worst_a, cross_checks, max_cross_gap })
}

#[derive(Debug, Clone, Serialize)]
pub struct NeckReport {
    pub has_neck: bool,
    /// `lim u·w` as `r → 0`.
    pub rho: Option<f64>,
    pub neck_points: usize,
    /// Outer radius of the region where `α ≡ 1`.
    pub neck_outer_r: Option<f64>,
    pub sph_deviation: f64,
    pub rad_deviation: f64,
    /// `sup |f/ρ − 1|`, `sup |ḟ|`, `sup ρ|f̈|` over the neck.
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl NeckReport {
    pub fn max_deviation(&self) -> f64 {
        [self.sph_deviation, self.rad_deviation, self.c0, self.c1, self.c2].into_iter().fold(0.0, f64::max)
    }
}

/// Closeness of the neck `{α ≡ 1}` to the cylinder `ds² + ρ²g₀`.
pub fn neck_report(curv: &RadialCurvature) -> NeckReport {
    let neck: Vec<_> = curv.points.iter().filter(|p| p.alpha == 1.0).collect();
    let Some(inner) = curv.points.first().filter(|_| !neck.is_empty()) else {
        return NeckReport {
            has_neck: false,
            rho: None,
            neck_points: 0,
            neck_outer_r: None,
            sph_deviation: 0.0,
            rad_deviation: 0.0,
            c0: 0.0,
            c1: 0.0,
            c2: 0.0,
        };
    };
    // u·r is constant where α ≡ 1, and w/r → 1
    let rho = inner.u * inner.r;
    let mut rep = NeckReport {
        has_neck: true,
        rho: Some(rho),
        neck_points: neck.len(),
        neck_outer_r: neck.iter().map(|p| p.r).fold(None, |m, r| Some(m.map_or(r, |m: f64| m.max(r)))),
        sph_deviation: 0.0,
        rad_deviation: 0.0,
        c0: 0.0,
        c1: 0.0,
        c2: 0.0,
    };
    for p in neck {
        rep.sph_deviation = rep.sph_deviation.max((p.k_sph * rho * rho - 1.0).abs());
        rep.rad_deviation = rep.rad_deviation.max(p.k_rad.abs() * rho * rho);
        rep.c0 = rep.c0.max((p.f / rho - 1.0).abs());
        rep.c1 = rep.c1.max(p.f_dot.abs());
        // f̈ = −f·K_rad
        rep.c2 = rep.c2.max((rho * p.f * p.k_rad).abs());
    }
    rep
}

/// Background data entering the inequality chain.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ChainConstants {
    /// `k(S)²`.
    pub k: f64,
    pub k0: f64,
    pub eps: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainViolation {
    pub r: f64,
    pub check: &'static str,
    pub margin: f64,
}

/// Margins of the chain, all multiplied by `r²` to stay scale free.
#[derive(Debug, Clone, Serialize)]
pub struct ChainReport {
    /// `r²(u²K̃_sph − K_sph − α(2−α)/r² + Cα)`.
    pub min_tangential: f64,
    /// `r²(u²K̃_rad − K_rad − α'/r + Cα)`.
    pub min_radial: f64,
    /// `r²(k₀ + α'/r + kα(1+ε−α)/r²)`.
    pub min_display: f64,
    /// `r²(u²·qmin − k₀ − α'/r − kα(1+ε−α)/r²)` with `qmin` over `a ∈ [k, 1]`.
    pub min_bound: f64,
    pub violations: Vec<ChainViolation>,
}

impl ChainReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the lower bounds (h), (i), the aggregated bound and the final
/// positivity display pointwise against the exact curvature.
pub fn paper_inequality_chain(geom: &RadialGeometry, curv: &RadialCurvature, cc: &ChainConstants) -> ChainReport {
    let (bg_rad, bg_sph) = geom.background.curvatures();
    let mut rep = ChainReport {
        min_tangential: f64::INFINITY,
        min_radial: f64::INFINITY,
        min_display: f64::INFINITY,
        min_bound: f64::INFINITY,
        violations: Vec::new(),
    };
    for p in &curv.points {
        let (r, a, ap) = (p.r, p.alpha, p.alpha_prime);
        let r2 = r * r;
        // r²u²K̃ from the scale-free f²K̃
        let lift = r2 / (p.w * p.w);
        let sph = lift * p.f * p.f * p.k_sph;
        let rad = lift * p.f * p.f * p.k_rad;
        let h = sph - r2 * bg_sph - a * (2.0 - a) + cc.c * a * r2;
        let i = rad - r2 * bg_rad - r * ap + cc.c * a * r2;
        let display = r2 * cc.k0 + r * ap + cc.k * a * (1.0 + cc.eps - a);
        let qmin = (cc.k * sph + (1.0 - cc.k) * rad).min(sph);
        let bound = qmin - display;
        rep.min_tangential = rep.min_tangential.min(h);
        rep.min_radial = rep.min_radial.min(i);
        rep.min_display = rep.min_display.min(display);
        rep.min_bound = rep.min_bound.min(bound);
        for (check, margin, ok) in [
            ("tangential", h, h >= -CHAIN_TOL),
            ("radial", i, i >= -CHAIN_TOL),
            ("bound", bound, bound >= -CHAIN_TOL),
            ("display", display, display > 0.0),
        ] {
            if !ok {
                rep.violations.push(ChainViolation { r, check, margin });
            }
        }
    }
    rep
}
