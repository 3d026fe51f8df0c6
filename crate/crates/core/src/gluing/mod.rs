//! Conformal deformation of a ball into a cylindrical neck while keeping the
//! curvature form positive on an invariant set S.

mod geometry;
mod profile;
mod scan;

pub use geometry::{
    radial_curvature, radial_operator, Background, Conformal, RadialCurvature, RadialGeometry, RadialPoint, AGREE_TOL,
    FD_STEP, MIXED_TOL, NECK_LENGTH,
};
pub use profile::{build_profile, smooth_step, Profile, SConstants, CLAMP_GAP, RAMP, SPLICE_TOL};
pub use scan::{
    neck_report, paper_inequality_chain, positivity_scan, positivity_scan_with, ChainConstants, ChainReport,
    ChainViolation, CrossCheck, MassRange, NeckReport, ScanReport, ScanRow, CHAIN_TOL, CROSS_CHECKS, CROSS_TOL,
};

use serde::Serialize;

use crate::cones::{certify, Budget, InvariantSet};
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct GlueConfig {
    pub n: usize,
    pub background: Background,
    pub eps: f64,
    pub grid: usize,
    /// Multiplies the estimated `D`.
    pub d_scale: f64,
    pub budget: Budget,
    pub seed: u64,
}

impl Default for GlueConfig {
    fn default() -> Self {
        Self { n: 5, background: Background::Sphere, eps: 0.5, grid: 2000, d_scale: 1.0, budget: Budget::default(), seed: 0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GlueOutcome {
    pub constants: SConstants,
    pub profile: Profile,
    pub curvature: RadialCurvature,
    pub scan: ScanReport,
    pub neck: NeckReport,
    pub chain: ChainReport,
}

/// Profile, geometry, scan, neck and chain for one set. Sets in A₀ are
/// rejected with [`crate::Error::InA0`] before any geometry is built.
pub fn glue(cfg: &GlueConfig, set: &InvariantSet) -> Result<GlueOutcome> {
    let range = MassRange::of(set, cfg.n, cfg.budget, cfg.seed)?;
    let k0 = certify(&cfg.background.operator(cfg.n), set, cfg.budget, cfg.seed)?.min_value;
    let constants = SConstants { k: range.k * range.k, k0, eps: cfg.eps };
    let (c, d) = cfg.background.constants(cfg.background.radius());
    let profile = build_profile(&constants, c, d * cfg.d_scale, cfg.grid.max(2))?;
    let geom = RadialGeometry::glued(cfg.n, cfg.background, profile.clone(), cfg.grid)?;
    let curvature = radial_curvature(&geom)?;
    let scan = positivity_scan_with(&geom, &curvature, set, range, cfg.budget, cfg.seed)?;
    let neck = neck_report(&curvature);
    let chain = paper_inequality_chain(&geom, &curvature, &ChainConstants { k: constants.k, k0, eps: cfg.eps, c });
    Ok(GlueOutcome { constants, profile, curvature, scan, neck, chain })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::{certify, InvariantSet};
    use crate::error::Error;

    fn budget() -> Budget {
        Budget { restarts: 8, iterations: 400 }
    }

    #[test]
    fn round_sphere_scan_is_one() {
        let g = RadialGeometry::new(5, Background::Sphere, Conformal::Trivial, 1e-3, 1.5, 300).unwrap();
        let c = radial_curvature(&g).unwrap();
        let s = positivity_scan(&g, &c, &InvariantSet::S0, budget(), 1).unwrap();
        assert!((s.min - 1.0).abs() < 1e-6, "{}", s.min);
        assert!(s.max_cross_gap < CROSS_TOL);
        let neck = neck_report(&c);
        assert!(!neck.has_neck && neck.rho.is_none());
    }

    #[test]
    fn exact_cylinder_has_zero_deviation() {
        let g = RadialGeometry::new(5, Background::Flat, Conformal::Cylinder { rho: 0.3 }, 1e-4, 1.0, 300).unwrap();
        let neck = neck_report(&radial_curvature(&g).unwrap());
        assert!(neck.has_neck);
        assert!((neck.rho.unwrap() - 0.3).abs() < 1e-14);
        assert!(neck.max_deviation() < 1e-9, "{neck:?}");
    }

    #[test]
    fn glued_sphere_end_to_end() {
        let out = glue(&GlueConfig { budget: budget(), ..GlueConfig::default() }, &InvariantSet::S0).unwrap();
        assert!(out.scan.positive() && out.scan.min_scaled > 0.0);
        assert!(out.scan.max_cross_gap < CROSS_TOL);
        assert!(out.curvature.max_disagreement < AGREE_TOL);
        assert!(out.curvature.max_mixed < MIXED_TOL);
        assert!(out.neck.has_neck && out.neck.max_deviation() < 1e-2);
        assert!(out.chain.holds() && out.chain.min_display > 0.0, "{:?}", out.chain.violations.first());
        // α nonincreasing in r, u ≡ 1 beyond r₀
        let pts = &out.curvature.points;
        assert!(pts.windows(2).all(|w| w[1].alpha <= w[0].alpha));
        assert!(pts.iter().all(|p| p.alpha_prime <= 0.0));
        assert!(pts.iter().filter(|p| p.r >= out.profile.r0).all(|p| p.u == 1.0));
        // neck scale: u·r is constant where α ≡ 1
        let rho = out.neck.rho.unwrap();
        for p in pts.iter().filter(|p| p.alpha == 1.0) {
            assert!((p.u * p.r / rho - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn sprime_is_refused_and_vanishes_on_the_neck() {
        let cfg = GlueConfig { budget: budget(), ..GlueConfig::default() };
        assert!(matches!(glue(&cfg, &InvariantSet::SPrime), Err(Error::InA0(_))));
        // the neck operator is (nearly) a round cylinder; its S′ minimum is 0
        let out = glue(&cfg, &InvariantSet::S0).unwrap();
        let p = &out.curvature.points[0];
        let op = p.operator(5).scale(1.0 / p.k_sph);
        let c = certify(&op, &InvariantSet::SPrime, budget(), 2).unwrap();
        assert!(c.min_value.abs() < 1e-8, "{}", c.min_value);
    }

    #[test]
    fn oversized_d_keeps_the_display_positive() {
        let base = GlueConfig { budget: budget(), ..GlueConfig::default() };
        let a = glue(&base, &InvariantSet::S0).unwrap();
        let b = glue(&GlueConfig { d_scale: 10.0, ..base }, &InvariantSet::S0).unwrap();
        assert!(b.profile.r0 < a.profile.r0);
        assert!(b.chain.holds() && b.scan.positive());
    }

    #[test]
    fn chain_without_deformation_reduces_to_background() {
        let g = RadialGeometry::new(5, Background::Sphere, Conformal::Trivial, 1e-3, 1.5, 200).unwrap();
        let c = radial_curvature(&g).unwrap();
        let (cc, _) = Background::Sphere.constants(1.5);
        let rep = paper_inequality_chain(&g, &c, &ChainConstants { k: 0.5, k0: 1.0, eps: 0.5, c: cc });
        assert!(rep.holds());
        // equality up to stencil round-off
        assert!(rep.min_tangential.abs() < 1e-7 && rep.min_radial.abs() < 1e-7);
        // the display is k₀r²
        assert!((rep.min_display - 1e-6).abs() < 1e-12);
    }

    #[test]
    fn curvature_scales_with_the_metric() {
        // ρ ↦ cρ on the cylinder scales K by c⁻² and keeps the sign of the scan
        let mk = |rho: f64| {
            let g = RadialGeometry::new(5, Background::Flat, Conformal::Cylinder { rho }, 1e-3, 1.0, 100).unwrap();
            let c = radial_curvature(&g).unwrap();
            let s = positivity_scan(&g, &c, &InvariantSet::S0, budget(), 3).unwrap();
            (c, s.min)
        };
        let (a, ma) = mk(1.0);
        let (b, mb) = mk(3.0);
        for (p, q) in a.points.iter().zip(&b.points) {
            assert!((p.k_sph - 9.0 * q.k_sph).abs() < 1e-8);
        }
        assert!(ma > 0.0 && mb > 0.0);
    }
}
