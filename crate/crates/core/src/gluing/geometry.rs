//! Rotationally symmetric metrics `u(r)²(dr² + w(r)²g₀)` and their exact
//! radial curvature, computed along two independent routes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::profile::Profile;
use crate::curvature::{kulkarni_nomizu, CurvatureOperator, SymmetricTwoTensor};
use crate::error::{Error, Result};

/// Largest allowed disagreement of `f²K` between the two routes.
pub const AGREE_TOL: f64 = 1e-6;
/// Largest allowed mixed component of the conformal operator (times `w²`).
pub const MIXED_TOL: f64 = 1e-10;
/// Step in `log r` of the finite-difference stencil.
pub const FD_STEP: f64 = 2e-4;
/// Extra `t`-length of neck kept on the grid beyond `β ≡ 1`.
pub const NECK_LENGTH: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Background {
    /// Round sphere, `w = sin r`.
    Sphere,
    /// Flat space, `w = r`.
    Flat,
}

impl Background {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "sphere" => Ok(Self::Sphere),
            "flat" => Ok(Self::Flat),
            other => Err(Error::UnknownModel(other.to_string())),
        }
    }

    /// `(w, w', w'')`.
    pub fn warp(&self, r: f64) -> (f64, f64, f64) {
        match self {
            Self::Sphere => (r.sin(), r.cos(), -r.sin()),
            Self::Flat => (r, 1.0, 0.0),
        }
    }

    /// `w/r`.
    fn w_over_r(&self, r: f64) -> f64 {
        match self {
            Self::Sphere => r.sin() / r,
            Self::Flat => 1.0,
        }
    }

    /// `log(w/r)`, by its series for small `r` so that differences keep
    /// full relative precision.
    fn log_w_over_r(&self, r: f64) -> f64 {
        match self {
            Self::Sphere if r < 0.1 => {
                let x = r * r;
                -x * (1.0 / 6.0 + x * (1.0 / 180.0 + x * (1.0 / 2835.0 + x / 37800.0)))
            }
            Self::Sphere => (r.sin() / r).ln(),
            Self::Flat => 0.0,
        }
    }

    /// `(K_rad, K_sph)` of the background.
    pub fn curvatures(&self) -> (f64, f64) {
        match self {
            Self::Sphere => (1.0, 1.0),
            Self::Flat => (0.0, 0.0),
        }
    }

    pub fn operator(&self, n: usize) -> CurvatureOperator {
        let (kr, ks) = self.curvatures();
        radial_operator(n, kr, ks)
    }

    /// Radius of the ball used for the construction (a hemisphere for the sphere).
    pub fn radius(&self) -> f64 {
        match self {
            Self::Sphere => std::f64::consts::FRAC_PI_2,
            Self::Flat => 1.0,
        }
    }

    /// `δ(r) = w'/w − 1/r`; the principal curvatures of the geodesic spheres
    /// are `h_ii = −1/r − δ`.
    pub fn mean_curvature_defect(&self, r: f64) -> f64 {
        match self {
            Self::Sphere if r < 1e-2 => -r / 3.0 - r.powi(3) / 45.0 - 2.0 * r.powi(5) / 945.0,
            Self::Sphere => 1.0 / r.tan() - 1.0 / r,
            Self::Flat => 0.0,
        }
    }

    /// `(C, D)`: `C = 2·max(sup 2|δ|/r, sup |δ|/r)` over `(0, r_max]` and `D = 2C`,
    /// floored at `1` so that `r₀` stays finite on flat backgrounds.
    pub fn constants(&self, r_max: f64) -> (f64, f64) {
        let samples = 20_000;
        let sup = (1..=samples)
            .map(|i| {
                let r = r_max * i as f64 / samples as f64;
                self.mean_curvature_defect(r).abs() / r
            })
            .fold(0.0, f64::max);
        let c = 2.0 * (2.0 * sup).max(sup);
        (c, (2.0 * c).max(1.0))
    }
}

/// `K_rad·P_rad + K_sph·P_tan`.
pub fn radial_operator(n: usize, k_rad: f64, k_sph: f64) -> CurvatureOperator {
    let p = CurvatureOperator::radial_projector(n).scale(k_rad);
    p.add(&CurvatureOperator::tangential_projector(n).scale(k_sph)).expect("same n")
}

/// Radial conformal factor, described by `α = −r u'/u`.
#[derive(Debug, Clone)]
pub enum Conformal {
    /// `u ≡ 1`.
    Trivial,
    /// `u = ρ/r` (`α ≡ 1`).
    Cylinder { rho: f64 },
    Profile(Profile),
}

impl Conformal {
    pub fn alpha(&self, r: f64) -> f64 {
        match self {
            Self::Trivial => 0.0,
            Self::Cylinder { .. } => 1.0,
            Self::Profile(p) => p.alpha(r),
        }
    }

    pub fn alpha_prime(&self, r: f64) -> f64 {
        match self {
            Self::Profile(p) => p.alpha_prime(r),
            _ => 0.0,
        }
    }

    /// `log u(r e^{s}) − log u(r)`.
    fn log_u_step(&self, r: f64, s: f64) -> f64 {
        match self {
            Self::Trivial => 0.0,
            Self::Cylinder { .. } => -s,
            Self::Profile(p) => {
                let t = p.t_of(r);
                -p.beta_integral(t - s, t)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct RadialGeometry {
    pub n: usize,
    pub background: Background,
    pub conformal: Conformal,
    /// Increasing, logarithmically spaced radii.
    pub r: Vec<f64>,
    pub log_u: Vec<f64>,
}

impl RadialGeometry {
    pub fn new(n: usize, background: Background, conformal: Conformal, r_min: f64, r_max: f64, points: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Precondition("need n ≥ 3".into()));
        }
        if !(r_min > 0.0 && r_max > r_min) || points < 2 {
            return Err(Error::InvalidParameter(format!("bad grid [{r_min}, {r_max}] with {points} points")));
        }
        if background == Background::Sphere && r_max >= std::f64::consts::PI {
            return Err(Error::InvalidParameter("sphere radius must stay below π".into()));
        }
        let (x0, x1) = (r_min.ln(), r_max.ln());
        let r: Vec<f64> = (0..points).map(|i| (x0 + (x1 - x0) * i as f64 / (points - 1) as f64).exp()).collect();
        let log_u = match &conformal {
            Conformal::Trivial => vec![0.0; points],
            Conformal::Cylinder { rho } => r.iter().map(|ri| rho.ln() - ri.ln()).collect(),
            Conformal::Profile(p) => {
                // accumulate ∫β from the outer edge inwards; log u = 0 for t ≤ 0
                let mut out = vec![0.0; points];
                let mut acc = 0.0;
                let mut t_prev = p.t_of(r[points - 1]).max(0.0);
                for i in (0..points).rev() {
                    let t = p.t_of(r[i]).max(0.0);
                    acc += p.beta_integral(t_prev, t);
                    out[i] = acc;
                    t_prev = t;
                }
                out
            }
        };
        Ok(Self { n, background, conformal, r, log_u })
    }

    /// The glued geometry for a profile: grid from deep inside the neck to
    /// the edge of the ball.
    pub fn glued(n: usize, background: Background, profile: Profile, points: usize) -> Result<Self> {
        let r_max = background.radius();
        if profile.r0 >= r_max {
            return Err(Error::Precondition(format!("r0 = {} exceeds the ball radius {r_max}", profile.r0)));
        }
        let r_min = profile.r0 * (-(profile.t_flat + NECK_LENGTH)).exp();
        Self::new(n, background, Conformal::Profile(profile), r_min, r_max, points)
    }

    pub fn profile(&self) -> Option<&Profile> {
        match &self.conformal {
            Conformal::Profile(p) => Some(p),
            _ => None,
        }
    }

    /// `log f(r e^{s}) − log f(r)` with `f = u·w`.
    fn log_f_step(&self, r: f64, s: f64) -> f64 {
        let g = self.background.log_w_over_r(r * s.exp()) - self.background.log_w_over_r(r);
        self.conformal.log_u_step(r, s) + s + g
    }
}

/// Per-point curvature of `ũ²g` in an adapted frame.
#[derive(Debug, Clone, Serialize)]
pub struct RadialPoint {
    pub r: f64,
    pub u: f64,
    pub w: f64,
    pub f: f64,
    pub alpha: f64,
    pub alpha_prime: f64,
    /// Radial-tangential sectional curvature.
    pub k_rad: f64,
    /// Tangential-tangential sectional curvature.
    pub k_sph: f64,
    /// `df/ds` with `ds = u dr`.
    pub f_dot: f64,
    /// Conformal-formula values of `f²K_rad`, `f²K_sph`.
    pub kn_rad_scaled: f64,
    pub kn_sph_scaled: f64,
    /// Largest mixed component of the conformal operator, times `w²`.
    pub mixed: f64,
}

impl RadialPoint {
    pub fn operator(&self, n: usize) -> CurvatureOperator {
        radial_operator(n, self.k_rad, self.k_sph)
    }

    /// Largest `|f²K|` difference between the two routes.
    pub fn disagreement(&self) -> f64 {
        let f2 = self.f * self.f;
        (f2 * self.k_rad - self.kn_rad_scaled).abs().max((f2 * self.k_sph - self.kn_sph_scaled).abs())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RadialCurvature {
    pub points: Vec<RadialPoint>,
    pub max_disagreement: f64,
    pub max_mixed: f64,
}

/// Exact route: in arc length `s` with `f = u·w`, `K_rad = −f̈/f` and
/// `K_sph = (1 − ḟ²)/f²`. Derivatives of `log f` in `log r` are taken by a
/// sixth-order central stencil; `ds/d(log r) = u·r` is exact.
fn warped(geom: &RadialGeometry, r: f64) -> (f64, f64, f64) {
    let h = FD_STEP;
    let v: Vec<f64> = (-3..=3).map(|j| if j == 0 { 0.0 } else { geom.log_f_step(r, j as f64 * h) }).collect();
    let d1 = (-v[0] + 9.0 * v[1] - 45.0 * v[2] + 45.0 * v[4] - 9.0 * v[5] + v[6]) / (60.0 * h);
    let d2 = (2.0 * v[0] - 27.0 * v[1] + 270.0 * v[2] + 270.0 * v[4] - 27.0 * v[5] + 2.0 * v[6]) / (180.0 * h * h);
    let (w, wp, _) = geom.background.warp(r);
    let g = geom.background.w_over_r(r);
    let gx = wp - w / r;
    let f_dot = d1 * g;
    let f2_sph = 1.0 - f_dot * f_dot;
    let f2_rad = -g * (d2 * g + d1 * gx);
    (f2_rad, f2_sph, f_dot)
}

/// Conformal route: `u²R̃ = R − g⊙T` with
/// `T = u⁻¹Hess u − 2u⁻²du⊗du + ½u⁻²|du|²g`, `Hess u = u''dr² + u'(w'/w)g_tan`.
/// Returns `w²·u²R̃` as an operator.
fn conformal(geom: &RadialGeometry, r: f64) -> Result<CurvatureOperator> {
    let n = geom.n;
    let alpha = geom.conformal.alpha(r);
    let alpha_p = geom.conformal.alpha_prime(r);
    let (w, wp, _) = geom.background.warp(r);
    let p = -alpha / r;
    let q = (alpha * alpha + alpha) / (r * r) - alpha_p / r;
    let t_rad = q - 2.0 * p * p + 0.5 * p * p;
    let t_sph = p * wp / w + 0.5 * p * p;
    let mut diag = vec![t_sph; n];
    diag[0] = t_rad;
    let kn = kulkarni_nomizu(&SymmetricTwoTensor::identity(n), &SymmetricTwoTensor::diagonal(&diag))?;
    Ok(geom.background.operator(n).sub(&kn)?.scale(w * w))
}

fn point(geom: &RadialGeometry, i: usize) -> Result<RadialPoint> {
    let r = geom.r[i];
    let u = geom.log_u[i].exp();
    let (w, _, _) = geom.background.warp(r);
    let f = u * w;
    if !(f > 0.0 && f.is_finite()) {
        return Err(Error::Precondition(format!("nonpositive f = {f} at r = {r}")));
    }
    let (f2_rad, f2_sph, f_dot) = warped(geom, r);
    let op = conformal(geom, r)?;
    let m = op.matrix();
    let d = m.nrows();
    let mut mixed: f64 = 0.0;
    for a in 0..d {
        for b in 0..d {
            if a != b {
                mixed = mixed.max(m[(a, b)].abs());
            }
        }
    }
    // pair (0,1) is radial, pair (1,2) is tangential
    let n = geom.n;
    Ok(RadialPoint {
        r,
        u,
        w,
        f,
        alpha: geom.conformal.alpha(r),
        alpha_prime: geom.conformal.alpha_prime(r),
        k_rad: f2_rad / (f * f),
        k_sph: f2_sph / (f * f),
        f_dot,
        kn_rad_scaled: m[(0, 0)],
        kn_sph_scaled: m[(crate::lie::pair_index(n, 1, 2), crate::lie::pair_index(n, 1, 2))],
        mixed,
    })
}

/// Exact radial curvature on the grid, with the two routes cross-checked.
pub fn radial_curvature(geom: &RadialGeometry) -> Result<RadialCurvature> {
    let points = (0..geom.r.len()).into_par_iter().map(|i| point(geom, i)).collect::<Result<Vec<_>>>()?;
    let max_disagreement = points.iter().map(RadialPoint::disagreement).fold(0.0, f64::max);
    let max_mixed = points.iter().map(|p| p.mixed).fold(0.0, f64::max);
    if max_disagreement > AGREE_TOL {
        return Err(Error::GridTooCoarse(max_disagreement));
    }
    Ok(RadialCurvature { points, max_disagreement, max_mixed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gluing::profile::{build_profile, SConstants};

    fn check(geom: &RadialGeometry, k_rad: f64, k_sph: f64, tol: f64) {
        let c = radial_curvature(geom).unwrap();
        // compared scale free, as f²K
        for p in &c.points {
            let f2 = p.f * p.f;
            let err = ((p.k_rad - k_rad) * f2).abs().max(((p.k_sph - k_sph) * f2).abs());
            assert!(err < tol, "r = {} {:?}", p.r, (p.k_rad, p.k_sph));
        }
        assert!(c.max_mixed < MIXED_TOL);
    }

    #[test]
    fn closed_form_examples() {
        let sphere = RadialGeometry::new(5, Background::Sphere, Conformal::Trivial, 1e-3, 1.5, 200).unwrap();
        check(&sphere, 1.0, 1.0, 1e-8);
        let flat = RadialGeometry::new(5, Background::Flat, Conformal::Trivial, 1e-3, 1.0, 200).unwrap();
        check(&flat, 0.0, 0.0, 1e-8);
        let cyl = RadialGeometry::new(5, Background::Flat, Conformal::Cylinder { rho: 1.0 }, 1e-3, 1.0, 200).unwrap();
        check(&cyl, 0.0, 1.0, 1e-8);
    }

    #[test]
    fn glued_sphere_routes_agree() {
        let (c, d) = Background::Sphere.constants(Background::Sphere.radius());
        let p = build_profile(&SConstants { k: 0.5, k0: 1.0, eps: 0.5 }, c, d, 2000).unwrap();
        let g = RadialGeometry::glued(5, Background::Sphere, p, 2000).unwrap();
        let rc = radial_curvature(&g).unwrap();
        assert!(rc.max_disagreement < AGREE_TOL, "{}", rc.max_disagreement);
        assert!(rc.max_mixed < MIXED_TOL);
    }

    #[test]
    fn cylinder_curvature_scales_with_radius() {
        // doubling the metric scale quarters the curvature
        let a = RadialGeometry::new(4, Background::Flat, Conformal::Cylinder { rho: 1.0 }, 1e-2, 1.0, 50).unwrap();
        let b = RadialGeometry::new(4, Background::Flat, Conformal::Cylinder { rho: 2.0 }, 1e-2, 1.0, 50).unwrap();
        let (ca, cb) = (radial_curvature(&a).unwrap(), radial_curvature(&b).unwrap());
        for (p, q) in ca.points.iter().zip(&cb.points) {
            assert!((p.k_sph - 4.0 * q.k_sph).abs() < 1e-8);
        }
    }

    #[test]
    fn constants_for_the_sphere() {
        let (c, d) = Background::Sphere.constants(std::f64::consts::FRAC_PI_2);
        // sup |cot r − 1/r|/r on (0, π/2] is attained at π/2: (2/π)/(π/2)
        let sup = 4.0 / (std::f64::consts::PI * std::f64::consts::PI);
        assert!((c - 4.0 * sup).abs() < 1e-9);
        assert!((d - 2.0 * c).abs() < 1e-12);
    }
}
