//! Minimization over a scaled adjoint orbit `{P X P⁻¹}` in so(n,ℂ).
//!
//! Moves are `Y ↦ e^{−sW} Y e^{sW}` along the steepest-descent direction of
//! `q(Y)/‖Y‖²`, using `d/dt q(e^{tW}Ye^{−tW})|₀ = 2·Re⟨R[W,Y], Y⟩_H`. Restarts are
//! seeded from random conjugates and from boost degenerations, which reach
//! the boundary strata of the orbit closure.

use rand::Rng;

use super::optim::descend;
use super::Local;
use crate::curvature::CurvatureOperator;
use crate::degeneration::{minimal_boost_plane, Graded};
use crate::error::Result;
use crate::lie::{c, numerical_rank, CMat, CVec, SkewMatrix, StructureConstants, C64};
use crate::rng::{complex_matrix, real_vector, rotation, stream_rng};

fn normalized(m: CMat) -> SkewMatrix {
    let y = SkewMatrix::new(m);
    let s = y.norm();
    y.scale(c(1.0 / s))
}

/// Value and the complex gradient coefficients `G_α = 2·conj(s_α)` where
/// `s_α = Σ c_{αβγ} y_β conj(r_γ)`, `r = (Ry − f y)/‖y‖²`.
fn value_and_gradient(r: &CurvatureOperator, sc: &StructureConstants, y: &SkewMatrix) -> (f64, CVec) {
    let a = y.coefficients();
    let (f, res) = super::frames::normalized_and_residual(r, &a);
    let mut s = CVec::zeros(a.len());
    for &(al, be, ga, v) in sc.nonzeros() {
        s[al] += a[be] * res[ga].conj() * v;
    }
    (f, s.map(|z| z.conj() * 2.0))
}

fn value(r: &CurvatureOperator, y: &SkewMatrix) -> f64 {
    r.qform(y).unwrap() / y.norm_sq()
}

fn retract(y: &SkewMatrix, g: &CVec, s: f64) -> SkewMatrix {
    let n = y.n();
    let w = SkewMatrix::from_coefficients(n, &(g * c(-s)));
    let e = w.matrix().clone().exp();
    normalized(&e * y.matrix() * e.transpose())
}

fn random_real_pair<R: Rng>(rng: &mut R, n: usize) -> (CVec, CVec) {
    let a = real_vector(rng, n).normalize();
    let b = real_vector(rng, n);
    let b = (&b - &a * a.dot(&b)).normalize();
    (a.map(c), b.map(c))
}

/// Boost-degenerated orbit element: the normalized conjugate at time `t`
/// along the plane, plus the exact top-grade limit.
fn boosted(y: &CMat, f1: &CVec, f2: &CVec, t: f64) -> Option<(SkewMatrix, SkewMatrix)> {
    let g = Graded::by_projectors(y, f1, f2);
    let top = g.top_grade(1e-9);
    if top <= 0 {
        return None;
    }
    Some((normalized(g.scaled_conjugate(t, top)), normalized(g.component(top).clone())))
}

fn real_rotation<R: Rng>(rng: &mut R, y: &SkewMatrix) -> SkewMatrix {
    let p = rotation(rng, y.n()).map(c);
    normalized(&p * y.matrix() * p.transpose())
}

pub(crate) fn seed_point(x: &SkewMatrix, seed: u64, restart: u64) -> SkewMatrix {
    let n = x.n();
    let x0 = normalized(x.matrix().clone());
    if restart == 0 {
        return x0;
    }
    let mut rng = stream_rng(seed, restart);
    let round = restart / 4;
    match restart % 4 {
        1 => {
            let z = SkewMatrix::new(complex_matrix(&mut rng, n, n) * c(0.5));
            let e = z.matrix().clone().exp();
            let inv = e.transpose();
            normalized(&e * x0.matrix() * inv)
        }
        2 => {
            let t = [4.0, 8.0, 16.0][(round % 3) as usize];
            let (f1, f2) = random_real_pair(&mut rng, n);
            match boosted(x0.matrix(), &f1, &f2, t) {
                Some((y, _)) => real_rotation(&mut rng, &y),
                None => real_rotation(&mut rng, &x0),
            }
        }
        3 => {
            let (t1, t2) = [(12.0, 4.0), (24.0, 8.0)][(round % 2) as usize];
            let (f1, f2) = random_real_pair(&mut rng, n);
            let Some((y1, lim)) = boosted(x0.matrix(), &f1, &f2, t1) else {
                return real_rotation(&mut rng, &x0);
            };
            let lm = lim.matrix();
            let prime = (lm * lm).norm() > 1e-8 && numerical_rank(lm, 1e-6) == 2;
            let plane = if prime { minimal_boost_plane(&lim, restart).ok() } else { None };
            let (g1, g2) = plane.unwrap_or_else(|| random_real_pair(&mut rng, n));
            match boosted(y1.matrix(), &g1, &g2, t2) {
                Some((y2, _)) => real_rotation(&mut rng, &y2),
                None => real_rotation(&mut rng, &y1),
            }
        }
        _ => {
            let y = real_rotation(&mut rng, &x0);
            let z = SkewMatrix::new(complex_matrix(&mut rng, n, n) * c(0.1));
            let e = z.matrix().clone().exp();
            normalized(&e * y.matrix() * e.transpose())
        }
    }
}

pub(crate) fn minimize(
    r: &CurvatureOperator,
    sc: &StructureConstants,
    x: &SkewMatrix,
    iterations: usize,
    seed: u64,
    restart: u64,
) -> Result<Local> {
    let start = seed_point(x, seed, restart);
    let out = descend(
        start,
        iterations,
        |y| value_and_gradient(r, sc, y),
        |y| value(r, y),
        retract,
        |g| g.iter().map(|z: &C64| z.norm_sqr()).sum(),
    );
    Ok(Local {
        value: out.value,
        minimizer: out.point,
        iterations: out.iterations,
        converged: out.converged,
        grad_norm: out.grad_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::x_ij;
    use crate::rng::symmetric;

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = stream_rng(4, 0);
        let r = CurvatureOperator::new(5, symmetric(&mut rng, 10)).unwrap();
        let sc = StructureConstants::new(5);
        let y = seed_point(&x_ij(5, 0, 1).add(&x_ij(5, 2, 3).scale(c(0.3))), 9, 1);
        let (_, g) = value_and_gradient(&r, &sc, &y);
        let h = 1e-6;
        for al in 0..10 {
            for unit in [c(1.0), C64::new(0.0, 1.0)] {
                let mut w = CVec::zeros(10);
                w[al] = unit;
                let wm = SkewMatrix::from_coefficients(5, &w);
                let ep = (wm.matrix() * c(h)).exp();
                let em = (wm.matrix() * c(-h)).exp();
                let yp = SkewMatrix::new(&ep * y.matrix() * ep.transpose());
                let ym = SkewMatrix::new(&em * y.matrix() * em.transpose());
                let fd = (value(&r, &yp) - value(&r, &ym)) / (2.0 * h);
                // directional derivative along w is Re(Σ conj(G)·w)
                let pred: f64 = (g[al].conj() * unit).re;
                assert!((fd - pred).abs() < 1e-6, "α={al} fd {fd} pred {pred}");
            }
        }
    }

    #[test]
    fn seeds_stay_in_the_orbit() {
        let x = x_ij(5, 0, 1).add(&x_ij(5, 2, 3).scale(c(2.0)));
        let x0 = normalized(x.matrix().clone());
        // orbit invariants: traces of even powers after normalization
        let inv = |y: &SkewMatrix| {
            let m = y.matrix();
            let m2 = m * m;
            let t2 = m2.trace();
            let t4 = (&m2 * &m2).trace();
            t4 / (t2 * t2)
        };
        let target = inv(&x0);
        for restart in [1u64, 4, 5] {
            let y = seed_point(&x, 3, restart);
            assert!((inv(&y) - target).norm() < 1e-8, "restart {restart}");
        }
    }
}
