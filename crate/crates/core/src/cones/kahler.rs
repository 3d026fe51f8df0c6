//! Kähler support: u(m) ⊂ so(2m) in interleaved coordinates
//! `(x₁,y₁,…,x_m,y_m)` and the set S₁ of rank-one square-zero elements of
//! gl(m,ℂ) embedded in so(2m,ℂ).

use nalgebra::DMatrix;

use super::optim::descend;
use super::Local;
use crate::curvature::{complex_structure, fubini_study, CurvatureOperator};
use crate::error::{Error, Result};
use crate::lie::{c, herm_norm_sq, index_pairs, CMat, CVec, SkewMatrix, C64, I};
use crate::rng::{complex_vector, stream_rng};

/// Real `2m×2m` image of a complex `m×m` matrix: entry `b+ic` becomes the
/// block `[[b, −c], [c, b]]`.
fn realify(m: &CMat) -> DMatrix<f64> {
    let k = m.nrows();
    let mut out = DMatrix::zeros(2 * k, 2 * k);
    for a in 0..k {
        for b in 0..k {
            let z = m[(a, b)];
            out[(2 * a, 2 * b)] = z.re;
            out[(2 * a, 2 * b + 1)] = -z.im;
            out[(2 * a + 1, 2 * b)] = z.im;
            out[(2 * a + 1, 2 * b + 1)] = z.re;
        }
    }
    out
}

fn derealify(m: &DMatrix<f64>) -> CMat {
    let k = m.nrows() / 2;
    CMat::from_fn(k, k, |a, b| C64::new(m[(2 * a, 2 * b)], m[(2 * a + 1, 2 * b)]))
}

/// Complex-linear embedding `gl(m,ℂ) → so(2m,ℂ)`, `Z = M₁ + iM₂` with `M₁, M₂`
/// anti-Hermitian, `ι(Z) = ρ(M₁) + iρ(M₂)`.
pub fn embed_gl(z: &CMat) -> SkewMatrix {
    let m1 = (z - z.adjoint()) * c(0.5);
    let m2 = (z + z.adjoint()) * (c(0.5) / I);
    let r1 = realify(&m1).map(c);
    let r2 = realify(&m2).map(c);
    SkewMatrix::new(r1 + r2 * I)
}

/// Inverse of [`embed_gl`] on its image.
pub(crate) fn unembed(x: &CMat) -> CMat {
    let m1 = derealify(&x.map(|z| z.re));
    let m2 = derealify(&x.map(|z| z.im));
    m1 + m2 * I
}

/// Orthogonal projector `(Id + Ĵ)/2` of so(2m) onto u(m), where
/// `Ĵ_{(ij),(kl)} = J_ik J_jl − J_il J_jk`.
pub fn unitary_projector(n: usize) -> DMatrix<f64> {
    let j = complex_structure(n);
    let pairs = index_pairs(n);
    let d = pairs.len();
    let mut p = DMatrix::identity(d, d);
    for (a, &(i, jj)) in pairs.iter().enumerate() {
        for (b, &(k, l)) in pairs.iter().enumerate() {
            p[(a, b)] += j[(i, k)] * j[(jj, l)] - j[(i, l)] * j[(jj, k)];
        }
    }
    p * 0.5
}

/// `‖R − ΠRΠ‖` for the u(m) projector `Π`.
pub fn unitary_support_residual(r: &CurvatureOperator) -> f64 {
    let n = r.n();
    if n % 2 != 0 {
        return f64::INFINITY;
    }
    let p = unitary_projector(n);
    (r.matrix() - &p * r.matrix() * &p).norm()
}

/// Fubini–Study on ℂP^m (real dimension `2m`), holomorphic sectional curvature 4.
pub fn fubini_study_kahler(m: usize) -> Result<CurvatureOperator> {
    fubini_study(2 * m)
}

/// `qform(R, ι(z wᴴ))` for unit `z, w` with `wᴴz = 0`.
pub fn obc_form(r: &CurvatureOperator, z: &CVec, w: &CVec) -> Result<f64> {
    let n = r.n();
    if n % 2 != 0 || z.len() * 2 != n || w.len() != z.len() {
        return Err(Error::DimensionMismatch { expected: n / 2, found: z.len() });
    }
    let res = unitary_support_residual(r);
    if res > 1e-10 {
        return Err(Error::NotUnitarySupported(res));
    }
    let (nz, nw) = (herm_norm_sq(z).sqrt(), herm_norm_sq(w).sqrt());
    if nz == 0.0 || nw == 0.0 {
        return Err(Error::ZeroInput);
    }
    let z = z * c(1.0 / nz);
    let w = w * c(1.0 / nw);
    let overlap = w.dotc(&z).norm();
    if overlap > 1e-10 {
        return Err(Error::Precondition(format!("directions are not orthogonal (|wᴴz| = {overlap:.3e})")));
    }
    r.qform(&embed_gl(&(&z * w.adjoint())))
}

#[derive(Debug, Clone)]
pub(crate) struct KPoint {
    z: CVec,
    w: CVec,
}

fn tidy(z: CVec, w: CVec) -> KPoint {
    let z = &z * c(1.0 / herm_norm_sq(&z).sqrt());
    let w = &w - &z * z.dotc(&w);
    let w = &w * c(1.0 / herm_norm_sq(&w).sqrt().max(1e-300));
    KPoint { z, w }
}

fn element(p: &KPoint) -> SkewMatrix {
    embed_gl(&(&p.z * p.w.adjoint()))
}

fn value(r: &CurvatureOperator, p: &KPoint) -> f64 {
    let x = element(p);
    r.qform(&x).unwrap() / x.norm_sq()
}

/// Central-difference gradient in the real coordinates of `(z, w)`.
fn gradient(r: &CurvatureOperator, p: &KPoint) -> KPoint {
    let m = p.z.len();
    let h = 1e-6;
    let mut gz = CVec::zeros(m);
    let mut gw = CVec::zeros(m);
    for k in 0..m {
        for (dir, part) in [(c(1.0), 0), (I, 1)] {
            let probe = |which: usize, s: f64| {
                let mut q = p.clone();
                if which == 0 {
                    q.z[k] += dir * s;
                } else {
                    q.w[k] += dir * s;
                }
                value(r, &q)
            };
            let dz = (probe(0, h) - probe(0, -h)) / (2.0 * h);
            let dw = (probe(1, h) - probe(1, -h)) / (2.0 * h);
            if part == 0 {
                gz[k].re = dz;
                gw[k].re = dw;
            } else {
                gz[k].im = dz;
                gw[k].im = dw;
            }
        }
    }
    KPoint { z: gz, w: gw }
}

pub(crate) fn minimize(r: &CurvatureOperator, iterations: usize, seed: u64, restart: u64) -> Result<Local> {
    let m = r.n() / 2;
    if m < 2 {
        return Err(Error::Precondition("S1 needs m ≥ 2".into()));
    }
    let mut rng = stream_rng(seed, restart);
    let start = tidy(complex_vector(&mut rng, m), complex_vector(&mut rng, m));
    let out = descend(
        start,
        iterations,
        |p| (value(r, p), gradient(r, p)),
        |p| value(r, p),
        |p, g, s| tidy(&p.z - &g.z * c(s), &p.w - &g.w * c(s)),
        |g| herm_norm_sq(&g.z) + herm_norm_sq(&g.w),
    );
    Ok(Local {
        value: out.value,
        minimizer: element(&out.point),
        iterations: out.iterations,
        converged: out.converged,
        grad_norm: out.grad_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::unit;
    use crate::rng::complex_matrix;

    #[test]
    fn projector_is_onto_unitary_algebra() {
        for m in 2..4 {
            let n = 2 * m;
            let p = unitary_projector(n);
            assert!((&p * &p - &p).norm() < 1e-14);
            assert!((p.trace() - (m * m) as f64).abs() < 1e-12);
            // images of anti-Hermitian matrices are fixed
            let mut rng = stream_rng(m as u64, 0);
            let a = complex_matrix(&mut rng, m, m);
            let ah = (&a - a.adjoint()) * c(0.5);
            let x = SkewMatrix::from_real(&realify(&ah));
            let coeffs = x.coefficients().map(|z| z.re);
            assert!((&p * &coeffs - &coeffs).norm() < 1e-12);
        }
    }

    #[test]
    fn embedding_is_complex_linear_and_invertible() {
        let mut rng = stream_rng(7, 0);
        let z = complex_matrix(&mut rng, 3, 3);
        let x = embed_gl(&z);
        assert!((unembed(x.matrix()) - &z).norm() < 1e-13);
        let xi = embed_gl(&(&z * I));
        assert!((xi.matrix() - x.matrix() * I).norm() < 1e-13);
        // brackets are preserved
        let w = complex_matrix(&mut rng, 3, 3);
        let lhs = embed_gl(&(&z * &w - &w * &z));
        let rhs = crate::lie::bracket(&x, &embed_gl(&w));
        assert!(lhs.sub(&rhs).norm() < 1e-12);
    }

    #[test]
    fn fubini_study_is_unitary_and_obc_positive() {
        let fs = fubini_study_kahler(2).unwrap();
        assert!(unitary_support_residual(&fs) < 1e-14);
        let v = obc_form(&fs, &unit(2, 0), &unit(2, 1)).unwrap();
        // bisectional curvature K(x,y) + K(x,Jy) for x = e₀, y = e₂, Jy = e₃
        let oracle = fs.sectional(0, 2).unwrap() + fs.sectional(0, 3).unwrap();
        assert!((v - oracle).abs() < 1e-12 && (v - 2.0).abs() < 1e-12, "obc = {v}");
        let zw = embed_gl(&(unit(2, 0) * unit(2, 1).adjoint()));
        assert!((zw.norm_sq() - 1.0).abs() < 1e-14);
        assert!(obc_form(&fs, &unit(2, 0), &unit(2, 0)).is_err());
        assert!(obc_form(&CurvatureOperator::identity(4), &unit(2, 0), &unit(2, 1)).is_err());
    }

    #[test]
    fn unitary_identity_block_is_constant_on_pairs() {
        let n = 6;
        let p = unitary_projector(n);
        let r = CurvatureOperator::new(n, p).unwrap();
        let mut rng = stream_rng(8, 0);
        let mut vals = Vec::new();
        for _ in 0..5 {
            let z = complex_vector(&mut rng, 3);
            let w = complex_vector(&mut rng, 3);
            let kp = tidy(z, w);
            vals.push(obc_form(&r, &kp.z, &kp.w).unwrap());
        }
        assert!(vals[0] > 0.0);
        assert!(vals.iter().all(|v| (v - vals[0]).abs() < 1e-12));
    }
}
