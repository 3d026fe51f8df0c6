//! Frame reductions for S₀ and S′ and their minimization over real
//! orthonormal 4-frames.
//!
//! S₀ elements are `φ((f₁+if₂)∧(f₃+if₄))`; S′ elements are
//! `φ((f₃+iλf₄)∧(f₁+if₂))` with `λ ∈ [−1,1]` (up to scale and conjugation).

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::optim::descend;
use super::Local;
use crate::curvature::CurvatureOperator;
use crate::error::{Error, Result};
use crate::lie::{index_pairs, CVec, SkewMatrix, C64};
use crate::rng::{rotation, stream_rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameKind {
    /// S₀: `λ ≡ 1`.
    Isotropic,
    /// S′: `λ ∈ [−1,1]` free.
    Prime,
}

fn real_coeffs(n: usize, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    // coefficient of X_ij in φ(u∧v) is (v uᵀ − u vᵀ)_{ji} = u_i v_j − u_j v_i
    DVector::from_iterator(index_pairs(n).len(), index_pairs(n).into_iter().map(|(i, j)| u[i] * v[j] - u[j] * v[i]))
}

fn check_frame(frame: &[DVector<f64>]) -> Result<()> {
    if frame.len() != 4 {
        return Err(Error::InvalidParameter(format!("need 4 frame vectors, got {}", frame.len())));
    }
    let n = frame[0].len();
    let mut worst: f64 = 0.0;
    for (a, u) in frame.iter().enumerate() {
        if u.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: u.len() });
        }
        for (b, v) in frame.iter().enumerate() {
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((u.dot(v) - target).abs());
        }
    }
    if worst > 1e-10 {
        return Err(Error::NotOrthonormal(worst));
    }
    Ok(())
}

struct FrameData {
    k: [[f64; 4]; 4],
    r1234: f64,
}

fn frame_data(r: &CurvatureOperator, frame: &[DVector<f64>]) -> Result<FrameData> {
    check_frame(frame)?;
    let n = r.n();
    if frame[0].len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: frame[0].len() });
    }
    let m = r.matrix();
    let mut k = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            if a != b {
                let x = real_coeffs(n, &frame[a], &frame[b]);
                k[a][b] = x.dot(&(m * &x));
            }
        }
    }
    let x12 = real_coeffs(n, &frame[0], &frame[1]);
    let x34 = real_coeffs(n, &frame[2], &frame[3]);
    Ok(FrameData { k, r1234: x12.dot(&(m * x34)) })
}

/// `K₁₃ + μ²K₁₄ + λ²K₂₃ + λ²μ²K₂₄ − 2λμR₁₂₃₄` for frame slots 1..4.
pub fn isotropic_form(r: &CurvatureOperator, frame: &[DVector<f64>], lambda: f64, mu: f64) -> Result<f64> {
    let d = frame_data(r, frame)?;
    let k = d.k;
    let (l2, m2) = (lambda * lambda, mu * mu);
    Ok(k[0][2] + m2 * k[0][3] + l2 * k[1][2] + l2 * m2 * k[1][3] - 2.0 * lambda * mu * d.r1234)
}

/// `K₁₃ + λ²K₁₄ + K₂₃ + λ²K₂₄ − 2λR₁₂₃₄`, `λ ∈ [−1,1]`.
pub fn pic1_form(r: &CurvatureOperator, frame: &[DVector<f64>], lambda: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} outside [-1,1]")));
    }
    let d = frame_data(r, frame)?;
    let k = d.k;
    let l2 = lambda * lambda;
    Ok(k[0][2] + l2 * k[0][3] + k[1][2] + l2 * k[1][3] - 2.0 * lambda * d.r1234)
}

#[derive(Debug, Clone)]
pub(crate) struct FramePoint {
    pub f: DMatrix<f64>,
    pub lam: f64,
}

fn complex_pair(kind: FrameKind, p: &FramePoint) -> (CVec, CVec) {
    let col = |k: usize| p.f.column(k).map(|v| C64::new(v, 0.0));
    let i = C64::new(0.0, 1.0);
    match kind {
        FrameKind::Isotropic => (col(0) + col(1) * i, col(2) + col(3) * i),
        FrameKind::Prime => (col(2) + col(3) * (i * p.lam), col(0) + col(1) * i),
    }
}

pub(crate) fn element(kind: FrameKind, p: &FramePoint) -> SkewMatrix {
    let (c1, c2) = complex_pair(kind, p);
    SkewMatrix::new(&c2 * c1.transpose() - &c1 * c2.transpose())
}

/// Normalized value and its Euclidean gradient in `(F, λ)`.
pub(crate) fn value_and_gradient(r: &CurvatureOperator, kind: FrameKind, p: &FramePoint) -> (f64, FramePoint) {
    let n = p.f.nrows();
    let (c1, c2) = complex_pair(kind, p);
    let pairs = index_pairs(n);
    let a: CVec = CVec::from_iterator(pairs.len(), pairs.iter().map(|&(i, j)| c1[i] * c2[j] - c1[j] * c2[i]));
    let (f, g) = normalized_and_residual(r, &a);
    // skew G with G[j,i] = g_α; h₁ = −conj(G)c₂, h₂ = conj(G)c₁
    let mut gm = nalgebra::DMatrix::<C64>::zeros(n, n);
    for (k, &(i, j)) in pairs.iter().enumerate() {
        gm[(j, i)] = g[k].conj();
        gm[(i, j)] = -g[k].conj();
    }
    let h1 = -(&gm * &c2);
    let h2 = &gm * &c1;
    let re = |v: &CVec| v.map(|z| z.re);
    let im = |v: &CVec| v.map(|z| z.im);
    let mut grad = DMatrix::zeros(n, 4);
    let mut glam = 0.0;
    match kind {
        FrameKind::Isotropic => {
            grad.set_column(0, &(re(&h1) * 2.0));
            grad.set_column(1, &(im(&h1) * -2.0));
            grad.set_column(2, &(re(&h2) * 2.0));
            grad.set_column(3, &(im(&h2) * -2.0));
        }
        FrameKind::Prime => {
            grad.set_column(2, &(re(&h1) * 2.0));
            grad.set_column(3, &(im(&h1) * (-2.0 * p.lam)));
            glam = -2.0 * p.f.column(3).dot(&im(&h1));
            grad.set_column(0, &(re(&h2) * 2.0));
            grad.set_column(1, &(im(&h2) * -2.0));
        }
    }
    (f, FramePoint { f: grad, lam: glam })
}

/// `(qform/‖a‖², (Ra − f a)/‖a‖²)` for a coefficient vector.
pub(crate) fn normalized_and_residual(r: &CurvatureOperator, a: &CVec) -> (f64, CVec) {
    let m = r.matrix();
    let d = a.len();
    let mut ra = CVec::zeros(d);
    for i in 0..d {
        let mut s = C64::new(0.0, 0.0);
        for j in 0..d {
            s += a[j] * m[(i, j)];
        }
        ra[i] = s;
    }
    let nrm: f64 = a.iter().map(|z| z.norm_sqr()).sum();
    let q: f64 = a.iter().zip(ra.iter()).map(|(x, y)| (x.conj() * y).re).sum();
    let f = q / nrm;
    let g = (ra - a * C64::new(f, 0.0)) * C64::new(1.0 / nrm, 0.0);
    (f, g)
}

fn value(r: &CurvatureOperator, kind: FrameKind, p: &FramePoint) -> f64 {
    let x = element(kind, p);
    r.qform(&x).unwrap() / x.norm_sq()
}

/// Riemannian gradient on the Stiefel manifold: `G − F·sym(FᵀG)`.
fn project(p: &FramePoint, g: &FramePoint, kind: FrameKind) -> FramePoint {
    let ftg = p.f.transpose() * &g.f;
    let sym = (&ftg + ftg.transpose()) * 0.5;
    let mut lam = g.lam;
    if kind == FrameKind::Prime {
        // keep the box constraint active instead of pushing past it
        if (p.lam >= 1.0 && lam < 0.0) || (p.lam <= -1.0 && lam > 0.0) {
            lam = 0.0;
        }
    }
    FramePoint { f: &g.f - &p.f * sym, lam }
}

fn retract(p: &FramePoint, g: &FramePoint, s: f64) -> FramePoint {
    let y = &p.f - &g.f * s;
    let qr = y.qr();
    let (q, rr) = (qr.q(), qr.r());
    let mut q = q.columns(0, 4).into_owned();
    for k in 0..4 {
        if rr[(k, k)] < 0.0 {
            q.column_mut(k).neg_mut();
        }
    }
    FramePoint { f: q, lam: (p.lam - s * g.lam).clamp(-1.0, 1.0) }
}

pub(crate) fn random_point<R: Rng>(rng: &mut R, n: usize, kind: FrameKind) -> FramePoint {
    let q = rotation(rng, n);
    let lam = match kind {
        FrameKind::Isotropic => 1.0,
        FrameKind::Prime => rng.random_range(-1.0..1.0),
    };
    FramePoint { f: q.columns(0, 4).into_owned(), lam }
}

pub(crate) fn minimize(
    r: &CurvatureOperator,
    kind: FrameKind,
    iterations: usize,
    seed: u64,
    restart: u64,
) -> Result<Local> {
    let n = r.n();
    if n < 4 {
        return Err(Error::Precondition("frame reductions need n ≥ 4".into()));
    }
    let mut rng = stream_rng(seed, restart);
    let start = random_point(&mut rng, n, kind);
    let out = descend(
        start,
        iterations,
        |p| {
            let (f, g) = value_and_gradient(r, kind, p);
            (f, project(p, &g, kind))
        },
        |p| value(r, kind, p),
        retract,
        |g| g.f.norm_squared() + g.lam * g.lam,
    );
    Ok(Local {
        value: out.value,
        minimizer: element(kind, &out.point),
        iterations: out.iterations,
        converged: out.converged,
        grad_norm: out.grad_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::{fubini_study, Model};
    use crate::rng::symmetric;

    fn std_frame(n: usize, idx: [usize; 4]) -> Vec<DVector<f64>> {
        idx.iter().map(|&k| DVector::from_fn(n, |i, _| if i == k { 1.0 } else { 0.0 })).collect()
    }

    #[test]
    fn form_examples() {
        let s = CurvatureOperator::identity(5);
        let mut rng = stream_rng(1, 0);
        let q = rotation(&mut rng, 5);
        let fr: Vec<DVector<f64>> = (0..4).map(|k| q.column(k).into_owned()).collect();
        assert!((isotropic_form(&s, &fr, 1.0, 1.0).unwrap() - 4.0).abs() < 1e-12);
        assert!((pic1_form(&s, &fr, 1.0).unwrap() - 4.0).abs() < 1e-12);
        let cyl = Model::Cylinder.build(5).unwrap();
        assert!((isotropic_form(&cyl, &std_frame(5, [0, 1, 2, 3]), 1.0, 1.0).unwrap() - 2.0).abs() < 1e-14);
        assert!(pic1_form(&cyl, &std_frame(5, [1, 2, 0, 3]), 0.0).unwrap().abs() < 1e-14);
        let r = CurvatureOperator::new(5, symmetric(&mut rng, 10)).unwrap();
        let k13 = r.sectional(0, 2).unwrap();
        let k14 = r.sectional(0, 3).unwrap();
        let k23 = r.sectional(1, 2).unwrap();
        let fr = std_frame(5, [0, 1, 2, 3]);
        assert!((isotropic_form(&r, &fr, 0.0, 0.7).unwrap() - (k13 + 0.49 * k14)).abs() < 1e-12);
        assert!((pic1_form(&r, &fr, 0.0).unwrap() - (k13 + k23)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_frames() {
        let s = CurvatureOperator::identity(4);
        let mut fr = std_frame(4, [0, 1, 2, 3]);
        fr[1][0] = 0.1;
        assert!(matches!(isotropic_form(&s, &fr, 1.0, 1.0), Err(Error::NotOrthonormal(_))));
        assert!(pic1_form(&s, &std_frame(4, [0, 1, 2, 3]), 1.5).is_err());
    }

    #[test]
    fn isotropic_form_is_the_curvature_form_for_bianchi_operators() {
        let mut rng = stream_rng(2, 0);
        let fs = fubini_study(6).unwrap();
        let q = rotation(&mut rng, 6);
        let fr: Vec<DVector<f64>> = (0..4).map(|k| q.column(k).into_owned()).collect();
        let p = FramePoint { f: q.columns(0, 4).into_owned(), lam: 1.0 };
        let x = element(FrameKind::Isotropic, &p);
        assert!((isotropic_form(&fs, &fr, 1.0, 1.0).unwrap() - fs.qform(&x).unwrap()).abs() < 1e-12);
        // the (eq) combination is the μ-family at λ = 1
        for mu in [-0.8, 0.0, 0.3, 1.0] {
            let a = isotropic_form(&fs, &fr, 1.0, mu).unwrap();
            let b = pic1_form(&fs, &fr, mu).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = stream_rng(3, 0);
        let r = CurvatureOperator::new(5, symmetric(&mut rng, 10)).unwrap();
        for kind in [FrameKind::Isotropic, FrameKind::Prime] {
            let mut p = random_point(&mut rng, 5, kind);
            p.lam = 0.4;
            let (_, g) = value_and_gradient(&r, kind, &p);
            let h = 1e-6;
            for i in 0..5 {
                for k in 0..4 {
                    let mut a = p.clone();
                    let mut b = p.clone();
                    a.f[(i, k)] += h;
                    b.f[(i, k)] -= h;
                    let fd = (value(&r, kind, &a) - value(&r, kind, &b)) / (2.0 * h);
                    assert!((fd - g.f[(i, k)]).abs() < 1e-6, "{kind:?} ({i},{k}) fd {fd} g {}", g.f[(i, k)]);
                }
            }
            if kind == FrameKind::Prime {
                let mut a = p.clone();
                let mut b = p.clone();
                a.lam += h;
                b.lam -= h;
                let fd = (value(&r, kind, &a) - value(&r, kind, &b)) / (2.0 * h);
                assert!((fd - g.lam).abs() < 1e-6);
            }
        }
    }
}
