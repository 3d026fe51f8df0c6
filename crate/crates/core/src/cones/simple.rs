//! Simple elements `φ(e∧u)` with real `e`: classification and explicit
//! conjugators onto normal forms.

use rand::Rng;

use super::optim::descend;
use super::Local;
use crate::curvature::CurvatureOperator;
use crate::error::{Error, Result};
use crate::lie::{bilinear, c, complete_frame, herm_norm_sq, index_pairs, phi, unit, CMat, CVec, GroupElement, SkewMatrix, I};
use crate::rng::{complex_vector, stream_rng};

/// Relative threshold on `|(u,u)|/‖u‖²` separating the two cases.
pub const ISO_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum SimpleCase {
    /// `(u,u) ≠ 0`: the orbit closure holds every simple element.
    NonIsotropic,
    /// `(u,u) = 0`: normal form `φ(v∧(e₁+ie₂))`.
    Isotropic,
}

pub fn classify_simple(e: &CVec, u: &CVec) -> Result<SimpleCase> {
    if e.len() != u.len() {
        return Err(Error::DimensionMismatch { expected: e.len(), found: u.len() });
    }
    let ne = herm_norm_sq(e).sqrt();
    let nu = herm_norm_sq(u).sqrt();
    if ne == 0.0 || nu == 0.0 {
        return Err(Error::ZeroInput);
    }
    if e.iter().any(|z| z.im.abs() > 1e-12 * ne) {
        return Err(Error::Precondition("e must be real".into()));
    }
    if bilinear(e, u).norm() > 1e-10 * ne * nu {
        return Err(Error::Precondition(format!("(e,u) = {:.3e} must vanish", bilinear(e, u).norm())));
    }
    if bilinear(u, u).norm() > ISO_TOL * nu * nu {
        Ok(SimpleCase::NonIsotropic)
    } else {
        Ok(SimpleCase::Isotropic)
    }
}

/// Normal forms for [`conjugator_to_target`].
#[derive(Debug, Clone)]
pub enum Target {
    /// `(v₁, v₂)` orthonormal: target `φ(v₁∧v₂)`.
    Pair(CVec, CVec),
    /// `(v, f₁, f₂)` orthonormal: target `φ(v∧(f₁+if₂))`.
    Triple(CVec, CVec, CVec),
}

#[derive(Debug, Clone)]
pub struct Conjugation {
    pub p: GroupElement,
    /// `‖P X P⁻¹ − X_target‖_H` for the normalized source representative.
    pub residual: f64,
    /// Source representative: `φ(ê∧û)` (non-isotropic) or `φ(ê∧u)` (isotropic),
    /// with `ê`, `û` the `(·,·)`-unit rescalings.
    pub source: SkewMatrix,
    pub target: SkewMatrix,
}

fn bilinear_unit(v: &CVec) -> Result<CVec> {
    let q = bilinear(v, v);
    if q.norm() < 1e-14 * herm_norm_sq(v) {
        return Err(Error::IsotropicPivot { index: 0, value: q.norm() });
    }
    Ok(v * q.sqrt().inv())
}

/// Splits an isotropic `u ⊥ e` as `u = g₁ + ig₂` with `{ê, g₁, g₂}` orthonormal.
fn isotropic_split(e: &CVec, u: &CVec) -> (CVec, CVec) {
    let w0 = u.map(|z| z.conj()) * c(2.0 / herm_norm_sq(u));
    let w1 = &w0 - e * bilinear(e, &w0);
    let w = &w1 - u * (bilinear(&w1, &w1) * 0.25);
    let g1 = (u + &w) * c(0.5);
    let g2 = (u - &w) * (c(0.5) / I);
    (g1, g2)
}

fn proper(frame: &[CVec]) -> CMat {
    let mut m = CMat::from_columns(frame);
    if m.determinant().re < 0.0 {
        let n = m.ncols();
        m.column_mut(n - 1).neg_mut();
    }
    m
}

/// `P ∈ SO(n,ℂ)` carrying `φ(e∧u)` to the target normal form, built by
/// completing source and target to orthonormal frames.
pub fn conjugator_to_target(e: &CVec, u: &CVec, target: &Target) -> Result<Conjugation> {
    let case = classify_simple(e, u)?;
    let n = e.len();
    let eh = bilinear_unit(e)?;
    let (src, tgt, source, target_x) = match (case, target) {
        (SimpleCase::NonIsotropic, Target::Pair(v1, v2)) => {
            let uh = bilinear_unit(u)?;
            let src = complete_frame(&[eh.clone(), uh.clone()])?;
            let tgt = complete_frame(&[v1.clone(), v2.clone()])?;
            (src, tgt, phi(&eh, &uh)?, phi(v1, v2)?)
        }
        (SimpleCase::Isotropic, Target::Triple(v, f1, f2)) => {
            let (g1, g2) = isotropic_split(&eh, u);
            let src = complete_frame(&[eh.clone(), g1, g2])?;
            let tgt = complete_frame(&[v.clone(), f1.clone(), f2.clone()])?;
            (src, tgt, phi(&eh, u)?, phi(v, &(f1 + f2 * I))?)
        }
        _ => return Err(Error::Precondition("target normal form does not match the isotropy case".into())),
    };
    for v in [&tgt[..], &src[..]] {
        if v.len() != n || crate::lie::orthonormality_residual(v) > 1e-8 {
            return Err(Error::NotOrthonormal(crate::lie::orthonormality_residual(v)));
        }
    }
    // keep the first k columns fixed and fix orientation with the last one
    let a = proper(&src);
    let b = proper(&tgt);
    let p = GroupElement::try_new(&b * a.transpose(), 1e-8)?;
    let residual = p.conjugate(&source).sub(&target_x).norm();
    Ok(Conjugation { p, residual, source, target: target_x })
}

/// `φ(e₀∧(e₁+ie₂))/‖·‖`, the standard radial simple element of S′.
pub fn simple_radial(n: usize) -> Result<SkewMatrix> {
    if n < 3 {
        return Err(Error::Precondition("need n ≥ 3".into()));
    }
    phi(&unit(n, 0), &(unit(n, 1) + unit(n, 2) * I))?.normalized()
}

#[derive(Debug, Clone)]
pub(crate) struct PairPoint {
    p: CVec,
    q: CVec,
}

fn element(x: &PairPoint) -> SkewMatrix {
    SkewMatrix::new(&x.q * x.p.transpose() - &x.p * x.q.transpose())
}

fn value_and_gradient(r: &CurvatureOperator, x: &PairPoint) -> (f64, PairPoint) {
    let n = x.p.len();
    let pairs = index_pairs(n);
    let a = CVec::from_iterator(pairs.len(), pairs.iter().map(|&(i, j)| x.p[i] * x.q[j] - x.p[j] * x.q[i]));
    let (f, g) = super::frames::normalized_and_residual(r, &a);
    let mut gm = CMat::zeros(n, n);
    for (k, &(i, j)) in pairs.iter().enumerate() {
        gm[(j, i)] = g[k].conj();
        gm[(i, j)] = -g[k].conj();
    }
    let h1 = -(&gm * &x.q);
    let h2 = &gm * &x.p;
    (f, PairPoint { p: h1.map(|z| z.conj() * 2.0), q: h2.map(|z| z.conj() * 2.0) })
}

fn tidy(p: CVec, q: CVec) -> PairPoint {
    let p = &p * c(1.0 / herm_norm_sq(&p).sqrt());
    let q = &q - &p * p.dotc(&q);
    let q = &q * c(1.0 / herm_norm_sq(&q).sqrt().max(1e-300));
    PairPoint { p, q }
}

pub(crate) fn random_pair<R: Rng>(rng: &mut R, n: usize) -> PairPoint {
    tidy(complex_vector(rng, n), complex_vector(rng, n))
}

/// Minimizes over all simple elements `φ(p∧q)`.
pub(crate) fn minimize_free(r: &CurvatureOperator, iterations: usize, seed: u64, restart: u64) -> Result<Local> {
    let n = r.n();
    let mut rng = stream_rng(seed, restart);
    let start = random_pair(&mut rng, n);
    let out = descend(
        start,
        iterations,
        |x| value_and_gradient(r, x),
        |x| {
            let y = element(x);
            r.qform(&y).unwrap() / y.norm_sq()
        },
        |x, g, s| tidy(&x.p - &g.p * c(s), &x.q - &g.q * c(s)),
        |g| herm_norm_sq(&g.p) + herm_norm_sq(&g.q),
    );
    Ok(Local {
        value: out.value,
        minimizer: element(&out.point),
        iterations: out.iterations,
        converged: out.converged,
        grad_norm: out.grad_norm,
    })
}
