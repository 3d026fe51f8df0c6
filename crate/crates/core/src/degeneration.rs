//! Boost degenerations of adjoint orbits in so(n,ℂ): unbounded conjugator
//! families, graded extraction of normalized limits, and reduction to the
//! minimal nilpotent orbit.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::lie::{
    bilinear, boost_complex, c, complete_frame, herm_norm_sq, numerical_rank, phi, unit, CMat, CVec, GroupElement,
    SkewMatrix, I,
};
use crate::rng::{real_vector, stream_rng};

/// Geometric schedule `1, 2, 4, …, 64`.
pub const SCHEDULE: [f64; 7] = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0];
/// Relative singular-value threshold for rank decisions.
pub const RANK_TOL: f64 = 1e-6;
/// Successive normalized conjugates closer than this count as converged.
pub const CONV_TOL: f64 = 1e-8;

/// Grades `−2..=2` of `ad(iφ(f1∧f2))` acting on a matrix.
#[derive(Debug, Clone)]
pub struct Graded {
    components: [CMat; 5],
}

impl Graded {
    /// Exact decomposition by the spectral projectors of the generator
    /// (eigenvalues `±1` on `f1 ± i f2`, `0` on the bilinear complement).
    pub fn by_projectors(x: &CMat, f1: &CVec, f2: &CVec) -> Self {
        let n = x.nrows();
        let zp = f1 + f2 * I;
        let zm = f1 - f2 * I;
        let pp = &zp * zm.transpose() * c(0.5);
        let pm = &zm * zp.transpose() * c(0.5);
        let p0 = CMat::identity(n, n) - &pp - &pm;
        let proj = [(-1i32, pm), (0, p0), (1, pp)];
        let mut components: [CMat; 5] = std::array::from_fn(|_| CMat::zeros(n, n));
        for (a, pa) in &proj {
            for (b, pb) in &proj {
                components[(a - b + 2) as usize] += pa * x * pb;
            }
        }
        Self { components }
    }

    /// Recovers the grades from conjugates sampled at `t = −1, −½, 0, ½, 1` by
    /// solving the 5×5 exponential Vandermonde system entrywise.
    pub fn by_sampling(x: &CMat, f1: &CVec, f2: &CVec) -> Result<Self> {
        let n = x.nrows();
        let ts = [-1.0, -0.5, 0.0, 0.5, 1.0];
        let mut samples = Vec::with_capacity(5);
        for &t in &ts {
            let p = boost_complex(f1, f2, t)?;
            samples.push(p.matrix() * x * p.matrix().transpose());
        }
        let v = DMatrix::from_fn(5, 5, |i, k| (((k as i32) - 2) as f64 * ts[i]).exp());
        let vinv = v.try_inverse().ok_or_else(|| Error::NonConvergence("singular sampling system".into()))?;
        let mut components: [CMat; 5] = std::array::from_fn(|_| CMat::zeros(n, n));
        for (k, comp) in components.iter_mut().enumerate() {
            for (i, s) in samples.iter().enumerate() {
                *comp += s * c(vinv[(k, i)]);
            }
        }
        Ok(Self { components })
    }

    pub fn component(&self, grade: i32) -> &CMat {
        &self.components[(grade + 2) as usize]
    }

    /// Highest grade whose component exceeds `tol` relative to the total.
    pub fn top_grade(&self, tol: f64) -> i32 {
        let total: f64 = self.components.iter().map(|m| m.norm()).sum();
        (-2..=2).rev().find(|&g| self.component(g).norm() > tol * total.max(1e-300)).unwrap_or(-2)
    }

    /// `e^{−top·t} P_t X P_t⁻¹`, evaluated without forming huge intermediate terms.
    pub fn scaled_conjugate(&self, t: f64, top: i32) -> CMat {
        let n = self.components[0].nrows();
        let mut out = CMat::zeros(n, n);
        for g in -2..=top {
            out += self.component(g) * c(((g - top) as f64 * t).exp());
        }
        out
    }
}

/// Boost family `P_t = exp(t·iφ(f1∧f2))` with `‖P_t X P_t⁻¹‖ → ∞`.
#[derive(Debug, Clone)]
pub struct BoostFamily {
    pub v: CVec,
    pub f1: CVec,
    pub f2: CVec,
    pub perturbations: usize,
    /// `(t, ‖P_t X P_t⁻¹‖_H)` along the schedule, starting at `t = 0`.
    pub growth: Vec<(f64, f64)>,
}

impl BoostFamily {
    pub fn at(&self, t: f64) -> Result<GroupElement> {
        boost_complex(&self.f1, &self.f2, t)
    }
}

/// Follows the classical construction: a non-isotropic `v` with
/// `(Xv, Xv) ≠ 0`, the orthonormal frame `{v, cXv, v₃, …}` with
/// `c = (Xv,Xv)^{−1/2}`, and the boost in the `(cXv, v₃)`-plane.
pub fn unbounded_conjugators(x: &SkewMatrix) -> Result<BoostFamily> {
    let n = x.n();
    let xm = x.matrix();
    let sq = (xm * xm).norm();
    if sq <= 1e-10 * x.norm_sq().max(1e-300) || sq <= 1e-10 && x.norm() <= 1.0 {
        return Err(Error::Precondition("unbounded_conjugators needs X² ≠ 0".into()));
    }
    if n < 3 {
        return Err(Error::Precondition("need n ≥ 3 for a boost plane".into()));
    }
    let mut rng = stream_rng(0x5eed_b005, n as u64);
    for perturbations in 0..=3 {
        // deterministic starting vector, perturbed per attempt
        let v = if perturbations == 0 {
            let mut v = CVec::from_element(n, c(1.0));
            for k in 0..n {
                v[k] += c(0.1 * k as f64);
            }
            v
        } else {
            real_vector(&mut rng, n).map(c)
        };
        let vv = bilinear(&v, &v);
        let xv = xm * &v;
        let q = bilinear(&xv, &xv);
        let scale = herm_norm_sq(&v) * xm.norm().powi(2);
        if vv.norm() < 1e-6 * herm_norm_sq(&v) || q.norm() < 1e-6 * scale {
            continue;
        }
        let v1 = &v * vv.sqrt().inv();
        let xv1 = xm * &v1;
        let f1 = &xv1 * bilinear(&xv1, &xv1).sqrt().inv();
        let frame = match complete_frame(&[v1.clone(), f1.clone()]) {
            Ok(f) => f,
            Err(_) => continue,
        };
        let f2 = frame[2].clone();
        let mut family = BoostFamily { v: v1, f1, f2, perturbations, growth: Vec::new() };
        for &t in std::iter::once(&0.0).chain(SCHEDULE.iter()) {
            if t > 16.0 {
                break;
            }
            let p = family.at(t)?;
            family.growth.push((t, p.conjugate(x).norm()));
        }
        let g0 = family.growth[0].1;
        if family.growth.last().unwrap().1 > 10.0 * g0 {
            return Ok(family);
        }
    }
    Err(Error::IterationCap("no unbounded boost family after 3 perturbations".into()))
}

/// One degeneration step and its diagnostics.
#[derive(Debug, Clone)]
pub struct DegenerationStep {
    pub input: SkewMatrix,
    pub f1: Option<CVec>,
    pub f2: Option<CVec>,
    pub schedule: Vec<f64>,
    pub limit: SkewMatrix,
    pub grade: i32,
    /// `‖normalized conjugate(t) − limit‖_H` along the schedule.
    pub residuals: Vec<f64>,
    pub min_poly_degree: usize,
    /// `‖T^p‖` (Frobenius) with `p` the minimal-polynomial degree of the input.
    pub nilpotency: f64,
}

/// Normalized top-grade limit of `P_t X P_t⁻¹` for a given boost plane.
pub fn boost_limit(x: &SkewMatrix, f1: &CVec, f2: &CVec) -> Result<DegenerationStep> {
    let graded = Graded::by_sampling(x.matrix(), f1, f2)?;
    let top = graded.top_grade(1e-9);
    if top <= 0 {
        return Err(Error::NonConvergence("boost plane does not separate the input".into()));
    }
    let limit = SkewMatrix::new(graded.component(top).clone()).normalized()?;
    let mut residuals = Vec::with_capacity(SCHEDULE.len());
    for &t in &SCHEDULE {
        let y = SkewMatrix::new(graded.scaled_conjugate(t, top)).normalized()?;
        residuals.push(align_phase_distance(&y, &limit));
    }
    if *residuals.last().unwrap() > CONV_TOL {
        return Err(Error::NonConvergence(format!("tail residual {:.3e}", residuals.last().unwrap())));
    }
    let p = minimal_polynomial_degree(x.matrix());
    let nil = matrix_power(limit.matrix(), p).norm();
    Ok(DegenerationStep {
        input: x.clone(),
        f1: Some(f1.clone()),
        f2: Some(f2.clone()),
        schedule: SCHEDULE.to_vec(),
        limit,
        grade: top,
        residuals,
        min_poly_degree: p,
        nilpotency: nil,
    })
}

fn align_phase_distance(a: &SkewMatrix, b: &SkewMatrix) -> f64 {
    a.sub(b).norm()
}

/// Normalized nilpotent limit of the orbit of `X`.
pub fn nilpotent_limit(x: &SkewMatrix) -> Result<DegenerationStep> {
    if x.norm() == 0.0 {
        return Err(Error::ZeroInput);
    }
    let xm = x.matrix();
    if (xm * xm).norm() <= 1e-10 * x.norm_sq() {
        let limit = x.normalized()?;
        let p = minimal_polynomial_degree(xm);
        return Ok(DegenerationStep {
            input: x.clone(),
            f1: None,
            f2: None,
            schedule: Vec::new(),
            nilpotency: matrix_power(limit.matrix(), p).norm(),
            limit,
            grade: 0,
            residuals: Vec::new(),
            min_poly_degree: p,
        });
    }
    let fam = unbounded_conjugators(x)?;
    boost_limit(x, &fam.f1, &fam.f2)
}

/// Result of [`reduce_to_minimal`].
#[derive(Debug, Clone)]
pub struct MinimalReduction {
    pub steps: Vec<DegenerationStep>,
    pub output: SkewMatrix,
    pub square_residual: f64,
    pub rank: usize,
}

/// Degenerates `X` to a unit element of the minimal orbit S₀ (rank 2,
/// square zero). Needs `n ≥ 4`.
pub fn reduce_to_minimal(x: &SkewMatrix) -> Result<MinimalReduction> {
    let n = x.n();
    if n < 4 {
        return Err(Error::Precondition("S0 is empty for n < 4".into()));
    }
    if x.norm() == 0.0 {
        return Err(Error::ZeroInput);
    }
    let mut steps = Vec::new();
    let mut y = x.normalized()?;
    let mut rng = stream_rng(0x5eed_0001, n as u64);
    for _ in 0..12 {
        let ym = y.matrix();
        let sq = (ym * ym).norm();
        let rank = numerical_rank(ym, RANK_TOL);
        if sq <= 1e-8 && rank == 2 {
            return Ok(MinimalReduction { steps, output: y, square_residual: sq, rank });
        }
        let step = if sq > 1e-8 && rank == 2 && (ym * ym * ym).norm() <= 1e-8 {
            prime_to_minimal(&y)?
        } else if sq > 1e-8 && steps.is_empty() {
            nilpotent_limit(&y)?
        } else {
            match random_boost_limit(&y, &mut rng) {
                Some(s) => s,
                None => continue,
            }
        };
        y = step.limit.clone();
        steps.push(step);
    }
    Err(Error::IterationCap("reduce_to_minimal did not reach S0 in 12 steps".into()))
}

fn random_boost_limit<R: Rng>(y: &SkewMatrix, rng: &mut R) -> Option<DegenerationStep> {
    let n = y.n();
    let a = real_vector(rng, n);
    let b = real_vector(rng, n);
    let f1 = a.normalize();
    let b = &b - &f1 * f1.dot(&b);
    let f2 = b.normalize();
    boost_limit(y, &f1.map(c), &f2.map(c)).ok()
}

/// For `Y = φ(z∧w)` with `(z,z) = (z,w) = 0 ≠ (w,w)`: the `(ŵ, g)` boost plane,
/// `g` a unit vector bilinear-orthogonal to `z` and `w`. Boosting there leaves
/// the square-zero component `∝ φ(z∧(ŵ ± ig))`. `attempt` reseeds the choice of `g`.
pub fn minimal_boost_plane(y: &SkewMatrix, attempt: u64) -> Result<(CVec, CVec)> {
    let n = y.n();
    let ym = y.matrix();
    let y2 = ym * ym;
    let (z, w) = simple_factors_prime(ym, &y2)?;
    let wn = &w * bilinear(&w, &w).sqrt().inv();
    let a = CMat::from_rows(&[z.transpose(), wn.transpose()]);
    let aah = &a * a.adjoint();
    let inv = aah.try_inverse().ok_or_else(|| Error::NonConvergence("degenerate simple factors".into()))?;
    let proj = CMat::identity(n, n) - a.adjoint() * inv * &a;
    let mut rng = stream_rng(0x5eed_0002, attempt);
    for _ in 0..16 {
        let r = real_vector(&mut rng, n).map(c) + real_vector(&mut rng, n).map(|v| c(v) * I);
        let g = &proj * r;
        let gg = bilinear(&g, &g);
        if gg.norm() < 1e-3 * herm_norm_sq(&g) {
            continue;
        }
        return Ok((wn, &g * gg.sqrt().inv()));
    }
    Err(Error::NonConvergence("no admissible second boost plane".into()))
}

fn prime_to_minimal(y: &SkewMatrix) -> Result<DegenerationStep> {
    for attempt in 0..8 {
        let (f1, f2) = minimal_boost_plane(y, attempt)?;
        if let Ok(step) = boost_limit(y, &f1, &f2) {
            let lm = step.limit.matrix();
            if (lm * lm).norm() <= 1e-8 {
                return Ok(step);
            }
        }
    }
    Err(Error::NonConvergence("no admissible second boost plane".into()))
}

/// Factors a rank-2 element with `Y³ = 0 ≠ Y²` as `φ(z∧w)` with `z` isotropic.
fn simple_factors_prime(ym: &CMat, y2: &CMat) -> Result<(CVec, CVec)> {
    let n = ym.nrows();
    // z spans the range of Y²; pick the column of largest norm
    let k = (0..n).max_by(|&a, &b| y2.column(a).norm().partial_cmp(&y2.column(b).norm()).unwrap()).unwrap();
    let z: CVec = y2.column(k).into_owned();
    let z = &z * c(1.0 / z.norm());
    // Y = w zᵀ − z wᵀ: pick j with z_j ≠ 0, then Y e_j = w z_j − z w_j
    let j = (0..n).max_by(|&a, &b| z[a].norm().partial_cmp(&z[b].norm()).unwrap()).unwrap();
    let yj: CVec = ym.column(j).into_owned();
    // w is determined modulo z; choose w_j = 0
    let w = &yj * z[j].inv();
    let recon = &w * z.transpose() - &z * w.transpose();
    let err = (&recon - ym).norm() / ym.norm();
    if err > 1e-6 {
        return Err(Error::NonConvergence(format!("rank-2 factorization residual {err:.3e}")));
    }
    Ok((z, w))
}

/// Degree of the minimal polynomial, from the Krylov dimension of `I, X, X², …`.
pub fn minimal_polynomial_degree(x: &CMat) -> usize {
    let n = x.nrows();
    let mut cols: Vec<CVec> = Vec::new();
    let mut pow = CMat::identity(n, n);
    for _ in 0..=n {
        let v = CVec::from_iterator(n * n, pow.iter().cloned());
        let v = &v * c(1.0 / v.norm().max(1e-300));
        cols.push(v);
        let m = CMat::from_columns(&cols);
        if numerical_rank(&m, RANK_TOL) < cols.len() {
            return cols.len() - 1;
        }
        pow = &pow * x;
        if pow.norm() <= 1e-12 * x.norm().max(1.0) {
            return cols.len();
        }
    }
    n
}

pub fn matrix_power(x: &CMat, p: usize) -> CMat {
    let n = x.nrows();
    let mut out = CMat::identity(n, n);
    for _ in 0..p {
        out = &out * x;
    }
    out
}

/// Generator of a square-zero rank-`2m` element: `Σ φ((e_{4k}+ie_{4k+1})∧(e_{4k+2}+ie_{4k+3}))`.
pub fn isotropic_sum(n: usize, m: usize) -> Result<SkewMatrix> {
    if 4 * m > n {
        return Err(Error::InvalidParameter(format!("{m} isotropic planes need n ≥ {}", 4 * m)));
    }
    let mut out = SkewMatrix::zeros(n);
    for k in 0..m {
        let a = unit(n, 4 * k) + unit(n, 4 * k + 1) * I;
        let b = unit(n, 4 * k + 2) + unit(n, 4 * k + 3) * I;
        out = out.add(&phi(&a, &b)?);
    }
    Ok(out)
}

/// Largest eigenvalue modulus.
pub fn max_eigenvalue_modulus(x: &CMat) -> f64 {
    let t = x.clone().schur().unpack().1;
    (0..t.nrows()).map(|k| t[(k, k)].norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::x_ij;
    use crate::rng::complex_matrix;

    fn random_so(seed: u64, n: usize) -> SkewMatrix {
        let mut rng = stream_rng(seed, 0);
        SkewMatrix::new(complex_matrix(&mut rng, n, n))
    }

    #[test]
    fn graded_extraction_matches_projectors() {
        let x = random_so(1, 5);
        let f1 = unit(5, 0);
        let f2 = unit(5, 3);
        let a = Graded::by_projectors(x.matrix(), &f1, &f2);
        let b = Graded::by_sampling(x.matrix(), &f1, &f2).unwrap();
        for g in -2..=2 {
            assert!((a.component(g) - b.component(g)).norm() < 1e-10, "grade {g}");
        }
        // so(n) has no grade ±2
        assert!(a.component(2).norm() < 1e-12 && a.component(-2).norm() < 1e-12);
        let p = boost_complex(&f1, &f2, 0.7).unwrap();
        let direct = p.matrix() * x.matrix() * p.matrix().transpose();
        assert!((a.scaled_conjugate(0.7, 2) * c(1.4f64.exp()) - direct).norm() < 1e-10);
    }

    #[test]
    fn conjugators_grow() {
        let x = x_ij(4, 0, 1);
        let fam = unbounded_conjugators(&x).unwrap();
        let p5 = fam.at(5.0).unwrap();
        assert!(p5.conjugate(&x).norm() > 10.0 * x.norm());
        for t in [0.0, 1.0, 5.0] {
            let (o, d) = fam.at(t).unwrap().residuals();
            assert!(o < 1e-10 * (2.0 * t).exp().max(1.0) && d < 1e-9 * (2.0 * t).exp().max(1.0));
        }
    }

    #[test]
    fn square_zero_is_rejected() {
        let x = isotropic_sum(4, 1).unwrap();
        assert!(matches!(unbounded_conjugators(&x), Err(Error::Precondition(_))));
    }

    #[test]
    fn semisimple_limit_is_nilpotent() {
        let x = x_ij(4, 0, 1).add(&x_ij(4, 2, 3).scale(c(2.0)));
        let step = nilpotent_limit(&x).unwrap();
        assert!(step.nilpotency <= 1e-8);
        assert!((step.limit.norm() - 1.0).abs() < 1e-10);
        // power traces determine the characteristic polynomial (Newton)
        let t = step.limit.matrix();
        for k in 1..=4 {
            assert!(matrix_power(t, k).trace().norm() < 1e-12);
        }
        // a 3-block spreads round-off to eigenvalues of size ~ ε^{1/3}
        assert!(max_eigenvalue_modulus(t) < 1e-5);
        let r = &step.residuals;
        assert!(r[r.len() - 3] >= r[r.len() - 2] - 1e-15 && r[r.len() - 2] >= r[r.len() - 1] - 1e-15);
    }

    #[test]
    fn square_zero_limit_is_itself() {
        let x = isotropic_sum(4, 1).unwrap();
        let step = nilpotent_limit(&x).unwrap();
        assert!(step.limit.sub(&x.scale(c(0.5))).norm() < 1e-14);
    }

    #[test]
    fn reduction_examples() {
        let x = isotropic_sum(4, 1).unwrap();
        let red = reduce_to_minimal(&x).unwrap();
        assert!(red.output.sub(&x.scale(c(0.5))).norm() < 1e-14);

        let x = isotropic_sum(8, 2).unwrap();
        let red = reduce_to_minimal(&x).unwrap();
        assert_eq!(red.rank, 2);
        assert!(red.square_residual <= 1e-8);

        for seed in 0..5 {
            let x = random_so(100 + seed, 5);
            let red = reduce_to_minimal(&x).unwrap();
            assert_eq!(red.rank, 2, "seed {seed}");
            assert!(red.square_residual <= 1e-8);
            assert!((red.output.norm() - 1.0).abs() < 1e-10);
        }
        assert!(reduce_to_minimal(&x_ij(3, 0, 1)).is_err());
    }

    #[test]
    fn minimal_polynomial_degrees() {
        assert_eq!(minimal_polynomial_degree(isotropic_sum(4, 1).unwrap().matrix()), 2);
        // X01 has eigenvalues ±i, 0
        assert_eq!(minimal_polynomial_degree(x_ij(4, 0, 1).matrix()), 3);
        assert_eq!(minimal_polynomial_degree(&CMat::identity(3, 3)), 1);
    }
}
