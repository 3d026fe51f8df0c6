//! so(n) and so(n,ℂ) substrate.
//!
//! Vectors in ℂⁿ carry the complex *bilinear* form `(u,v) = Σ uᵢvᵢ` (no
//! conjugation). Two-forms are identified with skew matrices through
//! `φ(u∧v)x = (u,x)v − (v,x)u`, so `X_ij := φ(e_i∧e_j)` sends `e_i` to `e_j`.
//! The basis `{X_ij : i < j}` is ordered lexicographically and is orthonormal
//! for `⟨A,B⟩ = −½ tr(AB)`; every coefficient vector in the crate uses this
//! ordering.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Tolerance for structural identities (skewness, bracket tables).
pub const STRUCT_TOL: f64 = 1e-12;
/// Tolerance for group membership and orthonormality checks.
pub const GROUP_TOL: f64 = 1e-10;

pub const I: C64 = Complex { re: 0.0, im: 1.0 };

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// `(u,v) = Σ uᵢvᵢ`.
pub fn bilinear(u: &CVec, v: &CVec) -> C64 {
    u.iter().zip(v.iter()).map(|(a, b)| a * b).sum()
}

/// Hermitian squared norm `Σ |uᵢ|²`.
pub fn herm_norm_sq(u: &CVec) -> f64 {
    u.iter().map(|a| a.norm_sqr()).sum()
}

pub fn real_vec(v: &[f64]) -> CVec {
    CVec::from_iterator(v.len(), v.iter().map(|&x| c(x)))
}

pub fn unit(n: usize, i: usize) -> CVec {
    let mut v = CVec::zeros(n);
    v[i] = c(1.0);
    v
}

pub fn complexify(m: &DMatrix<f64>) -> CMat {
    m.map(c)
}

/// Dimension of so(n).
pub fn so_dim(n: usize) -> usize {
    n * (n - 1) / 2
}

/// Position of `X_ij` (i < j) in the lexicographic basis.
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// The `(i, j)` pairs in basis order.
pub fn index_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(so_dim(n));
    for i in 0..n {
        for j in i + 1..n {
            out.push((i, j));
        }
    }
    out
}

/// Element of so(n) or so(n,ℂ).
#[derive(Debug, Clone, PartialEq)]
pub struct SkewMatrix {
    mat: CMat,
    real: bool,
}

impl SkewMatrix {
    /// Wraps a matrix, projecting onto its skew part.
    pub fn new(mat: CMat) -> Self {
        let skew = (&mat - mat.transpose()) * c(0.5);
        let real = skew.iter().all(|z| z.im == 0.0);
        Self { mat: skew, real }
    }

    /// Wraps a matrix that is already skew; fails if `‖Xᵀ + X‖ > tol`.
    pub fn try_new(mat: CMat, tol: f64) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::Malformed("matrix is not square".into()));
        }
        let res = (&mat + mat.transpose()).norm();
        if res > tol * (1.0 + mat.norm()) {
            return Err(Error::Malformed(format!("matrix is not skew (residual {res:.3e})")));
        }
        Ok(Self::new(mat))
    }

    pub fn zeros(n: usize) -> Self {
        Self { mat: CMat::zeros(n, n), real: true }
    }

    pub fn from_real(m: &DMatrix<f64>) -> Self {
        Self::new(complexify(m))
    }

    /// Builds `Σ aₐ bₐ` from basis coefficients.
    pub fn from_coefficients(n: usize, coeffs: &CVec) -> Self {
        assert_eq!(coeffs.len(), so_dim(n));
        let mut mat = CMat::zeros(n, n);
        for (alpha, (i, j)) in index_pairs(n).into_iter().enumerate() {
            mat[(j, i)] = coeffs[alpha];
            mat[(i, j)] = -coeffs[alpha];
        }
        let real = coeffs.iter().all(|z| z.im == 0.0);
        Self { mat, real }
    }

    /// Coefficients in the lexicographic `X_ij` basis: `a_ij = X[j][i]`.
    pub fn coefficients(&self) -> CVec {
        let n = self.n();
        CVec::from_iterator(so_dim(n), index_pairs(n).into_iter().map(|(i, j)| self.mat[(j, i)]))
    }

    pub fn n(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    /// `‖X‖²_H = ⟨X,X⟩_H = ½ Σ |X_kl|²`.
    pub fn norm_sq(&self) -> f64 {
        0.5 * self.mat.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let nrm = self.norm();
        if nrm == 0.0 {
            return Err(Error::ZeroInput);
        }
        Ok(self.scale(c(1.0 / nrm)))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(&self.mat * s)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(&self.mat + &other.mat)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::new(&self.mat - &other.mat)
    }

    pub fn real_part(&self) -> Self {
        Self::new(self.mat.map(|z| c(z.re)))
    }

    pub fn imag_part(&self) -> Self {
        Self::new(self.mat.map(|z| c(z.im)))
    }

    /// Frobenius norm of `X²`.
    pub fn square_norm(&self) -> f64 {
        (&self.mat * &self.mat).norm()
    }
}

/// `φ(u∧v)`: the matrix of `x ↦ (u,x)v − (v,x)u`, i.e. `v uᵀ − u vᵀ`.
pub fn phi(u: &CVec, v: &CVec) -> Result<SkewMatrix> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: u.len(), found: v.len() });
    }
    if u.len() < 2 {
        return Err(Error::InvalidParameter("phi needs n >= 2".into()));
    }
    let m = v * u.transpose() - u * v.transpose();
    let real = u.iter().chain(v.iter()).all(|z| z.im == 0.0);
    Ok(SkewMatrix { mat: m, real })
}

/// `X_ij = φ(e_i ∧ e_j)` for any `i ≠ j`.
pub fn x_ij(n: usize, i: usize, j: usize) -> SkewMatrix {
    phi(&unit(n, i), &unit(n, j)).expect("valid basis indices")
}

/// `{X_ij : 0 ≤ i < j < n}` in lexicographic order.
pub fn basis_so_n(n: usize) -> Vec<SkewMatrix> {
    index_pairs(n).into_iter().map(|(i, j)| x_ij(n, i, j)).collect()
}

fn check_same(a: &SkewMatrix, b: &SkewMatrix) -> Result<()> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch { expected: a.n(), found: b.n() });
    }
    Ok(())
}

/// Complex-bilinear extension of `⟨A,B⟩ = −½ tr(AB)`.
pub fn inner(a: &SkewMatrix, b: &SkewMatrix) -> Result<C64> {
    check_same(a, b)?;
    Ok((a.mat.clone() * &b.mat).trace() * c(-0.5))
}

/// Hermitian extension `⟨A,B⟩_H = −½ tr(A·conj(B))`.
pub fn inner_herm(a: &SkewMatrix, b: &SkewMatrix) -> Result<C64> {
    check_same(a, b)?;
    Ok((a.mat.clone() * b.mat.conjugate()).trace() * c(-0.5))
}

pub fn bracket(a: &SkewMatrix, b: &SkewMatrix) -> SkewMatrix {
    SkewMatrix::new(&a.mat * &b.mat - &b.mat * &a.mat)
}

/// Structure constants `c_{αβγ} = ⟨[b_α, b_β], b_γ⟩` of so(n) in the
/// lexicographic basis. Stored densely and as a sparse list of nonzeros.
#[derive(Debug, Clone)]
pub struct StructureConstants {
    n: usize,
    d: usize,
    dense: Vec<f64>,
    nonzeros: Vec<(usize, usize, usize, f64)>,
}

impl StructureConstants {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "so(n) needs n >= 2");
        let d = so_dim(n);
        let pairs = index_pairs(n);
        let mut dense = vec![0.0; d * d * d];
        let mut nonzeros = Vec::new();
        // [X_ij, X_kl] only involves X_ab with {a,b} drawn from {i,j,k,l}; read
        // coefficients straight from the bracket matrix.
        let basis = basis_so_n(n);
        for (alpha, _) in pairs.iter().enumerate() {
            for (beta, _) in pairs.iter().enumerate() {
                let br = bracket(&basis[alpha], &basis[beta]);
                for (gamma, &(a, b)) in pairs.iter().enumerate() {
                    let v = br.mat[(b, a)].re;
                    if v.abs() > 0.5 {
                        let v = v.round();
                        dense[(alpha * d + beta) * d + gamma] = v;
                        nonzeros.push((alpha, beta, gamma, v));
                    }
                }
            }
        }
        Self { n, d, dense, nonzeros }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn get(&self, alpha: usize, beta: usize, gamma: usize) -> f64 {
        self.dense[(alpha * self.d + beta) * self.d + gamma]
    }

    /// Nonzero entries `(α, β, γ, c_{αβγ})`.
    pub fn nonzeros(&self) -> &[(usize, usize, usize, f64)] {
        &self.nonzeros
    }

    /// Coefficients of `[A, B]` from coefficients of `A` and `B`.
    pub fn bracket_coeffs(&self, a: &CVec, b: &CVec) -> CVec {
        let mut out = CVec::zeros(self.d);
        for &(alpha, beta, gamma, v) in &self.nonzeros {
            out[gamma] += a[alpha] * b[beta] * v;
        }
        out
    }
}

/// Gram–Schmidt for the complex bilinear form. Fails on an isotropic pivot.
pub fn gram_schmidt_bilinear(vs: &[CVec]) -> Result<Vec<CVec>> {
    let mut out: Vec<CVec> = Vec::with_capacity(vs.len());
    for (index, v) in vs.iter().enumerate() {
        let w = orthogonalize(v, &out);
        let scale = herm_norm_sq(v).max(1e-300);
        let q = bilinear(&w, &w);
        if q.norm() <= 1e-12 * scale {
            return Err(Error::IsotropicPivot { index, value: q.norm() });
        }
        out.push(w * q.sqrt().inv());
    }
    Ok(out)
}

fn orthogonalize(v: &CVec, against: &[CVec]) -> CVec {
    let mut w = v.clone();
    // two passes keep the residual at round-off level
    for _ in 0..2 {
        for f in against {
            let p = bilinear(f, &w);
            w -= f * p;
        }
    }
    w
}

/// Gram–Schmidt with the pivot perturbation rule: an isotropic pivot `v` is
/// replaced by `v + δ·e_m` (`δ = 1e−6·‖v‖`, `m` the smallest coordinate not yet
/// tried), at most three times per vector.
pub fn gram_schmidt_bilinear_perturbed(vs: &[CVec]) -> Result<Vec<CVec>> {
    let mut out: Vec<CVec> = Vec::with_capacity(vs.len());
    for (index, v) in vs.iter().enumerate() {
        let n = v.len();
        let mut cand = v.clone();
        let mut attempt = 0;
        loop {
            let w = orthogonalize(&cand, &out);
            let scale = herm_norm_sq(&cand).max(1e-300);
            let q = bilinear(&w, &w);
            if q.norm() > 1e-12 * scale {
                out.push(w * q.sqrt().inv());
                break;
            }
            if attempt == 3 {
                return Err(Error::IsotropicPivot { index, value: q.norm() });
            }
            let delta = 1e-6 * herm_norm_sq(v).sqrt().max(1.0);
            let m = attempt % n;
            cand[m] += c(delta);
            attempt += 1;
        }
    }
    Ok(out)
}

/// Extends `(·,·)`-orthonormal vectors to a full orthonormal basis of ℂⁿ by
/// adjoining standard basis vectors.
pub fn complete_frame(first: &[CVec]) -> Result<Vec<CVec>> {
    let n = first.first().map(|v| v.len()).ok_or(Error::ZeroInput)?;
    let mut frame: Vec<CVec> = first.to_vec();
    for m in 0..n {
        if frame.len() == n {
            break;
        }
        let w = orthogonalize(&unit(n, m), &frame);
        let q = bilinear(&w, &w);
        if herm_norm_sq(&w) > 1e-8 && q.norm() > 1e-6 {
            frame.push(w * q.sqrt().inv());
        }
    }
    if frame.len() < n {
        // rare: remaining directions all near-isotropic; fall back to
        // perturbed elimination over the coordinate basis
        let extra = (0..n).map(|m| unit(n, m) + unit(n, (m + 1) % n) * c(0.37));
        for v in extra {
            if frame.len() == n {
                break;
            }
            let w = orthogonalize(&v, &frame);
            let q = bilinear(&w, &w);
            if herm_norm_sq(&w) > 1e-8 && q.norm() > 1e-6 {
                frame.push(w * q.sqrt().inv());
            }
        }
    }
    if frame.len() < n {
        return Err(Error::IsotropicPivot { index: frame.len(), value: 0.0 });
    }
    Ok(frame)
}

/// Maximum deviation `|(wᵢ,wⱼ) − δᵢⱼ|` over a family.
pub fn orthonormality_residual(vs: &[CVec]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in vs.iter().enumerate() {
        for (j, b) in vs.iter().enumerate() {
            let target = if i == j { c(1.0) } else { c(0.0) };
            worst = worst.max((bilinear(a, b) - target).norm());
        }
    }
    worst
}

/// Element of SO(n,ℂ).
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    mat: CMat,
}

impl GroupElement {
    pub fn identity(n: usize) -> Self {
        Self { mat: CMat::identity(n, n) }
    }

    /// Checks `‖PᵀP − I‖ ≤ tol` and `|det P − 1| ≤ tol`.
    pub fn try_new(mat: CMat, tol: f64) -> Result<Self> {
        let g = Self { mat };
        let (orth, det) = g.residuals();
        if orth > tol || det > tol {
            return Err(Error::NotOrthonormal(orth.max(det)));
        }
        Ok(g)
    }

    /// The matrix whose columns are the given frame (maps `e_k` to `frame[k]`).
    pub fn from_columns(frame: &[CVec]) -> Self {
        Self { mat: CMat::from_columns(frame) }
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn n(&self) -> usize {
        self.mat.nrows()
    }

    /// `(‖PᵀP − I‖, |det P − 1|)`.
    pub fn residuals(&self) -> (f64, f64) {
        let n = self.n();
        let orth = (self.mat.transpose() * &self.mat - CMat::identity(n, n)).norm();
        let det = (self.mat.determinant() - c(1.0)).norm();
        (orth, det)
    }

    /// `P⁻¹ = Pᵀ` on SO(n,ℂ).
    pub fn inverse(&self) -> Self {
        Self { mat: self.mat.transpose() }
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self { mat: &self.mat * &other.mat }
    }

    pub fn apply(&self, v: &CVec) -> CVec {
        &self.mat * v
    }

    /// `P X P⁻¹`.
    pub fn conjugate(&self, x: &SkewMatrix) -> SkewMatrix {
        SkewMatrix::new(&self.mat * x.matrix() * self.mat.transpose())
    }
}

/// `exp(i t φ(f1∧f2))` for real orthonormal `f1, f2`:
/// `f1 ↦ cosh t·f1 + i sinh t·f2`, `f2 ↦ cosh t·f2 − i sinh t·f1`, identity on
/// the orthogonal complement.
pub fn boost(f1: &CVec, f2: &CVec, t: f64) -> Result<GroupElement> {
    if f1.iter().chain(f2.iter()).any(|z| z.im.abs() > STRUCT_TOL) {
        return Err(Error::InvalidParameter("boost directions must be real".into()));
    }
    boost_complex(f1, f2, t)
}

/// Same closed form for a `(·,·)`-orthonormal complex pair.
pub fn boost_complex(f1: &CVec, f2: &CVec, t: f64) -> Result<GroupElement> {
    if f1.len() != f2.len() {
        return Err(Error::DimensionMismatch { expected: f1.len(), found: f2.len() });
    }
    let res = orthonormality_residual(&[f1.clone(), f2.clone()]);
    if res > GROUP_TOL {
        return Err(Error::NotOrthonormal(res));
    }
    let n = f1.len();
    let proj = f1 * f1.transpose() + f2 * f2.transpose();
    let gen = f2 * f1.transpose() - f1 * f2.transpose();
    let mat = CMat::identity(n, n) + proj * c(t.cosh() - 1.0) + gen * (I * t.sinh());
    Ok(GroupElement { mat })
}

/// Generator `i φ(f1∧f2)` of the boost family.
pub fn boost_generator(f1: &CVec, f2: &CVec) -> CMat {
    (f2 * f1.transpose() - f1 * f2.transpose()) * I
}

/// Matrix exponential of a complex skew matrix, as a group element.
pub fn exp_skew(z: &SkewMatrix) -> GroupElement {
    GroupElement { mat: z.matrix().clone().exp() }
}

/// Numerical rank: singular values above `rel_tol·σ_max`.
pub fn numerical_rank(m: &CMat, rel_tol: f64) -> usize {
    let sv = m.clone().singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}
