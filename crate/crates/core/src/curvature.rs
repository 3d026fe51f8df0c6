//! Algebraic curvature operators: symmetric endomorphisms of so(n) written in
//! the lexicographic `X_ij` basis.
//!
//! Components follow `R_ijkl := ⟨R(X_ij), X_kl⟩`, so the round sphere (`R = Id`)
//! has sectional curvature `K_ij = R_ijij = +1`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie::{index_pairs, pair_index, so_dim, SkewMatrix, StructureConstants, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureOperator {
    n: usize,
    matrix: DMatrix<f64>,
}

impl CurvatureOperator {
    /// Wraps a `d×d` matrix (`d = n(n−1)/2`), symmetrizing it. Rejects
    /// asymmetry above `1e−12·(1+‖M‖)`.
    pub fn new(n: usize, matrix: DMatrix<f64>) -> Result<Self> {
        let d = so_dim(n);
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: matrix.nrows() });
        }
        let asym = (&matrix - matrix.transpose()).norm();
        if asym > 1e-12 * (1.0 + matrix.norm()) {
            return Err(Error::Malformed(format!("operator matrix not symmetric ({asym:.3e})")));
        }
        Ok(Self::symmetrized(n, matrix))
    }

    pub(crate) fn symmetrized(n: usize, matrix: DMatrix<f64>) -> Self {
        let matrix = (&matrix + matrix.transpose()) * 0.5;
        Self { n, matrix }
    }

    pub fn identity(n: usize) -> Self {
        let d = so_dim(n);
        Self { n, matrix: DMatrix::identity(d, d) }
    }

    pub fn zero(n: usize) -> Self {
        let d = so_dim(n);
        Self { n, matrix: DMatrix::zeros(d, d) }
    }

    pub fn from_diagonal(n: usize, diag: &[f64]) -> Result<Self> {
        let d = so_dim(n);
        if diag.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: diag.len() });
        }
        let mut m = DMatrix::zeros(d, d);
        for (k, &v) in diag.iter().enumerate() {
            m[(k, k)] = v;
        }
        Ok(Self { n, matrix: m })
    }

    /// Projector onto `span{X_ij : i, j ≥ 1}` (planes not containing `e₀`).
    pub fn tangential_projector(n: usize) -> Self {
        let diag: Vec<f64> = index_pairs(n).into_iter().map(|(i, _)| if i >= 1 { 1.0 } else { 0.0 }).collect();
        Self::from_diagonal(n, &diag).expect("sized by construction")
    }

    /// Projector onto `span{X_0j}`.
    pub fn radial_projector(n: usize) -> Self {
        let diag: Vec<f64> = index_pairs(n).into_iter().map(|(i, _)| if i == 0 { 1.0 } else { 0.0 }).collect();
        Self::from_diagonal(n, &diag).expect("sized by construction")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { n: self.n, matrix: &self.matrix * s }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_n(other.n)?;
        Ok(Self { n: self.n, matrix: &self.matrix + &other.matrix })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_n(other.n)?;
        Ok(Self { n: self.n, matrix: &self.matrix - &other.matrix })
    }

    fn check_n(&self, n: usize) -> Result<()> {
        if n != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: n });
        }
        Ok(())
    }

    /// `⟨R(X), X⟩_H` with `X` expanded in the `X_ij` basis.
    pub fn qform(&self, x: &SkewMatrix) -> Result<f64> {
        self.check_n(x.n())?;
        Ok(self.qform_coeffs(&x.coefficients()))
    }

    /// `Σ conj(a_α) R_αβ a_β` for a coefficient vector.
    pub fn qform_coeffs(&self, a: &nalgebra::DVector<C64>) -> f64 {
        let d = self.dim();
        let mut acc = 0.0;
        for al in 0..d {
            let mut row = C64::new(0.0, 0.0);
            for be in 0..d {
                row += a[be] * self.matrix[(al, be)];
            }
            acc += (a[al].conj() * row).re;
        }
        acc
    }

    /// `qform(X)/‖X‖²_H`.
    pub fn qform_normalized(&self, x: &SkewMatrix) -> Result<f64> {
        let nrm = x.norm_sq();
        if nrm == 0.0 {
            return Err(Error::ZeroInput);
        }
        Ok(self.qform(x)? / nrm)
    }

    /// `R_ijkl = ⟨R(X_ij), X_kl⟩` for arbitrary frame indices.
    pub fn component(&self, i: usize, j: usize, k: usize, l: usize) -> Result<f64> {
        let n = self.n;
        if [i, j, k, l].iter().any(|&x| x >= n) {
            return Err(Error::IndexOutOfRange(format!("({i},{j},{k},{l}) with n = {n}")));
        }
        let (a, sa) = match signed_index(n, i, j) {
            Some(v) => v,
            None => return Ok(0.0),
        };
        let (b, sb) = match signed_index(n, k, l) {
            Some(v) => v,
            None => return Ok(0.0),
        };
        Ok(sa * sb * self.matrix[(a, b)])
    }

    /// `K_ij = R_ijij`.
    pub fn sectional(&self, i: usize, j: usize) -> Result<f64> {
        self.component(i, j, i, j)
    }

    /// Largest deviation from the first Bianchi identity
    /// `R_ijkl + R_jkil + R_kijl = 0`.
    pub fn bianchi_residual(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let s = self.component(i, j, k, l).unwrap()
                            + self.component(j, k, i, l).unwrap()
                            + self.component(k, i, j, l).unwrap();
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }

    /// `R#` via `(R#)_{αβ} = ½ Σ R_{γε} R_{δζ} c_{γδα} c_{εζβ}`.
    pub fn sharp(&self) -> Self {
        self.sharp_with(&StructureConstants::new(self.n))
    }

    pub fn sharp_with(&self, sc: &StructureConstants) -> Self {
        assert_eq!(sc.n(), self.n, "structure constants built for a different n");
        let d = self.dim();
        // group c_{γδα} by output index α
        let mut by_out: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); d];
        for &(g, h, a, v) in sc.nonzeros() {
            by_out[a].push((g, h, v));
        }
        let mut out = DMatrix::zeros(d, d);
        for a in 0..d {
            for b in a..d {
                let mut s = 0.0;
                for &(g, h, va) in &by_out[a] {
                    for &(e, z, vb) in &by_out[b] {
                        s += va * vb * self.matrix[(g, e)] * self.matrix[(h, z)];
                    }
                }
                out[(a, b)] = 0.5 * s;
                out[(b, a)] = 0.5 * s;
            }
        }
        Self { n: self.n, matrix: out }
    }

    /// `R² + R#`.
    pub fn ode_rhs(&self, sc: &StructureConstants) -> Self {
        let sq = &self.matrix * &self.matrix;
        let sh = self.sharp_with(sc);
        Self::symmetrized(self.n, sq + sh.matrix)
    }

    /// Conjugation induced by a real orthogonal `P` on S²(so(n)):
    /// `qform(conj_P(R), X) = qform(R, Pᵀ X P)`.
    pub fn conjugate_by(&self, p: &DMatrix<f64>) -> Result<Self> {
        self.check_n(p.nrows())?;
        let m = induced_rotation(p);
        Ok(Self::symmetrized(self.n, &m * &self.matrix * m.transpose()))
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.matrix.clone().symmetric_eigenvalues().iter().cloned().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    /// Spectral norm (largest |eigenvalue|).
    pub fn operator_norm(&self) -> f64 {
        self.eigenvalues().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().cloned().unwrap_or(0.0)
    }
}

fn signed_index(n: usize, i: usize, j: usize) -> Option<(usize, f64)> {
    match i.cmp(&j) {
        std::cmp::Ordering::Less => Some((pair_index(n, i, j), 1.0)),
        std::cmp::Ordering::Greater => Some((pair_index(n, j, i), -1.0)),
        std::cmp::Ordering::Equal => None,
    }
}

/// Matrix of `X ↦ P X Pᵀ` on so(n) in the `X_ij` basis (orthogonal for real
/// orthogonal `P`).
pub fn induced_rotation(p: &DMatrix<f64>) -> DMatrix<f64> {
    let n = p.nrows();
    let pairs = index_pairs(n);
    let d = pairs.len();
    let mut m = DMatrix::zeros(d, d);
    for (a, &(i, j)) in pairs.iter().enumerate() {
        // P X_ij Pᵀ = P(e_j e_iᵀ − e_i e_jᵀ)Pᵀ = p_j p_iᵀ − p_i p_jᵀ
        for (b, &(k, l)) in pairs.iter().enumerate() {
            // coefficient of X_kl is entry (l, k)
            m[(b, a)] = p[(l, j)] * p[(k, i)] - p[(l, i)] * p[(k, j)];
        }
    }
    m
}

/// Real symmetric n×n tensor (metric, Hessian, second fundamental form).
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricTwoTensor(DMatrix<f64>);

impl SymmetricTwoTensor {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Malformed("two-tensor must be square".into()));
        }
        if (&m - m.transpose()).norm() > 1e-12 * (1.0 + m.norm()) {
            return Err(Error::Malformed("two-tensor must be symmetric".into()));
        }
        Ok(Self((&m + m.transpose()) * 0.5))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn diagonal(d: &[f64]) -> Self {
        Self(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d)))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Kulkarni–Nomizu product
/// `(a⊙b)_ijkl = a_ik b_jl + a_jl b_ik − a_il b_jk − a_jk b_il`, placed at
/// operator entry `((ij),(kl))`. With this placement `(g⊙g)/2 = Id`.
pub fn kulkarni_nomizu(a: &SymmetricTwoTensor, b: &SymmetricTwoTensor) -> Result<CurvatureOperator> {
    let n = a.n();
    if b.n() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b.n() });
    }
    let (a, b) = (&a.0, &b.0);
    let pairs = index_pairs(n);
    let d = pairs.len();
    let mut m = DMatrix::zeros(d, d);
    for (p, &(i, j)) in pairs.iter().enumerate() {
        for (q, &(k, l)) in pairs.iter().enumerate() {
            m[(p, q)] = a[(i, k)] * b[(j, l)] + a[(j, l)] * b[(i, k)] - a[(i, l)] * b[(j, k)] - a[(j, k)] * b[(i, l)];
        }
    }
    Ok(CurvatureOperator::symmetrized(n, m))
}

/// Standard complex structure on ℝ^{2m} with interleaved coordinates
/// `(x₁,y₁,…,x_m,y_m)`: `J e_{2k} = e_{2k+1}`. Entry `(a,b)` is `⟨J e_a, e_b⟩`.
pub fn complex_structure(n: usize) -> DMatrix<f64> {
    assert!(n % 2 == 0, "complex structure needs even n");
    let mut j = DMatrix::zeros(n, n);
    for k in 0..n / 2 {
        j[(2 * k, 2 * k + 1)] = 1.0;
        j[(2 * k + 1, 2 * k)] = -1.0;
    }
    j
}

/// Fubini–Study curvature on ℂP^m (n = 2m) with holomorphic sectional
/// curvature 4: `R_ijkl = δ_ik δ_jl − δ_il δ_jk + J_ik J_jl − J_il J_jk + 2 J_ij J_kl`.
pub fn fubini_study(n: usize) -> Result<CurvatureOperator> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::InvalidParameter(format!("Fubini-Study needs even n >= 2, got {n}")));
    }
    let j = complex_structure(n);
    let pairs = index_pairs(n);
    let d = pairs.len();
    let mut m = DMatrix::zeros(d, d);
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    for (p, &(a, b)) in pairs.iter().enumerate() {
        for (q, &(c, e)) in pairs.iter().enumerate() {
            m[(p, q)] = delta(a, c) * delta(b, e) - delta(a, e) * delta(b, c) + j[(a, c)] * j[(b, e)]
                - j[(a, e)] * j[(b, c)]
                + 2.0 * j[(a, b)] * j[(c, e)];
        }
    }
    Ok(CurvatureOperator::symmetrized(n, m))
}

/// Named model operators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Model {
    /// Round sphere: `Id`.
    Sphere,
    /// `ℝ × S^{n−1}`: curvature 1 on planes orthogonal to `e₀`, 0 on radial planes.
    Cylinder,
    /// `S^p × S^q` with `p + q = n`, blocks `{0..p}` and `{p..n}`.
    SphereProduct { p: usize, q: usize },
    /// Weakly quarter-pinched family, `0 ≤ eps ≤ eps_max(n)`; see [`quarter_pinched`].
    QuarterPinched { eps: f64 },
    /// Given diagonal in the `X_ij` basis.
    Diagonal { values: Vec<f64> },
}

impl Model {
    pub fn parse(name: &str, n: usize, params: &[f64]) -> Result<Self> {
        match name {
            "sphere" => Ok(Self::Sphere),
            "cylinder" => Ok(Self::Cylinder),
            "sphere_product" => {
                let p = params.first().map(|&v| v as usize).unwrap_or(n / 2);
                let q = params.get(1).map(|&v| v as usize).unwrap_or(n - p);
                Ok(Self::SphereProduct { p, q })
            }
            "quarter_pinched" => Ok(Self::QuarterPinched { eps: params.first().cloned().unwrap_or(0.5) }),
            "diagonal" => Ok(Self::Diagonal { values: params.to_vec() }),
            "zero" => Ok(Self::Diagonal { values: vec![0.0; so_dim(n)] }),
            other => Err(Error::UnknownModel(other.to_string())),
        }
    }

    pub fn build(&self, n: usize) -> Result<CurvatureOperator> {
        if n < 2 {
            return Err(Error::InvalidParameter("n must be at least 2".into()));
        }
        match self {
            Self::Sphere => Ok(CurvatureOperator::identity(n)),
            Self::Cylinder => Ok(CurvatureOperator::tangential_projector(n)),
            Self::SphereProduct { p, q } => {
                if p + q != n || *p < 2 || *q < 2 {
                    return Err(Error::InvalidParameter(format!("sphere_product({p},{q}) in dimension {n}")));
                }
                let diag: Vec<f64> = index_pairs(n)
                    .into_iter()
                    .map(|(i, j)| if (i < *p) == (j < *p) { 1.0 } else { 0.0 })
                    .collect();
                CurvatureOperator::from_diagonal(n, &diag)
            }
            Self::QuarterPinched { eps } => quarter_pinched(n, *eps),
            Self::Diagonal { values } => CurvatureOperator::from_diagonal(n, values),
        }
    }
}

/// Largest admissible `eps` for [`quarter_pinched`].
pub fn quarter_pinched_max(n: usize) -> f64 {
    if n % 2 == 0 {
        1.0
    } else {
        0.6
    }
}

/// A one-parameter family of operators satisfying the first Bianchi identity
/// with sectional curvatures in `[¼, 1]` and `max K = 1`.
///
/// Even `n`: `(1−eps)·Id + eps·FS/4`, where `FS/4` is the Fubini–Study
/// operator scaled to `¼ ≤ K ≤ 1` (`eps ∈ [0,1]`). Odd `n`:
/// `(Id + eps·h⊙g)/(1+eps)` with `h = diag(1,−1,0,…)`, so `K ∈ [(1−eps)/(1+eps), 1]`
/// (`eps ∈ [0, 0.6]`).
pub fn quarter_pinched(n: usize, eps: f64) -> Result<CurvatureOperator> {
    if !(0.0..=quarter_pinched_max(n)).contains(&eps) || n < 4 {
        return Err(Error::InvalidParameter(format!("quarter_pinched eps = {eps} outside [0, {}] or n < 4", quarter_pinched_max(n))));
    }
    if n % 2 == 0 {
        let fs = fubini_study(n)?.scale(0.25);
        CurvatureOperator::identity(n).scale(1.0 - eps).add(&fs.scale(eps))
    } else {
        let mut h = vec![0.0; n];
        h[0] = 1.0;
        h[1] = -1.0;
        let hg = kulkarni_nomizu(&SymmetricTwoTensor::diagonal(&h), &SymmetricTwoTensor::identity(n))?;
        Ok(CurvatureOperator::identity(n).add(&hg.scale(eps))?.scale(1.0 / (1.0 + eps)))
    }
}
