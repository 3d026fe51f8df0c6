//! Ad-invariant sets in so(n,ℂ) and certification of the sign of the
//! curvature form over them.

mod frames;
mod kahler;
mod optim;
mod orbit;
mod simple;

use rayon::prelude::*;
use serde::Serialize;

pub use frames::{isotropic_form, pic1_form, FrameKind};
pub use kahler::{embed_gl, fubini_study_kahler, obc_form, unitary_projector, unitary_support_residual};
pub use simple::{classify_simple, conjugator_to_target, simple_radial, SimpleCase, Target};

use crate::curvature::CurvatureOperator;
use crate::error::{Error, Result};
use crate::lie::{complexify, index_pairs, CVec, SkewMatrix, StructureConstants};

/// Normalized minima above this are positive; within it, zero.
pub const POS_TOL: f64 = 1e-7;

/// Scale-invariant Ad-invariant sets.
#[derive(Debug, Clone)]
pub enum InvariantSet {
    /// Rank-2 square-zero elements.
    S0,
    /// Rank-2 elements with `X³ = 0`.
    SPrime,
    /// Rank-1 square-zero elements of gl(m,ℂ) inside so(2m,ℂ).
    S1Kahler,
    /// The closure of the scaled adjoint orbit of a nonzero element.
    OrbitOf(SkewMatrix),
    /// The closure of the orbit of `φ(e∧u)`, `e` real, `(e,u) = 0`.
    SimpleFamily { e: CVec, u: CVec },
}

impl InvariantSet {
    pub fn orbit(x: SkewMatrix) -> Result<Self> {
        if x.norm() == 0.0 {
            return Err(Error::ZeroInput);
        }
        Ok(Self::OrbitOf(x))
    }

    pub fn simple(e: CVec, u: CVec) -> Result<Self> {
        classify_simple(&e, &u)?;
        Ok(Self::SimpleFamily { e, u })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::S0 => "s0",
            Self::SPrime => "sprime",
            Self::S1Kahler => "s1",
            Self::OrbitOf(_) => "orbit",
            Self::SimpleFamily { .. } => "simple",
        }
    }

    /// Ambient dimension if the descriptor fixes one.
    pub fn n(&self) -> Option<usize> {
        match self {
            Self::OrbitOf(x) => Some(x.n()),
            Self::SimpleFamily { e, .. } => Some(e.len()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    PositiveDefiniteOnS,
    NonnegativeWithKernel,
    Indefinite,
}

impl Status {
    pub fn from_min(min: f64) -> Self {
        if min > POS_TOL {
            Self::PositiveDefiniteOnS
        } else if min >= -POS_TOL {
            Self::NonnegativeWithKernel
        } else {
            Self::Indefinite
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Budget {
    pub restarts: usize,
    pub iterations: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Self { restarts: 32, iterations: 400 }
    }
}

#[derive(Debug, Clone)]
pub struct PositivityCertificate {
    /// Minimum of `qform(X)/‖X‖²_H` found over S.
    pub min_value: f64,
    pub minimizer: SkewMatrix,
    pub status: Status,
    pub restarts_used: usize,
    pub iterations: usize,
    pub seed: u64,
    /// Whether the winning restart reached the gradient tolerance.
    pub converged: bool,
    pub grad_norm: f64,
    /// Variant-specific membership residual of the minimizer.
    pub feasibility: f64,
}

/// Result of one local descent.
#[derive(Debug, Clone)]
pub(crate) struct Local {
    pub value: f64,
    pub minimizer: SkewMatrix,
    pub iterations: usize,
    pub converged: bool,
    pub grad_norm: f64,
}

/// Minimizes the normalized curvature form over S.
pub fn certify(r: &CurvatureOperator, set: &InvariantSet, budget: Budget, seed: u64) -> Result<PositivityCertificate> {
    let n = r.n();
    if let Some(m) = set.n() {
        if m != n {
            return Err(Error::DimensionMismatch { expected: n, found: m });
        }
    }
    if budget.restarts == 0 {
        return Err(Error::InvalidParameter("at least one restart is required".into()));
    }
    let sc = matches!(set, InvariantSet::OrbitOf(_)).then(|| StructureConstants::new(n));
    let run = |restart: usize| -> Result<Local> {
        match set {
            InvariantSet::S0 => frames::minimize(r, FrameKind::Isotropic, budget.iterations, seed, restart as u64),
            InvariantSet::SPrime => frames::minimize(r, FrameKind::Prime, budget.iterations, seed, restart as u64),
            InvariantSet::S1Kahler => kahler::minimize(r, budget.iterations, seed, restart as u64),
            InvariantSet::OrbitOf(x) => orbit::minimize(r, sc.as_ref().expect("built for orbits"), x, budget.iterations, seed, restart as u64),
            InvariantSet::SimpleFamily { e, u } => match classify_simple(e, u)? {
                SimpleCase::NonIsotropic => simple::minimize_free(r, budget.iterations, seed, restart as u64),
                SimpleCase::Isotropic => frames::minimize(r, FrameKind::Prime, budget.iterations, seed, restart as u64),
            },
        }
    };
    if matches!(set, InvariantSet::S0) && n < 4 {
        return Err(Error::Precondition("S0 is empty for n < 4".into()));
    }
    if matches!(set, InvariantSet::S1Kahler) {
        if n % 2 != 0 {
            return Err(Error::Precondition("S1 needs even n".into()));
        }
        let res = unitary_support_residual(r);
        if res > 1e-10 {
            return Err(Error::NotUnitarySupported(res));
        }
    }
    let results: Vec<Result<Local>> = (0..budget.restarts).into_par_iter().map(run).collect();
    let mut best: Option<Local> = None;
    let mut iterations = 0;
    for res in results {
        let local = res?;
        iterations += local.iterations;
        // strict comparison keeps the lowest restart index on ties
        if best.as_ref().is_none_or(|b| local.value < b.value) {
            best = Some(local);
        }
    }
    let best = best.expect("at least one restart");
    let minimizer = best.minimizer.normalized()?;
    let feasibility = feasibility(set, &minimizer);
    let min_value = r.qform(&minimizer)?;
    Ok(PositivityCertificate {
        min_value,
        status: Status::from_min(min_value),
        minimizer,
        restarts_used: budget.restarts,
        iterations,
        seed,
        converged: best.converged,
        grad_norm: best.grad_norm,
        feasibility,
    })
}

/// Membership residual: `‖X²‖` for S₀, `‖X³‖` for S′ and the isotropic simple
/// family, the third singular value for simple elements, `0` for orbits.
pub fn feasibility(set: &InvariantSet, x: &SkewMatrix) -> f64 {
    let m = x.matrix();
    match set {
        InvariantSet::S0 => (m * m).norm(),
        InvariantSet::SPrime => (m * m * m).norm(),
        InvariantSet::SimpleFamily { e, u } => match classify_simple(e, u) {
            Ok(SimpleCase::Isotropic) => (m * m * m).norm(),
            _ => {
                let sv = m.clone().singular_values();
                let mut s: Vec<f64> = sv.iter().cloned().collect();
                s.sort_by(|a, b| b.partial_cmp(a).unwrap());
                s.get(2).cloned().unwrap_or(0.0)
            }
        },
        InvariantSet::S1Kahler => {
            let z = kahler::unembed(m);
            let sv = z.clone().singular_values();
            let mut s: Vec<f64> = sv.iter().cloned().collect();
            s.sort_by(|a, b| b.partial_cmp(a).unwrap());
            s.get(1).cloned().unwrap_or(0.0) + (&z * &z).norm()
        }
        InvariantSet::OrbitOf(_) => 0.0,
    }
}

/// Largest normalized value, via `−certify(−R)`.
pub fn maximum(r: &CurvatureOperator, set: &InvariantSet, budget: Budget, seed: u64) -> Result<f64> {
    Ok(-certify(&r.scale(-1.0), set, budget, seed)?.min_value)
}

/// `X = X₁ + X₂` relative to a radial direction `e₀`.
#[derive(Debug, Clone)]
pub struct RadialSplit {
    pub tangential: SkewMatrix,
    pub radial: SkewMatrix,
}

/// Splits with respect to the coordinate direction `e₀`.
pub fn radial_split(x: &SkewMatrix) -> RadialSplit {
    let n = x.n();
    let a = x.coefficients();
    let mut t = a.clone();
    let mut rad = a;
    for (k, (i, _)) in index_pairs(n).into_iter().enumerate() {
        if i == 0 {
            t[k] = 0.0.into();
        } else {
            rad[k] = 0.0.into();
        }
    }
    RadialSplit { tangential: SkewMatrix::from_coefficients(n, &t), radial: SkewMatrix::from_coefficients(n, &rad) }
}

/// Tangential projector for the radial direction `e` (unit, real).
pub fn tangential_projector_along(n: usize, e: &nalgebra::DVector<f64>) -> Result<CurvatureOperator> {
    let p = rotation_taking_e0_to(e)?;
    CurvatureOperator::tangential_projector(n).conjugate_by(&p)
}

/// A real orthogonal matrix with first column `e/‖e‖`.
pub fn rotation_taking_e0_to(e: &nalgebra::DVector<f64>) -> Result<nalgebra::DMatrix<f64>> {
    let n = e.len();
    let nrm = e.norm();
    if nrm == 0.0 {
        return Err(Error::ZeroInput);
    }
    let mut m = nalgebra::DMatrix::identity(n, n);
    m.set_column(0, &(e / nrm));
    // pick the identity column least aligned with e for the completion
    let skip = (0..n).max_by(|&a, &b| e[a].abs().partial_cmp(&e[b].abs()).unwrap()).unwrap();
    let mut col = 1;
    for k in 0..n {
        if k == skip || col == n {
            continue;
        }
        m.set_column(col, &nalgebra::DVector::from_fn(n, |i, _| if i == k { 1.0 } else { 0.0 }));
        col += 1;
    }
    let mut q = m.clone().qr().q();
    if q.column(0).dot(&(e / nrm)) < 0.0 {
        q.column_mut(0).neg_mut();
    }
    if q.determinant() < 0.0 {
        q.column_mut(n - 1).neg_mut();
    }
    Ok(q)
}

/// `k(S)` with respect to the radial direction `e` (default `e₀`):
/// `k² = min_{X∈S} ‖X₁‖²/‖X‖²`.
pub fn radial_k_along(
    set: &InvariantSet,
    n: usize,
    e: &nalgebra::DVector<f64>,
    budget: Budget,
    seed: u64,
) -> Result<(f64, PositivityCertificate)> {
    let p = tangential_projector_along(n, e)?;
    let cert = certify(&p, set, budget, seed)?;
    Ok((cert.min_value.max(0.0).sqrt(), cert))
}

pub fn radial_k(set: &InvariantSet, n: usize, budget: Budget, seed: u64) -> Result<f64> {
    let e0 = nalgebra::DVector::from_fn(n, |i, _| if i == 0 { 1.0 } else { 0.0 });
    Ok(radial_k_along(set, n, &e0, budget, seed)?.0)
}

/// Largest tangential mass fraction `a_max = 1 − min ‖X₂‖²/‖X‖²`.
pub fn tangential_mass_max(set: &InvariantSet, n: usize, budget: Budget, seed: u64) -> Result<f64> {
    let c = certify(&CurvatureOperator::radial_projector(n), set, budget, seed)?;
    Ok(1.0 - c.min_value.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Confidence {
    /// Structural answer (no optimization involved).
    Exact,
    High,
    Low,
}

#[derive(Debug, Clone)]
pub struct A0Decision {
    pub in_a0: bool,
    pub witness: Option<SkewMatrix>,
    /// Numerical `k(S)` when an optimizer was used.
    pub k: Option<f64>,
    pub confidence: Confidence,
}

/// Below this `k(S)` an orbit is declared to contain a radial simple element
/// in its closure.
pub const A0_K_TOL: f64 = 1e-3;

/// Does the closure of S contain a nonzero `φ(e∧u)` with `e` real?
pub fn in_a0(set: &InvariantSet, n: usize, budget: Budget, seed: u64) -> Result<A0Decision> {
    match set {
        InvariantSet::S0 => {
            let k = radial_k(set, n, budget, seed)?;
            Ok(A0Decision { in_a0: false, witness: None, k: Some(k), confidence: Confidence::Exact })
        }
        InvariantSet::SPrime => Ok(A0Decision {
            in_a0: true,
            witness: Some(simple_radial(n)?),
            k: Some(0.0),
            confidence: Confidence::Exact,
        }),
        InvariantSet::SimpleFamily { e, u } => {
            classify_simple(e, u)?;
            let w = crate::lie::phi(e, u)?.normalized()?;
            Ok(A0Decision { in_a0: true, witness: Some(w), k: Some(0.0), confidence: Confidence::Exact })
        }
        InvariantSet::S1Kahler => Err(Error::Precondition("in_A0 is not defined for the Kähler set".into())),
        InvariantSet::OrbitOf(_) => {
            let e0 = nalgebra::DVector::from_fn(n, |i, _| if i == 0 { 1.0 } else { 0.0 });
            let (k, cert) = radial_k_along(set, n, &e0, budget, seed)?;
            let in_a0 = k < A0_K_TOL;
            let confidence = if !(1e-6..=0.1).contains(&k) { Confidence::High } else { Confidence::Low };
            Ok(A0Decision { in_a0, witness: in_a0.then_some(cert.minimizer), k: Some(k), confidence })
        }
    }
}

#[derive(Debug, Clone)]
pub enum Branch {
    /// Not in A₀: the gluing construction applies with `k(S) > 0`.
    Gluing { k: f64 },
    /// In A₀: the flow argument applies; the witness is a radial simple element.
    Flow { witness: SkewMatrix, case: Option<SimpleCase> },
}

#[derive(Debug, Clone)]
pub struct DichotomyReport {
    pub branch: Branch,
    pub decision: A0Decision,
    pub clause: &'static str,
}

pub fn dichotomy_report(set: &InvariantSet, n: usize, budget: Budget, seed: u64) -> Result<DichotomyReport> {
    let decision = in_a0(set, n, budget, seed)?;
    let (branch, clause) = if decision.in_a0 {
        let case = match set {
            InvariantSet::SimpleFamily { e, u } => Some(classify_simple(e, u)?),
            InvariantSet::SPrime => Some(SimpleCase::Isotropic),
            _ => None,
        };
        let witness = decision.witness.clone().expect("A0 decisions carry a witness");
        (Branch::Flow { witness, case }, "(ii) S in A0: flow branch")
    } else {
        (Branch::Gluing { k: decision.k.unwrap_or(0.0) }, "(i) S in A \\ A0: gluing branch")
    };
    Ok(DichotomyReport { branch, decision, clause })
}

/// Real rotation applied to a complex skew element.
pub fn rotate(x: &SkewMatrix, p: &nalgebra::DMatrix<f64>) -> SkewMatrix {
    let pc = complexify(p);
    SkewMatrix::new(&pc * x.matrix() * pc.transpose())
}
