//! File formats: operator, matrix, set-descriptor and certificate JSON, plus
//! the output envelope and atomic writes.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cones::{A0Decision, Branch, Confidence, DichotomyReport, InvariantSet, PositivityCertificate, SimpleCase, Status};
use crate::curvature::CurvatureOperator;
use crate::degeneration::{DegenerationStep, MinimalReduction};
use crate::error::{Error, Result};
use crate::jordan::{JordanData, RankOneLimit};
use crate::lie::{so_dim, CMat, CVec, SkewMatrix, C64};

pub const BASIS_TAG: &str = "lex-xij-v1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorJson {
    pub n: usize,
    pub basis: String,
    pub matrix: Vec<Vec<f64>>,
}

impl OperatorJson {
    pub fn from_operator(r: &CurvatureOperator) -> Self {
        let m = r.matrix();
        Self { n: r.n(), basis: BASIS_TAG.into(), matrix: (0..m.nrows()).map(|i| m.row(i).iter().cloned().collect()).collect() }
    }

    pub fn into_operator(self) -> Result<CurvatureOperator> {
        if self.basis != BASIS_TAG {
            return Err(Error::Malformed(format!("unknown basis tag `{}`", self.basis)));
        }
        let d = so_dim(self.n);
        if self.matrix.len() != d || self.matrix.iter().any(|row| row.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: self.matrix.len() });
        }
        let m = DMatrix::from_fn(d, d, |i, j| self.matrix[i][j]);
        CurvatureOperator::new(self.n, m)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub n: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

/// Same as [`MatrixJson`] without the dimension, as used inside set descriptors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElementJson {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

fn split(m: &CMat) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let rows = |f: fn(&C64) -> f64| (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect()).collect();
    (rows(|z| z.re), rows(|z| z.im))
}

fn join(re: &[Vec<f64>], im: &[Vec<f64>]) -> Result<CMat> {
    let n = re.len();
    if im.len() != n || re.iter().chain(im).any(|r| r.len() != n) {
        return Err(Error::Malformed("re and im must be square arrays of equal size".into()));
    }
    Ok(CMat::from_fn(n, n, |i, j| C64::new(re[i][j], im[i][j])))
}

impl MatrixJson {
    pub fn from_matrix(m: &CMat) -> Self {
        let (re, im) = split(m);
        Self { n: m.nrows(), re, im }
    }

    pub fn into_matrix(self) -> Result<CMat> {
        let m = join(&self.re, &self.im)?;
        if m.nrows() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: m.nrows() });
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SetJson {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element: Option<ElementJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_re: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_im: Option<Vec<f64>>,
}

impl SetJson {
    pub fn kind(kind: &str) -> Self {
        Self { kind: kind.into(), element: None, e: None, u_re: None, u_im: None }
    }

    pub fn from_set(set: &InvariantSet) -> Self {
        let mut out = Self::kind(set.kind());
        match set {
            InvariantSet::OrbitOf(x) => {
                let (re, im) = split(x.matrix());
                out.element = Some(ElementJson { re, im });
            }
            InvariantSet::SimpleFamily { e, u } => {
                out.e = Some(e.iter().map(|z| z.re).collect());
                out.u_re = Some(u.iter().map(|z| z.re).collect());
                out.u_im = Some(u.iter().map(|z| z.im).collect());
            }
            _ => {}
        }
        out
    }

    pub fn into_set(self) -> Result<InvariantSet> {
        match self.kind.as_str() {
            "s0" => Ok(InvariantSet::S0),
            "sprime" => Ok(InvariantSet::SPrime),
            "s1" => Ok(InvariantSet::S1Kahler),
            "orbit" => {
                let el = self.element.ok_or_else(|| Error::Malformed("orbit descriptor needs `element`".into()))?;
                let m = join(&el.re, &el.im)?;
                InvariantSet::orbit(SkewMatrix::try_new(m, 1e-10)?)
            }
            "simple" => {
                let (Some(e), Some(ur)) = (self.e, self.u_re) else {
                    return Err(Error::Malformed("simple descriptor needs `e` and `u_re`".into()));
                };
                let ui = self.u_im.unwrap_or_else(|| vec![0.0; ur.len()]);
                if ur.len() != e.len() || ui.len() != e.len() {
                    return Err(Error::DimensionMismatch { expected: e.len(), found: ur.len().max(ui.len()) });
                }
                let ev = CVec::from_iterator(e.len(), e.iter().map(|&x| C64::new(x, 0.0)));
                let uv = CVec::from_iterator(e.len(), ur.iter().zip(&ui).map(|(&a, &b)| C64::new(a, b)));
                InvariantSet::simple(ev, uv)
            }
            other => Err(Error::Malformed(format!("unknown set kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateJson {
    pub min_value: f64,
    pub minimizer: MatrixJson,
    pub status: Status,
    pub restarts_used: usize,
    pub iterations: usize,
    pub seed: u64,
    pub converged: bool,
    pub grad_norm: f64,
    pub feasibility: f64,
}

impl From<&PositivityCertificate> for CertificateJson {
    fn from(c: &PositivityCertificate) -> Self {
        Self {
            min_value: c.min_value,
            minimizer: MatrixJson::from_matrix(c.minimizer.matrix()),
            status: c.status,
            restarts_used: c.restarts_used,
            iterations: c.iterations,
            seed: c.seed,
            converged: c.converged,
            grad_norm: c.grad_norm,
            feasibility: c.feasibility,
        }
    }
}

fn vec_json(v: &Option<CVec>) -> Option<(Vec<f64>, Vec<f64>)> {
    v.as_ref().map(|v| (v.iter().map(|z| z.re).collect(), v.iter().map(|z| z.im).collect()))
}

#[derive(Debug, Clone, Serialize)]
pub struct StepJson {
    pub input: MatrixJson,
    /// `(re, im)` of the boost-plane vectors, absent for square-zero inputs.
    pub f1: Option<(Vec<f64>, Vec<f64>)>,
    pub f2: Option<(Vec<f64>, Vec<f64>)>,
    pub schedule: Vec<f64>,
    pub limit: MatrixJson,
    pub grade: i32,
    pub residuals: Vec<f64>,
    pub min_poly_degree: usize,
    pub nilpotency: f64,
}

impl From<&DegenerationStep> for StepJson {
    fn from(s: &DegenerationStep) -> Self {
        Self {
            input: MatrixJson::from_matrix(s.input.matrix()),
            f1: vec_json(&s.f1),
            f2: vec_json(&s.f2),
            schedule: s.schedule.clone(),
            limit: MatrixJson::from_matrix(s.limit.matrix()),
            grade: s.grade,
            residuals: s.residuals.clone(),
            min_poly_degree: s.min_poly_degree,
            nilpotency: s.nilpotency,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReductionJson {
    pub steps: Vec<StepJson>,
    /// The S₀ representative.
    pub output: MatrixJson,
    pub square_residual: f64,
    pub rank: usize,
}

impl From<&MinimalReduction> for ReductionJson {
    fn from(m: &MinimalReduction) -> Self {
        Self {
            steps: m.steps.iter().map(StepJson::from).collect(),
            output: MatrixJson::from_matrix(m.output.matrix()),
            square_residual: m.square_residual,
            rank: m.rank,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct JordanJson {
    pub partition: Vec<usize>,
    pub transform: MatrixJson,
    pub jordan: MatrixJson,
    pub reconstruction_residual: f64,
}

impl From<&JordanData> for JordanJson {
    fn from(j: &JordanData) -> Self {
        Self {
            partition: j.partition.clone(),
            transform: MatrixJson::from_matrix(&j.transform),
            jordan: MatrixJson::from_matrix(&j.jordan),
            reconstruction_residual: j.reconstruction_residual,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RankOneJson {
    pub jordan: JordanJson,
    /// The S₁ representative.
    pub output: MatrixJson,
    pub residuals: Vec<f64>,
    pub rank: usize,
    pub square_residual: f64,
}

impl From<&RankOneLimit> for RankOneJson {
    fn from(r: &RankOneLimit) -> Self {
        Self {
            jordan: JordanJson::from(&r.jordan),
            output: MatrixJson::from_matrix(&r.output),
            residuals: r.residuals.clone(),
            rank: r.rank,
            square_residual: r.square_residual,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DichotomyJson {
    pub branch: &'static str,
    pub clause: &'static str,
    pub in_a0: bool,
    pub k: Option<f64>,
    pub confidence: Confidence,
    pub witness: Option<MatrixJson>,
    pub case: Option<SimpleCase>,
}

impl From<&DichotomyReport> for DichotomyJson {
    fn from(d: &DichotomyReport) -> Self {
        let A0Decision { in_a0, k, confidence, .. } = &d.decision;
        let (branch, witness, case) = match &d.branch {
            Branch::Gluing { .. } => ("gluing", None, None),
            Branch::Flow { witness, case } => ("flow", Some(MatrixJson::from_matrix(witness.matrix())), *case),
        };
        Self { branch, clause: d.clause, in_a0: *in_a0, k: *k, confidence: *confidence, witness, case }
    }
}

/// Every output file: the payload plus the hash of the run configuration
/// and the seed.
#[derive(Debug, Clone, Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_hash: &'a str,
    pub seed: u64,
    #[serde(flatten)]
    pub payload: T,
}

/// SHA-256 of the canonical JSON form of a configuration.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let bytes = serde_json::to_vec(config)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))
}

/// Writes via a temporary sibling and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().ok_or_else(|| Error::InvalidParameter(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

/// CSV with `# config_hash=…` and `# seed=…` header lines.
pub fn write_csv(path: &Path, hash: &str, seed: u64, body: &str) -> Result<()> {
    write_atomic(path, format!("# config_hash={hash}\n# seed={seed}\n{body}").as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{unit, x_ij, I};

    #[test]
    fn operator_round_trip() {
        let r = crate::curvature::fubini_study(4).unwrap();
        let j = serde_json::to_string(&OperatorJson::from_operator(&r)).unwrap();
        let back: OperatorJson = serde_json::from_str(&j).unwrap();
        assert_eq!(back.into_operator().unwrap(), r);
        let bad = OperatorJson { n: 5, ..OperatorJson::from_operator(&r) };
        assert!(matches!(bad.into_operator(), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn set_round_trip() {
        let x = x_ij(4, 0, 1).add(&x_ij(4, 2, 3).scale(I));
        for set in [
            InvariantSet::S0,
            InvariantSet::OrbitOf(x.clone()),
            InvariantSet::simple(unit(4, 0), unit(4, 1) + unit(4, 2) * I).unwrap(),
        ] {
            let j = serde_json::to_string(&SetJson::from_set(&set)).unwrap();
            let back: SetJson = serde_json::from_str(&j).unwrap();
            let back = back.into_set().unwrap();
            assert_eq!(back.kind(), set.kind());
            if let (InvariantSet::OrbitOf(a), InvariantSet::OrbitOf(b)) = (&back, &set) {
                assert_eq!(a, b);
            }
        }
        assert!(SetJson::kind("nope").into_set().is_err());
        assert!(SetJson::kind("orbit").into_set().is_err());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = config_hash(&("flow", 1u64)).unwrap();
        assert_eq!(a, config_hash(&("flow", 1u64)).unwrap());
        assert_ne!(a, config_hash(&("flow", 2u64)).unwrap());
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
