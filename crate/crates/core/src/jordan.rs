//! Jordan data of nilpotent matrices in gl(n,ℂ) and degeneration to the
//! rank-one square-zero orbit S₁.

use crate::degeneration::RANK_TOL;
use crate::error::{Error, Result};
use crate::lie::{c, numerical_rank, CMat, CVec};

#[derive(Debug, Clone)]
pub struct JordanData {
    /// Block sizes, nonincreasing.
    pub partition: Vec<usize>,
    /// Columns are Jordan chains: `Q⁻¹ Y Q = J`.
    pub transform: CMat,
    pub jordan: CMat,
    pub reconstruction_residual: f64,
}

fn rank(m: &CMat, scale: f64) -> usize {
    // absolute threshold relative to the input scale, so that Yᵏ = 0 reads as rank 0
    let sv = m.clone().singular_values();
    sv.iter().filter(|&&s| s > RANK_TOL * scale).count()
}

/// Nilpotency check used by the Jordan routines: `‖Yⁿ‖ ≤ 1e−8·‖Y‖ⁿ`.
pub fn nilpotency_residual(y: &CMat) -> f64 {
    let n = y.nrows();
    let s = y.norm().max(1e-300);
    let scaled = y * c(1.0 / s);
    let mut p = CMat::identity(n, n);
    for _ in 0..n {
        p = &p * &scaled;
    }
    p.norm()
}

/// Null space basis (columns) of a square matrix.
fn null_space(m: &CMat, scale: f64) -> Vec<CVec> {
    let n = m.nrows();
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("requested V");
    let mut out = Vec::new();
    for k in 0..n {
        if svd.singular_values[k] <= RANK_TOL * scale {
            out.push(vt.row(k).adjoint());
        }
    }
    out
}

/// Partition from the rank sequence `rank(Y⁰), rank(Y¹), …` and a chain basis.
pub fn jordan_partition(y: &CMat) -> Result<JordanData> {
    let n = y.nrows();
    if y.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: y.ncols() });
    }
    if nilpotency_residual(y) > 1e-8 {
        return Err(Error::NotNilpotent(nilpotency_residual(y)));
    }
    let scale = y.norm().max(1.0);
    let mut powers = vec![CMat::identity(n, n)];
    let mut ranks = vec![n];
    while *ranks.last().unwrap() > 0 {
        let next = powers.last().unwrap() * y;
        ranks.push(rank(&next, scale.powi(powers.len() as i32)));
        powers.push(next);
        if powers.len() > n + 1 {
            return Err(Error::NotNilpotent(nilpotency_residual(y)));
        }
    }
    // blocks of size ≥ m: ranks[m−1] − ranks[m]
    let kmax = ranks.len() - 1;
    let at_least: Vec<usize> = (1..=kmax).map(|m| ranks[m - 1] - ranks[m]).collect();
    let mut partition = Vec::new();
    for m in (1..=kmax).rev() {
        let exact = at_least[m - 1] - at_least.get(m).cloned().unwrap_or(0);
        partition.extend(std::iter::repeat_n(m, exact));
    }

    // chains, longest first: pick heads in ker Yᵏ independent modulo
    // ker Yᵏ⁻¹ + (level-k vectors of longer chains)
    let mut heads: Vec<(CVec, usize)> = Vec::new();
    for k in (1..=kmax).rev() {
        let need = at_least[k - 1] - at_least.get(k).cloned().unwrap_or(0);
        if need == 0 {
            continue;
        }
        let mut span: Vec<CVec> = null_space(&powers[k - 1], scale.powi(k as i32 - 1));
        if k == 1 {
            span.clear();
        }
        for (h, len) in &heads {
            span.push(&powers[len - k] * h);
        }
        let candidates = null_space(&powers[k], scale.powi(k as i32));
        let mut found = 0;
        for v in candidates {
            if found == need {
                break;
            }
            let mut trial = span.clone();
            trial.push(v.clone());
            let m = CMat::from_columns(&trial);
            if numerical_rank(&m, RANK_TOL) == trial.len() {
                span.push(v.clone());
                heads.push((v, k));
                found += 1;
            }
        }
        if found < need {
            return Err(Error::NonConvergence(format!("could not complete chains of length {k}")));
        }
    }
    let mut cols = Vec::with_capacity(n);
    for (h, len) in &heads {
        for j in (0..*len).rev() {
            cols.push(&powers[j] * h);
        }
    }
    let q = CMat::from_columns(&cols);
    let jordan = jordan_matrix(&partition);
    let qinv = q.clone().try_inverse().ok_or_else(|| Error::NonConvergence("singular chain basis".into()))?;
    let residual = (&qinv * y * &q - &jordan).norm();
    Ok(JordanData { partition, transform: q, jordan, reconstruction_residual: residual })
}

/// Block-diagonal nilpotent Jordan matrix with unit superdiagonals.
pub fn jordan_matrix(partition: &[usize]) -> CMat {
    let n: usize = partition.iter().sum();
    let mut j = CMat::zeros(n, n);
    let mut off = 0;
    for &k in partition {
        for i in 1..k {
            j[(off + i - 1, off + i)] = c(1.0);
        }
        off += k;
    }
    j
}

#[derive(Debug, Clone)]
pub struct RankOneLimit {
    pub jordan: JordanData,
    pub output: CMat,
    /// `‖normalized conjugate(s) − output‖` for `s = 10, 10², …, 10⁶`.
    pub residuals: Vec<f64>,
    pub rank: usize,
    pub square_residual: f64,
}

/// Frobenius-normalized limit of `(Q D_s⁻¹ Q⁻¹) Y (Q D_s Q⁻¹)`, where `D_s`
/// scales the second slot of the largest block by `s` and fixes everything
/// else; as `s → ∞` only the first superdiagonal entry of `J_{k₁}` survives.
pub fn degenerate_to_rank_one(y: &CMat) -> Result<RankOneLimit> {
    if y.norm() == 0.0 {
        return Err(Error::ZeroInput);
    }
    let jd = jordan_partition(y)?;
    let n = y.nrows();
    let q = &jd.transform;
    let qinv = q.clone().try_inverse().ok_or_else(|| Error::NonConvergence("singular chain basis".into()))?;
    let mut e12 = CMat::zeros(n, n);
    e12[(0, 1)] = c(1.0);
    let limit = q * &e12 * &qinv;
    let output = &limit * c(1.0 / limit.norm());
    let mut residuals = Vec::new();
    for p in 1..=6 {
        let s = 10f64.powi(p);
        let mut d = CMat::identity(n, n);
        let mut dinv = CMat::identity(n, n);
        for k in 1..jd.partition[0] {
            d[(k, k)] = c(s);
            dinv[(k, k)] = c(1.0 / s);
        }
        let zt = q * (&dinv * &jd.jordan * &d) * &qinv;
        let zt = &zt * c(1.0 / zt.norm());
        residuals.push((zt - &output).norm());
    }
    let rank = numerical_rank(&output, RANK_TOL);
    let square_residual = (&output * &output).norm();
    Ok(RankOneLimit { jordan: jd, output, residuals, rank, square_residual })
}

/// Nilpotent limit of a general matrix: Schur form `UTUᴴ`, then
/// `diag(s⁰, s¹, …)` conjugation; the outermost nonzero superdiagonal of `T`
/// survives normalization.
pub fn gl_nilpotent_limit(y: &CMat) -> Result<CMat> {
    let n = y.nrows();
    if y.norm() == 0.0 {
        return Err(Error::ZeroInput);
    }
    if nilpotency_residual(y) <= 1e-8 {
        return Ok(y * c(1.0 / y.norm()));
    }
    let (u, t) = y.clone().schur().unpack();
    let tol = 1e-9 * t.norm();
    let top = (1..n)
        .rev()
        .find(|&d| (0..n - d).any(|i| t[(i, i + d)].norm() > tol))
        .ok_or_else(|| Error::Precondition("normal matrix: no nilpotent direction in its similarity orbit closure".into()))?;
    let mut band = CMat::zeros(n, n);
    for i in 0..n - top {
        band[(i, i + top)] = t[(i, i + top)];
    }
    let z = &u * band * u.adjoint();
    Ok(&z * c(1.0 / z.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_matrix, stream_rng};

    fn similar(partition: &[usize], seed: u64) -> CMat {
        let n: usize = partition.iter().sum();
        let mut rng = stream_rng(seed, 0);
        let s = complex_matrix(&mut rng, n, n) + CMat::identity(n, n) * c(2.0);
        let sinv = s.clone().try_inverse().unwrap();
        &s * jordan_matrix(partition) * sinv
    }

    #[test]
    fn partition_examples() {
        assert_eq!(jordan_partition(&jordan_matrix(&[3, 1])).unwrap().partition, vec![3, 1]);
        assert_eq!(jordan_partition(&CMat::zeros(4, 4)).unwrap().partition, vec![1, 1, 1, 1]);
        assert_eq!(jordan_partition(&jordan_matrix(&[2, 2])).unwrap().partition, vec![2, 2]);
        assert!(jordan_partition(&CMat::identity(3, 3)).is_err());
    }

    #[test]
    fn partition_survives_similarity() {
        for (k, p) in [vec![3, 1], vec![2, 2, 1], vec![4, 2], vec![2, 1, 1]].iter().enumerate() {
            let y = similar(p, 10 + k as u64);
            let jd = jordan_partition(&y).unwrap();
            assert_eq!(&jd.partition, p);
            assert!(jd.reconstruction_residual <= 1e-8, "{:e}", jd.reconstruction_residual);
        }
    }

    #[test]
    fn rank_one_examples() {
        let y = jordan_matrix(&[2, 1, 1]);
        let z = degenerate_to_rank_one(&y).unwrap();
        assert!((z.output - &y).norm() < 1e-12);
        let y = similar(&[3, 1], 3);
        let z = degenerate_to_rank_one(&y).unwrap();
        assert_eq!(z.rank, 1);
        assert!(z.square_residual <= 1e-8);
        assert!(*z.residuals.last().unwrap() < 1e-5);
        assert!(degenerate_to_rank_one(&CMat::identity(2, 2)).is_err());
    }

    #[test]
    fn general_matrix_limit_is_nilpotent() {
        let mut rng = stream_rng(21, 0);
        let y = complex_matrix(&mut rng, 4, 4);
        let z = gl_nilpotent_limit(&y).unwrap();
        assert!(nilpotency_residual(&z) <= 1e-8);
        let r = degenerate_to_rank_one(&z).unwrap();
        assert_eq!(r.rank, 1);
    }
}
