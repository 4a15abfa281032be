//! Symmetric Nyström eigen-approximation and its use as an SVD baseline.

use nalgebra::{DMatrix, DVector};

use super::{check_rank, GramOuter, MatrixOperator, SolveStatus, SvdResult, SymmetricOperator};
use crate::error::{KsvdError, Result};
use crate::linalg::{normalize_columns, rng, sample_indices, sorted_symmetric_eigen};

/// Approximate top eigenpairs of a symmetric PSD matrix.
#[derive(Clone, Debug)]
pub struct SymNystromResult {
    /// Unit-norm approximate eigenvectors, `N×r`.
    pub u_tilde: DMatrix<f64>,
    pub lambdas_tilde: DVector<f64>,
    pub indices: Vec<usize>,
}

/// Nyström eigen-approximation from `n_sub` uniformly sampled columns.
pub fn sym_nystrom_eig<K: SymmetricOperator + ?Sized>(
    k: &K,
    n_sub: usize,
    r: usize,
    seed: u64,
) -> Result<SymNystromResult> {
    let n = k.size();
    if n_sub > n {
        return Err(KsvdError::InvalidParameter(format!("n_sub {n_sub} exceeds size {n}")));
    }
    let idx = sample_indices(n, n_sub, &mut rng(seed));
    sym_nystrom_eig_with_indices(k, &idx, r)
}

/// As [`sym_nystrom_eig`] with an explicit landmark set.
///
/// `λ̃_s = (N/n)·λ_s` and `ũ_s = √(n/N)·K[:, idx]·u_s/λ_s`, columns then
/// unit-normalized.
pub fn sym_nystrom_eig_with_indices<K: SymmetricOperator + ?Sized>(
    k: &K,
    idx: &[usize],
    r: usize,
) -> Result<SymNystromResult> {
    let big_n = k.size();
    let n = idx.len();
    if r == 0 || n < r {
        return Err(KsvdError::InvalidParameter(format!("need at least r = {r} landmarks, got {n}")));
    }
    let c = k.columns(idx);
    let w = DMatrix::from_fn(n, n, |a, b| c[(idx[a], b)]);
    let w = (&w + w.transpose()) * 0.5;
    let (vals, vecs) = sorted_symmetric_eigen(&w);
    let cutoff = vals[0].abs() * n as f64 * f64::EPSILON;
    if !(vals[r - 1] > cutoff) {
        return Err(KsvdError::RankDeficient {
            requested: r,
            achieved: vals.iter().take_while(|&&v| v > cutoff).count(),
            hint: "landmark submatrix is rank deficient; resample or increase n_sub",
        });
    }
    let ratio = (n as f64 / big_n as f64).sqrt();
    let mut u = DMatrix::zeros(big_n, r);
    for s in 0..r {
        let col = &c * vecs.column(s) * (ratio / vals[s]);
        u.set_column(s, &col);
    }
    normalize_columns(&mut u);
    let lambdas = DVector::from_iterator(r, vals.iter().take(r).map(|v| v * big_n as f64 / n as f64));
    Ok(SymNystromResult { u_tilde: u, lambdas_tilde: lambdas, indices: idx.to_vec() })
}

/// SVD baseline from two independent Nyström eigenproblems on `GGᵀ` and
/// `GᵀG`. Singular values are `√λ̃` of the left problem; each right vector is
/// flipped so that `u_sᵀ G v_s > 0`.
pub fn sym_nystrom_svd<O: MatrixOperator + ?Sized>(op: &O, n_sub: usize, r: usize, seed: u64) -> Result<SvdResult> {
    let (n, m) = (op.nrows(), op.ncols());
    check_rank(r, n, m)?;
    let mut rng = rng(seed);
    let left_idx = sample_indices(n, n_sub.min(n), &mut rng);
    let right_idx = sample_indices(m, n_sub.min(m), &mut rng);
    let left = sym_nystrom_eig_with_indices(&GramOuter::left(op), &left_idx, r)?;
    let right = sym_nystrom_eig_with_indices(&GramOuter::right(op), &right_idx, r)?;
    let mut v = right.u_tilde;
    let gv = op.apply(&v);
    for s in 0..r {
        if left.u_tilde.column(s).dot(&gv.column(s)) < 0.0 {
            v.column_mut(s).neg_mut();
        }
    }
    let s = left.lambdas_tilde.map(|l| l.max(0.0).sqrt());
    Ok(SvdResult { u: left.u_tilde, s, v, status: SolveStatus { converged: true, achieved_rank: r, iterations: 0 } })
}
