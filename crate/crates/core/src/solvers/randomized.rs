//! Randomized range finder with power iterations.

use super::{check_rank, MatrixOperator, SvdResult};
use crate::error::{KsvdError, Result};
use crate::linalg::{dense_svd, gaussian_matrix, orthonormal_basis};

/// Rank-`r` SVD from an `(r + p)`-dimensional randomized range sketch with `q`
/// power iterations. Deterministic given `seed`.
pub fn randomized_svd<O: MatrixOperator + ?Sized>(
    op: &O,
    r: usize,
    oversample: usize,
    power: usize,
    seed: u64,
) -> Result<SvdResult> {
    let (n, m) = (op.nrows(), op.ncols());
    check_rank(r, n, m)?;
    let l = r + oversample;
    if l > n.min(m) {
        return Err(KsvdError::InvalidParameter(format!(
            "rank {r} plus {oversample} oversamples exceeds min dimension {}",
            n.min(m)
        )));
    }
    let omega = gaussian_matrix(m, l, seed);
    let mut q = orthonormal_basis(op.apply(&omega));
    for _ in 0..power {
        let z = orthonormal_basis(op.apply_transpose(&q));
        q = orthonormal_basis(op.apply(&z));
    }
    // Gᵀ Q = Ũ Σ Ṽᵀ, so G ≈ Q Qᵀ G = (Q Ṽ) Σ Ũᵀ.
    let w = op.apply_transpose(&q);
    let (uw, s, vw) = dense_svd(&w)?;
    let u = q * vw;
    Ok(SvdResult::truncated(u, s, uw, r, (n, m), true, power))
}
