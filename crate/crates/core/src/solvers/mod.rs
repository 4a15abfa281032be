//! Low-rank SVD solvers for asymmetric Gram matrices.

mod asym_nystrom;
pub mod bench;
mod eta;
mod operator;
mod randomized;
mod sym_nystrom;
mod truncated;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{KsvdError, Result};
use crate::linalg::dense_svd;

pub use asym_nystrom::{asym_nystrom, asym_nystrom_with_indices, NystromResult};
pub use eta::{eta, eta_normalized};
pub use operator::{GramOuter, MatrixOperator, SymmetricOperator};
pub use randomized::randomized_svd;
pub use sym_nystrom::{sym_nystrom_eig, sym_nystrom_eig_with_indices, sym_nystrom_svd, SymNystromResult};
pub use truncated::truncated_svd;

/// Which solver computes the rank-`r` factors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolverChoice {
    Dense,
    Truncated { tol: f64, max_iter: usize },
    Randomized { oversample: usize, power: usize, seed: u64 },
    SymNystrom { n_sub: usize, seed: u64 },
    AsymNystrom { n_sub: usize, m_sub: usize, seed: u64 },
}

impl SolverChoice {
    pub fn name(&self) -> &'static str {
        match self {
            SolverChoice::Dense => "dense",
            SolverChoice::Truncated { .. } => "tsvd",
            SolverChoice::Randomized { .. } => "rsvd",
            SolverChoice::SymNystrom { .. } => "symnys",
            SolverChoice::AsymNystrom { .. } => "asymnys",
        }
    }
}

/// Outcome flags of an iterative solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveStatus {
    pub converged: bool,
    /// Number of numerically positive singular values returned (≤ requested).
    pub achieved_rank: usize,
    pub iterations: usize,
}

/// Rank-`r` factors `G ≈ U diag(s) Vᵀ`, singular values nonincreasing.
#[derive(Clone, Debug)]
pub struct SvdResult {
    pub u: DMatrix<f64>,
    pub s: DVector<f64>,
    pub v: DMatrix<f64>,
    pub status: SolveStatus,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// Keeps the leading singular triplets above the numerical rank cutoff
    /// `σ₁·max(N, M)·ε`, at most `r` of them.
    pub(crate) fn truncated(
        u: DMatrix<f64>,
        s: DVector<f64>,
        v: DMatrix<f64>,
        r: usize,
        dims: (usize, usize),
        converged: bool,
        iterations: usize,
    ) -> Self {
        let cutoff = s.get(0).copied().unwrap_or(0.0) * dims.0.max(dims.1) as f64 * f64::EPSILON;
        let k = s.iter().take(r).take_while(|&&x| x > cutoff && x > 0.0).count();
        SvdResult {
            u: u.columns(0, k).into_owned(),
            s: s.rows(0, k).into_owned(),
            v: v.columns(0, k).into_owned(),
            status: SolveStatus { converged, achieved_rank: k, iterations },
        }
    }
}

pub(crate) fn check_rank(r: usize, n: usize, m: usize) -> Result<()> {
    if r == 0 || r > n.min(m) {
        return Err(KsvdError::InvalidParameter(format!("rank {r} must lie in 1..={} for a {n}x{m} matrix", n.min(m))));
    }
    Ok(())
}

/// Full SVD of the materialized matrix, truncated to rank `r`.
pub fn dense_truncated_svd<O: MatrixOperator + ?Sized>(op: &O, r: usize) -> Result<SvdResult> {
    check_rank(r, op.nrows(), op.ncols())?;
    let (u, s, v) = dense_svd(&op.to_dense())?;
    Ok(SvdResult::truncated(u, s, v, r, (op.nrows(), op.ncols()), true, 0))
}

/// Runs the chosen solver for the top `r` singular triplets.
pub fn solve<O: MatrixOperator + ?Sized>(op: &O, r: usize, choice: &SolverChoice) -> Result<SvdResult> {
    match *choice {
        SolverChoice::Dense => dense_truncated_svd(op, r),
        SolverChoice::Truncated { tol, max_iter } => truncated_svd(op, r, tol, max_iter),
        SolverChoice::Randomized { oversample, power, seed } => randomized_svd(op, r, oversample, power, seed),
        SolverChoice::SymNystrom { n_sub, seed } => sym_nystrom_svd(op, n_sub, r, seed),
        SolverChoice::AsymNystrom { n_sub, m_sub, seed } => {
            asym_nystrom(op, n_sub, m_sub, r, seed).map(|n| n.into_svd())
        }
    }
}
