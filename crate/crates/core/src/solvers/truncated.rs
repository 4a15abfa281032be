//! Golub–Kahan–Lanczos bidiagonalization with full reorthogonalization.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use super::{check_rank, dense_truncated_svd, MatrixOperator, SvdResult};
use crate::error::{KsvdError, Result};
use crate::linalg::{dense_svd, rng};

const START_SEED: u64 = 0x6b73_7664;

/// Top-`r` singular triplets of `G` by Lanczos bidiagonalization.
///
/// Stops once `‖Gᵀu_s − σ_s v_s‖ ≤ tol·σ₁` for the leading `r` Ritz triplets
/// (`Gv_s = σ_s u_s` holds by construction). `max_iter` bounds the Krylov
/// dimension; when it is hit first, the best iterate comes back with
/// `status.converged = false`. If the Krylov space exhausts `min(N, M)` the
/// result is taken from a dense SVD, which is exact.
pub fn truncated_svd<O: MatrixOperator + ?Sized>(op: &O, r: usize, tol: f64, max_iter: usize) -> Result<SvdResult> {
    let (n, m) = (op.nrows(), op.ncols());
    check_rank(r, n, m)?;
    if !(tol > 0.0) {
        return Err(KsvdError::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let full = n.min(m);
    let kmax = max_iter.max(r).min(full);

    let mut rng = rng(START_SEED);
    let mut p_basis: Vec<DVector<f64>> = Vec::with_capacity(kmax);
    let mut q_basis: Vec<DVector<f64>> = Vec::with_capacity(kmax + 1);
    let mut alphas: Vec<f64> = Vec::with_capacity(kmax);
    let mut betas: Vec<f64> = Vec::with_capacity(kmax);
    let mut scale_est = 0.0f64;

    let mut q = random_unit(m, &[], &mut rng);
    q_basis.push(q.clone());
    let check_every = (r / 4).max(1);

    for k in 0..kmax {
        // p_k = G q_k − β_{k−1} p_{k−1}
        let mut p = op.apply(&DMatrix::from_column_slice(m, 1, q.as_slice())).column(0).into_owned();
        if k > 0 {
            p.axpy(-betas[k - 1], &p_basis[k - 1], 1.0);
        }
        reorthogonalize(&mut p, &p_basis);
        let mut alpha = p.norm();
        if alpha <= breakdown_level(scale_est) {
            p = random_unit(n, &p_basis, &mut rng);
            alpha = 0.0;
        } else {
            p /= alpha;
        }
        scale_est = scale_est.max(alpha);
        alphas.push(alpha);
        p_basis.push(p.clone());

        // q_{k+1} = Gᵀ p_k − α_k q_k
        let mut qn = op.apply_transpose(&DMatrix::from_column_slice(n, 1, p.as_slice())).column(0).into_owned();
        qn.axpy(-alpha, &q, 1.0);
        reorthogonalize(&mut qn, &q_basis);
        let mut beta = qn.norm();
        let steps = k + 1;
        let exhausted = steps == full;
        if !exhausted {
            if beta <= breakdown_level(scale_est) {
                qn = random_unit(m, &q_basis, &mut rng);
                beta = 0.0;
            } else {
                qn /= beta;
            }
        }
        scale_est = scale_est.max(beta);
        betas.push(beta);

        if exhausted && steps < m.max(n) && beta > breakdown_level(scale_est) {
            // P (or Q) spans the whole space; finish exactly.
            let mut res = dense_truncated_svd(op, r)?;
            res.status.iterations = steps;
            return Ok(res);
        }

        let check = steps >= r && (steps % check_every == 0 || steps == kmax);
        if check {
            let (x, s, y) = dense_svd(&bidiagonal(&alphas, &betas[..steps - 1]))?;
            let sigma1 = s[0];
            let converged = sigma1 == 0.0 || (0..r).all(|i| beta * x[(steps - 1, i)].abs() <= tol * sigma1);
            if converged || steps == kmax {
                let pm = DMatrix::from_columns(&p_basis);
                let qm = DMatrix::from_columns(&q_basis[..steps]);
                let u = pm * x;
                let v = qm * y;
                return Ok(SvdResult::truncated(u, s, v, r, (n, m), converged, steps));
            }
        }
        if !exhausted {
            q = qn;
            q_basis.push(q.clone());
        }
    }
    unreachable!("the loop returns at its last step")
}

fn breakdown_level(scale: f64) -> f64 {
    if scale == 0.0 {
        0.0
    } else {
        scale * 1e-12
    }
}

fn bidiagonal(alphas: &[f64], betas: &[f64]) -> DMatrix<f64> {
    let k = alphas.len();
    let mut b = DMatrix::zeros(k, k);
    for i in 0..k {
        b[(i, i)] = alphas[i];
        if i + 1 < k {
            b[(i, i + 1)] = betas[i];
        }
    }
    b
}

/// Two passes of classical Gram–Schmidt against `basis`.
fn reorthogonalize(v: &mut DVector<f64>, basis: &[DVector<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let c = b.dot(v);
            v.axpy(-c, b, 1.0);
        }
    }
}

fn random_unit(len: usize, basis: &[DVector<f64>], rng: &mut impl rand::Rng) -> DVector<f64> {
    loop {
        let mut v = DVector::from_fn(len, |_, _| StandardNormal.sample(rng));
        reorthogonalize(&mut v, basis);
        let nv = v.norm();
        if nv > 1e-8 {
            return v / nv;
        }
    }
}
