//! Asymmetric Nyström approximation of singular vectors.

use nalgebra::{DMatrix, DVector};

use super::{MatrixOperator, SolveStatus, SvdResult};
use crate::error::{KsvdError, Result};
use crate::linalg::{dense_svd, normalize_columns, rng, sample_indices};

/// Approximate singular triplets extended from an `n×m` submatrix.
#[derive(Clone, Debug)]
pub struct NystromResult {
    pub u_tilde: DMatrix<f64>,
    pub v_tilde: DMatrix<f64>,
    pub lambdas_tilde: DVector<f64>,
    pub n_sub: usize,
    pub m_sub: usize,
    pub row_indices: Vec<usize>,
    pub col_indices: Vec<usize>,
    pub seed: Option<u64>,
}

impl NystromResult {
    pub fn into_svd(self) -> SvdResult {
        let r = self.lambdas_tilde.len();
        SvdResult {
            u: self.u_tilde,
            s: self.lambdas_tilde,
            v: self.v_tilde,
            status: SolveStatus { converged: true, achieved_rank: r, iterations: 0 },
        }
    }
}

/// Samples `n_sub` rows and `m_sub` columns uniformly without replacement (rows
/// first, from one seeded stream) and runs [`asym_nystrom_with_indices`].
pub fn asym_nystrom<O: MatrixOperator + ?Sized>(
    op: &O,
    n_sub: usize,
    m_sub: usize,
    r: usize,
    seed: u64,
) -> Result<NystromResult> {
    let (n, m) = (op.nrows(), op.ncols());
    if n_sub > n || m_sub > m {
        return Err(KsvdError::InvalidParameter(format!(
            "subsample sizes {n_sub}x{m_sub} exceed matrix shape {n}x{m}"
        )));
    }
    let mut rng = rng(seed);
    let rows = sample_indices(n, n_sub, &mut rng);
    let cols = sample_indices(m, m_sub, &mut rng);
    let mut res = asym_nystrom_with_indices(op, &rows, &cols, r)?;
    res.seed = Some(seed);
    Ok(res)
}

/// Asymmetric Nyström extension from explicit row and column index sets.
///
/// With `G[I, J] = X Σ Yᵀ`, the extensions are `ũ_s ∝ G[:, J]·y_s/σ_s` and
/// `ṽ_s ∝ G[I, :]ᵀ·x_s/σ_s` (unit-normalized), and `λ̃_s = √(NM/(nm))·σ_s`.
/// Evaluates `N·m + n·(M − m)` entries of `G`: the intersection block is
/// reused from the sampled columns.
pub fn asym_nystrom_with_indices<O: MatrixOperator + ?Sized>(
    op: &O,
    rows: &[usize],
    cols: &[usize],
    r: usize,
) -> Result<NystromResult> {
    let (big_n, big_m) = (op.nrows(), op.ncols());
    let (n, m) = (rows.len(), cols.len());
    if r == 0 || n < r || m < r {
        return Err(KsvdError::InvalidParameter(format!(
            "need at least r = {r} sampled rows and columns, got {n} and {m}"
        )));
    }

    let all_rows: Vec<usize> = (0..big_n).collect();
    let g_cols = op.block(&all_rows, cols);

    let mut in_cols = vec![usize::MAX; big_m];
    for (b, &j) in cols.iter().enumerate() {
        in_cols[j] = b;
    }
    let rest: Vec<usize> = (0..big_m).filter(|&j| in_cols[j] == usize::MAX).collect();
    let g_rest = op.block(rows, &rest);
    let mut g_rows = DMatrix::zeros(n, big_m);
    for (a, &i) in rows.iter().enumerate() {
        for (b, &j) in cols.iter().enumerate() {
            g_rows[(a, j)] = g_cols[(i, b)];
        }
        for (b, &j) in rest.iter().enumerate() {
            g_rows[(a, j)] = g_rest[(a, b)];
        }
    }

    let w = DMatrix::from_fn(n, m, |a, b| g_cols[(rows[a], b)]);
    let (x, s, y) = dense_svd(&w)?;
    let cutoff = s[0] * n.max(m) as f64 * f64::EPSILON;
    if !(s[r - 1] > cutoff) {
        return Err(KsvdError::RankDeficient {
            requested: r,
            achieved: s.iter().take_while(|&&v| v > cutoff).count(),
            hint: "sampled submatrix has too few positive singular values; increase n_sub or m_sub",
        });
    }

    let inv = DMatrix::from_diagonal(&DVector::from_iterator(r, s.iter().take(r).map(|v| 1.0 / v)));
    let mut u = &g_cols * y.columns(0, r) * &inv;
    let mut v = g_rows.tr_mul(&x.columns(0, r)) * &inv;
    normalize_columns(&mut u);
    normalize_columns(&mut v);
    let factor = ((big_n * big_m) as f64 / (n * m) as f64).sqrt();
    let lambdas = DVector::from_iterator(r, s.iter().take(r).map(|v| v * factor));

    Ok(NystromResult {
        u_tilde: u,
        v_tilde: v,
        lambdas_tilde: lambdas,
        n_sub: n,
        m_sub: m,
        row_indices: rows.to_vec(),
        col_indices: cols.to_vec(),
        seed: None,
    })
}
