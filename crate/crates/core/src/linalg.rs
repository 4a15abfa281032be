//! Small dense helpers shared by the solvers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{KsvdError, Result};

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Thin SVD `a = U diag(s) Vᵀ` with singular values in nonincreasing order.
///
/// Computed with faer: nalgebra's bidiagonal QR iteration returns wrong factors
/// on a noticeable fraction of rank-deficient inputs.
pub fn dense_svd(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>, DMatrix<f64>)> {
    let (n, m) = a.shape();
    if n == 0 || m == 0 {
        return Err(KsvdError::DimensionMismatch("SVD of an empty matrix".into()));
    }
    let svd = faer::MatRef::from_column_major_slice(a.as_slice(), n, m)
        .thin_svd()
        .map_err(|e| KsvdError::Numerical(format!("dense SVD did not converge: {e:?}")))?;
    let k = n.min(m);
    let (fu, fs, fv) = (svd.U(), svd.S(), svd.V());
    let u = DMatrix::from_fn(n, k, |i, j| fu[(i, j)]);
    let v = DMatrix::from_fn(m, k, |i, j| fv[(i, j)]);
    let s = DVector::from_fn(k, |i, _| fs[i]);
    Ok((u, s, v))
}

/// Eigenpairs of a symmetric matrix sorted by nonincreasing eigenvalue.
pub fn sorted_symmetric_eigen(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = eig.eigenvectors.select_columns(&order);
    (values, vectors)
}

/// Flips each column pair so the largest-magnitude entry of the left vector is
/// positive. Ties resolve to the first such entry.
pub fn normalize_signs(u: &mut DMatrix<f64>, v: &mut DMatrix<f64>) {
    for s in 0..u.ncols().min(v.ncols()) {
        let mut best = 0usize;
        let mut best_abs = -1.0;
        for (i, x) in u.column(s).iter().enumerate() {
            if x.abs() > best_abs {
                best_abs = x.abs();
                best = i;
            }
        }
        if u[(best, s)] < 0.0 {
            u.column_mut(s).neg_mut();
            v.column_mut(s).neg_mut();
        }
    }
}

/// Scales every column to unit ℓ2 norm. Zero columns are left untouched.
pub fn normalize_columns(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col /= n;
        }
    }
}

/// `max |QᵀQ − I|`, the orthonormality defect of the columns of `q`.
pub fn orthonormality_error(q: &DMatrix<f64>) -> f64 {
    let gram = q.transpose() * q;
    let k = gram.nrows();
    (gram - DMatrix::<f64>::identity(k, k)).abs().max()
}

pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rng(seed);
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
}

/// Orthonormal basis of the column space of `m` (thin QR).
pub fn orthonormal_basis(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}

/// Uniform sample of `k` distinct indices from `0..n`, sorted ascending.
pub fn sample_indices(n: usize, k: usize, rng: &mut impl rand::Rng) -> Vec<usize> {
    let mut idx = rand::seq::index::sample(rng, n, k).into_vec();
    idx.sort_unstable();
    idx
}

/// Moore–Penrose pseudo-inverse with singular values below
/// `max(rows, cols)·ε·σ₁` treated as zero.
pub fn pseudo_inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (u, s, v) = dense_svd(a)?;
    let cutoff = s[0] * a.nrows().max(a.ncols()) as f64 * f64::EPSILON;
    let inv = DVector::from_iterator(s.len(), s.iter().map(|&x| if x > cutoff { 1.0 / x } else { 0.0 }));
    Ok(v * DMatrix::from_diagonal(&inv) * u.transpose())
}
