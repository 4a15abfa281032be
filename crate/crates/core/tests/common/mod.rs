//! Reference implementations used as test oracles. Nothing here calls into the
//! library's numerics: the SVD is a one-sided Jacobi sweep and kernels are
//! written out from their definitions.
#![allow(dead_code)]

use ksvd::{DataMatrix, KernelSpec};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| Distribution::<f64>::sample(&StandardNormal, rng))
}

pub fn gaussian_data(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DataMatrix {
    DataMatrix::from_dmatrix(&gaussian(rows, cols, rng))
}

pub fn uniform_in(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> usize {
    rng.random_range(lo..=hi)
}

/// Thin SVD by one-sided Jacobi rotations: `a = u·diag(s)·vᵀ`, `s` descending,
/// `k = min(rows, cols)` triplets.
pub fn jacobi_svd(a: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    if a.nrows() < a.ncols() {
        let (u, s, v) = jacobi_svd(&a.transpose());
        return (v, s, u);
    }
    let (n, m) = a.shape();
    let mut w = a.clone();
    let mut v = DMatrix::<f64>::identity(m, m);
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..m {
            for q in p + 1..m {
                let alpha: f64 = w.column(p).norm_squared();
                let beta: f64 = w.column(q).norm_squared();
                let gamma: f64 = w.column(p).dot(&w.column(q));
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..n {
                    let (wp, wq) = (w[(i, p)], w[(i, q)]);
                    w[(i, p)] = c * wp - s * wq;
                    w[(i, q)] = s * wp + c * wq;
                }
                for i in 0..m {
                    let (vp, vq) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..m).collect();
    let norms: Vec<f64> = (0..m).map(|j| w.column(j).norm()).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let mut u = DMatrix::zeros(n, m);
    let mut vs = DMatrix::zeros(m, m);
    let mut s = DVector::zeros(m);
    for (k, &j) in order.iter().enumerate() {
        s[k] = norms[j];
        vs.set_column(k, &v.column(j));
        if norms[j] > 0.0 {
            u.set_column(k, &(w.column(j) / norms[j]));
        }
    }
    (u, s, vs)
}

pub fn pinv(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (u, s, v) = jacobi_svd(a);
    let cutoff = s[0] * a.nrows().max(a.ncols()) as f64 * f64::EPSILON;
    let inv = DVector::from_iterator(s.len(), s.iter().map(|&x| if x > cutoff { 1.0 / x } else { 0.0 }));
    v * DMatrix::from_diagonal(&inv) * u.transpose()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Unscaled kernel matrix straight from the definitions.
pub fn kernel_matrix(kernel: &KernelSpec, x: &DataMatrix, z: &DataMatrix) -> DMatrix<f64> {
    let (n, m) = (x.nrows(), z.nrows());
    match *kernel {
        KernelSpec::Linear => DMatrix::from_fn(n, m, |i, j| x.row(i).iter().zip(z.row(j)).map(|(a, b)| a * b).sum()),
        KernelSpec::Polynomial { degree, offset } => DMatrix::from_fn(n, m, |i, j| {
            let d: f64 = x.row(i).iter().zip(z.row(j)).map(|(a, b)| a * b).sum();
            (d + offset).powi(degree as i32)
        }),
        KernelSpec::Rbf { gamma } => {
            DMatrix::from_fn(n, m, |i, j| (-sq_dist(x.row(i), z.row(j)) / (gamma * gamma)).exp())
        }
        KernelSpec::Sne { gamma } => {
            let e = DMatrix::from_fn(n, m, |i, j| (-sq_dist(x.row(i), z.row(j)) / (gamma * gamma)).exp());
            DMatrix::from_fn(n, m, |i, j| e[(i, j)] / e.row(i).sum())
        }
    }
}

/// Scaled Gram matrix `κ(x_i, z_j)/√(nm)`.
pub fn gram_matrix(kernel: &KernelSpec, x: &DataMatrix, z: &DataMatrix) -> DMatrix<f64> {
    let scale = 1.0 / ((x.nrows() * z.nrows()) as f64).sqrt();
    kernel_matrix(kernel, x, z) * scale
}

pub fn center(g: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, m) = g.shape();
    let hn = DMatrix::<f64>::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64);
    let hm = DMatrix::<f64>::identity(m, m) - DMatrix::from_element(m, m, 1.0 / m as f64);
    hn * g * hm
}

/// `η = (1/r)Σ λ_i(1 − |cos(u_i, ũ_i)|) + (1/r)Σ λ_i(1 − |cos(v_i, ṽ_i)|)`.
pub fn eta(
    u: &DMatrix<f64>,
    s: &DVector<f64>,
    v: &DMatrix<f64>,
    r: usize,
    ut: &DMatrix<f64>,
    vt: &DMatrix<f64>,
) -> f64 {
    let cos = |a: &DMatrix<f64>, b: &DMatrix<f64>, i: usize| {
        (a.column(i).dot(&b.column(i)) / (a.column(i).norm() * b.column(i).norm())).abs()
    };
    (0..r).map(|i| s[i] * ((1.0 - cos(u, ut, i)) + (1.0 - cos(v, vt, i)))).sum::<f64>() / r as f64
}

/// Largest entry of `|UUᵀ − ŨŨᵀ|`: subspace distance, insensitive to rotations
/// within tied singular values.
pub fn projector_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a * a.transpose() - b * b.transpose()).abs().max()
}

/// `|cos|` between column `i` of `a` and column `i` of `b`.
pub fn abs_cos(a: &DMatrix<f64>, b: &DMatrix<f64>, i: usize) -> f64 {
    (a.column(i).dot(&b.column(i)) / (a.column(i).norm() * b.column(i).norm())).abs()
}

/// Matrix with singular values `decay^i` and random orthonormal factors.
pub fn decaying(rows: usize, cols: usize, decay: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let k = rows.min(cols);
    let qu = gaussian(rows, k, rng).qr().q();
    let qv = gaussian(cols, k, rng).qr().q();
    let s = DVector::from_fn(k, |i, _| decay.powi(i as i32));
    qu * DMatrix::from_diagonal(&s) * qv.transpose()
}
