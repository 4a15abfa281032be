//! Compatibility matrices for kernels between the rows and columns of a
//! rectangular data matrix.
//!
//! For `A` of shape N×M the row samples live in ℝᴹ and the column samples in
//! ℝᴺ. A compatibility matrix `C` maps the higher-dimensional side down: for
//! `M > N` it is M×N and `A·C` gives row samples in ℝᴺ; for `N > M` it is N×M
//! and `Aᵀ·C` gives column samples in ℝᴹ.

use log::debug;
use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::downstream::head::{squared_loss, LinearHead, Targets};
use crate::error::{KsvdError, Result};
use crate::kernels::{gram, KernelSpec};
use crate::linalg::{dense_svd, gaussian_matrix, orthonormal_basis, pseudo_inverse, rng};

/// How `C` is realized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CompatStrategy {
    /// a0: `C = ((AAᵀ)†A)ᵀ`.
    PseudoInverse,
    /// a1: top right singular vectors, the minimizer of `‖A − ACCᵀ‖_F`.
    PcaProjection,
    /// a2: i.i.d. standard normal entries.
    RandomProjection { seed: u64 },
    /// a3: learned jointly with a linear head, see [`learn_compat`].
    Learnable(LearnableConfig),
}

/// Which sample set `C` is applied to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompatSide {
    /// Row samples: `x ↦ xᵀC`.
    Rows,
    /// Column samples: `z ↦ zᵀC`.
    Columns,
}

/// A realized compatibility matrix and the side it acts on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompatMatrix {
    pub c: DMatrix<f64>,
    pub side: CompatSide,
}

impl CompatMatrix {
    /// Applies `C` to a sample set (one sample per row).
    pub fn apply(&self, samples: &DataMatrix) -> Result<DataMatrix> {
        samples.matmul(&self.c)
    }

    pub fn apply_vector(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.c.nrows() {
            return Err(KsvdError::DimensionMismatch(format!(
                "sample has dimension {}, compatibility matrix expects {}",
                x.len(),
                self.c.nrows()
            )));
        }
        Ok((0..self.c.ncols()).map(|j| x.iter().zip(self.c.column(j).iter()).map(|(a, b)| a * b).sum()).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GradientMethod {
    /// Central differences with step `h`, any kernel.
    FiniteDifference {
        h: f64,
    },
    AnalyticRbf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnableConfig {
    /// Number of right singular vectors used as features.
    pub rank_r: usize,
    /// Alternations between the singular-vector refresh and the gradient phase.
    pub outer_iterations: usize,
    /// Gradient steps per outer iteration.
    pub steps: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub gradient: GradientMethod,
    /// Defaults to projecting whichever side has the larger dimension.
    pub side: Option<CompatSide>,
}

impl Default for LearnableConfig {
    fn default() -> Self {
        Self {
            rank_r: 4,
            outer_iterations: 10,
            steps: 20,
            learning_rate: 0.05,
            seed: 0,
            gradient: GradientMethod::FiniteDifference { h: 1e-5 },
            side: None,
        }
    }
}

/// `C` (d×k) projecting the samples `p` (n×d) to `k` dimensions.
pub fn projection_for(strategy: &CompatStrategy, p: &DMatrix<f64>, k: usize) -> Result<DMatrix<f64>> {
    let (n, d) = p.shape();
    if k == 0 || k > d {
        return Err(KsvdError::InvalidParameter(format!("cannot project dimension {d} to {k}")));
    }
    match strategy {
        CompatStrategy::PseudoInverse => {
            if n != k {
                return Err(KsvdError::InvalidParameter(format!(
                    "pseudo-inverse compatibility needs {k} samples, got {n}; use a1 or a2"
                )));
            }
            let ppt = p * p.transpose();
            let (_, s, _) = dense_svd(&ppt)?;
            let cutoff = s[0] * n as f64 * f64::EPSILON;
            let rank = s.iter().filter(|&&x| x > cutoff).count();
            if rank < n {
                return Err(KsvdError::RankDeficient {
                    requested: n,
                    achieved: rank,
                    hint: "AAᵀ is numerically singular; the PCA projection (a1) is a stable fallback",
                });
            }
            Ok((pseudo_inverse(&ppt)? * p).transpose())
        }
        CompatStrategy::PcaProjection => {
            let (_, _, v) = dense_svd(p)?;
            let have = v.ncols().min(k);
            let lead = v.columns(0, have).into_owned();
            if have == k {
                return Ok(lead);
            }
            // Fewer samples than target dimensions: complete the basis.
            let filler = gaussian_matrix(d, k - have, 0x0a1);
            let q =
                orthonormal_basis(DMatrix::from_fn(
                    d,
                    k,
                    |i, j| {
                        if j < have {
                            lead[(i, j)]
                        } else {
                            filler[(i, j - have)]
                        }
                    },
                ));
            Ok(DMatrix::from_fn(d, k, |i, j| if j < have { lead[(i, j)] } else { q[(i, j)] }))
        }
        CompatStrategy::RandomProjection { seed } => Ok(gaussian_matrix(d, k, *seed)),
        CompatStrategy::Learnable(_) => {
            Err(KsvdError::InvalidParameter("a learnable compatibility matrix needs targets; use learn_compat".into()))
        }
    }
}

/// Realizes `C` for the rectangular data matrix `a`. Square inputs get the
/// identity.
pub fn realize_compat(strategy: &CompatStrategy, a: &DataMatrix) -> Result<DMatrix<f64>> {
    let (n, m) = (a.nrows(), a.ncols());
    a.ensure_finite("data matrix")?;
    if n == m {
        return Ok(DMatrix::identity(n, n));
    }
    let am = a.to_dmatrix();
    if m > n {
        projection_for(strategy, &am, n)
    } else {
        projection_for(strategy, &am.transpose(), m)
    }
}

fn default_side(a: &DataMatrix) -> CompatSide {
    if a.ncols() >= a.nrows() {
        CompatSide::Rows
    } else {
        CompatSide::Columns
    }
}

/// Row and column sample sets induced by `C` on `A`.
fn sample_sets(a: &DMatrix<f64>, c: &DMatrix<f64>, side: CompatSide) -> (DMatrix<f64>, DMatrix<f64>) {
    match side {
        CompatSide::Rows => (a * c, a.transpose()),
        CompatSide::Columns => (a.clone(), a.tr_mul(c)),
    }
}

fn kernel_matrix(spec: &KernelSpec, x: &DMatrix<f64>, z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(gram(spec, &DataMatrix::from_dmatrix(x), &DataMatrix::from_dmatrix(z), false)?.into_values())
}

fn top_right_vectors(g: &DMatrix<f64>, r: usize) -> Result<DMatrix<f64>> {
    let (_, _, v) = dense_svd(g)?;
    Ok(v.columns(0, r).into_owned())
}

/// Training loss of the learnable scheme: mean squared error of
/// `head(G(C)·V)` against `y`, with the unscaled, uncentered Gram matrix.
pub fn learnable_loss(
    a: &DMatrix<f64>,
    y: &DMatrix<f64>,
    kernel: &KernelSpec,
    side: CompatSide,
    c: &DMatrix<f64>,
    v: &DMatrix<f64>,
    head: &LinearHead,
) -> Result<f64> {
    let (x, z) = sample_sets(a, c, side);
    let g = kernel_matrix(kernel, &x, &z)?;
    Ok(squared_loss(&head.outputs(&(g * v)), y))
}

/// Gradients of [`learnable_loss`] with respect to `C`, the head weights and the
/// head bias, holding `V` fixed.
pub fn learnable_gradient(
    a: &DMatrix<f64>,
    y: &DMatrix<f64>,
    kernel: &KernelSpec,
    side: CompatSide,
    c: &DMatrix<f64>,
    v: &DMatrix<f64>,
    head: &LinearHead,
    method: GradientMethod,
) -> Result<(DMatrix<f64>, DMatrix<f64>, DVector<f64>)> {
    let (x, z) = sample_sets(a, c, side);
    let g = kernel_matrix(kernel, &x, &z)?;
    let f = &g * v;
    let o = head.outputs(&f);
    let d_o = (&o - y) * (2.0 / (o.nrows() * o.ncols()) as f64);
    let d_w = f.tr_mul(&d_o);
    let d_b = d_o.row_sum().transpose();

    let d_c = match method {
        GradientMethod::AnalyticRbf => {
            let gamma = match kernel {
                KernelSpec::Rbf { gamma } => *gamma,
                _ => {
                    return Err(KsvdError::InvalidParameter(
                        "analytic gradient is only available for the RBF kernel".into(),
                    ))
                }
            };
            // dL/dG = dL/dO·Wᵀ·Vᵀ, then through κ = exp(−‖x − z‖²/γ²).
            let d_g = &d_o * head.weights.transpose() * v.transpose();
            let w = d_g.component_mul(&g) * (2.0 / (gamma * gamma));
            match side {
                CompatSide::Columns => {
                    // ∂κ/∂z_j = κ·2(x_i − z_j)/γ²
                    let d_z = w.tr_mul(&x) - DMatrix::from_diagonal(&w.row_sum().transpose()) * &z;
                    a * d_z
                }
                CompatSide::Rows => {
                    // ∂κ/∂x_i = −κ·2(x_i − z_j)/γ²
                    let d_x = &w * &z - DMatrix::from_diagonal(&w.column_sum()) * &x;
                    a.tr_mul(&d_x)
                }
            }
        }
        GradientMethod::FiniteDifference { h } => {
            if !(h > 0.0) {
                return Err(KsvdError::InvalidParameter(format!("finite-difference step must be positive, got {h}")));
            }
            let mut d_c = DMatrix::zeros(c.nrows(), c.ncols());
            let mut probe = c.clone();
            for j in 0..c.ncols() {
                for i in 0..c.nrows() {
                    let orig = probe[(i, j)];
                    probe[(i, j)] = orig + h;
                    let up = learnable_loss(a, y, kernel, side, &probe, v, head)?;
                    probe[(i, j)] = orig - h;
                    let down = learnable_loss(a, y, kernel, side, &probe, v, head)?;
                    probe[(i, j)] = orig;
                    d_c[(i, j)] = (up - down) / (2.0 * h);
                }
            }
            d_c
        }
    };
    Ok((d_c, d_w, d_b))
}

/// Result of the learnable scheme.
#[derive(Clone, Debug)]
pub struct LearnedCompat {
    pub compat: CompatMatrix,
    pub head: LinearHead,
    /// Right singular vectors used as the final feature basis.
    pub v: DMatrix<f64>,
    /// Training loss at the start and after every outer iteration.
    pub loss_history: Vec<f64>,
}

/// a3: alternates a refresh of the top-`r` right singular vectors `V` of
/// `G(C)` with gradient steps on `C` and a linear head over the features
/// `G(C)·V`, `V` held fixed.
///
/// Each gradient step backtracks (halving the learning rate for that step) until
/// the loss does not increase, and a refreshed `V` is kept only if it does not
/// raise the loss by more than `1e-6`, so the recorded loss is non-increasing.
pub fn learn_compat(
    a: &DataMatrix,
    targets: &Targets,
    kernel: &KernelSpec,
    cfg: &LearnableConfig,
) -> Result<LearnedCompat> {
    let (n, m) = (a.nrows(), a.ncols());
    kernel.validate()?;
    a.ensure_finite("data matrix")?;
    if targets.len() != n {
        return Err(KsvdError::DimensionMismatch(format!("{} targets for {n} samples", targets.len())));
    }
    if cfg.rank_r == 0 || cfg.rank_r > n.min(m) {
        return Err(KsvdError::InvalidParameter(format!("rank_r {} must lie in 1..={}", cfg.rank_r, n.min(m))));
    }
    if !(cfg.learning_rate > 0.0) {
        return Err(KsvdError::InvalidParameter("learning rate must be positive".into()));
    }
    let side = cfg.side.unwrap_or_else(|| default_side(a));
    let am = a.to_dmatrix();
    let mut c = match side {
        CompatSide::Rows if n == m => DMatrix::identity(m, n),
        CompatSide::Columns if n == m => DMatrix::identity(n, m),
        CompatSide::Rows => projection_for(&CompatStrategy::PcaProjection, &am, n)?,
        CompatSide::Columns => projection_for(&CompatStrategy::PcaProjection, &am.transpose(), m)?,
    };
    let y = targets.matrix();
    let mut head = LinearHead::zeros(cfg.rank_r, y.ncols(), targets.task());
    let mut init = rng(cfg.seed);
    head.weights = head.weights.map(|_| 0.01 * Distribution::<f64>::sample(&StandardNormal, &mut init));

    let (x0, z0) = sample_sets(&am, &c, side);
    let mut v = top_right_vectors(&kernel_matrix(kernel, &x0, &z0)?, cfg.rank_r)?;
    let mut loss = learnable_loss(&am, &y, kernel, side, &c, &v, &head)?;
    check_loss(loss)?;
    let mut history = vec![loss];
    if cfg.steps == 0 {
        return Ok(LearnedCompat { compat: CompatMatrix { c, side }, head, v, loss_history: history });
    }

    for outer in 0..cfg.outer_iterations {
        if outer > 0 {
            let (x, z) = sample_sets(&am, &c, side);
            let mut fresh = top_right_vectors(&kernel_matrix(kernel, &x, &z)?, cfg.rank_r)?;
            for s in 0..cfg.rank_r {
                if fresh.column(s).dot(&v.column(s)) < 0.0 {
                    fresh.column_mut(s).neg_mut();
                }
            }
            let fresh_loss = learnable_loss(&am, &y, kernel, side, &c, &fresh, &head)?;
            if fresh_loss <= loss + 1e-6 {
                v = fresh;
                loss = fresh_loss;
            } else {
                debug!("outer {outer}: kept previous V (refresh loss {fresh_loss:.3e} > {loss:.3e})");
            }
        }
        for _ in 0..cfg.steps {
            let (gc, gw, gb) = learnable_gradient(&am, &y, kernel, side, &c, &v, &head, cfg.gradient)?;
            let mut lr = cfg.learning_rate;
            let mut accepted = false;
            for _ in 0..40 {
                let c_try = &c - &gc * lr;
                let mut h_try = head.clone();
                h_try.weights -= &gw * lr;
                h_try.bias -= &gb * lr;
                let l_try = learnable_loss(&am, &y, kernel, side, &c_try, &v, &h_try);
                match l_try {
                    Ok(l) if l.is_finite() && l <= loss => {
                        c = c_try;
                        head = h_try;
                        loss = l;
                        accepted = true;
                        break;
                    }
                    _ => lr *= 0.5,
                }
            }
            if !accepted {
                break;
            }
        }
        check_loss(loss)?;
        history.push(loss);
    }

    Ok(LearnedCompat { compat: CompatMatrix { c, side }, head, v, loss_history: history })
}

fn check_loss(loss: f64) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(KsvdError::Numerical("training loss is not finite; the learning rate is too large".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dm(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> DataMatrix {
        DataMatrix::from_fn(rows, cols, f)
    }

    #[test]
    fn square_input_gives_identity() {
        let a = dm(3, 3, |i, j| if i == j { 1.0 } else { 0.0 });
        for s in
            [CompatStrategy::PseudoInverse, CompatStrategy::PcaProjection, CompatStrategy::RandomProjection { seed: 4 }]
        {
            assert_eq!(realize_compat(&s, &a).unwrap(), DMatrix::identity(3, 3));
        }
    }

    #[test]
    fn pca_on_axis_aligned_rows() {
        let a = DataMatrix::from_rows(&[vec![2.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        let c = realize_compat(&CompatStrategy::PcaProjection, &a).unwrap();
        assert_eq!(c.shape(), (3, 2));
        assert!((c[(0, 0)].abs() - 1.0).abs() < 1e-14);
        assert!((c[(1, 1)].abs() - 1.0).abs() < 1e-14);
        assert!(c[(2, 0)].abs() < 1e-14 && c[(2, 1)].abs() < 1e-14);
    }

    #[test]
    fn pseudo_inverse_of_orthonormal_rows_is_transpose() {
        let q = orthonormal_basis(gaussian_matrix(5, 2, 8)).transpose();
        let a = DataMatrix::from_dmatrix(&q);
        let c = realize_compat(&CompatStrategy::PseudoInverse, &a).unwrap();
        assert!((c - q.transpose()).abs().max() < 1e-12);
    }

    #[test]
    fn pseudo_inverse_rejects_singular_rows() {
        let a = DataMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]]).unwrap();
        assert!(matches!(realize_compat(&CompatStrategy::PseudoInverse, &a), Err(KsvdError::RankDeficient { .. })));
    }

    #[test]
    fn tall_input_is_mirrored() {
        let a = dm(6, 2, |i, j| (i as f64 + 1.0) * (j as f64 + 0.5));
        let c = realize_compat(&CompatStrategy::RandomProjection { seed: 2 }, &a).unwrap();
        assert_eq!(c.shape(), (6, 2));
        assert_eq!(c, realize_compat(&CompatStrategy::RandomProjection { seed: 2 }, &a).unwrap());
    }

    #[test]
    fn zero_steps_returns_initial_pca() {
        let a = dm(4, 7, |i, j| ((i * 7 + j) as f64 * 0.3).sin());
        let cfg = LearnableConfig { steps: 0, ..LearnableConfig::default() };
        let out = learn_compat(&a, &Targets::Values(vec![0.0, 1.0, 2.0, 3.0]), &KernelSpec::Rbf { gamma: 2.0 }, &cfg)
            .unwrap();
        let c1 = realize_compat(&CompatStrategy::PcaProjection, &a).unwrap();
        assert_eq!(out.compat.c, c1);
        assert_eq!(out.compat.side, CompatSide::Rows);
    }

    #[test]
    fn analytic_gradient_needs_rbf() {
        let a = DMatrix::from_fn(3, 4, |i, j| (i + j) as f64);
        let c = DMatrix::from_fn(4, 3, |i, j| (i * j) as f64 * 0.1);
        let y = DMatrix::zeros(3, 1);
        let head = LinearHead::zeros(2, 1, crate::downstream::head::Task::Regression);
        let v = DMatrix::identity(4, 2);
        assert!(learnable_gradient(
            &a,
            &y,
            &KernelSpec::Linear,
            CompatSide::Rows,
            &c,
            &v,
            &head,
            GradientMethod::AnalyticRbf
        )
        .is_err());
    }
}
