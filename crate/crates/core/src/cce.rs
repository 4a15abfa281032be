//! Fitting the coupled covariances eigenproblem.
//!
//! The solution is parameterized by the top-`r` singular triplets of the scaled
//! Gram matrix `G = B_φ Λ B_ψᵀ + …`. The projection directions in feature space
//! are never formed; they act through the training data and the kernel.

use log::warn;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::compat::{projection_for, CompatMatrix, CompatSide, CompatStrategy};
use crate::data::DataMatrix;
use crate::error::{KsvdError, Result};
use crate::kernels::{center, GramMatrix, KernelSpec, LazyKernelOperator};
use crate::linalg::normalize_signs;
use crate::solvers::{solve, SolveStatus, SolverChoice};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub rank: usize,
    pub center: bool,
    pub solver: SolverChoice,
}

impl FitOptions {
    pub fn new(rank: usize) -> Self {
        Self { rank, center: false, solver: SolverChoice::Dense }
    }

    pub fn centered(mut self, center: bool) -> Self {
        self.center = center;
        self
    }

    pub fn with_solver(mut self, solver: SolverChoice) -> Self {
        self.solver = solver;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingSide {
    Left,
    Right,
    Concatenated,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Embeddings {
    pub side: EmbeddingSide,
    pub values: DMatrix<f64>,
}

/// A fitted model: `B_φ` (n×r), `B_ψ` (m×r) and `Λ`.
///
/// With an exact solver (dense or converged Lanczos) the factors are
/// orthonormal and satisfy `G B_ψ = B_φ Λ`, `Gᵀ B_φ = B_ψ Λ`. Randomized and
/// Nyström solvers give approximations of the same quantities.
#[derive(Clone, Debug)]
pub struct KsvdModel {
    pub b_phi: DMatrix<f64>,
    pub b_psi: DMatrix<f64>,
    pub lambdas: DVector<f64>,
    pub kernel: KernelSpec,
    pub compat: Option<CompatMatrix>,
    pub status: SolveStatus,
    pub requested_rank: usize,
    gram: GramMatrix,
    operator: LazyKernelOperator,
}

/// Fits the model, building a compatibility matrix from `compat` when `X` and
/// `Z` have different dimensions. The larger-dimensional side is projected.
pub fn fit(
    x: &DataMatrix,
    z: &DataMatrix,
    kernel: &KernelSpec,
    compat: Option<&CompatStrategy>,
    opts: &FitOptions,
) -> Result<KsvdModel> {
    let (dx, dz) = (x.ncols(), z.ncols());
    if dx == dz {
        return fit_with_matrix(x, z, kernel, None, opts);
    }
    let strategy = compat.ok_or_else(|| {
        KsvdError::DimensionMismatch(format!(
            "row samples have dimension {dx} and column samples {dz}; a compatibility strategy is required"
        ))
    })?;
    let cm = if dx > dz {
        CompatMatrix { c: projection_for(strategy, &x.to_dmatrix(), dz)?, side: CompatSide::Rows }
    } else {
        CompatMatrix { c: projection_for(strategy, &z.to_dmatrix(), dx)?, side: CompatSide::Columns }
    };
    fit_with_matrix(x, z, kernel, Some(cm), opts)
}

/// Fits the model with an already realized compatibility matrix.
///
/// The Gram matrix is always materialized (it is kept for residual checks), so
/// every solver runs on the same, possibly centered, entries.
pub fn fit_with_matrix(
    x: &DataMatrix,
    z: &DataMatrix,
    kernel: &KernelSpec,
    compat: Option<CompatMatrix>,
    opts: &FitOptions,
) -> Result<KsvdModel> {
    let (xe, ze) = match &compat {
        None => (x.clone(), z.clone()),
        Some(cm) if cm.side == CompatSide::Rows => (cm.apply(x)?, z.clone()),
        Some(cm) => (x.clone(), cm.apply(z)?),
    };
    let (n, m) = (xe.nrows(), ze.nrows());
    if opts.rank == 0 || opts.rank > n.min(m) {
        return Err(KsvdError::InvalidParameter(format!(
            "rank {} must lie in 1..={} for {n} row and {m} column samples",
            opts.rank,
            n.min(m)
        )));
    }
    let operator = LazyKernelOperator::new(*kernel, xe, ze, true)?;
    let mut gram = operator.materialize();
    if opts.center {
        gram = center(&gram)?;
    }
    let res = solve(&gram, opts.rank, &opts.solver)?;
    if res.rank() == 0 {
        return Err(KsvdError::RankDeficient {
            requested: opts.rank,
            achieved: 0,
            hint: "the Gram matrix is numerically zero",
        });
    }
    if res.rank() < opts.rank {
        warn!("Gram matrix has numerical rank {} < requested {}", res.rank(), opts.rank);
    }
    let (mut b_phi, mut b_psi) = (res.u, res.v);
    normalize_signs(&mut b_phi, &mut b_psi);
    Ok(KsvdModel {
        b_phi,
        b_psi,
        lambdas: res.s,
        kernel: *kernel,
        compat,
        status: res.status,
        requested_rank: opts.rank,
        gram,
        operator,
    })
}

impl KsvdModel {
    pub fn rank(&self) -> usize {
        self.lambdas.len()
    }

    /// The (scaled, possibly centered) Gram matrix the model was fitted on.
    pub fn gram(&self) -> &GramMatrix {
        &self.gram
    }

    /// Row samples after the compatibility map.
    pub fn x_train(&self) -> &DataMatrix {
        self.operator.x()
    }

    /// Column samples after the compatibility map.
    pub fn z_train(&self) -> &DataMatrix {
        self.operator.z()
    }

    pub fn is_centered(&self) -> bool {
        self.gram.is_centered()
    }

    /// `(‖GᵀG B_ψ − GᵀB_φΛ‖_F, ‖GGᵀB_φ − GB_ψΛ‖_F)`.
    pub fn residuals(&self) -> (f64, f64) {
        let g = self.gram.values();
        let lam = DMatrix::from_diagonal(&self.lambdas);
        let g_bpsi = g * &self.b_psi;
        let gt_bphi = g.tr_mul(&self.b_phi);
        let r1 = (g.tr_mul(&g_bpsi) - g.tr_mul(&(&self.b_phi * &lam))).norm();
        let r2 = (g * &gt_bphi - g * (&self.b_psi * &lam)).norm();
        (r1, r2)
    }

    /// `B_φ Λ B_ψᵀ`.
    pub fn reconstruction(&self) -> DMatrix<f64> {
        &self.b_phi * DMatrix::from_diagonal(&self.lambdas) * self.b_psi.transpose()
    }

    fn unscaled_stats(&self) -> Option<crate::kernels::CenteringStats> {
        self.gram.centering().map(|s| s.rescaled(1.0 / self.gram.scale()))
    }

    /// Scores `(1/√m)·B_ψᵀ·k` of a new row sample, `k_j = κ(x_new, z_j)`.
    pub fn project_x(&self, x_new: &[f64]) -> Result<DVector<f64>> {
        let x = match &self.compat {
            Some(cm) if cm.side == CompatSide::Rows => cm.apply_vector(x_new)?,
            _ => x_new.to_vec(),
        };
        let mut k = self.operator.row_vector(&x)?;
        if let Some(stats) = self.unscaled_stats() {
            stats.center_row(&mut k);
        }
        let m = self.operator.ncols() as f64;
        Ok(self.b_psi.tr_mul(&DVector::from_vec(k)) / m.sqrt())
    }

    /// Scores `(1/√n)·B_φᵀ·k` of a new column sample, `k_i = κ(x_i, z_new)`.
    pub fn project_z(&self, z_new: &[f64]) -> Result<DVector<f64>> {
        let z = match &self.compat {
            Some(cm) if cm.side == CompatSide::Columns => cm.apply_vector(z_new)?,
            _ => z_new.to_vec(),
        };
        let mut k = self.operator.column_vector(&z)?;
        if let Some(stats) = self.unscaled_stats() {
            stats.center_column(&mut k);
        }
        let n = self.operator.nrows() as f64;
        Ok(self.b_phi.tr_mul(&DVector::from_vec(k)) / n.sqrt())
    }

    /// Projects a kernel row against the training column samples directly.
    pub fn project_kernel_row(&self, k: &DVector<f64>) -> Result<DVector<f64>> {
        if k.len() != self.b_psi.nrows() {
            return Err(KsvdError::DimensionMismatch(format!(
                "kernel vector has length {}, expected {}",
                k.len(),
                self.b_psi.nrows()
            )));
        }
        Ok(self.b_psi.tr_mul(k) / (self.b_psi.nrows() as f64).sqrt())
    }

    pub fn embeddings(&self, side: EmbeddingSide) -> Result<Embeddings> {
        let values = match side {
            EmbeddingSide::Left => self.b_phi.clone(),
            EmbeddingSide::Right => self.b_psi.clone(),
            EmbeddingSide::Concatenated => {
                let (n, m, r) = (self.b_phi.nrows(), self.b_psi.nrows(), self.rank());
                if n != m {
                    return Err(KsvdError::DimensionMismatch(format!(
                        "concatenated embeddings need equal sample counts, got {n} and {m}"
                    )));
                }
                DMatrix::from_fn(n, 2 * r, |i, j| if j < r { self.b_phi[(i, j)] } else { self.b_psi[(i, j - r)] })
            }
        };
        Ok(Embeddings { side, values })
    }
}
