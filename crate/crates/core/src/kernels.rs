//! Kernel evaluation and asymmetric Gram matrices.
//!
//! The Gram matrix between row samples `X` (n×d) and column samples `Z` (m×d) is
//! `G[i, j] = s·κ(x_i, z_j)` with `s = 1/√(nm)` when scaled. Dense assembly goes
//! through [`LazyKernelOperator`], so a materialized entry and an on-demand entry
//! are produced by the same floating-point operations.

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{KsvdError, Result};

/// Kernel family and hyperparameters.
///
/// Gaussian families use `exp(−‖x − z‖² / γ²)`; `Sne` additionally normalizes
/// each row over the column-sample set, which makes it asymmetric even when
/// `X = Z`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum KernelSpec {
    Linear,
    Rbf { gamma: f64 },
    Polynomial { degree: u32, offset: f64 },
    Sne { gamma: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Rbf { gamma } | KernelSpec::Sne { gamma } if !(gamma > 0.0 && gamma.is_finite()) => {
                Err(KsvdError::InvalidParameter(format!("gamma must be positive, got {gamma}")))
            }
            KernelSpec::Polynomial { degree, offset } if degree == 0 || !offset.is_finite() => {
                Err(KsvdError::InvalidParameter(format!(
                    "polynomial kernel needs degree >= 1 and finite offset, got degree {degree}, offset {offset}"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Whether `κ(a, b) = κ(b, a)` for every pair of points.
    pub fn is_symmetric(&self) -> bool {
        !matches!(self, KernelSpec::Sne { .. })
    }

    pub fn gamma(&self) -> Option<f64> {
        match *self {
            KernelSpec::Rbf { gamma } | KernelSpec::Sne { gamma } => Some(gamma),
            _ => None,
        }
    }

    fn needs_norms(&self) -> bool {
        matches!(self, KernelSpec::Rbf { .. } | KernelSpec::Sne { .. })
    }

    /// Unnormalized pair value. `xn`, `zn` are squared norms (ignored by the
    /// inner-product families).
    #[inline]
    fn raw(&self, x: &[f64], z: &[f64], xn: f64, zn: f64) -> f64 {
        let ip = dot(x, z);
        match *self {
            KernelSpec::Linear => ip,
            KernelSpec::Polynomial { degree, offset } => (ip + offset).powi(degree as i32),
            KernelSpec::Rbf { gamma } | KernelSpec::Sne { gamma } => {
                let d2 = (xn + zn - 2.0 * ip).max(0.0);
                (-d2 / (gamma * gamma)).exp()
            }
        }
    }
}

/// Bandwidth heuristic `γ = k·√(M·var(data))`, where `M` is the number of
/// column samples.
pub fn auto_gamma(data: &DataMatrix, column_samples: usize, k: f64) -> Result<f64> {
    let gamma = k * (column_samples as f64 * data.variance()).sqrt();
    if gamma > 0.0 && gamma.is_finite() {
        Ok(gamma)
    } else {
        Err(KsvdError::InvalidParameter("automatic gamma is zero: training data has no variance".into()))
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn squared_norms(d: &DataMatrix) -> Vec<f64> {
    (0..d.nrows()).map(|i| dot(d.row(i), d.row(i))).collect()
}

/// Centering statistics of a Gram matrix, in the units of its stored values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CenteringStats {
    /// Mean of each column over the rows (length m).
    pub col_means: Vec<f64>,
    /// Mean of each row over the columns (length n).
    pub row_means: Vec<f64>,
    pub grand_mean: f64,
}

impl CenteringStats {
    /// Statistics for the same matrix multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Self {
        Self {
            col_means: self.col_means.iter().map(|v| v * factor).collect(),
            row_means: self.row_means.iter().map(|v| v * factor).collect(),
            grand_mean: self.grand_mean * factor,
        }
    }

    /// Doubly centers a kernel row `k_j = κ(x, z_j)` of a new row sample.
    pub fn center_row(&self, k: &mut [f64]) {
        let mean = k.iter().sum::<f64>() / k.len() as f64;
        for (v, c) in k.iter_mut().zip(&self.col_means) {
            *v = *v - mean - c + self.grand_mean;
        }
    }

    /// Doubly centers a kernel column `k_i = κ(x_i, z)` of a new column sample.
    pub fn center_column(&self, k: &mut [f64]) {
        let mean = k.iter().sum::<f64>() / k.len() as f64;
        for (v, r) in k.iter_mut().zip(&self.row_means) {
            *v = *v - mean - r + self.grand_mean;
        }
    }
}

/// Materialized asymmetric Gram matrix.
#[derive(Clone, Debug)]
pub struct GramMatrix {
    values: DMatrix<f64>,
    scaled: bool,
    scale: f64,
    centering: Option<CenteringStats>,
}

impl GramMatrix {
    /// Wraps an arbitrary matrix as an unscaled, uncentered Gram matrix.
    pub fn from_values(values: DMatrix<f64>) -> Self {
        Self { values, scaled: false, scale: 1.0, centering: None }
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    /// Factor applied to the raw kernel values: `1/√(nm)` when scaled, else 1.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn is_scaled(&self) -> bool {
        self.scaled
    }

    pub fn is_centered(&self) -> bool {
        self.centering.is_some()
    }

    pub fn centering(&self) -> Option<&CenteringStats> {
        self.centering.as_ref()
    }
}

/// Assembles `G[i, j] = s·κ(x_i, z_j)`.
pub fn gram(spec: &KernelSpec, x: &DataMatrix, z: &DataMatrix, scaled: bool) -> Result<GramMatrix> {
    LazyKernelOperator::new(*spec, x.clone(), z.clone(), scaled).map(|op| op.materialize())
}

/// Double centering `(I − 11ᵀ/n) G (I − 11ᵀ/m)`.
///
/// Centering an already centered matrix re-centers its values and accumulates
/// the statistics, so out-of-sample vectors stay consistent.
pub fn center(g: &GramMatrix) -> Result<GramMatrix> {
    let v = &g.values;
    if !v.iter().all(|x| x.is_finite()) {
        return Err(KsvdError::NonFinite("Gram matrix".into()));
    }
    let (n, m) = v.shape();
    let col_means: Vec<f64> = (0..m).map(|j| v.column(j).sum() / n as f64).collect();
    let row_means: Vec<f64> = (0..n).map(|i| v.row(i).sum() / m as f64).collect();
    let grand_mean = v.sum() / (n * m) as f64;
    let values = DMatrix::from_fn(n, m, |i, j| v[(i, j)] - row_means[i] - col_means[j] + grand_mean);

    let stats = match &g.centering {
        None => CenteringStats { col_means, row_means, grand_mean },
        Some(prev) => CenteringStats {
            col_means: prev.col_means.iter().zip(&col_means).map(|(a, b)| a + b).collect(),
            row_means: prev.row_means.iter().zip(&row_means).map(|(a, b)| a + b).collect(),
            grand_mean: prev.grand_mean + grand_mean,
        },
    };
    Ok(GramMatrix { values, scaled: g.scaled, scale: g.scale, centering: Some(stats) })
}

/// Kernel row `κ(x_new, z_j)` against the training column samples, unscaled.
///
/// For `Sne` the normalizer runs over the training `Z`. When `centering` is
/// given (in unscaled units) the row is doubly centered.
pub fn kernel_vector(
    spec: &KernelSpec,
    x_new: &[f64],
    z: &DataMatrix,
    centering: Option<&CenteringStats>,
) -> Result<DVector<f64>> {
    spec.validate()?;
    if x_new.len() != z.ncols() {
        return Err(KsvdError::DimensionMismatch(format!(
            "new sample has dimension {}, training samples have {}",
            x_new.len(),
            z.ncols()
        )));
    }
    let z_norms = if spec.needs_norms() { squared_norms(z) } else { vec![0.0; z.nrows()] };
    let mut k = row_against(spec, x_new, z, &z_norms)?;
    if let Some(stats) = centering {
        stats.center_row(&mut k);
    }
    Ok(DVector::from_vec(k))
}

fn row_against(spec: &KernelSpec, x: &[f64], z: &DataMatrix, z_norms: &[f64]) -> Result<Vec<f64>> {
    let xn = if spec.needs_norms() { dot(x, x) } else { 0.0 };
    let mut k: Vec<f64> = (0..z.nrows()).map(|j| spec.raw(x, z.row(j), xn, z_norms[j])).collect();
    if let KernelSpec::Sne { gamma } = *spec {
        let den: f64 = k.iter().sum();
        if !(den > 0.0 && den.is_finite()) {
            return Err(KsvdError::SneUnderflow { row: 0, gamma });
        }
        for v in &mut k {
            *v /= den;
        }
    }
    if !k.iter().all(|v| v.is_finite()) {
        return Err(KsvdError::NonFinite("kernel vector".into()));
    }
    Ok(k)
}

/// Gram matrix evaluated entry by entry, never stored.
///
/// Keeps an evaluation counter so callers can verify how many kernel entries a
/// solver touched. SNE normalizers are computed once at construction over the
/// full column-sample set and are not counted as entry evaluations.
#[derive(Debug)]
pub struct LazyKernelOperator {
    spec: KernelSpec,
    x: DataMatrix,
    z: DataMatrix,
    x_norms: Vec<f64>,
    z_norms: Vec<f64>,
    sne_denominators: Option<Vec<f64>>,
    scaled: bool,
    scale: f64,
    evaluations: AtomicU64,
}

impl Clone for LazyKernelOperator {
    fn clone(&self) -> Self {
        Self {
            spec: self.spec,
            x: self.x.clone(),
            z: self.z.clone(),
            x_norms: self.x_norms.clone(),
            z_norms: self.z_norms.clone(),
            sne_denominators: self.sne_denominators.clone(),
            scaled: self.scaled,
            scale: self.scale,
            evaluations: AtomicU64::new(0),
        }
    }
}

impl LazyKernelOperator {
    pub fn new(spec: KernelSpec, x: DataMatrix, z: DataMatrix, scaled: bool) -> Result<Self> {
        spec.validate()?;
        if x.nrows() == 0 || z.nrows() == 0 {
            return Err(KsvdError::DimensionMismatch("kernel sets must be non-empty".into()));
        }
        if x.ncols() != z.ncols() {
            return Err(KsvdError::DimensionMismatch(format!(
                "row samples have dimension {}, column samples have {}",
                x.ncols(),
                z.ncols()
            )));
        }
        x.ensure_finite("row samples")?;
        z.ensure_finite("column samples")?;

        let (x_norms, z_norms) = if spec.needs_norms() {
            (squared_norms(&x), squared_norms(&z))
        } else {
            (vec![0.0; x.nrows()], vec![0.0; z.nrows()])
        };
        let sne_denominators = match spec {
            KernelSpec::Sne { gamma } => {
                let den: Vec<f64> = (0..x.nrows())
                    .into_par_iter()
                    .map(|i| (0..z.nrows()).map(|j| spec.raw(x.row(i), z.row(j), x_norms[i], z_norms[j])).sum::<f64>())
                    .collect();
                if let Some(row) = den.iter().position(|d| !(*d > 0.0 && d.is_finite())) {
                    return Err(KsvdError::SneUnderflow { row, gamma });
                }
                Some(den)
            }
            _ => None,
        };
        let scale = if scaled { 1.0 / ((x.nrows() * z.nrows()) as f64).sqrt() } else { 1.0 };
        Ok(Self { spec, x, z, x_norms, z_norms, sne_denominators, scaled, scale, evaluations: AtomicU64::new(0) })
    }

    #[inline]
    fn value(&self, i: usize, j: usize) -> f64 {
        let mut v = self.spec.raw(self.x.row(i), self.z.row(j), self.x_norms[i], self.z_norms[j]);
        if let Some(den) = &self.sne_denominators {
            v /= den[i];
        }
        v * self.scale
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        self.value(i, j)
    }

    /// Entries `G[rows, cols]` as a dense block.
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        self.evaluations.fetch_add((rows.len() * cols.len()) as u64, Ordering::Relaxed);
        let data: Vec<Vec<f64>> = rows.par_iter().map(|&i| cols.iter().map(|&j| self.value(i, j)).collect()).collect();
        DMatrix::from_fn(rows.len(), cols.len(), |a, b| data[a][b])
    }

    /// Full row `i` of `G`.
    pub(crate) fn row_values(&self, i: usize) -> Vec<f64> {
        self.evaluations.fetch_add(self.z.nrows() as u64, Ordering::Relaxed);
        (0..self.z.nrows()).map(|j| self.value(i, j)).collect()
    }

    /// Number of kernel entries evaluated since construction or the last reset.
    pub fn evaluations(&self) -> u64 {
        self.evaluations.load(Ordering::Relaxed)
    }

    pub fn reset_evaluations(&self) {
        self.evaluations.store(0, Ordering::Relaxed);
    }

    /// Dense Gram matrix with every entry computed as [`Self::entry`] would.
    pub fn materialize(&self) -> GramMatrix {
        let rows: Vec<usize> = (0..self.x.nrows()).collect();
        let cols: Vec<usize> = (0..self.z.nrows()).collect();
        GramMatrix { values: self.block(&rows, &cols), scaled: self.scaled, scale: self.scale, centering: None }
    }

    /// Unscaled kernel column `κ(x_i, z_new)` for a new column sample. SNE rows
    /// keep their training normalizers.
    pub fn column_vector(&self, z_new: &[f64]) -> Result<Vec<f64>> {
        if z_new.len() != self.z.ncols() {
            return Err(KsvdError::DimensionMismatch(format!(
                "new sample has dimension {}, training samples have {}",
                z_new.len(),
                self.z.ncols()
            )));
        }
        let zn = if self.spec.needs_norms() { dot(z_new, z_new) } else { 0.0 };
        let mut k: Vec<f64> =
            (0..self.x.nrows()).map(|i| self.spec.raw(self.x.row(i), z_new, self.x_norms[i], zn)).collect();
        if let Some(den) = &self.sne_denominators {
            for (v, d) in k.iter_mut().zip(den) {
                *v /= d;
            }
        }
        if !k.iter().all(|v| v.is_finite()) {
            return Err(KsvdError::NonFinite("kernel vector".into()));
        }
        Ok(k)
    }

    /// Unscaled kernel row `κ(x_new, z_j)` for a new row sample.
    pub fn row_vector(&self, x_new: &[f64]) -> Result<Vec<f64>> {
        if x_new.len() != self.z.ncols() {
            return Err(KsvdError::DimensionMismatch(format!(
                "new sample has dimension {}, training samples have {}",
                x_new.len(),
                self.z.ncols()
            )));
        }
        row_against(&self.spec, x_new, &self.z, &self.z_norms)
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn x(&self) -> &DataMatrix {
        &self.x
    }

    pub fn z(&self) -> &DataMatrix {
        &self.z
    }

    pub fn nrows(&self) -> usize {
        self.x.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.z.nrows()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn sne_denominators(&self) -> Option<&[f64]> {
        self.sne_denominators.as_deref()
    }
}
