//! Matrix-free access to `G` for the solvers.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::kernels::{GramMatrix, LazyKernelOperator};

/// A rectangular matrix that can hand out blocks and products.
///
/// Products are evaluated with a fixed summation order so repeated runs are
/// bit-identical regardless of the thread count.
pub trait MatrixOperator: Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// Dense block `G[rows, cols]`.
    fn block(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64>;
    /// `G·X`.
    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64>;
    /// `Gᵀ·X`.
    fn apply_transpose(&self, x: &DMatrix<f64>) -> DMatrix<f64>;

    fn to_dense(&self) -> DMatrix<f64> {
        let rows: Vec<usize> = (0..self.nrows()).collect();
        let cols: Vec<usize> = (0..self.ncols()).collect();
        self.block(&rows, &cols)
    }
}

fn select(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |a, b| m[(rows[a], cols[b])])
}

impl MatrixOperator for DMatrix<f64> {
    fn nrows(&self) -> usize {
        self.nrows()
    }
    fn ncols(&self) -> usize {
        self.ncols()
    }
    fn block(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        select(self, rows, cols)
    }
    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self * x
    }
    fn apply_transpose(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.tr_mul(x)
    }
    fn to_dense(&self) -> DMatrix<f64> {
        self.clone()
    }
}

impl MatrixOperator for GramMatrix {
    fn nrows(&self) -> usize {
        self.values().nrows()
    }
    fn ncols(&self) -> usize {
        self.values().ncols()
    }
    fn block(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        select(self.values(), rows, cols)
    }
    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.values() * x
    }
    fn apply_transpose(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.values().tr_mul(x)
    }
    fn to_dense(&self) -> DMatrix<f64> {
        self.values().clone()
    }
}

impl MatrixOperator for LazyKernelOperator {
    fn nrows(&self) -> usize {
        LazyKernelOperator::nrows(self)
    }
    fn ncols(&self) -> usize {
        LazyKernelOperator::ncols(self)
    }
    fn block(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        LazyKernelOperator::block(self, rows, cols)
    }
    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let k = x.ncols();
        let rows: Vec<Vec<f64>> = (0..self.nrows())
            .into_par_iter()
            .map(|i| {
                let g = self.row_values(i);
                (0..k).map(|c| g.iter().zip(x.column(c).iter()).map(|(a, b)| a * b).sum()).collect()
            })
            .collect();
        DMatrix::from_fn(self.nrows(), k, |i, c| rows[i][c])
    }
    fn apply_transpose(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let k = x.ncols();
        let all: Vec<usize> = (0..self.nrows()).collect();
        let rows: Vec<Vec<f64>> = (0..self.ncols())
            .into_par_iter()
            .map(|j| {
                let g = LazyKernelOperator::block(self, &all, &[j]);
                (0..k).map(|c| g.iter().zip(x.column(c).iter()).map(|(a, b)| a * b).sum()).collect()
            })
            .collect();
        DMatrix::from_fn(self.ncols(), k, |j, c| rows[j][c])
    }
}

/// A symmetric positive semidefinite matrix accessed by columns.
pub trait SymmetricOperator: Sync {
    fn size(&self) -> usize;
    /// Columns `K[:, idx]`.
    fn columns(&self, idx: &[usize]) -> DMatrix<f64>;
}

impl SymmetricOperator for DMatrix<f64> {
    fn size(&self) -> usize {
        self.nrows()
    }
    fn columns(&self, idx: &[usize]) -> DMatrix<f64> {
        self.select_columns(idx)
    }
}

/// `GGᵀ` (`left = true`) or `GᵀG` of an underlying operator, never formed.
pub struct GramOuter<'a, O: MatrixOperator + ?Sized> {
    op: &'a O,
    left: bool,
}

impl<'a, O: MatrixOperator + ?Sized> GramOuter<'a, O> {
    pub fn left(op: &'a O) -> Self {
        Self { op, left: true }
    }
    pub fn right(op: &'a O) -> Self {
        Self { op, left: false }
    }
}

impl<O: MatrixOperator + ?Sized> SymmetricOperator for GramOuter<'_, O> {
    fn size(&self) -> usize {
        if self.left {
            self.op.nrows()
        } else {
            self.op.ncols()
        }
    }
    fn columns(&self, idx: &[usize]) -> DMatrix<f64> {
        if self.left {
            let all: Vec<usize> = (0..self.op.ncols()).collect();
            let rows = self.op.block(idx, &all);
            self.op.apply(&rows.transpose())
        } else {
            let all: Vec<usize> = (0..self.op.nrows()).collect();
            let cols = self.op.block(&all, idx);
            self.op.apply_transpose(&cols)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::DataMatrix;
    use crate::kernels::{gram, KernelSpec};

    #[test]
    fn lazy_products_match_dense() {
        let x = DataMatrix::from_fn(6, 2, |i, j| ((i * 3 + j) as f64).sin());
        let z = DataMatrix::from_fn(4, 2, |i, j| ((i + 2 * j) as f64).cos());
        let spec = KernelSpec::Sne { gamma: 1.3 };
        let lazy = LazyKernelOperator::new(spec, x.clone(), z.clone(), true).unwrap();
        let g = gram(&spec, &x, &z, true).unwrap();
        let a = DMatrix::from_fn(4, 3, |i, j| (i as f64) - (j as f64) * 0.5);
        let b = DMatrix::from_fn(6, 2, |i, j| (i * j) as f64 * 0.1 + 1.0);
        assert!((lazy.apply(&a) - g.values() * &a).abs().max() < 1e-14);
        assert!((lazy.apply_transpose(&b) - g.values().tr_mul(&b)).abs().max() < 1e-14);
        assert_eq!(MatrixOperator::to_dense(&lazy), *g.values());
    }

    #[test]
    fn gram_outer_columns() {
        let g = DMatrix::from_fn(5, 3, |i, j| (i as f64 + 1.0) * (j as f64 - 1.0) + (i * j) as f64);
        let ggt = &g * g.transpose();
        let gtg = g.transpose() * &g;
        let l = GramOuter::left(&g).columns(&[1, 4]);
        let r = GramOuter::right(&g).columns(&[2]);
        assert!((l - ggt.select_columns(&[1, 4])).abs().max() < 1e-12);
        assert!((r - gtg.select_columns(&[2])).abs().max() < 1e-12);
    }
}
