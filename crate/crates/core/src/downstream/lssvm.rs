//! One-vs-rest least-squares SVM with a linear kernel.

use nalgebra::{DMatrix, DVector};

use crate::error::{KsvdError, Result};

/// Per-class dual solutions of
/// `[[0, 1ᵀ], [1, FFᵀ + I/γ]]·[b; α] = [0; y_c]`, `y_c ∈ {−1, +1}ⁿ`.
#[derive(Clone, Debug)]
pub struct LssvmModel {
    /// Sorted distinct training labels; column `c` of `alphas` belongs to `classes[c]`.
    pub classes: Vec<usize>,
    pub alphas: DMatrix<f64>,
    pub biases: DVector<f64>,
    pub gamma_reg: f64,
    pub features: DMatrix<f64>,
    /// Largest `‖A·[b; α] − [0; y]‖_∞` over the binary subproblems.
    pub kkt_residual: f64,
}

pub fn lssvm_fit(features: &DMatrix<f64>, labels: &[usize], gamma_reg: f64) -> Result<LssvmModel> {
    let n = features.nrows();
    if labels.len() != n {
        return Err(KsvdError::DimensionMismatch(format!("{} labels for {n} samples", labels.len())));
    }
    if n < 2 {
        return Err(KsvdError::InvalidParameter("LSSVM needs at least two samples".into()));
    }
    if !(gamma_reg > 0.0) {
        return Err(KsvdError::InvalidParameter(format!("regularization must be positive, got {gamma_reg}")));
    }
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(KsvdError::InvalidParameter("LSSVM needs at least two classes".into()));
    }

    let omega = features * features.transpose();
    let mut a = DMatrix::zeros(n + 1, n + 1);
    for i in 0..n {
        a[(0, i + 1)] = 1.0;
        a[(i + 1, 0)] = 1.0;
        for j in 0..n {
            a[(i + 1, j + 1)] = omega[(i, j)];
        }
        a[(i + 1, i + 1)] += 1.0 / gamma_reg;
    }
    let rhs = DMatrix::from_fn(n + 1, classes.len(), |i, c| {
        if i == 0 {
            0.0
        } else if labels[i - 1] == classes[c] {
            1.0
        } else {
            -1.0
        }
    });
    let sol = a.clone().lu().solve(&rhs).ok_or_else(|| {
        KsvdError::Numerical("LSSVM system is singular (duplicate samples with conflicting labels?)".into())
    })?;
    let kkt_residual = (&a * &sol - &rhs).abs().max();
    Ok(LssvmModel {
        biases: sol.row(0).transpose(),
        alphas: sol.rows(1, n).into_owned(),
        classes,
        gamma_reg,
        features: features.clone(),
        kkt_residual,
    })
}

impl LssvmModel {
    /// `f_c(x) = Σ_i α_ic·⟨x, f_i⟩ + b_c`, one column per class.
    pub fn decision_values(&self, features: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if features.ncols() != self.features.ncols() {
            return Err(KsvdError::DimensionMismatch(format!(
                "features have {} columns, model expects {}",
                features.ncols(),
                self.features.ncols()
            )));
        }
        let mut d = features * self.features.transpose() * &self.alphas;
        for mut row in d.row_iter_mut() {
            row += self.biases.transpose();
        }
        Ok(d)
    }

    pub fn predict(&self, features: &DMatrix<f64>) -> Result<Vec<usize>> {
        let d = self.decision_values(features)?;
        Ok(super::head::argmax_rows(&d).into_iter().map(|c| self.classes[c]).collect())
    }
}
