//! Linear regression and one-vs-rest least-squares classification heads.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{KsvdError, Result};
use crate::linalg::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Classification,
    Regression,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Targets {
    Classes(Vec<usize>),
    Values(Vec<f64>),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Classes(c) => c.len(),
            Targets::Values(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn task(&self) -> Task {
        match self {
            Targets::Classes(_) => Task::Classification,
            Targets::Values(_) => Task::Regression,
        }
    }

    /// Regression: one column of values. Classification: `±1` one-vs-rest
    /// indicator columns, one per class `0..=max label`.
    pub fn matrix(&self) -> DMatrix<f64> {
        match self {
            Targets::Values(v) => DMatrix::from_column_slice(v.len(), 1, v),
            Targets::Classes(c) => {
                let k = c.iter().max().map_or(0, |m| m + 1);
                DMatrix::from_fn(c.len(), k, |i, j| if c[i] == j { 1.0 } else { -1.0 })
            }
        }
    }

    pub fn select(&self, idx: &[usize]) -> Targets {
        match self {
            Targets::Classes(c) => Targets::Classes(idx.iter().map(|&i| c[i]).collect()),
            Targets::Values(v) => Targets::Values(idx.iter().map(|&i| v[i]).collect()),
        }
    }
}

/// `outputs = ((F − μ)/σ)·W + 1bᵀ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearHead {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub task: Task,
    pub feature_mean: Option<DVector<f64>>,
    pub feature_scale: Option<DVector<f64>>,
}

impl LinearHead {
    pub fn zeros(features: usize, outputs: usize, task: Task) -> Self {
        Self {
            weights: DMatrix::zeros(features, outputs),
            bias: DVector::zeros(outputs),
            task,
            feature_mean: None,
            feature_scale: None,
        }
    }

    pub fn transform(&self, f: &DMatrix<f64>) -> DMatrix<f64> {
        match (&self.feature_mean, &self.feature_scale) {
            (Some(mu), Some(sd)) => DMatrix::from_fn(f.nrows(), f.ncols(), |i, j| (f[(i, j)] - mu[j]) / sd[j]),
            _ => f.clone(),
        }
    }

    pub fn outputs(&self, f: &DMatrix<f64>) -> DMatrix<f64> {
        let mut o = self.transform(f) * &self.weights;
        for mut row in o.row_iter_mut() {
            row += self.bias.transpose();
        }
        o
    }

    /// Class with the largest output per row (ties to the lower index).
    pub fn predict_classes(&self, f: &DMatrix<f64>) -> Vec<usize> {
        argmax_rows(&self.outputs(f))
    }
}

pub(crate) fn argmax_rows(o: &DMatrix<f64>) -> Vec<usize> {
    o.row_iter()
        .map(|row| {
            let mut best = 0;
            for j in 1..row.len() {
                if row[j] > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Mean squared error of the head over all `N·K` outputs.
pub fn squared_loss(o: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    (o - y).norm_squared() / (o.nrows() * o.ncols()) as f64
}

/// Trained head with its held-out score.
#[derive(Clone, Debug)]
pub struct HeadFit {
    pub head: LinearHead,
    /// `"accuracy"` or `"rmse"`.
    pub metric_name: &'static str,
    pub metric: f64,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

/// Seeded 80/20 split: the test set is the first `max(1, round(n/5))` indices of
/// a shuffled order.
pub fn split_indices(n: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng(seed));
    let n_test = ((n as f64 * 0.2).round() as usize).clamp(1, n - 1);
    let mut test = order[..n_test].to_vec();
    let mut train = order[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    (train, test)
}

/// Gradient descent on standardized features from zero weights. Reports test
/// accuracy (classification) or test RMSE (regression).
pub fn linear_head(
    features: &DMatrix<f64>,
    targets: &Targets,
    learning_rate: f64,
    steps: usize,
    seed: u64,
) -> Result<HeadFit> {
    let n = features.nrows();
    if targets.len() != n {
        return Err(KsvdError::DimensionMismatch(format!("{} targets for {n} feature rows", targets.len())));
    }
    if n < 2 {
        return Err(KsvdError::InvalidParameter("need at least two samples to split".into()));
    }
    if !features.iter().all(|v| v.is_finite()) {
        return Err(KsvdError::NonFinite("features".into()));
    }
    let (train, test) = split_indices(n, seed);
    let f_train = features.select_rows(&train);
    let y_all = targets.matrix();
    let y_train = y_all.select_rows(&train);

    let d = features.ncols();
    let mean = DVector::from_fn(d, |j, _| f_train.column(j).mean());
    let scale = DVector::from_fn(d, |j, _| {
        let sd = f_train.column(j).map(|v| (v - mean[j]).powi(2)).mean().sqrt();
        if sd > 0.0 {
            sd
        } else {
            1.0
        }
    });
    let mut head = LinearHead::zeros(d, y_all.ncols(), targets.task());
    head.feature_mean = Some(mean);
    head.feature_scale = Some(scale);
    let xs = head.transform(&f_train);
    let denom = (xs.nrows() * y_train.ncols()) as f64;
    for _ in 0..steps {
        let o = head.outputs(&f_train);
        let d_o = (o - &y_train) * (2.0 / denom);
        let gw = xs.tr_mul(&d_o);
        let gb = d_o.row_sum().transpose();
        head.weights -= gw * learning_rate;
        head.bias -= gb * learning_rate;
        if !head.weights.iter().chain(head.bias.iter()).all(|v| v.is_finite()) {
            return Err(KsvdError::Numerical("linear head diverged; lower the learning rate".into()));
        }
    }

    let f_test = features.select_rows(&test);
    let (metric_name, metric) = match targets {
        Targets::Classes(c) => {
            let pred = head.predict_classes(&f_test);
            let hits = test.iter().zip(&pred).filter(|(&i, &p)| c[i] == p).count();
            ("accuracy", hits as f64 / test.len() as f64)
        }
        Targets::Values(v) => {
            let o = head.outputs(&f_test);
            let mse =
                test.iter().enumerate().map(|(a, &i)| (o[(a, 0)] - v[i]).powi(2)).sum::<f64>() / test.len() as f64;
            ("rmse", mse.sqrt())
        }
    };
    Ok(HeadFit { head, metric_name, metric, train_indices: train, test_indices: test })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exactly_linear_targets() {
        let f = DMatrix::from_fn(40, 3, |i, j| ((i * (j + 2)) as f64 * 0.31).sin());
        let y: Vec<f64> = (0..40).map(|i| 2.0 * f[(i, 0)] - f[(i, 1)] + 0.5 * f[(i, 2)] + 1.0).collect();
        let fit = linear_head(&f, &Targets::Values(y), 0.1, 5000, 3).unwrap();
        assert_eq!(fit.metric_name, "rmse");
        assert!(fit.metric <= 1e-3, "rmse {}", fit.metric);
    }

    #[test]
    fn constant_target() {
        let f = DMatrix::from_fn(10, 2, |i, j| (i + j) as f64);
        let fit = linear_head(&f, &Targets::Values(vec![4.0; 10]), 0.1, 500, 0).unwrap();
        assert!(fit.metric < 1e-12);
        assert!(fit.head.weights.abs().max() < 1e-12);
    }

    #[test]
    fn separable_classes() {
        let f = DMatrix::from_fn(30, 2, |i, j| if i < 15 { -2.0 } else { 2.0 } + ((i * 7 + j) as f64).sin() * 0.3);
        let labels: Vec<usize> = (0..30).map(|i| usize::from(i >= 15)).collect();
        let fit = linear_head(&f, &Targets::Classes(labels), 0.1, 500, 1).unwrap();
        assert_eq!(fit.metric, 1.0);
    }

    #[test]
    fn divergence_detected() {
        let f = DMatrix::from_fn(10, 2, |i, j| (i * 3 + j) as f64);
        let y = Targets::Values((0..10).map(|i| i as f64).collect());
        assert!(matches!(linear_head(&f, &y, 1e3, 200, 0), Err(KsvdError::Numerical(_))));
    }

    #[test]
    fn split_is_80_20_and_disjoint() {
        let (train, test) = split_indices(50, 4);
        assert_eq!(test.len(), 10);
        assert_eq!(train.len(), 40);
        assert!(test.iter().all(|i| !train.contains(i)));
    }
}
