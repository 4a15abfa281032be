//! Directed-graph embedding, node classification and adjacency reconstruction.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lssvm::lssvm_fit;
use super::metrics::{f1_scores, recon_error};
use crate::cce::{fit, EmbeddingSide, FitOptions, KsvdModel};
use crate::data::DataMatrix;
use crate::error::{KsvdError, Result};
use crate::kernels::KernelSpec;
use crate::linalg::rng;

/// Fits the model between the out-link rows `A[i, :]` (row samples) and the
/// in-link columns `A[:, j]` (column samples) of a square adjacency matrix.
pub fn graph_embed(adjacency: &DataMatrix, kernel: &KernelSpec, opts: &FitOptions) -> Result<KsvdModel> {
    if adjacency.nrows() != adjacency.ncols() {
        return Err(KsvdError::DimensionMismatch(format!(
            "adjacency matrix must be square, got {}x{}",
            adjacency.nrows(),
            adjacency.ncols()
        )));
    }
    fit(adjacency, &adjacency.transpose(), kernel, None, opts)
}

/// For every node `v`, links it to the `k_v` nodes `u ≠ v` whose target
/// embedding is closest to the source embedding of `v` (ties to the lower index).
pub fn graph_reconstruct(src: &DMatrix<f64>, tgt: &DMatrix<f64>, out_degrees: &[usize]) -> Result<DMatrix<f64>> {
    let n = src.nrows();
    if tgt.nrows() != n || out_degrees.len() != n || src.ncols() != tgt.ncols() {
        return Err(KsvdError::DimensionMismatch(format!(
            "source {}x{}, target {}x{}, {} degrees",
            src.nrows(),
            src.ncols(),
            tgt.nrows(),
            tgt.ncols(),
            out_degrees.len()
        )));
    }
    if let Some(v) = out_degrees.iter().position(|&k| k + 1 > n.max(1)) {
        return Err(KsvdError::InvalidParameter(format!(
            "node {v} has out-degree {} but only {} candidates",
            out_degrees[v],
            n.saturating_sub(1)
        )));
    }
    let rows: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|v| {
            let mut cand: Vec<(f64, usize)> = (0..n)
                .filter(|&u| u != v)
                .map(|u| {
                    let d: f64 = (0..src.ncols()).map(|c| (src[(v, c)] - tgt[(u, c)]).powi(2)).sum();
                    (d, u)
                })
                .collect();
            cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            cand.into_iter().take(out_degrees[v]).map(|(_, u)| u).collect()
        })
        .collect();
    let mut a_hat = DMatrix::zeros(n, n);
    for (v, targets) in rows.iter().enumerate() {
        for &u in targets {
            a_hat[(v, u)] = 1.0;
        }
    }
    Ok(a_hat)
}

/// Out-degree of each node: the number of nonzero entries in its row.
pub fn out_degrees(adjacency: &DataMatrix) -> Vec<usize> {
    (0..adjacency.nrows()).map(|i| adjacency.row(i).iter().filter(|v| **v != 0.0).count()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphEvalConfig {
    pub kernel: KernelSpec,
    pub fit: FitOptions,
    pub gamma_reg: f64,
    /// Fraction of each class used for training the classifier.
    pub train_fraction: f64,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphReport {
    pub micro_f1: Option<f64>,
    pub macro_f1: Option<f64>,
    pub l1: f64,
    pub l2: f64,
    pub lambdas: Vec<f64>,
    pub residuals: (f64, f64),
}

/// Per-class stratified split: `round(fraction·count)` training nodes per class,
/// clamped to leave at least one node on each side when the class has two.
pub fn stratified_split(labels: &[usize], fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = rng(seed);
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for c in classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        idx.shuffle(&mut rng);
        let k = if idx.len() >= 2 {
            ((idx.len() as f64 * fraction).round() as usize).clamp(1, idx.len() - 1)
        } else {
            idx.len()
        };
        train.extend_from_slice(&idx[..k]);
        test.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Embeds the graph, reconstructs it from `B_φ` (sources) and `B_ψ` (targets),
/// and, when labels are given, averages LSSVM F1 scores on `[B_φ | B_ψ]` over
/// stratified splits.
pub fn evaluate_graph(
    adjacency: &DataMatrix,
    labels: Option<&[usize]>,
    cfg: &GraphEvalConfig,
) -> Result<(KsvdModel, GraphReport)> {
    let model = graph_embed(adjacency, &cfg.kernel, &cfg.fit)?;
    let a_hat = graph_reconstruct(&model.b_phi, &model.b_psi, &out_degrees(adjacency))?;
    let (l1, l2) = recon_error(&adjacency.to_dmatrix(), &a_hat)?;

    let (mut micro, mut macro_) = (None, None);
    if let Some(labels) = labels {
        if labels.len() != adjacency.nrows() {
            return Err(KsvdError::DimensionMismatch(format!(
                "{} labels for {} nodes",
                labels.len(),
                adjacency.nrows()
            )));
        }
        let emb = model.embeddings(EmbeddingSide::Concatenated)?.values;
        let (mut s_mi, mut s_ma) = (0.0, 0.0);
        let trials = cfg.trials.max(1);
        for t in 0..trials {
            let (train, test) = stratified_split(labels, cfg.train_fraction, cfg.seed.wrapping_add(t as u64));
            if test.is_empty() {
                return Err(KsvdError::InvalidParameter("split leaves no test nodes".into()));
            }
            let tr_labels: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
            let clf = lssvm_fit(&emb.select_rows(&train), &tr_labels, cfg.gamma_reg)?;
            let pred = clf.predict(&emb.select_rows(&test))?;
            let truth: Vec<usize> = test.iter().map(|&i| labels[i]).collect();
            let (mi, ma) = f1_scores(&pred, &truth, None)?;
            s_mi += mi;
            s_ma += ma;
        }
        micro = Some(s_mi / trials as f64);
        macro_ = Some(s_ma / trials as f64);
    }
    let residuals = model.residuals();
    let report = GraphReport {
        micro_f1: micro,
        macro_f1: macro_,
        l1,
        l2,
        lambdas: model.lambdas.iter().copied().collect(),
        residuals,
    };
    Ok((model, report))
}
