//! Simultaneous clustering of documents and terms from the fitted factors.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::coherence::coherence;
use super::kmeans::kmeans;
use super::metrics::nmi;
use crate::cce::{fit, FitOptions, KsvdModel};
use crate::compat::CompatStrategy;
use crate::data::DataMatrix;
use crate::error::Result;
use crate::kernels::KernelSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiclusterConfig {
    pub kernel: KernelSpec,
    pub fit: FitOptions,
    pub compat: CompatStrategy,
    pub clusters: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub restarts: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiclusterReport {
    pub doc_labels: Vec<usize>,
    pub term_labels: Vec<usize>,
    pub doc_nmi: Option<f64>,
    pub term_nmi: Option<f64>,
    pub coherence: f64,
}

/// Fits the model between documents (rows) and terms (columns), then runs
/// k-means on `B_φ` for documents and `B_ψ` for terms.
pub fn bicluster(
    doc_term: &DataMatrix,
    doc_truth: Option<&[usize]>,
    term_truth: Option<&[usize]>,
    cfg: &BiclusterConfig,
) -> Result<(KsvdModel, BiclusterReport)> {
    let model = fit(doc_term, &doc_term.transpose(), &cfg.kernel, Some(&cfg.compat), &cfg.fit)?;
    let docs = kmeans(&model.b_phi, cfg.clusters, cfg.seed, cfg.max_iter, cfg.restarts)?;
    let terms = kmeans(&model.b_psi, cfg.clusters, cfg.seed.wrapping_add(1), cfg.max_iter, cfg.restarts)?;
    let doc_nmi = doc_truth.map(|t| nmi(&docs.labels, t)).transpose()?;
    let term_nmi = term_truth.map(|t| nmi(&terms.labels, t)).transpose()?;
    let dm: DMatrix<f64> = doc_term.to_dmatrix();
    let coh = coherence(&terms.labels, &dm)?;
    Ok((
        model,
        BiclusterReport { doc_labels: docs.labels, term_labels: terms.labels, doc_nmi, term_nmi, coherence: coh },
    ))
}
