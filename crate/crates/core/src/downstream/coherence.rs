//! PMI coherence of term clusters.

use nalgebra::DMatrix;

use crate::error::{KsvdError, Result};

const TOP_TERMS: usize = 10;
const SMOOTHING: f64 = 1.0;

/// Mean over clusters of the mean pairwise
/// `PMI(a, b) = ln[(D(a, b) + 1)·n_docs / (D(a)·D(b))]` among each cluster's
/// ten most frequent terms, with `D` counting documents with nonzero entries.
/// Terms that never occur are skipped; clusters with fewer than two terms count
/// as 0.
pub fn coherence(term_labels: &[usize], doc_term: &DMatrix<f64>) -> Result<f64> {
    let (n_docs, n_terms) = doc_term.shape();
    if term_labels.len() != n_terms {
        return Err(KsvdError::DimensionMismatch(format!("{} term labels for {n_terms} terms", term_labels.len())));
    }
    if n_docs == 0 {
        return Err(KsvdError::InvalidParameter("coherence needs at least one document".into()));
    }
    let present = |t: usize| -> Vec<bool> { doc_term.column(t).iter().map(|v| *v != 0.0).collect() };
    let df: Vec<usize> = (0..n_terms).map(|t| present(t).iter().filter(|&&p| p).count()).collect();

    let mut clusters = term_labels.to_vec();
    clusters.sort_unstable();
    clusters.dedup();
    let mut total = 0.0;
    for &c in &clusters {
        let mut terms: Vec<usize> = (0..n_terms).filter(|&t| term_labels[t] == c && df[t] > 0).collect();
        terms.sort_by(|&a, &b| df[b].cmp(&df[a]).then(a.cmp(&b)));
        terms.truncate(TOP_TERMS);
        if terms.len() < 2 {
            continue;
        }
        let occ: Vec<Vec<bool>> = terms.iter().map(|&t| present(t)).collect();
        let mut sum = 0.0;
        let mut pairs = 0usize;
        for a in 0..terms.len() {
            for b in a + 1..terms.len() {
                let joint = occ[a].iter().zip(&occ[b]).filter(|(x, y)| **x && **y).count();
                sum += ((joint as f64 + SMOOTHING) * n_docs as f64 / (df[terms[a]] * df[terms[b]]) as f64).ln();
                pairs += 1;
            }
        }
        total += sum / pairs as f64;
    }
    Ok(total / clusters.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn always_cooccurring_terms() {
        let n = 50;
        let d = DMatrix::from_element(n, 2, 1.0);
        let c = coherence(&[0, 0], &d).unwrap();
        assert!((c - ((n as f64 + 1.0) / n as f64).ln()).abs() < 1e-15);
    }

    #[test]
    fn disjoint_terms_are_negative() {
        let d = DMatrix::from_fn(40, 2, |i, j| if (i < 20) == (j == 0) { 1.0 } else { 0.0 });
        let c = coherence(&[0, 0], &d).unwrap();
        assert!((c - (40.0f64 / 400.0).ln()).abs() < 1e-15);
        assert!(c < -2.0);
    }

    #[test]
    fn single_term_cluster_is_zero() {
        let d = DMatrix::from_element(3, 1, 1.0);
        assert_eq!(coherence(&[0], &d).unwrap(), 0.0);
    }
}
