//! Classification, clustering and reconstruction scores.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{KsvdError, Result};

/// Micro- and macro-averaged F1.
///
/// With `n_classes = Some(k)` the macro average runs over `0..k` and classes
/// absent from both inputs score 0; otherwise over the labels that occur.
pub fn f1_scores(pred: &[usize], truth: &[usize], n_classes: Option<usize>) -> Result<(f64, f64)> {
    if pred.len() != truth.len() {
        return Err(KsvdError::DimensionMismatch(format!("{} predictions for {} labels", pred.len(), truth.len())));
    }
    let classes: Vec<usize> = match n_classes {
        Some(k) => (0..k).collect(),
        None => {
            let mut c: Vec<usize> = pred.iter().chain(truth).copied().collect();
            c.sort_unstable();
            c.dedup();
            c
        }
    };
    if classes.is_empty() {
        return Ok((0.0, 0.0));
    }
    let (mut tp_all, mut fp_all, mut fn_all) = (0usize, 0usize, 0usize);
    let mut macro_sum = 0.0;
    for &c in &classes {
        let mut tp = 0;
        let mut fp = 0;
        let mut fneg = 0;
        for (&p, &t) in pred.iter().zip(truth) {
            match (p == c, t == c) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fneg += 1,
                _ => {}
            }
        }
        tp_all += tp;
        fp_all += fp;
        fn_all += fneg;
        let denom = 2 * tp + fp + fneg;
        if denom > 0 {
            macro_sum += 2.0 * tp as f64 / denom as f64;
        }
    }
    let denom = 2 * tp_all + fp_all + fn_all;
    let micro = if denom > 0 { 2.0 * tp_all as f64 / denom as f64 } else { 0.0 };
    Ok((micro, macro_sum / classes.len() as f64))
}

/// `(Σ|A − Â|, ‖A − Â‖_F)`.
pub fn recon_error(a: &DMatrix<f64>, a_hat: &DMatrix<f64>) -> Result<(f64, f64)> {
    if a.shape() != a_hat.shape() {
        return Err(KsvdError::DimensionMismatch(format!("shapes {:?} and {:?} differ", a.shape(), a_hat.shape())));
    }
    let d = a - a_hat;
    Ok((d.abs().sum(), d.norm()))
}

/// Sums after sorting, so the result does not depend on the term order.
fn stable_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

fn entropy(counts: &BTreeMap<usize, usize>, n: f64) -> f64 {
    -stable_sum(
        counts
            .values()
            .map(|&c| {
                let p = c as f64 / n;
                p * p.ln()
            })
            .collect(),
    )
}

/// Normalized mutual information, `I(a; b) / ((H(a) + H(b))/2)`.
///
/// If both partitions are trivial the value is 1; if exactly one is, 0.
pub fn nmi(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(KsvdError::DimensionMismatch(format!("{} vs {} labels", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(KsvdError::InvalidParameter("NMI of empty partitions".into()));
    }
    let n = a.len() as f64;
    let mut ca = BTreeMap::new();
    let mut cb = BTreeMap::new();
    let mut joint = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *ca.entry(x).or_insert(0usize) += 1;
        *cb.entry(y).or_insert(0usize) += 1;
        *joint.entry((x, y)).or_insert(0usize) += 1;
    }
    let (ha, hb) = (entropy(&ca, n), entropy(&cb, n));
    if ha == 0.0 && hb == 0.0 {
        return Ok(1.0);
    }
    if ha == 0.0 || hb == 0.0 {
        return Ok(0.0);
    }
    let mi = stable_sum(
        joint
            .iter()
            .map(|(&(x, y), &c)| {
                let c = c as f64;
                c / n * (n * c / (ca[&x] as f64 * cb[&y] as f64)).ln()
            })
            .collect(),
    );
    Ok((mi / ((ha + hb) / 2.0)).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f1_perfect_and_all_wrong() {
        assert_eq!(f1_scores(&[0, 1, 2, 1], &[0, 1, 2, 1], None).unwrap(), (1.0, 1.0));
        assert_eq!(f1_scores(&[1, 0, 1], &[0, 1, 0], None).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn f1_three_classes_by_hand() {
        // truth 0,0,1,1,2,2 ; class 1 predicted as 2 once
        let truth = [0, 0, 1, 1, 2, 2];
        let pred = [0, 0, 1, 2, 2, 2];
        let (micro, macro_) = f1_scores(&pred, &truth, None).unwrap();
        assert!((micro - 5.0 / 6.0).abs() < 1e-15);
        // F1: class0 = 1, class1 = 2/3, class2 = 0.8
        assert!((macro_ - (1.0 + 2.0 / 3.0 + 0.8) / 3.0).abs() < 1e-15);
        let (_, with_absent) = f1_scores(&pred, &truth, Some(4)).unwrap();
        assert!((with_absent - (1.0 + 2.0 / 3.0 + 0.8) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn recon_single_flip() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(recon_error(&a, &a).unwrap(), (0.0, 0.0));
        assert_eq!(recon_error(&a, &DMatrix::zeros(2, 2)).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn nmi_conventions() {
        assert_eq!(nmi(&[0, 0, 1, 1], &[5, 5, 3, 3]).unwrap(), 1.0);
        assert_eq!(nmi(&[0, 0, 0], &[0, 1, 2]).unwrap(), 0.0);
        assert_eq!(nmi(&[4, 4], &[1, 1]).unwrap(), 1.0);
    }

    #[test]
    fn nmi_four_points_by_hand() {
        // a = {0,0,1,1}, b = {0,1,1,1}: H(a) = ln 2, H(b) = −(¼ln¼ + ¾ln¾),
        // I = ¼ln2 + ¼ln(2/3) + ½ln(4/3).
        let a = [0, 0, 1, 1];
        let b = [0, 1, 1, 1];
        let ha = 2f64.ln();
        let hb = -(0.25 * 0.25f64.ln() + 0.75 * 0.75f64.ln());
        let mi = 0.25 * 2f64.ln() + 0.25 * (2.0f64 / 3.0).ln() + 0.5 * (4.0f64 / 3.0).ln();
        let expect = mi / ((ha + hb) / 2.0);
        assert!((nmi(&a, &b).unwrap() - expect).abs() < 1e-14);
        assert_eq!(nmi(&a, &b).unwrap(), nmi(&b, &a).unwrap());
    }
}
