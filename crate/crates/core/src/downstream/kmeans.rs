//! Lloyd's k-means with k-means++ seeding and restarts.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{KsvdError, Result};
use crate::linalg::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub k: usize,
    pub inertia: f64,
    pub centroids: DMatrix<f64>,
}

fn sq_dist(x: &DMatrix<f64>, i: usize, c: &DMatrix<f64>, j: usize) -> f64 {
    (0..x.ncols()).map(|d| (x[(i, d)] - c[(j, d)]).powi(2)).sum()
}

/// Seeds for restart `t`, derived from the master seed.
fn restart_seed(seed: u64, t: usize) -> u64 {
    seed ^ (t as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Best of `restarts` runs by inertia (ties to the earliest restart).
/// Deterministic given `seed`; restarts run in parallel.
pub fn kmeans(x: &DMatrix<f64>, k: usize, seed: u64, max_iter: usize, restarts: usize) -> Result<ClusterAssignment> {
    let n = x.nrows();
    if k == 0 || k > n {
        return Err(KsvdError::InvalidParameter(format!("k = {k} must lie in 1..={n}")));
    }
    if !x.iter().all(|v| v.is_finite()) {
        return Err(KsvdError::NonFinite("k-means input".into()));
    }
    let runs: Vec<ClusterAssignment> =
        (0..restarts.max(1)).into_par_iter().map(|t| lloyd(x, k, restart_seed(seed, t), max_iter)).collect();
    let mut best = 0;
    for (t, run) in runs.iter().enumerate() {
        if run.inertia < runs[best].inertia {
            best = t;
        }
    }
    Ok(runs.into_iter().nth(best).expect("at least one restart"))
}

fn plus_plus(x: &DMatrix<f64>, k: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let n = x.nrows();
    let pair = |i: usize, j: usize| -> f64 { (0..x.ncols()).map(|c| (x[(i, c)] - x[(j, c)]).powi(2)).sum() };
    let first = rng.random_range(0..n);
    let mut chosen = vec![first];
    let mut d2: Vec<f64> = (0..n).map(|i| pair(i, first)).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = d2.iter().rposition(|&d| d > 0.0).unwrap_or(n - 1);
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if acc > target && d > 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            // Every point coincides with a chosen centroid.
            (0..n).find(|i| !chosen.contains(i)).unwrap_or(0)
        };
        chosen.push(next);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(pair(i, next));
        }
    }
    x.select_rows(&chosen)
}

fn assign(x: &DMatrix<f64>, centroids: &DMatrix<f64>) -> (Vec<usize>, Vec<f64>) {
    (0..x.nrows())
        .map(|i| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for j in 0..centroids.nrows() {
                let d = sq_dist(x, i, centroids, j);
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            (best, best_d)
        })
        .unzip()
}

fn lloyd(x: &DMatrix<f64>, k: usize, seed: u64, max_iter: usize) -> ClusterAssignment {
    let (n, d) = x.shape();
    let mut rng = rng(seed);
    let mut centroids = plus_plus(x, k, &mut rng);
    let (mut labels, mut dists) = assign(x, &centroids);
    for _ in 0..max_iter {
        let mut sums = DMatrix::zeros(k, d);
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[labels[i]] += 1;
            for c in 0..d {
                sums[(labels[i], c)] += x[(i, c)];
            }
        }
        for j in 0..k {
            if counts[j] == 0 {
                // Empty cluster: move its centroid onto the worst-served point.
                let far = (0..n).fold(0, |b, i| if dists[i] > dists[b] { i } else { b });
                for c in 0..d {
                    sums[(j, c)] = x[(far, c)];
                }
                counts[j] = 1;
                dists[far] = 0.0;
            }
            for c in 0..d {
                centroids[(j, c)] = sums[(j, c)] / counts[j] as f64;
            }
        }
        let (new_labels, new_dists) = assign(x, &centroids);
        let changed = new_labels != labels;
        labels = new_labels;
        dists = new_dists;
        if !changed {
            break;
        }
    }
    ClusterAssignment { labels, k, inertia: dists.iter().sum(), centroids }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_clouds() -> DMatrix<f64> {
        DMatrix::from_row_slice(
            8,
            2,
            &[0.0, 0.1, 0.2, 0.0, -0.1, 0.05, 0.1, -0.1, 5.0, 5.1, 5.2, 4.9, 4.8, 5.0, 5.1, 5.05],
        )
    }

    #[test]
    fn separates_two_clouds() {
        let res = kmeans(&two_clouds(), 2, 7, 100, 4).unwrap();
        assert!(res.labels[..4].iter().all(|&l| l == res.labels[0]));
        assert!(res.labels[4..].iter().all(|&l| l == res.labels[4]));
        assert_ne!(res.labels[0], res.labels[4]);
    }

    #[test]
    fn k_equals_n_has_zero_inertia() {
        let res = kmeans(&two_clouds(), 8, 1, 50, 1).unwrap();
        assert_eq!(res.inertia, 0.0);
    }

    #[test]
    fn power_of_two_scaling_keeps_labels() {
        let x = DMatrix::from_fn(20, 3, |i, j| ((i * 13 + j * 7) as f64 * 0.37).sin());
        let a = kmeans(&x, 3, 5, 100, 3).unwrap();
        let b = kmeans(&(x * 4.0), 3, 5, 100, 3).unwrap();
        assert_eq!(a.labels, b.labels);
    }

    #[test]
    fn invalid_k() {
        assert!(kmeans(&two_clouds(), 0, 1, 10, 1).is_err());
        assert!(kmeans(&two_clouds(), 9, 1, 10, 1).is_err());
    }
}
