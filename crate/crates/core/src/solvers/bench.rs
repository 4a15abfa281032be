//! Subsample-escalation benchmark: each solver raises its fidelity knob until
//! its `η` against a tight reference drops to the target.

use std::time::Instant;

use log::{debug, info};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{
    asym_nystrom, eta, eta_normalized, randomized_svd, sym_nystrom_svd, truncated_svd, MatrixOperator, SvdResult,
};
use crate::error::{KsvdError, Result};
use crate::linalg::{gaussian_matrix, orthonormal_basis};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchSolver {
    Tsvd,
    Rsvd,
    SymNys,
    AsymNys,
}

impl BenchSolver {
    pub fn name(&self) -> &'static str {
        match self {
            BenchSolver::Tsvd => "tsvd",
            BenchSolver::Rsvd => "rsvd",
            BenchSolver::SymNys => "symnys",
            BenchSolver::AsymNys => "asymnys",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub rank: usize,
    /// Target `η`; `None` accepts any finite value.
    pub epsilon: Option<f64>,
    pub solvers: Vec<BenchSolver>,
    /// Subsample sizes tried in order by the Nyström solvers (`n_sub = m_sub`,
    /// clipped to the matrix shape).
    pub m_schedule: Vec<usize>,
    pub oversample_schedule: Vec<usize>,
    pub power_iterations: usize,
    pub tsvd_tol: f64,
    pub reference_tol: f64,
    pub seed: u64,
}

impl BenchConfig {
    pub fn new(rank: usize, epsilon: Option<f64>, seed: u64) -> Self {
        let m_schedule = (0..12).map(|k| (2 * rank).max(1) << k).collect();
        Self {
            rank,
            epsilon,
            solvers: vec![BenchSolver::Tsvd, BenchSolver::Rsvd, BenchSolver::SymNys, BenchSolver::AsymNys],
            m_schedule,
            oversample_schedule: vec![5, 10, 20, 40, 80, 160],
            power_iterations: 1,
            tsvd_tol: 1e-8,
            reference_tol: 1e-12,
            seed,
        }
    }
}

/// One attempt of one solver at one knob value. Serialized as one line of the
/// benchmark LDJSON file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchTrial {
    pub solver: String,
    pub n_sub: Option<usize>,
    pub m_sub: Option<usize>,
    pub oversample: Option<usize>,
    pub eta: Option<f64>,
    pub seconds: f64,
    pub seed: u64,
    pub success: bool,
}

/// Per-solver outcome: the first successful trial, or the last failed one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSummary {
    pub solver: String,
    pub success: bool,
    pub n_sub: Option<usize>,
    pub m_sub: Option<usize>,
    pub oversample: Option<usize>,
    pub eta: Option<f64>,
    pub eta_normalized: Option<f64>,
    pub seconds: f64,
    /// `t(rsvd)/t(solver)` when both succeeded.
    pub speedup_vs_rsvd: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rank: usize,
    pub reference_seconds: f64,
    pub trials: Vec<BenchTrial>,
    pub summaries: Vec<SolverSummary>,
}

impl BenchReport {
    pub fn summary(&self, solver: BenchSolver) -> Option<&SolverSummary> {
        self.summaries.iter().find(|s| s.solver == solver.name())
    }

    /// Plain-text table of the summaries.
    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<8} {:>7} {:>7} {:>7} {:>10} {:>12} {:>10} {:>9}\n",
            "solver", "ok", "n_sub", "m_sub", "oversample", "eta", "seconds", "speedup"
        );
        let opt = |v: Option<usize>| v.map_or("-".to_string(), |x| x.to_string());
        for s in &self.summaries {
            out.push_str(&format!(
                "{:<8} {:>7} {:>7} {:>7} {:>10} {:>12} {:>10.4} {:>9}\n",
                s.solver,
                s.success,
                opt(s.n_sub),
                opt(s.m_sub),
                opt(s.oversample),
                s.eta.map_or("-".to_string(), |e| format!("{e:.3e}")),
                s.seconds,
                s.speedup_vs_rsvd.map_or("-".to_string(), |x| format!("{x:.2}x")),
            ));
        }
        out
    }
}

struct Knob {
    n_sub: Option<usize>,
    m_sub: Option<usize>,
    oversample: Option<usize>,
}

/// Runs the escalation benchmark. The reference is a Lanczos SVD at
/// `reference_tol`; a rank-deficient input lowers the benchmark rank to the
/// reference's achieved rank.
pub fn bench<O: MatrixOperator + ?Sized>(op: &O, cfg: &BenchConfig) -> Result<BenchReport> {
    let (n, m) = (op.nrows(), op.ncols());
    let started = Instant::now();
    let reference = truncated_svd(op, cfg.rank, cfg.reference_tol, n.min(m))?;
    let reference_seconds = started.elapsed().as_secs_f64();
    let r = reference.rank();
    if r == 0 {
        return Err(KsvdError::RankDeficient { requested: cfg.rank, achieved: 0, hint: "matrix is numerically zero" });
    }
    if r < cfg.rank {
        info!("reference achieved rank {r} of requested {}", cfg.rank);
    }
    let target = cfg.epsilon.unwrap_or(f64::INFINITY);

    let mut trials = Vec::new();
    let mut summaries = Vec::new();
    for &solver in &cfg.solvers {
        let knobs: Vec<Knob> = match solver {
            BenchSolver::Tsvd => vec![Knob { n_sub: None, m_sub: None, oversample: None }],
            BenchSolver::Rsvd => {
                let mut ps: Vec<usize> = cfg.oversample_schedule.iter().map(|&p| p.min(n.min(m) - r)).collect();
                ps.dedup();
                ps.into_iter().map(|p| Knob { n_sub: None, m_sub: None, oversample: Some(p) }).collect()
            }
            BenchSolver::SymNys | BenchSolver::AsymNys => {
                let mut sizes: Vec<(usize, usize)> = cfg.m_schedule.iter().map(|&s| (s.min(n), s.min(m))).collect();
                sizes.dedup();
                sizes.into_iter().map(|(a, b)| Knob { n_sub: Some(a), m_sub: Some(b), oversample: None }).collect()
            }
        };

        let mut summary = None;
        for knob in &knobs {
            let t0 = Instant::now();
            let out: Result<SvdResult> = match solver {
                BenchSolver::Tsvd => truncated_svd(op, r, cfg.tsvd_tol, n.min(m)),
                BenchSolver::Rsvd => randomized_svd(op, r, knob.oversample.unwrap(), cfg.power_iterations, cfg.seed),
                BenchSolver::SymNys => sym_nystrom_svd(op, knob.n_sub.unwrap(), r, cfg.seed),
                BenchSolver::AsymNys => {
                    asym_nystrom(op, knob.n_sub.unwrap(), knob.m_sub.unwrap(), r, cfg.seed).map(|x| x.into_svd())
                }
            };
            let seconds = t0.elapsed().as_secs_f64();
            let scores = out.and_then(|res| {
                let e = eta(&reference.u, &reference.s, &reference.v, &res.u, &res.v)?;
                let en = eta_normalized(&reference.u, &reference.s, &reference.v, &res.u, &res.v)?;
                Ok((e, en))
            });
            let (eta_value, eta_norm) = match scores {
                Ok((e, en)) => (Some(e), Some(en)),
                Err(err) => {
                    debug!("{} trial failed: {err}", solver.name());
                    (None, None)
                }
            };
            let success = eta_value.is_some_and(|e| e.is_finite() && e <= target);
            trials.push(BenchTrial {
                solver: solver.name().to_string(),
                n_sub: knob.n_sub,
                m_sub: knob.m_sub,
                oversample: knob.oversample,
                eta: eta_value,
                seconds,
                seed: cfg.seed,
                success,
            });
            summary = Some(SolverSummary {
                solver: solver.name().to_string(),
                success,
                n_sub: knob.n_sub,
                m_sub: knob.m_sub,
                oversample: knob.oversample,
                eta: eta_value,
                eta_normalized: eta_norm,
                seconds,
                speedup_vs_rsvd: None,
            });
            if success {
                break;
            }
        }
        summaries.extend(summary);
    }

    let rsvd_time = summaries.iter().find(|s| s.solver == BenchSolver::Rsvd.name() && s.success).map(|s| s.seconds);
    if let Some(t) = rsvd_time {
        for s in summaries.iter_mut().filter(|s| s.success) {
            s.speedup_vs_rsvd = Some(t / s.seconds.max(f64::MIN_POSITIVE));
        }
    }
    Ok(BenchReport { rank: r, reference_seconds, trials, summaries })
}

/// `G = U·diag(ρ^i)·Vᵀ` with random orthonormal `U`, `V` and `λ₁ = 1`, keeping
/// the `min(N, M, ⌊ln 10⁻¹⁶ / ln ρ⌋ + 1)` terms above double precision.
pub fn synthetic_spectrum_matrix(n: usize, m: usize, ratio: f64, seed: u64) -> Result<DMatrix<f64>> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(KsvdError::InvalidParameter(format!("decay ratio must lie in (0, 1), got {ratio}")));
    }
    let terms = ((1e-16f64).ln() / ratio.ln()).floor() as usize + 1;
    let k = terms.min(n).min(m);
    let u = orthonormal_basis(gaussian_matrix(n, k, seed));
    let v = orthonormal_basis(gaussian_matrix(m, k, seed.wrapping_add(1)));
    let spectrum = DVector::from_fn(k, |i, _| ratio.powi(i as i32));
    Ok(u * DMatrix::from_diagonal(&spectrum) * v.transpose())
}
