//! Executes a resolved [`RunConfig`] and writes its output files.

use std::fs;
use std::path::Path;
use std::time::Instant;

use ksvd::compat::{learn_compat, projection_for};
use ksvd::downstream::{bicluster, evaluate_graph, BiclusterConfig, GraphEvalConfig, MetricRecord, Targets};
use ksvd::kernels::auto_gamma;
use ksvd::solvers::bench::{bench, synthetic_spectrum_matrix, BenchConfig, BenchSolver};
use ksvd::{
    io, CompatMatrix, CompatSide, CompatStrategy, DataMatrix, EmbeddingSide, FitOptions, KernelSpec, KsvdError,
    KsvdModel, LazyKernelOperator, LearnableConfig, Result, SolverChoice,
};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{CommandKind, RunConfig};

/// Summary of a fitted model, written to `<out>.fit.json`.
#[derive(Serialize)]
struct FitSummary<'a> {
    kernel: &'a KernelSpec,
    solver: &'static str,
    rank: usize,
    requested_rank: usize,
    lambdas: Vec<f64>,
    residual_left: f64,
    residual_right: f64,
    converged: bool,
    iterations: usize,
    centered: bool,
    compat_side: Option<&'static str>,
}

/// Short SHA-256 of the config JSON. The output prefix is left out, so a replay
/// into another location reports the same hash.
pub fn config_hash(cfg: &RunConfig) -> String {
    let keyed = RunConfig { out: String::new(), ..cfg.clone() };
    let digest = Sha256::digest(keyed.to_json().as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

pub fn execute(cfg: &RunConfig) -> Result<()> {
    let json = cfg.to_json();
    println!("{json}");
    write_text(&format!("{}.config.json", cfg.out), &format!("{json}\n"))?;
    let started = Instant::now();
    match cfg.command {
        CommandKind::Embed => run_embed(cfg)?,
        CommandKind::Graph => run_graph(cfg)?,
        CommandKind::Bicluster => run_bicluster(cfg)?,
        CommandKind::Bench => run_bench(cfg)?,
    }
    eprintln!("elapsed: {:.3}s", started.elapsed().as_secs_f64());
    Ok(())
}

fn write_text(path: &str, text: &str) -> Result<()> {
    if let Some(dir) = Path::new(path).parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| KsvdError::Io { path: dir.to_path_buf(), source: e })?;
        }
    }
    fs::write(path, text).map_err(|e| KsvdError::Io { path: path.into(), source: e })
}

fn write_json<T: Serialize>(path: &str, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| KsvdError::Data(e.to_string()))?;
    write_text(path, &format!("{text}\n"))
}

fn input_path(cfg: &RunConfig) -> Result<&str> {
    cfg.input.as_deref().ok_or_else(|| KsvdError::InvalidParameter("--input is required".into()))
}

fn load_matrix(cfg: &RunConfig) -> Result<DataMatrix> {
    let path = input_path(cfg)?;
    match cfg.format.as_str() {
        "edges" => io::load_edge_list(path, cfg.nodes),
        _ => io::load_dense_csv(path),
    }
}

fn load_labels(path: &Option<String>) -> Result<Option<Vec<usize>>> {
    path.as_deref().map(io::load_labels).transpose()
}

fn load_values(path: &str) -> Result<Vec<f64>> {
    let m = io::load_dense_csv(path)?;
    if m.ncols() != 1 {
        return Err(KsvdError::Data(format!("{path}: expected one value per line, found {} columns", m.ncols())));
    }
    Ok(m.as_slice().to_vec())
}

/// Resolves the kernel. `auto` bandwidths use the row samples and the number of
/// column samples.
fn kernel_spec(cfg: &RunConfig, x: &DataMatrix, column_samples: usize) -> Result<KernelSpec> {
    let gamma = || -> Result<f64> {
        match cfg.gamma.as_str() {
            "auto" => auto_gamma(x, column_samples, cfg.gamma_k),
            s => s.parse::<f64>().map_err(|_| KsvdError::InvalidParameter(format!("gamma {s:?} is not a number"))),
        }
    };
    let spec = match cfg.kernel.as_str() {
        "linear" => KernelSpec::Linear,
        "rbf" => KernelSpec::Rbf { gamma: gamma()? },
        "sne" => KernelSpec::Sne { gamma: gamma()? },
        "poly" => KernelSpec::Polynomial { degree: cfg.degree, offset: cfg.offset },
        k => return Err(KsvdError::InvalidParameter(format!("unknown kernel {k:?}"))),
    };
    spec.validate()?;
    Ok(spec)
}

fn solver_choice(cfg: &RunConfig, n: usize, m: usize) -> Result<SolverChoice> {
    let n_sub = cfg.nsub.unwrap_or_else(|| n.min(10 * cfg.rank));
    Ok(match cfg.solver.as_str() {
        "dense" => SolverChoice::Dense,
        "tsvd" => SolverChoice::Truncated { tol: cfg.tol, max_iter: cfg.max_iter },
        "rsvd" => SolverChoice::Randomized { oversample: cfg.oversample, power: cfg.power, seed: cfg.seed },
        "symnys" => SolverChoice::SymNystrom { n_sub, seed: cfg.seed },
        "asymnys" => {
            SolverChoice::AsymNystrom { n_sub, m_sub: cfg.msub.unwrap_or_else(|| m.min(10 * cfg.rank)), seed: cfg.seed }
        }
        s => return Err(KsvdError::InvalidParameter(format!("unknown solver {s:?}"))),
    })
}

fn fit_options(cfg: &RunConfig, n: usize, m: usize) -> Result<FitOptions> {
    Ok(FitOptions::new(cfg.rank).centered(cfg.center).with_solver(solver_choice(cfg, n, m)?))
}

fn learnable(cfg: &RunConfig) -> LearnableConfig {
    LearnableConfig {
        rank_r: cfg.rank,
        outer_iterations: cfg.a3_outer,
        steps: cfg.a3_steps,
        learning_rate: cfg.a3_lr,
        seed: cfg.seed,
        ..LearnableConfig::default()
    }
}

fn compat_strategy(cfg: &RunConfig) -> Option<CompatStrategy> {
    cfg.compat.as_deref().map(|c| match c {
        "a0" => CompatStrategy::PseudoInverse,
        "a2" => CompatStrategy::RandomProjection { seed: cfg.seed },
        "a3" => CompatStrategy::Learnable(learnable(cfg)),
        _ => CompatStrategy::PcaProjection,
    })
}

/// Row and column samples: `--z-input` if given, else the columns of the input.
fn samples(cfg: &RunConfig, a: &DataMatrix) -> Result<(DataMatrix, DataMatrix, bool)> {
    match &cfg.z_input {
        Some(p) => Ok((a.clone(), io::load_dense_csv(p)?, false)),
        None => Ok((a.clone(), a.transpose(), true)),
    }
}

/// The compatibility matrix for `x` against `z`, or `None` when dimensions agree.
fn realize(
    cfg: &RunConfig,
    x: &DataMatrix,
    z: &DataMatrix,
    kernel: &KernelSpec,
    from_columns: bool,
) -> Result<Option<CompatMatrix>> {
    if x.ncols() == z.ncols() {
        return Ok(None);
    }
    let strategy = compat_strategy(cfg).ok_or_else(|| {
        KsvdError::InvalidParameter(format!(
            "row samples have dimension {} and column samples {}; pass --compat",
            x.ncols(),
            z.ncols()
        ))
    })?;
    if let CompatStrategy::Learnable(lc) = &strategy {
        if !from_columns {
            return Err(KsvdError::InvalidParameter(
                "--compat a3 learns from a single data matrix; drop --z-input".into(),
            ));
        }
        let targets = match (&cfg.targets, &cfg.labels) {
            (Some(t), _) => Targets::Values(load_values(t)?),
            (None, Some(l)) => Targets::Classes(io::load_labels(l)?),
            (None, None) => return Err(KsvdError::InvalidParameter("--compat a3 needs --targets or --labels".into())),
        };
        let learned = learn_compat(x, &targets, kernel, lc)?;
        log::info!("a3 loss history: {:?}", learned.loss_history);
        return Ok(Some(learned.compat));
    }
    Ok(Some(if x.ncols() > z.ncols() {
        CompatMatrix { c: projection_for(&strategy, &x.to_dmatrix(), z.ncols())?, side: CompatSide::Rows }
    } else {
        CompatMatrix { c: projection_for(&strategy, &z.to_dmatrix(), x.ncols())?, side: CompatSide::Columns }
    }))
}

fn fit_summary<'a>(model: &'a KsvdModel, solver: &'static str) -> FitSummary<'a> {
    let (r1, r2) = model.residuals();
    FitSummary {
        kernel: &model.kernel,
        solver,
        rank: model.rank(),
        requested_rank: model.requested_rank,
        lambdas: model.lambdas.iter().copied().collect(),
        residual_left: r1,
        residual_right: r2,
        converged: model.status.converged,
        iterations: model.status.iterations,
        centered: model.is_centered(),
        compat_side: model.compat.as_ref().map(|c| match c.side {
            CompatSide::Rows => "rows",
            CompatSide::Columns => "columns",
        }),
    }
}

/// Left and right factors, plus their concatenation when the sample counts match.
fn write_embeddings(cfg: &RunConfig, model: &KsvdModel) -> Result<()> {
    let mut sides = vec![(EmbeddingSide::Left, "left"), (EmbeddingSide::Right, "right")];
    if model.b_phi.nrows() == model.b_psi.nrows() {
        sides.push((EmbeddingSide::Concatenated, "concat"));
    }
    for (side, suffix) in sides {
        io::save_embeddings(format!("{}.{suffix}.csv", cfg.out), &model.embeddings(side)?)?;
    }
    Ok(())
}

fn write_fit(cfg: &RunConfig, model: &KsvdModel, solver: &'static str) -> Result<()> {
    write_json(&format!("{}.fit.json", cfg.out), &fit_summary(model, solver))
}

fn run_embed(cfg: &RunConfig) -> Result<()> {
    let a = load_matrix(cfg)?;
    let (x, z, from_columns) = samples(cfg, &a)?;
    let kernel = kernel_spec(cfg, &x, z.nrows())?;
    let compat = realize(cfg, &x, &z, &kernel, from_columns)?;
    let opts = fit_options(cfg, x.nrows(), z.nrows())?;
    let model = ksvd::fit_with_matrix(&x, &z, &kernel, compat, &opts)?;
    write_embeddings(cfg, &model)?;
    write_fit(cfg, &model, opts.solver.name())
}

fn metric(cfg: &RunConfig, task: &str, name: &str, value: f64) -> MetricRecord {
    MetricRecord {
        task: task.to_string(),
        metric_name: name.to_string(),
        value,
        seed: cfg.seed,
        config_hash: config_hash(cfg),
    }
}

fn run_graph(cfg: &RunConfig) -> Result<()> {
    let adj = load_matrix(cfg)?;
    let labels = load_labels(&cfg.labels)?;
    let kernel = kernel_spec(cfg, &adj, adj.nrows())?;
    let fit = fit_options(cfg, adj.nrows(), adj.ncols())?;
    let solver = fit.solver.name();
    let eval = GraphEvalConfig {
        kernel,
        fit,
        gamma_reg: 1.0,
        train_fraction: cfg.train_fraction,
        trials: cfg.trials,
        seed: cfg.seed,
    };
    let (model, report) = evaluate_graph(&adj, labels.as_deref(), &eval)?;
    write_embeddings(cfg, &model)?;
    write_fit(cfg, &model, solver)?;
    let mut records = Vec::new();
    if let (Some(mi), Some(ma)) = (report.micro_f1, report.macro_f1) {
        records.push(metric(cfg, "node_classification", "micro_f1", mi));
        records.push(metric(cfg, "node_classification", "macro_f1", ma));
    }
    records.push(metric(cfg, "graph_reconstruction", "l1", report.l1));
    records.push(metric(cfg, "graph_reconstruction", "l2", report.l2));
    io::save_report(format!("{}.metrics.jsonl", cfg.out), &records)?;
    write_json(&format!("{}.graph.json", cfg.out), &report)
}

fn run_bicluster(cfg: &RunConfig) -> Result<()> {
    let a = load_matrix(cfg)?;
    let doc_truth = load_labels(&cfg.labels)?;
    let term_truth = load_labels(&cfg.term_labels)?;
    let compat = match compat_strategy(cfg) {
        Some(CompatStrategy::Learnable(_)) => {
            return Err(KsvdError::InvalidParameter("bicluster supports --compat a0, a1 or a2".into()))
        }
        Some(c) => c,
        None => CompatStrategy::PseudoInverse,
    };
    let kernel = kernel_spec(cfg, &a, a.ncols())?;
    let bc = BiclusterConfig {
        kernel,
        fit: fit_options(cfg, a.nrows(), a.ncols())?,
        compat,
        clusters: cfg.clusters,
        seed: cfg.seed,
        max_iter: 300,
        restarts: 10,
    };
    let (_, report) = bicluster(&a, doc_truth.as_deref(), term_truth.as_deref(), &bc)?;
    let lines = |l: &[usize]| l.iter().map(|v| format!("{v}\n")).collect::<String>();
    write_text(&format!("{}.doc_labels.txt", cfg.out), &lines(&report.doc_labels))?;
    write_text(&format!("{}.term_labels.txt", cfg.out), &lines(&report.term_labels))?;
    let mut records = vec![metric(cfg, "bicluster", "coherence", report.coherence)];
    if let Some(v) = report.doc_nmi {
        records.push(metric(cfg, "bicluster", "doc_nmi", v));
    }
    if let Some(v) = report.term_nmi {
        records.push(metric(cfg, "bicluster", "term_nmi", v));
    }
    io::save_report(format!("{}.metrics.jsonl", cfg.out), &records)
}

fn bench_solvers(cfg: &RunConfig) -> Result<Vec<BenchSolver>> {
    cfg.solvers
        .iter()
        .map(|s| match s.as_str() {
            "tsvd" => Ok(BenchSolver::Tsvd),
            "rsvd" => Ok(BenchSolver::Rsvd),
            "symnys" => Ok(BenchSolver::SymNys),
            "asymnys" => Ok(BenchSolver::AsymNys),
            other => Err(KsvdError::InvalidParameter(format!("unknown bench solver {other:?}"))),
        })
        .collect()
}

fn run_bench(cfg: &RunConfig) -> Result<()> {
    let mut bc = BenchConfig::new(cfg.rank, cfg.eps, cfg.seed);
    bc.solvers = bench_solvers(cfg)?;
    bc.power_iterations = cfg.power;
    let report = match cfg.synthetic {
        Some(n) => {
            let g = synthetic_spectrum_matrix(n, n, cfg.ratio, cfg.seed)?;
            bench(&g, &bc)?
        }
        None => {
            let a = load_matrix(cfg)?;
            let (x, z, from_columns) = samples(cfg, &a)?;
            let kernel = kernel_spec(cfg, &x, z.nrows())?;
            let (xe, ze) = match realize(cfg, &x, &z, &kernel, from_columns)? {
                None => (x, z),
                Some(cm) if cm.side == CompatSide::Rows => (cm.apply(&x)?, z),
                Some(cm) => {
                    let ze = cm.apply(&z)?;
                    (x, ze)
                }
            };
            let op = LazyKernelOperator::new(kernel, xe, ze, true)?;
            bench(&op, &bc)?
        }
    };
    io::save_report(format!("{}.bench.jsonl", cfg.out), &report.trials)?;
    write_json(&format!("{}.summary.json", cfg.out), &report)?;
    write_text(&format!("{}.summary.txt", cfg.out), &report.table())?;
    eprint!("{}", report.table());
    Ok(())
}
