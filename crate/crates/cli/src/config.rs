//! Command-line flags and the serializable run configuration they resolve to.

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(name = "ksvd", version, about = "Asymmetric kernel SVD: embed, evaluate and benchmark")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Fit the model and write left, right and concatenated embeddings.
    Embed(RunArgs),
    /// Embed a directed graph, then report node-classification F1 and reconstruction errors.
    Graph(RunArgs),
    /// Cluster documents and terms of a doc-term matrix; report NMI and coherence.
    Bicluster(RunArgs),
    /// Benchmark the solvers against a tight reference SVD.
    Bench(RunArgs),
    /// Re-run a configuration echoed by an earlier run.
    Replay {
        config: String,
        /// Override the output prefix.
        #[arg(long)]
        out: Option<String>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Embed,
    Graph,
    Bicluster,
    Bench,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Input matrix (CSV) or edge list (graph).
    #[arg(long)]
    pub input: Option<String>,
    /// Column-sample file (CSV); defaults to the columns of --input.
    #[arg(long)]
    pub z_input: Option<String>,
    /// Input format: csv or edges. Graphs default to edges, everything else to csv.
    #[arg(long)]
    pub format: Option<String>,
    /// Row labels, one integer per line.
    #[arg(long)]
    pub labels: Option<String>,
    /// Term (column) labels for biclustering, one integer per line.
    #[arg(long)]
    pub term_labels: Option<String>,
    /// Real-valued regression targets for --compat a3, one per line.
    #[arg(long)]
    pub targets: Option<String>,
    /// Node count for edge lists.
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long, default_value = "rbf", value_parser = ["linear", "rbf", "poly", "sne"])]
    pub kernel: String,
    /// Bandwidth, or "auto" for k·√(M·var(X)) with k = --gamma-k.
    #[arg(long, default_value = "auto")]
    pub gamma: String,
    #[arg(long, default_value_t = 1.0)]
    pub gamma_k: f64,
    #[arg(long, default_value_t = 2)]
    pub degree: u32,
    #[arg(long, default_value_t = 1.0)]
    pub offset: f64,
    #[arg(long, default_value_t = 2)]
    pub rank: usize,
    #[arg(long, value_parser = ["a0", "a1", "a2", "a3"])]
    pub compat: Option<String>,
    #[arg(long, default_value = "dense", value_parser = ["dense", "tsvd", "rsvd", "symnys", "asymnys"])]
    pub solver: String,
    #[arg(long)]
    pub nsub: Option<usize>,
    #[arg(long)]
    pub msub: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub oversample: usize,
    #[arg(long, default_value_t = 1)]
    pub power: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    #[arg(long)]
    pub center: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Benchmark target η, or "inf".
    #[arg(long, default_value = "0.1")]
    pub eps: String,
    #[arg(long, default_value_t = 2)]
    pub clusters: usize,
    #[arg(long, default_value_t = 0.5)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = 5)]
    pub trials: usize,
    /// Benchmark on a synthetic N×N matrix with geometric spectrum instead of --input.
    #[arg(long)]
    pub synthetic: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub ratio: f64,
    /// Comma-separated solvers to benchmark.
    #[arg(long, default_value = "tsvd,rsvd,symnys,asymnys")]
    pub solvers: String,
    /// Learnable compat: outer iterations, gradient steps per iteration, learning rate.
    #[arg(long, default_value_t = 10)]
    pub a3_outer: usize,
    #[arg(long, default_value_t = 20)]
    pub a3_steps: usize,
    #[arg(long, default_value_t = 0.05)]
    pub a3_lr: f64,
    /// Output path prefix.
    #[arg(long)]
    pub out: String,
}

/// Everything a run depends on. Printed as JSON by every run and accepted by
/// `ksvd replay`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub input: Option<String>,
    pub z_input: Option<String>,
    pub format: String,
    pub labels: Option<String>,
    pub term_labels: Option<String>,
    pub targets: Option<String>,
    pub nodes: Option<usize>,
    pub kernel: String,
    pub gamma: String,
    pub gamma_k: f64,
    pub degree: u32,
    pub offset: f64,
    pub rank: usize,
    pub compat: Option<String>,
    pub solver: String,
    pub nsub: Option<usize>,
    pub msub: Option<usize>,
    pub oversample: usize,
    pub power: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub center: bool,
    pub seed: u64,
    /// `None` is an infinite target.
    pub eps: Option<f64>,
    pub clusters: usize,
    pub train_fraction: f64,
    pub trials: usize,
    pub synthetic: Option<usize>,
    pub ratio: f64,
    pub solvers: Vec<String>,
    pub a3_outer: usize,
    pub a3_steps: usize,
    pub a3_lr: f64,
    pub out: String,
}

impl RunConfig {
    pub fn from_args(command: CommandKind, a: RunArgs) -> Result<Self, String> {
        let eps = match a.eps.trim() {
            "inf" | "infinity" | "∞" => None,
            s => Some(s.parse::<f64>().map_err(|_| format!("--eps: cannot parse {s:?}"))?),
        };
        if a.gamma != "auto" && a.gamma.parse::<f64>().is_err() {
            return Err(format!("--gamma must be a number or \"auto\", got {:?}", a.gamma));
        }
        let default_format = if command == CommandKind::Graph { "edges" } else { "csv" };
        let format = a.format.unwrap_or_else(|| default_format.to_string());
        if format != "csv" && format != "edges" {
            return Err(format!("--format must be csv or edges, got {format:?}"));
        }
        let compat = match (command, a.compat) {
            (CommandKind::Bicluster, None) => Some("a0".to_string()),
            (_, c) => c,
        };
        let solvers = a.solvers.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
        Ok(Self {
            command,
            input: a.input,
            z_input: a.z_input,
            format,
            labels: a.labels,
            term_labels: a.term_labels,
            targets: a.targets,
            nodes: a.nodes,
            kernel: a.kernel,
            gamma: a.gamma,
            gamma_k: a.gamma_k,
            degree: a.degree,
            offset: a.offset,
            rank: a.rank,
            compat,
            solver: a.solver,
            nsub: a.nsub,
            msub: a.msub,
            oversample: a.oversample,
            power: a.power,
            tol: a.tol,
            max_iter: a.max_iter,
            center: a.center,
            seed: a.seed,
            eps,
            clusters: a.clusters,
            train_fraction: a.train_fraction,
            trials: a.trials,
            synthetic: a.synthetic,
            ratio: a.ratio,
            solvers,
            a3_outer: a.a3_outer,
            a3_steps: a.a3_steps,
            a3_lr: a.a3_lr,
            out: a.out,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
