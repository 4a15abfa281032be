//! Downstream evaluation: classification, graph reconstruction, biclustering and
//! linear heads on top of the fitted factors.

pub mod bicluster;
pub mod coherence;
pub mod graph;
pub mod head;
pub mod kmeans;
pub mod lssvm;
pub mod metrics;

pub use bicluster::{bicluster, BiclusterConfig, BiclusterReport};
pub use coherence::coherence;
pub use graph::{evaluate_graph, graph_embed, graph_reconstruct, GraphEvalConfig, GraphReport};
pub use head::{linear_head, HeadFit, LinearHead, Targets, Task};
pub use kmeans::{kmeans, ClusterAssignment};
pub use lssvm::{lssvm_fit, LssvmModel};
pub use metrics::{f1_scores, nmi, recon_error};

use serde::{Deserialize, Serialize};

/// Flat metric record, one JSON object per line in metric reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub task: String,
    pub metric_name: String,
    pub value: f64,
    pub seed: u64,
    pub config_hash: String,
}
