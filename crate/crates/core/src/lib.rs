//! Asymmetric kernel SVD.
//!
//! Fits the coupled covariances eigenproblem by a rank-`r` SVD of the asymmetric
//! Gram matrix `G[i, j] = κ(x_i, z_j) / √(nm)` between a row-sample set `X` and a
//! column-sample set `Z`, and approximates its singular vectors from subsamples
//! with an asymmetric Nyström extension.
//!
//! Module map:
//!
//! * [`kernels`]: kernel families (linear, RBF, polynomial, SNE), Gram assembly,
//!   double centering and an entry-on-demand kernel operator.
//! * [`compat`]: compatibility matrices reconciling row and column dimensions of
//!   rectangular data, including the learnable variant.
//! * [`cce`]: the fitted model, residual checks and out-of-sample projections.
//! * [`solvers`]: dense, Lanczos, randomized, symmetric and asymmetric Nyström
//!   solvers, the `η` accuracy metric and the benchmark harness.
//! * [`downstream`]: LSSVM, F1, graph reconstruction, k-means, NMI, coherence and
//!   linear heads.
//! * [`io`]: CSV, edge-list and JSON report formats.

pub mod cce;
pub mod compat;
pub mod data;
pub mod downstream;
pub mod error;
pub mod io;
pub mod kernels;
pub mod linalg;
pub mod solvers;

pub use cce::{fit, fit_with_matrix, EmbeddingSide, Embeddings, FitOptions, KsvdModel};
pub use compat::{CompatMatrix, CompatSide, CompatStrategy, LearnableConfig};
pub use data::DataMatrix;
pub use error::{KsvdError, Result};
pub use kernels::{GramMatrix, KernelSpec, LazyKernelOperator};
pub use solvers::{SolverChoice, SvdResult};
