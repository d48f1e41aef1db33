//! Sequential community detection with a calibrated significance level.
//!
//! The toolkit estimates the number of communities in an undirected network
//! by sequentially testing H0: K = j against K > j on the modularity gain of
//! the next spectral subdivision, with a parametric-bootstrap null drawn from
//! a stochastic block model fitted to the current partition. On top of that
//! it selects the nominal significance level alpha so that the ratio of
//! underfitting to overfitting probability matches a user-specified
//! tolerance ratio.
//!
//! Modules:
//! - [`graph`]: adjacency matrices, partitions, modularity matrices and scores
//! - [`spectral`]: leading-eigenpair power iteration and sign-vector bisection
//! - [`sbm`]: stochastic block model parameterization, generation, and fitting
//! - [`detect`]: the sequential test, p-values, and the alpha step function
//! - [`alpha`]: the tolerance-ratio curve and significance-level calibration
//! - [`ingest`]: edge-list / CSV loaders and correlation thresholding
//! - [`report`]: serializable run reports for the CLI

pub mod alpha;
pub mod cli;
pub mod detect;
pub mod graph;
pub mod ingest;
pub mod report;
pub mod sbm;
pub mod seeding;
pub mod spectral;

pub use graph::{AdjacencyMatrix, GraphError, ModularityMatrix, Partition};
pub use sbm::SbmParams;
