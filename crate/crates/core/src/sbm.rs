//! Stochastic block model: parameterization, generation, and fitting.
//!
//! Generation is the parametric-bootstrap null and the simulation engine.
//! Edges are sampled row-major over the upper triangle from a ChaCha stream
//! seeded per instance, so a given seed always yields the same network
//! regardless of how many worker threads are active elsewhere.

use crate::graph::{AdjacencyMatrix, GraphError, Partition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SbmError {
    #[error("eps = {0} outside [0, 0.5]")]
    InvalidEps(f64),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("partition has an empty block")]
    DegeneratePartition,
}

/// Block sizes and a symmetric K x K edge-probability matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SbmParams {
    block_sizes: Vec<usize>,
    /// Row-major K x K, symmetric, entries in [0, 1].
    p: Vec<f64>,
}

impl SbmParams {
    pub fn new(block_sizes: Vec<usize>, p: Vec<Vec<f64>>) -> Result<Self, SbmError> {
        let k = block_sizes.len();
        if k == 0 || block_sizes.contains(&0) {
            return Err(SbmError::InvalidParams(
                "block sizes must be positive".into(),
            ));
        }
        if p.len() != k || p.iter().any(|row| row.len() != k) {
            return Err(SbmError::InvalidParams(format!(
                "probability matrix must be {k} x {k}"
            )));
        }
        let mut flat = vec![0.0; k * k];
        for a in 0..k {
            for b in 0..k {
                let v = p[a][b];
                if !(0.0..=1.0).contains(&v) {
                    return Err(SbmError::InvalidParams(format!(
                        "P[{a}][{b}] = {v} outside [0, 1]"
                    )));
                }
                if (v - p[b][a]).abs() > 1e-12 {
                    return Err(SbmError::InvalidParams("P must be symmetric".into()));
                }
                flat[a * k + b] = v;
            }
        }
        Ok(Self {
            block_sizes,
            p: flat,
        })
    }

    pub fn k(&self) -> usize {
        self.block_sizes.len()
    }

    pub fn n(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn prob(&self, a: usize, b: usize) -> f64 {
        self.p[a * self.k() + b]
    }

    /// Planted partition implied by the block sizes: the first blocks'
    /// vertices come first.
    pub fn planted_partition(&self) -> Partition {
        let mut labels = Vec::with_capacity(self.n());
        for (i, &size) in self.block_sizes.iter().enumerate() {
            labels.extend(std::iter::repeat_n(i + 1, size));
        }
        Partition::new(labels).expect("block sizes are positive")
    }
}

/// Planted-partition parameters: within-block probability 0.5 + eps,
/// between-block 0.5 - eps, balanced blocks. When K does not divide n the
/// first n mod K blocks get one extra vertex.
pub fn planted_params(k: usize, n: usize, eps: f64) -> Result<SbmParams, SbmError> {
    if !(0.0..=0.5).contains(&eps) {
        return Err(SbmError::InvalidEps(eps));
    }
    if k == 0 || n < k {
        return Err(SbmError::InvalidParams(format!("need 1 <= K = {k} <= n = {n}")));
    }
    let base = n / k;
    let extra = n % k;
    let block_sizes: Vec<usize> = (0..k).map(|i| base + usize::from(i < extra)).collect();
    let p: Vec<Vec<f64>> = (0..k)
        .map(|a| {
            (0..k)
                .map(|b| if a == b { 0.5 + eps } else { 0.5 - eps })
                .collect()
        })
        .collect();
    SbmParams::new(block_sizes, p)
}

/// Sample an SBM instance. Deterministic given the seed; returns the graph
/// together with the planted partition.
pub fn generate(params: &SbmParams, seed: u64) -> (AdjacencyMatrix, Partition) {
    let partition = params.planted_partition();
    let labels = partition.labels();
    let n = params.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let p = params.prob(labels[u] - 1, labels[v] - 1);
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    let a = AdjacencyMatrix::from_edges(n, &edges).expect("sampled pairs are valid");
    (a, partition)
}

/// Fit block edge probabilities from an observed partition with Laplace
/// smoothing: P[a][b] = (E_ab + 1) / (N_ab + 2). Smoothing keeps the fitted
/// probabilities strictly inside (0, 1) so the bootstrap null can always
/// reproduce observed statistics.
pub fn fit_from_partition(a: &AdjacencyMatrix, p: &Partition) -> Result<SbmParams, SbmError> {
    if p.n() != a.n() {
        return Err(SbmError::InvalidParams(format!(
            "partition over {} vertices, graph has {}",
            p.n(),
            a.n()
        )));
    }
    let communities = p.communities();
    if communities.iter().any(|c| c.is_empty()) {
        return Err(SbmError::DegeneratePartition);
    }
    let k = communities.len();
    let sizes: Vec<usize> = communities.iter().map(|c| c.len()).collect();
    let mut edge_counts = vec![0usize; k * k];
    for (u, v) in a.edges() {
        let (bu, bv) = (p.labels()[u] - 1, p.labels()[v] - 1);
        edge_counts[bu * k + bv] += 1;
        if bu != bv {
            edge_counts[bv * k + bu] += 1;
        }
    }
    let prob: Vec<Vec<f64>> = (0..k)
        .map(|x| {
            (0..k)
                .map(|y| {
                    let pairs = if x == y {
                        sizes[x] * (sizes[x] - 1) / 2
                    } else {
                        sizes[x] * sizes[y]
                    };
                    (edge_counts[x * k + y] as f64 + 1.0) / (pairs as f64 + 2.0)
                })
                .collect()
        })
        .collect();
    SbmParams::new(sizes, prob).map_err(|e| SbmError::InvalidParams(e.to_string()))
}

impl From<GraphError> for SbmError {
    fn from(e: GraphError) -> Self {
        SbmError::InvalidParams(e.to_string())
    }
}
