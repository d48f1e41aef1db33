//! Graph representation and modularity machinery.
//!
//! Dense storage throughout; the networks in scope are small to moderate
//! (n up to a few thousand). All types are immutable after construction and
//! all operations are pure, so they are safe to share across bootstrap
//! workers.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("graph has no edges; modularity is undefined")]
    EmptyGraph,
    #[error("self-loop on vertex {0} is not allowed")]
    SelfLoop(usize),
    #[error("vertex id {id} out of range for n = {n}")]
    IdOutOfRange { id: usize, n: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("vertex subset is empty")]
    EmptySubset,
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
}

/// Symmetric binary adjacency matrix of an undirected simple graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    n: usize,
    entries: Vec<u8>,
}

impl AdjacencyMatrix {
    /// Edgeless graph on `n` vertices.
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            entries: vec![0; n * n],
        }
    }

    /// Build from an edge list. Duplicate edges collapse; self-loops and
    /// out-of-range ids are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut a = Self::empty(n);
        for &(u, v) in edges {
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            for id in [u, v] {
                if id >= n {
                    return Err(GraphError::IdOutOfRange { id, n });
                }
            }
            a.entries[u * n + v] = 1;
            a.entries[v * n + u] = 1;
        }
        Ok(a)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.entries[u * self.n + v] != 0
    }

    /// Degree of every vertex.
    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n)
            .map(|u| {
                self.entries[u * self.n..(u + 1) * self.n]
                    .iter()
                    .map(|&e| e as usize)
                    .sum()
            })
            .collect()
    }

    /// Number of edges m.
    pub fn edge_count(&self) -> usize {
        self.degrees().iter().sum::<usize>() / 2
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.n {
            for v in (u + 1)..self.n {
                if self.has_edge(u, v) {
                    out.push((u, v));
                }
            }
        }
        out
    }
}

/// Assignment of `n` vertices to communities labeled 1..=K.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    /// All vertices in a single community.
    pub fn single(n: usize) -> Self {
        Self {
            labels: vec![1; n],
            k: 1,
        }
    }

    /// Validate that every label in 1..=K appears at least once.
    pub fn new(labels: Vec<usize>) -> Result<Self, GraphError> {
        let n = labels.len();
        let k = *labels
            .iter()
            .max()
            .ok_or_else(|| GraphError::InvalidPartition("empty label vector".into()))?;
        if k > n {
            return Err(GraphError::InvalidPartition(format!("K = {k} > n = {n}")));
        }
        let mut seen = vec![false; k + 1];
        for &l in &labels {
            if l == 0 || l > k {
                return Err(GraphError::InvalidPartition(format!(
                    "label {l} outside 1..={k}"
                )));
            }
            seen[l] = true;
        }
        if let Some(missing) = (1..=k).find(|&l| !seen[l]) {
            return Err(GraphError::InvalidPartition(format!(
                "label {missing} has no members"
            )));
        }
        Ok(Self { labels, k })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Member vertex indices per community, indexed by label - 1.
    pub fn communities(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (v, &l) in self.labels.iter().enumerate() {
            out[l - 1].push(v);
        }
        out
    }

    /// Split community `label` by a sign vector over its members (indexed in
    /// ascending vertex order). The +1 side keeps `label`; the -1 side
    /// becomes community K+1. Both sides must be non-empty.
    pub fn split(&self, label: usize, signs: &[i8]) -> Result<Self, GraphError> {
        let members: Vec<usize> = self
            .labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == label)
            .map(|(v, _)| v)
            .collect();
        if members.len() != signs.len() {
            return Err(GraphError::DimensionMismatch {
                expected: members.len(),
                got: signs.len(),
            });
        }
        if signs.iter().all(|&s| s > 0) || signs.iter().all(|&s| s < 0) {
            return Err(GraphError::InvalidPartition(
                "split leaves one side empty".into(),
            ));
        }
        let mut labels = self.labels.clone();
        for (&v, &s) in members.iter().zip(signs) {
            if s < 0 {
                labels[v] = self.k + 1;
            }
        }
        Ok(Self {
            labels,
            k: self.k + 1,
        })
    }
}

/// Modularity matrix B with B_uv = A_uv - k_u k_v / (2m).
#[derive(Debug, Clone)]
pub struct ModularityMatrix {
    values: DMatrix<f64>,
    two_m: f64,
}

impl ModularityMatrix {
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn two_m(&self) -> f64 {
        self.two_m
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }
}

/// Build the modularity matrix. Errors when the graph has no edges, since
/// the definition divides by 2m.
pub fn modularity_matrix(a: &AdjacencyMatrix) -> Result<ModularityMatrix, GraphError> {
    let n = a.n();
    let degrees = a.degrees();
    let two_m: f64 = degrees.iter().sum::<usize>() as f64;
    if two_m == 0.0 {
        return Err(GraphError::EmptyGraph);
    }
    let mut values = DMatrix::zeros(n, n);
    for u in 0..n {
        for v in 0..n {
            let adj = if a.has_edge(u, v) { 1.0 } else { 0.0 };
            values[(u, v)] = adj - degrees[u] as f64 * degrees[v] as f64 / two_m;
        }
    }
    Ok(ModularityMatrix { values, two_m })
}

/// Q = s^T B s / (4m) for a sign vector s over all vertices.
pub fn bisection_modularity(bmat: &ModularityMatrix, signs: &[i8]) -> Result<f64, GraphError> {
    quadratic_score(bmat.values(), bmat.two_m(), signs)
}

/// delta Q = s^T B^(j) s / (4m) for a generalized (restricted) matrix.
pub fn additional_modularity(bj: &ModularityMatrix, signs: &[i8]) -> Result<f64, GraphError> {
    quadratic_score(bj.values(), bj.two_m(), signs)
}

pub(crate) fn quadratic_score(
    values: &DMatrix<f64>,
    two_m: f64,
    signs: &[i8],
) -> Result<f64, GraphError> {
    let n = values.nrows();
    if signs.len() != n {
        return Err(GraphError::DimensionMismatch {
            expected: n,
            got: signs.len(),
        });
    }
    let s = DVector::from_iterator(n, signs.iter().map(|&x| x as f64));
    let quad = s.dot(&(values * &s));
    Ok(quad / (2.0 * two_m))
}

/// Total modularity of a multi-community partition, Kronecker-delta form:
/// Q = (1/2m) sum_{u,v} (A_uv - k_u k_v / 2m) 1[c_u = c_v].
pub fn partition_modularity(a: &AdjacencyMatrix, p: &Partition) -> Result<f64, GraphError> {
    if p.n() != a.n() {
        return Err(GraphError::DimensionMismatch {
            expected: a.n(),
            got: p.n(),
        });
    }
    let degrees = a.degrees();
    let two_m: f64 = degrees.iter().sum::<usize>() as f64;
    if two_m == 0.0 {
        return Err(GraphError::EmptyGraph);
    }
    let mut q = 0.0;
    for members in p.communities() {
        let mut internal_pairs = 0usize;
        let mut degree_sum = 0.0;
        for (i, &u) in members.iter().enumerate() {
            degree_sum += degrees[u] as f64;
            for &v in &members[i + 1..] {
                if a.has_edge(u, v) {
                    internal_pairs += 1;
                }
            }
        }
        // Ordered within-community adjacency sum is 2 * internal edges.
        q += 2.0 * internal_pairs as f64 - degree_sum * degree_sum / two_m;
    }
    Ok(q / two_m)
}

/// Restrict B to one community with the diagonal correction
/// B^(j)_uv = B_uv - delta_uv * sum_{l in j} B_ul, so further subdivision of
/// that community contributes delta Q directly.
pub fn generalized_modularity_matrix(
    bmat: &ModularityMatrix,
    members: &[usize],
) -> Result<ModularityMatrix, GraphError> {
    if members.is_empty() {
        return Err(GraphError::EmptySubset);
    }
    let nj = members.len();
    let mut values = DMatrix::zeros(nj, nj);
    for (i, &u) in members.iter().enumerate() {
        let row_sum: f64 = members.iter().map(|&l| bmat.values[(u, l)]).sum();
        for (j, &v) in members.iter().enumerate() {
            values[(i, j)] = bmat.values[(u, v)] - if i == j { row_sum } else { 0.0 };
        }
    }
    Ok(ModularityMatrix {
        values,
        two_m: bmat.two_m,
    })
}


#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Two triangles {0,1,2} and {3,4,5} joined by the edge 2-3.
    pub fn barbell() -> AdjacencyMatrix {
        AdjacencyMatrix::from_edges(6, &[(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5), (2, 3)])
            .unwrap()
    }

    pub fn triangle() -> AdjacencyMatrix {
        AdjacencyMatrix::from_edges(3, &[(0, 1), (0, 2), (1, 2)]).unwrap()
    }
}
