//! Input loading: edge lists, adjacency / correlation CSV matrices, and
//! correlation thresholding.
//!
//! Edge-list format: a required first non-comment line `n <count>`, then
//! whitespace-separated `u v` pairs with 0-based ids. Lines starting with
//! `#` are comments. Matrices are square headerless CSV.

use crate::graph::AdjacencyMatrix;
use nalgebra::DMatrix;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("self-loop at line {line}: vertex {vertex}")]
    SelfLoop { line: usize, vertex: usize },
    #[error("vertex id {id} out of range for n = {n} at line {line}")]
    IdOutOfRange { id: usize, n: usize, line: usize },
    #[error("matrix is not square: {rows} rows, row {row} has {cols} columns")]
    NotSquare { rows: usize, row: usize, cols: usize },
    #[error("matrix is not symmetric: max asymmetry {max_asymmetry:.3e} at ({u}, {v})")]
    NotSymmetric { u: usize, v: usize, max_asymmetry: f64 },
    #[error("bad entry at ({u}, {v}): {message}")]
    BadEntry { u: usize, v: usize, message: String },
}

/// Symmetric matrix of pairwise correlations, unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    values: DMatrix<f64>,
}

impl CorrelationMatrix {
    /// Validate symmetry (1e-8), unit diagonal (1e-8), and range [-1, 1].
    pub fn new(values: DMatrix<f64>) -> Result<Self, IngestError> {
        let n = values.nrows();
        for u in 0..n {
            if (values[(u, u)] - 1.0).abs() > 1e-8 {
                return Err(IngestError::BadEntry {
                    u,
                    v: u,
                    message: format!("diagonal entry {} is not 1", values[(u, u)]),
                });
            }
            for v in 0..n {
                let x = values[(u, v)];
                if !(-1.0 - 1e-8..=1.0 + 1e-8).contains(&x) {
                    return Err(IngestError::BadEntry {
                        u,
                        v,
                        message: format!("correlation {x} outside [-1, 1]"),
                    });
                }
            }
        }
        check_symmetry(&values, 1e-8)?;
        Ok(Self { values })
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }
}

fn check_symmetry(values: &DMatrix<f64>, tol: f64) -> Result<(), IngestError> {
    let n = values.nrows();
    let mut worst = (0, 0, 0.0_f64);
    for u in 0..n {
        for v in (u + 1)..n {
            let d = (values[(u, v)] - values[(v, u)]).abs();
            if d > worst.2 {
                worst = (u, v, d);
            }
        }
    }
    if worst.2 > tol {
        return Err(IngestError::NotSymmetric {
            u: worst.0,
            v: worst.1,
            max_asymmetry: worst.2,
        });
    }
    Ok(())
}

fn read_to_string(path: &Path) -> Result<String, IngestError> {
    std::fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Load an edge list file.
pub fn load_edge_list(path: &Path) -> Result<AdjacencyMatrix, IngestError> {
    parse_edge_list(&read_to_string(path)?)
}

pub fn parse_edge_list(text: &str) -> Result<AdjacencyMatrix, IngestError> {
    let mut n: Option<usize> = None;
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match n {
            None => {
                if fields.len() != 2 || fields[0] != "n" {
                    return Err(IngestError::Parse {
                        line: line_no,
                        message: "expected header line \"n <count>\"".into(),
                    });
                }
                n = Some(fields[1].parse().map_err(|_| IngestError::Parse {
                    line: line_no,
                    message: format!("invalid vertex count {:?}", fields[1]),
                })?);
            }
            Some(count) => {
                if fields.len() != 2 {
                    return Err(IngestError::Parse {
                        line: line_no,
                        message: format!("expected \"u v\", got {:?}", line),
                    });
                }
                let parse = |s: &str| {
                    s.parse::<usize>().map_err(|_| IngestError::Parse {
                        line: line_no,
                        message: format!("invalid vertex id {s:?}"),
                    })
                };
                let (u, v) = (parse(fields[0])?, parse(fields[1])?);
                if u == v {
                    return Err(IngestError::SelfLoop {
                        line: line_no,
                        vertex: u,
                    });
                }
                for id in [u, v] {
                    if id >= count {
                        return Err(IngestError::IdOutOfRange {
                            id,
                            n: count,
                            line: line_no,
                        });
                    }
                }
                edges.push((u, v));
            }
        }
    }
    let n = n.ok_or(IngestError::Parse {
        line: 1,
        message: "missing header line \"n <count>\"".into(),
    })?;
    AdjacencyMatrix::from_edges(n, &edges).map_err(|e| IngestError::Parse {
        line: 0,
        message: e.to_string(),
    })
}

fn parse_square_csv(text: &str) -> Result<DMatrix<f64>, IngestError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, _> = line
            .split(',')
            .map(|f| {
                f.trim().parse::<f64>().map_err(|_| IngestError::Parse {
                    line: idx + 1,
                    message: format!("invalid number {:?}", f.trim()),
                })
            })
            .collect();
        rows.push(row?);
    }
    let n = rows.len();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(IngestError::NotSquare {
                rows: n,
                row: i + 1,
                cols: row.len(),
            });
        }
    }
    Ok(DMatrix::from_fn(n, n, |u, v| rows[u][v]))
}

/// Load a square headerless CSV as a validated adjacency matrix
/// (entries in {0, 1}, symmetric, zero diagonal).
pub fn load_adjacency_csv(path: &Path) -> Result<AdjacencyMatrix, IngestError> {
    parse_adjacency_csv(&read_to_string(path)?)
}

pub fn parse_adjacency_csv(text: &str) -> Result<AdjacencyMatrix, IngestError> {
    let values = parse_square_csv(text)?;
    let n = values.nrows();
    check_symmetry(&values, 0.0)?;
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            let x = values[(u, v)];
            if x != 0.0 && x != 1.0 {
                return Err(IngestError::BadEntry {
                    u,
                    v,
                    message: format!("adjacency entry {x} is not 0 or 1"),
                });
            }
            if x == 1.0 && u == v {
                return Err(IngestError::BadEntry {
                    u,
                    v,
                    message: "nonzero diagonal (self-loop)".into(),
                });
            }
            if x == 1.0 && u < v {
                edges.push((u, v));
            }
        }
    }
    Ok(AdjacencyMatrix::from_edges(n, &edges).expect("validated entries"))
}

/// Load a square headerless CSV as a validated correlation matrix.
pub fn load_correlation_csv(path: &Path) -> Result<CorrelationMatrix, IngestError> {
    CorrelationMatrix::new(parse_square_csv(&read_to_string(path)?)?)
}

/// Serialize an adjacency matrix as headerless CSV, the inverse of
/// `parse_adjacency_csv`.
pub fn adjacency_to_csv(a: &AdjacencyMatrix) -> String {
    let n = a.n();
    let mut out = String::new();
    for u in 0..n {
        let row: Vec<&str> = (0..n)
            .map(|v| if a.has_edge(u, v) { "1" } else { "0" })
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Threshold a correlation matrix into an adjacency matrix: edge between
/// u != v iff C[u][v] >= tau (signed comparison). The diagonal is dropped.
pub fn threshold_correlation(c: &CorrelationMatrix, tau: f64) -> AdjacencyMatrix {
    threshold_with(c, |x| x >= tau)
}

/// Absolute-value variant: edge iff |C[u][v]| >= tau. Not the default; the
/// CLI exposes it behind an explicit flag.
pub fn threshold_correlation_abs(c: &CorrelationMatrix, tau: f64) -> AdjacencyMatrix {
    threshold_with(c, |x| x.abs() >= tau)
}

fn threshold_with(c: &CorrelationMatrix, keep: impl Fn(f64) -> bool) -> AdjacencyMatrix {
    let n = c.n();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if keep(c.values()[(u, v)]) {
                edges.push((u, v));
            }
        }
    }
    AdjacencyMatrix::from_edges(n, &edges).expect("no self-loops by construction")
}
