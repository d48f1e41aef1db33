//! Sequential testing engine: recursive modularity subdivision, bootstrap
//! null distributions of the modularity gain, p-values, K-hat as a function
//! of alpha, and the exact alpha step function.

use crate::graph::{
    generalized_modularity_matrix, modularity_matrix, partition_modularity, AdjacencyMatrix,
    GraphError, Partition,
};
use crate::sbm::{self, SbmParams, SbmError};
use crate::seeding::{derive_seed, phase};
use crate::spectral::{bisect, default_max_iter, SpectralError, DEFAULT_TOL};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("no community admits a modularity-improving split")]
    Indivisible,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Sbm(#[from] SbmError),
}

/// Spectral solver settings shared by every division in a run.
#[derive(Debug, Clone, Copy)]
pub struct DetectConfig {
    pub tol: f64,
    pub max_iter_base: usize,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter_base: 0,
        }
    }
}

impl DetectConfig {
    fn max_iter(&self, n: usize) -> usize {
        if self.max_iter_base == 0 {
            default_max_iter(n)
        } else {
            self.max_iter_base
        }
    }
}

/// One stage of the sequential test: the j-community partition, the observed
/// gain of the next split, its bootstrap null sample, and the p-value.
#[derive(Debug, Clone)]
pub struct Stage {
    pub community_count: usize,
    pub partition: Partition,
    pub observed_gain: f64,
    pub null_samples: Vec<f64>,
    pub p_value: f64,
    /// True when no admissible split existed at this stage; the p-value is
    /// then the sentinel 1.
    pub indivisible: bool,
}

/// Full record of a sequential detection run, independent of alpha.
#[derive(Debug, Clone)]
pub struct DetectionTrace {
    pub n: usize,
    pub k_max: usize,
    pub stages: Vec<Stage>,
}

impl DetectionTrace {
    pub fn p_values(&self) -> Vec<f64> {
        self.stages.iter().map(|s| s.p_value).collect()
    }
}

/// Split the community whose best bisection gains the most, going from j to
/// j + 1 communities. Errors with `Indivisible` when no community admits a
/// split with positive gain.
pub fn divide_next(
    a: &AdjacencyMatrix,
    current: &Partition,
    cfg: &DetectConfig,
) -> Result<(Partition, f64), DetectError> {
    let b = modularity_matrix(a)?;
    let mut best: Option<(usize, Vec<i8>, f64)> = None;
    for (idx, members) in current.communities().iter().enumerate() {
        if members.len() < 2 {
            continue;
        }
        let bj = generalized_modularity_matrix(&b, members)?;
        let bis = bisect(&bj, cfg.tol, cfg.max_iter(members.len()))?;
        if bis.is_indivisible() {
            continue;
        }
        if best.as_ref().is_none_or(|(_, _, s)| bis.score > *s) {
            best = Some((idx + 1, bis.signs, bis.score));
        }
    }
    let Some((label, signs, _)) = best else {
        return Err(DetectError::Indivisible);
    };
    let next = current.split(label, &signs)?;
    let gain =
        partition_modularity(a, &next)? - partition_modularity(a, current)?;
    Ok((next, gain))
}

/// Recursive division from a single community up to `k` communities, then
/// the gain of the k -> k+1 split. Returns 0 when the graph turns
/// indivisible (or runs out of edges) before that split exists.
fn gain_at_stage(a: &AdjacencyMatrix, k: usize, cfg: &DetectConfig) -> Result<f64, DetectError> {
    if a.edge_count() == 0 {
        return Ok(0.0);
    }
    let mut current = Partition::single(a.n());
    for _ in 1..k {
        match divide_next(a, &current, cfg) {
            Ok((next, _)) => current = next,
            Err(DetectError::Indivisible) => return Ok(0.0),
            Err(e) => return Err(e),
        }
    }
    match divide_next(a, &current, cfg) {
        Ok((_, gain)) => Ok(gain),
        Err(DetectError::Indivisible) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// Bootstrap null sample of the stage-k gain statistic under a fitted SBM.
/// Each replicate generates a fresh network from `fitted` with its own
/// pre-derived substream seed and reruns the division pipeline from scratch,
/// so the sample is independent of thread scheduling.
pub fn null_gain_samples(
    fitted: &SbmParams,
    b_count: usize,
    seed: u64,
    cfg: &DetectConfig,
) -> Result<Vec<f64>, DetectError> {
    let k = fitted.k();
    (0..b_count)
        .into_par_iter()
        .map(|rep| {
            let rep_seed = derive_seed(seed, &[phase::NULL, rep as u64]);
            let (net, _) = sbm::generate(fitted, rep_seed);
            gain_at_stage(&net, k, cfg)
        })
        .collect()
}

/// Add-one bootstrap p-value: (1 + #{null >= observed}) / (B + 1).
/// Always in (0, 1].
pub fn p_value(observed: f64, null_samples: &[f64]) -> f64 {
    assert!(!null_samples.is_empty(), "null sample must be non-empty");
    let count = null_samples.iter().filter(|&&x| x >= observed).count();
    (1.0 + count as f64) / (null_samples.len() as f64 + 1.0)
}

/// Run the full sequential test up to `k_max` stages and record the trace.
/// The trace is alpha-independent; `k_hat` and `step_function` read the
/// estimate off it for any alpha.
pub fn detect(
    a: &AdjacencyMatrix,
    k_max: usize,
    b_count: usize,
    seed: u64,
    cfg: &DetectConfig,
) -> Result<DetectionTrace, DetectError> {
    if a.edge_count() == 0 {
        return Err(GraphError::EmptyGraph.into());
    }
    assert!(k_max >= 1, "k_max must be at least 1");
    let mut stages = Vec::new();
    let mut current = Partition::single(a.n());
    for j in 1..=k_max {
        match divide_next(a, &current, cfg) {
            Err(DetectError::Indivisible) => {
                stages.push(Stage {
                    community_count: j,
                    partition: current.clone(),
                    observed_gain: 0.0,
                    null_samples: Vec::new(),
                    p_value: 1.0,
                    indivisible: true,
                });
                break;
            }
            Err(e) => return Err(e),
            Ok((next, gain)) => {
                let fitted = sbm::fit_from_partition(a, &current)?;
                let stage_seed = derive_seed(seed, &[phase::DETECT, j as u64]);
                let nulls = null_gain_samples(&fitted, b_count, stage_seed, cfg)?;
                let p = p_value(gain, &nulls);
                stages.push(Stage {
                    community_count: j,
                    partition: current.clone(),
                    observed_gain: gain,
                    null_samples: nulls,
                    p_value: p,
                    indivisible: false,
                });
                current = next;
            }
        }
    }
    Ok(DetectionTrace {
        n: a.n(),
        k_max,
        stages,
    })
}

/// K-hat(alpha) = min{ j >= 1 : p(j) > alpha }, with the sentinel
/// p(last + 1) = 1 so the estimate is always defined.
pub fn k_hat(trace: &DetectionTrace, alpha: f64) -> usize {
    assert!((0.0..1.0).contains(&alpha), "alpha must be in [0, 1)");
    for stage in &trace.stages {
        if stage.p_value > alpha {
            return stage.community_count;
        }
    }
    trace.stages.last().map_or(1, |s| s.community_count + 1)
}

/// One constant piece of the alpha step function: K-hat = `k` on [lo, hi).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepPiece {
    pub lo: f64,
    pub hi: f64,
    pub k: usize,
}

impl StepPiece {
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Exact breakpoints of alpha -> K-hat(alpha) on [0, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaStepFunction {
    pub pieces: Vec<StepPiece>,
    /// Sorted distinct p-values that bound the pieces.
    pub breakpoints: Vec<f64>,
    /// Value on the longest piece; ties go to the smaller K.
    pub k_star: usize,
    pub longest_interval_length: f64,
}

impl AlphaStepFunction {
    /// Piece value at a given alpha.
    pub fn value_at(&self, alpha: f64) -> usize {
        for piece in &self.pieces {
            if alpha >= piece.lo && alpha < piece.hi {
                return piece.k;
            }
        }
        self.pieces.last().expect("pieces tile [0,1)").k
    }
}

/// Build the exact step function of a trace: K-hat = j on
/// [max_{i<j} p(i), p(j)) whenever non-empty, with the remainder up to 1
/// assigned to the sentinel value.
pub fn step_function(trace: &DetectionTrace) -> AlphaStepFunction {
    let mut pieces = Vec::new();
    let mut running_max = 0.0_f64;
    for stage in &trace.stages {
        if stage.p_value > running_max {
            pieces.push(StepPiece {
                lo: running_max,
                hi: stage.p_value,
                k: stage.community_count,
            });
            running_max = stage.p_value;
        }
    }
    if running_max < 1.0 {
        let sentinel = trace.stages.last().map_or(1, |s| s.community_count + 1);
        pieces.push(StepPiece {
            lo: running_max,
            hi: 1.0,
            k: sentinel,
        });
    }
    let mut breakpoints: Vec<f64> = pieces.iter().skip(1).map(|p| p.lo).collect();
    breakpoints.dedup();
    // Longest piece wins; ties to the smaller K (pieces are in increasing K).
    let best = pieces
        .iter()
        .fold(None::<&StepPiece>, |acc, p| match acc {
            Some(b) if b.length() >= p.length() - 1e-15 => Some(b),
            _ => Some(p),
        })
        .expect("at least one piece");
    AlphaStepFunction {
        k_star: best.k,
        longest_interval_length: best.length(),
        breakpoints,
        pieces,
    }
}
