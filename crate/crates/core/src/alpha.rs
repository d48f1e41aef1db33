//! Tolerance-ratio curve estimation and significance-level calibration.
//!
//! The ratio of underfitting to overfitting probability relative to the
//! alpha-free estimate K* is evaluated on a set of bootstrap detection
//! traces. Because every per-trace K-hat is a step function of alpha, the
//! ratio is itself an exact step function; one trace set is reused across
//! all alpha, which makes the curve's monotonicity exact and keeps the
//! bootstrap cost independent of the alpha grid.

use crate::detect::{
    detect, divide_next, k_hat, step_function, DetectConfig, DetectError, DetectionTrace,
};
use crate::graph::{AdjacencyMatrix, Partition};
use crate::sbm;
use crate::seeding::{derive_seed, phase};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AlphaError {
    #[error("every piece of the tolerance curve is infinite")]
    NoFinitePiece,
    #[error("alpha did not converge in {rounds} rounds (sequence: {alphas:?})")]
    NonConvergence { rounds: usize, alphas: Vec<f64> },
    #[error(transparent)]
    Detect(#[from] DetectError),
}

/// Default convergence precision for the selected alpha.
pub const DEFAULT_EPS_ALPHA: f64 = 0.005;
/// Default bound on calibration rounds.
pub const DEFAULT_MAX_ROUNDS: usize = 10;
/// Neutral starting alpha; only used as the round-0 comparison point.
pub const INITIAL_ALPHA: f64 = 0.05;

/// Outcome of a full calibration run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToleranceReport {
    pub target_gamma: f64,
    pub selected_alpha: f64,
    /// May be infinite when no bootstrap trace overfits.
    pub achieved_gamma: f64,
    pub k_star: usize,
    pub k_hat_at_alpha: usize,
    pub underfit_count: usize,
    pub overfit_count: usize,
    pub equal_count: usize,
    pub iterations: usize,
    pub alpha_precision: f64,
}

/// Divide the observed network from one community up to `k_ref` communities
/// (fewer if it turns indivisible first).
fn observed_partition(
    a: &AdjacencyMatrix,
    k_ref: usize,
    cfg: &DetectConfig,
) -> Result<Partition, DetectError> {
    let mut current = Partition::single(a.n());
    for _ in 1..k_ref {
        match divide_next(a, &current, cfg) {
            Ok((next, _)) => current = next,
            Err(DetectError::Indivisible) => break,
            Err(e) => return Err(e),
        }
    }
    Ok(current)
}

/// Parametric-bootstrap trace set: fit an SBM at the observed k_ref-community
/// partition, generate `b_count` networks, and run the full sequential
/// detection on each. Deterministic given the seed.
pub fn bootstrap_traces(
    a: &AdjacencyMatrix,
    k_ref: usize,
    b_count: usize,
    k_max: usize,
    seed: u64,
    cfg: &DetectConfig,
) -> Result<Vec<DetectionTrace>, DetectError> {
    let partition = observed_partition(a, k_ref, cfg)?;
    let fitted = sbm::fit_from_partition(a, &partition)?;
    (0..b_count)
        .into_par_iter()
        .map(|rep| {
            let rep_seed = derive_seed(seed, &[phase::TRACES, rep as u64]);
            let (net, _) = sbm::generate(&fitted, rep_seed);
            detect(&net, k_max, b_count, rep_seed, cfg)
        })
        .collect()
}

/// Underfit/overfit/equal counts of K-hat(alpha) against k_ref.
fn counts_at(traces: &[DetectionTrace], k_ref: usize, alpha: f64) -> (usize, usize, usize) {
    let mut under = 0;
    let mut over = 0;
    let mut equal = 0;
    for trace in traces {
        let k = k_hat(trace, alpha);
        match k.cmp(&k_ref) {
            std::cmp::Ordering::Less => under += 1,
            std::cmp::Ordering::Greater => over += 1,
            std::cmp::Ordering::Equal => equal += 1,
        }
    }
    (under, over, equal)
}

fn ratio(under: usize, over: usize) -> f64 {
    match (under, over) {
        (0, 0) => 0.0,
        (_, 0) => f64::INFINITY,
        _ => under as f64 / over as f64,
    }
}

/// Estimated tolerance ratio at one alpha. Infinite when only underfits
/// occur; 0 when neither side occurs.
pub fn gamma_hat(traces: &[DetectionTrace], k_ref: usize, alpha: f64) -> f64 {
    assert!(!traces.is_empty(), "need at least one trace");
    let (under, over, _) = counts_at(traces, k_ref, alpha);
    ratio(under, over)
}

/// One constant piece of the tolerance-ratio step function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaPiece {
    pub lo: f64,
    pub hi: f64,
    pub underfit_count: usize,
    pub overfit_count: usize,
    pub equal_count: usize,
    pub gamma: f64,
}

impl GammaPiece {
    /// Interior representative used for selection; for the piece reaching 1
    /// this is (lo + 1) / 2, the same formula as every midpoint.
    pub fn representative(&self) -> f64 {
        (self.lo + self.hi) / 2.0
    }
}

/// Exact step function alpha -> gamma-hat(alpha) over the pooled breakpoints
/// of all traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaCurve {
    pub pieces: Vec<GammaPiece>,
}

impl GammaCurve {
    pub fn value_at(&self, alpha: f64) -> f64 {
        for piece in &self.pieces {
            if alpha >= piece.lo && alpha < piece.hi {
                return piece.gamma;
            }
        }
        self.pieces.last().expect("curve has pieces").gamma
    }
}

/// Build the gamma curve by pooling every trace's p-value breakpoints and
/// evaluating the counts once per interval.
pub fn gamma_curve(traces: &[DetectionTrace], k_ref: usize) -> GammaCurve {
    assert!(!traces.is_empty(), "need at least one trace");
    let mut cuts: Vec<f64> = traces
        .iter()
        .flat_map(|t| t.p_values())
        .filter(|&p| p > 0.0 && p < 1.0)
        .collect();
    cuts.push(0.0);
    cuts.push(1.0);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let mut pieces = Vec::with_capacity(cuts.len() - 1);
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let (under, over, equal) = counts_at(traces, k_ref, (lo + hi) / 2.0);
        pieces.push(GammaPiece {
            lo,
            hi,
            underfit_count: under,
            overfit_count: over,
            equal_count: equal,
            gamma: ratio(under, over),
        });
    }
    GammaCurve { pieces }
}

/// Pick the piece representative minimizing |gamma-hat - target|. Ties break
/// toward larger alpha; infinite pieces lose against any finite piece.
pub fn select_alpha(curve: &GammaCurve, target_gamma: f64) -> Result<(f64, f64), AlphaError> {
    assert!(target_gamma >= 0.0, "target gamma must be non-negative");
    let mut best: Option<(&GammaPiece, f64)> = None;
    for piece in &curve.pieces {
        let dist = if piece.gamma.is_infinite() {
            f64::INFINITY
        } else {
            (piece.gamma - target_gamma).abs()
        };
        match best {
            Some((_, d)) if dist < d => best = Some((piece, dist)),
            // Pieces come in increasing alpha, so >= prefers the later one.
            Some((_, d)) if dist == d && dist.is_finite() => best = Some((piece, dist)),
            None => best = Some((piece, dist)),
            _ => {}
        }
    }
    match best {
        Some((piece, dist)) if dist.is_finite() => Ok((piece.representative(), piece.gamma)),
        _ => Err(AlphaError::NoFinitePiece),
    }
}

/// Full calibration: rounds of (detect, K*, bootstrap trace set, gamma
/// curve, alpha selection) until consecutive selected alphas agree within
/// `eps_alpha`, or `max_rounds` is exhausted.
#[allow(clippy::too_many_arguments)]
pub fn calibrate(
    a: &AdjacencyMatrix,
    target_gamma: f64,
    eps_alpha: f64,
    b_count: usize,
    k_max: usize,
    max_rounds: usize,
    seed: u64,
    cfg: &DetectConfig,
) -> Result<ToleranceReport, AlphaError> {
    assert!(eps_alpha > 0.0, "eps_alpha must be positive");
    let mut alpha_prev = INITIAL_ALPHA;
    let mut alphas = Vec::new();
    for round in 1..=max_rounds {
        let round_seed = derive_seed(seed, &[phase::ROUND, round as u64]);
        let trace = detect(
            a,
            k_max,
            b_count,
            derive_seed(round_seed, &[phase::DETECT]),
            cfg,
        )?;
        let sf = step_function(&trace);
        let k_star = sf.k_star;
        let traces = bootstrap_traces(
            a,
            k_star,
            b_count,
            k_max,
            derive_seed(round_seed, &[phase::TRACES]),
            cfg,
        )?;
        let curve = gamma_curve(&traces, k_star);
        let (alpha_sel, achieved) = select_alpha(&curve, target_gamma)?;
        alphas.push(alpha_sel);
        if (alpha_sel - alpha_prev).abs() < eps_alpha {
            let (under, over, equal) = counts_at(&traces, k_star, alpha_sel);
            return Ok(ToleranceReport {
                target_gamma,
                selected_alpha: alpha_sel,
                achieved_gamma: achieved,
                k_star,
                k_hat_at_alpha: k_hat(&trace, alpha_sel),
                underfit_count: under,
                overfit_count: over,
                equal_count: equal,
                iterations: round,
                alpha_precision: eps_alpha,
            });
        }
        alpha_prev = alpha_sel;
    }
    Err(AlphaError::NonConvergence {
        rounds: max_rounds,
        alphas,
    })
}
