//! CLI command implementations: `simulate`, `detect`, and `select-alpha`.
//!
//! Each command builds a [`RunReport`]; the binary renders it as an aligned
//! console table and optionally writes the JSON to `--out`.

use crate::alpha::{self, AlphaError};
use crate::detect::{self, DetectConfig, DetectError};
use crate::graph::AdjacencyMatrix;
use crate::ingest::{self, IngestError};
use crate::report::{mode, AlphaSummary, KHatEntry, PhaseTiming, RunReport, StageReport, ToleranceRow};
use crate::sbm;
use crate::seeding::{derive_seed, phase};
use rayon::prelude::*;
use std::path::Path;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("alpha selection did not converge: {0}")]
    NonConvergence(String),
}

impl CliError {
    /// Process exit code: 2 for validation problems, 3 for non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::NonConvergence(_) => 3,
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<DetectError> for CliError {
    fn from(e: DetectError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<sbm::SbmError> for CliError {
    fn from(e: sbm::SbmError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<AlphaError> for CliError {
    fn from(e: AlphaError) -> Self {
        match e {
            AlphaError::NonConvergence { .. } => CliError::NonConvergence(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    EdgeList,
    AdjacencyCsv,
    CorrelationCsv,
}

impl std::str::FromStr for InputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "edge" => Ok(Self::EdgeList),
            "adj" => Ok(Self::AdjacencyCsv),
            "corr" => Ok(Self::CorrelationCsv),
            other => Err(format!("unknown format {other:?}; expected edge, adj, or corr")),
        }
    }
}

/// Load a graph, thresholding correlation inputs at `tau`.
pub fn load_graph(
    path: &Path,
    format: InputFormat,
    tau: Option<f64>,
    abs_tau: bool,
) -> Result<AdjacencyMatrix, CliError> {
    match format {
        InputFormat::EdgeList => Ok(ingest::load_edge_list(path)?),
        InputFormat::AdjacencyCsv => Ok(ingest::load_adjacency_csv(path)?),
        InputFormat::CorrelationCsv => {
            let tau = tau.ok_or_else(|| {
                CliError::Validation("--tau is required for correlation input".into())
            })?;
            if !(0.0 < tau && tau <= 1.0) {
                return Err(CliError::Validation(format!(
                    "tau = {tau} outside (0, 1]"
                )));
            }
            let c = ingest::load_correlation_csv(path)?;
            Ok(if abs_tau {
                ingest::threshold_correlation_abs(&c, tau)
            } else {
                ingest::threshold_correlation(&c, tau)
            })
        }
    }
}

fn push_timing(timings: &mut Vec<PhaseTiming>, phase: &str, start: Instant) {
    timings.push(PhaseTiming {
        phase: phase.to_string(),
        seconds: start.elapsed().as_secs_f64(),
    });
}

/// Replicated planted-SBM simulation: generate, detect, and summarize K-hat
/// per alpha (mode and proportion correct).
#[allow(clippy::too_many_arguments)]
pub fn cmd_simulate(
    k0: usize,
    n: usize,
    eps: f64,
    alphas: &[f64],
    replications: usize,
    b_count: usize,
    k_max: usize,
    seed: u64,
    with_timings: bool,
) -> Result<RunReport, CliError> {
    if alphas.is_empty() || replications == 0 || b_count == 0 {
        return Err(CliError::Validation(
            "need at least one alpha, one replication, and one bootstrap sample".into(),
        ));
    }
    if alphas.iter().any(|&a| !(0.0..1.0).contains(&a)) {
        return Err(CliError::Validation("every alpha must lie in [0, 1)".into()));
    }
    let params = sbm::planted_params(k0, n, eps)?;
    let cfg = DetectConfig::default();
    let start = Instant::now();
    let traces: Vec<_> = (0..replications)
        .into_par_iter()
        .map(|rep| {
            let rep_seed = derive_seed(seed, &[phase::SIMULATE, rep as u64]);
            let (net, _) = sbm::generate(&params, rep_seed);
            detect::detect(&net, k_max, b_count, rep_seed, &cfg)
        })
        .collect::<Result<_, _>>()?;
    let summaries: Vec<AlphaSummary> = alphas
        .iter()
        .map(|&alpha| {
            let k_hats: Vec<usize> = traces.iter().map(|t| detect::k_hat(t, alpha)).collect();
            let correct = k_hats.iter().filter(|&&k| k == k0).count();
            AlphaSummary {
                alpha,
                mode: mode(&k_hats),
                proportion_correct: correct as f64 / k_hats.len() as f64,
                k_hats,
            }
        })
        .collect();

    let mut report = RunReport::new("simulate");
    report
        .input("k0", k0)
        .input("n", n)
        .input("eps", eps)
        .input("alphas", alphas)
        .input("reps", replications)
        .input("bootstrap", b_count)
        .input("kmax", k_max)
        .input("seed", seed);
    report.simulate = Some(summaries);
    if with_timings {
        let mut timings = Vec::new();
        push_timing(&mut timings, "simulate", start);
        report.timings = Some(timings);
    }
    Ok(report)
}

/// End-to-end detection on one network: p-value trace, step function, K*,
/// and K-hat at the requested alphas.
#[allow(clippy::too_many_arguments)]
pub fn cmd_detect(
    a: &AdjacencyMatrix,
    k_max: usize,
    b_count: usize,
    seed: u64,
    alpha: Option<f64>,
    inputs: &[(&str, serde_json::Value)],
    with_timings: bool,
) -> Result<RunReport, CliError> {
    if let Some(al) = alpha {
        if !(0.0..1.0).contains(&al) {
            return Err(CliError::Validation(format!("alpha = {al} outside [0, 1)")));
        }
    }
    let cfg = DetectConfig::default();
    let start = Instant::now();
    let trace = detect::detect(a, k_max, b_count, seed, &cfg)?;
    let sf = detect::step_function(&trace);

    let mut report = RunReport::new("detect");
    for (key, value) in inputs {
        report.inputs.insert(key.to_string(), value.clone());
    }
    report
        .input("kmax", k_max)
        .input("bootstrap", b_count)
        .input("seed", seed);
    if let Some(al) = alpha {
        report.input("alpha", al);
        report.k_hat = Some(vec![KHatEntry {
            alpha: al,
            k_hat: detect::k_hat(&trace, al),
        }]);
    }
    report.stages = Some(StageReport::from_trace(&trace));
    report.k_star = Some(sf.k_star);
    report.step_function = Some(sf);
    if with_timings {
        let mut timings = Vec::new();
        push_timing(&mut timings, "detect", start);
        report.timings = Some(timings);
    }
    Ok(report)
}

/// Tolerance-ratio calibration over a gamma grid (and tau grid for
/// correlation inputs). One row per (tau, gamma) pair.
#[allow(clippy::too_many_arguments)]
pub fn cmd_select_alpha(
    load: impl Fn(Option<f64>) -> Result<AdjacencyMatrix, CliError>,
    taus: &[Option<f64>],
    gammas: &[f64],
    eps_alpha: f64,
    b_count: usize,
    k_max: usize,
    max_rounds: usize,
    seed: u64,
    inputs: &[(&str, serde_json::Value)],
    with_timings: bool,
) -> Result<RunReport, CliError> {
    if gammas.is_empty() {
        return Err(CliError::Validation("need at least one gamma".into()));
    }
    if gammas.iter().any(|&g| g < 0.0) {
        return Err(CliError::Validation("gamma must be non-negative".into()));
    }
    if eps_alpha <= 0.0 {
        return Err(CliError::Validation("eps-alpha must be positive".into()));
    }
    let cfg = DetectConfig::default();
    let mut rows = Vec::new();
    let mut timings = Vec::new();
    for &tau in taus {
        let a = load(tau)?;
        for &gamma in gammas {
            let start = Instant::now();
            let rep = alpha::calibrate(
                &a, gamma, eps_alpha, b_count, k_max, max_rounds, seed, &cfg,
            )?;
            push_timing(
                &mut timings,
                &format!(
                    "calibrate gamma={gamma}{}",
                    tau.map(|t| format!(" tau={t}")).unwrap_or_default()
                ),
                start,
            );
            rows.push(ToleranceRow { tau, report: rep });
        }
    }

    let mut report = RunReport::new("select-alpha");
    for (key, value) in inputs {
        report.inputs.insert(key.to_string(), value.clone());
    }
    report
        .input("gammas", gammas)
        .input("eps_alpha", eps_alpha)
        .input("bootstrap", b_count)
        .input("kmax", k_max)
        .input("max_rounds", max_rounds)
        .input("seed", seed);
    if taus.iter().any(|t| t.is_some()) {
        let tau_values: Vec<f64> = taus.iter().filter_map(|&t| t).collect();
        report.input("taus", tau_values);
    }
    report.tolerance = Some(rows);
    if with_timings {
        report.timings = Some(timings);
    }
    Ok(report)
}

/// CSV export of a (tau, gamma) calibration grid, one row per pair.
pub fn tolerance_grid_csv(rows: &[ToleranceRow]) -> String {
    let mut out = String::from(
        "tau,gamma,selected_alpha,achieved_gamma,k_star,k_hat,underfit,overfit,equal,iterations\n",
    );
    for row in rows {
        let tau = row.tau.map(|t| t.to_string()).unwrap_or_default();
        let r = &row.report;
        out.push_str(&format!(
            "{tau},{},{},{},{},{},{},{},{},{}\n",
            r.target_gamma,
            r.selected_alpha,
            r.achieved_gamma,
            r.k_star,
            r.k_hat_at_alpha,
            r.underfit_count,
            r.overfit_count,
            r.equal_count,
            r.iterations
        ));
    }
    out
}

/// Aligned plain-text rendering for the console.
pub fn render_text(report: &RunReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("command: {}\n", report.command));
    for (key, value) in &report.inputs {
        out.push_str(&format!("  {key}: {value}\n"));
    }
    if let Some(stages) = &report.stages {
        out.push_str("\nstage  K  gain          p-value\n");
        for s in stages {
            out.push_str(&format!(
                "{:>5}  {:>2} {:>12.6} {:>9.6}{}\n",
                s.community_count,
                s.community_count,
                s.observed_gain,
                s.p_value,
                if s.indivisible { "  (indivisible)" } else { "" }
            ));
        }
    }
    if let Some(sf) = &report.step_function {
        out.push_str("\nalpha step function:\n");
        for piece in &sf.pieces {
            out.push_str(&format!(
                "  K = {:>2} on [{:.6}, {:.6})\n",
                piece.k, piece.lo, piece.hi
            ));
        }
        out.push_str(&format!("K* = {}\n", sf.k_star));
    }
    if let Some(entries) = &report.k_hat {
        for e in entries {
            out.push_str(&format!("K-hat({:.6}) = {}\n", e.alpha, e.k_hat));
        }
    }
    if let Some(summaries) = &report.simulate {
        out.push_str("\nalpha     mode  prop-correct\n");
        for s in summaries {
            out.push_str(&format!(
                "{:<9.4} {:>4}  {:>12.4}\n",
                s.alpha, s.mode, s.proportion_correct
            ));
        }
    }
    if let Some(rows) = &report.tolerance {
        out.push_str("\ntau      gamma    alpha     achieved  K*  K-hat  under/over/equal\n");
        for row in rows {
            let r = &row.report;
            out.push_str(&format!(
                "{:<8} {:<8.4} {:<9.6} {:<9.4} {:>2}  {:>5}  {}/{}/{}\n",
                row.tau.map(|t| format!("{t:.3}")).unwrap_or_else(|| "-".into()),
                r.target_gamma,
                r.selected_alpha,
                r.achieved_gamma,
                r.k_star,
                r.k_hat_at_alpha,
                r.underfit_count,
                r.overfit_count,
                r.equal_count
            ));
        }
    }
    if let Some(timings) = &report.timings {
        out.push_str("\ntimings:\n");
        for t in timings {
            out.push_str(&format!("  {:<28} {:.3}s\n", t.phase, t.seconds));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simulate_single_replication() {
        let report = cmd_simulate(2, 16, 0.4, &[0.05], 1, 10, 3, 7, false).unwrap();
        let summaries = report.simulate.unwrap();
        assert_eq!(summaries.len(), 1);
        assert_eq!(summaries[0].k_hats.len(), 1);
    }

    #[test]
    fn simulate_rejects_bad_alpha() {
        let err = cmd_simulate(2, 16, 0.4, &[1.5], 1, 10, 3, 7, false).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn detect_reports_are_deterministic() {
        let a = crate::graph::fixtures::barbell();
        let r1 = cmd_detect(&a, 3, 30, 5, Some(0.05), &[], false).unwrap();
        let r2 = cmd_detect(&a, 3, 30, 5, Some(0.05), &[], false).unwrap();
        assert_eq!(r1.to_json(), r2.to_json());
    }

    #[test]
    fn detect_barbell_k_star() {
        let a = crate::graph::fixtures::barbell();
        let report = cmd_detect(&a, 4, 50, 123, None, &[], false).unwrap();
        assert_eq!(report.k_star, Some(2));
    }

    #[test]
    fn format_parsing() {
        assert_eq!("edge".parse::<InputFormat>().unwrap(), InputFormat::EdgeList);
        assert!("nope".parse::<InputFormat>().is_err());
    }

    #[test]
    fn tolerance_csv_layout() {
        let rows = vec![ToleranceRow {
            tau: Some(0.5),
            report: crate::alpha::ToleranceReport {
                target_gamma: 1.0,
                selected_alpha: 0.01,
                achieved_gamma: 1.2,
                k_star: 5,
                k_hat_at_alpha: 5,
                underfit_count: 6,
                overfit_count: 5,
                equal_count: 29,
                iterations: 2,
                alpha_precision: 0.005,
            },
        }];
        let csv = tolerance_grid_csv(&rows);
        assert!(csv.lines().count() == 2);
        assert!(csv.contains("0.5,1,0.01,1.2,5,5,6,5,29,2"));
    }
}
