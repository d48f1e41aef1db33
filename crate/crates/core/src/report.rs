//! Serializable run reports.
//!
//! Reports echo every input parameter so a run can be audited and replayed
//! from the report alone. Wall-clock timings are optional and off by
//! default, so identical command lines with identical seeds produce
//! byte-identical reports.

use crate::alpha::ToleranceReport;
use crate::detect::{AlphaStepFunction, DetectionTrace};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageReport {
    pub community_count: usize,
    pub observed_gain: f64,
    pub p_value: f64,
    pub null_sample_size: usize,
    pub indivisible: bool,
}

impl StageReport {
    pub fn from_trace(trace: &DetectionTrace) -> Vec<Self> {
        trace
            .stages
            .iter()
            .map(|s| StageReport {
                community_count: s.community_count,
                observed_gain: s.observed_gain,
                p_value: s.p_value,
                null_sample_size: s.null_samples.len(),
                indivisible: s.indivisible,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KHatEntry {
    pub alpha: f64,
    pub k_hat: usize,
}

/// Per-alpha summary of a simulation batch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlphaSummary {
    pub alpha: f64,
    /// Most frequent K-hat across replications; ties go to the smaller K.
    pub mode: usize,
    /// Fraction of replications with K-hat equal to the planted K0.
    pub proportion_correct: f64,
    pub k_hats: Vec<usize>,
}

/// One row of a tolerance-calibration grid (tau is absent for inputs that
/// are already graphs).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToleranceRow {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    pub report: ToleranceReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseTiming {
    pub phase: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    /// Echo of every input parameter, keyed by flag name.
    pub inputs: BTreeMap<String, serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stages: Option<Vec<StageReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step_function: Option<AlphaStepFunction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_star: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_hat: Option<Vec<KHatEntry>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulate: Option<Vec<AlphaSummary>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<Vec<ToleranceRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Vec<PhaseTiming>>,
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            inputs: BTreeMap::new(),
            stages: None,
            step_function: None,
            k_star: None,
            k_hat: None,
            simulate: None,
            tolerance: None,
            timings: None,
        }
    }

    pub fn input(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.inputs.insert(
            key.to_string(),
            serde_json::to_value(value).expect("serializable input"),
        );
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Most frequent value; ties break toward the smaller one.
pub fn mode(values: &[usize]) -> usize {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &v in values {
        *counts.entry(v).or_default() += 1;
    }
    counts
        .into_iter()
        .max_by_key(|&(v, c)| (c, std::cmp::Reverse(v)))
        .map(|(v, _)| v)
        .expect("non-empty values")
}
