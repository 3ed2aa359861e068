//! Machine-readable experiment reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use gibbsel_core::LdaProjection;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Calibration and evaluation of one statistic subset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsetReport {
    pub stats: String,
    /// `(k, validation error)` over the calibration grid.
    pub curve: Vec<(usize, f64)>,
    /// Calibrated number of neighbors.
    pub k: usize,
    /// Validation error at the calibrated k.
    pub valid_error: f64,
    /// Error on the held-out test table.
    pub test_error: f64,
}

/// The ancillary-coordinate study: the 2D statistics padded with iid
/// uniform coordinates, recalibrated and re-evaluated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AncillaryReport {
    pub count: usize,
    pub curve: Vec<(usize, f64)>,
    pub k: usize,
    pub valid_error: f64,
    pub test_error: f64,
}

/// Evaluation of the adaptive classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveReport {
    pub test_error: f64,
    /// Test error of each constituent, in subset order.
    pub constituent_test_errors: Vec<f64>,
    /// Fraction of test queries routed to each constituent.
    pub lambda_shares: Vec<f64>,
    /// The fitted discriminant projection, when the trait was informative.
    pub lda: Option<LdaProjection>,
}

/// Full report of one experiment run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub subsets: Vec<SubsetReport>,
    pub ancillary: Option<AncillaryReport>,
    pub adaptive: Option<AdaptiveReport>,
    /// Wall-clock seconds per stage. Excluded from reproducibility
    /// comparisons; everything else is deterministic given the seeds.
    pub runtimes: BTreeMap<String, f64>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// The report with runtimes cleared, for byte-level comparisons.
    pub fn without_runtimes(&self) -> ExperimentReport {
        let mut clone = self.clone();
        clone.runtimes = BTreeMap::new();
        clone
    }
}
