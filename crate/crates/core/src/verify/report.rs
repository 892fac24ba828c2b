use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Pass,
    Reject,
}

/// Outcome of one hypothesis test.
///
/// Serializes to exactly `test, statistic, threshold, decision, m, seed,
/// times, probes`; the Bonferroni-adjusted p-value proxy stays in memory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub test: String,
    pub statistic: f64,
    pub threshold: f64,
    pub decision: Decision,
    pub m: usize,
    pub seed: u64,
    pub times: Vec<f64>,
    pub probes: Vec<Vec<f64>>,
    #[serde(skip)]
    pub p_value_proxy: f64,
}

impl TestReport {
    pub fn passed(&self) -> bool {
        self.decision == Decision::Pass
    }
}
