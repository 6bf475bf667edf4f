use serde::{Deserialize, Serialize};

use crate::policy::Algorithm;

/// Swarm means for one interval of one run. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub run_id: String,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub w: f64,
    pub interval: usize,
    pub reachability_mean: f64,
    pub overheard_frac: f64,
    pub pe_mean: f64,
    pub cv_mean: f64,
    pub objective_mean: f64,
    pub reward_mean: f64,
}

impl MetricsRow {
    pub const HEADER: [&'static str; 11] = [
        "run_id",
        "seed",
        "algorithm",
        "w",
        "interval",
        "reachability_mean",
        "overheard_frac",
        "pe_mean",
        "cv_mean",
        "objective_mean",
        "reward_mean",
    ];

    /// The averaged columns, in header order.
    pub const METRICS: [&'static str; 6] = [
        "reachability_mean",
        "overheard_frac",
        "pe_mean",
        "cv_mean",
        "objective_mean",
        "reward_mean",
    ];

    pub fn metrics(&self) -> [f64; 6] {
        [
            self.reachability_mean,
            self.overheard_frac,
            self.pe_mean,
            self.cv_mean,
            self.objective_mean,
            self.reward_mean,
        ]
    }
}

/// Per-entity debugging trace; user rows leave the node columns empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub interval: usize,
    pub kind: &'static str,
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub sector: Option<usize>,
    pub outcome: Option<f64>,
    pub reward: Option<i8>,
    pub reachability: Option<f64>,
    pub overheard: Option<bool>,
}
