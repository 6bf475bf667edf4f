use serde::{Deserialize, Serialize};

/// Linear decay from `max` to `min` over `horizon` intervals, then flat.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub max: f64,
    pub min: f64,
    pub horizon: u64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        EpsilonSchedule {
            max: 1.0,
            min: 0.35,
            horizon: 1000,
        }
    }
}

impl EpsilonSchedule {
    pub fn value(&self, t: u64) -> f64 {
        if self.horizon == 0 {
            return self.min;
        }
        let frac = t as f64 / self.horizon as f64;
        (self.max - (self.max - self.min) * frac).max(self.min)
    }
}
