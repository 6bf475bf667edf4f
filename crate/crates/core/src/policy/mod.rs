//! Per-node sector-selection agents.
//!
//! Every node owns one agent. Agents see only their own [`AgentMemory`]
//! and share nothing with each other.

mod dqn;
mod epsilon;
mod qlearning;
mod random;
mod state;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

pub use dqn::{DqnAgent, DqnConfig, ReplayBuffer, Transition};
pub use epsilon::EpsilonSchedule;
pub use qlearning::{QLearningAgent, QTable};
pub use random::RandomAgent;
pub use state::{encode_state, state_len, DiscreteStateKey};

use crate::geometry::Sector;
use crate::objective::AgentMemory;
use crate::scalar::Scalar;

/// Which decision maker the nodes run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Random,
    #[serde(rename = "qlearning")]
    QLearning,
    Dqn,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Random, Algorithm::QLearning, Algorithm::Dqn];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Random => "random",
            Algorithm::QLearning => "qlearning",
            Algorithm::Dqn => "dqn",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Ok(Algorithm::Random),
            "qlearning" | "q-learning" | "ql" => Ok(Algorithm::QLearning),
            "dqn" => Ok(Algorithm::Dqn),
            other => Err(format!(
                "unknown algorithm `{other}` (random, qlearning, dqn)"
            )),
        }
    }
}

/// A node's decision maker.
pub trait Policy<T: Scalar>: Send {
    /// Chooses the sector to probe given the node's current memory.
    fn select(&mut self, memory: &AgentMemory<T>, rng: &mut dyn RngCore) -> Sector;

    /// Learns from one interval: memory before acting, the action, its reward
    /// and the memory after the outcome was recorded.
    fn learn(
        &mut self,
        before: &AgentMemory<T>,
        action: Sector,
        reward: i8,
        after: &AgentMemory<T>,
        rng: &mut dyn RngCore,
    );

    /// Current exploration rate, for reporting.
    fn epsilon(&self) -> f64;
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax<T: Scalar>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// ε-greedy over `q`: explore uniformly with probability `eps`.
pub fn epsilon_greedy<T: Scalar>(q: &[T], eps: f64, rng: &mut dyn RngCore) -> Sector {
    if rng.random::<f64>() < eps {
        Sector::from_index(rng.random_range(0..q.len()))
    } else {
        Sector::from_index(argmax(q))
    }
}
