use rand::{Rng, RngCore};

use super::Policy;
use crate::geometry::Sector;
use crate::objective::AgentMemory;
use crate::scalar::Scalar;

/// Uniformly random sector every interval; ignores its memory entirely.
#[derive(Debug, Clone)]
pub struct RandomAgent {
    k: usize,
}

impl RandomAgent {
    pub fn new(k: usize) -> Self {
        RandomAgent { k }
    }
}

impl<T: Scalar> Policy<T> for RandomAgent {
    fn select(&mut self, _memory: &AgentMemory<T>, rng: &mut dyn RngCore) -> Sector {
        Sector::from_index(rng.random_range(0..self.k))
    }

    fn learn(
        &mut self,
        _: &AgentMemory<T>,
        _: Sector,
        _: i8,
        _: &AgentMemory<T>,
        _: &mut dyn RngCore,
    ) {
    }

    fn epsilon(&self) -> f64 {
        1.0
    }
}
