//! Sliding-window bookkeeping and the weighted efficiency/spread objective
//! whose smoothed change is the agents' reward.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::geometry::Sector;
use crate::protocol::Outcome;
use crate::scalar::Scalar;

/// Changes smaller than this count as no change.
pub const REWARD_DEADBAND: f64 = 1e-12;

/// Per-sector probe counts over the window and their normalisation.
///
/// The window length is `history.len()`, so a partially filled window is
/// treated as a shorter one. An empty history yields all-zero outputs.
pub fn probing_distribution<T: Scalar>(history: &[Sector], k: usize) -> (Vec<usize>, Vec<T>) {
    let mut counts = vec![0usize; k];
    for s in history {
        counts[s.index()] += 1;
    }
    let w = history.len();
    let dist = counts
        .iter()
        .map(|&c| {
            if w == 0 {
                T::zero()
            } else {
                T::lit(c as f64) / T::lit(w as f64)
            }
        })
        .collect();
    (counts, dist)
}

/// Mean outcome code over the window (0 for an empty window).
pub fn probing_efficiency<T: Scalar>(outcomes: &[T]) -> T {
    if outcomes.is_empty() {
        return T::zero();
    }
    outcomes.iter().fold(T::zero(), |a, &b| a + b) / T::lit(outcomes.len() as f64)
}

/// Normalised coefficient of variation of the probe counts, in `[0, 1]`.
///
/// Spread is measured on raw counts around `μ = W/K` and divided by the
/// spread of a window spent entirely on one sector.
pub fn cv_norm<T: Scalar>(counts: &[usize], k: usize) -> Result<T> {
    if k < 2 {
        return Err(Error::config("k", "spread needs at least 2 sectors"));
    }
    debug_assert_eq!(counts.len(), k);
    let w: usize = counts.iter().sum();
    if w == 0 {
        return Ok(T::zero());
    }
    let kf = T::lit(k as f64);
    let wf = T::lit(w as f64);
    let mu = wf / kf;
    let ss = counts.iter().fold(T::zero(), |acc, &c| {
        let d = T::lit(c as f64) - mu;
        acc + d * d
    });
    let sigma = (ss / kf).sqrt();
    let sigma_max = (((wf - mu) * (wf - mu) + (kf - T::one()) * mu * mu) / kf).sqrt();
    Ok((sigma / sigma_max).min(T::one()))
}

pub fn weighted_objective<T: Scalar>(pe: T, cv: T, w: T) -> T {
    w * pe + (T::one() - w) * cv
}

/// One EWMA step. Returns the new average and the sign of its change.
///
/// With no previous average the series starts at `o_new` and the reward is 0.
pub fn ewma_reward<T: Scalar>(prev: Option<T>, o_new: T, alpha: T) -> (T, i8) {
    let Some(prev) = prev else {
        return (o_new, 0);
    };
    let next = alpha * o_new + (T::one() - alpha) * prev;
    let delta = next - prev;
    let reward = if delta.abs() < T::lit(REWARD_DEADBAND) {
        0
    } else if delta > T::zero() {
        1
    } else {
        -1
    };
    (next, reward)
}

/// Objective terms and reward produced by one observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation<T> {
    pub pe: T,
    pub cv: T,
    pub objective: T,
    pub smoothed: T,
    pub reward: i8,
}

/// FIFO windows of recent sector choices and outcomes, plus the smoothed objective.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentMemory<T> {
    window: usize,
    k: usize,
    actions: VecDeque<Sector>,
    outcomes: VecDeque<T>,
    ewma: Option<T>,
    alpha: T,
    weight: T,
}

impl<T: Scalar> AgentMemory<T> {
    pub fn new(window: usize, k: usize, alpha: T, weight: T) -> Result<Self> {
        if window == 0 {
            return Err(Error::config("window", "must be at least 1"));
        }
        if k < 2 {
            return Err(Error::config("k", "need at least 2 sectors"));
        }
        if !(alpha > T::zero() && alpha <= T::one()) {
            return Err(Error::config("alpha_ewma", "must lie in (0, 1]"));
        }
        if !(weight >= T::zero() && weight <= T::one()) {
            return Err(Error::config("w", "must lie in [0, 1]"));
        }
        Ok(AgentMemory {
            window,
            k,
            actions: VecDeque::with_capacity(window + 1),
            outcomes: VecDeque::with_capacity(window + 1),
            ewma: None,
            alpha,
            weight,
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn sectors(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.actions.len() == self.window
    }

    /// Oldest first.
    pub fn actions(&self) -> impl ExactSizeIterator<Item = Sector> + '_ {
        self.actions.iter().copied()
    }

    /// Oldest first.
    pub fn outcomes(&self) -> impl ExactSizeIterator<Item = T> + '_ {
        self.outcomes.iter().copied()
    }

    pub fn smoothed(&self) -> Option<T> {
        self.ewma
    }

    pub fn push(&mut self, action: Sector, outcome: T) {
        assert!(action.number() <= self.k, "sector out of range");
        self.actions.push_back(action);
        self.outcomes.push_back(outcome);
        while self.actions.len() > self.window {
            self.actions.pop_front();
            self.outcomes.pop_front();
        }
    }

    pub fn distribution(&self) -> (Vec<usize>, Vec<T>) {
        let acts: Vec<Sector> = self.actions().collect();
        probing_distribution(&acts, self.k)
    }

    /// Records the interval's choice and outcome, then scores the window.
    pub fn observe(&mut self, action: Sector, outcome: Outcome) -> Evaluation<T> {
        self.push(action, T::lit(outcome.code()));
        let outcomes: Vec<T> = self.outcomes().collect();
        let pe = probing_efficiency(&outcomes);
        let (counts, _) = self.distribution();
        let cv = cv_norm(&counts, self.k).expect("k validated at construction");
        let objective = weighted_objective(pe, cv, self.weight);
        let (smoothed, reward) = ewma_reward(self.ewma, objective, self.alpha);
        self.ewma = Some(smoothed);
        Evaluation {
            pe,
            cv,
            objective,
            smoothed,
            reward,
        }
    }
}
