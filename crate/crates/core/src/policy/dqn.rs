use std::collections::VecDeque;

use rand::seq::index;
use rand::{Rng, RngCore};

use super::{encode_state, epsilon_greedy, state_len, EpsilonSchedule, Policy};
use crate::error::Result;
use crate::geometry::Sector;
use crate::neural::{Adam, Mlp};
use crate::objective::AgentMemory;
use crate::scalar::Scalar;

/// One replay record.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition<T> {
    pub state: Vec<T>,
    pub action: Sector,
    pub reward: T,
    pub next_state: Vec<T>,
}

/// Fixed-capacity FIFO experience store.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    items: VecDeque<Transition<T>>,
    capacity: usize,
}

impl<T: Scalar> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        ReplayBuffer {
            items: VecDeque::with_capacity(capacity.min(4096)),
            capacity,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, t: Transition<T>) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    pub fn get(&self, i: usize) -> Option<&Transition<T>> {
        self.items.get(i)
    }

    /// `n` distinct records drawn uniformly; `None` if fewer are stored.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Option<Vec<&Transition<T>>> {
        if self.items.len() < n {
            return None;
        }
        Some(
            index::sample(rng, self.items.len(), n)
                .into_iter()
                .map(|i| &self.items[i])
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DqnConfig {
    pub hidden: [usize; 4],
    pub batch: usize,
    pub replay_capacity: usize,
    pub gamma: f64,
    pub lr: f64,
    pub schedule: EpsilonSchedule,
    /// Training steps between target-network refreshes; `None` bootstraps
    /// from the online network itself.
    pub target_sync: Option<u64>,
}

impl Default for DqnConfig {
    fn default() -> Self {
        DqnConfig {
            hidden: [128; 4],
            batch: 128,
            replay_capacity: 20_000,
            gamma: 0.9,
            lr: 3e-4,
            schedule: EpsilonSchedule::default(),
            target_sync: Some(50),
        }
    }
}

/// Deep Q-network agent with experience replay and a target network.
#[derive(Debug, Clone)]
pub struct DqnAgent<T> {
    online: Mlp<T>,
    target: Option<Mlp<T>>,
    opt: Adam<T>,
    buffer: ReplayBuffer<T>,
    cfg: DqnConfig,
    k: usize,
    t: u64,
    train_steps: u64,
    last_loss: Option<T>,
}

impl<T: Scalar> DqnAgent<T> {
    pub fn new<R: Rng + ?Sized>(
        window: usize,
        k: usize,
        cfg: DqnConfig,
        rng: &mut R,
    ) -> Result<Self> {
        let mut sizes = vec![state_len(window, k)];
        sizes.extend_from_slice(&cfg.hidden);
        sizes.push(k);
        let online = Mlp::new(&sizes, rng)?;
        Ok(Self::from_network(online, cfg))
    }

    /// Wraps an existing network, e.g. one restored from a checkpoint.
    pub fn from_network(online: Mlp<T>, cfg: DqnConfig) -> Self {
        let k = online.output_size();
        DqnAgent {
            target: cfg.target_sync.map(|_| online.clone()),
            opt: Adam::new(&online, T::lit(cfg.lr)),
            buffer: ReplayBuffer::new(cfg.replay_capacity),
            online,
            cfg,
            k,
            t: 0,
            train_steps: 0,
            last_loss: None,
        }
    }

    pub fn network(&self) -> &Mlp<T> {
        &self.online
    }

    pub fn target_network(&self) -> Option<&Mlp<T>> {
        self.target.as_ref()
    }

    pub fn buffer(&self) -> &ReplayBuffer<T> {
        &self.buffer
    }

    pub fn train_steps(&self) -> u64 {
        self.train_steps
    }

    /// Mean squared TD error of the most recent training batch.
    pub fn last_loss(&self) -> Option<T> {
        self.last_loss
    }

    pub fn q_values(&self, state: &[T]) -> Vec<T> {
        self.online.forward(state)
    }

    /// Stores `t` and, once a full batch is available, takes one gradient
    /// step on the mean squared TD error. Returns whether it trained.
    pub fn observe(&mut self, t: Transition<T>, rng: &mut dyn RngCore) -> bool {
        debug_assert_eq!(t.state.len(), t.next_state.len());
        self.buffer.push(t);
        let Some(batch) = self.buffer.sample(self.cfg.batch, rng) else {
            return false;
        };
        let n = batch.len();
        let width = self.online.input_size();
        let mut states = Vec::with_capacity(n * width);
        let mut next_states = Vec::with_capacity(n * width);
        for tr in &batch {
            states.extend_from_slice(&tr.state);
            next_states.extend_from_slice(&tr.next_state);
        }
        let bootstrap = self.target.as_ref().unwrap_or(&self.online);
        let next_q = bootstrap.forward_batch(&next_states, n);
        let tape = self.online.forward_batch(&states, n);
        let q = tape.output();
        let gamma = T::lit(self.cfg.gamma);
        let scale = T::lit(2.0 / n as f64);
        let mut grad = vec![T::zero(); n * self.k];
        let mut loss = T::zero();
        for (b, tr) in batch.iter().enumerate() {
            let row = &next_q.output()[b * self.k..(b + 1) * self.k];
            let best = row.iter().copied().fold(T::neg_infinity(), T::max);
            let y = tr.reward + gamma * best;
            let idx = b * self.k + tr.action.index();
            let err = q[idx] - y;
            loss = loss + err * err;
            grad[idx] = scale * err;
        }
        self.last_loss = Some(loss / T::lit(n as f64));
        let grads = self.online.backward(&tape, &grad);
        self.opt.update(&mut self.online, &grads);
        self.train_steps += 1;
        if let (Some(every), Some(target)) = (self.cfg.target_sync, self.target.as_mut()) {
            if every > 0 && self.train_steps.is_multiple_of(every) {
                target.clone_from(&self.online);
            }
        }
        true
    }
}

impl<T: Scalar> Policy<T> for DqnAgent<T> {
    fn select(&mut self, memory: &AgentMemory<T>, rng: &mut dyn RngCore) -> Sector {
        let eps = self.cfg.schedule.value(self.t);
        self.t += 1;
        // skip the forward pass when the draw explores anyway
        if rng.random::<f64>() < eps {
            return Sector::from_index(rng.random_range(0..self.k));
        }
        let q = self.q_values(&encode_state(memory));
        epsilon_greedy(&q, 0.0, rng)
    }

    fn learn(
        &mut self,
        before: &AgentMemory<T>,
        action: Sector,
        reward: i8,
        after: &AgentMemory<T>,
        rng: &mut dyn RngCore,
    ) {
        self.observe(
            Transition {
                state: encode_state(before),
                action,
                reward: T::lit(reward as f64),
                next_state: encode_state(after),
            },
            rng,
        );
    }

    fn epsilon(&self) -> f64 {
        self.cfg.schedule.value(self.t)
    }
}
