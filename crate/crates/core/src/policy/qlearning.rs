use std::collections::HashMap;
use std::io::{BufRead, Write};

use rand::RngCore;

use super::{argmax, epsilon_greedy, DiscreteStateKey, EpsilonSchedule, Policy};
use crate::error::{Error, Result};
use crate::geometry::Sector;
use crate::objective::AgentMemory;
use crate::scalar::Scalar;

const CHECKPOINT_MAGIC: &str = "swarm-nd-qtable";
const CHECKPOINT_VERSION: u32 = 1;

/// Lazily materialised action-value table; unseen rows read as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable<T> {
    k: usize,
    rows: HashMap<DiscreteStateKey, Vec<T>>,
}

impl<T: Scalar> QTable<T> {
    pub fn new(k: usize) -> Self {
        QTable {
            k,
            rows: HashMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// The row for `key`, or zeros.
    pub fn row(&self, key: &DiscreteStateKey) -> Vec<T> {
        self.rows
            .get(key)
            .cloned()
            .unwrap_or_else(|| vec![T::zero(); self.k])
    }

    pub fn value(&self, key: &DiscreteStateKey, action: Sector) -> T {
        self.rows.get(key).map_or(T::zero(), |r| r[action.index()])
    }

    /// `Q(s,a) ← Q(s,a) + lr·(r + γ·max Q(s',·) − Q(s,a))`.
    pub fn update(
        &mut self,
        key: &DiscreteStateKey,
        action: Sector,
        reward: T,
        next: &DiscreteStateKey,
        gamma: T,
        lr: T,
    ) {
        let next_best = self.rows.get(next).map_or(T::zero(), |r| r[argmax(r)]);
        let row = self
            .rows
            .entry(key.clone())
            .or_insert_with(|| vec![T::zero(); self.k]);
        let q = &mut row[action.index()];
        *q = *q + lr * (reward + gamma * next_best - *q);
    }

    /// Text dump: header, then one `key : values` line per row in key order.
    pub fn write_checkpoint<W: Write>(&self, out: &mut W, window: usize) -> std::io::Result<()> {
        writeln!(out, "{CHECKPOINT_MAGIC} v{CHECKPOINT_VERSION}")?;
        writeln!(out, "window {window}")?;
        writeln!(out, "sectors {}", self.k)?;
        writeln!(out, "rows {}", self.rows.len())?;
        let mut keys: Vec<&DiscreteStateKey> = self.rows.keys().collect();
        keys.sort();
        for key in keys {
            let k: Vec<String> = key.as_bytes().iter().map(u8::to_string).collect();
            let v: Vec<String> = self.rows[key].iter().map(T::to_string).collect();
            writeln!(out, "{} : {}", k.join(","), v.join(" "))?;
        }
        Ok(())
    }

    /// Returns the table and its window length.
    pub fn read_checkpoint<R: BufRead>(input: R) -> Result<(Self, usize)> {
        let bad = |m: &str| Error::Checkpoint(m.to_string());
        let mut lines = input
            .lines()
            .map(|l| l.map_err(|e| Error::Checkpoint(e.to_string())));
        let mut next = || lines.next().ok_or_else(|| bad("truncated"))?;
        if next()? != format!("{CHECKPOINT_MAGIC} v{CHECKPOINT_VERSION}") {
            return Err(bad("unknown header or version"));
        }
        let mut field = |name: &str| -> Result<usize> {
            let line = next()?;
            line.strip_prefix(name)
                .and_then(|r| r.trim().parse().ok())
                .ok_or_else(|| bad(&format!("bad `{name}` line")))
        };
        let window = field("window")?;
        let k = field("sectors")?;
        let count = field("rows")?;
        let mut table = QTable::new(k);
        for _ in 0..count {
            let line = next()?;
            let (key, vals) = line.split_once(" : ").ok_or_else(|| bad("malformed row"))?;
            let key: Vec<u8> = if key.is_empty() {
                Vec::new()
            } else {
                key.split(',')
                    .map(|t| t.parse().map_err(|_| bad("bad key")))
                    .collect::<Result<_>>()?
            };
            let vals: Vec<T> = vals
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| bad("bad value")))
                .collect::<Result<_>>()?;
            if vals.len() != k {
                return Err(bad("row width differs from sector count"));
            }
            table.rows.insert(DiscreteStateKey::from_bytes(key), vals);
        }
        Ok((table, window))
    }
}

/// Tabular Q-learning over `(S_A, S_o)` keys with ε-greedy selection.
#[derive(Debug, Clone)]
pub struct QLearningAgent<T> {
    pub table: QTable<T>,
    schedule: EpsilonSchedule,
    gamma: T,
    lr: T,
    t: u64,
}

impl<T: Scalar> QLearningAgent<T> {
    pub fn new(k: usize, schedule: EpsilonSchedule, gamma: T, lr: T) -> Self {
        QLearningAgent {
            table: QTable::new(k),
            schedule,
            gamma,
            lr,
            t: 0,
        }
    }
}

impl<T: Scalar> Policy<T> for QLearningAgent<T> {
    fn select(&mut self, memory: &AgentMemory<T>, rng: &mut dyn RngCore) -> Sector {
        let eps = self.schedule.value(self.t);
        self.t += 1;
        let row = self.table.row(&DiscreteStateKey::from_memory(memory));
        epsilon_greedy(&row, eps, rng)
    }

    fn learn(
        &mut self,
        before: &AgentMemory<T>,
        action: Sector,
        reward: i8,
        after: &AgentMemory<T>,
        _: &mut dyn RngCore,
    ) {
        let key = DiscreteStateKey::from_memory(before);
        let next = DiscreteStateKey::from_memory(after);
        self.table.update(
            &key,
            action,
            T::lit(reward as f64),
            &next,
            self.gamma,
            self.lr,
        );
    }

    fn epsilon(&self) -> f64 {
        self.schedule.value(self.t)
    }
}
