use crate::objective::AgentMemory;
use crate::scalar::Scalar;

/// Length of the dense state vector: `W·K + W + K`.
pub fn state_len(window: usize, k: usize) -> usize {
    window * k + window + k
}

/// Dense state: one-hot sector per history slot, raw outcome codes, then the
/// probing distribution.
///
/// Slots are filled oldest first; while the window is still filling, the
/// missing trailing slots stay all-zero.
pub fn encode_state<T: Scalar>(memory: &AgentMemory<T>) -> Vec<T> {
    let (w, k) = (memory.window(), memory.sectors());
    let mut v = vec![T::zero(); state_len(w, k)];
    for (slot, s) in memory.actions().enumerate() {
        v[slot * k + s.index()] = T::one();
    }
    let base = w * k;
    for (slot, o) in memory.outcomes().enumerate() {
        v[base + slot] = o;
    }
    let (_, dist) = memory.distribution();
    v[base + w..].copy_from_slice(&dist);
    v
}

/// Hashable `(S_A, S_o)` key for the tabular learner: sector numbers then
/// outcome codes as 0/1/2. The probing distribution is left out.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DiscreteStateKey(Vec<u8>);

impl DiscreteStateKey {
    pub fn from_memory<T: Scalar>(memory: &AgentMemory<T>) -> Self {
        let mut key: Vec<u8> = memory.actions().map(|s| s.number() as u8).collect();
        key.extend(memory.outcomes().map(|o| (o.as_f64() * 2.0).round() as u8));
        DiscreteStateKey(key)
    }

    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        DiscreteStateKey(bytes)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}
