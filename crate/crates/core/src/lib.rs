//! Adaptive directional neighbor discovery for mobile aerial swarms.
//!
//! Nodes carry `K` sector transceivers and probe one sector per NDM interval.
//! Each node runs its own agent (random, tabular Q-learning or DQN) that
//! trades discovery efficiency against spreading probes over many sectors,
//! where undesired users may overhear them.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the precision the harness uses by default.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod harness;
pub mod mobility;
pub mod neural;
pub mod objective;
pub mod policy;
pub mod protocol;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default working precision.
pub type Real = f64;

pub type Vec2 = geometry::Vec2<Real>;
pub type SectorLayout = geometry::SectorLayout<Real>;
pub type RadioParams = geometry::RadioParams<Real>;
pub type MobilityConfig = mobility::MobilityConfig<Real>;
pub type SwarmState = mobility::SwarmState<Real>;
pub type AgentMemory = objective::AgentMemory<Real>;
pub type Mlp = neural::Mlp<Real>;
pub type Adam = neural::Adam<Real>;
pub type DqnAgent = policy::DqnAgent<Real>;
pub type QLearningAgent = policy::QLearningAgent<Real>;
pub type Simulation = harness::Simulation<Real>;

/// Single-precision variants.
pub type Mlp32 = neural::Mlp<f32>;
pub type Simulation32 = harness::Simulation<f32>;
