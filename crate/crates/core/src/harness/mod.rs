//! Configuration, the simulation loop, sweeps and CSV output.

pub mod config;
pub mod metrics;
pub mod sim;
pub mod sweep;

pub use config::{Precision, SimConfig};
pub use metrics::{MetricsRow, TraceRow};
pub use sim::{rng_stream, run, run_to_writer, IntervalDetail, Simulation};
pub use sweep::{
    aggregate_files, aggregate_rows, read_rows, sweep, AggregateRow, Manifest, SweepOutput,
    SweepPlan,
};
