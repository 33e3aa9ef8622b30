//! Latency and energy measurement.

mod benchmark;
mod meter;
mod trace;

use std::time::Instant;

pub use benchmark::{
    read_measurements, read_measurements_file, run_benchmark, write_measurements,
    write_measurements_file, BenchmarkOutcome, BenchmarkPlan, Measurement,
};
pub use meter::{EnergyMeter, Window};
pub use trace::{integrate_energy, PowerTrace, TRACE_HEADER};

#[derive(Debug, thiserror::Error)]
pub enum MeterError {
    #[error("invalid power trace: {0}")]
    InvalidTrace(String),
    #[error("invalid window [{start}, {stop}]")]
    InvalidWindow { start: f64, stop: f64 },
    #[error("trace covers only {:.1}% of the window", covered_fraction * 100.0)]
    PartialCoverage { covered_fraction: f64 },
    #[error("meter failure: {0}")]
    Meter(String),
    #[error("invalid benchmark plan: {0}")]
    InvalidPlan(String),
    #[error("dataset has {available} samples, {needed} needed")]
    InsufficientDataset { needed: usize, available: usize },
    #[error("recognition failed: {0}")]
    Recognition(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Time exactly one call with the monotonic clock. The latency is never
/// reported as zero.
pub fn time_call<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed().as_secs_f64();
    (out, elapsed.max(1e-9))
}
