use std::path::PathBuf;

use super::trace::{integrate_energy, PowerTrace};
use super::MeterError;

/// One timed call: epoch timestamps around it and its monotonic latency.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window {
    pub start: f64,
    pub stop: f64,
    pub latency_s: f64,
}

/// Source of energy readings for timed windows.
#[derive(Clone, Debug, PartialEq)]
pub enum EnergyMeter {
    /// A machine-level power trace recorded alongside the run, integrated
    /// over each window once the run is over.
    TraceFile(PathBuf),
    /// An in-memory trace, same semantics as [`EnergyMeter::TraceFile`].
    Trace(PowerTrace),
    /// Fixed power draw: energy is `watts * latency`.
    SyntheticConstant(f64),
    /// A cumulative microjoule counter file, read before and after each call.
    RaplFile(PathBuf),
}

impl EnergyMeter {
    pub fn validate(&self) -> Result<(), MeterError> {
        match self {
            EnergyMeter::SyntheticConstant(w) if !(w.is_finite() && *w >= 0.0) => Err(
                MeterError::Meter(format!("constant power must be non-negative, got {w}")),
            ),
            _ => Ok(()),
        }
    }

    /// Counter reading taken right before a timed call, if the meter uses one.
    pub(crate) fn before(&self) -> Result<Option<u64>, MeterError> {
        match self {
            EnergyMeter::RaplFile(path) => read_counter(path).map(Some),
            _ => Ok(None),
        }
    }

    /// Energy of a call for counter meters, read right after it.
    pub(crate) fn after(&self, before: Option<u64>) -> Result<Option<f64>, MeterError> {
        match (self, before) {
            (EnergyMeter::RaplFile(path), Some(start)) => {
                let end = read_counter(path)?;
                let delta = if end >= start {
                    end - start
                } else {
                    let range = read_counter(&path.with_file_name("max_energy_range_uj"))
                        .map_err(|_| MeterError::Meter("energy counter wrapped".into()))?;
                    range - start + end
                };
                Ok(Some(delta as f64 * 1e-6))
            }
            _ => Ok(None),
        }
    }

    /// Energy for each window of a finished run, for meters that attribute
    /// after the fact.
    pub(crate) fn attribute(&self, windows: &[Window]) -> Result<Vec<f64>, MeterError> {
        match self {
            EnergyMeter::SyntheticConstant(w) => {
                Ok(windows.iter().map(|win| w * win.latency_s).collect())
            }
            EnergyMeter::TraceFile(path) => {
                let trace = PowerTrace::read(path)?;
                windows
                    .iter()
                    .map(|w| integrate_energy(&trace, w.start, w.stop))
                    .collect()
            }
            EnergyMeter::Trace(trace) => windows
                .iter()
                .map(|w| integrate_energy(trace, w.start, w.stop))
                .collect(),
            EnergyMeter::RaplFile(_) => Err(MeterError::Meter(
                "counter meters are read during the run".into(),
            )),
        }
    }

    pub fn is_counter(&self) -> bool {
        matches!(self, EnergyMeter::RaplFile(_))
    }
}

fn read_counter(path: &std::path::Path) -> Result<u64, MeterError> {
    let text = std::fs::read_to_string(path)?;
    text.trim()
        .parse()
        .map_err(|_| MeterError::Meter(format!("{} is not a counter", path.display())))
}
