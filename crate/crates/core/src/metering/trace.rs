use std::io::{Read, Write};
use std::path::Path;

use super::MeterError;

pub const TRACE_HEADER: &str = "timestamp,power_watts";

/// Time-ordered power samples, timestamps in seconds since the epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerTrace {
    samples: Vec<(f64, f64)>,
}

impl PowerTrace {
    pub fn new(samples: Vec<(f64, f64)>) -> Result<PowerTrace, MeterError> {
        if samples.len() < 2 {
            return Err(MeterError::InvalidTrace(
                "a trace needs at least two samples".into(),
            ));
        }
        for (i, &(t, w)) in samples.iter().enumerate() {
            if !t.is_finite() || !w.is_finite() || w < 0.0 {
                return Err(MeterError::InvalidTrace(format!(
                    "sample {i}: ({t}, {w}) is not a finite non-negative reading"
                )));
            }
            if i > 0 && t <= samples[i - 1].0 {
                return Err(MeterError::InvalidTrace(format!(
                    "sample {i}: timestamps must increase strictly"
                )));
            }
        }
        Ok(PowerTrace { samples })
    }

    /// Constant power over `[start, stop]`.
    pub fn constant(watts: f64, start: f64, stop: f64) -> Result<PowerTrace, MeterError> {
        PowerTrace::new(vec![(start, watts), (stop, watts)])
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn start(&self) -> f64 {
        self.samples[0].0
    }

    pub fn stop(&self) -> f64 {
        self.samples[self.samples.len() - 1].0
    }

    /// Linear interpolation of the power at `t`, inside the trace span.
    fn power_at(&self, t: f64) -> f64 {
        let i = self.samples.partition_point(|&(ts, _)| ts <= t);
        if i == 0 {
            return self.samples[0].1;
        }
        if i == self.samples.len() {
            return self.samples[i - 1].1;
        }
        let (t0, p0) = self.samples[i - 1];
        let (t1, p1) = self.samples[i];
        p0 + (p1 - p0) * (t - t0) / (t1 - t0)
    }

    pub fn from_csv<R: Read>(reader: R) -> Result<PowerTrace, MeterError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = rdr.headers()?.iter().collect::<Vec<_>>().join(",");
        if header != TRACE_HEADER {
            return Err(MeterError::InvalidTrace(format!(
                "expected header {TRACE_HEADER:?}, found {header:?}"
            )));
        }
        let mut samples = Vec::new();
        for record in rdr.deserialize::<(f64, f64)>() {
            samples.push(record?);
        }
        PowerTrace::new(samples)
    }

    pub fn read(path: &Path) -> Result<PowerTrace, MeterError> {
        PowerTrace::from_csv(std::fs::File::open(path)?)
    }

    /// UTF-8, `\n` line endings, microsecond timestamps.
    pub fn to_csv<W: Write>(&self, mut out: W) -> Result<(), MeterError> {
        writeln!(out, "{TRACE_HEADER}")?;
        for &(t, w) in &self.samples {
            writeln!(out, "{t:.6},{w}")?;
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<(), MeterError> {
        let mut buf = Vec::new();
        self.to_csv(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }
}

/// Trapezoidal integral of power over `[start, stop]` in joules, with the
/// edges interpolated linearly.
pub fn integrate_energy(trace: &PowerTrace, start: f64, stop: f64) -> Result<f64, MeterError> {
    if !(start.is_finite() && stop.is_finite() && start < stop) {
        return Err(MeterError::InvalidWindow { start, stop });
    }
    if start < trace.start() || stop > trace.stop() {
        let covered = (stop.min(trace.stop()) - start.max(trace.start())).max(0.0);
        return Err(MeterError::PartialCoverage {
            covered_fraction: covered / (stop - start),
        });
    }
    let s = trace.samples();
    let first = s.partition_point(|&(t, _)| t <= start);
    let last = s.partition_point(|&(t, _)| t < stop);
    let mut prev = (start, trace.power_at(start));
    let mut energy = 0.0;
    for &(t, p) in &s[first..last] {
        energy += (t - prev.0) * (p + prev.1) / 2.0;
        prev = (t, p);
    }
    energy += (stop - prev.0) * (trace.power_at(stop) + prev.1) / 2.0;
    Ok(energy)
}
