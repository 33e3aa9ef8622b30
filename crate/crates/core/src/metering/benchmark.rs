use std::io::{Read, Write};
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::recognizers::{
    is_correct, recognize, square_accuracy, Algorithm, InvocationCounts, RecognizerConfig,
};
use crate::simulation::{GameRecord, Sample};

use super::meter::{EnergyMeter, Window};
use super::{time_call, MeterError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkPlan {
    /// Untimed recognitions run for this long before measuring.
    pub warmup_s: f64,
    pub batch_s: f64,
    pub cooldown_s: f64,
    /// Measured samples per algorithm.
    pub samples_target: usize,
    /// Shuffles the algorithm order inside each round.
    pub seed: u64,
}

impl Default for BenchmarkPlan {
    fn default() -> Self {
        BenchmarkPlan {
            warmup_s: 5.0,
            batch_s: 60.0,
            cooldown_s: 10.0,
            samples_target: 2000,
            seed: 0,
        }
    }
}

impl BenchmarkPlan {
    /// No waiting at all; for tests and quick runs.
    pub fn immediate(samples_target: usize) -> BenchmarkPlan {
        BenchmarkPlan {
            warmup_s: 0.0,
            batch_s: f64::INFINITY,
            cooldown_s: 0.0,
            samples_target,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), MeterError> {
        for (name, v) in [
            ("warmup_s", self.warmup_s),
            ("batch_s", self.batch_s),
            ("cooldown_s", self.cooldown_s),
        ] {
            if v.is_nan() || v < 0.0 {
                return Err(MeterError::InvalidPlan(format!("{name} must be >= 0")));
            }
        }
        if self.samples_target == 0 {
            return Err(MeterError::InvalidPlan("samples_target must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    pub algorithm: Algorithm,
    pub sample: usize,
    pub latency_s: f64,
    pub energy_j: f64,
    pub correct: bool,
    pub square_accuracy: f64,
    pub invocations: InvocationCounts,
}

#[derive(Debug, Serialize, Deserialize)]
struct MeasurementRow {
    algorithm: String,
    sample: usize,
    latency_s: f64,
    energy_j: f64,
    correct: bool,
    square_accuracy: f64,
    occ_calls: u32,
    color_calls: u32,
    type_calls: u32,
}

pub fn write_measurements<W: Write>(out: W, rows: &[Measurement]) -> Result<(), MeterError> {
    let mut w = csv::Writer::from_writer(out);
    for m in rows {
        w.serialize(MeasurementRow {
            algorithm: m.algorithm.to_string(),
            sample: m.sample,
            latency_s: m.latency_s,
            energy_j: m.energy_j,
            correct: m.correct,
            square_accuracy: m.square_accuracy,
            occ_calls: m.invocations.occupancy,
            color_calls: m.invocations.color,
            type_calls: m.invocations.type_,
        })?;
    }
    if rows.is_empty() {
        w.write_record([
            "algorithm",
            "sample",
            "latency_s",
            "energy_j",
            "correct",
            "square_accuracy",
            "occ_calls",
            "color_calls",
            "type_calls",
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_measurements<R: Read>(input: R) -> Result<Vec<Measurement>, MeterError> {
    let mut rdr = csv::Reader::from_reader(input);
    rdr.deserialize::<MeasurementRow>()
        .map(|row| {
            let row = row?;
            Ok(Measurement {
                algorithm: row
                    .algorithm
                    .parse()
                    .map_err(|e| MeterError::InvalidTrace(format!("{e}")))?,
                sample: row.sample,
                latency_s: row.latency_s,
                energy_j: row.energy_j,
                correct: row.correct,
                square_accuracy: row.square_accuracy,
                invocations: InvocationCounts {
                    occupancy: row.occ_calls,
                    color: row.color_calls,
                    type_: row.type_calls,
                },
            })
        })
        .collect()
}

pub fn write_measurements_file(path: &Path, rows: &[Measurement]) -> Result<(), MeterError> {
    write_measurements(std::fs::File::create(path)?, rows)
}

pub fn read_measurements_file(path: &Path) -> Result<Vec<Measurement>, MeterError> {
    read_measurements(std::fs::File::open(path)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkOutcome {
    pub measurements: Vec<Measurement>,
    /// Set when the run stopped early; `measurements` then holds what was
    /// completed.
    pub aborted: Option<String>,
}

impl BenchmarkOutcome {
    pub fn is_complete(&self) -> bool {
        self.aborted.is_none()
    }
}

struct Clock {
    epoch: f64,
    origin: Instant,
}

impl Clock {
    fn new() -> Clock {
        let epoch = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0);
        Clock {
            epoch,
            origin: Instant::now(),
        }
    }

    /// Epoch seconds derived from the monotonic clock.
    fn at(&self, instant: Instant) -> f64 {
        self.epoch + instant.duration_since(self.origin).as_secs_f64()
    }
}

fn pause(seconds: f64, abort: Option<&AtomicBool>) {
    let deadline = Instant::now() + Duration::from_secs_f64(seconds);
    while Instant::now() < deadline {
        if abort.is_some_and(|a| a.load(Ordering::Relaxed)) {
            return;
        }
        let left = deadline.saturating_duration_since(Instant::now());
        std::thread::sleep(left.min(Duration::from_millis(50)));
    }
}

/// Run the measurement protocol: warm-up, then batches of timed
/// recognitions with every algorithm run once per sample in a shuffled
/// order, then cool-down pauses between batches. Every measurement is kept,
/// outliers included.
///
/// Must run on a single thread with nothing else busy; `abort` stops the
/// run between calls.
pub fn run_benchmark(
    plan: &BenchmarkPlan,
    algorithms: &[RecognizerConfig],
    dataset: &[GameRecord],
    meter: &EnergyMeter,
    abort: Option<&AtomicBool>,
) -> Result<BenchmarkOutcome, MeterError> {
    plan.validate()?;
    meter.validate()?;
    if algorithms.is_empty() {
        return Err(MeterError::InvalidPlan("no algorithms".into()));
    }
    for config in algorithms {
        config
            .validate()
            .map_err(|e| MeterError::InvalidPlan(e.to_string()))?;
    }
    let samples: Vec<Sample<'_>> = dataset
        .iter()
        .flat_map(|g| g.samples())
        .take(plan.samples_target)
        .collect();
    if samples.len() < plan.samples_target {
        return Err(MeterError::InsufficientDataset {
            needed: plan.samples_target,
            available: samples.len(),
        });
    }

    let warmup_end = Instant::now() + Duration::from_secs_f64(plan.warmup_s);
    let mut cursor = 0;
    while Instant::now() < warmup_end {
        if abort.is_some_and(|a| a.load(Ordering::Relaxed)) {
            break;
        }
        let s = &samples[cursor % samples.len()];
        let config = &algorithms[cursor % algorithms.len()];
        let _ = std::hint::black_box(recognize(config, s.prev, s.observation));
        cursor += 1;
    }

    let clock = Clock::new();
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mut order: Vec<usize> = (0..algorithms.len()).collect();
    let mut measurements = Vec::with_capacity(samples.len() * algorithms.len());
    let mut windows = Vec::with_capacity(measurements.capacity());
    let mut aborted = None;
    let mut batch_start = Instant::now();

    'outer: for (index, sample) in samples.iter().enumerate() {
        order.shuffle(&mut rng);
        for &a in &order {
            if abort.is_some_and(|flag| flag.load(Ordering::Relaxed)) {
                aborted = Some("aborted on request".to_string());
                break 'outer;
            }
            let config = &algorithms[a];
            let before = match meter.before() {
                Ok(b) => b,
                Err(e) => {
                    aborted = Some(format!("meter failure: {e}"));
                    break 'outer;
                }
            };
            let t0 = Instant::now();
            let (result, latency) = time_call(|| recognize(config, sample.prev, sample.observation));
            let t1 = t0 + Duration::from_secs_f64(latency);
            let counted = match meter.after(before) {
                Ok(e) => e,
                Err(e) => {
                    aborted = Some(format!("meter failure: {e}"));
                    break 'outer;
                }
            };
            let prediction = result.map_err(|e| MeterError::Recognition(e.to_string()))?;
            windows.push(Window {
                start: clock.at(t0),
                stop: clock.at(t1),
                latency_s: latency,
            });
            measurements.push(Measurement {
                algorithm: config.algorithm,
                sample: index,
                latency_s: latency,
                energy_j: counted.unwrap_or(0.0),
                correct: is_correct(&prediction.placement, sample.truth.placement()),
                square_accuracy: square_accuracy(&prediction.placement, sample.truth.placement()),
                invocations: prediction.invocations,
            });
        }
        let more = index + 1 < samples.len();
        if more && batch_start.elapsed().as_secs_f64() >= plan.batch_s {
            pause(plan.cooldown_s, abort);
            batch_start = Instant::now();
        }
    }

    if !meter.is_counter() {
        match meter.attribute(&windows) {
            Ok(energies) => {
                for (m, e) in measurements.iter_mut().zip(energies) {
                    m.energy_j = e;
                }
            }
            Err(e) => {
                for m in &mut measurements {
                    m.energy_j = f64::NAN;
                }
                aborted.get_or_insert_with(|| format!("meter failure: {e}"));
            }
        }
    }
    Ok(BenchmarkOutcome {
        measurements,
        aborted,
    })
}
