//! The statistics report written by `boardsense stats`.

use std::collections::BTreeMap;

use boardsense_core::metering::Measurement;
use boardsense_core::recognizers::Algorithm;
use boardsense_core::stats::{
    descriptive, dunn_posthoc, kruskal_wallis, shapiro_wilk, two_proportion_z, Adjustment,
    Descriptive, PosthocMatrix, TestResult,
};
use serde::Serialize;

/// A test outcome, or why it could not be computed.
#[derive(Debug, Serialize)]
#[serde(untagged)]
pub enum Outcome<T> {
    Ok(T),
    Err { label: Option<String>, error: String },
}

impl<T> Outcome<T> {
    fn from<E: ToString>(r: Result<T, E>, label: Option<String>) -> Outcome<T> {
        match r {
            Ok(v) => Outcome::Ok(v),
            Err(e) => Outcome::Err {
                label,
                error: e.to_string(),
            },
        }
    }
}

#[derive(Debug, Serialize)]
pub struct MetricAnalysis {
    pub descriptive: BTreeMap<String, Outcome<Descriptive>>,
    pub shapiro_wilk: Vec<Outcome<TestResult>>,
    pub kruskal_wallis: Outcome<TestResult>,
    pub dunn: Outcome<PosthocMatrix>,
}

#[derive(Debug, Serialize)]
pub struct StatsReport {
    pub algorithms: Vec<String>,
    pub samples: BTreeMap<String, usize>,
    pub adjustment: Adjustment,
    pub latency_s: MetricAnalysis,
    pub energy_j: MetricAnalysis,
    /// Accuracy of each step of the IA -> CPA -> CPS refinement against the
    /// next, over the steps present.
    pub accuracy_z_tests: Vec<Outcome<TestResult>>,
}

fn algorithm_order(measurements: &[Measurement]) -> Vec<Algorithm> {
    let mut seen = Vec::new();
    for m in measurements {
        if !seen.contains(&m.algorithm) {
            seen.push(m.algorithm);
        }
    }
    seen
}

fn analyze_metric(
    algs: &[Algorithm],
    measurements: &[Measurement],
    adjust: Adjustment,
    value: fn(&Measurement) -> f64,
) -> MetricAnalysis {
    let groups: Vec<Vec<f64>> = algs
        .iter()
        .map(|a| {
            measurements
                .iter()
                .filter(|m| m.algorithm == *a)
                .map(value)
                .collect()
        })
        .collect();
    let labels: Vec<String> = algs.iter().map(Algorithm::to_string).collect();
    MetricAnalysis {
        descriptive: labels
            .iter()
            .zip(&groups)
            .map(|(l, g)| (l.clone(), Outcome::from(descriptive(g), Some(l.clone()))))
            .collect(),
        shapiro_wilk: labels
            .iter()
            .zip(&groups)
            .map(|(l, g)| {
                Outcome::from(
                    shapiro_wilk(g).map(|r| r.with_label(l.clone())),
                    Some(l.clone()),
                )
            })
            .collect(),
        kruskal_wallis: Outcome::from(kruskal_wallis(&groups), None),
        dunn: Outcome::from(dunn_posthoc(&groups, &labels, adjust), None),
    }
}

pub fn analyze(measurements: &[Measurement], adjust: Adjustment) -> StatsReport {
    let algs = algorithm_order(measurements);
    let count = |a: Algorithm| measurements.iter().filter(|m| m.algorithm == a).count();
    let hits = |a: Algorithm| {
        measurements
            .iter()
            .filter(|m| m.algorithm == a && m.correct)
            .count() as u64
    };
    let steps: Vec<Algorithm> = [Algorithm::Ia, Algorithm::Cpa, Algorithm::Cps]
        .into_iter()
        .filter(|a| algs.contains(a))
        .collect();
    let accuracy_z_tests = steps
        .windows(2)
        .map(|w| {
            let label = format!("{} vs {}", w[0], w[1]);
            Outcome::from(
                two_proportion_z(hits(w[0]), count(w[0]) as u64, hits(w[1]), count(w[1]) as u64)
                    .map(|r| r.with_label(label.clone())),
                Some(label),
            )
        })
        .collect();
    StatsReport {
        algorithms: algs.iter().map(Algorithm::to_string).collect(),
        samples: algs.iter().map(|&a| (a.to_string(), count(a))).collect(),
        adjustment: adjust,
        latency_s: analyze_metric(&algs, measurements, adjust, |m| m.latency_s),
        energy_j: analyze_metric(&algs, measurements, adjust, |m| m.energy_j),
        accuracy_z_tests,
    }
}
