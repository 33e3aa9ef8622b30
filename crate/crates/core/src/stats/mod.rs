//! Descriptive statistics and the hypothesis tests used to compare
//! recognizers.

mod descriptive;
mod proportion;
mod rank;
mod shapiro;
pub mod special;

use serde::{Deserialize, Serialize};

pub use descriptive::{descriptive, mean, median, Descriptive};
pub use proportion::two_proportion_z;
pub use rank::{adjust_p_values, dunn_posthoc, eta_squared, kruskal_wallis, Adjustment, PosthocMatrix};
pub use shapiro::shapiro_wilk;
pub use special::{chi2_sf, normal_cdf, normal_quantile, normal_sf};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("empty sample")]
    EmptySample,
    #[error("sample contains a non-finite value")]
    NonFinite,
    #[error("invalid sample size {n}: {reason}")]
    SampleSize { n: usize, reason: &'static str },
    #[error("degenerate data: {0}")]
    Degenerate(String),
}

/// One test outcome, in the shape of the stats report JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test: String,
    pub statistic: f64,
    pub p_value: f64,
    pub effect_size: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub df: Option<f64>,
    /// Group sizes.
    pub groups: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub adjustment: Option<Adjustment>,
    /// Optional label, e.g. the algorithm a per-group test ran on.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub label: Option<String>,
}

impl TestResult {
    pub fn new(test: &str, statistic: f64, p_value: f64) -> TestResult {
        TestResult {
            test: test.to_string(),
            statistic,
            p_value: p_value.clamp(0.0, 1.0),
            effect_size: None,
            df: None,
            groups: Vec::new(),
            adjustment: None,
            label: None,
        }
    }

    pub fn with_groups(mut self, groups: Vec<usize>) -> TestResult {
        self.groups = groups;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> TestResult {
        self.label = Some(label.into());
        self
    }
}
