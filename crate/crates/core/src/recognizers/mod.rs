//! Board recognition strategies over a simulated [`Observation`].

mod domain_aware;
mod domain_free;
mod evaluate;
mod probe;
mod scoring;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chess::{parse_move, BoardState, Move, Placement};
use crate::simulation::Observation;

pub use domain_aware::{cpa_recognize, cps_recognize, ia_recognize, topk_recognize};
pub use domain_free::{esd_recognize, sd_recognize};
pub use evaluate::{evaluate, is_correct, square_accuracy, Metrics};
pub use probe::{InvocationCounts, ModelProbe};
pub use scoring::{combine, score_move, FactorSet};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RecognizeError {
    #[error("no legal moves in {0}")]
    GameOver(String),
    #[error("illegal move: {0}")]
    IllegalMove(String),
    #[error("invalid recognizer config: {0}")]
    InvalidConfig(String),
    #[error("length mismatch: {predictions} predictions, {truths} truths")]
    LengthMismatch { predictions: usize, truths: usize },
    #[error("invalid prediction document: {0}")]
    Format(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Sd,
    Esd,
    Ia,
    Cpa,
    Cps,
    TopK(u8),
}

impl Algorithm {
    /// The nine configurations compared in the benchmark.
    pub fn standard_suite() -> Vec<Algorithm> {
        vec![
            Algorithm::Sd,
            Algorithm::Esd,
            Algorithm::Ia,
            Algorithm::Cpa,
            Algorithm::Cps,
            Algorithm::TopK(2),
            Algorithm::TopK(3),
            Algorithm::TopK(4),
            Algorithm::TopK(5),
        ]
    }

    pub fn is_domain_aware(self) -> bool {
        !matches!(self, Algorithm::Sd | Algorithm::Esd)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::Sd => f.write_str("SD"),
            Algorithm::Esd => f.write_str("ESD"),
            Algorithm::Ia => f.write_str("IA"),
            Algorithm::Cpa => f.write_str("CPA"),
            Algorithm::Cps => f.write_str("CPS"),
            Algorithm::TopK(k) => write!(f, "TK-{k}"),
        }
    }
}

impl FromStr for Algorithm {
    type Err = RecognizeError;

    fn from_str(s: &str) -> Result<Algorithm, RecognizeError> {
        let upper = s.trim().to_ascii_uppercase();
        let alg = match upper.as_str() {
            "SD" => Algorithm::Sd,
            "ESD" => Algorithm::Esd,
            "IA" => Algorithm::Ia,
            "CPA" => Algorithm::Cpa,
            "CPS" => Algorithm::Cps,
            _ => {
                let k = upper
                    .strip_prefix("TK-")
                    .or_else(|| upper.strip_prefix("TK"))
                    .and_then(|k| k.parse::<u8>().ok())
                    .ok_or_else(|| RecognizeError::InvalidConfig(format!("unknown algorithm {s:?}")))?;
                if !(1..=64).contains(&k) {
                    return Err(RecognizeError::InvalidConfig(format!(
                        "top-k needs 1 <= k <= 64, got {k}"
                    )));
                }
                Algorithm::TopK(k)
            }
        };
        Ok(alg)
    }
}

impl Serialize for Algorithm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Algorithm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Algorithm, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecognizerConfig {
    pub algorithm: Algorithm,
    /// ESD occupancy cut-off τ.
    #[serde(default = "default_threshold")]
    pub occupancy_threshold: f64,
    /// Moves scoring below θ are flagged low-confidence; 0 disables.
    #[serde(default)]
    pub score_threshold: f64,
    /// Simulated CPU work per model invocation.
    #[serde(default)]
    pub inference_work: u32,
}

fn default_threshold() -> f64 {
    0.5
}

impl RecognizerConfig {
    pub fn new(algorithm: Algorithm) -> RecognizerConfig {
        RecognizerConfig {
            algorithm,
            occupancy_threshold: default_threshold(),
            score_threshold: 0.0,
            inference_work: 0,
        }
    }

    pub fn with_work(mut self, work: u32) -> RecognizerConfig {
        self.inference_work = work;
        self
    }

    pub fn validate(&self) -> Result<(), RecognizeError> {
        if let Algorithm::TopK(k) = self.algorithm {
            if !(1..=64).contains(&k) {
                return Err(RecognizeError::InvalidConfig(format!(
                    "top-k needs 1 <= k <= 64, got {k}"
                )));
            }
        }
        if !(self.occupancy_threshold > 0.0 && self.occupancy_threshold < 1.0) {
            return Err(RecognizeError::InvalidConfig(format!(
                "occupancy threshold must lie in (0, 1), got {}",
                self.occupancy_threshold
            )));
        }
        if !(0.0..=1.0).contains(&self.score_threshold) {
            return Err(RecognizeError::InvalidConfig(format!(
                "score threshold must lie in [0, 1], got {}",
                self.score_threshold
            )));
        }
        Ok(())
    }
}

/// Output of one recognition.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub placement: Placement,
    pub predicted_move: Option<Move>,
    pub score: Option<f64>,
    pub invocations: InvocationCounts,
    pub low_confidence: bool,
    pub latency_s: f64,
    pub energy_j: f64,
}

impl Prediction {
    pub fn from_placement(placement: Placement, invocations: InvocationCounts) -> Prediction {
        Prediction {
            placement,
            predicted_move: None,
            score: None,
            invocations,
            low_confidence: false,
            latency_s: 0.0,
            energy_j: 0.0,
        }
    }

    pub fn to_doc(&self) -> PredictionDoc {
        PredictionDoc {
            placement: self.placement.to_fen_field(),
            predicted_move: self.predicted_move.map(|m| m.to_uci()),
            score: self.score,
            invocations: self.invocations,
            low_confidence: self.low_confidence,
            latency_s: self.latency_s,
            energy_j: self.energy_j,
        }
    }

    /// Rebuild from a document. The move is re-parsed against `prev`, so it
    /// must be given whenever the document carries a move.
    pub fn from_doc(doc: &PredictionDoc, prev: Option<&BoardState>) -> Result<Prediction, RecognizeError> {
        let placement = Placement::from_fen_field(&doc.placement)
            .map_err(|e| RecognizeError::Format(e.to_string()))?;
        let predicted_move = match (&doc.predicted_move, prev) {
            (None, _) => None,
            (Some(uci), Some(prev)) => Some(
                parse_move(prev, uci).map_err(|_| RecognizeError::IllegalMove(uci.clone()))?,
            ),
            (Some(_), None) => {
                return Err(RecognizeError::Format(
                    "a move needs its previous position".into(),
                ))
            }
        };
        if predicted_move.is_some() != doc.score.is_some() {
            return Err(RecognizeError::Format(
                "score must be present exactly when a move is".into(),
            ));
        }
        Ok(Prediction {
            placement,
            predicted_move,
            score: doc.score,
            invocations: doc.invocations,
            low_confidence: doc.low_confidence,
            latency_s: doc.latency_s,
            energy_j: doc.energy_j,
        })
    }
}

/// JSON form of a [`Prediction`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionDoc {
    pub placement: String,
    #[serde(rename = "move")]
    pub predicted_move: Option<String>,
    pub score: Option<f64>,
    pub invocations: InvocationCounts,
    #[serde(default)]
    pub low_confidence: bool,
    #[serde(default)]
    pub latency_s: f64,
    #[serde(default)]
    pub energy_j: f64,
}

/// Run the configured algorithm. Domain-free algorithms ignore `prev`.
pub fn recognize(
    config: &RecognizerConfig,
    prev: &BoardState,
    obs: &Observation,
) -> Result<Prediction, RecognizeError> {
    config.validate()?;
    let work = config.inference_work;
    let mut prediction = match config.algorithm {
        Algorithm::Sd => sd_recognize(obs, work),
        Algorithm::Esd => esd_recognize(obs, config.occupancy_threshold, work),
        Algorithm::Ia => ia_recognize(prev, obs, work)?,
        Algorithm::Cpa => cpa_recognize(prev, obs, work)?,
        Algorithm::Cps => cps_recognize(prev, obs, work)?,
        Algorithm::TopK(k) => topk_recognize(k, prev, obs, work)?,
    };
    if let Some(score) = prediction.score {
        prediction.low_confidence = score < config.score_threshold;
    }
    Ok(prediction)
}
