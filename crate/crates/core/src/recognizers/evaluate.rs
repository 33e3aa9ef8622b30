use serde::{Deserialize, Serialize};

use crate::chess::{BoardState, Placement, Square};
use crate::stats::{mean, median};

use super::{Prediction, RecognizeError};

/// Fraction of the 64 squares whose content matches.
pub fn square_accuracy(predicted: &Placement, truth: &Placement) -> f64 {
    let correct = Square::all()
        .filter(|&sq| predicted.get(sq) == truth.get(sq))
        .count();
    correct as f64 / 64.0
}

/// Board-level exact match.
pub fn is_correct(predicted: &Placement, truth: &Placement) -> bool {
    predicted == truth
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub n: usize,
    pub board_accuracy: f64,
    pub mean_square_accuracy: f64,
    pub median_square_accuracy: f64,
    /// Fraction of predicted moves equal to the played move; only for
    /// domain-aware predictions when the played moves are known.
    pub move_accuracy: Option<f64>,
    pub median_occupancy_invocations: f64,
    pub median_color_invocations: f64,
    pub median_type_invocations: f64,
    pub median_total_invocations: f64,
}

/// Aggregate accuracy and invocation metrics over paired predictions and
/// true states. `played` optionally carries the true moves.
pub fn evaluate(
    predictions: &[Prediction],
    truths: &[BoardState],
    played: Option<&[crate::chess::Move]>,
) -> Result<Metrics, RecognizeError> {
    if predictions.len() != truths.len() {
        return Err(RecognizeError::LengthMismatch {
            predictions: predictions.len(),
            truths: truths.len(),
        });
    }
    if let Some(moves) = played {
        if moves.len() != predictions.len() {
            return Err(RecognizeError::LengthMismatch {
                predictions: predictions.len(),
                truths: moves.len(),
            });
        }
    }
    if predictions.is_empty() {
        return Err(RecognizeError::LengthMismatch {
            predictions: 0,
            truths: 0,
        });
    }
    let squares: Vec<f64> = predictions
        .iter()
        .zip(truths)
        .map(|(p, t)| square_accuracy(&p.placement, t.placement()))
        .collect();
    let exact = predictions
        .iter()
        .zip(truths)
        .filter(|(p, t)| is_correct(&p.placement, t.placement()))
        .count();
    let move_accuracy = played.and_then(|moves| {
        if predictions.iter().any(|p| p.predicted_move.is_none()) {
            return None;
        }
        let hits = predictions
            .iter()
            .zip(moves)
            .filter(|(p, m)| p.predicted_move.as_ref() == Some(m))
            .count();
        Some(hits as f64 / moves.len() as f64)
    });
    let med = |f: fn(&Prediction) -> u32| {
        let xs: Vec<f64> = predictions.iter().map(|p| f64::from(f(p))).collect();
        median(&xs).expect("non-empty")
    };
    Ok(Metrics {
        n: predictions.len(),
        board_accuracy: exact as f64 / predictions.len() as f64,
        mean_square_accuracy: mean(&squares).expect("non-empty"),
        median_square_accuracy: median(&squares).expect("non-empty"),
        move_accuracy,
        median_occupancy_invocations: med(|p| p.invocations.occupancy),
        median_color_invocations: med(|p| p.invocations.color),
        median_type_invocations: med(|p| p.invocations.type_),
        median_total_invocations: med(|p| p.invocations.total()),
    })
}
