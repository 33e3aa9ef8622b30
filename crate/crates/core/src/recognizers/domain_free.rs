//! Recognizers that classify each square independently.

use crate::chess::{class_content, class_index, Color, Piece, PieceKind, Placement, Square};
use crate::simulation::Observation;

use super::probe::ModelProbe;
use super::Prediction;

fn argmax_first(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Square detector: argmax of the 13-class distribution on every square.
pub fn sd_recognize(obs: &Observation, work: u32) -> Prediction {
    let mut probe = ModelProbe::new(obs, work);
    let mut placement = Placement::empty();
    for sq in Square::all() {
        let dist = probe.types(sq);
        let class = argmax_first(dist.iter().copied());
        placement.set(sq, class_content(class).expect("class index in range"));
    }
    Prediction::from_placement(placement, probe.counts())
}

/// Ensemble detector: occupancy first, then color and type only for
/// squares read as occupied. The type argmax is restricted to the six
/// kinds of the detected color.
pub fn esd_recognize(obs: &Observation, occupancy_threshold: f64, work: u32) -> Prediction {
    let mut probe = ModelProbe::new(obs, work);
    let mut placement = Placement::empty();
    for sq in Square::all() {
        if probe.occupancy(sq) <= occupancy_threshold {
            continue;
        }
        let color = if probe.white(sq) > 0.5 {
            Color::White
        } else {
            Color::Black
        };
        let dist = probe.types(sq);
        let kind_index = argmax_first(
            PieceKind::ALL
                .iter()
                .map(|&kind| dist[class_index(Some(Piece::new(color, kind)))]),
        );
        placement.set(sq, Some(Piece::new(color, PieceKind::ALL[kind_index])));
    }
    Prediction::from_placement(placement, probe.counts())
}
