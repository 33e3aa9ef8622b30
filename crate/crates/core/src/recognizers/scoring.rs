use crate::chess::{legal_moves, BoardState, Color, Move, MoveKind, Square};
use crate::simulation::Observation;

use super::probe::ModelProbe;
use super::RecognizeError;

/// Which per-move factors enter the combined probability.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FactorSet {
    /// Origin emptiness and destination occupancy for every move kind.
    Combined,
    /// Kind-specific: captures add the mover's color at the destination,
    /// en passant adds the victim square's emptiness, castling scores all
    /// four king and rook squares.
    Special,
}

/// Geometric mean of the factors; `0` for an empty slice.
pub fn combine(factors: &[f64]) -> f64 {
    if factors.is_empty() {
        return 0.0;
    }
    let product: f64 = factors.iter().product();
    product.powf(1.0 / factors.len() as f64)
}

fn mover_color(probe: &mut ModelProbe<'_>, sq: Square, mover: Color) -> f64 {
    let white = probe.white(sq);
    match mover {
        Color::White => white,
        Color::Black => 1.0 - white,
    }
}

fn castle_mask(mv: &Move) -> u64 {
    let (rook_from, rook_to) = mv.castling_rook().expect("castling moves a rook");
    mv.origin.bit() | mv.destination.bit() | rook_from.bit() | rook_to.bit()
}

/// Per-recognition scoring state.
///
/// With [`FactorSet::Special`], a non-castling move that touches the squares
/// of a legal castling (a king step onto the rook's target, a rook leaving its
/// corner) is scored on the expected contents of all of those squares after
/// the move. Otherwise it would match a castling observation on its own two
/// squares as well as the castling itself does.
pub(crate) struct Scorer<'p> {
    prev: &'p BoardState,
    set: FactorSet,
    castles: Vec<u64>,
}

impl<'p> Scorer<'p> {
    pub(crate) fn new(prev: &'p BoardState, legal: &[Move], set: FactorSet) -> Scorer<'p> {
        let castles = match set {
            FactorSet::Combined => Vec::new(),
            FactorSet::Special => legal
                .iter()
                .filter(|m| m.is_castle())
                .map(castle_mask)
                .collect(),
        };
        Scorer { prev, set, castles }
    }

    /// Score one move through the probe, consulting only the squares its
    /// factor set needs.
    pub(crate) fn score(&self, probe: &mut ModelProbe<'_>, mv: &Move) -> f64 {
        let mover = self.prev.side_to_move();
        let mut factors = [0.0; 12];
        let mut n = 0;
        let mut push = |f: f64| {
            factors[n] = f;
            n += 1;
        };
        if self.set == FactorSet::Combined {
            push(probe.empty(mv.origin));
            push(probe.occupancy(mv.destination));
            return combine(&factors[..n]);
        }
        match mv.kind {
            MoveKind::CastleKingside | MoveKind::CastleQueenside => {
                let (rook_from, rook_to) = mv.castling_rook().expect("castling moves a rook");
                push(probe.empty(mv.origin));
                push(probe.empty(rook_from));
                push(probe.occupancy(mv.destination));
                push(probe.occupancy(rook_to));
            }
            _ => {
                let own = mv.origin.bit() | mv.destination.bit();
                let context = self
                    .castles
                    .iter()
                    .filter(|&&mask| mask & own != 0)
                    .fold(0u64, |acc, mask| acc | mask);
                push(probe.empty(mv.origin));
                push(probe.occupancy(mv.destination));
                let mut rest = context & !own;
                while rest != 0 {
                    let sq = Square::new(rest.trailing_zeros() as u8).unwrap();
                    rest &= rest - 1;
                    // untouched squares keep their previous contents
                    if self.prev.piece_at(sq).is_some() {
                        push(probe.occupancy(sq));
                    } else {
                        push(probe.empty(sq));
                    }
                }
                match mv.kind {
                    MoveKind::Capture | MoveKind::CapturePromotion(_) => {
                        push(mover_color(probe, mv.destination, mover));
                    }
                    MoveKind::EnPassant => {
                        let victim = mv.en_passant_victim().expect("en passant has a victim");
                        push(probe.empty(victim));
                    }
                    _ => {}
                }
            }
        }
        combine(&factors[..n])
    }
}

/// Combined probability of `mv` having been played from `prev`, given the
/// observation of the resulting position. Uses the kind-specific factors.
pub fn score_move(mv: &Move, obs: &Observation, prev: &BoardState) -> Result<f64, RecognizeError> {
    let legal = legal_moves(prev);
    if !legal.contains(mv) {
        return Err(RecognizeError::IllegalMove(mv.to_uci()));
    }
    let mut probe = ModelProbe::new(obs, 0);
    Ok(Scorer::new(prev, &legal, FactorSet::Special).score(&mut probe, mv))
}
