//! Recognizers that infer the single move played since a known position.
//!
//! All of them work from the legal moves of the previous position, so every
//! prediction they make is a legal move. Moves are visited in sorted order and
//! only a strictly better value replaces the incumbent, which makes every tie
//! resolve to the lexicographically smallest (origin, destination).

use crate::chess::{
    apply_unchecked, class_index, legal_moves, BoardState, Color, Move, Piece, PieceKind,
};
use crate::simulation::Observation;

use super::probe::ModelProbe;
use super::scoring::{combine, FactorSet, Scorer};
use super::{Prediction, RecognizeError};

fn legal_or_game_over(prev: &BoardState) -> Result<Vec<Move>, RecognizeError> {
    let moves = legal_moves(prev);
    if moves.is_empty() {
        return Err(RecognizeError::GameOver(prev.to_fen()));
    }
    Ok(moves)
}

/// Moves sharing an (origin, destination) pair; more than one only for
/// promotions.
fn pair_groups(moves: &[Move]) -> impl Iterator<Item = &[Move]> {
    moves.chunk_by(|a, b| a.origin == b.origin && a.destination == b.destination)
}

/// Pick the promotion piece by the type model's mass at the destination,
/// preferring the queen on ties.
fn resolve_promotion(probe: &mut ModelProbe<'_>, group: &[Move], mover: Color) -> Move {
    if group.len() == 1 {
        return group[0];
    }
    let dist = probe.types(group[0].destination);
    let mut best = (PieceKind::Queen, f64::NEG_INFINITY);
    for kind in PieceKind::PROMOTIONS.iter().rev() {
        let mass = dist[class_index(Some(Piece::new(mover, *kind)))];
        if mass > best.1 {
            best = (*kind, mass);
        }
    }
    *group
        .iter()
        .find(|m| m.promotion() == Some(best.0))
        .expect("promotion group holds every kind")
}

fn finish(prev: &BoardState, mv: Move, score: f64, probe: &ModelProbe<'_>) -> Prediction {
    let after = apply_unchecked(prev, &mv);
    Prediction {
        placement: *after.placement(),
        predicted_move: Some(mv),
        score: Some(score),
        invocations: probe.counts(),
        low_confidence: false,
        latency_s: 0.0,
        energy_j: 0.0,
    }
}

/// Greedy two-step search: the candidate origin most likely to be empty,
/// then its legal destination most likely to be occupied.
pub fn ia_recognize(
    prev: &BoardState,
    obs: &Observation,
    work: u32,
) -> Result<Prediction, RecognizeError> {
    let moves = legal_or_game_over(prev)?;
    let mover = prev.side_to_move();
    let mut probe = ModelProbe::new(obs, work);

    let mut origin = (moves[0].origin, f64::NEG_INFINITY);
    for group in moves.chunk_by(|a, b| a.origin == b.origin) {
        let p = probe.empty(group[0].origin);
        if p > origin.1 {
            origin = (group[0].origin, p);
        }
    }

    let from_origin: Vec<Move> = moves
        .iter()
        .filter(|m| m.origin == origin.0)
        .copied()
        .collect();
    let mut dest: Option<(&[Move], f64)> = None;
    for group in pair_groups(&from_origin) {
        let p = probe.occupancy(group[0].destination);
        if dest.is_none_or(|(_, best)| p > best) {
            dest = Some((group, p));
        }
    }
    let (group, dest_p) = dest.expect("chosen origin has a legal move");
    let mv = resolve_promotion(&mut probe, group, mover);
    Ok(finish(prev, mv, combine(&[origin.1, dest_p]), &probe))
}

fn best_pair(
    prev: &BoardState,
    probe: &mut ModelProbe<'_>,
    candidates: &[Move],
    scorer: &Scorer<'_>,
) -> Prediction {
    let mover = prev.side_to_move();
    let mut best: Option<(&[Move], f64)> = None;
    for group in pair_groups(candidates) {
        let score = scorer.score(probe, &group[0]);
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((group, score));
        }
    }
    let (group, score) = best.expect("at least one legal move");
    let mv = resolve_promotion(probe, group, mover);
    finish(prev, mv, score, probe)
}

/// Joint argmax of origin emptiness and destination occupancy over all
/// legal moves, with the same two factors for every move kind.
pub fn cpa_recognize(
    prev: &BoardState,
    obs: &Observation,
    work: u32,
) -> Result<Prediction, RecognizeError> {
    let moves = legal_or_game_over(prev)?;
    let mut probe = ModelProbe::new(obs, work);
    let scorer = Scorer::new(prev, &moves, FactorSet::Combined);
    Ok(best_pair(prev, &mut probe, &moves, &scorer))
}

/// Joint argmax with kind-specific factors for captures, en passant and
/// castling.
pub fn cps_recognize(
    prev: &BoardState,
    obs: &Observation,
    work: u32,
) -> Result<Prediction, RecognizeError> {
    let moves = legal_or_game_over(prev)?;
    let mut probe = ModelProbe::new(obs, work);
    let scorer = Scorer::new(prev, &moves, FactorSet::Special);
    Ok(best_pair(prev, &mut probe, &moves, &scorer))
}

/// Rank the candidate origins by emptiness, keep the best `k`, and run the
/// kind-specific joint argmax over moves from those origins only.
pub fn topk_recognize(
    k: u8,
    prev: &BoardState,
    obs: &Observation,
    work: u32,
) -> Result<Prediction, RecognizeError> {
    if !(1..=64).contains(&k) {
        return Err(RecognizeError::InvalidConfig(format!(
            "top-k needs 1 <= k <= 64, got {k}"
        )));
    }
    let moves = legal_or_game_over(prev)?;
    let mut probe = ModelProbe::new(obs, work);
    let mut ranked: Vec<_> = moves
        .chunk_by(|a, b| a.origin == b.origin)
        .map(|g| (g[0].origin, probe.empty(g[0].origin)))
        .collect();
    // stable: equal emptiness keeps ascending square order
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    let keep: u64 = ranked
        .iter()
        .take(k as usize)
        .fold(0, |mask, (sq, _)| mask | sq.bit());
    let pruned: Vec<Move> = moves
        .iter()
        .filter(|m| keep & m.origin.bit() != 0)
        .copied()
        .collect();
    let scorer = Scorer::new(prev, &moves, FactorSet::Special);
    Ok(best_pair(prev, &mut probe, &pruned, &scorer))
}
