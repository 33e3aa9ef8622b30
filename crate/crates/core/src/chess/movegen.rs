//! Legal move generation, move application and perft.
//!
//! Generation is mailbox-style over [`Placement`]: pseudo-legal moves are
//! produced per piece and kept only if the mover's king is not attacked
//! afterwards. Output is sorted by (origin, destination, promotion kind).

use std::fmt;

use super::board::{BoardState, Placement};
use super::types::{Color, Piece, PieceKind, Square};
use super::ChessError;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum MoveKind {
    Quiet,
    Capture,
    EnPassant,
    CastleKingside,
    CastleQueenside,
    Promotion(PieceKind),
    CapturePromotion(PieceKind),
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Move {
    pub origin: Square,
    pub destination: Square,
    pub kind: MoveKind,
}

impl Move {
    pub const fn new(origin: Square, destination: Square, kind: MoveKind) -> Move {
        Move {
            origin,
            destination,
            kind,
        }
    }

    pub fn is_capture(&self) -> bool {
        matches!(
            self.kind,
            MoveKind::Capture | MoveKind::EnPassant | MoveKind::CapturePromotion(_)
        )
    }

    pub fn is_castle(&self) -> bool {
        matches!(
            self.kind,
            MoveKind::CastleKingside | MoveKind::CastleQueenside
        )
    }

    pub fn promotion(&self) -> Option<PieceKind> {
        match self.kind {
            MoveKind::Promotion(k) | MoveKind::CapturePromotion(k) => Some(k),
            _ => None,
        }
    }

    /// Rook origin and destination for castling moves.
    pub fn castling_rook(&self) -> Option<(Square, Square)> {
        let rank = self.origin.rank();
        let sq = |file| Square::from_coords(file, rank).unwrap();
        match self.kind {
            MoveKind::CastleKingside => Some((sq(7), sq(5))),
            MoveKind::CastleQueenside => Some((sq(0), sq(3))),
            _ => None,
        }
    }

    /// Square of the pawn removed by an en-passant capture.
    pub fn en_passant_victim(&self) -> Option<Square> {
        match self.kind {
            MoveKind::EnPassant => {
                Square::from_coords(self.destination.file(), self.origin.rank())
            }
            _ => None,
        }
    }

    /// Coordinate notation, e.g. `e2e4`, `e7e8q`, `e1g1`.
    pub fn to_uci(&self) -> String {
        match self.promotion() {
            Some(kind) => format!("{}{}{}", self.origin, self.destination, kind.letter()),
            None => format!("{}{}", self.origin, self.destination),
        }
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_uci())
    }
}

impl fmt::Debug for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({:?})", self.to_uci(), self.kind)
    }
}

const KNIGHT_STEPS: [(i8, i8); 8] = [
    (1, 2),
    (2, 1),
    (2, -1),
    (1, -2),
    (-1, -2),
    (-2, -1),
    (-2, 1),
    (-1, 2),
];
const KING_STEPS: [(i8, i8); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];
const ROOK_DIRS: [(i8, i8); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
const BISHOP_DIRS: [(i8, i8); 4] = [(1, 1), (1, -1), (-1, 1), (-1, -1)];

/// Whether any piece of `by` attacks `target`.
pub fn is_attacked(placement: &Placement, target: Square, by: Color) -> bool {
    let is = |sq: Option<Square>, kinds: &[PieceKind]| {
        sq.and_then(|s| placement.get(s))
            .is_some_and(|p| p.color == by && kinds.contains(&p.kind))
    };
    // a pawn of `by` attacks target from one rank behind it
    let back = -by.forward();
    if is(target.offset(-1, back), &[PieceKind::Pawn])
        || is(target.offset(1, back), &[PieceKind::Pawn])
    {
        return true;
    }
    if KNIGHT_STEPS
        .iter()
        .any(|&(df, dr)| is(target.offset(df, dr), &[PieceKind::Knight]))
    {
        return true;
    }
    if KING_STEPS
        .iter()
        .any(|&(df, dr)| is(target.offset(df, dr), &[PieceKind::King]))
    {
        return true;
    }
    let slider_hit = |dirs: &[(i8, i8)], kinds: &[PieceKind]| {
        dirs.iter().any(|&(df, dr)| {
            let mut cur = target.offset(df, dr);
            while let Some(sq) = cur {
                if let Some(p) = placement.get(sq) {
                    return p.color == by && kinds.contains(&p.kind);
                }
                cur = sq.offset(df, dr);
            }
            false
        })
    };
    slider_hit(&ROOK_DIRS, &[PieceKind::Rook, PieceKind::Queen])
        || slider_hit(&BISHOP_DIRS, &[PieceKind::Bishop, PieceKind::Queen])
}

pub(crate) fn in_check(placement: &Placement, color: Color) -> bool {
    match placement.king_square(color) {
        Some(k) => is_attacked(placement, k, color.opposite()),
        None => false,
    }
}

fn push_pawn_moves(
    out: &mut Vec<Move>,
    origin: Square,
    destination: Square,
    capture: bool,
    last_rank: u8,
) {
    if destination.rank() == last_rank {
        for kind in PieceKind::PROMOTIONS {
            let mk = if capture {
                MoveKind::CapturePromotion(kind)
            } else {
                MoveKind::Promotion(kind)
            };
            out.push(Move::new(origin, destination, mk));
        }
    } else {
        let mk = if capture {
            MoveKind::Capture
        } else {
            MoveKind::Quiet
        };
        out.push(Move::new(origin, destination, mk));
    }
}

fn pseudo_legal(state: &BoardState, out: &mut Vec<Move>) {
    let us = state.side_to_move();
    let placement = state.placement();
    let target_kind = |sq: Square| match placement.get(sq) {
        None => Some(MoveKind::Quiet),
        Some(p) if p.color != us => Some(MoveKind::Capture),
        Some(_) => None,
    };

    for (origin, piece) in placement.pieces().filter(|(_, p)| p.color == us) {
        match piece.kind {
            PieceKind::Pawn => {
                let fwd = us.forward();
                let last_rank = us.opposite().back_rank();
                if let Some(one) = origin.offset(0, fwd) {
                    if placement.get(one).is_none() {
                        push_pawn_moves(out, origin, one, false, last_rank);
                        let start_rank = if us == Color::White { 1 } else { 6 };
                        if origin.rank() == start_rank {
                            let two = one.offset(0, fwd).unwrap();
                            if placement.get(two).is_none() {
                                out.push(Move::new(origin, two, MoveKind::Quiet));
                            }
                        }
                    }
                }
                for df in [-1, 1] {
                    let Some(dest) = origin.offset(df, fwd) else {
                        continue;
                    };
                    match placement.get(dest) {
                        Some(p) if p.color != us => {
                            push_pawn_moves(out, origin, dest, true, last_rank)
                        }
                        None if state.en_passant() == Some(dest) => {
                            out.push(Move::new(origin, dest, MoveKind::EnPassant))
                        }
                        _ => {}
                    }
                }
            }
            PieceKind::Knight | PieceKind::King => {
                let steps = if piece.kind == PieceKind::Knight {
                    &KNIGHT_STEPS
                } else {
                    &KING_STEPS
                };
                for &(df, dr) in steps {
                    if let Some(dest) = origin.offset(df, dr) {
                        if let Some(kind) = target_kind(dest) {
                            out.push(Move::new(origin, dest, kind));
                        }
                    }
                }
            }
            PieceKind::Bishop | PieceKind::Rook | PieceKind::Queen => {
                let dirs: &[(i8, i8)] = match piece.kind {
                    PieceKind::Bishop => &BISHOP_DIRS,
                    PieceKind::Rook => &ROOK_DIRS,
                    _ => &KING_STEPS,
                };
                for &(df, dr) in dirs {
                    let mut cur = origin.offset(df, dr);
                    while let Some(dest) = cur {
                        match target_kind(dest) {
                            Some(MoveKind::Quiet) => {
                                out.push(Move::new(origin, dest, MoveKind::Quiet));
                                cur = dest.offset(df, dr);
                            }
                            Some(kind) => {
                                out.push(Move::new(origin, dest, kind));
                                break;
                            }
                            None => break,
                        }
                    }
                }
            }
        }
    }
    castling_moves(state, out);
}

fn castling_moves(state: &BoardState, out: &mut Vec<Move>) {
    let us = state.side_to_move();
    let them = us.opposite();
    let placement = state.placement();
    let rank = us.back_rank();
    let sq = |file| Square::from_coords(file, rank).unwrap();
    let king = Piece::new(us, PieceKind::King);
    let rook = Piece::new(us, PieceKind::Rook);
    if placement.get(sq(4)) != Some(king) || is_attacked(placement, sq(4), them) {
        return;
    }
    let rights = state.castling();
    if rights.kingside(us)
        && placement.get(sq(7)) == Some(rook)
        && [5, 6].iter().all(|&f| placement.get(sq(f)).is_none())
        && [5, 6].iter().all(|&f| !is_attacked(placement, sq(f), them))
    {
        out.push(Move::new(sq(4), sq(6), MoveKind::CastleKingside));
    }
    if rights.queenside(us)
        && placement.get(sq(0)) == Some(rook)
        && [1, 2, 3].iter().all(|&f| placement.get(sq(f)).is_none())
        && [2, 3].iter().all(|&f| !is_attacked(placement, sq(f), them))
    {
        out.push(Move::new(sq(4), sq(2), MoveKind::CastleQueenside));
    }
}

/// Placement after playing `mv` for `mover`; no legality checks.
fn placement_after(placement: &Placement, mv: &Move, mover: Color) -> Placement {
    let mut next = *placement;
    let piece = next.get(mv.origin);
    next.set(mv.origin, None);
    let landed = match mv.promotion() {
        Some(kind) => Some(Piece::new(mover, kind)),
        None => piece,
    };
    next.set(mv.destination, landed);
    if let Some(victim) = mv.en_passant_victim() {
        next.set(victim, None);
    }
    if let Some((rook_from, rook_to)) = mv.castling_rook() {
        let rook = next.get(rook_from);
        next.set(rook_from, None);
        next.set(rook_to, rook);
    }
    next
}

/// All legal moves for the side to move, sorted by
/// (origin, destination, promotion kind).
pub fn legal_moves(state: &BoardState) -> Vec<Move> {
    let mut pseudo = Vec::with_capacity(64);
    pseudo_legal(state, &mut pseudo);
    let us = state.side_to_move();
    pseudo.retain(|mv| !in_check(&placement_after(state.placement(), mv, us), us));
    pseudo.sort_unstable();
    pseudo
}

pub(crate) fn apply_unchecked(state: &BoardState, mv: &Move) -> BoardState {
    let us = state.side_to_move();
    let placement = state.placement();
    let moving = placement.get(mv.origin).expect("origin holds the mover");
    let next_placement = placement_after(placement, mv, us);

    let mut castling = state.castling();
    if moving.kind == PieceKind::King {
        castling.clear(us);
    }
    castling.clear_corner(mv.origin);
    castling.clear_corner(mv.destination);

    let en_passant = if moving.kind == PieceKind::Pawn
        && mv.origin.rank().abs_diff(mv.destination.rank()) == 2
    {
        mv.origin.offset(0, us.forward())
    } else {
        None
    };
    let halfmove = if moving.kind == PieceKind::Pawn || mv.is_capture() {
        0
    } else {
        state.halfmove_clock() + 1
    };
    let fullmove = state.fullmove_number() + u32::from(us == Color::Black);

    BoardState::from_parts_unchecked(
        next_placement,
        us.opposite(),
        castling,
        en_passant,
        halfmove,
        fullmove,
    )
}

/// Successor position after a legal move; the input is left untouched.
pub fn apply_move(state: &BoardState, mv: &Move) -> Result<BoardState, ChessError> {
    if !legal_moves(state).contains(mv) {
        return Err(ChessError::IllegalMove(format!("{mv:?} in {}", state.to_fen())));
    }
    Ok(apply_unchecked(state, mv))
}

/// Leaf count of the legal move tree at exactly `depth` plies.
pub fn perft(state: &BoardState, depth: u32) -> u64 {
    if depth == 0 {
        return 1;
    }
    let moves = legal_moves(state);
    if depth == 1 {
        return moves.len() as u64;
    }
    moves
        .iter()
        .map(|mv| perft(&apply_unchecked(state, mv), depth - 1))
        .sum()
}

/// Resolve coordinate notation (`e2e4`, `e7e8q`) against the legal moves.
pub fn parse_move(state: &BoardState, text: &str) -> Result<Move, ChessError> {
    let text = text.trim();
    legal_moves(state)
        .into_iter()
        .find(|mv| mv.to_uci() == text)
        .ok_or_else(|| ChessError::IllegalMove(format!("{text} in {}", state.to_fen())))
}

pub fn is_checkmate(state: &BoardState) -> bool {
    legal_moves(state).is_empty() && in_check(state.placement(), state.side_to_move())
}

pub fn is_stalemate(state: &BoardState) -> bool {
    legal_moves(state).is_empty() && !in_check(state.placement(), state.side_to_move())
}
