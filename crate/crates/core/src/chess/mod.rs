//! Chess rules: positions, legal moves, move application, perft.

mod board;
mod movegen;
mod types;

pub use board::{BoardState, CastlingRights, Placement, INITIAL_FEN};
pub use movegen::{
    apply_move, is_attacked, is_checkmate, is_stalemate, legal_moves, parse_move, perft, Move,
    MoveKind,
};
pub(crate) use movegen::apply_unchecked;
pub use types::{class_content, class_index, Color, Piece, PieceKind, Square, NUM_CLASSES};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChessError {
    #[error("invalid position string ({field}): {reason}")]
    Fen { field: &'static str, reason: String },
    #[error("position invariant violated: {0}")]
    Invariant(String),
    #[error("illegal move: {0}")]
    IllegalMove(String),
}
