use std::fmt;
use std::str::FromStr;

use super::types::{Color, Piece, PieceKind, Square};
use super::ChessError;

/// Piece placement for all 64 squares.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Placement([Option<Piece>; 64]);

impl Placement {
    pub const fn empty() -> Placement {
        Placement([None; 64])
    }

    pub fn get(&self, sq: Square) -> Option<Piece> {
        self.0[sq.index()]
    }

    pub fn set(&mut self, sq: Square, content: Option<Piece>) {
        self.0[sq.index()] = content;
    }

    pub fn squares(&self) -> &[Option<Piece>; 64] {
        &self.0
    }

    pub fn occupied_count(&self) -> usize {
        self.0.iter().filter(|p| p.is_some()).count()
    }

    pub fn pieces(&self) -> impl Iterator<Item = (Square, Piece)> + '_ {
        Square::all().filter_map(move |sq| self.get(sq).map(|p| (sq, p)))
    }

    pub(crate) fn king_square(&self, color: Color) -> Option<Square> {
        self.pieces()
            .find(|(_, p)| p.color == color && p.kind == PieceKind::King)
            .map(|(sq, _)| sq)
    }

    /// Placement rules every legal position satisfies: one king per color
    /// and no pawns on the first or last rank.
    pub fn validate(&self) -> Result<(), ChessError> {
        for color in [Color::White, Color::Black] {
            let kings = self
                .pieces()
                .filter(|(_, p)| p.color == color && p.kind == PieceKind::King)
                .count();
            if kings != 1 {
                return Err(ChessError::Invariant(format!(
                    "{color:?} has {kings} kings, expected exactly one"
                )));
            }
        }
        if let Some((sq, _)) = self
            .pieces()
            .find(|(sq, p)| p.kind == PieceKind::Pawn && (sq.rank() == 0 || sq.rank() == 7))
        {
            return Err(ChessError::Invariant(format!("pawn on back rank at {sq}")));
        }
        Ok(())
    }

    /// Parse the placement field of a position string.
    pub fn from_fen_field(field: &str) -> Result<Placement, ChessError> {
        let bad = |reason: String| ChessError::Fen {
            field: "placement",
            reason,
        };
        let ranks: Vec<&str> = field.split('/').collect();
        if ranks.len() != 8 {
            return Err(bad(format!("expected 8 ranks, found {}", ranks.len())));
        }
        let mut placement = Placement::empty();
        for (i, rank_text) in ranks.iter().enumerate() {
            let rank = 7 - i as u8;
            let mut file: u8 = 0;
            for c in rank_text.chars() {
                if let Some(skip) = c.to_digit(10) {
                    if skip == 0 || skip > 8 {
                        return Err(bad(format!("invalid empty-run digit {c:?}")));
                    }
                    file += skip as u8;
                } else {
                    let piece = Piece::from_fen_char(c)
                        .ok_or_else(|| bad(format!("invalid piece letter {c:?}")))?;
                    if file >= 8 {
                        return Err(bad(format!("rank {} longer than 8 squares", rank + 1)));
                    }
                    placement.set(Square::from_coords(file, rank).unwrap(), Some(piece));
                    file += 1;
                }
                if file > 8 {
                    return Err(bad(format!("rank {} longer than 8 squares", rank + 1)));
                }
            }
            if file != 8 {
                return Err(bad(format!("rank {} has length {file}, expected 8", rank + 1)));
            }
        }
        Ok(placement)
    }

    pub fn to_fen_field(&self) -> String {
        let mut out = String::with_capacity(72);
        for rank in (0..8).rev() {
            let mut run = 0;
            for file in 0..8 {
                match self.get(Square::from_coords(file, rank).unwrap()) {
                    Some(p) => {
                        if run > 0 {
                            out.push(char::from(b'0' + run));
                            run = 0;
                        }
                        out.push(p.fen_char());
                    }
                    None => run += 1,
                }
            }
            if run > 0 {
                out.push(char::from(b'0' + run));
            }
            if rank > 0 {
                out.push('/');
            }
        }
        out
    }
}

impl fmt::Debug for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Placement({})", self.to_fen_field())
    }
}

impl Default for Placement {
    fn default() -> Self {
        Placement::empty()
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default)]
pub struct CastlingRights {
    pub white_kingside: bool,
    pub white_queenside: bool,
    pub black_kingside: bool,
    pub black_queenside: bool,
}

impl CastlingRights {
    pub const ALL: CastlingRights = CastlingRights {
        white_kingside: true,
        white_queenside: true,
        black_kingside: true,
        black_queenside: true,
    };

    pub fn kingside(&self, color: Color) -> bool {
        match color {
            Color::White => self.white_kingside,
            Color::Black => self.black_kingside,
        }
    }

    pub fn queenside(&self, color: Color) -> bool {
        match color {
            Color::White => self.white_queenside,
            Color::Black => self.black_queenside,
        }
    }

    pub(crate) fn clear(&mut self, color: Color) {
        match color {
            Color::White => {
                self.white_kingside = false;
                self.white_queenside = false;
            }
            Color::Black => {
                self.black_kingside = false;
                self.black_queenside = false;
            }
        }
    }

    /// Drop whichever right depends on a rook standing on `sq`.
    pub(crate) fn clear_corner(&mut self, sq: Square) {
        match sq.index() {
            0 => self.white_queenside = false,
            7 => self.white_kingside = false,
            56 => self.black_queenside = false,
            63 => self.black_kingside = false,
            _ => {}
        }
    }

    fn from_fen_field(field: &str) -> Result<CastlingRights, ChessError> {
        let mut rights = CastlingRights::default();
        if field == "-" {
            return Ok(rights);
        }
        for c in field.chars() {
            let flag = match c {
                'K' => &mut rights.white_kingside,
                'Q' => &mut rights.white_queenside,
                'k' => &mut rights.black_kingside,
                'q' => &mut rights.black_queenside,
                _ => {
                    return Err(ChessError::Fen {
                        field: "castling",
                        reason: format!("invalid castling letter {c:?}"),
                    })
                }
            };
            if *flag {
                return Err(ChessError::Fen {
                    field: "castling",
                    reason: format!("repeated castling letter {c:?}"),
                });
            }
            *flag = true;
        }
        Ok(rights)
    }

    fn to_fen_field(self) -> String {
        let mut out = String::new();
        for (set, c) in [
            (self.white_kingside, 'K'),
            (self.white_queenside, 'Q'),
            (self.black_kingside, 'k'),
            (self.black_queenside, 'q'),
        ] {
            if set {
                out.push(c);
            }
        }
        if out.is_empty() {
            out.push('-');
        }
        out
    }
}

/// A complete, validated chess position.
///
/// Every value of this type satisfies the position invariants (one king per
/// color, no back-rank pawns, en-passant square consistent with the side to
/// move, side not to move not in check); the constructors reject anything else.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct BoardState {
    placement: Placement,
    side_to_move: Color,
    castling: CastlingRights,
    en_passant: Option<Square>,
    halfmove_clock: u32,
    fullmove_number: u32,
}

pub const INITIAL_FEN: &str = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1";

impl BoardState {
    pub fn new(
        placement: Placement,
        side_to_move: Color,
        castling: CastlingRights,
        en_passant: Option<Square>,
        halfmove_clock: u32,
        fullmove_number: u32,
    ) -> Result<BoardState, ChessError> {
        let state = BoardState {
            placement,
            side_to_move,
            castling,
            en_passant,
            halfmove_clock,
            fullmove_number,
        };
        state.validate()?;
        Ok(state)
    }

    pub fn initial() -> BoardState {
        INITIAL_FEN.parse().expect("initial position is valid")
    }

    pub(crate) fn from_parts_unchecked(
        placement: Placement,
        side_to_move: Color,
        castling: CastlingRights,
        en_passant: Option<Square>,
        halfmove_clock: u32,
        fullmove_number: u32,
    ) -> BoardState {
        BoardState {
            placement,
            side_to_move,
            castling,
            en_passant,
            halfmove_clock,
            fullmove_number,
        }
    }

    fn validate(&self) -> Result<(), ChessError> {
        self.placement.validate()?;
        if let Some(ep) = self.en_passant {
            let expected_rank = match self.side_to_move {
                Color::White => 5,
                Color::Black => 2,
            };
            if ep.rank() != expected_rank {
                return Err(ChessError::Invariant(format!(
                    "en-passant square {ep} inconsistent with {:?} to move",
                    self.side_to_move
                )));
            }
        }
        if self.fullmove_number == 0 {
            return Err(ChessError::Invariant("fullmove number must be >= 1".into()));
        }
        let waiting = self.side_to_move.opposite();
        if super::movegen::in_check(&self.placement, waiting) {
            return Err(ChessError::Invariant(format!(
                "{waiting:?} is in check but not on move"
            )));
        }
        Ok(())
    }

    pub fn placement(&self) -> &Placement {
        &self.placement
    }

    pub fn side_to_move(&self) -> Color {
        self.side_to_move
    }

    pub fn castling(&self) -> CastlingRights {
        self.castling
    }

    pub fn en_passant(&self) -> Option<Square> {
        self.en_passant
    }

    pub fn halfmove_clock(&self) -> u32 {
        self.halfmove_clock
    }

    pub fn fullmove_number(&self) -> u32 {
        self.fullmove_number
    }

    pub fn piece_at(&self, sq: Square) -> Option<Piece> {
        self.placement.get(sq)
    }

    pub fn to_fen(&self) -> String {
        format!(
            "{} {} {} {} {} {}",
            self.placement.to_fen_field(),
            match self.side_to_move {
                Color::White => 'w',
                Color::Black => 'b',
            },
            self.castling.to_fen_field(),
            self.en_passant
                .map_or_else(|| "-".to_string(), |sq| sq.to_string()),
            self.halfmove_clock,
            self.fullmove_number
        )
    }
}

impl FromStr for BoardState {
    type Err = ChessError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(ChessError::Fen {
                field: "field count",
                reason: format!("expected 6 space-separated fields, found {}", fields.len()),
            });
        }
        let placement = Placement::from_fen_field(fields[0])?;
        let side_to_move = match fields[1] {
            "w" => Color::White,
            "b" => Color::Black,
            other => {
                return Err(ChessError::Fen {
                    field: "side to move",
                    reason: format!("expected 'w' or 'b', found {other:?}"),
                })
            }
        };
        let castling = CastlingRights::from_fen_field(fields[2])?;
        let en_passant = match fields[3] {
            "-" => None,
            sq => Some(sq.parse::<Square>().map_err(|reason| ChessError::Fen {
                field: "en passant",
                reason,
            })?),
        };
        let halfmove_clock = fields[4].parse::<u32>().map_err(|e| ChessError::Fen {
            field: "halfmove clock",
            reason: e.to_string(),
        })?;
        let fullmove_number = fields[5].parse::<u32>().map_err(|e| ChessError::Fen {
            field: "fullmove number",
            reason: e.to_string(),
        })?;
        BoardState::new(
            placement,
            side_to_move,
            castling,
            en_passant,
            halfmove_clock,
            fullmove_number,
        )
    }
}

impl fmt::Display for BoardState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_fen())
    }
}

impl fmt::Debug for BoardState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BoardState({})", self.to_fen())
    }
}
