//! Chessboard state recognition from noisy per-square classifier outputs,
//! with the measurement, tracking and validation tooling around it.

pub mod chess;
pub mod metering;
pub mod pipeline;
pub mod recognizers;
pub mod report;
pub mod simulation;
pub mod stats;
pub mod tracking;

pub use chess::{BoardState, Color, Move, MoveKind, Piece, PieceKind, Placement, Square};
pub use recognizers::{recognize, Algorithm, Prediction, RecognizerConfig};
pub use simulation::{GameGenConfig, GameRecord, NoiseModel, Observation};
