//! Drives a pipeline through recording and review, shared by the pipeline
//! tests and the acceptance harness.

use std::path::Path;

use boardsense_core::chess::{Color, Piece, PieceKind, Square};
use boardsense_core::pipeline::*;
use boardsense_core::recognizers::{recognize, Algorithm, Prediction, RecognizerConfig};
use boardsense_core::simulation::GameRecord;

/// Record every ply of `game` as predicted by `algorithm`, then review each
/// item against the true state: accept when right, correct otherwise.
pub fn review_game(pipeline: &mut Pipeline, game: &GameRecord, algorithm: Algorithm) {
    pipeline.register_game(&game.game_id).unwrap();
    let config = RecognizerConfig::new(algorithm);
    for s in game.samples() {
        let prediction = recognize(&config, s.prev, s.observation).unwrap();
        let item = pipeline
            .record_inference(s.game_id, s.ply, &prediction, s.observation)
            .unwrap();
        let verdict = if prediction.placement == *s.truth.placement() {
            Verdict::Accepted
        } else {
            Verdict::Corrected {
                placement: *s.truth.placement(),
                note: None,
            }
        };
        pipeline.submit_validation(&item.item_id, verdict).unwrap();
    }
}

/// Validate `total` items of which the first `correct` were predicted right.
pub fn monitor_after(root: &Path, game: &GameRecord, correct: usize, total: usize) -> MonitorStatus {
    let mut pipeline = Pipeline::open(root).unwrap();
    pipeline.register_game(&game.game_id).unwrap();
    let samples: Vec<_> = game.samples().take(total).collect();
    assert_eq!(samples.len(), total, "game too short");
    for (i, s) in samples.iter().enumerate() {
        let mut prediction = Prediction::from_placement(*s.truth.placement(), Default::default());
        prediction.latency_s = 0.4;
        if i >= correct {
            // a phantom pawn on an empty square
            let sq = Square::all().find(|&sq| s.truth.piece_at(sq).is_none()).unwrap();
            prediction
                .placement
                .set(sq, Some(Piece::new(Color::White, PieceKind::Pawn)));
        }
        let item = pipeline
            .record_inference(s.game_id, s.ply, &prediction, s.observation)
            .unwrap();
        let verdict = if i < correct {
            Verdict::Accepted
        } else {
            Verdict::Corrected {
                placement: *s.truth.placement(),
                note: None,
            }
        };
        pipeline.submit_validation(&item.item_id, verdict).unwrap();
    }
    pipeline.monitor_status(&MonitorConfig::default()).unwrap()
}
