//! Synthetic games and noisy per-square observations.
//!
//! An [`Observation`] stands in for the output of three square classifiers:
//! an occupancy model, a color model and a 13-class type model. Noise is
//! per-square independent and fully determined by seeds.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::chess::{
    apply_move, class_index, legal_moves, parse_move, BoardState, ChessError, Color, Move,
    Square, NUM_CLASSES,
};

#[derive(Debug, thiserror::Error)]
pub enum SimulationError {
    #[error("invalid noise model: {0}")]
    InvalidNoise(String),
    #[error("invalid game generation config: {0}")]
    InvalidConfig(String),
    #[error("invalid observation: {0}")]
    InvalidObservation(String),
    #[error("malformed game record {game}: {reason}")]
    MalformedRecord { game: String, reason: String },
    #[error(transparent)]
    Chess(#[from] ChessError),
    #[error("dataset io: {0}")]
    Io(#[from] std::io::Error),
    #[error("dataset json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Error characteristics of the simulated square classifiers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Distance of the mean score from the true label.
    pub bias: f64,
    /// Standard deviation of the score jitter.
    pub spread: f64,
    /// Scores are clamped to `[clamp, 1 - clamp]`.
    pub clamp: f64,
    /// Dirichlet concentration of the type distribution; lower is noisier.
    pub type_concentration: f64,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            bias: 0.05,
            spread: 0.15,
            clamp: 1e-3,
            type_concentration: 1.0,
            seed: 0,
        }
    }
}

impl NoiseModel {
    /// Zero bias and zero jitter: every argmax matches the truth.
    pub fn noiseless(seed: u64) -> NoiseModel {
        NoiseModel {
            bias: 0.0,
            spread: 0.0,
            seed,
            ..NoiseModel::default()
        }
    }

    pub fn validate(&self) -> Result<(), SimulationError> {
        let bad = |msg: &str| Err(SimulationError::InvalidNoise(msg.to_string()));
        if !(0.0..0.5).contains(&self.bias) {
            return bad("bias must lie in [0, 0.5)");
        }
        if !(self.spread >= 0.0 && self.spread.is_finite()) {
            return bad("spread must be finite and non-negative");
        }
        if !(0.0..1.0 / NUM_CLASSES as f64).contains(&self.clamp) {
            return bad("clamp must lie in [0, 1/13)");
        }
        if !(self.type_concentration > 0.0 && self.type_concentration.is_finite()) {
            return bad("type concentration must be positive");
        }
        Ok(())
    }
}

/// Per-square probabilities emitted by the three simulated classifiers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ObservationDoc", into = "ObservationDoc")]
pub struct Observation {
    occupancy: Vec<f64>,
    white: Vec<f64>,
    types: Vec<[f64; NUM_CLASSES]>,
}

#[derive(Serialize, Deserialize)]
struct ObservationDoc {
    occupancy: Vec<f64>,
    color: Vec<f64>,
    types: Vec<[f64; NUM_CLASSES]>,
}

impl TryFrom<ObservationDoc> for Observation {
    type Error = SimulationError;

    fn try_from(doc: ObservationDoc) -> Result<Self, Self::Error> {
        Observation::new(doc.occupancy, doc.color, doc.types)
    }
}

impl From<Observation> for ObservationDoc {
    fn from(obs: Observation) -> Self {
        ObservationDoc {
            occupancy: obs.occupancy,
            color: obs.white,
            types: obs.types,
        }
    }
}

impl Observation {
    pub fn new(
        occupancy: Vec<f64>,
        white: Vec<f64>,
        types: Vec<[f64; NUM_CLASSES]>,
    ) -> Result<Observation, SimulationError> {
        let bad = |msg: String| Err(SimulationError::InvalidObservation(msg));
        if occupancy.len() != 64 || white.len() != 64 || types.len() != 64 {
            return bad("every signal needs exactly 64 entries".into());
        }
        let unit = |p: f64| (0.0..=1.0).contains(&p);
        if let Some(i) = occupancy.iter().position(|&p| !unit(p)) {
            return bad(format!("occupancy[{i}] outside [0,1]"));
        }
        if let Some(i) = white.iter().position(|&p| !unit(p)) {
            return bad(format!("color[{i}] outside [0,1]"));
        }
        for (i, dist) in types.iter().enumerate() {
            if !dist.iter().all(|&p| unit(p)) {
                return bad(format!("types[{i}] has an entry outside [0,1]"));
            }
            let sum: f64 = dist.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return bad(format!("types[{i}] sums to {sum}"));
            }
        }
        Ok(Observation {
            occupancy,
            white,
            types,
        })
    }

    /// Exact 0/1 signals for `state`; color reads 0.5 on empty squares.
    pub fn noiseless(state: &BoardState) -> Observation {
        let mut occupancy = vec![0.0; 64];
        let mut white = vec![0.5; 64];
        let mut types = vec![[0.0; NUM_CLASSES]; 64];
        for sq in Square::all() {
            let content = state.piece_at(sq);
            if let Some(p) = content {
                occupancy[sq.index()] = 1.0;
                white[sq.index()] = if p.color == Color::White { 1.0 } else { 0.0 };
            }
            types[sq.index()][class_index(content)] = 1.0;
        }
        Observation {
            occupancy,
            white,
            types,
        }
    }

    pub fn occupancy(&self, sq: Square) -> f64 {
        self.occupancy[sq.index()]
    }

    pub fn white(&self, sq: Square) -> f64 {
        self.white[sq.index()]
    }

    pub fn types(&self, sq: Square) -> &[f64; NUM_CLASSES] {
        &self.types[sq.index()]
    }

    pub fn set_occupancy(&mut self, sq: Square, p: f64) {
        assert!((0.0..=1.0).contains(&p));
        self.occupancy[sq.index()] = p;
    }

    pub fn set_white(&mut self, sq: Square, p: f64) {
        assert!((0.0..=1.0).contains(&p));
        self.white[sq.index()] = p;
    }

    /// Replace a square's type distribution; it must sum to one.
    pub fn set_types(&mut self, sq: Square, dist: [f64; NUM_CLASSES]) {
        assert!((dist.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        self.types[sq.index()] = dist;
    }
}

/// SplitMix64 finalizer, used to derive independent stream seeds.
pub(crate) fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn clamp_score(x: f64, clamp: f64) -> f64 {
    x.clamp(clamp, 1.0 - clamp)
}

fn binary_score(rng: &mut ChaCha8Rng, truth: bool, noise: &NoiseModel) -> f64 {
    let mean = if truth { 1.0 - noise.bias } else { noise.bias };
    let jitter: f64 = if noise.spread > 0.0 {
        noise.spread * rng.sample::<f64, _>(StandardNormal)
    } else {
        0.0
    };
    clamp_score(mean + jitter, noise.clamp)
}

fn type_distribution(rng: &mut ChaCha8Rng, truth: usize, noise: &NoiseModel) -> [f64; NUM_CLASSES] {
    // Dirichlet with weight (1 - bias) on the true class and `bias` on each
    // of the others, scaled by the concentration.
    let mut draw = [0.0; NUM_CLASSES];
    for (i, slot) in draw.iter_mut().enumerate() {
        let weight = if i == truth { 1.0 - noise.bias } else { noise.bias };
        let shape = noise.type_concentration * weight;
        if shape > 0.0 {
            *slot = Gamma::new(shape, 1.0).expect("positive shape").sample(rng);
        }
    }
    let total: f64 = draw.iter().sum();
    if total.is_nan() || total <= 0.0 {
        draw = [0.0; NUM_CLASSES];
        draw[truth] = 1.0;
    } else {
        draw.iter_mut().for_each(|p| *p /= total);
    }
    let scale = 1.0 - NUM_CLASSES as f64 * noise.clamp;
    let mut out = draw.map(|p| scale * p + noise.clamp);
    // renormalize away rounding drift
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= sum);
    out
}

/// Simulated classifier outputs for `state`.
///
/// Each square draws from its own stream seeded by
/// `(noise.seed, ply_seed, square index)`.
pub fn observe(state: &BoardState, noise: &NoiseModel, ply_seed: u64) -> Observation {
    let mut occupancy = Vec::with_capacity(64);
    let mut white = Vec::with_capacity(64);
    let mut types = Vec::with_capacity(64);
    let frame_seed = mix(noise.seed, ply_seed);
    for sq in Square::all() {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(frame_seed, sq.index() as u64));
        let content = state.piece_at(sq);
        occupancy.push(binary_score(&mut rng, content.is_some(), noise));
        white.push(match content {
            Some(p) => binary_score(&mut rng, p.color == Color::White, noise),
            None => rng.random_range(noise.clamp..=1.0 - noise.clamp),
        });
        types.push(type_distribution(&mut rng, class_index(content), noise));
    }
    Observation {
        occupancy,
        white,
        types,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameGenConfig {
    pub max_plies: u32,
    pub capture_weight: f64,
    pub castle_weight: f64,
    pub seed: u64,
}

impl Default for GameGenConfig {
    fn default() -> Self {
        GameGenConfig {
            max_plies: 80,
            capture_weight: 1.0,
            castle_weight: 1.0,
            seed: 0,
        }
    }
}

impl GameGenConfig {
    pub fn validate(&self) -> Result<(), SimulationError> {
        if self.max_plies < 1 {
            return Err(SimulationError::InvalidConfig("max_plies must be >= 1".into()));
        }
        for (name, w) in [
            ("capture_weight", self.capture_weight),
            ("castle_weight", self.castle_weight),
        ] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(SimulationError::InvalidConfig(format!(
                    "{name} must be finite and non-negative"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ply {
    pub mv: Move,
    pub state_after: BoardState,
    pub observation_after: Observation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GameRecord {
    pub game_id: String,
    pub initial_state: BoardState,
    pub plies: Vec<Ply>,
}

/// One recognition task: the position before a ply, the observation after
/// it, and the ground truth.
#[derive(Clone, Copy, Debug)]
pub struct Sample<'a> {
    pub game_id: &'a str,
    pub ply: usize,
    pub prev: &'a BoardState,
    pub true_move: Move,
    pub truth: &'a BoardState,
    pub observation: &'a Observation,
}

impl GameRecord {
    pub fn samples(&self) -> impl Iterator<Item = Sample<'_>> {
        self.plies.iter().enumerate().map(move |(i, ply)| Sample {
            game_id: &self.game_id,
            ply: i,
            prev: if i == 0 {
                &self.initial_state
            } else {
                &self.plies[i - 1].state_after
            },
            true_move: ply.mv,
            truth: &ply.state_after,
            observation: &ply.observation_after,
        })
    }

    pub fn to_json(&self) -> String {
        let doc = GameDoc {
            game_id: self.game_id.clone(),
            initial: self.initial_state.to_fen(),
            plies: self
                .plies
                .iter()
                .map(|p| PlyDoc {
                    mv: p.mv.to_uci(),
                    state: p.state_after.to_fen(),
                    observation: p.observation_after.clone(),
                })
                .collect(),
        };
        serde_json::to_string(&doc).expect("game record serializes")
    }

    /// Parse and re-verify a serialized game: every ply must be legal and
    /// produce the recorded state.
    pub fn from_json(text: &str) -> Result<GameRecord, SimulationError> {
        let doc: GameDoc = serde_json::from_str(text)?;
        let malformed = |reason: String| SimulationError::MalformedRecord {
            game: doc.game_id.clone(),
            reason,
        };
        let initial_state: BoardState = doc.initial.parse()?;
        let mut current = initial_state;
        let mut plies = Vec::with_capacity(doc.plies.len());
        for (i, p) in doc.plies.iter().enumerate() {
            let mv = parse_move(&current, &p.mv)
                .map_err(|e| malformed(format!("ply {i}: {e}")))?;
            let recorded: BoardState = p.state.parse()?;
            let replayed = apply_move(&current, &mv)?;
            if recorded != replayed {
                return Err(malformed(format!("ply {i}: state does not follow from move")));
            }
            plies.push(Ply {
                mv,
                state_after: recorded,
                observation_after: p.observation.clone(),
            });
            current = recorded;
        }
        Ok(GameRecord {
            game_id: doc.game_id,
            initial_state,
            plies,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct GameDoc {
    game_id: String,
    initial: String,
    plies: Vec<PlyDoc>,
}

#[derive(Serialize, Deserialize)]
struct PlyDoc {
    #[serde(rename = "move")]
    mv: String,
    state: String,
    observation: Observation,
}

fn pick_weighted<'a>(rng: &mut ChaCha8Rng, moves: &'a [Move], config: &GameGenConfig) -> &'a Move {
    let weight = |m: &Move| {
        if m.is_castle() {
            config.castle_weight
        } else if m.is_capture() {
            config.capture_weight
        } else {
            1.0
        }
    };
    let total: f64 = moves.iter().map(weight).sum();
    if total <= 0.0 {
        return &moves[rng.random_range(0..moves.len())];
    }
    let mut target = rng.random::<f64>() * total;
    for m in moves {
        let w = weight(m);
        if target < w {
            return m;
        }
        target -= w;
    }
    moves.iter().rev().find(|m| weight(m) > 0.0).unwrap()
}

/// Play a random legal game from the initial position.
///
/// Stops at `max_plies`, checkmate, stalemate, or the fifty-move rule.
pub fn generate_game(
    game_id: &str,
    config: &GameGenConfig,
    noise: &NoiseModel,
) -> Result<GameRecord, SimulationError> {
    config.validate()?;
    noise.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let initial_state = BoardState::initial();
    let mut state = initial_state;
    let mut plies = Vec::new();
    for ply in 0..config.max_plies {
        if state.halfmove_clock() >= 100 {
            break;
        }
        let moves = legal_moves(&state);
        if moves.is_empty() {
            break;
        }
        let mv = *pick_weighted(&mut rng, &moves, config);
        let next = apply_move(&state, &mv)?;
        let observation = observe(&next, noise, mix(config.seed, u64::from(ply)));
        plies.push(Ply {
            mv,
            state_after: next,
            observation_after: observation,
        });
        state = next;
    }
    Ok(GameRecord {
        game_id: game_id.to_string(),
        initial_state,
        plies,
    })
}

/// `games` independent games; game `i` is seeded from `(config.seed, i)`
/// and named `game-{i:04}`.
pub fn generate_dataset(
    config: &GameGenConfig,
    noise: &NoiseModel,
    games: usize,
) -> Result<Vec<GameRecord>, SimulationError> {
    (0..games)
        .map(|i| {
            let game_config = GameGenConfig {
                seed: mix(config.seed, i as u64),
                ..*config
            };
            let game_noise = NoiseModel {
                seed: mix(noise.seed, i as u64),
                ..*noise
            };
            generate_game(&format!("game-{i:04}"), &game_config, &game_noise)
        })
        .collect()
}

/// Generate games until at least `plies` samples exist.
pub fn generate_samples(
    config: &GameGenConfig,
    noise: &NoiseModel,
    plies: usize,
) -> Result<Vec<GameRecord>, SimulationError> {
    let mut games = Vec::new();
    let mut total = 0;
    let mut i = 0u64;
    while total < plies {
        let game_config = GameGenConfig {
            seed: mix(config.seed, i),
            ..*config
        };
        let game_noise = NoiseModel {
            seed: mix(noise.seed, i),
            ..*noise
        };
        let game = generate_game(&format!("game-{i:04}"), &game_config, &game_noise)?;
        total += game.plies.len();
        games.push(game);
        i += 1;
    }
    Ok(games)
}

/// Write one `<game_id>.json` per game into `dir`.
pub fn write_dataset(dir: &Path, games: &[GameRecord]) -> Result<(), SimulationError> {
    fs::create_dir_all(dir)?;
    for game in games {
        fs::write(dir.join(format!("{}.json", game.game_id)), game.to_json())?;
    }
    Ok(())
}

/// Load every `*.json` game in `dir`, ordered by file name.
pub fn read_dataset(dir: &Path) -> Result<Vec<GameRecord>, SimulationError> {
    let mut paths: Vec<_> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| GameRecord::from_json(&fs::read_to_string(p)?))
        .collect()
}
