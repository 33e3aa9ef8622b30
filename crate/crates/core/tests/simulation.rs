use boardsense_core::chess::{class_index, legal_moves, BoardState, Square};
use boardsense_core::simulation::*;
use boardsense_core::stats::normal_sf;

fn positions(count: usize, seed: u64) -> Vec<BoardState> {
    let cfg = GameGenConfig {
        seed,
        ..GameGenConfig::default()
    };
    generate_samples(&cfg, &NoiseModel::noiseless(seed), count)
        .unwrap()
        .iter()
        .flat_map(|g| g.plies.iter().map(|p| p.state_after))
        .take(count)
        .collect()
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Per-square argmax errors of the three signals (color only where occupied).
fn error_rates(states: &[BoardState], noise: &NoiseModel) -> (f64, f64, f64) {
    let (mut occ, mut color, mut occupied, mut types) = (0usize, 0usize, 0usize, 0usize);
    for (i, s) in states.iter().enumerate() {
        let obs = observe(s, noise, i as u64);
        for sq in Square::all() {
            let piece = s.piece_at(sq);
            if (obs.occupancy(sq) > 0.5) != piece.is_some() {
                occ += 1;
            }
            if let Some(p) = piece {
                occupied += 1;
                if (obs.white(sq) > 0.5) != (p.color == boardsense_core::Color::White) {
                    color += 1;
                }
            }
            if argmax(obs.types(sq)) != class_index(piece) {
                types += 1;
            }
        }
    }
    let squares = (states.len() * 64) as f64;
    (
        occ as f64 / squares,
        color as f64 / occupied as f64,
        types as f64 / squares,
    )
}

#[test]
fn occupancy_error_rate_matches_normal_clamp_model() {
    let states = positions(1000, 21);
    let noise = NoiseModel {
        seed: 8,
        ..NoiseModel::default()
    };
    let (occ, _, _) = error_rates(&states, &noise);
    // a score crosses 0.5 with probability P(N(0, 0.15) > 0.45) on either label
    let expected = normal_sf((0.5 - noise.bias) / noise.spread);
    let sd = (expected * (1.0 - expected) / 64_000.0).sqrt();
    assert!((occ - expected).abs() < 4.0 * sd, "{occ} vs {expected}");
}

#[test]
fn raising_bias_raises_argmax_error() {
    let states = positions(200, 22);
    let mut last = (-1.0, -1.0, -1.0);
    for bias in [0.05, 0.15, 0.25, 0.35] {
        let noise = NoiseModel {
            bias,
            seed: 2,
            ..NoiseModel::default()
        };
        let rates = error_rates(&states, &noise);
        assert!(rates.0 > last.0 && rates.1 > last.1 && rates.2 > last.2, "{bias}: {rates:?}");
        last = rates;
    }
}

#[test]
fn observations_are_valid_and_deterministic() {
    let states = positions(100, 23);
    let noise = NoiseModel {
        seed: 5,
        clamp: 0.01,
        ..NoiseModel::default()
    };
    for (i, s) in states.iter().enumerate() {
        let a = observe(s, &noise, i as u64);
        assert_eq!(a, observe(s, &noise, i as u64));
        for sq in Square::all() {
            for p in [a.occupancy(sq), a.white(sq)] {
                assert!((0.01..=0.99).contains(&p));
            }
            let t = a.types(sq);
            assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(t.iter().all(|p| (0.01 - 1e-12..=0.99).contains(p)));
        }
    }
    let other = NoiseModel { seed: 6, ..noise };
    assert_ne!(observe(&states[0], &noise, 0), observe(&states[0], &other, 0));
}

#[test]
fn zero_spread_and_noiseless() {
    let s = BoardState::initial();
    let noise = NoiseModel {
        bias: 0.1,
        spread: 0.0,
        clamp: 0.0,
        ..NoiseModel::default()
    };
    let obs = observe(&s, &noise, 0);
    assert_eq!(obs.occupancy("e2".parse().unwrap()), 0.9);
    assert_eq!(obs.occupancy("e4".parse().unwrap()), 0.1);
    let clean = NoiseModel::noiseless(1);
    let exact = observe(&s, &clean, 0);
    let (occ, color, types) = error_rates(&[s], &clean);
    assert_eq!((occ, color, types), (0.0, 0.0, 0.0));
    assert_eq!(exact.occupancy("a1".parse().unwrap()), 1.0 - clean.clamp);
}

#[test]
fn games_are_legal_and_reproducible() {
    let cfg = GameGenConfig {
        max_plies: 1,
        seed: 9,
        ..GameGenConfig::default()
    };
    let g = generate_game("one", &cfg, &NoiseModel::default()).unwrap();
    assert_eq!(g.plies.len(), 1);
    assert!(legal_moves(&BoardState::initial()).contains(&g.plies[0].mv));

    let cfg = GameGenConfig {
        seed: 10,
        ..GameGenConfig::default()
    };
    let a = generate_game("g", &cfg, &NoiseModel::default()).unwrap();
    let b = generate_game("g", &cfg, &NoiseModel::default()).unwrap();
    assert_eq!(a, b);
    let mut prev = a.initial_state;
    for ply in &a.plies {
        assert!(legal_moves(&prev).contains(&ply.mv));
        prev = ply.state_after;
    }
}

#[test]
fn capture_weight_biases_sampling() {
    let capture_rate = |weight: f64| {
        let cfg = GameGenConfig {
            capture_weight: weight,
            seed: 77,
            ..GameGenConfig::default()
        };
        let games = generate_samples(&cfg, &NoiseModel::noiseless(0), 10_000).unwrap();
        let plies: Vec<_> = games.iter().flat_map(|g| &g.plies).take(10_000).collect();
        plies.iter().filter(|p| p.mv.is_capture()).count() as f64 / plies.len() as f64
    };
    let plain = capture_rate(1.0);
    let biased = capture_rate(100.0);
    assert!(biased > plain, "{biased} vs {plain}");
}

#[test]
fn dataset_roundtrip_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = GameGenConfig {
        max_plies: 12,
        seed: 3,
        ..GameGenConfig::default()
    };
    let games = generate_dataset(&cfg, &NoiseModel::default(), 3).unwrap();
    write_dataset(dir.path(), &games).unwrap();
    assert_eq!(read_dataset(dir.path()).unwrap(), games);
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("game-0000.json")).unwrap())
            .unwrap();
    let ply = &doc["plies"][0];
    assert!(ply["move"].is_string() && ply["state"].is_string());
    assert_eq!(ply["observation"]["occupancy"].as_array().unwrap().len(), 64);
}
