//! One PASS/FAIL line per acceptance criterion; exits non-zero if any fails.

use std::process::{Command, ExitCode, Stdio};

use boardsense_core::chess::{legal_moves, perft, BoardState};
use boardsense_core::metering::*;
use boardsense_core::pipeline::Pipeline;
use boardsense_core::recognizers::*;
use boardsense_core::simulation::*;
use boardsense_core::stats::special::normal_sf;
use boardsense_core::stats::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common {
    pub mod durability;
    pub mod review;
}
use common::{durability, review};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn near(actual: f64, expected: f64, tol: f64) -> bool {
    (actual - expected).abs() <= tol
}

fn statistical_reproduction() -> Outcome {
    let z1 = two_proportion_z(1572, 2000, 1589, 2000).map_err(|e| e.to_string())?.statistic;
    let z2 = two_proportion_z(1589, 2000, 1937, 2000).map_err(|e| e.to_string())?.statistic;
    let e1 = eta_squared(11_871.68, 9, 18_000).map_err(|e| e.to_string())?;
    let e2 = eta_squared(12_058.8, 9, 18_000).map_err(|e| e.to_string())?;
    check(
        near(z1, -0.66, 0.01) && near(z2, -17.02, 0.02) && near(e1, 0.659, 0.001) && near(e2, 0.670, 0.001),
        format!("z = {z1:.4}, {z2:.4}; eta^2 = {e1:.4}, {e2:.4}"),
    )
}

fn stream(capture_weight: f64, seed: u64, boards: usize) -> Vec<GameRecord> {
    let cfg = GameGenConfig {
        capture_weight,
        seed,
        ..GameGenConfig::default()
    };
    let noise = NoiseModel {
        bias: 0.05,
        spread: 0.15,
        seed,
        ..NoiseModel::default()
    };
    generate_samples(&cfg, &noise, boards).expect("generate")
}

struct Run {
    predictions: Vec<Prediction>,
    metrics: Metrics,
}

fn run_all(games: &[GameRecord], boards: usize, algs: &[Algorithm]) -> Result<Vec<Run>, String> {
    let samples: Vec<_> = games.iter().flat_map(|g| g.samples()).take(boards).collect();
    let truths: Vec<BoardState> = samples.iter().map(|s| *s.truth).collect();
    algs.iter()
        .map(|&alg| {
            let config = RecognizerConfig::new(alg);
            let predictions = samples
                .iter()
                .map(|s| recognize(&config, s.prev, s.observation))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| e.to_string())?;
            let metrics = evaluate(&predictions, &truths, None).map_err(|e| e.to_string())?;
            Ok(Run {
                predictions,
                metrics,
            })
        })
        .collect()
}

fn table_orderings() -> Outcome {
    const BOARDS: usize = 500;
    let suite = Algorithm::standard_suite();
    let runs = run_all(&stream(1.0, 2024, BOARDS), BOARDS, &suite)?;
    let by = |a: Algorithm| &runs[suite.iter().position(|&x| x == a).unwrap()];
    let acc = |a: Algorithm| by(a).metrics.board_accuracy;
    let sq = |a: Algorithm| by(a).metrics.mean_square_accuracy;
    let med = |a: Algorithm| by(a).metrics.median_total_invocations;
    let mut failures = Vec::new();

    for a in [Algorithm::Sd, Algorithm::Esd] {
        if !(acc(a) < 0.05 && (0.60..=0.95).contains(&sq(a))) {
            failures.push(format!("{a} board {:.3} square {:.3}", acc(a), sq(a)));
        }
    }
    if !(0.5..=0.95).contains(&acc(Algorithm::Ia)) {
        failures.push(format!("IA board {:.3}", acc(Algorithm::Ia)));
    }
    for k in 3..=5 {
        let gap = (acc(Algorithm::TopK(k)) - acc(Algorithm::Cps)).abs();
        if gap > 0.015 {
            failures.push(format!("TK-{k} off CPS by {gap:.4}"));
        }
    }

    let (ia, cpa, cps) = (med(Algorithm::Ia), med(Algorithm::Cpa), med(Algorithm::Cps));
    let tk: Vec<f64> = (2..=5).map(|k| med(Algorithm::TopK(k))).collect();
    if !(ia <= cpa && cpa <= cps && tk.windows(2).all(|w| w[0] < w[1]) && tk[3] <= cps) {
        failures.push(format!("invocation medians IA {ia} CPA {cpa} CPS {cps} TK-2..5 {tk:?}"));
    }
    let total = |a: Algorithm, i: usize| by(a).predictions[i].invocations.total();
    for i in 0..BOARDS {
        let chain = [
            total(Algorithm::TopK(2), i),
            total(Algorithm::TopK(3), i),
            total(Algorithm::TopK(4), i),
            total(Algorithm::TopK(5), i),
            total(Algorithm::Cps, i),
        ];
        let ok = total(Algorithm::Ia, i) <= total(Algorithm::Cpa, i)
            && total(Algorithm::Cpa, i) <= total(Algorithm::Cps, i)
            && chain.windows(2).all(|w| w[0] <= w[1]);
        if !ok {
            failures.push(format!("board {i} invocation order broken"));
            break;
        }
    }

    let biased = [Algorithm::Cpa, Algorithm::Cps];
    let capture_runs = run_all(&stream(5.0, 7, BOARDS), BOARDS, &biased)?;
    let lift = capture_runs[1].metrics.board_accuracy - capture_runs[0].metrics.board_accuracy;
    if lift < 0.05 {
        failures.push(format!("CPS - CPA on capture-biased set {lift:.3}"));
    }

    let summary = format!(
        "SD {:.3} ({:.3}), ESD {:.3} ({:.3}), IA {:.3}, CPA {:.3}, CPS {:.3}, TK-3..5 {:.3}/{:.3}/{:.3}; \
         capture-biased CPS-CPA {:+.3}; medians IA {ia} CPA {cpa} CPS {cps} TK-2..5 {tk:?}",
        acc(Algorithm::Sd),
        sq(Algorithm::Sd),
        acc(Algorithm::Esd),
        sq(Algorithm::Esd),
        acc(Algorithm::Ia),
        acc(Algorithm::Cpa),
        acc(Algorithm::Cps),
        acc(Algorithm::TopK(3)),
        acc(Algorithm::TopK(4)),
        acc(Algorithm::TopK(5)),
        lift,
    );
    if failures.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{}; {summary}", failures.join("; ")))
    }
}

fn rules_oracle() -> Outcome {
    let s = BoardState::initial();
    let counts: Vec<u64> = (1..=4).map(|d| perft(&s, d)).collect();
    check(counts == [20, 400, 8902, 197_281], format!("perft 1..4 = {counts:?}"))
}

fn stats_oracles() -> Outcome {
    let h = kruskal_wallis(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]])
        .map_err(|e| e.to_string())?
        .statistic;
    let groups = vec![vec![1.3, 4.2, 2.2, 8.1, 5.5], vec![3.3, 9.4, 7.7, 6.1, 10.2, 0.4]];
    let h2 = kruskal_wallis(&groups).map_err(|e| e.to_string())?.statistic;
    let labels = vec!["a".to_string(), "b".to_string()];
    let z = dunn_posthoc(&groups, &labels, Adjustment::None)
        .map_err(|e| e.to_string())?
        .z[0][1];
    let sf = normal_sf(1.96);
    // scipy.stats.shapiro on this sample
    let sample = [2.1, 3.4, 1.9, 5.6, 4.4, 3.3, 2.8, 6.1, 3.9, 4.0];
    let w = shapiro_wilk(&sample).map_err(|e| e.to_string())?.statistic;
    check(
        near(h, 3.857, 1e-3) && near(z * z, h2, 1e-9) && near(sf, 0.0249979, 1e-7) && near(w, 0.955_704_266_341_904_9, 1e-4),
        format!("H = {h:.6}, z^2 - H = {:.2e}, SF(1.96) = {sf:.9}, W = {w:.6}", z * z - h2),
    )
}

fn metering() -> Outcome {
    let flat = PowerTrace::constant(10.0, 0.0, 2.0).map_err(|e| e.to_string())?;
    let e_flat = integrate_energy(&flat, 0.0, 2.0).map_err(|e| e.to_string())?;
    let ramp = PowerTrace::new(vec![(0.0, 0.0), (10.0, 10.0)]).map_err(|e| e.to_string())?;
    let e_ramp = integrate_energy(&ramp, 0.0, 10.0).map_err(|e| e.to_string())?;

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut t = 0.0;
    let trace = PowerTrace::new(
        (0..500)
            .map(|_| {
                t += rng.random_range(0.001..0.1);
                (t, rng.random_range(0.0..80.0))
            })
            .collect(),
    )
    .map_err(|e| e.to_string())?;
    let (lo, hi) = (trace.start(), trace.stop());
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let mid = rng.random_range(lo..hi);
        let whole = integrate_energy(&trace, lo, hi).map_err(|e| e.to_string())?;
        let parts = integrate_energy(&trace, lo, mid).map_err(|e| e.to_string())?
            + integrate_energy(&trace, mid, hi).map_err(|e| e.to_string())?;
        worst = worst.max((whole - parts).abs() / whole);
    }

    let games = stream(1.0, 5, 20);
    let configs: Vec<_> = Algorithm::standard_suite()
        .into_iter()
        .map(RecognizerConfig::new)
        .collect();
    let out = run_benchmark(
        &BenchmarkPlan::immediate(20),
        &configs,
        &games,
        &EnergyMeter::SyntheticConstant(10.0),
        None,
    )
    .map_err(|e| e.to_string())?;
    let identity = out.is_complete()
        && out.measurements.len() == 20 * configs.len()
        && out
            .measurements
            .iter()
            .all(|m| near(m.energy_j, 10.0 * m.latency_s, 1e-9));
    check(
        near(e_flat, 20.0, 1e-9) && near(e_ramp, 50.0, 1e-9) && worst <= 1e-9 && identity,
        format!(
            "constant {e_flat} J, ramp {e_ramp} J, worst split error {worst:.1e}, \
             synthetic identity over {} measurements: {identity}",
            out.measurements.len()
        ),
    )
}

fn equivalences() -> Outcome {
    let run = |alg, prev: &BoardState, obs: &Observation| {
        recognize(&RecognizerConfig::new(alg), prev, obs).map_err(|e| e.to_string())
    };
    let games = stream(3.0, 31, 1000);
    let mut topk = 0;
    let mut illegal = 0;
    for s in games.iter().flat_map(|g| g.samples()).take(1000) {
        let cps = run(Algorithm::Cps, s.prev, s.observation)?;
        if run(Algorithm::TopK(64), s.prev, s.observation)? != cps {
            return Err(format!("TK-64 differs from CPS on {}", s.prev.to_fen()));
        }
        topk += 1;
        let legal = legal_moves(s.prev);
        for alg in [Algorithm::Ia, Algorithm::Cpa, Algorithm::Cps, Algorithm::TopK(2)] {
            let p = run(alg, s.prev, s.observation)?;
            if !p.predicted_move.is_some_and(|m| legal.contains(&m)) {
                illegal += 1;
            }
        }
    }
    let mut plain = 0;
    let mut seed = 40;
    while plain < 1000 {
        for s in stream(1.0, seed, 2000).iter().flat_map(|g| g.samples().collect::<Vec<_>>()) {
            if plain == 1000 {
                break;
            }
            if legal_moves(s.prev).iter().any(|m| m.is_capture() || m.is_castle()) {
                continue;
            }
            if run(Algorithm::Cps, s.prev, s.observation)? != run(Algorithm::Cpa, s.prev, s.observation)? {
                return Err(format!("CPS differs from CPA on {}", s.prev.to_fen()));
            }
            plain += 1;
        }
        seed += 1;
    }
    check(
        illegal == 0,
        format!("TK-64 = CPS on {topk}, CPS = CPA on {plain} quiet positions, {illegal} illegal predictions"),
    )
}

fn pipeline() -> Outcome {
    let games = stream(1.0, 61, 60);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let status = review::monitor_after(dir.path(), &games[0], 44, 50);
    let alert = status.alert && status.window_size == 50 && status.window_correct == 44;

    let games = stream(1.0, 62, 1000);
    let k: usize = games.iter().map(|g| g.plies.len()).sum();
    let labeled = |dir: &std::path::Path| -> Result<(usize, Vec<u8>), String> {
        let mut p = Pipeline::open(dir).map_err(|e| e.to_string())?;
        for g in &games {
            review::review_game(&mut p, g, Algorithm::Cps);
        }
        let summary = p.run_labeling_job().map_err(|e| e.to_string())?;
        let bytes = std::fs::read(&summary.path).map_err(|e| e.to_string())?;
        Ok((summary.rows, bytes))
    };
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (rows, first) = labeled(a.path())?;
    let (_, second) = labeled(b.path())?;
    let lines = first.iter().filter(|&&c| c == b'\n').count() - 1;
    check(
        alert && rows == 64 * k && lines == rows && first == second,
        format!(
            "44/50 window accuracy {:?} alert {}; {k} boards -> {rows} rows, identical bytes: {}",
            status.window_accuracy,
            status.alert,
            first == second
        ),
    )
}

fn tracking_durability() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let exe = std::env::current_exe().map_err(|e| e.to_string())?;
    let recovered = durability::kill_and_restart(dir.path(), 500, |store, run| {
        Command::new(&exe)
            .env(durability::STORE_VAR, store)
            .env(durability::RUN_VAR, run)
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .spawn()
            .expect("spawn writer")
    })?;
    Ok(format!("{recovered} complete records recovered byte-identical, logging resumed"))
}

fn main() -> ExitCode {
    if let (Ok(store), Ok(run)) = (
        std::env::var(durability::STORE_VAR),
        std::env::var(durability::RUN_VAR),
    ) {
        durability::write_forever(store.as_ref(), &run);
    }
    let criteria: [Criterion; 8] = [
        ("statistical reproduction", statistical_reproduction),
        ("table orderings", table_orderings),
        ("rules oracle", rules_oracle),
        ("stats oracles", stats_oracles),
        ("metering", metering),
        ("equivalence properties", equivalences),
        ("pipeline", pipeline),
        ("tracking durability", tracking_durability),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
