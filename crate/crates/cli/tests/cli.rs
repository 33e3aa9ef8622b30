use std::path::Path;
use std::process::{Command, Output};

use boardsense_core::metering::read_measurements_file;
use boardsense_core::report::ReportTable;
use boardsense_core::tracking::{RunFilter, RunStatus, Store};

fn boardsense(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_boardsense"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = boardsense(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn gen_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for out in [&a, &b] {
        ok(&["gen", "--games", "10", "--seed", "7", "--out", out.to_str().unwrap()]);
    }
    let (fa, fb) = (dir_bytes(&a), dir_bytes(&b));
    assert_eq!(fa.len(), 10);
    assert_eq!(fa, fb);
    let c = tmp.path().join("c");
    ok(&["gen", "--games", "10", "--seed", "8", "--out", c.to_str().unwrap()]);
    assert_ne!(fa, dir_bytes(&c));
}

#[test]
fn bench_report_stats_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let m = tmp.path().join("m.csv");
    let store = tmp.path().join("runs");
    ok(&[
        "bench",
        "--algorithms",
        "sd,cps",
        "--samples",
        "100",
        "--seed",
        "3",
        "--warmup",
        "0",
        "--cooldown",
        "0",
        "--work",
        "0",
        "--out",
        m.to_str().unwrap(),
        "--store",
        store.to_str().unwrap(),
    ]);
    let rows = read_measurements_file(&m).unwrap();
    assert_eq!(rows.len(), 200);
    let runs = Store::open(&store)
        .unwrap()
        .query_runs(&RunFilter::default())
        .unwrap();
    assert_eq!(runs.len(), 2);
    assert!(runs.iter().all(|r| r.status == RunStatus::Finished));
    let mut algs: Vec<_> = runs.iter().map(|r| r.params["algorithm"].clone()).collect();
    algs.sort();
    assert_eq!(algs, ["CPS", "SD"]);

    let table_csv = tmp.path().join("table.csv");
    let text = ok(&["report", m.to_str().unwrap(), "--out", table_csv.to_str().unwrap()]);
    let header = text.lines().next().unwrap();
    for column in ["Algorithm", "Accuracy", "Median latency (s)", "Median energy (J)", "Median invocations"] {
        assert!(header.contains(column), "{header}");
    }
    assert!(text.lines().any(|l| l.starts_with("SD") && l.contains("% (")));
    let table = ReportTable::read_csv(std::fs::File::open(&table_csv).unwrap()).unwrap();
    assert_eq!(table.rows.len(), 2);

    let json: serde_json::Value = serde_json::from_str(&ok(&["stats", m.to_str().unwrap()])).unwrap();
    assert_eq!(json["latency_s"]["kruskal_wallis"]["test"], "kruskal_wallis");
    assert_eq!(json["latency_s"]["shapiro_wilk"].as_array().unwrap().len(), 2);
    assert_eq!(json["adjustment"], "holm");
    assert!(json["latency_s"]["dunn"]["p_values"].is_array());
    assert_eq!(json["samples"]["SD"], 100);
}

#[test]
fn ingest_then_monitor() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let review = tmp.path().join("review");
    ok(&["gen", "--games", "1", "--seed", "2", "--out", data.to_str().unwrap()]);
    let text = ok(&[
        "ingest",
        "--data",
        data.to_str().unwrap(),
        "--pipeline",
        review.to_str().unwrap(),
        "--samples",
        "5",
    ]);
    assert!(text.contains("queued 5"));
    // nothing validated yet: no alert
    let status: serde_json::Value =
        serde_json::from_str(&ok(&["monitor", "--pipeline", review.to_str().unwrap()])).unwrap();
    assert_eq!(status["has_data"], false);
}

#[test]
fn monitor_exit_code_two_on_alert() {
    use boardsense_core::pipeline::{Pipeline, Verdict};
    use boardsense_core::recognizers::Prediction;
    use boardsense_core::simulation::{generate_game, GameGenConfig, NoiseModel};

    let tmp = tempfile::tempdir().unwrap();
    let review = tmp.path().join("review");
    let game = generate_game("g", &GameGenConfig { max_plies: 4, seed: 1, ..Default::default() }, &NoiseModel::default()).unwrap();
    let mut p = Pipeline::open(&review).unwrap();
    p.register_game("g").unwrap();
    for s in game.samples() {
        let mut predicted = *s.truth.placement();
        let empty = boardsense_core::Square::all().find(|&q| predicted.get(q).is_none()).unwrap();
        predicted.set(empty, s.truth.piece_at(boardsense_core::Square::all().find(|&q| predicted.get(q).is_some_and(|pc| pc.kind != boardsense_core::PieceKind::King)).unwrap()));
        let item = p
            .record_inference("g", s.ply, &Prediction::from_placement(predicted, Default::default()), s.observation)
            .unwrap();
        p.submit_validation(&item.item_id, Verdict::Corrected { placement: *s.truth.placement(), note: None })
            .unwrap();
    }
    drop(p);
    let out = boardsense(&["monitor", "--pipeline", review.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_one() {
    let out = boardsense(&["gen", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(boardsense(&["bench", "--algorithms", "xyz", "--out", "m.csv"]).status.code(), Some(1));
    assert_eq!(boardsense(&["report", "/nonexistent/m.csv"]).status.code(), Some(1));
    assert_eq!(boardsense(&["--help"]).status.code(), Some(0));
}
