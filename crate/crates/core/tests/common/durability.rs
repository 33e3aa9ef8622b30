//! Kill-and-restart check for the metric log, shared by the tracking tests
//! and the acceptance harness. The writer runs in a child process that the
//! caller spawns from its own test binary.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Child;
use std::time::{Duration, Instant};

use boardsense_core::tracking::Store;

pub const STORE_VAR: &str = "BOARDSENSE_DURABILITY_STORE";
pub const RUN_VAR: &str = "BOARDSENSE_DURABILITY_RUN";
pub const KEY: &str = "loss";

pub fn value_at(step: u64) -> f64 {
    1.0 / (step as f64 + 3.0)
}

/// Child side: log records forever until killed.
pub fn write_forever(store: &Path, run_id: &str) -> ! {
    let store = Store::open(store).expect("open store");
    let mut step = 0;
    loop {
        store.log_metric(run_id, KEY, value_at(step), step).expect("log");
        step += 1;
    }
}

/// Parent side. Creates a run, lets the spawned writer log at least
/// `min_records`, kills it, appends a torn fragment, and checks that
/// reopening recovers every complete record byte-identical and that logging
/// resumes cleanly. Returns the number of recovered records.
pub fn kill_and_restart(
    root: &Path,
    min_records: usize,
    spawn: impl FnOnce(&Path, &str) -> Child,
) -> Result<usize, String> {
    let store = Store::open(root).map_err(|e| e.to_string())?;
    let run = store
        .create_run(BTreeMap::new(), BTreeMap::new())
        .map_err(|e| e.to_string())?;
    let file = root.join(&run.run_id).join("metrics").join(format!("{KEY}.csv"));

    let mut child = spawn(root, &run.run_id);
    let deadline = Instant::now() + Duration::from_secs(60);
    loop {
        let lines = std::fs::read(&file).map(|b| bytecount(&b)).unwrap_or(0);
        if lines > min_records {
            break;
        }
        if Instant::now() > deadline || child.try_wait().map_err(|e| e.to_string())?.is_some() {
            let _ = child.kill();
            return Err(format!("writer produced only {lines} lines"));
        }
        std::thread::sleep(Duration::from_millis(5));
    }
    child.kill().map_err(|e| e.to_string())?;
    child.wait().map_err(|e| e.to_string())?;

    let killed = std::fs::read(&file).map_err(|e| e.to_string())?;
    let complete_len = killed.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    let complete = killed[..complete_len].to_vec();
    // a writer cut off mid-record leaves a fragment like this one
    let mut torn = killed.clone();
    torn.truncate(complete_len);
    torn.extend_from_slice(b"999999,17");
    std::fs::write(&file, &torn).map_err(|e| e.to_string())?;

    let store = Store::open(root).map_err(|e| e.to_string())?;
    let series = store.metric_series(&run.run_id, KEY).map_err(|e| e.to_string())?;
    let expected_records = bytecount(&complete) - 1;
    if series.len() != expected_records {
        return Err(format!("{} records recovered, {expected_records} complete", series.len()));
    }
    for (i, r) in series.iter().enumerate() {
        if r.step != i as u64 || r.value != value_at(r.step) {
            return Err(format!("record {i} is {r:?}"));
        }
    }

    let next = series.len() as u64;
    store
        .log_metric(&run.run_id, KEY, value_at(next), next)
        .map_err(|e| e.to_string())?;
    let after = std::fs::read(&file).map_err(|e| e.to_string())?;
    if after[..complete.len()] != complete[..] {
        return Err("completed records changed after restart".into());
    }
    let tail = std::str::from_utf8(&after[complete.len()..]).map_err(|e| e.to_string())?;
    if !tail.starts_with(&format!("{next},")) || tail.matches('\n').count() != 1 {
        return Err(format!("unexpected tail after restart: {tail:?}"));
    }
    let series = store.metric_series(&run.run_id, KEY).map_err(|e| e.to_string())?;
    if series.len() != expected_records + 1 {
        return Err("appended record not readable".into());
    }
    Ok(expected_records)
}

fn bytecount(bytes: &[u8]) -> usize {
    bytes.iter().filter(|&&b| b == b'\n').count()
}
