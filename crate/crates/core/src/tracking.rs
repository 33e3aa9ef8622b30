//! File-backed experiment tracking.
//!
//! Layout under the store root, one directory per run:
//!
//! ```text
//! <run_id>/meta.json        id, timestamps, status, tags, artifact index
//! <run_id>/params.json      written once at creation
//! <run_id>/metrics/<key>.csv  step,timestamp,value (append-only)
//! <run_id>/artifacts/...    stored bytes
//! ```

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Component, Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::stats::median;

const METRIC_HEADER: &str = "step,timestamp,value\n";

#[derive(Debug, thiserror::Error)]
pub enum TrackingError {
    #[error("store root {path} is not writable: {source}")]
    Unwritable {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("unknown run {0}")]
    UnknownRun(String),
    #[error("run {0} is not running")]
    RunNotActive(String),
    #[error("params are fixed at run creation (tried to set {0})")]
    ParamAfterCreation(String),
    #[error("invalid name {0:?}")]
    InvalidName(String),
    #[error("metric values must be finite, got {0}")]
    NonFinite(f64),
    #[error("corrupt record in {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RunStatus {
    Running,
    Finished,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRef {
    pub run_id: String,
    pub path: String,
    pub size: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Run {
    pub run_id: String,
    pub created_at: f64,
    pub finished_at: Option<f64>,
    pub status: RunStatus,
    pub params: BTreeMap<String, String>,
    pub tags: BTreeMap<String, String>,
    pub artifacts: Vec<ArtifactRef>,
}

#[derive(Serialize, Deserialize)]
struct Meta {
    run_id: String,
    created_at: f64,
    finished_at: Option<f64>,
    status: RunStatus,
    tags: BTreeMap<String, String>,
    artifacts: Vec<ArtifactRef>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub step: u64,
    pub timestamp: f64,
    pub value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    Last,
    Min,
    Max,
    Median,
}

impl std::str::FromStr for Aggregate {
    type Err = TrackingError;

    fn from_str(s: &str) -> Result<Aggregate, TrackingError> {
        match s {
            "last" => Ok(Aggregate::Last),
            "min" => Ok(Aggregate::Min),
            "max" => Ok(Aggregate::Max),
            "median" => Ok(Aggregate::Median),
            _ => Err(TrackingError::InvalidName(s.to_string())),
        }
    }
}

/// Conjunction of equality predicates on params and tags, plus status.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunFilter {
    pub params: BTreeMap<String, String>,
    pub tags: BTreeMap<String, String>,
    pub status: Option<RunStatus>,
}

impl RunFilter {
    pub fn param(mut self, key: &str, value: &str) -> RunFilter {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    pub fn tag(mut self, key: &str, value: &str) -> RunFilter {
        self.tags.insert(key.to_string(), value.to_string());
        self
    }

    pub fn matches(&self, run: &Run) -> bool {
        self.status.is_none_or(|s| s == run.status)
            && self.params.iter().all(|(k, v)| run.params.get(k) == Some(v))
            && self.tags.iter().all(|(k, v)| run.tags.get(k) == Some(v))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub run_id: String,
    pub params: Vec<Option<String>>,
    pub value: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub metric: String,
    pub aggregate: Aggregate,
    pub param_keys: Vec<String>,
    pub rows: Vec<ComparisonRow>,
}

fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

fn check_name(name: &str) -> Result<(), TrackingError> {
    let ok = !name.is_empty()
        && !name.starts_with('.')
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
    if ok {
        Ok(())
    } else {
        Err(TrackingError::InvalidName(name.to_string()))
    }
}

fn check_relative(path: &str) -> Result<PathBuf, TrackingError> {
    let p = Path::new(path);
    let ok = !path.is_empty() && p.components().all(|c| matches!(c, Component::Normal(_)));
    if ok {
        Ok(p.to_path_buf())
    } else {
        Err(TrackingError::InvalidName(path.to_string()))
    }
}

/// JSON with sorted keys and a trailing newline.
fn to_sorted_json<T: Serialize>(value: &T) -> Result<String, TrackingError> {
    let v = serde_json::to_value(value)?;
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

fn write_atomic(path: &Path, text: &str) -> Result<(), TrackingError> {
    let tmp = path.with_extension("json.tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(text.as_bytes())?;
        f.sync_data()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    /// Open (creating if needed) a store rooted at `root`.
    pub fn open(root: impl Into<PathBuf>) -> Result<Store, TrackingError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|source| TrackingError::Unwritable {
            path: root.clone(),
            source,
        })?;
        Ok(Store { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn run_dir(&self, run_id: &str) -> Result<PathBuf, TrackingError> {
        check_name(run_id).map_err(|_| TrackingError::UnknownRun(run_id.to_string()))?;
        let dir = self.root.join(run_id);
        if dir.join("meta.json").is_file() {
            Ok(dir)
        } else {
            Err(TrackingError::UnknownRun(run_id.to_string()))
        }
    }

    fn run_ids(&self) -> Result<Vec<String>, TrackingError> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.root)? {
            let entry = entry?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if entry.path().join("meta.json").is_file() {
                ids.push(name);
            }
        }
        ids.sort();
        Ok(ids)
    }

    fn next_counter(&self) -> Result<u64, TrackingError> {
        let mut max = 0;
        for entry in fs::read_dir(&self.root)? {
            let name = entry?.file_name().to_string_lossy().into_owned();
            if let Some(n) = name.split('-').next().and_then(|c| c.parse::<u64>().ok()) {
                max = max.max(n);
            }
        }
        Ok(max + 1)
    }

    pub fn create_run(
        &self,
        params: BTreeMap<String, String>,
        tags: BTreeMap<String, String>,
    ) -> Result<Run, TrackingError> {
        let unwritable = |source| TrackingError::Unwritable {
            path: self.root.clone(),
            source,
        };
        let mut rng = rand::rng();
        let (run_id, dir) = loop {
            let id = format!("{:06}-{:04x}", self.next_counter()?, rng.random::<u16>());
            let dir = self.root.join(&id);
            match fs::create_dir(&dir) {
                Ok(()) => break (id, dir),
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
                Err(e) => return Err(unwritable(e)),
            }
        };
        fs::create_dir(dir.join("metrics")).map_err(unwritable)?;
        fs::create_dir(dir.join("artifacts")).map_err(unwritable)?;
        write_atomic(&dir.join("params.json"), &to_sorted_json(&params)?)?;
        let meta = Meta {
            run_id: run_id.clone(),
            created_at: now(),
            finished_at: None,
            status: RunStatus::Running,
            tags,
            artifacts: Vec::new(),
        };
        write_atomic(&dir.join("meta.json"), &to_sorted_json(&meta)?)?;
        self.get_run(&run_id)
    }

    fn read_meta(&self, dir: &Path) -> Result<Meta, TrackingError> {
        Ok(serde_json::from_str(&fs::read_to_string(dir.join("meta.json"))?)?)
    }

    fn active_dir(&self, run_id: &str) -> Result<(PathBuf, Meta), TrackingError> {
        let dir = self.run_dir(run_id)?;
        let meta = self.read_meta(&dir)?;
        if meta.status != RunStatus::Running {
            return Err(TrackingError::RunNotActive(run_id.to_string()));
        }
        Ok((dir, meta))
    }

    pub fn get_run(&self, run_id: &str) -> Result<Run, TrackingError> {
        let dir = self.run_dir(run_id)?;
        let meta = self.read_meta(&dir)?;
        let params = serde_json::from_str(&fs::read_to_string(dir.join("params.json"))?)?;
        Ok(Run {
            run_id: meta.run_id,
            created_at: meta.created_at,
            finished_at: meta.finished_at,
            status: meta.status,
            params,
            tags: meta.tags,
            artifacts: meta.artifacts,
        })
    }

    /// Always fails: params are immutable once the run exists.
    pub fn log_param(&self, run_id: &str, key: &str, _value: &str) -> Result<(), TrackingError> {
        self.run_dir(run_id)?;
        Err(TrackingError::ParamAfterCreation(key.to_string()))
    }

    pub fn set_tag(&self, run_id: &str, key: &str, value: &str) -> Result<(), TrackingError> {
        let (dir, mut meta) = self.active_dir(run_id)?;
        meta.tags.insert(key.to_string(), value.to_string());
        write_atomic(&dir.join("meta.json"), &to_sorted_json(&meta)?)
    }

    /// Append one record to the key's series. A torn final line left by an
    /// interrupted writer is cut off before appending.
    pub fn log_metric(
        &self,
        run_id: &str,
        key: &str,
        value: f64,
        step: u64,
    ) -> Result<MetricRecord, TrackingError> {
        check_name(key)?;
        if !value.is_finite() {
            return Err(TrackingError::NonFinite(value));
        }
        let (dir, _) = self.active_dir(run_id)?;
        let path = dir.join("metrics").join(format!("{key}.csv"));
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&path)?;
        let len = file.metadata()?.len();
        if len == 0 {
            file.write_all(METRIC_HEADER.as_bytes())?;
        } else {
            drop_torn_tail(&mut file, len)?;
        }
        let record = MetricRecord {
            step,
            timestamp: now(),
            value,
        };
        // one write per record keeps a crash from interleaving lines
        let line = format!("{},{:.6},{}\n", record.step, record.timestamp, record.value);
        file.write_all(line.as_bytes())?;
        file.sync_data()?;
        Ok(record)
    }

    /// Every complete record of the series in append order. Missing series
    /// are empty.
    pub fn metric_series(&self, run_id: &str, key: &str) -> Result<Vec<MetricRecord>, TrackingError> {
        check_name(key)?;
        let dir = self.run_dir(run_id)?;
        let path = dir.join("metrics").join(format!("{key}.csv"));
        let text = match fs::read(&path) {
            Ok(bytes) => bytes,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e.into()),
        };
        parse_series(&path, &text)
    }

    /// Series with re-logged steps collapsed to their latest record, in
    /// step order.
    pub fn effective_series(&self, run_id: &str, key: &str) -> Result<Vec<MetricRecord>, TrackingError> {
        let mut by_step = BTreeMap::new();
        for r in self.metric_series(run_id, key)? {
            by_step.insert(r.step, r);
        }
        Ok(by_step.into_values().collect())
    }

    pub fn metric_keys(&self, run_id: &str) -> Result<Vec<String>, TrackingError> {
        let dir = self.run_dir(run_id)?;
        let mut keys: Vec<String> = fs::read_dir(dir.join("metrics"))?
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                e.file_name()
                    .to_string_lossy()
                    .strip_suffix(".csv")
                    .map(str::to_string)
            })
            .collect();
        keys.sort();
        Ok(keys)
    }

    pub fn log_artifact(&self, run_id: &str, rel_path: &str, bytes: &[u8]) -> Result<ArtifactRef, TrackingError> {
        let rel = check_relative(rel_path)?;
        let (dir, mut meta) = self.active_dir(run_id)?;
        let target = dir.join("artifacts").join(&rel);
        if let Some(parent) = target.parent() {
            fs::create_dir_all(parent)?;
        }
        {
            let mut f = fs::File::create(&target)?;
            f.write_all(bytes)?;
            f.sync_data()?;
        }
        let artifact = ArtifactRef {
            run_id: run_id.to_string(),
            path: rel_path.to_string(),
            size: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        };
        meta.artifacts.retain(|a| a.path != rel_path);
        meta.artifacts.push(artifact.clone());
        write_atomic(&dir.join("meta.json"), &to_sorted_json(&meta)?)?;
        Ok(artifact)
    }

    pub fn read_artifact(&self, run_id: &str, rel_path: &str) -> Result<Vec<u8>, TrackingError> {
        let rel = check_relative(rel_path)?;
        let dir = self.run_dir(run_id)?;
        Ok(fs::read(dir.join("artifacts").join(rel))?)
    }

    /// Whether the stored bytes still match the recorded hash and size.
    pub fn verify_artifact(&self, run_id: &str, rel_path: &str) -> Result<bool, TrackingError> {
        let run = self.get_run(run_id)?;
        let Some(artifact) = run.artifacts.iter().find(|a| a.path == rel_path) else {
            return Ok(false);
        };
        let bytes = self.read_artifact(run_id, rel_path)?;
        Ok(bytes.len() as u64 == artifact.size && sha256_hex(&bytes) == artifact.sha256)
    }

    pub fn finish_run(&self, run_id: &str, status: RunStatus) -> Result<Run, TrackingError> {
        let (dir, mut meta) = self.active_dir(run_id)?;
        meta.status = status;
        meta.finished_at = Some(now());
        write_atomic(&dir.join("meta.json"), &to_sorted_json(&meta)?)?;
        self.get_run(run_id)
    }

    /// Matching runs, newest first.
    pub fn query_runs(&self, filter: &RunFilter) -> Result<Vec<Run>, TrackingError> {
        let mut runs = Vec::new();
        for id in self.run_ids()?.into_iter().rev() {
            let run = self.get_run(&id)?;
            if filter.matches(&run) {
                runs.push(run);
            }
        }
        Ok(runs)
    }

    /// One row per requested run, in the requested order. A run without the
    /// metric gets a null value.
    pub fn compare_runs(
        &self,
        run_ids: &[String],
        key: &str,
        aggregate: Aggregate,
        param_keys: &[String],
    ) -> Result<Comparison, TrackingError> {
        let mut rows = Vec::with_capacity(run_ids.len());
        for id in run_ids {
            let run = self.get_run(id)?;
            let series = self.effective_series(id, key)?;
            let values: Vec<f64> = series.iter().map(|r| r.value).collect();
            let value = match aggregate {
                Aggregate::Last => {
                    // latest append wins, whatever its step
                    self.metric_series(id, key)?.last().map(|r| r.value)
                }
                Aggregate::Min => values.iter().copied().reduce(f64::min),
                Aggregate::Max => values.iter().copied().reduce(f64::max),
                Aggregate::Median => median(&values),
            };
            rows.push(ComparisonRow {
                run_id: id.clone(),
                params: param_keys.iter().map(|k| run.params.get(k).cloned()).collect(),
                value,
            });
        }
        Ok(Comparison {
            metric: key.to_string(),
            aggregate,
            param_keys: param_keys.to_vec(),
            rows,
        })
    }
}

fn drop_torn_tail(file: &mut fs::File, len: u64) -> Result<(), TrackingError> {
    let mut last = [0u8; 1];
    file.seek(SeekFrom::Start(len - 1))?;
    file.read_exact(&mut last)?;
    if last[0] == b'\n' {
        return Ok(());
    }
    let mut bytes = Vec::with_capacity(len as usize);
    file.seek(SeekFrom::Start(0))?;
    file.read_to_end(&mut bytes)?;
    let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    file.set_len(keep as u64)?;
    if keep == 0 {
        file.write_all(METRIC_HEADER.as_bytes())?;
    }
    Ok(())
}

fn parse_series(path: &Path, bytes: &[u8]) -> Result<Vec<MetricRecord>, TrackingError> {
    let corrupt = |reason: String| TrackingError::Corrupt {
        path: path.to_path_buf(),
        reason,
    };
    let text = std::str::from_utf8(bytes).map_err(|e| corrupt(e.to_string()))?;
    // a writer may be mid-line: only newline-terminated lines count
    let complete = match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => return Ok(Vec::new()),
    };
    let mut lines = complete.lines();
    if lines.next() != Some(METRIC_HEADER.trim_end()) {
        return Err(corrupt("missing header".into()));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let mut parts = line.split(',');
            let (Some(step), Some(ts), Some(value), None) =
                (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(corrupt(format!("line {}: {line:?}", i + 2)));
            };
            let bad = |_| corrupt(format!("line {}: {line:?}", i + 2));
            Ok(MetricRecord {
                step: step.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                timestamp: ts.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
                value: value.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
            })
        })
        .collect()
}
