//! Operation-time capture, expert validation, labeling, and the accuracy
//! monitor.
//!
//! All writes go through one [`Pipeline`] value and are appended to
//! `journal.jsonl` under the pipeline root; state is rebuilt by replaying
//! the journal. Observations are stored once per item under
//! `observations/` and referenced by relative path.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{self, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::chess::{class_index, ChessError, Placement, Square, NUM_CLASSES};
use crate::recognizers::Prediction;
use crate::simulation::Observation;

const JOURNAL: &str = "journal.jsonl";
const LABELS: &str = "labels.csv";

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("unknown game {0}")]
    UnknownGame(String),
    #[error("unknown item {0}")]
    UnknownItem(String),
    #[error("item {0} was already validated")]
    AlreadyValidated(String),
    #[error("illegal placement: {0}")]
    IllegalPlacement(#[from] ChessError),
    #[error("a correction equal to the prediction needs a note")]
    EmptyCorrection,
    #[error("no validated items")]
    NoValidatedItems,
    #[error("invalid monitor config: {0}")]
    InvalidConfig(String),
    #[error("corrupt journal line {line}: {reason}")]
    CorruptJournal { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ItemStatus {
    Pending,
    Accepted,
    Corrected,
}

impl std::str::FromStr for ItemStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<ItemStatus, String> {
        match s.to_ascii_lowercase().as_str() {
            "pending" => Ok(ItemStatus::Pending),
            "accepted" => Ok(ItemStatus::Accepted),
            "corrected" => Ok(ItemStatus::Corrected),
            _ => Err(format!("unknown status {s:?}")),
        }
    }
}

mod placement_field {
    use super::Placement;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(p: &Placement, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&p.to_fen_field())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Placement, D::Error> {
        let text = String::deserialize(d)?;
        Placement::from_fen_field(&text).map_err(serde::de::Error::custom)
    }

    pub mod option {
        use super::Placement;
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(p: &Option<Placement>, s: S) -> Result<S::Ok, S::Error> {
            match p {
                Some(p) => s.serialize_some(&p.to_fen_field()),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Placement>, D::Error> {
            Option::<String>::deserialize(d)?
                .map(|t| Placement::from_fen_field(&t).map_err(serde::de::Error::custom))
                .transpose()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationItem {
    pub item_id: String,
    pub game_id: String,
    pub ply: usize,
    #[serde(with = "placement_field")]
    pub predicted_placement: Placement,
    /// Path of the stored observation, relative to the pipeline root.
    pub observation_ref: String,
    pub latency_s: f64,
    pub status: ItemStatus,
    #[serde(with = "placement_field::option", default)]
    pub corrected_placement: Option<Placement>,
    #[serde(default)]
    pub note: Option<String>,
    pub recorded_at: f64,
    #[serde(default)]
    pub validated_at: Option<f64>,
}

impl ValidationItem {
    /// The placement the reviewer confirmed, once validated.
    pub fn validated_placement(&self) -> Option<&Placement> {
        match self.status {
            ItemStatus::Pending => None,
            ItemStatus::Accepted => Some(&self.predicted_placement),
            ItemStatus::Corrected => self.corrected_placement.as_ref(),
        }
    }

    /// Whether the prediction matched the validated placement.
    pub fn correct(&self) -> Option<bool> {
        self.validated_placement()
            .map(|v| *v == self.predicted_placement)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Accepted,
    Corrected {
        placement: Placement,
        note: Option<String>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
enum Event {
    RegisterGame {
        game_id: String,
        at: f64,
    },
    Record {
        item: Box<ValidationItem>,
    },
    Verdict {
        item_id: String,
        status: ItemStatus,
        #[serde(with = "placement_field::option", default)]
        corrected_placement: Option<Placement>,
        note: Option<String>,
        at: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorConfig {
    pub accuracy_threshold: f64,
    pub latency_budget_s: f64,
    pub window: usize,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        MonitorConfig {
            accuracy_threshold: 0.90,
            latency_budget_s: 2.0,
            window: 50,
        }
    }
}

impl MonitorConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(self.accuracy_threshold > 0.0 && self.accuracy_threshold < 1.0) {
            return Err(PipelineError::InvalidConfig(
                "accuracy threshold must lie in (0, 1)".into(),
            ));
        }
        if self.latency_budget_s.is_nan() || self.latency_budget_s <= 0.0 {
            return Err(PipelineError::InvalidConfig(
                "latency budget must be positive".into(),
            ));
        }
        if self.window == 0 {
            return Err(PipelineError::InvalidConfig("window must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorStatus {
    /// False when nothing has been validated yet; no alert is raised then.
    pub has_data: bool,
    pub window_size: usize,
    pub window_correct: usize,
    pub window_accuracy: Option<f64>,
    pub accuracy_threshold: f64,
    pub alert: bool,
    pub latency_budget_s: f64,
    pub latency_measurements: usize,
    pub latency_violations: usize,
}

/// Number of latencies strictly above the budget.
pub fn latency_violations(latencies: &[f64], budget_s: f64) -> usize {
    latencies.iter().filter(|&&l| l > budget_s).count()
}

/// Monitor verdict over correctness flags, oldest first.
pub fn window_status(correct: &[bool], latencies: &[f64], config: &MonitorConfig) -> MonitorStatus {
    let window = &correct[correct.len().saturating_sub(config.window)..];
    let hits = window.iter().filter(|&&c| c).count();
    let accuracy = (!window.is_empty()).then(|| hits as f64 / window.len() as f64);
    MonitorStatus {
        has_data: !window.is_empty(),
        window_size: window.len(),
        window_correct: hits,
        window_accuracy: accuracy,
        accuracy_threshold: config.accuracy_threshold,
        alert: accuracy.is_some_and(|a| a < config.accuracy_threshold),
        latency_budget_s: config.latency_budget_s,
        latency_measurements: latencies.len(),
        latency_violations: latency_violations(latencies, config.latency_budget_s),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelSource {
    Predicted,
    Corrected,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelingSummary {
    pub path: PathBuf,
    pub items: usize,
    pub rows: usize,
    /// Row count per class index 0..12.
    pub per_class: Vec<u64>,
    pub corrected_rows: usize,
}

fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Single-writer handle on a pipeline directory.
pub struct Pipeline {
    root: PathBuf,
    journal: fs::File,
    games: BTreeSet<String>,
    items: Vec<ValidationItem>,
    by_key: HashMap<(String, usize), usize>,
    by_id: HashMap<String, usize>,
    /// Item indices in validation order.
    validated: Vec<usize>,
}

impl Pipeline {
    pub fn open(root: impl Into<PathBuf>) -> Result<Pipeline, PipelineError> {
        let root = root.into();
        fs::create_dir_all(root.join("observations"))?;
        let mut journal = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(root.join(JOURNAL))?;
        let mut bytes = Vec::new();
        journal.read_to_end(&mut bytes)?;
        // an interrupted append leaves a line without its newline; drop it
        let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
        if keep < bytes.len() {
            journal.set_len(keep as u64)?;
            journal.seek(SeekFrom::End(0))?;
        }
        let mut pipeline = Pipeline {
            root,
            journal,
            games: BTreeSet::new(),
            items: Vec::new(),
            by_key: HashMap::new(),
            by_id: HashMap::new(),
            validated: Vec::new(),
        };
        let text = std::str::from_utf8(&bytes[..keep]).map_err(|e| PipelineError::CorruptJournal {
            line: 0,
            reason: e.to_string(),
        })?;
        for (i, line) in text.lines().enumerate() {
            let event: Event =
                serde_json::from_str(line).map_err(|e| PipelineError::CorruptJournal {
                    line: i + 1,
                    reason: e.to_string(),
                })?;
            pipeline.apply(event);
        }
        Ok(pipeline)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn apply(&mut self, event: Event) {
        match event {
            Event::RegisterGame { game_id, .. } => {
                self.games.insert(game_id);
            }
            Event::Record { item } => {
                let idx = self.items.len();
                self.by_key.insert((item.game_id.clone(), item.ply), idx);
                self.by_id.insert(item.item_id.clone(), idx);
                self.items.push(*item);
            }
            Event::Verdict {
                item_id,
                status,
                corrected_placement,
                note,
                at,
            } => {
                if let Some(&idx) = self.by_id.get(&item_id) {
                    let item = &mut self.items[idx];
                    item.status = status;
                    item.corrected_placement = corrected_placement;
                    item.note = note;
                    item.validated_at = Some(at);
                    self.validated.push(idx);
                }
            }
        }
    }

    fn append(&mut self, event: Event) -> Result<(), PipelineError> {
        let mut line = serde_json::to_string(&event)?;
        line.push('\n');
        self.journal.write_all(line.as_bytes())?;
        self.journal.sync_data()?;
        self.apply(event);
        Ok(())
    }

    pub fn register_game(&mut self, game_id: &str) -> Result<(), PipelineError> {
        if self.games.contains(game_id) {
            return Ok(());
        }
        self.append(Event::RegisterGame {
            game_id: game_id.to_string(),
            at: now(),
        })
    }

    pub fn is_registered(&self, game_id: &str) -> bool {
        self.games.contains(game_id)
    }

    /// Queue a prediction for validation. Recording the same (game, ply)
    /// again returns the existing item unchanged.
    pub fn record_inference(
        &mut self,
        game_id: &str,
        ply: usize,
        prediction: &Prediction,
        observation: &Observation,
    ) -> Result<ValidationItem, PipelineError> {
        if !self.games.contains(game_id) {
            return Err(PipelineError::UnknownGame(game_id.to_string()));
        }
        if let Some(&idx) = self.by_key.get(&(game_id.to_string(), ply)) {
            return Ok(self.items[idx].clone());
        }
        let item_id = format!("item-{:06}", self.items.len() + 1);
        let observation_ref = format!("observations/{item_id}.json");
        let obs_path = self.root.join(&observation_ref);
        {
            let mut f = fs::File::create(&obs_path)?;
            f.write_all(serde_json::to_string(observation)?.as_bytes())?;
            f.sync_data()?;
        }
        let item = ValidationItem {
            item_id,
            game_id: game_id.to_string(),
            ply,
            predicted_placement: prediction.placement,
            observation_ref,
            latency_s: prediction.latency_s,
            status: ItemStatus::Pending,
            corrected_placement: None,
            note: None,
            recorded_at: now(),
            validated_at: None,
        };
        self.append(Event::Record {
            item: Box::new(item.clone()),
        })?;
        Ok(item)
    }

    pub fn submit_validation(
        &mut self,
        item_id: &str,
        verdict: Verdict,
    ) -> Result<ValidationItem, PipelineError> {
        let idx = *self
            .by_id
            .get(item_id)
            .ok_or_else(|| PipelineError::UnknownItem(item_id.to_string()))?;
        let item = &self.items[idx];
        if item.status != ItemStatus::Pending {
            return Err(PipelineError::AlreadyValidated(item_id.to_string()));
        }
        let event = match verdict {
            Verdict::Accepted => Event::Verdict {
                item_id: item_id.to_string(),
                status: ItemStatus::Accepted,
                corrected_placement: None,
                note: None,
                at: now(),
            },
            Verdict::Corrected { placement, note } => {
                placement.validate()?;
                if placement == item.predicted_placement && note.is_none() {
                    return Err(PipelineError::EmptyCorrection);
                }
                Event::Verdict {
                    item_id: item_id.to_string(),
                    status: ItemStatus::Corrected,
                    corrected_placement: Some(placement),
                    note,
                    at: now(),
                }
            }
        };
        self.append(event)?;
        Ok(self.items[idx].clone())
    }

    pub fn item(&self, item_id: &str) -> Option<&ValidationItem> {
        self.by_id.get(item_id).map(|&i| &self.items[i])
    }

    /// Items in recording order, optionally filtered by status.
    pub fn items(&self, status: Option<ItemStatus>) -> Vec<&ValidationItem> {
        self.items
            .iter()
            .filter(|i| status.is_none_or(|s| i.status == s))
            .collect()
    }

    pub fn observation(&self, item: &ValidationItem) -> Result<Observation, PipelineError> {
        let text = fs::read_to_string(self.root.join(&item.observation_ref))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Windowed accuracy over the most recently validated boards. Latency
    /// violations are counted over every recorded item.
    pub fn monitor_status(&self, config: &MonitorConfig) -> Result<MonitorStatus, PipelineError> {
        config.validate()?;
        let correct: Vec<bool> = self
            .validated
            .iter()
            .map(|&i| self.items[i].correct().expect("validated"))
            .collect();
        let latencies: Vec<f64> = self.items.iter().map(|i| i.latency_s).collect();
        Ok(window_status(&correct, &latencies, config))
    }

    /// Write `labels.csv`: one row per square of every validated item,
    /// labeled with the validated placement, items ordered by (game, ply).
    /// Re-running rewrites the file with identical bytes for an identical
    /// journal.
    pub fn run_labeling_job(&self) -> Result<LabelingSummary, PipelineError> {
        let mut validated: Vec<&ValidationItem> = self
            .items
            .iter()
            .filter(|i| i.status != ItemStatus::Pending)
            .collect();
        if validated.is_empty() {
            return Err(PipelineError::NoValidatedItems);
        }
        validated.sort_by(|a, b| (&a.game_id, a.ply).cmp(&(&b.game_id, b.ply)));

        let mut header = vec![
            "game_id".to_string(),
            "ply".into(),
            "square".into(),
            "label".into(),
            "p_occ".into(),
            "p_white".into(),
        ];
        header.extend((0..NUM_CLASSES).map(|c| format!("type_{c}")));
        header.push("source".into());

        let mut buf = Vec::new();
        let mut per_class = vec![0u64; NUM_CLASSES];
        let mut rows = 0;
        let mut corrected_rows = 0;
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(&header)?;
            for item in &validated {
                let obs = self.observation(item)?;
                let truth = item.validated_placement().expect("validated");
                for sq in Square::all() {
                    let label = class_index(truth.get(sq));
                    let source = if truth.get(sq) == item.predicted_placement.get(sq) {
                        LabelSource::Predicted
                    } else {
                        corrected_rows += 1;
                        LabelSource::Corrected
                    };
                    let mut record = vec![
                        item.game_id.clone(),
                        item.ply.to_string(),
                        sq.index().to_string(),
                        label.to_string(),
                        obs.occupancy(sq).to_string(),
                        obs.white(sq).to_string(),
                    ];
                    record.extend(obs.types(sq).iter().map(f64::to_string));
                    record.push(format!("{source:?}"));
                    w.write_record(&record)?;
                    per_class[label] += 1;
                    rows += 1;
                }
            }
            w.flush()?;
        }
        let path = self.root.join(LABELS);
        let tmp = self.root.join("labels.csv.tmp");
        fs::write(&tmp, &buf)?;
        fs::rename(&tmp, &path)?;
        Ok(LabelingSummary {
            path,
            items: validated.len(),
            rows,
            per_class,
            corrected_rows,
        })
    }

    /// Count of validated items per game, for reporting.
    pub fn validated_per_game(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for &i in &self.validated {
            *out.entry(self.items[i].game_id.clone()).or_default() += 1;
        }
        out
    }
}
