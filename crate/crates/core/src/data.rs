//! Score-matrix data model: labels, validation, CSV/JSON ingestion and
//! row/column sub-selection.
//!
//! A [`ScoreMatrix`] is a models × tasks grid. Cells may be missing; missing
//! cells are kept as `None` and every statistical routine downstream refuses
//! to run on them instead of imputing a value.

use std::borrow::Borrow;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Case-sensitive, nonempty task label.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TaskId(String);

impl TaskId {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if name.trim().is_empty() {
            return Err(Error::Parse { line: 0, message: "empty task label".into() });
        }
        Ok(TaskId(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for TaskId {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        TaskId::new(s)
    }
}

impl From<TaskId> for String {
    fn from(t: TaskId) -> String {
        t.0
    }
}

impl Borrow<str> for TaskId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(&self.0)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Chat,
    Base,
    #[default]
    Unspecified,
}

/// Small-model ensemble a model belongs to in robustness analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    /// Trained on different data sources.
    DataVariability,
    /// Same data, different seeds.
    RandomNoise,
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Group::DataVariability => "data_variability",
            Group::RandomNoise => "random_noise",
        })
    }
}

/// Model row label. `variant` and `group` are metadata supplied by a
/// manifest; they are never inferred from the name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelId {
    pub name: String,
    #[serde(default)]
    pub variant: Variant,
    #[serde(default)]
    pub group: Option<Group>,
}

impl ModelId {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if name.trim().is_empty() {
            return Err(Error::Parse { line: 0, message: "empty model label".into() });
        }
        Ok(ModelId { name, variant: Variant::Unspecified, group: None })
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_group(mut self, group: Group) -> Self {
        self.group = Some(group);
        self
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(&self.name)
    }
}

/// One long-form observation, e.g. a row scraped from a results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord<T> {
    pub model: ModelId,
    pub task: TaskId,
    pub score: T,
    pub source: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// Guesses the format from a file extension; anything but `.json` is CSV.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::InvalidConfig(format!("unknown format {other:?}"))),
        }
    }
}

/// Models × tasks grid of benchmark scores.
///
/// Immutable after construction. Invariants: at least two models and one
/// task, unique labels on both axes, every present cell finite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreMatrix<T> {
    tasks: Vec<TaskId>,
    models: Vec<ModelId>,
    scores: Vec<Vec<Option<T>>>,
}

/// Serialized layout shared by matrices and checkpoint tables.
#[derive(Deserialize)]
struct RawMatrix<T> {
    tasks: Vec<TaskId>,
    models: Vec<ModelId>,
    scores: Vec<Vec<Option<T>>>,
}

fn check_unique<'a>(kind: &'static str, labels: impl Iterator<Item = &'a str>) -> Result<()> {
    let mut seen = HashSet::new();
    for label in labels {
        if !seen.insert(label) {
            return Err(Error::DuplicateLabel { kind, label: label.to_string() });
        }
    }
    Ok(())
}

impl<T: Scalar> ScoreMatrix<T> {
    pub fn new(models: Vec<ModelId>, tasks: Vec<TaskId>, scores: Vec<Vec<Option<T>>>) -> Result<Self> {
        Self::validated(models, tasks, scores, 2)
    }

    /// Convenience constructor for fully observed grids.
    pub fn from_complete(models: Vec<ModelId>, tasks: Vec<TaskId>, scores: Vec<Vec<T>>) -> Result<Self> {
        let scores = scores.into_iter().map(|row| row.into_iter().map(Some).collect()).collect();
        Self::new(models, tasks, scores)
    }

    /// Builds a matrix from plain string labels.
    pub fn from_labels<M, Q>(models: &[M], tasks: &[Q], scores: Vec<Vec<T>>) -> Result<Self>
    where
        M: AsRef<str>,
        Q: AsRef<str>,
    {
        let models = models.iter().map(|m| ModelId::new(m.as_ref())).collect::<Result<_>>()?;
        let tasks = tasks.iter().map(|t| TaskId::new(t.as_ref())).collect::<Result<_>>()?;
        Self::from_complete(models, tasks, scores)
    }

    fn validated(
        models: Vec<ModelId>,
        tasks: Vec<TaskId>,
        scores: Vec<Vec<Option<T>>>,
        min_models: usize,
    ) -> Result<Self> {
        if models.len() < min_models {
            return Err(Error::EmptyMatrix(format!(
                "need at least {min_models} models, found {}",
                models.len()
            )));
        }
        if tasks.is_empty() {
            return Err(Error::EmptyMatrix("no tasks".into()));
        }
        check_unique("task", tasks.iter().map(TaskId::as_str))?;
        check_unique("model", models.iter().map(|m| m.name.as_str()))?;
        if scores.len() != models.len() {
            return Err(Error::Parse {
                line: 0,
                message: format!("{} score rows for {} models", scores.len(), models.len()),
            });
        }
        for (model, row) in models.iter().zip(&scores) {
            if row.len() != tasks.len() {
                return Err(Error::Parse {
                    line: 0,
                    message: format!(
                        "row {:?} has {} cells, expected {}",
                        model.name,
                        row.len(),
                        tasks.len()
                    ),
                });
            }
            for (task, cell) in tasks.iter().zip(row) {
                if let Some(v) = cell {
                    if !v.is_finite() {
                        return Err(Error::NonFinite { model: model.name.clone(), task: task.to_string() });
                    }
                }
            }
        }
        Ok(ScoreMatrix { tasks, models, scores })
    }

    pub fn models(&self) -> &[ModelId] {
        &self.models
    }

    pub fn tasks(&self) -> &[TaskId] {
        &self.tasks
    }

    pub fn n_models(&self) -> usize {
        self.models.len()
    }

    pub fn n_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn get(&self, model: usize, task: usize) -> Option<T> {
        self.scores[model][task]
    }

    pub fn rows(&self) -> &[Vec<Option<T>>] {
        &self.scores
    }

    pub fn model_index(&self, name: &str) -> Option<usize> {
        self.models.iter().position(|m| m.name == name)
    }

    pub fn task_index(&self, name: &str) -> Option<usize> {
        self.tasks.iter().position(|t| t.as_str() == name)
    }

    pub fn score(&self, model: &str, task: &str) -> Result<Option<T>> {
        let i = self
            .model_index(model)
            .ok_or_else(|| Error::UnknownLabel { kind: "model", label: model.into() })?;
        let j = self
            .task_index(task)
            .ok_or_else(|| Error::UnknownLabel { kind: "task", label: task.into() })?;
        Ok(self.scores[i][j])
    }

    fn missing(&self, i: usize, j: usize) -> Error {
        Error::MissingCell { model: self.models[i].name.clone(), task: self.tasks[j].to_string() }
    }

    /// Column `j` as a dense vector; errors on the first missing cell.
    pub fn column(&self, j: usize) -> Result<Vec<T>> {
        (0..self.n_models()).map(|i| self.scores[i][j].ok_or_else(|| self.missing(i, j))).collect()
    }

    pub fn column_by_name(&self, task: &str) -> Result<Vec<T>> {
        let j = self
            .task_index(task)
            .ok_or_else(|| Error::UnknownLabel { kind: "task", label: task.into() })?;
        self.column(j)
    }

    pub fn is_complete(&self) -> bool {
        self.scores.iter().flatten().all(Option::is_some)
    }

    /// Dense copy of the grid, or the first missing cell as an error.
    pub fn dense(&self) -> Result<Vec<Vec<T>>> {
        self.scores
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter().enumerate().map(|(j, c)| c.ok_or_else(|| self.missing(i, j))).collect()
            })
            .collect()
    }

    /// Restricts the matrix to the named models and tasks, keeping the
    /// original row and column order.
    pub fn submatrix<M, Q>(&self, models: &[M], tasks: &[Q]) -> Result<Self>
    where
        M: AsRef<str>,
        Q: AsRef<str>,
    {
        let mut keep_rows = vec![false; self.n_models()];
        for m in models {
            let i = self
                .model_index(m.as_ref())
                .ok_or_else(|| Error::UnknownLabel { kind: "model", label: m.as_ref().into() })?;
            keep_rows[i] = true;
        }
        let mut keep_cols = vec![false; self.n_tasks()];
        for t in tasks {
            let j = self
                .task_index(t.as_ref())
                .ok_or_else(|| Error::UnknownLabel { kind: "task", label: t.as_ref().into() })?;
            keep_cols[j] = true;
        }
        self.filtered(&keep_rows, &keep_cols)
    }

    /// Keeps the rows whose model metadata satisfies `pred`, all tasks.
    pub fn select_models(&self, pred: impl Fn(&ModelId) -> bool) -> Result<Self> {
        let rows: Vec<bool> = self.models.iter().map(pred).collect();
        self.filtered(&rows, &vec![true; self.n_tasks()])
    }

    fn filtered(&self, rows: &[bool], cols: &[bool]) -> Result<Self> {
        let models = self.models.iter().zip(rows).filter(|(_, &k)| k).map(|(m, _)| m.clone()).collect();
        let tasks = self.tasks.iter().zip(cols).filter(|(_, &k)| k).map(|(t, _)| t.clone()).collect();
        let scores = self
            .scores
            .iter()
            .zip(rows)
            .filter(|(_, &k)| k)
            .map(|(row, _)| row.iter().zip(cols).filter(|(_, &k)| k).map(|(c, _)| *c).collect())
            .collect();
        Self::new(models, tasks, scores)
    }

    /// Attaches variant/group metadata from a sidecar manifest.
    pub fn with_manifest(&self, manifest: &Manifest) -> Result<Self> {
        let mut out = self.clone();
        for entry in &manifest.models {
            let i = self
                .model_index(&entry.name)
                .ok_or_else(|| Error::UnknownLabel { kind: "model", label: entry.name.clone() })?;
            out.models[i] = entry.clone();
        }
        Ok(out)
    }

    /// Builds a matrix from long-form records; rows and columns appear in
    /// first-seen order and cells absent from the records are missing.
    pub fn from_records(records: &[EvaluationRecord<T>]) -> Result<Self> {
        let mut models: Vec<ModelId> = Vec::new();
        let mut tasks: Vec<TaskId> = Vec::new();
        let mut model_ix = HashMap::new();
        let mut task_ix = HashMap::new();
        let mut cells = HashMap::new();
        for rec in records {
            if !rec.score.is_finite() {
                return Err(Error::NonFinite { model: rec.model.name.clone(), task: rec.task.to_string() });
            }
            let i = *model_ix.entry(rec.model.name.clone()).or_insert_with(|| {
                models.push(rec.model.clone());
                models.len() - 1
            });
            let j = *task_ix.entry(rec.task.clone()).or_insert_with(|| {
                tasks.push(rec.task.clone());
                tasks.len() - 1
            });
            if cells.insert((i, j), rec.score).is_some() {
                return Err(Error::DuplicateLabel {
                    kind: "record",
                    label: format!("{}/{}", rec.model.name, rec.task),
                });
            }
        }
        let scores = (0..models.len())
            .map(|i| (0..tasks.len()).map(|j| cells.get(&(i, j)).copied()).collect())
            .collect();
        Self::new(models, tasks, scores)
    }

    pub fn to_records(&self, source: &str) -> Vec<EvaluationRecord<T>> {
        let mut out = Vec::new();
        for (model, row) in self.models.iter().zip(&self.scores) {
            for (task, cell) in self.tasks.iter().zip(row) {
                if let Some(score) = cell {
                    out.push(EvaluationRecord {
                        model: model.clone(),
                        task: task.clone(),
                        score: *score,
                        source: source.to_string(),
                    });
                }
            }
        }
        out
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let (models, tasks, scores) = parse_csv(reader)?;
        Self::new(models, tasks, scores)
    }

    pub fn from_csv_str(s: &str) -> Result<Self> {
        Self::from_csv_reader(s.as_bytes())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: RawMatrix<T> = serde_json::from_str(s)?;
        Self::new(raw.models, raw.tasks, raw.scores)
    }

    /// `model,<task1>,...` header, one row per model, empty cell = missing.
    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header = std::iter::once("model").chain(self.tasks.iter().map(TaskId::as_str));
        w.write_record(header).expect("in-memory write");
        for (model, row) in self.models.iter().zip(&self.scores) {
            let cells = row.iter().map(|c| c.map(|v| v.to_string()).unwrap_or_default());
            w.write_record(std::iter::once(model.name.clone()).chain(cells)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("matrix serializes")
    }
}

fn parse_cell<T: Scalar>(cell: &str, line: usize, model: &str, task: &TaskId) -> Result<Option<T>> {
    let cell = cell.trim();
    if cell.is_empty() {
        return Ok(None);
    }
    let v: T = cell.parse().map_err(|_| Error::Parse {
        line,
        message: format!("non-numeric cell {cell:?} at row {model:?}, column {task:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::NonFinite { model: model.into(), task: task.to_string() });
    }
    Ok(Some(v))
}

type Parsed<T> = (Vec<ModelId>, Vec<TaskId>, Vec<Vec<Option<T>>>);

fn parse_csv<T: Scalar, R: Read>(reader: R) -> Result<Parsed<T>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(h) => h?,
        None => return Err(Error::EmptyMatrix("empty CSV input".into())),
    };
    let tasks = header
        .iter()
        .skip(1)
        .map(|t| {
            TaskId::new(t.trim())
                .map_err(|_| Error::Parse { line: 1, message: "empty task label in header".into() })
        })
        .collect::<Result<Vec<_>>>()?;
    check_unique("task", tasks.iter().map(TaskId::as_str))?;
    let mut models = Vec::new();
    let mut scores = Vec::new();
    for rec in records {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        if rec.len() != tasks.len() + 1 {
            return Err(Error::Parse {
                line,
                message: format!(
                    "row {:?} has {} fields, header has {}",
                    rec.get(0).unwrap_or(""),
                    rec.len(),
                    tasks.len() + 1
                ),
            });
        }
        let name = rec[0].trim();
        let model = ModelId::new(name)
            .map_err(|_| Error::Parse { line, message: "empty model label".into() })?;
        let row = tasks
            .iter()
            .zip(rec.iter().skip(1))
            .map(|(task, cell)| parse_cell(cell, line, name, task))
            .collect::<Result<Vec<_>>>()?;
        models.push(model);
        scores.push(row);
    }
    Ok((models, tasks, scores))
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn load_matrix<T: Scalar>(path: impl AsRef<Path>, format: Format) -> Result<ScoreMatrix<T>> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    match format {
        Format::Csv => ScoreMatrix::from_csv_str(&text),
        Format::Json => ScoreMatrix::from_json_str(&text),
    }
}

pub fn save_matrix<T: Scalar>(matrix: &ScoreMatrix<T>, path: impl AsRef<Path>, format: Format) -> Result<()> {
    let path = path.as_ref();
    let text = match format {
        Format::Csv => matrix.to_csv_string(),
        Format::Json => matrix.to_json_string(),
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Sidecar metadata: which rows are chat/base models and which ensemble a
/// small model belongs to.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub models: Vec<ModelId>,
    /// Optional base-model → chat-model pairing, used to join base-model
    /// candidate scores onto chat-model target scores.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub pairs: BTreeMap<String, String>,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Ok(serde_json::from_str(&read_to_string(path)?)?)
    }
}

/// Proxy-task scores of one checkpoint being predicted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointScores<T> {
    pub checkpoint: ModelId,
    pub scores: BTreeMap<TaskId, T>,
}

impl<T: Scalar> CheckpointScores<T> {
    pub fn from_pairs<Q: AsRef<str>>(name: &str, scores: &[(Q, T)]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (task, v) in scores {
            map.insert(TaskId::new(task.as_ref())?, *v);
        }
        Ok(CheckpointScores { checkpoint: ModelId::new(name)?, scores: map })
    }
}

/// Reads a checkpoint table (same layout as a score matrix, but a single
/// row is allowed). Missing cells are simply absent from the score map.
pub fn load_checkpoints<T: Scalar>(path: impl AsRef<Path>, format: Format) -> Result<Vec<CheckpointScores<T>>> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    parse_checkpoints(&text, format)
}

pub fn parse_checkpoints<T: Scalar>(text: &str, format: Format) -> Result<Vec<CheckpointScores<T>>> {
    let (models, tasks, scores) = match format {
        Format::Csv => parse_csv::<T, _>(text.as_bytes())?,
        Format::Json => {
            let raw: RawMatrix<T> = serde_json::from_str(text)?;
            (raw.models, raw.tasks, raw.scores)
        }
    };
    let m = ScoreMatrix::validated(models, tasks, scores, 1)?;
    Ok(checkpoints_from_matrix(&m))
}

pub fn checkpoints_from_matrix<T: Scalar>(m: &ScoreMatrix<T>) -> Vec<CheckpointScores<T>> {
    m.models
        .iter()
        .zip(&m.scores)
        .map(|(model, row)| CheckpointScores {
            checkpoint: model.clone(),
            scores: m.tasks.iter().zip(row).filter_map(|(t, c)| c.map(|v| (t.clone(), v))).collect(),
        })
        .collect()
}
