//! Two-step standardization: first every task column across models, then
//! every model row across tasks. The result is the matrix all relevance
//! computations run on.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::{ModelId, ScoreMatrix, TaskId};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::stats::standardizer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Raw,
    FeatureNormalized,
    FullyNormalized,
}

impl Stage {
    fn name(self) -> &'static str {
        match self {
            Stage::Raw => "raw",
            Stage::FeatureNormalized => "feature_normalized",
            Stage::FullyNormalized => "fully_normalized",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

/// Mean and sample standard deviation used to standardize one axis entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisStats<T> {
    pub label: String,
    pub mean: T,
    pub std: T,
}

/// Dense matrix at some normalization stage, with the statistics applied so far.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedMatrix<T> {
    pub stage: Stage,
    pub tasks: Vec<TaskId>,
    pub models: Vec<ModelId>,
    pub values: Vec<Vec<T>>,
    /// Per-task statistics of the feature step (empty at `raw`).
    pub task_stats: Vec<AxisStats<T>>,
    /// Per-model statistics of the sample step (empty before it runs).
    pub model_stats: Vec<AxisStats<T>>,
}

impl<T: Scalar> NormalizedMatrix<T> {
    /// Wraps a complete raw matrix without transforming it.
    pub fn raw(matrix: &ScoreMatrix<T>) -> Result<Self> {
        Ok(NormalizedMatrix {
            stage: Stage::Raw,
            tasks: matrix.tasks().to_vec(),
            models: matrix.models().to_vec(),
            values: matrix.dense()?,
            task_stats: Vec::new(),
            model_stats: Vec::new(),
        })
    }

    pub fn n_models(&self) -> usize {
        self.models.len()
    }

    pub fn n_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn task_index(&self, name: &str) -> Option<usize> {
        self.tasks.iter().position(|t| t.as_str() == name)
    }

    pub fn model_index(&self, name: &str) -> Option<usize> {
        self.models.iter().position(|m| m.name == name)
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        self.values.iter().map(|row| row[j]).collect()
    }

    /// Column `j` restricted to the given row indices, in that order.
    pub fn column_at(&self, j: usize, rows: &[usize]) -> Vec<T> {
        rows.iter().map(|&i| self.values[i][j]).collect()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("normalized matrix serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(s)?;
        if m.values.len() != m.models.len() || m.values.iter().any(|r| r.len() != m.tasks.len()) {
            return Err(Error::Parse { line: 0, message: "normalized matrix shape mismatch".into() });
        }
        if m.values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Parse { line: 0, message: "non-finite normalized value".into() });
        }
        Ok(m)
    }
}

/// Standardizes each task column across models with the sample (n-1)
/// standard deviation.
pub fn feature_normalize<T: Scalar>(matrix: &ScoreMatrix<T>) -> Result<NormalizedMatrix<T>> {
    let mut out = NormalizedMatrix::raw(matrix)?;
    let mut stats = Vec::with_capacity(out.n_tasks());
    for j in 0..out.n_tasks() {
        let col = out.column(j);
        let label = out.tasks[j].to_string();
        let (mean, std) = standardizer(&col, || format!("task {label}"))?;
        for row in out.values.iter_mut() {
            row[j] = (row[j] - mean) / std;
        }
        stats.push(AxisStats { label, mean, std });
    }
    out.task_stats = stats;
    out.stage = Stage::FeatureNormalized;
    Ok(out)
}

/// Standardizes each model row across tasks. Row statistics are computed
/// over the feature-normalized values.
pub fn sample_normalize<T: Scalar>(mut matrix: NormalizedMatrix<T>) -> Result<NormalizedMatrix<T>> {
    if matrix.stage != Stage::FeatureNormalized {
        return Err(Error::InvalidStage { expected: "feature_normalized", found: matrix.stage.name() });
    }
    let mut stats = Vec::with_capacity(matrix.n_models());
    for (model, row) in matrix.models.iter().zip(matrix.values.iter_mut()) {
        let (mean, std) = standardizer(row, || format!("model {}", model.name))?;
        for v in row.iter_mut() {
            *v = (*v - mean) / std;
        }
        stats.push(AxisStats { label: model.name.clone(), mean, std });
    }
    matrix.model_stats = stats;
    matrix.stage = Stage::FullyNormalized;
    Ok(matrix)
}

/// Feature step followed by sample step. The order is fixed.
pub fn normalize_pipeline<T: Scalar>(matrix: &ScoreMatrix<T>) -> Result<NormalizedMatrix<T>> {
    sample_normalize(feature_normalize(matrix)?)
}
