//! Variance-ratio robustness of candidate tasks.
//!
//! Each task is scored by two small-model ensembles: one trained on
//! different data (data variability) and one trained on identical data with
//! different seeds (random noise). The robustness score is
//! `R = var_data / var_noise`; a high ratio means the task responds to the
//! training data rather than to seed noise.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{Group, ScoreMatrix, TaskId};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use crate::stats::sample_variance;

/// Noise variances below this (score units squared) are treated as zero.
pub const EPSILON_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupScores<T> {
    pub group: Group,
    pub task: TaskId,
    pub scores: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Degeneracy {
    /// Noise variance under the floor while data variance is not: `R = +inf`.
    NoiseFloor,
    /// Both variances under the floor: `R` undefined.
    Constant,
}

impl Degeneracy {
    pub fn name(self) -> &'static str {
        match self {
            Degeneracy::NoiseFloor => "noise_floor",
            Degeneracy::Constant => "constant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRobustness<T> {
    pub task: TaskId,
    pub variance_data: T,
    pub variance_noise: T,
    /// `None` exactly when `degenerate` is set.
    pub ratio: Option<T>,
    pub degenerate: Option<Degeneracy>,
    pub n_data: usize,
    pub n_noise: usize,
}

impl<T: Scalar> TaskRobustness<T> {
    /// Ratio with the degenerate cases mapped to `+inf` (noise floor) and NaN (constant).
    pub fn ratio_value(&self) -> T {
        match (self.ratio, self.degenerate) {
            (Some(r), _) => r,
            (None, Some(Degeneracy::NoiseFloor)) => T::infinity(),
            _ => T::nan(),
        }
    }

    fn sort_class(&self) -> u8 {
        match self.degenerate {
            Some(Degeneracy::NoiseFloor) => 0,
            None => 1,
            Some(Degeneracy::Constant) => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport<T> {
    pub epsilon_floor: f64,
    /// Sorted by ratio descending: flagged-infinite first, undefined last.
    pub entries: Vec<TaskRobustness<T>>,
    pub warnings: Vec<String>,
}

impl<T: Scalar> RobustnessReport<T> {
    pub fn get(&self, task: &str) -> Option<&TaskRobustness<T>> {
        self.entries.iter().find(|e| e.task.as_str() == task)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn index_group<T: Scalar>(
    scores: &[GroupScores<T>],
    expected: Group,
) -> Result<BTreeMap<&TaskId, &GroupScores<T>>> {
    let mut out = BTreeMap::new();
    for g in scores {
        if g.group != expected {
            return Err(Error::InvalidConfig(format!(
                "task {} listed under {expected} but labeled {}",
                g.task, g.group
            )));
        }
        if out.insert(&g.task, g).is_some() {
            return Err(Error::DuplicateLabel { kind: "task", label: g.task.to_string() });
        }
    }
    Ok(out)
}

/// Per-task variance ratio between the data-variability and random-noise
/// groups. Groups may differ in size; each must have at least two models.
pub fn robustness_scores<T: Scalar>(
    data: &[GroupScores<T>],
    noise: &[GroupScores<T>],
) -> Result<RobustnessReport<T>> {
    let d = index_group(data, Group::DataVariability)?;
    let r = index_group(noise, Group::RandomNoise)?;
    for task in d.keys() {
        if !r.contains_key(task) {
            return Err(Error::Mismatch(format!("task {task} has no random_noise scores")));
        }
    }
    for task in r.keys() {
        if !d.contains_key(task) {
            return Err(Error::Mismatch(format!("task {task} has no data_variability scores")));
        }
    }
    if d.is_empty() {
        return Err(Error::EmptyMatrix("no tasks to score".into()));
    }

    let floor = T::lit(EPSILON_FLOOR);
    let mut entries = Vec::with_capacity(d.len());
    let mut warnings = Vec::new();
    for (task, dg) in &d {
        let ng = r[task];
        let variance_data = sample_variance(&dg.scores).map_err(|e| Error::for_task(task.as_str(), e))?;
        let variance_noise = sample_variance(&ng.scores).map_err(|e| Error::for_task(task.as_str(), e))?;
        let (ratio, degenerate) = if variance_noise >= floor {
            (Some(variance_data / variance_noise), None)
        } else if variance_data >= floor {
            warnings.push(format!("task {task}: random-noise variance below floor, ratio treated as infinite"));
            (None, Some(Degeneracy::NoiseFloor))
        } else {
            warnings.push(format!("task {task}: both variances below floor, ratio undefined"));
            (None, Some(Degeneracy::Constant))
        };
        entries.push(TaskRobustness {
            task: (*task).clone(),
            variance_data,
            variance_noise,
            ratio,
            degenerate,
            n_data: dg.scores.len(),
            n_noise: ng.scores.len(),
        });
    }
    entries.sort_by(|a, b| {
        a.sort_class()
            .cmp(&b.sort_class())
            .then_with(|| match (a.ratio, b.ratio) {
                (Some(x), Some(y)) => y.partial_cmp(&x).unwrap_or(Ordering::Equal),
                _ => Ordering::Equal,
            })
            .then_with(|| a.task.cmp(&b.task))
    });
    Ok(RobustnessReport { epsilon_floor: EPSILON_FLOOR, entries, warnings })
}

/// Per-task scores of all rows tagged with `group`.
pub fn group_scores_from_matrix<T: Scalar>(matrix: &ScoreMatrix<T>, group: Group) -> Result<Vec<GroupScores<T>>> {
    let rows: Vec<usize> = (0..matrix.n_models()).filter(|&i| matrix.models()[i].group == Some(group)).collect();
    matrix
        .tasks()
        .iter()
        .enumerate()
        .map(|(j, task)| {
            let scores = rows
                .iter()
                .map(|&i| {
                    matrix.get(i, j).ok_or_else(|| Error::MissingCell {
                        model: matrix.models()[i].name.clone(),
                        task: task.to_string(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(GroupScores { group, task: task.clone(), scores })
        })
        .collect()
}

/// Robustness of every task of a matrix whose rows carry group metadata.
/// Rows without a group are ignored.
pub fn robustness_from_matrix<T: Scalar>(matrix: &ScoreMatrix<T>) -> Result<RobustnessReport<T>> {
    let data = group_scores_from_matrix(matrix, Group::DataVariability)?;
    let noise = group_scores_from_matrix(matrix, Group::RandomNoise)?;
    robustness_scores(&data, &noise)
}
