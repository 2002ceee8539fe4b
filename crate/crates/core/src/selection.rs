//! Proxy-task selection, weighted prediction, and ranking validation.
//!
//! Candidate tasks that pass both thresholds get an importance score
//! `S = C * f(R)` with `f(x) = 1 / (1 + exp(-k x))`, and weights
//! `W = S / sum(S)` over the retained tasks. A checkpoint's predicted
//! target score is the `W`-weighted mean of its proxy-task scores.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::correlation::{relevance_ranking, CorrelationMetric, RelevanceRanking};
use crate::data::{CheckpointScores, ModelId, ScoreMatrix, TaskId};
use crate::error::{Error, Result};
use crate::normalize::normalize_pipeline;
use crate::robustness::RobustnessReport;
use crate::scalar::Scalar;
use crate::stats::standardizer;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig<T> {
    /// Relevance threshold; must be non-negative.
    pub eps_c: T,
    /// Robustness threshold.
    pub eps_r: T,
    /// Sigmoid steepness.
    pub sigmoid_k: T,
    /// Apply the sigmoid to `ln R` instead of `R`.
    #[serde(default)]
    pub log_robustness: bool,
}

impl<T: Scalar> Default for SelectionConfig<T> {
    fn default() -> Self {
        SelectionConfig { eps_c: T::zero(), eps_r: T::one(), sigmoid_k: T::one(), log_robustness: false }
    }
}

impl<T: Scalar> SelectionConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_c >= T::zero() && self.eps_c <= T::one()) {
            return Err(Error::InvalidConfig(format!("eps_c must be in [0, 1], got {}", self.eps_c)));
        }
        if !(self.eps_r >= T::zero()) || !self.eps_r.is_finite() {
            return Err(Error::InvalidConfig(format!("eps_r must be finite and >= 0, got {}", self.eps_r)));
        }
        if !(self.sigmoid_k > T::zero()) || !self.sigmoid_k.is_finite() {
            return Err(Error::InvalidConfig(format!("sigmoid_k must be finite and > 0, got {}", self.sigmoid_k)));
        }
        Ok(())
    }

    /// `f(R)`; an infinite `R` maps to 1.
    pub fn transform(&self, robustness: T) -> T {
        let x = if self.log_robustness { robustness.ln() } else { robustness };
        T::one() / (T::one() + (-self.sigmoid_k * x).exp())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxyEntry<T> {
    pub task: TaskId,
    /// `C`
    pub relevance: T,
    /// `R`; `None` when the robustness entry was flagged infinite.
    pub robustness: Option<T>,
    /// `f(R)`
    pub transformed: T,
    /// `S = C * f(R)`
    pub score: T,
    /// `W`
    pub weight: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub task: TaskId,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxySet<T> {
    pub baseline: Option<TaskId>,
    pub metric: Option<CorrelationMetric>,
    pub config: SelectionConfig<T>,
    /// Retained tasks by weight descending.
    pub entries: Vec<ProxyEntry<T>>,
    pub rejected: Vec<Rejection>,
    /// Ranked tasks without a robustness entry (skipped).
    pub missing_robustness: Vec<TaskId>,
}

impl<T: Scalar> ProxySet<T> {
    pub fn weight_of(&self, task: &str) -> Option<T> {
        self.entries.iter().find(|e| e.task.as_str() == task).map(|e| e.weight)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("proxy set serializes")
    }
}

/// A candidate task's relevance and robustness, input to [`select_from_scores`].
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate<T> {
    pub task: TaskId,
    pub relevance: T,
    /// May be `+inf` for a flagged noise-floor task; NaN marks an undefined ratio.
    pub robustness: T,
}

impl<T: Scalar> Candidate<T> {
    pub fn new(task: &str, relevance: T, robustness: T) -> Result<Self> {
        Ok(Candidate { task: TaskId::new(task)?, relevance, robustness })
    }
}

/// Thresholds, scores, and normalizes candidate tasks.
pub fn select_from_scores<T: Scalar>(candidates: &[Candidate<T>], config: &SelectionConfig<T>) -> Result<ProxySet<T>> {
    config.validate()?;
    let mut seen = HashSet::new();
    let mut retained = Vec::new();
    let mut rejected = Vec::new();
    for c in candidates {
        if !seen.insert(&c.task) {
            return Err(Error::DuplicateLabel { kind: "task", label: c.task.to_string() });
        }
        let reject = |reason: String| Rejection { task: c.task.clone(), reason };
        if c.robustness.is_nan() {
            rejected.push(reject("robustness undefined".into()));
        } else if !(c.relevance > config.eps_c) {
            rejected.push(reject(format!("relevance {} <= eps_c {}", c.relevance, config.eps_c)));
        } else if !(c.robustness > config.eps_r) {
            rejected.push(reject(format!("robustness {} <= eps_r {}", c.robustness, config.eps_r)));
        } else {
            let transformed = config.transform(c.robustness);
            retained.push(ProxyEntry {
                task: c.task.clone(),
                relevance: c.relevance,
                robustness: c.robustness.is_finite().then_some(c.robustness),
                transformed,
                score: c.relevance * transformed,
                weight: T::zero(),
            });
        }
    }
    if retained.is_empty() {
        return Err(Error::EmptySelection(format!(
            "{} candidates all rejected; consider lowering eps_c ({}) or eps_r ({})",
            candidates.len(),
            config.eps_c,
            config.eps_r
        )));
    }
    let total: T = retained.iter().map(|e| e.score).sum();
    for e in retained.iter_mut() {
        e.weight = e.score / total;
    }
    retained.sort_by(|a, b| {
        b.weight.partial_cmp(&a.weight).unwrap_or(std::cmp::Ordering::Equal).then_with(|| a.task.cmp(&b.task))
    });
    Ok(ProxySet {
        baseline: None,
        metric: None,
        config: config.clone(),
        entries: retained,
        rejected,
        missing_robustness: Vec::new(),
    })
}

/// Joins a relevance ranking with a robustness report and selects proxies.
/// Ranked tasks lacking a robustness entry are skipped and listed.
pub fn select_proxies<T: Scalar>(
    relevance: &RelevanceRanking<T>,
    robustness: &RobustnessReport<T>,
    config: &SelectionConfig<T>,
) -> Result<ProxySet<T>> {
    let mut candidates = Vec::new();
    let mut missing = Vec::new();
    for e in &relevance.entries {
        match robustness.get(e.task.as_str()) {
            Some(r) => candidates.push(Candidate {
                task: e.task.clone(),
                relevance: e.relevance,
                robustness: r.ratio_value(),
            }),
            None => missing.push(e.task.clone()),
        }
    }
    if candidates.is_empty() {
        return Err(Error::EmptySelection("no ranked task has a robustness entry".into()));
    }
    let mut set = select_from_scores(&candidates, config)?;
    set.baseline = Some(relevance.baseline.clone());
    set.metric = Some(relevance.metric);
    set.missing_robustness = missing;
    Ok(set)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// `sum W_i * score_i` over raw proxy scores.
    #[default]
    WeightedMean,
    /// Each proxy task standardized across the checkpoint batch first.
    NormalizedWeightedMean,
}

impl FromStr for Aggregation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "weighted_mean" | "raw" => Ok(Aggregation::WeightedMean),
            "normalized_weighted_mean" | "normalized" => Ok(Aggregation::NormalizedWeightedMean),
            other => Err(Error::InvalidConfig(format!("unknown aggregation {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contribution<T> {
    pub task: TaskId,
    pub weight: T,
    pub score: T,
    pub contribution: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction<T> {
    pub checkpoint: String,
    pub aggregation: Aggregation,
    pub predicted_score: T,
    pub contributions: Vec<Contribution<T>>,
}

fn proxy_scores<T: Scalar>(proxies: &ProxySet<T>, checkpoint: &CheckpointScores<T>) -> Result<Vec<T>> {
    proxies
        .entries
        .iter()
        .map(|e| {
            checkpoint.scores.get(&e.task).copied().ok_or_else(|| Error::MissingCell {
                model: checkpoint.checkpoint.name.clone(),
                task: e.task.to_string(),
            })
        })
        .collect()
}

fn weighted<T: Scalar>(proxies: &ProxySet<T>, name: &str, scores: &[T], aggregation: Aggregation) -> Prediction<T> {
    let contributions: Vec<_> = proxies
        .entries
        .iter()
        .zip(scores)
        .map(|(e, &score)| Contribution { task: e.task.clone(), weight: e.weight, score, contribution: e.weight * score })
        .collect();
    Prediction {
        checkpoint: name.to_string(),
        aggregation,
        predicted_score: contributions.iter().map(|c| c.contribution).sum(),
        contributions,
    }
}

/// Weighted mean of one checkpoint's raw proxy scores.
pub fn predict<T: Scalar>(proxies: &ProxySet<T>, checkpoint: &CheckpointScores<T>) -> Result<Prediction<T>> {
    let scores = proxy_scores(proxies, checkpoint)?;
    Ok(weighted(proxies, &checkpoint.checkpoint.name, &scores, Aggregation::WeightedMean))
}

/// Predicts a batch of checkpoints. The normalized aggregation needs at
/// least two checkpoints with distinct scores on every proxy task.
pub fn predict_all<T: Scalar>(
    proxies: &ProxySet<T>,
    checkpoints: &[CheckpointScores<T>],
    aggregation: Aggregation,
) -> Result<Vec<Prediction<T>>> {
    let rows = checkpoints.iter().map(|c| proxy_scores(proxies, c)).collect::<Result<Vec<_>>>()?;
    match aggregation {
        Aggregation::WeightedMean => Ok(checkpoints
            .iter()
            .zip(&rows)
            .map(|(c, s)| weighted(proxies, &c.checkpoint.name, s, aggregation))
            .collect()),
        Aggregation::NormalizedWeightedMean => {
            if checkpoints.is_empty() {
                return Ok(Vec::new());
            }
            let mut z = rows.clone();
            for (j, e) in proxies.entries.iter().enumerate() {
                let col: Vec<T> = rows.iter().map(|r| r[j]).collect();
                let (mu, sd) = standardizer(&col, || format!("checkpoint scores of task {}", e.task))?;
                for r in z.iter_mut() {
                    r[j] = (r[j] - mu) / sd;
                }
            }
            Ok(checkpoints
                .iter()
                .zip(&z)
                .map(|(c, s)| weighted(proxies, &c.checkpoint.name, s, aggregation))
                .collect())
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    #[default]
    Higher,
    Lower,
}

impl FromStr for Orientation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "higher" | "higher-better" | "up" => Ok(Orientation::Higher),
            "lower" | "lower-better" | "down" => Ok(Orientation::Lower),
            other => Err(Error::InvalidConfig(format!("unknown orientation {other:?}"))),
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Orientation::Higher => "higher",
            Orientation::Lower => "lower",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelScore<T> {
    pub model: String,
    pub score: T,
}

/// Per-model scores plus which direction is better.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredRanking<T> {
    pub orientation: Orientation,
    pub scores: Vec<ModelScore<T>>,
}

impl<T: Scalar> ScoredRanking<T> {
    pub fn new<S: AsRef<str>>(orientation: Orientation, scores: &[(S, T)]) -> Self {
        ScoredRanking {
            orientation,
            scores: scores.iter().map(|(m, s)| ModelScore { model: m.as_ref().to_string(), score: *s }).collect(),
        }
    }

    pub fn from_predictions(predictions: &[Prediction<T>]) -> Self {
        ScoredRanking {
            orientation: Orientation::Higher,
            scores: predictions
                .iter()
                .map(|p| ModelScore { model: p.checkpoint.clone(), score: p.predicted_score })
                .collect(),
        }
    }

    /// Scores of one task column of a checkpoint table.
    pub fn from_checkpoints(checkpoints: &[CheckpointScores<T>], task: &str, orientation: Orientation) -> Result<Self> {
        let scores = checkpoints
            .iter()
            .map(|c| {
                c.scores
                    .get(task)
                    .map(|&score| ModelScore { model: c.checkpoint.name.clone(), score })
                    .ok_or_else(|| Error::MissingCell { model: c.checkpoint.name.clone(), task: task.into() })
            })
            .collect::<Result<_>>()?;
        Ok(ScoredRanking { orientation, scores })
    }

    /// `+1` if model `i` is better than `j`, `-1` if worse, 0 on a tie.
    fn better(&self, i: usize, j: usize) -> i8 {
        let (a, b) = (self.scores[i].score, self.scores[j].score);
        let ord = match self.orientation {
            Orientation::Higher => a.partial_cmp(&b),
            Orientation::Lower => b.partial_cmp(&a),
        };
        match ord {
            Some(std::cmp::Ordering::Greater) => 1,
            Some(std::cmp::Ordering::Less) => -1,
            _ => 0,
        }
    }

    /// 1-based positions with 1 = best; ties share the average position.
    pub fn positions(&self) -> Vec<f64> {
        let n = self.scores.len();
        (0..n)
            .map(|i| {
                let better = (0..n).filter(|&j| self.better(j, i) > 0).count() as f64;
                let tied = (0..n).filter(|&j| j != i && self.better(j, i) == 0).count() as f64;
                1.0 + better + tied / 2.0
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankComparison {
    pub models: Vec<String>,
    pub positions_a: Vec<f64>,
    pub positions_b: Vec<f64>,
    pub orientation_a: Orientation,
    pub orientation_b: Orientation,
    /// Oppositely ordered pairs; pairs tied in either ranking count 0.5.
    pub discordant_pairs: f64,
    pub total_pairs: usize,
    /// The fully discordant pairs.
    pub reversed: Vec<[String; 2]>,
}

impl RankComparison {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("comparison serializes")
    }
}

/// Counts model pairs ordered oppositely by `a` and `b`.
pub fn count_discordant_pairs<T: Scalar>(a: &ScoredRanking<T>, b: &ScoredRanking<T>) -> Result<RankComparison> {
    if a.scores.len() < 2 {
        return Err(Error::InsufficientLength { needed: 2, got: a.scores.len() });
    }
    let mut b_index = HashMap::new();
    for (i, s) in b.scores.iter().enumerate() {
        if b_index.insert(s.model.as_str(), i).is_some() {
            return Err(Error::DuplicateLabel { kind: "model", label: s.model.clone() });
        }
    }
    let mut seen = HashSet::new();
    let mut mapping = Vec::with_capacity(a.scores.len());
    for s in &a.scores {
        if !seen.insert(s.model.as_str()) {
            return Err(Error::DuplicateLabel { kind: "model", label: s.model.clone() });
        }
        let j = *b_index
            .get(s.model.as_str())
            .ok_or_else(|| Error::Mismatch(format!("model {} missing from second ranking", s.model)))?;
        mapping.push(j);
    }
    if a.scores.len() != b.scores.len() {
        return Err(Error::Mismatch(format!(
            "rankings cover {} and {} models",
            a.scores.len(),
            b.scores.len()
        )));
    }

    let n = a.scores.len();
    let mut discordant = 0.0;
    let mut reversed = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let da = a.better(i, j);
            let db = b.better(mapping[i], mapping[j]);
            if da == 0 || db == 0 {
                discordant += 0.5;
            } else if da != db {
                discordant += 1.0;
                reversed.push([a.scores[i].model.clone(), a.scores[j].model.clone()]);
            }
        }
    }
    let pos_b = b.positions();
    Ok(RankComparison {
        models: a.scores.iter().map(|s| s.model.clone()).collect(),
        positions_a: a.positions(),
        positions_b: mapping.iter().map(|&j| pos_b[j]).collect(),
        orientation_a: a.orientation,
        orientation_b: b.orientation,
        discordant_pairs: discordant,
        total_pairs: n * (n - 1) / 2,
        reversed,
    })
}

/// Which model population drives proxy selection and which checkpoint
/// evaluations feed the prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Chat models for selection, chat checkpoints for prediction.
    Chat,
    /// Base models for selection, base checkpoints for prediction.
    Base,
    /// Chat models for selection, base checkpoints for prediction.
    BaseChat,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Chat, Strategy::Base, Strategy::BaseChat];
}

pub struct StrategyInputs<'a, T> {
    /// Reference models scored on the target task (chat models).
    pub target: &'a ScoreMatrix<T>,
    pub target_task: &'a str,
    pub candidates_chat: &'a ScoreMatrix<T>,
    pub candidates_base: &'a ScoreMatrix<T>,
    /// Base-model name → chat-model name; unlisted rows join on their own name.
    pub pairs: &'a BTreeMap<String, String>,
    pub robustness: &'a RobustnessReport<T>,
    pub metric: CorrelationMetric,
    pub selection: &'a SelectionConfig<T>,
    pub checkpoints_chat: &'a [CheckpointScores<T>],
    pub checkpoints_base: &'a [CheckpointScores<T>],
    pub ground_truth: Option<&'a ScoredRanking<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyOutcome<T> {
    pub strategy: Strategy,
    pub relevance: RelevanceRanking<T>,
    pub proxies: ProxySet<T>,
    pub predictions: Vec<Prediction<T>>,
    pub comparison: Option<RankComparison>,
}

/// Appends the target column to a candidate matrix, joining rows through
/// the base→chat pairing.
pub fn join_target<T: Scalar>(
    target: &ScoreMatrix<T>,
    target_task: &str,
    candidates: &ScoreMatrix<T>,
    pairs: &BTreeMap<String, String>,
) -> Result<ScoreMatrix<T>> {
    if candidates.task_index(target_task).is_some() {
        return Err(Error::DuplicateLabel { kind: "task", label: target_task.into() });
    }
    let tj = target
        .task_index(target_task)
        .ok_or_else(|| Error::UnknownLabel { kind: "task", label: target_task.into() })?;
    let mut tasks = vec![TaskId::new(target_task)?];
    tasks.extend(candidates.tasks().iter().cloned());
    let mut rows = Vec::with_capacity(candidates.n_models());
    for (i, model) in candidates.models().iter().enumerate() {
        let reference = pairs.get(&model.name).unwrap_or(&model.name);
        let ti = target.model_index(reference).ok_or_else(|| {
            Error::Mismatch(format!("no target score for {} (joined as {reference})", model.name))
        })?;
        let mut row = vec![target.get(ti, tj)];
        row.extend(candidates.rows()[i].iter().copied());
        rows.push(row);
    }
    let models: Vec<ModelId> = candidates.models().to_vec();
    ScoreMatrix::new(models, tasks, rows)
}

pub fn strategy_run<T: Scalar>(inputs: &StrategyInputs<'_, T>, strategy: Strategy) -> Result<StrategyOutcome<T>> {
    let (selection_matrix, checkpoints) = match strategy {
        Strategy::Chat => (inputs.candidates_chat, inputs.checkpoints_chat),
        Strategy::Base => (inputs.candidates_base, inputs.checkpoints_base),
        Strategy::BaseChat => (inputs.candidates_chat, inputs.checkpoints_base),
    };
    let joined = join_target(inputs.target, inputs.target_task, selection_matrix, inputs.pairs)?;
    let p = normalize_pipeline(&joined)?;
    let relevance = relevance_ranking::<T, &str>(&p, inputs.target_task, inputs.metric, None)?;
    let proxies = select_proxies(&relevance, inputs.robustness, inputs.selection)?;
    let predictions = predict_all(&proxies, checkpoints, Aggregation::WeightedMean)?;
    let comparison = match inputs.ground_truth {
        Some(truth) if !predictions.is_empty() => {
            Some(count_discordant_pairs(&ScoredRanking::from_predictions(&predictions), truth)?)
        }
        _ => None,
    };
    Ok(StrategyOutcome { strategy, relevance, proxies, predictions, comparison })
}
