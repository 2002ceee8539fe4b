//! Sampling consistency evaluation of correlation metrics.
//!
//! For each metric, a baseline relevance ranking over all models is compared
//! with rankings recomputed on `k_rounds` random model subsets of size
//! `n_sample`:
//!
//! * baseline index `s`: mean top-`t` overlap of each sampled ranking with
//!   the baseline ranking;
//! * sampling index `r`: mean top-`t` overlap over all unordered pairs of
//!   sampled rankings.
//!
//! By default every metric sees the same sequence of model subsets, so the
//! comparison between metrics is paired. Setting `resample_per_metric` draws
//! an independent sequence for each metric instead.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlation::{overlap_ratio, relevance_for_rows, CorrelationMetric, RelevanceRanking};
use crate::data::{ScoreMatrix, TaskId};
use crate::error::{Error, ErrorClass, Result};
use crate::normalize::{normalize_pipeline, NormalizedMatrix};
use crate::rng::{derive_seed, sample_indices, stream_rng};
use crate::scalar::Scalar;

fn default_metrics() -> Vec<CorrelationMetric> {
    CorrelationMetric::ALL.to_vec()
}

fn default_retries() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyConfig {
    /// Models drawn per round.
    pub n_sample: usize,
    /// Number of sampling rounds.
    pub k_rounds: usize,
    /// Size of the top-task window compared between rankings.
    pub top_t: usize,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<CorrelationMetric>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub resample_per_metric: bool,
    /// Redraws allowed per round when a subset makes a kernel degenerate.
    #[serde(default = "default_retries")]
    pub max_retries: usize,
}

impl ConsistencyConfig {
    pub fn new(n_sample: usize, k_rounds: usize, top_t: usize) -> Self {
        ConsistencyConfig {
            n_sample,
            k_rounds,
            top_t,
            metrics: default_metrics(),
            seed: 0,
            resample_per_metric: false,
            max_retries: default_retries(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_metrics(mut self, metrics: &[CorrelationMetric]) -> Self {
        self.metrics = metrics.to_vec();
        self
    }

    pub fn validate(&self, n_models: usize, n_tasks: usize) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.k_rounds < 2 {
            return fail(format!("k_rounds must be at least 2, got {}", self.k_rounds));
        }
        if self.n_sample < 3 {
            return fail(format!("n_sample must be at least 3, got {}", self.n_sample));
        }
        if self.n_sample > n_models {
            return fail(format!("n_sample {} exceeds the {} available models", self.n_sample, n_models));
        }
        if self.top_t < 1 || self.top_t + 1 > n_tasks {
            return fail(format!("top_t must be in 1..={}, got {}", n_tasks.saturating_sub(1), self.top_t));
        }
        if self.metrics.is_empty() {
            return fail("no correlation metrics requested".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// One subset sequence shared by all metrics.
    Shared,
    /// An independent subset sequence per metric.
    PerMetric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricConsistency {
    pub metric: CorrelationMetric,
    /// `s`: mean overlap with the all-model baseline ranking.
    pub baseline_index: f64,
    /// `r`: mean pairwise overlap among sampled rankings.
    pub sampling_index: f64,
    /// Model names of each round's subset, in matrix order.
    pub subsets: Vec<Vec<String>>,
    /// Per-round overlap with the baseline ranking.
    pub overlaps: Vec<f64>,
    /// Pairwise overlaps, ordered (1,2), (1,3), ..., (k-1,k).
    pub pairwise: Vec<f64>,
    /// Degenerate subsets that were redrawn.
    pub redraws: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub baseline: TaskId,
    pub n_sample: usize,
    pub k_rounds: usize,
    pub top_t: usize,
    pub seed: u64,
    pub sampling: SamplingMode,
    /// One entry per metric, in canonical metric order.
    pub metrics: Vec<MetricConsistency>,
    /// Metric dominating all others, if any.
    pub selected: Option<CorrelationMetric>,
    /// Advisory ordering by `s + r` descending; never used in place of `selected`.
    pub fallback_order: Vec<CorrelationMetric>,
}

impl ConsistencyReport {
    pub fn indices(&self) -> Vec<(CorrelationMetric, f64, f64)> {
        self.metrics.iter().map(|m| (m.metric, m.baseline_index, m.sampling_index)).collect()
    }

    pub fn get(&self, metric: CorrelationMetric) -> Option<&MetricConsistency> {
        self.metrics.iter().find(|m| m.metric == metric)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// The metric `i` with `s_i >= s_j` and `r_i > r_j` for every other `j`.
pub fn select_metric_from_indices(indices: &[(CorrelationMetric, f64, f64)]) -> Option<CorrelationMetric> {
    indices
        .iter()
        .find(|(mi, si, ri)| {
            indices.iter().filter(|(mj, _, _)| mj != mi).all(|(_, sj, rj)| si >= sj && ri > rj)
        })
        .map(|(m, _, _)| *m)
}

/// Metrics ordered by `s + r` descending, ties by name.
pub fn fallback_order(indices: &[(CorrelationMetric, f64, f64)]) -> Vec<CorrelationMetric> {
    let mut v: Vec<_> = indices.to_vec();
    v.sort_by(|a, b| {
        (b.1 + b.2)
            .partial_cmp(&(a.1 + a.2))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.name().cmp(b.0.name()))
    });
    v.into_iter().map(|(m, _, _)| m).collect()
}

pub fn select_metric(report: &ConsistencyReport) -> Option<CorrelationMetric> {
    select_metric_from_indices(&report.indices())
}

/// Normalizes `matrix` and runs the evaluation on the result.
pub fn sampling_consistency_eval<T: Scalar>(
    matrix: &ScoreMatrix<T>,
    baseline: &str,
    config: &ConsistencyConfig,
) -> Result<ConsistencyReport> {
    consistency_on_normalized(&normalize_pipeline(matrix)?, baseline, config)
}

struct Round<T> {
    rows: Vec<usize>,
    rankings: Vec<RelevanceRanking<T>>,
    redraws: usize,
}

/// Draws one round's subset and ranks it under every metric in `metrics`,
/// redrawing degenerate subsets up to the retry budget.
fn run_round<T: Scalar>(
    p: &NormalizedMatrix<T>,
    baseline: usize,
    metrics: &[CorrelationMetric],
    config: &ConsistencyConfig,
    stream: u64,
    round: usize,
) -> Result<Round<T>> {
    let round_seed = derive_seed(config.seed, stream, round as u64);
    let mut last = None;
    for attempt in 0..=config.max_retries {
        let mut rng = stream_rng(round_seed, 0, attempt as u64);
        let rows = sample_indices(&mut rng, p.n_models(), config.n_sample);
        let ranked: Result<Vec<_>> =
            metrics.iter().map(|&m| relevance_for_rows(p, baseline, m, &rows)).collect();
        match ranked {
            Ok(rankings) => return Ok(Round { rows, rankings, redraws: attempt }),
            Err(e) if e.class() == ErrorClass::Computation => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(Error::RetriesExhausted {
        round: round + 1,
        attempts: config.max_retries + 1,
        last: Box::new(last.expect("at least one attempt")),
    })
}

fn run_rounds<T: Scalar>(
    p: &NormalizedMatrix<T>,
    baseline: usize,
    metrics: &[CorrelationMetric],
    config: &ConsistencyConfig,
    stream: u64,
) -> Result<Vec<Round<T>>> {
    let results: Vec<Result<Round<T>>> = (0..config.k_rounds)
        .into_par_iter()
        .map(|j| run_round(p, baseline, metrics, config, stream, j))
        .collect();
    results.into_iter().collect()
}

fn summarize<T: Scalar>(
    p: &NormalizedMatrix<T>,
    metric: CorrelationMetric,
    base: &RelevanceRanking<T>,
    rounds: &[(&[usize], &RelevanceRanking<T>, usize)],
    t: usize,
) -> Result<MetricConsistency> {
    let k = rounds.len();
    let overlaps = rounds.iter().map(|(_, r, _)| overlap_ratio(base, r, t)).collect::<Result<Vec<_>>>()?;
    let mut pairwise = Vec::with_capacity(k * (k - 1) / 2);
    for a in 0..k {
        for b in a + 1..k {
            pairwise.push(overlap_ratio(rounds[a].1, rounds[b].1, t)?);
        }
    }
    let baseline_index = overlaps.iter().sum::<f64>() / k as f64;
    let sampling_index = 2.0 / (k * (k - 1)) as f64 * pairwise.iter().sum::<f64>();
    Ok(MetricConsistency {
        metric,
        baseline_index,
        sampling_index,
        subsets: rounds
            .iter()
            .map(|(rows, _, _)| rows.iter().map(|&i| p.models[i].name.clone()).collect())
            .collect(),
        overlaps,
        pairwise,
        redraws: rounds.iter().map(|r| r.2).sum(),
    })
}

/// Runs the evaluation on an already normalized matrix.
pub fn consistency_on_normalized<T: Scalar>(
    p: &NormalizedMatrix<T>,
    baseline: &str,
    config: &ConsistencyConfig,
) -> Result<ConsistencyReport> {
    config.validate(p.n_models(), p.n_tasks())?;
    let b = p
        .task_index(baseline)
        .ok_or_else(|| Error::UnknownLabel { kind: "task", label: baseline.into() })?;
    let mut metrics = config.metrics.clone();
    metrics.sort();
    metrics.dedup();

    let all_rows: Vec<usize> = (0..p.n_models()).collect();
    let baselines = metrics
        .iter()
        .map(|&m| relevance_for_rows(p, b, m, &all_rows))
        .collect::<Result<Vec<_>>>()?;

    let mut results = Vec::with_capacity(metrics.len());
    if config.resample_per_metric {
        for (mi, &metric) in metrics.iter().enumerate() {
            // Stream 0 is the shared sequence; per-metric streams follow the canonical metric order.
            let stream = 1 + CorrelationMetric::ALL.iter().position(|&m| m == metric).unwrap_or(mi) as u64;
            let rounds = run_rounds(p, b, &[metric], config, stream)?;
            let view: Vec<_> = rounds.iter().map(|r| (r.rows.as_slice(), &r.rankings[0], r.redraws)).collect();
            results.push(summarize(p, metric, &baselines[mi], &view, config.top_t)?);
        }
    } else {
        let rounds = run_rounds(p, b, &metrics, config, 0)?;
        for (mi, &metric) in metrics.iter().enumerate() {
            let view: Vec<_> = rounds.iter().map(|r| (r.rows.as_slice(), &r.rankings[mi], r.redraws)).collect();
            results.push(summarize(p, metric, &baselines[mi], &view, config.top_t)?);
        }
    }

    let indices: Vec<_> = results.iter().map(|m| (m.metric, m.baseline_index, m.sampling_index)).collect();
    Ok(ConsistencyReport {
        baseline: p.tasks[b].clone(),
        n_sample: config.n_sample,
        k_rounds: config.k_rounds,
        top_t: config.top_t,
        seed: config.seed,
        sampling: if config.resample_per_metric { SamplingMode::PerMetric } else { SamplingMode::Shared },
        selected: select_metric_from_indices(&indices),
        fallback_order: fallback_order(&indices),
        metrics: results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use CorrelationMetric::*;

    #[test]
    fn clear_dominance() {
        assert_eq!(select_metric_from_indices(&[(Pearson, 0.6, 0.7), (Kendall, 0.5, 0.6)]), Some(Pearson));
    }

    #[test]
    fn equal_r_is_not_dominance() {
        assert_eq!(select_metric_from_indices(&[(Pearson, 0.6, 0.7), (Kendall, 0.6, 0.7)]), None);
    }

    #[test]
    fn equal_s_with_strict_r_dominates() {
        assert_eq!(select_metric_from_indices(&[(Pearson, 0.6, 0.7), (Kendall, 0.6, 0.71)]), Some(Kendall));
    }

    #[test]
    fn published_n8_k25_row_selects_kendall() {
        let rows = [(Pearson, 0.544, 0.418), (Spearman, 0.516, 0.392), (Kendall, 0.548, 0.431)];
        assert_eq!(select_metric_from_indices(&rows), Some(Kendall));
    }

    #[test]
    fn published_n10_k25_row_has_no_dominant_metric() {
        // Kendall leads on s, Pearson on r.
        let rows = [(Pearson, 0.500, 0.476), (Spearman, 0.568, 0.472), (Kendall, 0.580, 0.475)];
        assert_eq!(select_metric_from_indices(&rows), None);
        assert_eq!(fallback_order(&rows), vec![Kendall, Spearman, Pearson]);
    }

    #[test]
    fn fallback_ties_by_name() {
        let rows = [(Spearman, 0.5, 0.5), (Kendall, 0.5, 0.5)];
        assert_eq!(fallback_order(&rows), vec![Kendall, Spearman]);
    }

    #[test]
    fn config_validation() {
        let c = ConsistencyConfig::new(3, 2, 1);
        assert!(c.validate(5, 4).is_ok());
        assert!(ConsistencyConfig::new(6, 2, 1).validate(5, 4).is_err());
        assert!(ConsistencyConfig::new(3, 1, 1).validate(5, 4).is_err());
        assert!(ConsistencyConfig::new(2, 2, 1).validate(5, 4).is_err());
        assert!(ConsistencyConfig::new(3, 2, 4).validate(5, 4).is_err());
        assert!(ConsistencyConfig::new(3, 2, 0).validate(5, 4).is_err());
        assert!(ConsistencyConfig::new(3, 2, 1).with_metrics(&[]).validate(5, 4).is_err());
    }

    #[test]
    fn config_json_defaults() {
        let c: ConsistencyConfig = serde_json::from_str(r#"{"n_sample":6,"k_rounds":25,"top_t":10}"#).unwrap();
        assert_eq!(c.metrics, CorrelationMetric::ALL.to_vec());
        assert_eq!(c.max_retries, 10);
        assert!(!c.resample_per_metric);
    }
}
