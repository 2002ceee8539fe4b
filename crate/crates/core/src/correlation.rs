//! Correlation kernels and task relevance rankings.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::TaskId;
use crate::error::{Error, Result};
use crate::normalize::NormalizedMatrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationMetric {
    Pearson,
    Spearman,
    /// Tie-corrected tau-b.
    Kendall,
}

impl CorrelationMetric {
    pub const ALL: [CorrelationMetric; 3] =
        [CorrelationMetric::Pearson, CorrelationMetric::Spearman, CorrelationMetric::Kendall];

    pub fn compute<T: Scalar>(self, x: &[T], y: &[T]) -> Result<T> {
        match self {
            CorrelationMetric::Pearson => pearson(x, y),
            CorrelationMetric::Spearman => spearman(x, y),
            CorrelationMetric::Kendall => kendall(x, y),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CorrelationMetric::Pearson => "pearson",
            CorrelationMetric::Spearman => "spearman",
            CorrelationMetric::Kendall => "kendall",
        }
    }

    /// Parses a comma-separated metric list such as `pearson,kendall`.
    pub fn parse_list(s: &str) -> Result<Vec<CorrelationMetric>> {
        s.split(',').filter(|p| !p.trim().is_empty()).map(|p| p.trim().parse()).collect()
    }
}

impl fmt::Display for CorrelationMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for CorrelationMetric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pearson" | "p" => Ok(CorrelationMetric::Pearson),
            "spearman" | "sr" => Ok(CorrelationMetric::Spearman),
            "kendall" | "kr" => Ok(CorrelationMetric::Kendall),
            other => Err(Error::InvalidConfig(format!("unknown correlation metric {other:?}"))),
        }
    }
}

fn check_pair<T>(x: &[T], y: &[T]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.len() < 3 {
        return Err(Error::InsufficientLength { needed: 3, got: x.len() });
    }
    Ok(())
}

fn clamp_unit<T: Scalar>(v: T) -> T {
    v.max(-T::one()).min(T::one())
}

/// Pearson product-moment correlation (two-pass).
pub fn pearson<T: Scalar>(x: &[T], y: &[T]) -> Result<T> {
    check_pair(x, y)?;
    let n = T::count(x.len());
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy = sxy + dx * dy;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
    }
    if sxx <= T::zero() || syy <= T::zero() {
        return Err(Error::ZeroVariance("correlation input".into()));
    }
    Ok(clamp_unit(sxy / (sxx * syy).sqrt()))
}

fn total_cmp<T: Scalar>(a: &T, b: &T) -> Ordering {
    a.partial_cmp(b).unwrap_or(Ordering::Equal)
}

/// 1-based ranks; tied values share the average of their positions.
pub fn average_ranks<T: Scalar>(values: &[T]) -> Vec<T> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| total_cmp(&values[a], &values[b]));
    let mut ranks = vec![T::zero(); values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let avg = T::count(start + 1 + end) / T::lit(2.0);
        for &idx in &order[start..end] {
            ranks[idx] = avg;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation: Pearson over average ranks.
pub fn spearman<T: Scalar>(x: &[T], y: &[T]) -> Result<T> {
    check_pair(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Kendall tau-b in O(n log n) (Knight's merge-sort method).
///
/// `tau_b = (n0 - n1 - n2 + n3 - 2 * swaps) / sqrt((n0 - n1) * (n0 - n2))`
/// where `n1`, `n2` count pairs tied in x and in y, `n3` pairs tied in both,
/// and `swaps` the discordant pairs found while merge-sorting by y.
pub fn kendall<T: Scalar>(x: &[T], y: &[T]) -> Result<T> {
    check_pair(x, y)?;
    let n = x.len();
    let mut pairs: Vec<(T, T)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| total_cmp(&a.0, &b.0).then_with(|| total_cmp(&a.1, &b.1)));

    let tie_pairs = |run: u64| run * run.saturating_sub(1) / 2;
    let (mut n1, mut n3) = (0u64, 0u64);
    let (mut run_x, mut run_xy) = (1u64, 1u64);
    for w in pairs.windows(2) {
        if w[1].0 == w[0].0 {
            run_x += 1;
            if w[1].1 == w[0].1 {
                run_xy += 1;
            } else {
                n3 += tie_pairs(run_xy);
                run_xy = 1;
            }
        } else {
            n1 += tie_pairs(run_x);
            n3 += tie_pairs(run_xy);
            run_x = 1;
            run_xy = 1;
        }
    }
    n1 += tie_pairs(run_x);
    n3 += tie_pairs(run_xy);

    let mut ys: Vec<T> = pairs.iter().map(|p| p.1).collect();
    let swaps = merge_count(&mut ys);

    let mut n2 = 0u64;
    let mut run_y = 1u64;
    for w in ys.windows(2) {
        if w[1] == w[0] {
            run_y += 1;
        } else {
            n2 += tie_pairs(run_y);
            run_y = 1;
        }
    }
    n2 += tie_pairs(run_y);

    let n0 = tie_pairs(n as u64);
    if n1 == n0 || n2 == n0 {
        return Err(Error::ZeroVariance("kendall input (all values tied)".into()));
    }
    let numer = n0 as i64 - n1 as i64 - n2 as i64 + n3 as i64 - 2 * swaps as i64;
    let denom = ((n0 - n1) as f64 * (n0 - n2) as f64).sqrt();
    Ok(clamp_unit(T::lit(numer as f64 / denom)))
}

/// Stable merge sort counting strict inversions.
fn merge_count<T: Scalar>(v: &mut [T]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid]) + merge_count(&mut v[mid..]);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            swaps += (mid - i) as u64;
            merged.push(v[j]);
            j += 1;
        } else {
            merged.push(v[i]);
            i += 1;
        }
    }
    merged.extend_from_slice(&v[i..mid]);
    merged.extend_from_slice(&v[j..n]);
    v.copy_from_slice(&merged);
    swaps
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceEntry<T> {
    pub task: TaskId,
    pub relevance: T,
}

/// Candidate tasks ordered by correlation with a baseline (target) task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceRanking<T> {
    pub baseline: TaskId,
    pub metric: CorrelationMetric,
    pub model_subset: Vec<String>,
    pub entries: Vec<RelevanceEntry<T>>,
}

impl<T: Scalar> RelevanceRanking<T> {
    pub fn top(&self, t: usize) -> impl Iterator<Item = &TaskId> {
        self.entries.iter().take(t).map(|e| &e.task)
    }

    pub fn relevance_of(&self, task: &str) -> Option<T> {
        self.entries.iter().find(|e| e.task.as_str() == task).map(|e| e.relevance)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("ranking serializes")
    }
}

/// Correlates the baseline column with every other column over `rows`
/// (row indices into `p`), sorted by relevance descending, ties by task name.
pub(crate) fn relevance_for_rows<T: Scalar>(
    p: &NormalizedMatrix<T>,
    baseline: usize,
    metric: CorrelationMetric,
    rows: &[usize],
) -> Result<RelevanceRanking<T>> {
    let base = p.column_at(baseline, rows);
    let mut entries = Vec::with_capacity(p.n_tasks().saturating_sub(1));
    for j in (0..p.n_tasks()).filter(|&j| j != baseline) {
        let task = &p.tasks[j];
        let relevance = metric
            .compute(&base, &p.column_at(j, rows))
            .map_err(|e| Error::for_task(task.as_str(), e))?;
        entries.push(RelevanceEntry { task: task.clone(), relevance });
    }
    entries.sort_by(|a, b| {
        total_cmp(&b.relevance, &a.relevance).then_with(|| a.task.cmp(&b.task))
    });
    Ok(RelevanceRanking {
        baseline: p.tasks[baseline].clone(),
        metric,
        model_subset: rows.iter().map(|&i| p.models[i].name.clone()).collect(),
        entries,
    })
}

/// Relevance of every task to `baseline`, computed over the named model
/// subset (all models when `models` is `None`). Subset rows keep matrix order.
pub fn relevance_ranking<T: Scalar, S: AsRef<str>>(
    p: &NormalizedMatrix<T>,
    baseline: &str,
    metric: CorrelationMetric,
    models: Option<&[S]>,
) -> Result<RelevanceRanking<T>> {
    let b = p
        .task_index(baseline)
        .ok_or_else(|| Error::UnknownLabel { kind: "task", label: baseline.into() })?;
    let rows: Vec<usize> = match models {
        None => (0..p.n_models()).collect(),
        Some(names) => {
            let mut keep = vec![false; p.n_models()];
            for name in names {
                let i = p.model_index(name.as_ref()).ok_or_else(|| Error::UnknownLabel {
                    kind: "model",
                    label: name.as_ref().into(),
                })?;
                keep[i] = true;
            }
            (0..p.n_models()).filter(|&i| keep[i]).collect()
        }
    };
    if rows.len() < 3 {
        return Err(Error::InsufficientLength { needed: 3, got: rows.len() });
    }
    relevance_for_rows(p, b, metric, &rows)
}

/// Fraction of the top-`t` tasks the two rankings share.
pub fn top_t_overlap<T: Scalar>(a: &RelevanceRanking<T>, b: &RelevanceRanking<T>, t: usize) -> Result<f64> {
    if a.baseline != b.baseline {
        return Err(Error::Mismatch(format!(
            "rankings have different baselines {} and {}",
            a.baseline, b.baseline
        )));
    }
    overlap_ratio(a, b, t)
}

pub(crate) fn overlap_ratio<T: Scalar>(a: &RelevanceRanking<T>, b: &RelevanceRanking<T>, t: usize) -> Result<f64> {
    if t == 0 {
        return Err(Error::InvalidConfig("t must be at least 1".into()));
    }
    if a.entries.len() < t || b.entries.len() < t {
        return Err(Error::InsufficientLength { needed: t, got: a.entries.len().min(b.entries.len()) });
    }
    let top_a: HashSet<&TaskId> = a.top(t).collect();
    let shared = b.top(t).filter(|task| top_a.contains(task)).count();
    Ok(shared as f64 / t as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ScoreMatrix;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pearson_perfect_lines() {
        assert_abs_diff_eq!(pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0, epsilon = 1e-15);
    }

    #[test]
    fn pearson_definitional() {
        // cov = 4/3*... : x=[1,2,3,4], y=[1,3,2,4]; sxy = 4, sxx = syy = 5
        assert_abs_diff_eq!(pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap(), 0.8, epsilon = 1e-15);
    }

    #[test]
    fn pearson_preconditions() {
        assert!(matches!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(Error::ZeroVariance(_))));
        assert!(matches!(pearson(&[1.0, 2.0], &[1.0, 2.0]), Err(Error::InsufficientLength { .. })));
        assert!(matches!(pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn spearman_is_monotone_invariant() {
        let x = [0.5, 1.0, 2.0, 4.0, 9.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| v.exp()).collect();
        assert_eq!(spearman(&x, &y).unwrap(), 1.0);
        assert!(spearman(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn spearman_equals_pearson_of_ranks() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [1.0, 3.0, 2.0, 4.0];
        assert_eq!(spearman(&x, &y).unwrap(), pearson(&x, &y).unwrap());
    }

    #[test]
    fn average_ranks_with_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 10.0, 30.0]), vec![1.5, 3.0, 1.5, 4.0]);
    }

    #[test]
    fn kendall_small_cases() {
        assert_eq!(kendall(&[1.0, 2.0, 3.0, 4.0], &[4.0, 3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert_abs_diff_eq!(kendall(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
        // pairs: (1,2) tied in x; (1,3),(2,3) concordant -> 2/sqrt(2*3)
        assert_abs_diff_eq!(
            kendall(&[1.0, 1.0, 2.0], &[1.0, 2.0, 3.0]).unwrap(),
            2.0 / 6.0_f64.sqrt(),
            epsilon = 1e-15
        );
        assert!(kendall(&[3.0, 3.0, 3.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn kendall_f32() {
        let v = kendall(&[1.0_f32, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-6);
    }

    fn matrix() -> NormalizedMatrix<f64> {
        let m = ScoreMatrix::from_labels(
            &["a", "b", "c", "d"],
            &["target", "dup", "flip", "other"],
            vec![
                vec![1.0, 1.0, 4.0, 2.0],
                vec![2.0, 2.0, 3.0, 1.0],
                vec![3.0, 3.0, 2.0, 4.0],
                vec![4.0, 4.0, 1.0, 3.0],
            ],
        )
        .unwrap();
        NormalizedMatrix::raw(&m).unwrap()
    }

    #[test]
    fn duplicate_column_ranks_first() {
        let r = relevance_ranking::<f64, &str>(&matrix(), "target", CorrelationMetric::Kendall, None).unwrap();
        assert_eq!(r.entries[0].task.as_str(), "dup");
        assert_eq!(r.entries[0].relevance, 1.0);
        assert_eq!(r.entries.last().unwrap().task.as_str(), "flip");
        assert_eq!(r.entries.len(), 3);
        assert!(r.entries.iter().all(|e| e.task.as_str() != "target"));
    }

    #[test]
    fn ties_sorted_by_name() {
        let m = ScoreMatrix::from_labels(
            &["a", "b", "c"],
            &["t", "z", "y"],
            vec![vec![1.0, 1.0, 1.0], vec![2.0, 2.0, 2.0], vec![3.0, 3.0, 3.0]],
        )
        .unwrap();
        let r = relevance_ranking::<f64, &str>(&NormalizedMatrix::raw(&m).unwrap(), "t", CorrelationMetric::Pearson, None)
            .unwrap();
        let names: Vec<_> = r.entries.iter().map(|e| e.task.as_str()).collect();
        assert_eq!(names, ["y", "z"]);
    }

    #[test]
    fn relevance_errors() {
        let p = matrix();
        assert!(relevance_ranking::<f64, &str>(&p, "nope", CorrelationMetric::Kendall, None).is_err());
        assert!(relevance_ranking(&p, "target", CorrelationMetric::Kendall, Some(&["a", "b"])).is_err());
        assert!(relevance_ranking(&p, "target", CorrelationMetric::Kendall, Some(&["a", "zz", "c"])).is_err());
        let m = ScoreMatrix::from_labels(&["a", "b", "c"], &["t", "flat"], vec![
            vec![1.0, 5.0],
            vec![2.0, 5.0],
            vec![3.0, 5.0],
        ])
        .unwrap();
        let err = relevance_ranking::<f64, &str>(&NormalizedMatrix::raw(&m).unwrap(), "t", CorrelationMetric::Pearson, None)
            .unwrap_err();
        assert!(err.to_string().starts_with("task flat:"), "{err}");
    }

    fn ranking(tasks: &[&str]) -> RelevanceRanking<f64> {
        RelevanceRanking {
            baseline: TaskId::new("B").unwrap(),
            metric: CorrelationMetric::Kendall,
            model_subset: vec![],
            entries: tasks
                .iter()
                .enumerate()
                .map(|(i, t)| RelevanceEntry { task: TaskId::new(*t).unwrap(), relevance: 1.0 - i as f64 * 0.1 })
                .collect(),
        }
    }

    #[test]
    fn overlap_cases() {
        let a = ranking(&["T1", "T2", "T3", "T4"]);
        let b = ranking(&["T2", "T1", "T5", "T6"]);
        assert_abs_diff_eq!(top_t_overlap(&a, &b, 3).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(top_t_overlap(&a, &a, 4).unwrap(), 1.0);
        let c = ranking(&["T7", "T8", "T9", "T10"]);
        assert_eq!(top_t_overlap(&a, &c, 2).unwrap(), 0.0);
        assert!(top_t_overlap(&a, &b, 0).is_err());
        assert!(top_t_overlap(&a, &b, 5).is_err());
        let mut d = b.clone();
        d.baseline = TaskId::new("other").unwrap();
        assert!(matches!(top_t_overlap(&a, &d, 2), Err(Error::Mismatch(_))));
    }

    #[test]
    fn metric_parsing() {
        assert_eq!(
            CorrelationMetric::parse_list("pearson, spearman,kendall").unwrap(),
            CorrelationMetric::ALL.to_vec()
        );
        assert!("tau".parse::<CorrelationMetric>().is_err());
    }
}
