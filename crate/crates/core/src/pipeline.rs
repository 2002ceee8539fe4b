//! End-to-end run: normalize, pick a metric, rank relevance, score
//! robustness, select proxies, predict checkpoints and compare rankings.
//!
//! A [`PipelineConfig`] is one JSON document. Input paths are resolved
//! relative to the config file; the output directory is taken as given.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::consistency::{consistency_on_normalized, fallback_order, select_metric_from_indices, ConsistencyConfig, ConsistencyReport};
use crate::correlation::{relevance_ranking, CorrelationMetric, RelevanceRanking};
use crate::data::{load_checkpoints, load_matrix, Format, Manifest};
use crate::error::{Error, Result};
use crate::normalize::{normalize_pipeline, NormalizedMatrix};
use crate::report;
use crate::robustness::{robustness_from_matrix, Degeneracy, RobustnessReport};
use crate::selection::{
    count_discordant_pairs, predict_all, select_proxies, Aggregation, Orientation, Prediction, ProxySet, RankComparison,
    ScoredRanking, SelectionConfig,
};

/// One score column of a checkpoint table, read as a ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingSource {
    pub path: PathBuf,
    pub column: String,
    #[serde(default)]
    pub orientation: Orientation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedRanking {
    pub name: String,
    pub path: PathBuf,
    pub column: String,
    #[serde(default)]
    pub orientation: Orientation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Target task whose relevance to every other task is measured.
    pub baseline: String,
    /// Models × tasks leaderboard including the baseline column.
    pub leaderboard: PathBuf,
    #[serde(default)]
    pub leaderboard_manifest: Option<PathBuf>,
    /// Restricts relevance to these rows; consistency always uses all rows.
    #[serde(default)]
    pub relevance_models: Option<Vec<String>>,
    /// Small-model ensemble scores and their group manifest.
    pub small_models: PathBuf,
    pub small_models_manifest: PathBuf,
    pub consistency: ConsistencyConfig,
    /// Used when no metric dominates the consistency indices.
    #[serde(default)]
    pub fallback_metric: Option<CorrelationMetric>,
    #[serde(default)]
    pub selection: SelectionConfig<f64>,
    #[serde(default)]
    pub aggregation: Aggregation,
    /// Proxy-task scores of the checkpoints to predict.
    pub checkpoints: PathBuf,
    #[serde(default)]
    pub ground_truth: Option<RankingSource>,
    /// Further rankings compared against the ground truth.
    #[serde(default)]
    pub comparisons: Vec<NamedRanking>,
    /// Published (s, r) tables to run the metric-selection rule on.
    #[serde(default)]
    pub published_consistency: Option<PathBuf>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn require(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::io(path, std::io::Error::new(std::io::ErrorKind::NotFound, "referenced file not found")))
    }
}

impl PipelineConfig {
    /// Reads a config, resolves input paths against its directory and checks
    /// that every referenced file exists.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: PipelineConfig = serde_json::from_str(&text)?;
        cfg.resolve(path.parent().unwrap_or(Path::new(".")));
        cfg.check_files()?;
        Ok(cfg)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.leaderboard);
        if let Some(p) = self.leaderboard_manifest.as_mut() {
            fix(p);
        }
        fix(&mut self.small_models);
        fix(&mut self.small_models_manifest);
        fix(&mut self.checkpoints);
        if let Some(g) = self.ground_truth.as_mut() {
            fix(&mut g.path);
        }
        for c in &mut self.comparisons {
            fix(&mut c.path);
        }
        if let Some(p) = self.published_consistency.as_mut() {
            fix(p);
        }
    }

    pub fn check_files(&self) -> Result<()> {
        require(&self.leaderboard)?;
        if let Some(p) = &self.leaderboard_manifest {
            require(p)?;
        }
        require(&self.small_models)?;
        require(&self.small_models_manifest)?;
        require(&self.checkpoints)?;
        if let Some(g) = &self.ground_truth {
            require(&g.path)?;
        }
        for c in &self.comparisons {
            require(&c.path)?;
        }
        if let Some(p) = &self.published_consistency {
            require(p)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublishedIndex {
    pub metric: CorrelationMetric,
    pub s: f64,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublishedRow {
    pub label: String,
    pub n_sample: usize,
    pub k_rounds: usize,
    pub indices: Vec<PublishedIndex>,
}

/// Externally reported consistency indices, one row per (n, k) setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublishedConsistency {
    pub top_t: usize,
    pub rows: Vec<PublishedRow>,
}

impl PublishedConsistency {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricIndices {
    pub metric: CorrelationMetric,
    pub s: f64,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencySummary {
    pub n_sample: usize,
    pub k_rounds: usize,
    pub top_t: usize,
    pub seed: u64,
    pub indices: Vec<MetricIndices>,
    pub selected: Option<CorrelationMetric>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublishedSelection {
    pub label: String,
    pub selected: Option<CorrelationMetric>,
    pub fallback_order: Vec<CorrelationMetric>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRow {
    pub task: String,
    pub variance_noise: f64,
    pub variance_data: f64,
    pub ratio: Option<f64>,
    pub degenerate: Option<Degeneracy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxyRow {
    pub task: String,
    pub relevance: f64,
    pub robustness: Option<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub checkpoint: String,
    pub predicted_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub name: String,
    pub orientation: Orientation,
    pub discordant_pairs: f64,
    pub total_pairs: usize,
}

/// The headline numbers of a run; rendered both as JSON and as text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub baseline: String,
    pub metric: CorrelationMetric,
    /// `"selected by consistency"` or `"configured fallback"`.
    pub metric_source: String,
    pub consistency: ConsistencySummary,
    pub published_consistency: Vec<PublishedSelection>,
    pub robustness: Vec<RobustnessRow>,
    pub proxies: Vec<ProxyRow>,
    pub predictions: Vec<PredictionRow>,
    pub ground_truth: Option<String>,
    /// The proxy prediction first (named `proxy`), then configured rankings.
    pub comparisons: Vec<ComparisonRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedComparison {
    pub name: String,
    pub comparison: RankComparison,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunBundle {
    pub normalized: NormalizedMatrix<f64>,
    pub consistency: ConsistencyReport,
    pub relevance: RelevanceRanking<f64>,
    pub robustness: RobustnessReport<f64>,
    pub proxies: ProxySet<f64>,
    pub predictions: Vec<Prediction<f64>>,
    pub comparisons: Vec<NamedComparison>,
    pub summary: RunSummary,
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage { stage: name, source: Box::new(e) })
}

fn read_ranking(path: &Path, column: &str, orientation: Orientation) -> Result<ScoredRanking<f64>> {
    let table = load_checkpoints::<f64>(path, Format::from_path(path))?;
    ScoredRanking::from_checkpoints(&table, column, orientation)
}

/// Runs every stage in order. A failing stage is reported as
/// [`Error::Stage`] carrying the stage name.
pub fn run_all(config: &PipelineConfig) -> Result<RunBundle> {
    stage("config", config.selection.validate())?;

    let normalized = stage("normalize", {
        let load = || -> Result<NormalizedMatrix<f64>> {
            let mut m = load_matrix::<f64>(&config.leaderboard, Format::from_path(&config.leaderboard))?;
            if let Some(p) = &config.leaderboard_manifest {
                m = m.with_manifest(&Manifest::load(p)?)?;
            }
            normalize_pipeline(&m)
        };
        load()
    })?;

    let consistency = stage("consistency", consistency_on_normalized(&normalized, &config.baseline, &config.consistency))?;
    let (metric, metric_source) = match (consistency.selected, config.fallback_metric) {
        (Some(m), _) => (m, "selected by consistency"),
        (None, Some(m)) => (m, "configured fallback"),
        (None, None) => {
            return Err(Error::Stage {
                stage: "consistency",
                source: Box::new(Error::InvalidConfig(
                    "no metric dominates the consistency indices and no fallback_metric is configured".into(),
                )),
            })
        }
    };
    let published = stage("consistency", {
        let load = || -> Result<Vec<PublishedSelection>> {
            let Some(p) = &config.published_consistency else { return Ok(Vec::new()) };
            let table = PublishedConsistency::load(p)?;
            Ok(table
                .rows
                .iter()
                .map(|row| {
                    let idx: Vec<_> = row.indices.iter().map(|i| (i.metric, i.s, i.r)).collect();
                    PublishedSelection {
                        label: row.label.clone(),
                        selected: select_metric_from_indices(&idx),
                        fallback_order: fallback_order(&idx),
                    }
                })
                .collect())
        };
        load()
    })?;

    let relevance = stage(
        "relevance",
        relevance_ranking(&normalized, &config.baseline, metric, config.relevance_models.as_deref()),
    )?;

    let robustness = stage("robustness", {
        let load = || -> Result<RobustnessReport<f64>> {
            let m = load_matrix::<f64>(&config.small_models, Format::from_path(&config.small_models))?;
            robustness_from_matrix(&m.with_manifest(&Manifest::load(&config.small_models_manifest)?)?)
        };
        load()
    })?;

    let proxies = stage("select", select_proxies(&relevance, &robustness, &config.selection))?;

    let predictions = stage("predict", {
        let load = || -> Result<Vec<Prediction<f64>>> {
            let table = load_checkpoints::<f64>(&config.checkpoints, Format::from_path(&config.checkpoints))?;
            predict_all(&proxies, &table, config.aggregation)
        };
        load()
    })?;

    let comparisons = stage("rank-compare", {
        let run = || -> Result<Vec<NamedComparison>> {
            let Some(gt) = &config.ground_truth else { return Ok(Vec::new()) };
            let truth = read_ranking(&gt.path, &gt.column, gt.orientation)?;
            let mut out = vec![NamedComparison {
                name: "proxy".into(),
                comparison: count_discordant_pairs(&ScoredRanking::from_predictions(&predictions), &truth)?,
            }];
            for c in &config.comparisons {
                let a = read_ranking(&c.path, &c.column, c.orientation)?;
                out.push(NamedComparison { name: c.name.clone(), comparison: count_discordant_pairs(&a, &truth)? });
            }
            Ok(out)
        };
        run()
    })?;

    let summary = RunSummary {
        baseline: config.baseline.clone(),
        metric,
        metric_source: metric_source.into(),
        consistency: ConsistencySummary {
            n_sample: consistency.n_sample,
            k_rounds: consistency.k_rounds,
            top_t: consistency.top_t,
            seed: consistency.seed,
            indices: consistency
                .metrics
                .iter()
                .map(|m| MetricIndices { metric: m.metric, s: m.baseline_index, r: m.sampling_index })
                .collect(),
            selected: consistency.selected,
        },
        published_consistency: published,
        robustness: robustness
            .entries
            .iter()
            .map(|e| RobustnessRow {
                task: e.task.to_string(),
                variance_noise: e.variance_noise,
                variance_data: e.variance_data,
                ratio: e.ratio,
                degenerate: e.degenerate,
            })
            .collect(),
        proxies: proxies
            .entries
            .iter()
            .map(|e| ProxyRow { task: e.task.to_string(), relevance: e.relevance, robustness: e.robustness, weight: e.weight })
            .collect(),
        predictions: predictions
            .iter()
            .map(|p| PredictionRow { checkpoint: p.checkpoint.clone(), predicted_score: p.predicted_score })
            .collect(),
        ground_truth: config.ground_truth.as_ref().map(|g| g.column.clone()),
        comparisons: comparisons
            .iter()
            .map(|c| ComparisonRow {
                name: c.name.clone(),
                orientation: c.comparison.orientation_a,
                discordant_pairs: c.comparison.discordant_pairs,
                total_pairs: c.comparison.total_pairs,
            })
            .collect(),
    };

    Ok(RunBundle { normalized, consistency, relevance, robustness, proxies, predictions, comparisons, summary })
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("bundle serializes");
    s.push('\n');
    s
}

/// Files of a bundle as (file name, contents), in a fixed order.
pub fn render_bundle(bundle: &RunBundle) -> Vec<(&'static str, String)> {
    vec![
        ("normalized.json", pretty(&bundle.normalized)),
        ("consistency.json", pretty(&bundle.consistency)),
        ("relevance.json", pretty(&bundle.relevance)),
        ("robustness.json", pretty(&bundle.robustness)),
        ("proxyset.json", pretty(&bundle.proxies)),
        ("predictions.json", pretty(&bundle.predictions)),
        ("comparisons.json", pretty(&bundle.comparisons)),
        ("summary.json", pretty(&bundle.summary)),
        ("summary.txt", report::summary_text(&bundle.summary)),
        ("relevance.svg", report::relevance_svg(&bundle.relevance)),
        ("weights.svg", report::weights_svg(&bundle.proxies)),
    ]
}

/// Writes the rendered bundle into `dir`, creating it if needed.
pub fn write_bundle(bundle: &RunBundle, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    render_bundle(bundle)
        .into_iter()
        .map(|(name, text)| {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) {
        fs::write(dir.join(name), text).unwrap();
    }

    fn fixture(dir: &Path, eps_c: f64) -> PathBuf {
        // Leaderboard: six models, a baseline and four candidates.
        write(
            dir,
            "board.csv",
            "model,target,a,b,c,d\n\
             m1,10,11,30,5,40\n\
             m2,20,19,10,9,42\n\
             m3,30,32,25,14,38\n\
             m4,40,38,35,20,45\n\
             m5,50,52,20,22,41\n\
             m6,60,61,15,31,39\n",
        );
        write(dir, "small.csv", "model,a,b,c,d\nx1,10,20,30,40\nx2,11,22,31,41\ny1,5,20,10,40\ny2,15,28,50,49\ny3,25,21,30,35\n");
        write(
            dir,
            "groups.json",
            r#"{"models":[
                {"name":"x1","group":"random_noise"},{"name":"x2","group":"random_noise"},
                {"name":"y1","group":"data_variability"},{"name":"y2","group":"data_variability"},
                {"name":"y3","group":"data_variability"}]}"#,
        );
        write(dir, "ckpt.csv", "model,a,b,c,d,truth\nk1,10,10,10,10,1\nk2,20,20,20,20,2\nk3,30,15,35,30,3\n");
        let cfg = format!(
            r#"{{"baseline":"target","leaderboard":"board.csv","small_models":"small.csv",
                "small_models_manifest":"groups.json",
                "consistency":{{"n_sample":4,"k_rounds":5,"top_t":2,"seed":3}},
                "fallback_metric":"kendall",
                "selection":{{"eps_c":{eps_c},"eps_r":0.5,"sigmoid_k":1.0}},
                "checkpoints":"ckpt.csv",
                "ground_truth":{{"path":"ckpt.csv","column":"truth"}}}}"#
        );
        write(dir, "run.json", &cfg);
        dir.join("run.json")
    }

    #[test]
    fn runs_end_to_end_and_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = PipelineConfig::load(fixture(dir.path(), 0.0)).unwrap();
        let a = run_all(&cfg).unwrap();
        let b = run_all(&cfg).unwrap();
        assert_eq!(render_bundle(&a), render_bundle(&b));
        assert!(!a.proxies.entries.is_empty());
        assert_eq!(a.summary.comparisons[0].name, "proxy");
        assert_eq!(a.summary.comparisons[0].total_pairs, 3);
    }

    #[test]
    fn empty_selection_names_the_stage() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = PipelineConfig::load(fixture(dir.path(), 1.0)).unwrap();
        let err = run_all(&cfg).unwrap_err();
        assert_eq!(err.stage(), Some("select"));
        assert_eq!(err.class(), crate::ErrorClass::Computation);
    }

    #[test]
    fn missing_file_rejected_at_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = fixture(dir.path(), 0.0);
        fs::remove_file(dir.path().join("small.csv")).unwrap();
        let err = PipelineConfig::load(path).unwrap_err();
        assert_eq!(err.class(), crate::ErrorClass::Io);
    }

    #[test]
    fn unknown_config_field_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "bad.json", r#"{"baseline":"t","bogus":1}"#);
        assert!(PipelineConfig::load(dir.path().join("bad.json")).is_err());
    }
}
