//! `proxysel`: command-line front end for the proxy-task selection library.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use proxysel::consistency::{consistency_on_normalized, ConsistencyConfig};
use proxysel::correlation::{relevance_ranking, CorrelationMetric, RelevanceRanking};
use proxysel::data::{load_checkpoints, load_matrix, Format, Manifest, ScoreMatrix};
use proxysel::normalize::{feature_normalize, normalize_pipeline, NormalizedMatrix};
use proxysel::pipeline::{run_all, write_bundle, PipelineConfig};
use proxysel::robustness::{robustness_from_matrix, RobustnessReport};
use proxysel::selection::{
    count_discordant_pairs, predict_all, select_proxies, Aggregation, Orientation, Prediction, ProxySet, ScoredRanking,
    SelectionConfig,
};
use proxysel::synth::{generate, SynthConfig};
use proxysel::{Error, ErrorClass, Result};

#[derive(Parser)]
#[command(name = "proxysel", version, about = "Select proxy tasks and predict emergent-ability scores")]
struct Cli {
    /// Master seed; overrides seeds in configs.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for relative output paths (and the run-all bundle).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Output encoding for tabular results.
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: OutFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Feature- then sample-normalize a score matrix.
    Normalize(NormalizeArgs),
    /// Rank tasks by relevance to a baseline task.
    Relevance(RelevanceArgs),
    /// Sampling-consistency evaluation of correlation metrics.
    Consistency(ConsistencyArgs),
    /// Variance-ratio robustness from small-model groups.
    Robustness(RobustnessArgs),
    /// Threshold and weight proxy tasks.
    Select(SelectArgs),
    /// Predict checkpoint scores from a proxy set.
    Predict(PredictArgs),
    /// Count discordant pairs between two rankings.
    RankCompare(RankCompareArgs),
    /// Generate a synthetic score matrix.
    Synth(SynthArgs),
    /// Run the full pipeline from a config file.
    RunAll(RunAllArgs),
}

#[derive(Args)]
struct NormalizeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Stop after the per-task step.
    #[arg(long)]
    feature_only: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RelevanceArgs {
    /// Raw score matrix or normalized-matrix JSON.
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    baseline: String,
    #[arg(long, default_value = "kendall")]
    metric: CorrelationMetric,
    /// File with one model name per line.
    #[arg(long)]
    models: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConsistencyArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    baseline: String,
    #[arg(long = "n")]
    n_sample: usize,
    #[arg(long = "k")]
    k_rounds: usize,
    #[arg(long = "t")]
    top_t: usize,
    #[arg(long, default_value = "pearson,spearman,kendall")]
    metrics: String,
    #[arg(long)]
    resample_per_metric: bool,
    #[arg(long, default_value_t = 10)]
    max_retries: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RobustnessArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    relevance: PathBuf,
    #[arg(long)]
    robustness: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    eps_c: f64,
    #[arg(long, default_value_t = 1.0)]
    eps_r: f64,
    #[arg(long, default_value_t = 1.0)]
    sigmoid_k: f64,
    #[arg(long)]
    log_robustness: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    proxyset: PathBuf,
    #[arg(long)]
    scores: PathBuf,
    #[arg(long, default_value = "weighted_mean")]
    aggregation: Aggregation,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RankCompareArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    /// Score column of `--a`; optional when the table has one column.
    #[arg(long)]
    a_column: Option<String>,
    #[arg(long)]
    b_column: Option<String>,
    #[arg(long, default_value = "higher")]
    a_orientation: Orientation,
    #[arg(long, default_value = "higher")]
    b_orientation: Orientation,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct RunAllArgs {
    #[arg(long)]
    config: PathBuf,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io { path: path.into(), source: e })
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&read(path)?)?)
}

struct Ctx {
    out_dir: Option<PathBuf>,
    format: OutFormat,
}

impl Ctx {
    fn resolve(&self, out: &Path) -> PathBuf {
        match &self.out_dir {
            Some(dir) if out.is_relative() => dir.join(out),
            _ => out.to_path_buf(),
        }
    }

    /// Writes `text` to `out` (resolved against `--out-dir`) or stdout.
    fn emit(&self, out: Option<&Path>, text: &str) -> Result<()> {
        match out {
            Some(p) => {
                let path = self.resolve(p);
                if let Some(parent) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                    fs::create_dir_all(parent).map_err(|e| Error::Io { path: parent.into(), source: e })?;
                }
                fs::write(&path, text).map_err(|e| Error::Io { path, source: e })
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(text.as_bytes()).map_err(|e| Error::Io { path: "<stdout>".into(), source: e })
            }
        }
    }

    fn emit_table(&self, out: Option<&Path>, json: String, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
        let text = match self.format {
            OutFormat::Json => json + "\n",
            OutFormat::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(header)?;
                for r in rows {
                    w.write_record(r)?;
                }
                String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 csv")
            }
        };
        self.emit(out, &text)
    }
}

fn load_scores(path: &Path, manifest: Option<&Path>) -> Result<ScoreMatrix<f64>> {
    let m = load_matrix::<f64>(path, Format::from_path(path))?;
    match manifest {
        Some(p) => m.with_manifest(&Manifest::load(p)?),
        None => Ok(m),
    }
}

/// A normalized-matrix JSON is used as is; anything else is read as raw
/// scores and run through both normalization steps.
fn load_normalized(path: &Path) -> Result<NormalizedMatrix<f64>> {
    if Format::from_path(path) == Format::Json {
        let text = read(path)?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        if value.get("stage").is_some() {
            return NormalizedMatrix::from_json_str(&text);
        }
        return normalize_pipeline(&ScoreMatrix::from_json_str(&text)?);
    }
    normalize_pipeline(&load_scores(path, None)?)
}

fn read_model_list(path: &Path) -> Result<Vec<String>> {
    Ok(read(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect())
}

/// Reads one score column from a checkpoint table or a predictions JSON.
fn load_ranking(path: &Path, column: Option<&str>, orientation: Orientation) -> Result<ScoredRanking<f64>> {
    if Format::from_path(path) == Format::Json {
        let text = read(path)?;
        if let Ok(preds) = serde_json::from_str::<Vec<Prediction<f64>>>(&text) {
            let mut r = ScoredRanking::from_predictions(&preds);
            r.orientation = orientation;
            return Ok(r);
        }
    }
    let table = load_checkpoints::<f64>(path, Format::from_path(path))?;
    let column = match column {
        Some(c) => c.to_string(),
        None => {
            let mut names: Vec<&str> =
                table.iter().flat_map(|c| c.scores.keys().map(|k| k.as_str())).collect();
            names.sort_unstable();
            names.dedup();
            match names.as_slice() {
                [only] => only.to_string(),
                _ => {
                    return Err(Error::InvalidConfig(format!(
                        "{} has {} score columns; pick one with a column flag",
                        path.display(),
                        names.len()
                    )))
                }
            }
        }
    };
    ScoredRanking::from_checkpoints(&table, &column, orientation)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx { out_dir: cli.out_dir.clone(), format: cli.format };
    match cli.command {
        Command::Normalize(a) => {
            let m = load_scores(&a.input, a.manifest.as_deref())?;
            let p = if a.feature_only { feature_normalize(&m)? } else { normalize_pipeline(&m)? };
            let rows = p
                .models
                .iter()
                .zip(&p.values)
                .map(|(m, row)| std::iter::once(m.name.clone()).chain(row.iter().map(|v| v.to_string())).collect())
                .collect();
            let mut header = vec!["model"];
            header.extend(p.tasks.iter().map(|t| t.as_str()));
            ctx.emit_table(a.out.as_deref(), p.to_json_string(), &header, rows)
        }
        Command::Relevance(a) => {
            let p = load_normalized(&a.matrix)?;
            let models = a.models.as_deref().map(read_model_list).transpose()?;
            let r = relevance_ranking(&p, &a.baseline, a.metric, models.as_deref())?;
            let rows = r.entries.iter().map(|e| vec![e.task.to_string(), e.relevance.to_string()]).collect();
            ctx.emit_table(a.out.as_deref(), r.to_json_string(), &["task", "relevance"], rows)
        }
        Command::Consistency(a) => {
            let p = load_normalized(&a.matrix)?;
            let mut cfg = ConsistencyConfig::new(a.n_sample, a.k_rounds, a.top_t)
                .with_metrics(&CorrelationMetric::parse_list(&a.metrics)?)
                .with_seed(cli.seed.unwrap_or(0));
            cfg.resample_per_metric = a.resample_per_metric;
            cfg.max_retries = a.max_retries;
            let report = consistency_on_normalized(&p, &a.baseline, &cfg)?;
            let rows = report
                .metrics
                .iter()
                .map(|m| {
                    vec![
                        m.metric.name().to_string(),
                        m.baseline_index.to_string(),
                        m.sampling_index.to_string(),
                        (report.selected == Some(m.metric)).to_string(),
                    ]
                })
                .collect();
            ctx.emit_table(a.out.as_deref(), report.to_json_string(), &["metric", "s", "r", "selected"], rows)
        }
        Command::Robustness(a) => {
            let m = load_scores(&a.matrix, Some(&a.manifest))?;
            let r = robustness_from_matrix(&m)?;
            for w in &r.warnings {
                eprintln!("warning: {w}");
            }
            let rows = r
                .entries
                .iter()
                .map(|e| {
                    vec![
                        e.task.to_string(),
                        e.variance_noise.to_string(),
                        e.variance_data.to_string(),
                        fmt_opt(e.ratio),
                        e.degenerate.map(|d| d.name().to_string()).unwrap_or_default(),
                    ]
                })
                .collect();
            ctx.emit_table(
                a.out.as_deref(),
                r.to_json_string(),
                &["task", "variance_noise", "variance_data", "ratio", "degenerate"],
                rows,
            )
        }
        Command::Select(a) => {
            let relevance: RelevanceRanking<f64> = parse_json(&a.relevance)?;
            let robustness: RobustnessReport<f64> = parse_json(&a.robustness)?;
            let cfg = SelectionConfig { eps_c: a.eps_c, eps_r: a.eps_r, sigmoid_k: a.sigmoid_k, log_robustness: a.log_robustness };
            let set = select_proxies(&relevance, &robustness, &cfg)?;
            let rows = set
                .entries
                .iter()
                .map(|e| vec![e.task.to_string(), e.relevance.to_string(), fmt_opt(e.robustness), e.weight.to_string()])
                .collect();
            ctx.emit_table(a.out.as_deref(), set.to_json_string(), &["task", "relevance", "robustness", "weight"], rows)
        }
        Command::Predict(a) => {
            let set: ProxySet<f64> = parse_json(&a.proxyset)?;
            let table = load_checkpoints::<f64>(&a.scores, Format::from_path(&a.scores))?;
            let preds = predict_all(&set, &table, a.aggregation)?;
            let rows = preds.iter().map(|p| vec![p.checkpoint.clone(), p.predicted_score.to_string()]).collect();
            let json = serde_json::to_string_pretty(&preds)?;
            ctx.emit_table(a.out.as_deref(), json, &["model", "predicted"], rows)
        }
        Command::RankCompare(a) => {
            let ra = load_ranking(&a.a, a.a_column.as_deref(), a.a_orientation)?;
            let rb = load_ranking(&a.b, a.b_column.as_deref(), a.b_orientation)?;
            let c = count_discordant_pairs(&ra, &rb)?;
            let rows = c
                .models
                .iter()
                .enumerate()
                .map(|(i, m)| vec![m.clone(), c.positions_a[i].to_string(), c.positions_b[i].to_string()])
                .collect();
            ctx.emit_table(a.out.as_deref(), c.to_json_string(), &["model", "position_a", "position_b"], rows)?;
            eprintln!("discordant pairs: {} of {}", c.discordant_pairs, c.total_pairs);
            Ok(())
        }
        Command::Synth(a) => {
            let mut cfg: SynthConfig = parse_json(&a.config)?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            let (matrix, truth) = generate::<f64>(&cfg)?;
            let out = ctx.resolve(&a.out);
            let text = match Format::from_path(&out) {
                Format::Csv => matrix.to_csv_string(),
                Format::Json => matrix.to_json_string(),
            };
            ctx.emit(Some(&out), &text)?;
            if let Some(t) = &a.truth {
                ctx.emit(Some(t), &(serde_json::to_string_pretty(&truth)? + "\n"))?;
            }
            if truth.clipped_cells > 0 {
                eprintln!("warning: {} cells clipped to [0, 100]", truth.clipped_cells);
            }
            Ok(())
        }
        Command::RunAll(a) => {
            let mut cfg = PipelineConfig::load(&a.config)?;
            if let Some(seed) = cli.seed {
                cfg.consistency.seed = seed;
            }
            if let Some(dir) = &cli.out_dir {
                cfg.out_dir = dir.clone();
            }
            let bundle = run_all(&cfg)?;
            let written = write_bundle(&bundle, &cfg.out_dir)?;
            for p in written {
                println!("{}", p.display());
            }
            Ok(())
        }
    }
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Validation => 2,
        ErrorClass::Computation => 3,
        ErrorClass::Io => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.class()))
        }
    }
}
