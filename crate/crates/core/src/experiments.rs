//! Seeded experiments on synthetic data with known latent structure.
//!
//! Each function runs one trial for one seed; callers aggregate over seeds.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::consistency::{consistency_on_normalized, ConsistencyConfig};
use crate::correlation::{kendall, relevance_ranking, CorrelationMetric};
use crate::data::{checkpoints_from_matrix, Group, ScoreMatrix};
use crate::error::Result;
use crate::normalize::normalize_pipeline;
use crate::rng::stream_rng;
use crate::robustness::robustness_from_matrix;
use crate::selection::{count_discordant_pairs, predict_all, select_proxies, Aggregation, ScoredRanking, SelectionConfig};
use crate::synth::{cosine, generate, generate_with_abilities, Link, SynthConfig, SynthTask};

const LOADING_STREAM: u64 = 0x4c4f_4144; // "LOAD"
const TRIAL_STREAM: u64 = 0x5452_4941; // "TRIA"

fn unit_vector<R: Rng>(rng: &mut R, dim: usize, nonnegative: bool) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                if nonnegative { z.abs() } else { z }
            })
            .collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn task_names(n: usize) -> Vec<String> {
    std::iter::once("target".to_string()).chain((1..n).map(|i| format!("cand{i:02}"))).collect()
}

/// Outcome of one relevance-recovery trial.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryTrial {
    /// Kendall tau between measured relevance and true loading cosine.
    pub tau: f64,
    pub measured: Vec<f64>,
    pub truth: Vec<f64>,
}

/// Random unit loadings for a target and `n_tasks - 1` candidates, scores
/// from the linear link with noise at `noise_ratio` times the signal sd,
/// relevance measured by the normal pipeline (both normalization steps,
/// then `metric`).
pub fn relevance_recovery(
    seed: u64,
    n_models: usize,
    n_tasks: usize,
    n_factors: usize,
    noise_ratio: f64,
    metric: CorrelationMetric,
) -> Result<RecoveryTrial> {
    let mut rng = stream_rng(seed, LOADING_STREAM, 0);
    let names = task_names(n_tasks);
    let tasks: Vec<SynthTask> =
        names.iter().map(|n| SynthTask::new(n, &unit_vector(&mut rng, n_factors, false))).collect();
    let mut cfg = SynthConfig::new(n_models, n_factors, tasks, 0.0, seed);
    // Unit loadings and unit-variance abilities: the signal sd is the scale.
    cfg.noise_sd = noise_ratio * cfg.linear_scale;
    let (matrix, truth) = generate::<f64>(&cfg)?;
    let p = normalize_pipeline(&matrix)?;
    let ranking = relevance_ranking::<f64, &str>(&p, "target", metric, None)?;
    let target = &truth.tasks[0].loadings;
    let mut measured = Vec::new();
    let mut true_rel = Vec::new();
    for t in &truth.tasks[1..] {
        measured.push(ranking.relevance_of(&t.name).expect("every candidate ranked"));
        true_rel.push(cosine(target, &t.loadings));
    }
    let tau = kendall(&measured, &true_rel)?;
    Ok(RecoveryTrial { tau, measured, truth: true_rel })
}

/// Outcome of one emergence-masking trial.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskingTrial {
    /// Discordant pairs between proxy-predicted and latent checkpoint rankings.
    pub proxy_discordant: f64,
    /// Discordant pairs between observed target scores and the latent ranking.
    pub target_discordant: f64,
    pub total_pairs: usize,
    pub proxies: usize,
}

/// Parameters of the emergence-masking experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskingSetup {
    pub n_leaderboard: usize,
    pub n_checkpoints: usize,
    pub n_candidates: usize,
    pub n_factors: usize,
    /// Score-unit noise on every cell.
    pub noise_sd: f64,
    /// Target signal (latent units) at which the target reaches 50.
    pub threshold: f64,
    /// How far below the threshold the checkpoints' mean target signal sits.
    pub checkpoint_gap: f64,
}

impl Default for MaskingSetup {
    fn default() -> Self {
        MaskingSetup {
            n_leaderboard: 20,
            n_checkpoints: 8,
            n_candidates: 9,
            n_factors: 3,
            noise_sd: 2.0,
            threshold: 1.5,
            checkpoint_gap: 3.0,
        }
    }
}

/// The target follows a steep logistic in latent ability, candidates are
/// linear. Leaderboard models straddle the threshold; checkpoints sit well
/// below it, where the target is floored. Proxies are selected from
/// leaderboard relevance and small-model robustness, then used to rank the
/// checkpoints; both that ranking and the raw target scores are compared
/// with the checkpoints' latent target ability.
pub fn emergence_masking(seed: u64, setup: &MaskingSetup) -> Result<MaskingTrial> {
    let mut rng = stream_rng(seed, LOADING_STREAM, 1);
    let names = task_names(setup.n_candidates + 1);
    let mut tasks: Vec<SynthTask> =
        names.iter().map(|n| SynthTask::new(n, &unit_vector(&mut rng, setup.n_factors, true))).collect();
    tasks[0].link = Some(Link::LogisticEmergence);
    let weight_sum: f64 = tasks[0].loadings.iter().sum();

    let base = |n_models: usize, shift: f64, stream: u64| {
        let mut cfg = SynthConfig::new(n_models, setup.n_factors, tasks.clone(), setup.noise_sd, 0);
        cfg.seed = crate::rng::derive_seed(seed, TRIAL_STREAM, stream);
        cfg.emergence_threshold = setup.threshold;
        cfg.ability_shift = shift;
        cfg
    };

    // Leaderboard centered on the threshold, checkpoints far below it.
    let board_cfg = base(setup.n_leaderboard, setup.threshold / weight_sum, 0);
    let (board, _) = generate::<f64>(&board_cfg)?;
    let ckpt_cfg = base(setup.n_checkpoints, (setup.threshold - setup.checkpoint_gap) / weight_sum, 1);
    let (ckpts, ckpt_truth) = generate::<f64>(&ckpt_cfg)?;

    // Small-model groups: the data group varies ability, the noise group
    // shares one ability vector and differs only by score noise.
    let small_tasks: Vec<SynthTask> = tasks[1..].to_vec();
    let mut data_cfg = SynthConfig::new(5, setup.n_factors, small_tasks.clone(), setup.noise_sd, 0);
    data_cfg.seed = crate::rng::derive_seed(seed, TRIAL_STREAM, 2);
    let (data_group, _) = generate::<f64>(&data_cfg)?;
    let mut noise_cfg = SynthConfig::new(3, setup.n_factors, small_tasks, setup.noise_sd, 0);
    noise_cfg.seed = crate::rng::derive_seed(seed, TRIAL_STREAM, 3);
    noise_cfg.model_names = Some(vec!["N0".into(), "N1".into(), "N2".into()]);
    let (noise_group, _) = generate_with_abilities::<f64>(&noise_cfg, vec![vec![0.0; setup.n_factors]; 3])?;
    let small = stack_groups(&data_group, &noise_group)?;
    let robustness = robustness_from_matrix(&small)?;

    let relevance = relevance_ranking::<f64, &str>(&normalize_pipeline(&board)?, "target", CorrelationMetric::Kendall, None)?;
    let config = SelectionConfig { eps_c: 0.0, eps_r: 1.0, sigmoid_k: 1.0, log_robustness: false };
    let proxies = select_proxies(&relevance, &robustness, &config)?;

    let checkpoints = checkpoints_from_matrix(&ckpts);
    let predictions = predict_all(&proxies, &checkpoints, Aggregation::WeightedMean)?;
    let latent = ckpt_truth.latent_along("target").expect("target task present");
    let latent_pairs: Vec<(String, f64)> =
        ckpt_truth.models.iter().cloned().zip(latent.iter().copied()).collect();
    let latent_rank = ScoredRanking::new(Default::default(), &latent_pairs);
    let proxy = count_discordant_pairs(&ScoredRanking::from_predictions(&predictions), &latent_rank)?;
    let target = count_discordant_pairs(
        &ScoredRanking::from_checkpoints(&checkpoints, "target", Default::default())?,
        &latent_rank,
    )?;
    Ok(MaskingTrial {
        proxy_discordant: proxy.discordant_pairs,
        target_discordant: target.discordant_pairs,
        total_pairs: proxy.total_pairs,
        proxies: proxies.entries.len(),
    })
}

fn stack_groups(data: &ScoreMatrix<f64>, noise: &ScoreMatrix<f64>) -> Result<ScoreMatrix<f64>> {
    let mut models = Vec::new();
    let mut rows = Vec::new();
    for (m, g) in [(data, Group::DataVariability), (noise, Group::RandomNoise)] {
        let dense = m.dense()?;
        for (id, row) in m.models().iter().zip(dense) {
            models.push(id.clone().with_group(g));
            rows.push(row);
        }
    }
    ScoreMatrix::from_complete(models, data.tasks().to_vec(), rows)
}

/// Per-metric (s, r) from one consistency trial.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyTrial {
    pub pearson: (f64, f64),
    pub kendall: (f64, f64),
}

/// Tasks are monotone but nonlinear functions (logistic, exponential,
/// cubic) of one shared latent ability perturbed by task-level noise of
/// random size; the target is one more such task.
pub fn metric_consistency(seed: u64, n_models: usize, n_tasks: usize, config: &ConsistencyConfig) -> Result<ConsistencyTrial> {
    let mut rng = stream_rng(seed, TRIAL_STREAM, 4);
    let ability: Vec<f64> = (0..n_models).map(|_| StandardNormal.sample(&mut rng)).collect();
    let names = task_names(n_tasks);
    let mut cols = Vec::with_capacity(n_tasks);
    for j in 0..n_tasks {
        let steep: f64 = rng.random_range(0.5..3.0);
        let shift: f64 = rng.random_range(-1.0..1.0);
        let noise_sd: f64 = rng.random_range(0.05..0.5);
        let col: Vec<f64> = ability
            .iter()
            .map(|&a| {
                let noise: f64 = StandardNormal.sample(&mut rng);
                let x = a + noise_sd * noise;
                match j % 3 {
                    0 => 100.0 / (1.0 + (-steep * (x - shift)).exp()),
                    1 => (steep * x).exp(),
                    _ => x.powi(3) + shift,
                }
            })
            .collect();
        cols.push(col);
    }
    let rows: Vec<Vec<f64>> = (0..n_models).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
    let models: Vec<String> = (0..n_models).map(|i| format!("M{i:03}")).collect();
    let matrix = ScoreMatrix::from_labels(&models, &names, rows)?;
    let cfg = config.clone().with_seed(seed).with_metrics(&[CorrelationMetric::Pearson, CorrelationMetric::Kendall]);
    let report = consistency_on_normalized(&normalize_pipeline(&matrix)?, "target", &cfg)?;
    let get = |m| {
        let c = report.get(m).expect("metric evaluated");
        (c.baseline_index, c.sampling_index)
    };
    Ok(ConsistencyTrial { pearson: get(CorrelationMetric::Pearson), kendall: get(CorrelationMetric::Kendall) })
}

/// Median of a non-empty slice.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}
