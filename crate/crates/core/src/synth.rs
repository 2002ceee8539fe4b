//! Seeded synthetic score matrices with a known latent factor structure.
//!
//! Each model gets an ability vector drawn i.i.d. standard normal per
//! factor; each task has a loading vector. The latent signal of a cell is
//! `<ability, loading>`, mapped to the 0–100 score range by the task's link:
//!
//! * `linear`: `offset + scale * signal`
//! * `logistic_emergence`: `100 / (1 + exp(-steepness * (signal - threshold)))`,
//!   which stays near the floor until the signal crosses the threshold.
//!
//! Gaussian noise (`noise_sd`, score units) is added and the result clipped
//! to `[0, 100]`.
//!
//! Randomness comes from ChaCha8 streams keyed by `(seed, stream, counter)`
//! (see [`crate::rng`]): one stream per model for abilities, one per cell
//! for noise. Output does not depend on generation order.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{ModelId, ScoreMatrix, TaskId};
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::scalar::Scalar;

const ABILITY_STREAM: u64 = 0x5359_4e54_4142; // "SYNTAB"
const NOISE_STREAM: u64 = 0x5359_4e54_4e53; // "SYNTNS"

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    #[default]
    Linear,
    LogisticEmergence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthTask {
    pub name: String,
    pub loadings: Vec<f64>,
    /// Overrides the config-wide link.
    #[serde(default)]
    pub link: Option<Link>,
}

impl SynthTask {
    pub fn new(name: &str, loadings: &[f64]) -> Self {
        SynthTask { name: name.to_string(), loadings: loadings.to_vec(), link: None }
    }

    pub fn with_link(mut self, link: Link) -> Self {
        self.link = Some(link);
        self
    }
}

fn default_steepness() -> f64 {
    4.0
}
fn default_offset() -> f64 {
    50.0
}
fn default_scale() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_models: usize,
    pub n_factors: usize,
    pub tasks: Vec<SynthTask>,
    /// Standard deviation of additive score noise.
    pub noise_sd: f64,
    #[serde(default)]
    pub link: Link,
    /// Signal level (latent units) at which the logistic link reaches 50.
    #[serde(default)]
    pub emergence_threshold: f64,
    #[serde(default = "default_steepness")]
    pub emergence_steepness: f64,
    #[serde(default = "default_offset")]
    pub linear_offset: f64,
    #[serde(default = "default_scale")]
    pub linear_scale: f64,
    /// Added to every drawn ability component.
    #[serde(default)]
    pub ability_shift: f64,
    /// Row labels; defaults to `M000`, `M001`, ...
    #[serde(default)]
    pub model_names: Option<Vec<String>>,
    pub seed: u64,
}

impl SynthConfig {
    pub fn new(n_models: usize, n_factors: usize, tasks: Vec<SynthTask>, noise_sd: f64, seed: u64) -> Self {
        SynthConfig {
            n_models,
            n_factors,
            tasks,
            noise_sd,
            link: Link::Linear,
            emergence_threshold: 0.0,
            emergence_steepness: default_steepness(),
            linear_offset: default_offset(),
            linear_scale: default_scale(),
            ability_shift: 0.0,
            model_names: None,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidConfig(m));
        if self.n_models < 2 {
            return fail("n_models must be at least 2".into());
        }
        if self.n_factors == 0 || self.tasks.is_empty() {
            return fail("need at least one factor and one task".into());
        }
        for t in &self.tasks {
            if t.loadings.len() != self.n_factors {
                return fail(format!("task {} has {} loadings, expected {}", t.name, t.loadings.len(), self.n_factors));
            }
            if t.loadings.iter().any(|v| !v.is_finite()) {
                return fail(format!("task {} has non-finite loadings", t.name));
            }
        }
        if !(self.noise_sd >= 0.0) || !self.noise_sd.is_finite() {
            return fail(format!("noise_sd must be finite and >= 0, got {}", self.noise_sd));
        }
        if !(self.emergence_steepness > 0.0) {
            return fail("emergence_steepness must be > 0".into());
        }
        if let Some(names) = &self.model_names {
            if names.len() != self.n_models {
                return fail(format!("{} model names for {} models", names.len(), self.n_models));
            }
        }
        Ok(())
    }

    fn link_of(&self, task: &SynthTask) -> Link {
        task.link.unwrap_or(self.link)
    }

    fn apply_link(&self, link: Link, signal: f64) -> f64 {
        match link {
            Link::Linear => self.linear_offset + self.linear_scale * signal,
            Link::LogisticEmergence => {
                100.0 / (1.0 + (-self.emergence_steepness * (signal - self.emergence_threshold)).exp())
            }
        }
    }

    fn names(&self) -> Vec<String> {
        self.model_names
            .clone()
            .unwrap_or_else(|| (0..self.n_models).map(|i| format!("M{i:03}")).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskTruth {
    pub name: String,
    pub loadings: Vec<f64>,
    pub link: Link,
}

/// Ground truth behind a generated matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthTruth {
    pub seed: u64,
    pub models: Vec<String>,
    /// One ability vector per model.
    pub abilities: Vec<Vec<f64>>,
    pub tasks: Vec<TaskTruth>,
    /// Cells pushed back into `[0, 100]` after noise.
    pub clipped_cells: usize,
}

impl SynthTruth {
    /// Cosine similarity of two tasks' loading vectors.
    pub fn relatedness(&self, a: &str, b: &str) -> Option<f64> {
        let la = &self.tasks.iter().find(|t| t.name == a)?.loadings;
        let lb = &self.tasks.iter().find(|t| t.name == b)?.loadings;
        Some(cosine(la, lb))
    }

    /// Scalar latent ability of each model along a task's loading direction.
    pub fn latent_along(&self, task: &str) -> Option<Vec<f64>> {
        let l = &self.tasks.iter().find(|t| t.name == task)?.loadings;
        Some(self.abilities.iter().map(|a| dot(a, l)).collect())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot(a, b) / (na * nb)
    }
}

/// Draws abilities from the config's seed and generates the matrix.
pub fn generate<T: Scalar>(config: &SynthConfig) -> Result<(ScoreMatrix<T>, SynthTruth)> {
    config.validate()?;
    let abilities = (0..config.n_models)
        .map(|i| {
            let mut rng = stream_rng(config.seed, ABILITY_STREAM, i as u64);
            (0..config.n_factors)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    z + config.ability_shift
                })
                .collect()
        })
        .collect();
    generate_with_abilities(config, abilities)
}

/// Generates scores for caller-supplied abilities (one vector per model).
pub fn generate_with_abilities<T: Scalar>(
    config: &SynthConfig,
    abilities: Vec<Vec<f64>>,
) -> Result<(ScoreMatrix<T>, SynthTruth)> {
    config.validate()?;
    if abilities.len() != config.n_models || abilities.iter().any(|a| a.len() != config.n_factors) {
        return Err(Error::InvalidConfig("ability matrix does not match n_models x n_factors".into()));
    }
    let n_tasks = config.tasks.len();
    let mut clipped = 0;
    let mut rows = Vec::with_capacity(config.n_models);
    for (i, ability) in abilities.iter().enumerate() {
        let mut row = Vec::with_capacity(n_tasks);
        for (j, task) in config.tasks.iter().enumerate() {
            let clean = config.apply_link(config.link_of(task), dot(ability, &task.loadings));
            let noise = if config.noise_sd > 0.0 {
                let mut rng = stream_rng(config.seed, NOISE_STREAM, (i * n_tasks + j) as u64);
                let z: f64 = StandardNormal.sample(&mut rng);
                config.noise_sd * z
            } else {
                0.0
            };
            let raw = clean + noise;
            let v = raw.clamp(0.0, 100.0);
            if v != raw {
                clipped += 1;
            }
            row.push(T::lit(v));
        }
        rows.push(row);
    }
    let names = config.names();
    let models = names.iter().map(ModelId::new).collect::<Result<Vec<_>>>()?;
    let tasks = config.tasks.iter().map(|t| TaskId::new(&t.name)).collect::<Result<Vec<_>>>()?;
    let matrix = ScoreMatrix::from_complete(models, tasks, rows)?;
    let truth = SynthTruth {
        seed: config.seed,
        models: names,
        abilities,
        tasks: config
            .tasks
            .iter()
            .map(|t| TaskTruth { name: t.name.clone(), loadings: t.loadings.clone(), link: config.link_of(t) })
            .collect(),
        clipped_cells: clipped,
    };
    Ok((matrix, truth))
}
