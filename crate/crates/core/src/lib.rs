//! Proxy-task selection for predicting emergent abilities from benchmark
//! score matrices.
//!
//! The pipeline: standardize a models × tasks score matrix ([`normalize`]),
//! pick a correlation metric by sampling consistency ([`consistency`]), rank
//! candidate tasks by relevance to a target task ([`correlation`]), score
//! their robustness from small-model ensembles ([`robustness`]), weight the
//! survivors and predict checkpoints from them ([`selection`]). [`pipeline`]
//! chains the stages and [`report`] renders text and SVG output.
//!
//! Core math is generic over [`Scalar`] (`f32` or `f64`); the aliases at the
//! crate root fix it to `f64`.

pub mod consistency;
pub mod correlation;
pub mod data;
pub mod error;
pub mod experiments;
pub mod normalize;
pub mod pipeline;
pub mod report;
pub mod robustness;
pub mod rng;
pub mod scalar;
pub mod selection;
pub mod stats;
pub mod synth;

pub use consistency::{select_metric, ConsistencyConfig, ConsistencyReport};
pub use correlation::CorrelationMetric;
pub use data::{Format, Group, ModelId, TaskId, Variant};
pub use error::{Error, ErrorClass, Result};
pub use pipeline::{run_all, PipelineConfig, RunBundle, RunSummary};
pub use scalar::Scalar;
pub use selection::{Aggregation, Orientation, RankComparison, Strategy};

pub type ScoreMatrix = data::ScoreMatrix<f64>;
pub type ScoreMatrixF32 = data::ScoreMatrix<f32>;
pub type NormalizedMatrix = normalize::NormalizedMatrix<f64>;
pub type NormalizedMatrixF32 = normalize::NormalizedMatrix<f32>;
pub type RelevanceRanking = correlation::RelevanceRanking<f64>;
pub type RobustnessReport = robustness::RobustnessReport<f64>;
pub type SelectionConfig = selection::SelectionConfig<f64>;
pub type ProxySet = selection::ProxySet<f64>;
pub type Prediction = selection::Prediction<f64>;
pub type ScoredRanking = selection::ScoredRanking<f64>;
pub type CheckpointScores = data::CheckpointScores<f64>;
