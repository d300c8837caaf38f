//! Scene metrics, model-graded ratings and pairwise preference ranking.

mod bradley_terry;
mod metrics;
mod rating;

pub use bradley_terry::{bradley_terry, BradleyTerryFit, RankingError, VoteTable};
pub use metrics::{aggregate, compute_metrics, scene_metrics, ExcludedScene, MetricsReport, SceneMetrics, OOB_TOLERANCE};
pub use rating::{
    evaluator_prompt, parse_grade, rate_scene, Criterion, Grade, RatingError, RatingReport, RunGrades,
    SceneViews, Stat, ViewImage, VisionClient, VisionRequest, EVALUATOR_PROMPT,
};
