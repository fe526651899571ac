//! Panoptic quality scores: per class, per condition, marginal pools and
//! condition-weighted aggregates.
//!
//! All pooling is dataset-level: TP/FP/FN counts and IoU sums are summed over
//! every scene of a subset before any ratio is taken. A subset's PQ/SQ/RQ is
//! the unweighted mean over the classes present in it, reported as a
//! percentage.

mod accumulate;
mod rank;
mod report;
mod score;
mod weights;

pub use accumulate::{accumulate, ConditionTally, ScoreAccumulator};
pub use rank::{rank_submissions, LeaderboardRow};
pub use report::{build_report, condition_breakdown, ClassResult, ConditionBreakdown, Marginal, ScoreReport};
pub use score::{class_pq, ClassScore, Quality};
pub use weights::{weighted_scores, WeightConfig, WeightedScores};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::condition::ConditionTag;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("no class is present in the subset")]
    NoPresentClasses,
    #[error("weights sum to zero over the scored conditions")]
    ZeroWeightSum,
    #[error("no weight configured for condition {0}")]
    MissingWeight(ConditionTag),
    #[error("invalid weight {value} for condition {condition}")]
    InvalidWeight { condition: ConditionTag, value: f64 },
    #[error("malformed JSON: {0}")]
    Json(String),
}

/// Scores of one condition subset, as percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionScores {
    pub condition: ConditionTag,
    pub pq: f64,
    pub sq: f64,
    pub rq: f64,
    pub per_class: Vec<ClassScore>,
    pub n_scenes: u64,
}

/// Mean quality over the present classes of a pooled tally, as percentages.
pub fn mean_quality<'a, I>(classes: I) -> Result<Quality, MetricsError>
where
    I: IntoIterator<Item = &'a ClassScore>,
{
    let (mut n, mut pq, mut sq, mut rq) = (0usize, 0.0, 0.0, 0.0);
    for q in classes.into_iter().filter_map(class_pq) {
        n += 1;
        pq += q.pq;
        sq += q.sq;
        rq += q.rq;
    }
    if n == 0 {
        return Err(MetricsError::NoPresentClasses);
    }
    let n = n as f64;
    Ok(Quality {
        pq: pq / n,
        sq: sq / n,
        rq: rq / n,
    }
    .percent())
}

/// Scores one condition from its pooled per-class counts.
pub fn condition_scores(
    condition: ConditionTag,
    per_class: &BTreeMap<u32, ClassScore>,
    n_scenes: u64,
) -> Result<ConditionScores, MetricsError> {
    let q = mean_quality(per_class.values())?;
    Ok(ConditionScores {
        condition,
        pq: q.pq,
        sq: q.sq,
        rq: q.rq,
        per_class: per_class.values().copied().collect(),
        n_scenes,
    })
}
