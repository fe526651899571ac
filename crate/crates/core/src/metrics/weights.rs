use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ConditionScores, MetricsError};
use crate::condition::{ConditionTag, TimeOfDay, Weather};

/// Per-condition weights for the weighted scores.
///
/// Serialized as `{"<weather>/<tod>": λ}`. Every λ is finite and `≥ 0`, and
/// at least one is positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<ConditionTag, f64>", into = "BTreeMap<ConditionTag, f64>")]
pub struct WeightConfig {
    weights: BTreeMap<ConditionTag, f64>,
}

impl WeightConfig {
    pub fn new(weights: BTreeMap<ConditionTag, f64>) -> Result<Self, MetricsError> {
        for (&condition, &value) in &weights {
            if !value.is_finite() || value < 0.0 {
                return Err(MetricsError::InvalidWeight { condition, value });
            }
        }
        if !weights.values().any(|&w| w > 0.0) {
            return Err(MetricsError::ZeroWeightSum);
        }
        Ok(Self { weights })
    }

    /// Same weight for every condition.
    pub fn uniform() -> Self {
        Self::new(ConditionTag::all().into_iter().map(|c| (c, 1.0)).collect())
            .expect("uniform weights are valid")
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, MetricsError> {
        serde_json::from_slice(bytes).map_err(|e| MetricsError::Json(e.to_string()))
    }

    pub fn get(&self, condition: ConditionTag) -> Option<f64> {
        self.weights.get(&condition).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ConditionTag, f64)> + '_ {
        self.weights.iter().map(|(c, w)| (*c, *w))
    }

    pub fn total(&self) -> f64 {
        self.weights.values().sum()
    }
}

/// Clear daytime at 0.5, the other seven conditions at 1.
impl Default for WeightConfig {
    fn default() -> Self {
        let clear_day = ConditionTag::new(Weather::Clear, TimeOfDay::Day);
        Self::new(
            ConditionTag::all()
                .into_iter()
                .map(|c| (c, if c == clear_day { 0.5 } else { 1.0 }))
                .collect(),
        )
        .expect("default weights are valid")
    }
}

impl TryFrom<BTreeMap<ConditionTag, f64>> for WeightConfig {
    type Error = MetricsError;

    fn try_from(value: BTreeMap<ConditionTag, f64>) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<WeightConfig> for BTreeMap<ConditionTag, f64> {
    fn from(value: WeightConfig) -> Self {
        value.weights
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedScores {
    pub wpq: f64,
    pub wsq: f64,
    pub wrq: f64,
}

/// Weighted means of the per-condition percentages:
/// `wX = Σ λ_c·X_c / Σ λ_c` over the supplied conditions.
///
/// Evaluated as `X_0 + Σ λ_c·(X_c − X_0) / Σ λ_c` around the first
/// condition's score, so equal condition scores come back exactly.
pub fn weighted_scores(
    per_condition: &[ConditionScores],
    weights: &WeightConfig,
) -> Result<WeightedScores, MetricsError> {
    let Some(pivot) = per_condition.first() else {
        return Err(MetricsError::ZeroWeightSum);
    };
    let mut total = 0.0;
    let (mut pq, mut sq, mut rq) = (0.0, 0.0, 0.0);
    for c in per_condition {
        let w = weights
            .get(c.condition)
            .ok_or(MetricsError::MissingWeight(c.condition))?;
        total += w;
        pq += w * (c.pq - pivot.pq);
        sq += w * (c.sq - pivot.sq);
        rq += w * (c.rq - pivot.rq);
    }
    if total <= 0.0 {
        return Err(MetricsError::ZeroWeightSum);
    }
    Ok(WeightedScores {
        wpq: pivot.pq + pq / total,
        wsq: pivot.sq + sq / total,
        wrq: pivot.rq + rq / total,
    })
}
