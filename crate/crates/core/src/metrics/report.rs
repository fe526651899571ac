use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{
    class_pq, condition_scores, mean_quality, weighted_scores, ClassScore, ConditionScores,
    MetricsError, Quality, ScoreAccumulator, WeightConfig, WeightedScores,
};
use crate::condition::{ConditionTag, TimeOfDay, Weather};

/// Marginal pools of the condition grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Marginal {
    Clear,
    Fog,
    Rain,
    Snow,
    Day,
    Night,
    All,
}

impl Marginal {
    pub const ALL: [Marginal; 7] = [
        Marginal::Clear,
        Marginal::Fog,
        Marginal::Rain,
        Marginal::Snow,
        Marginal::Day,
        Marginal::Night,
        Marginal::All,
    ];

    pub fn includes(self, c: ConditionTag) -> bool {
        match self {
            Marginal::Clear => c.weather == Weather::Clear,
            Marginal::Fog => c.weather == Weather::Fog,
            Marginal::Rain => c.weather == Weather::Rain,
            Marginal::Snow => c.weather == Weather::Snow,
            Marginal::Day => c.tod == TimeOfDay::Day,
            Marginal::Night => c.tod == TimeOfDay::Night,
            Marginal::All => true,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Marginal::Clear => "Clear",
            Marginal::Fog => "Fog",
            Marginal::Rain => "Rain",
            Marginal::Snow => "Snow",
            Marginal::Day => "Day",
            Marginal::Night => "Night",
            Marginal::All => "All",
        }
    }
}

impl fmt::Display for Marginal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Scores per marginal pool, in percent. `None` where the pool is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionBreakdown {
    pub cells: BTreeMap<Marginal, Option<Quality>>,
}

impl ConditionBreakdown {
    pub fn get(&self, m: Marginal) -> Option<Quality> {
        self.cells.get(&m).copied().flatten()
    }
}

/// Pooled result of one class over the whole evaluation set, in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassResult {
    pub category_id: u32,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub pq: f64,
    pub sq: f64,
    pub rq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub wpq: f64,
    pub wsq: f64,
    pub wrq: f64,
    pub pq_all: f64,
    pub sq_all: f64,
    pub rq_all: f64,
    pub weights_used: WeightConfig,
    pub per_condition: Vec<ConditionScores>,
    pub breakdown: ConditionBreakdown,
    pub per_class: Vec<ClassResult>,
}

impl ScoreReport {
    pub fn weighted(&self) -> WeightedScores {
        WeightedScores {
            wpq: self.wpq,
            wsq: self.wsq,
            wrq: self.wrq,
        }
    }
}

fn pool<'a>(per_condition: impl IntoIterator<Item = &'a ConditionScores>) -> BTreeMap<u32, ClassScore> {
    let mut pooled: BTreeMap<u32, ClassScore> = BTreeMap::new();
    for c in per_condition {
        for s in &c.per_class {
            pooled
                .entry(s.category_id)
                .or_insert_with(|| ClassScore::new(s.category_id))
                .merge(s);
        }
    }
    pooled
}

fn breakdown_of(per_condition: &[ConditionScores]) -> ConditionBreakdown {
    let cells = Marginal::ALL
        .into_iter()
        .map(|m| {
            let pooled = pool(per_condition.iter().filter(|c| m.includes(c.condition)));
            (m, mean_quality(pooled.values()).ok())
        })
        .collect();
    ConditionBreakdown { cells }
}

/// Marginal scores, pooling raw counts of the member conditions before
/// scoring (`fog` pools fog/day and fog/night, `day` the four day cells).
pub fn condition_breakdown(report: &ScoreReport) -> ConditionBreakdown {
    breakdown_of(&report.per_condition)
}

/// Assembles the full report. Conditions whose scenes contain no present
/// class carry no score and are left out.
pub fn build_report(
    acc: &ScoreAccumulator,
    weights: &WeightConfig,
) -> Result<ScoreReport, MetricsError> {
    let mut per_condition = Vec::new();
    for (&tag, tally) in acc.conditions() {
        match condition_scores(tag, &tally.classes, tally.n_scenes) {
            Ok(c) => per_condition.push(c),
            Err(MetricsError::NoPresentClasses) => continue,
            Err(e) => return Err(e),
        }
    }
    if per_condition.is_empty() {
        return Err(MetricsError::NoPresentClasses);
    }
    let weighted = weighted_scores(&per_condition, weights)?;
    let breakdown = breakdown_of(&per_condition);
    let all = breakdown
        .get(Marginal::All)
        .ok_or(MetricsError::NoPresentClasses)?;
    let per_class = pool(&per_condition)
        .values()
        .filter_map(|s| {
            class_pq(s).map(|q| {
                let q = q.percent();
                ClassResult {
                    category_id: s.category_id,
                    tp: s.tp,
                    fp: s.fp,
                    fn_: s.fn_,
                    pq: q.pq,
                    sq: q.sq,
                    rq: q.rq,
                }
            })
        })
        .collect();

    Ok(ScoreReport {
        wpq: weighted.wpq,
        wsq: weighted.wsq,
        wrq: weighted.wrq,
        pq_all: all.pq,
        sq_all: all.sq,
        rq_all: all.rq,
        weights_used: weights.clone(),
        per_condition,
        breakdown,
        per_class,
    })
}
