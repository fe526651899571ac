use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ClassScore;
use crate::condition::ConditionTag;
use crate::matching::MatchResult;

/// Pooled per-class counts for one condition.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionTally {
    pub n_scenes: u64,
    pub classes: BTreeMap<u32, ClassScore>,
}

impl ConditionTally {
    pub fn merge(&mut self, other: &ConditionTally) {
        self.n_scenes += other.n_scenes;
        for (id, s) in &other.classes {
            self.classes
                .entry(*id)
                .or_insert_with(|| ClassScore::new(*id))
                .merge(s);
        }
    }
}

/// Dataset-level pooling of match results, keyed by condition.
///
/// `merge` is associative and commutative, so per-scene accumulators can be
/// built in parallel and combined in any order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScoreAccumulator {
    conditions: BTreeMap<ConditionTag, ConditionTally>,
}

impl ScoreAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(result: &MatchResult, tag: ConditionTag) -> Self {
        let mut acc = Self::new();
        acc.add(result, tag);
        acc
    }

    pub fn add(&mut self, result: &MatchResult, tag: ConditionTag) {
        let tally = self.conditions.entry(tag).or_default();
        tally.n_scenes += 1;
        for (&category, m) in &result.classes {
            if m.tp.is_empty() && m.fp.is_empty() && m.fn_.is_empty() {
                continue;
            }
            let s = tally
                .classes
                .entry(category)
                .or_insert_with(|| ClassScore::new(category));
            for pair in &m.tp {
                s.add_tp(pair);
            }
            s.fp += m.fp.len() as u64;
            s.fn_ += m.fn_.len() as u64;
        }
    }

    pub fn merge(mut self, other: ScoreAccumulator) -> ScoreAccumulator {
        for (tag, tally) in &other.conditions {
            self.conditions.entry(*tag).or_default().merge(tally);
        }
        self
    }

    pub fn conditions(&self) -> &BTreeMap<ConditionTag, ConditionTally> {
        &self.conditions
    }

    pub fn per_class(&self) -> BTreeMap<ConditionTag, BTreeMap<u32, ClassScore>> {
        self.conditions
            .iter()
            .map(|(t, tally)| (*t, tally.classes.clone()))
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.conditions.is_empty()
    }
}

/// Pools a stream of per-scene results.
pub fn accumulate<'a, I>(results: I) -> ScoreAccumulator
where
    I: IntoIterator<Item = (&'a MatchResult, ConditionTag)>,
{
    let mut acc = ScoreAccumulator::new();
    for (r, tag) in results {
        acc.add(r, tag);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::condition::{TimeOfDay, Weather};
    use crate::matching::{ClassMatches, MatchedPair};

    fn tp_only(category: u32, inter: u64, union: u64) -> MatchResult {
        let mut r = MatchResult::default();
        r.classes.insert(
            category,
            ClassMatches {
                tp: vec![MatchedPair {
                    gt_id: 1,
                    pred_id: 1,
                    intersection: inter,
                    union,
                }],
                ..Default::default()
            },
        );
        r
    }

    const FOG_DAY: ConditionTag = ConditionTag::new(Weather::Fog, TimeOfDay::Day);

    #[test]
    fn one_tp() {
        let r = tp_only(13, 3, 5);
        let acc = accumulate([(&r, FOG_DAY)]);
        let s = acc.per_class()[&FOG_DAY][&13];
        assert_eq!((s.tp, s.fp, s.fn_), (1, 0, 0));
        assert_eq!(s.iou_sum(), 0.6);
    }

    #[test]
    fn order_independent() {
        let a = tp_only(13, 3, 5);
        let mut b = tp_only(13, 7, 9);
        b.classes.get_mut(&13).unwrap().fp.push(4);
        let ab = accumulate([(&a, FOG_DAY), (&b, FOG_DAY)]);
        let ba = accumulate([(&b, FOG_DAY), (&a, FOG_DAY)]);
        assert_eq!(ab, ba);
        let merged = ScoreAccumulator::single(&b, FOG_DAY).merge(ScoreAccumulator::single(&a, FOG_DAY));
        assert_eq!(merged, ab);
    }

    #[test]
    fn empty_stream() {
        assert!(accumulate(std::iter::empty()).is_empty());
    }

    #[test]
    fn skips_void_only_classes() {
        let mut r = MatchResult::default();
        r.classes.insert(
            3,
            ClassMatches {
                void_excluded: vec![9],
                ..Default::default()
            },
        );
        let acc = accumulate([(&r, FOG_DAY)]);
        assert!(acc.per_class()[&FOG_DAY].is_empty());
        assert_eq!(acc.conditions()[&FOG_DAY].n_scenes, 1);
    }
}
