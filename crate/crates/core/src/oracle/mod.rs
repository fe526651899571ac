//! Brute-force reference evaluation.
//!
//! Nothing here reuses the contingency table or the metric pooling code: the
//! matcher enumerates every same-class pair and counts pixels directly, and
//! the scorer transcribes the PQ/SQ/RQ formulas on plain `f64` sums. The two
//! paths are compared by differential tests and `pqeval oracle-check`.

mod check;
mod synth;

pub use check::{differential_check, differential_spec, CheckSummary, Mismatch};
pub use synth::{generate_scene, Perturbation, Scene, SynthError, SynthSpec};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::condition::ConditionTag;
use crate::labels::PanopticLabelMap;
use crate::matching::{ClassMatches, MatchError, MatchResult, MatchedPair};
use crate::metrics::{Marginal, Quality, WeightConfig};

/// Largest side the quadratic reference matcher accepts.
pub const ORACLE_MAX_SIDE: u32 = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error("{width}x{height} exceeds the {ORACLE_MAX_SIDE}x{ORACLE_MAX_SIDE} reference limit")]
    TooLarge { width: u32, height: u32 },
}

/// Reference matcher: per-pixel set operations over all same-class pairs.
pub fn oracle_match(
    gt: &PanopticLabelMap,
    pred: &PanopticLabelMap,
) -> Result<MatchResult, OracleError> {
    if (gt.width(), gt.height()) != (pred.width(), pred.height()) {
        return Err(MatchError::DimensionMismatch {
            gt: (gt.width(), gt.height()),
            pred: (pred.width(), pred.height()),
        }
        .into());
    }
    if gt.void_id() != pred.void_id() {
        return Err(MatchError::VoidMismatch {
            gt: gt.void_id(),
            pred: pred.void_id(),
        }
        .into());
    }
    if gt.width() > ORACLE_MAX_SIDE || gt.height() > ORACLE_MAX_SIDE {
        return Err(OracleError::TooLarge {
            width: gt.width(),
            height: gt.height(),
        });
    }

    let void = gt.void_id();
    let g_ids = gt.ids();
    let p_ids = pred.ids();
    let mut gt_hit = vec![false; gt.segments().len()];
    let mut pred_hit = vec![false; pred.segments().len()];
    let mut result = MatchResult::default();

    for (gi, g) in gt.segments().iter().enumerate() {
        for (pi, p) in pred.segments().iter().enumerate() {
            if g.category_id != p.category_id {
                continue;
            }
            let mut inter = 0u64;
            let mut union = 0u64;
            for i in 0..g_ids.len() {
                let in_g = g_ids[i] == g.segment_id;
                let in_p = p_ids[i] == p.segment_id && g_ids[i] != void;
                if in_g && in_p {
                    inter += 1;
                }
                if in_g || in_p {
                    union += 1;
                }
            }
            if inter > 0 && inter * 2 > union {
                gt_hit[gi] = true;
                pred_hit[pi] = true;
                result
                    .classes
                    .entry(g.category_id)
                    .or_default()
                    .tp
                    .push(MatchedPair {
                        gt_id: g.segment_id,
                        pred_id: p.segment_id,
                        intersection: inter,
                        union,
                    });
            }
        }
    }

    for (gi, g) in gt.segments().iter().enumerate() {
        if !gt_hit[gi] {
            result.classes.entry(g.category_id).or_default().fn_.push(g.segment_id);
        }
    }
    for (pi, p) in pred.segments().iter().enumerate() {
        if pred_hit[pi] {
            continue;
        }
        let mut area = 0u64;
        let mut on_void = 0u64;
        for i in 0..p_ids.len() {
            if p_ids[i] == p.segment_id {
                area += 1;
                if g_ids[i] == void {
                    on_void += 1;
                }
            }
        }
        let class = result.classes.entry(p.category_id).or_default();
        if on_void * 2 > area {
            class.void_excluded.push(p.segment_id);
        } else {
            class.fp.push(p.segment_id);
        }
    }
    for c in result.classes.values_mut() {
        sort_class(c);
    }
    Ok(result)
}

fn sort_class(c: &mut ClassMatches) {
    c.tp.sort();
    c.fp.sort();
    c.fn_.sort();
    c.void_excluded.sort();
}

/// Reference scores for one subset.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSubset {
    /// Fractions, present classes only.
    pub classes: BTreeMap<u32, Quality>,
    /// Class means in percent.
    pub mean: Quality,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleScores {
    pub conditions: BTreeMap<ConditionTag, OracleSubset>,
    pub marginals: BTreeMap<Marginal, Option<OracleSubset>>,
    /// `None` when the weights over scored conditions sum to zero.
    pub weighted: Option<(f64, f64, f64)>,
}

#[derive(Default)]
struct RawClass {
    ious: Vec<f64>,
    fp: usize,
    fn_: usize,
}

fn score_subset<'a>(results: impl Iterator<Item = &'a MatchResult>) -> Option<OracleSubset> {
    let mut raw: BTreeMap<u32, RawClass> = BTreeMap::new();
    for r in results {
        for (&cat, m) in &r.classes {
            let e = raw.entry(cat).or_default();
            e.ious
                .extend(m.tp.iter().map(|t| t.intersection as f64 / t.union as f64));
            e.fp += m.fp.len();
            e.fn_ += m.fn_.len();
        }
    }
    let mut classes = BTreeMap::new();
    for (cat, c) in raw {
        let tp = c.ious.len() as f64;
        let fp = c.fp as f64;
        let fn_ = c.fn_ as f64;
        if tp + fp + fn_ == 0.0 {
            continue;
        }
        let iou_sum: f64 = c.ious.iter().sum();
        let pq = iou_sum / (tp + 0.5 * fp + 0.5 * fn_);
        let sq = if tp > 0.0 { iou_sum / tp } else { 0.0 };
        let rq = tp / (tp + 0.5 * fp + 0.5 * fn_);
        classes.insert(cat, Quality { pq, sq, rq });
    }
    if classes.is_empty() {
        return None;
    }
    let n = classes.len() as f64;
    let mean = Quality {
        pq: 100.0 * classes.values().map(|q| q.pq).sum::<f64>() / n,
        sq: 100.0 * classes.values().map(|q| q.sq).sum::<f64>() / n,
        rq: 100.0 * classes.values().map(|q| q.rq).sum::<f64>() / n,
    };
    Some(OracleSubset { classes, mean })
}

/// Reference scoring of tagged match results: per-condition and marginal
/// class means, and the normalized weighted means.
pub fn oracle_pq(results: &[(MatchResult, ConditionTag)], weights: &WeightConfig) -> OracleScores {
    let mut conditions = BTreeMap::new();
    for tag in ConditionTag::all() {
        if let Some(s) = score_subset(results.iter().filter(|r| r.1 == tag).map(|r| &r.0)) {
            conditions.insert(tag, s);
        }
    }
    let marginals = Marginal::ALL
        .into_iter()
        .map(|m| {
            (
                m,
                score_subset(results.iter().filter(|r| m.includes(r.1)).map(|r| &r.0)),
            )
        })
        .collect();

    let mut num = (0.0, 0.0, 0.0);
    let mut den = 0.0;
    for (tag, s) in &conditions {
        let w = weights.get(*tag).unwrap_or(0.0);
        num.0 += w * s.mean.pq;
        num.1 += w * s.mean.sq;
        num.2 += w * s.mean.rq;
        den += w;
    }
    let weighted = (den > 0.0).then(|| (num.0 / den, num.1 / den, num.2 / den));
    OracleScores {
        conditions,
        marginals,
        weighted,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::match_pair;

    #[test]
    fn identity_is_all_tp() {
        let m = PanopticLabelMap::from_grid(3, 1, 0, vec![1, 2, 2], &[(1, 0), (2, 5)]).unwrap();
        let r = oracle_match(&m, &m).unwrap();
        assert_eq!(r.tp_count(), 2);
        assert!(r.classes.values().flat_map(|c| &c.tp).all(|t| t.iou() == 1.0));
        assert_eq!(r, match_pair(&m, &m).unwrap());
    }

    #[test]
    fn single_tp_scores() {
        let mut r = MatchResult::default();
        r.classes.entry(13).or_default().tp.push(MatchedPair {
            gt_id: 1,
            pred_id: 2,
            intersection: 3,
            union: 5,
        });
        let tag: ConditionTag = "snow/night".parse().unwrap();
        let s = oracle_pq(&[(r, tag)], &WeightConfig::default());
        let q = s.conditions[&tag].classes[&13];
        assert_eq!(q.pq, 0.6);
        assert!((s.weighted.unwrap().0 - 60.0).abs() < 1e-12);
    }

    #[test]
    fn empty_is_absent() {
        let s = oracle_pq(&[], &WeightConfig::default());
        assert!(s.conditions.is_empty());
        assert!(s.weighted.is_none());
        assert!(s.marginals.values().all(Option::is_none));
    }

    #[test]
    fn rejects_large_maps() {
        let m = PanopticLabelMap::void(65, 2, 0);
        assert!(matches!(
            oracle_match(&m, &m),
            Err(OracleError::TooLarge { .. })
        ));
    }
}
