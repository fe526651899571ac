//! Ground-truth / prediction contingency tables and IoU segment matching.
//!
//! A prediction `p` and ground-truth segment `g` of the same category match
//! when `IoU(p, g) > 0.5`, where prediction pixels lying on void ground truth
//! are removed from the union. The comparison is done on integer pixel counts
//! (`2·intersection > union`), so there is no rounding at the threshold.
//! Because a segment can overlap more than half of at most one disjoint
//! partner, matches are unique without any tie-breaking.
//!
//! Unmatched ground truth is a false negative. Unmatched predictions are
//! false positives unless more than half of their pixels lie on void ground
//! truth, in which case they are set aside as void-dominated.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labels::PanopticLabelMap;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatchError {
    #[error("dimension mismatch: ground truth {gt:?}, prediction {pred:?}")]
    DimensionMismatch { gt: (u32, u32), pred: (u32, u32) },
    #[error("void id mismatch: ground truth uses {gt}, prediction uses {pred}")]
    VoidMismatch { gt: u32, pred: u32 },
}

/// Pixel-overlap counts between every ground-truth and predicted segment.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ContingencyTable {
    /// `(gt_id, pred_id) -> intersection` for non-void pairs with overlap.
    pub entries: BTreeMap<(u32, u32), u64>,
    pub gt_areas: BTreeMap<u32, u64>,
    pub pred_areas: BTreeMap<u32, u64>,
    /// Per prediction: pixels that fall on void ground truth.
    pub void_overlap: BTreeMap<u32, u64>,
    /// Per ground-truth segment: pixels the prediction left void.
    pub unpredicted: BTreeMap<u32, u64>,
    /// Pixels void in both maps.
    pub void_both: u64,
}

impl ContingencyTable {
    pub fn total(&self) -> u64 {
        self.entries.values().sum::<u64>()
            + self.void_overlap.values().sum::<u64>()
            + self.unpredicted.values().sum::<u64>()
            + self.void_both
    }

    pub fn intersection(&self, gt_id: u32, pred_id: u32) -> u64 {
        self.entries.get(&(gt_id, pred_id)).copied().unwrap_or(0)
    }
}

/// Counts overlaps in a single pass over the pixels.
pub fn build_contingency(
    gt: &PanopticLabelMap,
    pred: &PanopticLabelMap,
) -> Result<ContingencyTable, MatchError> {
    if (gt.width(), gt.height()) != (pred.width(), pred.height()) {
        return Err(MatchError::DimensionMismatch {
            gt: (gt.width(), gt.height()),
            pred: (pred.width(), pred.height()),
        });
    }
    if gt.void_id() != pred.void_id() {
        return Err(MatchError::VoidMismatch {
            gt: gt.void_id(),
            pred: pred.void_id(),
        });
    }

    // Dense slot per segment; the last slot of each side is void.
    let gt_slots = slot_index(gt);
    let pred_slots = slot_index(pred);
    let n_gt = gt.segments().len();
    let n_pred = pred.segments().len();
    let stride = n_pred + 1;
    let mut counts = vec![0u64; (n_gt + 1) * stride];

    let (mut last_g, mut slot_g) = (gt.void_id(), n_gt);
    let (mut last_p, mut slot_p) = (pred.void_id(), n_pred);
    for (&g, &p) in gt.ids().iter().zip(pred.ids()) {
        if g != last_g {
            last_g = g;
            slot_g = gt_slots[&g];
        }
        if p != last_p {
            last_p = p;
            slot_p = pred_slots[&p];
        }
        counts[slot_g * stride + slot_p] += 1;
    }

    let mut table = ContingencyTable::default();
    for s in gt.segments() {
        table.gt_areas.insert(s.segment_id, s.area);
    }
    for s in pred.segments() {
        table.pred_areas.insert(s.segment_id, s.area);
    }
    for (gi, g) in gt.segments().iter().enumerate() {
        for (pi, p) in pred.segments().iter().enumerate() {
            let c = counts[gi * stride + pi];
            if c > 0 {
                table.entries.insert((g.segment_id, p.segment_id), c);
            }
        }
        let c = counts[gi * stride + n_pred];
        if c > 0 {
            table.unpredicted.insert(g.segment_id, c);
        }
    }
    for (pi, p) in pred.segments().iter().enumerate() {
        let c = counts[n_gt * stride + pi];
        if c > 0 {
            table.void_overlap.insert(p.segment_id, c);
        }
    }
    table.void_both = counts[n_gt * stride + n_pred];
    Ok(table)
}

fn slot_index(map: &PanopticLabelMap) -> HashMap<u32, usize> {
    let mut idx: HashMap<u32, usize> = map
        .segments()
        .iter()
        .enumerate()
        .map(|(i, s)| (s.segment_id, i))
        .collect();
    idx.insert(map.void_id(), map.segments().len());
    idx
}

/// A true-positive pair with its exact pixel counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MatchedPair {
    pub gt_id: u32,
    pub pred_id: u32,
    pub intersection: u64,
    /// Union with void-overlapping prediction pixels removed.
    pub union: u64,
}

impl MatchedPair {
    pub fn iou(&self) -> f64 {
        self.intersection as f64 / self.union as f64
    }
}

/// Per-category outcome for one image pair. All lists are sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassMatches {
    pub tp: Vec<MatchedPair>,
    pub fp: Vec<u32>,
    #[serde(rename = "fn")]
    pub fn_: Vec<u32>,
    /// Unmatched predictions that lie mostly on void ground truth.
    pub void_excluded: Vec<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchResult {
    pub classes: BTreeMap<u32, ClassMatches>,
}

impl MatchResult {
    pub fn tp_count(&self) -> usize {
        self.classes.values().map(|c| c.tp.len()).sum()
    }

    pub fn fp_count(&self) -> usize {
        self.classes.values().map(|c| c.fp.len()).sum()
    }

    pub fn fn_count(&self) -> usize {
        self.classes.values().map(|c| c.fn_.len()).sum()
    }

    /// Every `(intersection, union)` over all classes, sorted.
    pub fn iou_multiset(&self) -> Vec<(u64, u64)> {
        let mut v: Vec<_> = self
            .classes
            .values()
            .flat_map(|c| c.tp.iter().map(|t| (t.intersection, t.union)))
            .collect();
        v.sort_unstable();
        v
    }

    fn class(&mut self, category_id: u32) -> &mut ClassMatches {
        self.classes.entry(category_id).or_default()
    }
}

/// Applies the `IoU > 0.5`, same-category rule to a contingency table.
pub fn match_segments(
    table: &ContingencyTable,
    gt: &PanopticLabelMap,
    pred: &PanopticLabelMap,
) -> MatchResult {
    let gt_cat: HashMap<u32, u32> = gt
        .segments()
        .iter()
        .map(|s| (s.segment_id, s.category_id))
        .collect();
    let pred_cat: HashMap<u32, u32> = pred
        .segments()
        .iter()
        .map(|s| (s.segment_id, s.category_id))
        .collect();

    let mut result = MatchResult::default();
    let mut gt_matched: HashMap<u32, u32> = HashMap::new();
    let mut pred_matched: HashMap<u32, u32> = HashMap::new();

    for (&(g, p), &inter) in &table.entries {
        let category = gt_cat[&g];
        if category != pred_cat[&p] {
            continue;
        }
        let void = table.void_overlap.get(&p).copied().unwrap_or(0);
        let union = table.gt_areas[&g] + table.pred_areas[&p] - inter - void;
        if 2 * inter > union {
            let prev_g = gt_matched.insert(g, p);
            let prev_p = pred_matched.insert(p, g);
            assert!(
                prev_g.is_none() && prev_p.is_none(),
                "segment matched twice: gt {g}, pred {p}"
            );
            result.class(category).tp.push(MatchedPair {
                gt_id: g,
                pred_id: p,
                intersection: inter,
                union,
            });
        }
    }

    for s in gt.segments() {
        if !gt_matched.contains_key(&s.segment_id) {
            result.class(s.category_id).fn_.push(s.segment_id);
        }
    }
    for s in pred.segments() {
        if pred_matched.contains_key(&s.segment_id) {
            continue;
        }
        let void = table.void_overlap.get(&s.segment_id).copied().unwrap_or(0);
        let class = result.class(s.category_id);
        if 2 * void > s.area {
            class.void_excluded.push(s.segment_id);
        } else {
            class.fp.push(s.segment_id);
        }
    }
    for c in result.classes.values_mut() {
        c.tp.sort_unstable();
        c.fp.sort_unstable();
        c.fn_.sort_unstable();
        c.void_excluded.sort_unstable();
    }
    result
}

/// Builds the table and matches in one call.
pub fn match_pair(
    gt: &PanopticLabelMap,
    pred: &PanopticLabelMap,
) -> Result<MatchResult, MatchError> {
    let table = build_contingency(gt, pred)?;
    Ok(match_segments(&table, gt, pred))
}
