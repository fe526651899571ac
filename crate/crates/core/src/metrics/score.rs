use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::matching::MatchedPair;

/// Fractional bits of the fixed-point IoU sum. Every f64 in `[2^-8, 1]`
/// is an exact multiple of `2^-60`, and matched IoUs are all above 0.5.
const IOU_FRAC_BITS: i32 = 60;

/// Pooled TP/FP/FN counts and IoU sum for one category.
///
/// The IoU sum is kept in exact fixed point so that pooling is associative
/// and commutative bit for bit, whatever the merge order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClassScore {
    pub category_id: u32,
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    iou_fixed: u128,
}

/// PQ / SQ / RQ as fractions in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quality {
    pub pq: f64,
    pub sq: f64,
    pub rq: f64,
}

impl Quality {
    pub fn percent(self) -> Quality {
        Quality {
            pq: self.pq * 100.0,
            sq: self.sq * 100.0,
            rq: self.rq * 100.0,
        }
    }
}

fn iou_to_fixed(iou: f64) -> u128 {
    debug_assert!((0.0..=1.0).contains(&iou));
    (iou * (IOU_FRAC_BITS as f64).exp2()) as u128
}

impl ClassScore {
    pub fn new(category_id: u32) -> Self {
        Self {
            category_id,
            ..Default::default()
        }
    }

    /// Builds a score from raw parts; `iou_sum` is quantized to the
    /// fixed-point grid.
    pub fn from_counts(category_id: u32, tp: u64, fp: u64, fn_: u64, iou_sum: f64) -> Self {
        Self {
            category_id,
            tp,
            fp,
            fn_,
            iou_fixed: (iou_sum * (IOU_FRAC_BITS as f64).exp2()) as u128,
        }
    }

    pub fn add_tp(&mut self, pair: &MatchedPair) {
        self.tp += 1;
        self.iou_fixed += iou_to_fixed(pair.iou());
    }

    pub fn iou_sum(&self) -> f64 {
        self.iou_fixed as f64 * (-IOU_FRAC_BITS as f64).exp2()
    }

    pub fn merge(&mut self, other: &ClassScore) {
        debug_assert_eq!(self.category_id, other.category_id);
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.iou_fixed += other.iou_fixed;
    }

    /// A class with no TP, FP or FN in a subset is absent from it.
    pub fn is_present(&self) -> bool {
        self.tp + self.fp + self.fn_ > 0
    }

    /// `None` for an absent class: it is skipped, not scored zero.
    pub fn quality(&self) -> Option<Quality> {
        class_pq(self)
    }
}

/// PQ, SQ and RQ of one class.
///
/// `RQ = TP / (TP + FP/2 + FN/2)`, `SQ = ΣIoU / TP` (0 without TPs) and
/// `PQ = ΣIoU / (TP + FP/2 + FN/2)`. Returns `None` when the class is absent.
pub fn class_pq(score: &ClassScore) -> Option<Quality> {
    if !score.is_present() {
        return None;
    }
    // TP + FP/2 + FN/2, doubled to stay in integers
    let denom2 = (2 * score.tp + score.fp + score.fn_) as f64;
    let iou_sum = score.iou_sum();
    let rq = 2.0 * score.tp as f64 / denom2;
    let pq = 2.0 * iou_sum / denom2;
    let sq = if score.tp > 0 {
        iou_sum / score.tp as f64
    } else {
        0.0
    };
    Some(Quality { pq, sq, rq })
}

#[derive(Serialize, Deserialize)]
struct ClassScoreRepr {
    category_id: u32,
    tp: u64,
    fp: u64,
    #[serde(rename = "fn")]
    fn_: u64,
    iou_sum: f64,
    /// exact fixed-point sum, decimal
    iou_sum_fixed: String,
}

impl Serialize for ClassScore {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ClassScoreRepr {
            category_id: self.category_id,
            tp: self.tp,
            fp: self.fp,
            fn_: self.fn_,
            iou_sum: self.iou_sum(),
            iou_sum_fixed: self.iou_fixed.to_string(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ClassScore {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = ClassScoreRepr::deserialize(d)?;
        let iou_fixed = r.iou_sum_fixed.parse().map_err(serde::de::Error::custom)?;
        Ok(ClassScore {
            category_id: r.category_id,
            tp: r.tp,
            fp: r.fp,
            fn_: r.fn_,
            iou_fixed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pair(intersection: u64, union: u64) -> MatchedPair {
        MatchedPair {
            gt_id: 1,
            pred_id: 2,
            intersection,
            union,
        }
    }

    #[test]
    fn single_tp() {
        let mut s = ClassScore::new(13);
        s.add_tp(&pair(3, 5));
        assert_eq!((s.tp, s.fp, s.fn_), (1, 0, 0));
        assert_eq!(s.iou_sum(), 0.6);
        let q = class_pq(&s).unwrap();
        assert_eq!(q.pq, 0.6);
        assert_eq!(q.sq, 0.6);
        assert_eq!(q.rq, 1.0);
    }

    #[test]
    fn only_false_positives() {
        let s = ClassScore::from_counts(1, 0, 2, 0, 0.0);
        assert_eq!(
            class_pq(&s),
            Some(Quality {
                pq: 0.0,
                sq: 0.0,
                rq: 0.0
            })
        );
    }

    #[test]
    fn perfect_and_absent() {
        let mut s = ClassScore::new(1);
        for _ in 0..7 {
            s.add_tp(&pair(9, 9));
        }
        let q = class_pq(&s).unwrap();
        assert_eq!((q.pq, q.sq, q.rq), (1.0, 1.0, 1.0));
        assert_eq!(class_pq(&ClassScore::new(1)), None);
    }

    #[test]
    fn serde_keeps_exact_sum() {
        let mut s = ClassScore::new(4);
        s.add_tp(&pair(2, 3));
        s.add_tp(&pair(5, 7));
        s.fp = 3;
        let json = serde_json::to_string(&s).unwrap();
        let back: ClassScore = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }

    fn arb_pairs() -> impl Strategy<Value = Vec<MatchedPair>> {
        prop::collection::vec(
            (1u64..10_000).prop_flat_map(|u| ((u / 2 + 1)..=u, Just(u))),
            1..20,
        )
        .prop_map(|v| v.into_iter().map(|(i, u)| pair(i, u)).collect())
    }

    proptest! {
        #[test]
        fn pq_is_sq_times_rq(pairs in arb_pairs(), fp in 0u64..20, fn_ in 0u64..20) {
            let mut s = ClassScore::new(0);
            for p in &pairs {
                s.add_tp(p);
            }
            s.fp = fp;
            s.fn_ = fn_;
            let q = class_pq(&s).unwrap();
            prop_assert!((q.pq - q.sq * q.rq).abs() < 1e-12);
            prop_assert!(q.sq > 0.5 && q.sq <= 1.0);
            prop_assert!((0.0..=1.0).contains(&q.pq) && (0.0..=1.0).contains(&q.rq));
        }

        #[test]
        fn extra_fp_lowers_pq(pairs in prop::collection::vec((1u64..100).prop_flat_map(|u| ((u / 2 + 1)..=u, Just(u))), 0..10), fp in 0u64..10, fn_ in 0u64..10) {
            let mut s = ClassScore::new(0);
            for &(i, u) in &pairs {
                s.add_tp(&pair(i, u));
            }
            s.fp = fp;
            s.fn_ = fn_;
            prop_assume!(s.is_present() && s.tp > 0);
            let before = class_pq(&s).unwrap().pq;
            s.fp += 1;
            prop_assert!(class_pq(&s).unwrap().pq < before);
        }

        #[test]
        fn merge_order_is_irrelevant(a in arb_pairs(), b in arb_pairs(), c in arb_pairs()) {
            let score = |v: &[MatchedPair]| {
                let mut s = ClassScore::new(0);
                v.iter().for_each(|p| s.add_tp(p));
                s
            };
            let (sa, sb, sc) = (score(&a), score(&b), score(&c));
            let mut left = sa;
            left.merge(&sb);
            left.merge(&sc);
            let mut right = sc;
            right.merge(&sa);
            right.merge(&sb);
            prop_assert_eq!(left, right);
            prop_assert_eq!(left.iou_sum().to_bits(), right.iou_sum().to_bits());
        }
    }
}
