//! Seeded differential runs of a matcher against [`oracle_match`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{generate_scene, oracle_match, Perturbation, SynthSpec};
use crate::labels::PanopticLabelMap;
use crate::matching::{MatchError, MatchResult};

/// Cases stay small enough for the quadratic reference: at most 16x16,
/// 6 segments and 30% void.
pub fn differential_spec(seed: u64) -> SynthSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.rotate_left(17) ^ 0x5eed);
    let width = rng.random_range(2..=16u32);
    let height = rng.random_range(2..=16u32);
    let n_segments = rng.random_range(1..=6usize.min((width * height) as usize));
    SynthSpec {
        width,
        height,
        n_segments,
        n_classes: rng.random_range(1..=19),
        void_fraction: rng.random_range(0.0..=0.3),
        seed,
        perturbation: Perturbation::from_strength(rng.random_range(0.0..=1.0), n_segments),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub seed: u64,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CheckSummary {
    pub cases: u64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub mismatches: Vec<Mismatch>,
}

impl CheckSummary {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

fn counts(r: &MatchResult) -> (usize, usize, usize, Vec<(u64, u64)>) {
    let mut ious = r.iou_multiset();
    ious.sort_unstable();
    (r.tp_count(), r.fp_count(), r.fn_count(), ious)
}

/// Runs `cases` scenes with seeds `seed..seed + cases` through `matcher`
/// and the reference, comparing TP/FP/FN counts and IoU multisets.
pub fn differential_check<F>(cases: u64, seed: u64, matcher: F) -> CheckSummary
where
    F: Fn(&PanopticLabelMap, &PanopticLabelMap) -> Result<MatchResult, MatchError>,
{
    let mut summary = CheckSummary {
        cases,
        ..Default::default()
    };
    for s in seed..seed.saturating_add(cases) {
        let mismatch = |detail: String| Mismatch { seed: s, detail };
        let scene = match generate_scene(&differential_spec(s)) {
            Ok(scene) => scene,
            Err(e) => {
                summary.mismatches.push(mismatch(e.to_string()));
                continue;
            }
        };
        let (fast, slow) = match (matcher(&scene.gt, &scene.pred), oracle_match(&scene.gt, &scene.pred)) {
            (Ok(f), Ok(o)) => (f, o),
            (f, o) => {
                summary
                    .mismatches
                    .push(mismatch(format!("matcher {:?}, reference {:?}", f.err(), o.err())));
                continue;
            }
        };
        let (a, b) = (counts(&fast), counts(&slow));
        if a != b {
            summary.mismatches.push(mismatch(format!(
                "TP/FP/FN {}/{}/{} vs reference {}/{}/{}",
                a.0, a.1, a.2, b.0, b.1, b.2
            )));
        } else {
            summary.tp += a.0;
            summary.fp += a.1;
            summary.fn_ += a.2;
        }
    }
    summary
}
