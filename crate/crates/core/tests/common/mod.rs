#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;

use pqeval::dataset::{write_label_map, write_synthetic, DatasetLayout};
use pqeval::evaluate::GroundTruth;
use pqeval::harness::SubmissionArchive;
use pqeval::labels::{CategoryTable, PanopticLabelMap};
use pqeval::oracle::{Perturbation, SynthSpec};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A small random spec within the differential-test envelope: at most
/// 16x16, at most 6 segments, void fraction at most 0.3.
pub fn small_spec(seed: u64) -> SynthSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let width = rng.random_range(2..=16);
    let height = rng.random_range(2..=16);
    let n_segments = rng.random_range(1..=6usize.min((width * height) as usize));
    let strength: f64 = rng.random_range(0.0..=1.0);
    SynthSpec {
        width,
        height,
        n_segments,
        n_classes: rng.random_range(1..=19),
        void_fraction: rng.random_range(0.0..=0.3),
        seed,
        perturbation: Perturbation::from_strength(strength, n_segments),
    }
}

/// Writes a synthetic dataset and returns its ground truth and the
/// prediction directory as an archive.
pub fn synthetic_dataset(
    root: &Path,
    spec: &SynthSpec,
    n_scenes: usize,
) -> (GroundTruth, SubmissionArchive) {
    let layout = DatasetLayout::new(root);
    let manifest = write_synthetic(&layout, spec, n_scenes).expect("synthetic dataset");
    let gt = GroundTruth::new(manifest, layout.gt_dir(), CategoryTable::default());
    let archive = SubmissionArchive::open(&layout.pred_dir()).expect("prediction archive");
    (gt, archive)
}

/// The ground-truth labels themselves, submitted as predictions.
pub fn perfect_submission(gt: &GroundTruth) -> SubmissionArchive {
    SubmissionArchive::open(&gt.root).expect("gt archive")
}

/// Renames every non-void segment id with a random bijection.
pub fn relabel(map: &PanopticLabelMap, rng: &mut ChaCha8Rng) -> PanopticLabelMap {
    let mut fresh: Vec<u32> = (1..=4096).collect();
    fresh.shuffle(rng);
    let mapping: BTreeMap<u32, u32> = map
        .segments()
        .iter()
        .zip(fresh)
        .map(|(s, f)| (s.segment_id, f))
        .collect();
    let void = map.void_id();
    let ids = map
        .ids()
        .iter()
        .map(|&id| if id == void { void } else { mapping[&id] })
        .collect();
    let segs: Vec<(u32, u32)> = map
        .segments()
        .iter()
        .map(|s| (mapping[&s.segment_id], s.category_id))
        .collect();
    PanopticLabelMap::from_grid(map.width(), map.height(), void, ids, &segs).expect("relabeled map")
}

pub fn write_prediction(dir: &Path, scene: &str, map: &PanopticLabelMap) {
    write_label_map(dir, scene, map).expect("write prediction");
}
