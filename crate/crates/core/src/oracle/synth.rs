//! Seeded synthetic scenes for exercising the evaluator.
//!
//! Ground truth is a Voronoi partition of the image around random seed
//! pixels, with random void pixels sprinkled in. The prediction starts as a
//! copy of the ground truth and is degraded by a controllable set of
//! perturbations: boundary jitter, dropped segments, split segments and
//! class flips.

use std::collections::{BTreeSet, HashSet};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::condition::ConditionTag;
use crate::labels::{PanopticLabelMap, MAX_SEGMENT_ID};

pub const MAX_SIDE: u32 = 4096;
pub const MAX_SEGMENTS: usize = 256;
pub const MAX_CLASSES: u32 = 19;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid synthetic scene spec: {0}")]
pub struct SynthError(pub String);

/// How far the prediction departs from the ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Perturbation {
    /// Probability that a boundary pixel takes a neighbour's label.
    pub erosion: f64,
    /// Segments removed from the prediction (left void).
    pub drop: usize,
    /// Segments cut in two along their median column.
    pub split: usize,
    /// Segments whose category is changed.
    pub flip: usize,
}

impl Perturbation {
    pub fn none() -> Self {
        Self::default()
    }

    /// Scales every perturbation with `strength` in `[0, 1]`; 0 is the
    /// identity.
    pub fn from_strength(strength: f64, n_segments: usize) -> Self {
        let s = strength.clamp(0.0, 1.0);
        let count = (s * n_segments as f64 / 4.0).round() as usize;
        Self {
            erosion: 0.5 * s,
            drop: count,
            split: count,
            flip: count,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.erosion == 0.0 && self.drop == 0 && self.split == 0 && self.flip == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub width: u32,
    pub height: u32,
    pub n_segments: usize,
    /// Categories are drawn from ids `0..n_classes` of the default taxonomy.
    pub n_classes: u32,
    pub void_fraction: f64,
    pub seed: u64,
    pub perturbation: Perturbation,
}

impl SynthSpec {
    pub fn new(width: u32, height: u32, n_segments: usize, seed: u64) -> Self {
        Self {
            width,
            height,
            n_segments,
            n_classes: MAX_CLASSES,
            void_fraction: 0.0,
            seed,
            perturbation: Perturbation::none(),
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError(m));
        if self.width == 0 || self.height == 0 || self.width > MAX_SIDE || self.height > MAX_SIDE {
            return bad(format!("size {}x{} outside 1..={MAX_SIDE}", self.width, self.height));
        }
        let pixels = self.width as usize * self.height as usize;
        if self.n_segments == 0 || self.n_segments > MAX_SEGMENTS.min(pixels) {
            return bad(format!(
                "n_segments {} outside 1..={}",
                self.n_segments,
                MAX_SEGMENTS.min(pixels)
            ));
        }
        if self.n_classes == 0 || self.n_classes > MAX_CLASSES {
            return bad(format!("n_classes {} outside 1..={MAX_CLASSES}", self.n_classes));
        }
        if !(0.0..=0.5).contains(&self.void_fraction) {
            return bad(format!("void_fraction {} outside [0, 0.5]", self.void_fraction));
        }
        if !(0.0..=1.0).contains(&self.perturbation.erosion) {
            return bad(format!("erosion {} outside [0, 1]", self.perturbation.erosion));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub gt: PanopticLabelMap,
    pub pred: PanopticLabelMap,
    pub tag: ConditionTag,
}

const VOID: u32 = 0;

fn fresh_id(rng: &mut ChaCha8Rng, used: &mut BTreeSet<u32>) -> u32 {
    loop {
        let id = rng.random_range(1..=MAX_SEGMENT_ID);
        if used.insert(id) {
            return id;
        }
    }
}

/// Generates a ground-truth / prediction pair. Same spec, same scene.
pub fn generate_scene(spec: &SynthSpec) -> Result<Scene, SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (w, h) = (spec.width as usize, spec.height as usize);
    let n = spec.n_segments;

    let tag = ConditionTag::all()[rng.random_range(0..8)];

    let sites: Vec<(usize, usize)> = sample(&mut rng, w * h, n)
        .into_iter()
        .map(|i| (i % w, i / w))
        .collect();
    let mut used = BTreeSet::new();
    let seg_ids: Vec<u32> = (0..n).map(|_| fresh_id(&mut rng, &mut used)).collect();
    let classes: Vec<u32> = (0..n).map(|_| rng.random_range(0..spec.n_classes)).collect();

    // nearest site wins, lower index on ties; every site owns itself
    let mut owner = vec![0usize; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut best = (usize::MAX, 0);
            for (k, &(sx, sy)) in sites.iter().enumerate() {
                let d = sx.abs_diff(x).pow(2) + sy.abs_diff(y).pow(2);
                if d < best.0 {
                    best = (d, k);
                }
            }
            owner[y * w + x] = best.1;
        }
    }
    let site_pixels: BTreeSet<usize> = sites.iter().map(|&(x, y)| y * w + x).collect();
    let gt_ids: Vec<u32> = owner
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let voided = spec.void_fraction > 0.0
                && !site_pixels.contains(&i)
                && rng.random::<f64>() < spec.void_fraction;
            if voided {
                VOID
            } else {
                seg_ids[k]
            }
        })
        .collect();
    let gt_cats: Vec<(u32, u32)> = seg_ids.iter().copied().zip(classes.iter().copied()).collect();
    let gt = PanopticLabelMap::from_grid(spec.width, spec.height, VOID, gt_ids.clone(), &gt_cats)
        .map_err(|e| SynthError(e.to_string()))?;

    let pred = perturb(&mut rng, spec, &gt_ids, &gt_cats, &mut used)?;
    Ok(Scene { gt, pred, tag })
}

fn perturb(
    rng: &mut ChaCha8Rng,
    spec: &SynthSpec,
    gt_ids: &[u32],
    gt_cats: &[(u32, u32)],
    used: &mut BTreeSet<u32>,
) -> Result<PanopticLabelMap, SynthError> {
    let (w, h) = (spec.width as usize, spec.height as usize);
    let p = spec.perturbation;
    let mut ids = gt_ids.to_vec();
    let mut cats: Vec<(u32, u32)> = gt_cats.to_vec();

    if p.erosion > 0.0 {
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let here = gt_ids[i];
                let neighbour = [
                    (x > 0).then(|| gt_ids[i - 1]),
                    (x + 1 < w).then(|| gt_ids[i + 1]),
                    (y > 0).then(|| gt_ids[i - w]),
                    (y + 1 < h).then(|| gt_ids[i + w]),
                ]
                .into_iter()
                .flatten()
                .find(|&n| n != here);
                if let Some(n) = neighbour {
                    if rng.random::<f64>() < p.erosion {
                        ids[i] = n;
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..cats.len()).collect();
    let take = |rng: &mut ChaCha8Rng, order: &mut Vec<usize>, k: usize| -> Vec<usize> {
        let k = k.min(order.len());
        let picked: Vec<usize> = sample(rng, order.len(), k).into_iter().collect();
        let chosen: Vec<usize> = picked.iter().map(|&j| order[j]).collect();
        order.retain(|o| !chosen.contains(o));
        chosen
    };

    let dropped = take(rng, &mut order, p.drop);
    for &k in &dropped {
        let id = cats[k].0;
        ids.iter_mut().filter(|v| **v == id).for_each(|v| *v = VOID);
    }

    let split = take(rng, &mut order, p.split);
    for &k in &split {
        let (id, cat) = cats[k];
        let mut xs: Vec<usize> = (0..ids.len()).filter(|&i| ids[i] == id).map(|i| i % w).collect();
        if xs.is_empty() {
            continue;
        }
        xs.sort_unstable();
        let median = xs[xs.len() / 2];
        if xs[0] == median {
            continue;
        }
        let new_id = fresh_id(rng, used);
        for (i, v) in ids.iter_mut().enumerate() {
            if *v == id && i % w < median {
                *v = new_id;
            }
        }
        cats.push((new_id, cat));
    }

    let flipped = take(rng, &mut order, p.flip);
    let n_classes = spec.n_classes.max(2);
    for &k in &flipped {
        let c = cats[k].1;
        let shift = 1 + rng.random_range(0..n_classes - 1);
        cats[k].1 = (c + shift) % n_classes;
    }

    let present: HashSet<u32> = ids.iter().copied().collect();
    let listed: Vec<(u32, u32)> = cats
        .into_iter()
        .filter(|(id, _)| present.contains(id))
        .collect();
    PanopticLabelMap::from_grid(spec.width, spec.height, VOID, ids, &listed)
        .map_err(|e| SynthError(e.to_string()))
}
