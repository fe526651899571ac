//! Browser demo: generate a synthetic scene, match it, and play with the
//! condition weights. The page lives in `www/index.html`.
//!
//! The wasm exports are thin wrappers over plain functions so the logic is
//! tested natively.

use std::collections::BTreeMap;

use pqeval::labels::{CategoryTable, PanopticLabelMap};
use pqeval::matching::{match_pair, MatchResult};
use pqeval::metrics::{
    accumulate, build_report, class_pq as score_class, weighted_scores, ClassScore,
    ConditionScores, WeightConfig,
};
use pqeval::oracle::{generate_scene, Perturbation, SynthSpec};
use pqeval::ConditionTag;
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

/// Cityscapes colours by train id.
const PALETTE: [[u8; 3]; 19] = [
    [128, 64, 128],
    [244, 35, 232],
    [70, 70, 70],
    [102, 102, 156],
    [190, 153, 153],
    [153, 153, 153],
    [250, 170, 30],
    [220, 220, 0],
    [107, 142, 35],
    [152, 251, 152],
    [70, 130, 180],
    [220, 20, 60],
    [255, 0, 0],
    [0, 0, 142],
    [0, 0, 70],
    [0, 60, 100],
    [0, 80, 100],
    [0, 0, 230],
    [119, 11, 32],
];

const MATCHED: [u8; 3] = [46, 160, 67];
const FALSE_POS: [u8; 3] = [218, 54, 51];
const MISSED: [u8; 3] = [240, 160, 40];
const IGNORED: [u8; 3] = [110, 110, 110];

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ClassRow {
    pub category_id: u32,
    pub name: String,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub pq: f64,
    pub sq: f64,
    pub rq: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SceneSummary {
    pub width: u32,
    pub height: u32,
    pub condition: String,
    pub pq: f64,
    pub sq: f64,
    pub rq: f64,
    pub classes: Vec<ClassRow>,
}

/// A generated scene with its images (RGBA, row-major) and scores.
#[wasm_bindgen]
pub struct SceneView {
    width: u32,
    height: u32,
    gt: Vec<u8>,
    pred: Vec<u8>,
    status: Vec<u8>,
    summary: SceneSummary,
}

#[wasm_bindgen]
impl SceneView {
    #[wasm_bindgen(getter)]
    pub fn width(&self) -> u32 {
        self.width
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn gt_rgba(&self) -> Vec<u8> {
        self.gt.clone()
    }

    pub fn pred_rgba(&self) -> Vec<u8> {
        self.pred.clone()
    }

    /// Green: matched, red: false positive, orange: missed ground truth,
    /// grey: prediction over void that is not counted.
    pub fn status_rgba(&self) -> Vec<u8> {
        self.status.clone()
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string(&self.summary).expect("summary serializes")
    }
}

/// Colours each segment by category, shading instances apart and darkening
/// their borders.
fn paint_segments(map: &PanopticLabelMap) -> Vec<u8> {
    let cats: BTreeMap<u32, (u32, usize)> = map
        .segments()
        .iter()
        .enumerate()
        .map(|(i, s)| (s.segment_id, (s.category_id, i)))
        .collect();
    let (w, h) = (map.width(), map.height());
    let mut out = Vec::with_capacity((w * h * 4) as usize);
    for y in 0..h {
        for x in 0..w {
            let id = map.get(x, y);
            let rgb = match cats.get(&id) {
                None => [0, 0, 0],
                Some(&(cat, nth)) => {
                    let base = PALETTE[cat as usize % PALETTE.len()];
                    let shade = 0.75 + 0.25 * ((nth * 37 % 11) as f32 / 10.0);
                    let edge = [(1i32, 0i32), (0, 1)].iter().any(|&(dx, dy)| {
                        let (nx, ny) = (x as i32 + dx, y as i32 + dy);
                        nx < w as i32 && ny < h as i32 && map.get(nx as u32, ny as u32) != id
                    });
                    let k = if edge { shade * 0.55 } else { shade };
                    base.map(|c| (c as f32 * k) as u8)
                }
            };
            out.extend_from_slice(&[rgb[0], rgb[1], rgb[2], 255]);
        }
    }
    out
}

fn paint_status(gt: &PanopticLabelMap, pred: &PanopticLabelMap, r: &MatchResult) -> Vec<u8> {
    let mut pred_colour: BTreeMap<u32, [u8; 3]> = BTreeMap::new();
    let mut missed = std::collections::BTreeSet::new();
    for m in r.classes.values() {
        for t in &m.tp {
            pred_colour.insert(t.pred_id, MATCHED);
        }
        for &id in &m.fp {
            pred_colour.insert(id, FALSE_POS);
        }
        for &id in &m.void_excluded {
            pred_colour.insert(id, IGNORED);
        }
        missed.extend(m.fn_.iter().copied());
    }
    let void = gt.void_id();
    let mut out = Vec::with_capacity(gt.ids().len() * 4);
    for (&g, &p) in gt.ids().iter().zip(pred.ids()) {
        let rgb = if g != void && missed.contains(&g) && (p == void || pred_colour.get(&p) != Some(&MATCHED)) {
            MISSED
        } else if p != void {
            pred_colour.get(&p).copied().unwrap_or(IGNORED)
        } else {
            [0, 0, 0]
        };
        out.extend_from_slice(&[rgb[0], rgb[1], rgb[2], 255]);
    }
    out
}

fn summarize(scene_tag: ConditionTag, gt: &PanopticLabelMap, r: &MatchResult) -> Result<SceneSummary, String> {
    let cats = CategoryTable::default();
    let acc = accumulate([(r, scene_tag)]);
    let report = build_report(&acc, &WeightConfig::uniform()).map_err(|e| e.to_string())?;
    let classes = report
        .per_class
        .iter()
        .map(|c| ClassRow {
            category_id: c.category_id,
            name: cats.name(c.category_id).unwrap_or("?").to_string(),
            tp: c.tp,
            fp: c.fp,
            fn_: c.fn_,
            pq: c.pq,
            sq: c.sq,
            rq: c.rq,
        })
        .collect();
    Ok(SceneSummary {
        width: gt.width(),
        height: gt.height(),
        condition: scene_tag.to_string(),
        pq: report.pq_all,
        sq: report.sq_all,
        rq: report.rq_all,
        classes,
    })
}

pub fn build_scene(
    width: u32,
    height: u32,
    n_segments: usize,
    void_fraction: f64,
    strength: f64,
    seed: u64,
) -> Result<SceneView, String> {
    let spec = SynthSpec {
        width,
        height,
        n_segments,
        n_classes: 19,
        void_fraction,
        seed,
        perturbation: Perturbation::from_strength(strength, n_segments),
    };
    let scene = generate_scene(&spec).map_err(|e| e.to_string())?;
    let result = match_pair(&scene.gt, &scene.pred).map_err(|e| e.to_string())?;
    Ok(SceneView {
        width,
        height,
        gt: paint_segments(&scene.gt),
        pred: paint_segments(&scene.pred),
        status: paint_status(&scene.gt, &scene.pred, &result),
        summary: summarize(scene.tag, &scene.gt, &result)?,
    })
}

/// Generates and scores a synthetic scene.
#[wasm_bindgen]
pub fn synth_scene(
    width: u32,
    height: u32,
    n_segments: u32,
    void_fraction: f64,
    strength: f64,
    seed: u32,
) -> Result<SceneView, JsError> {
    build_scene(width, height, n_segments as usize, void_fraction, strength, seed as u64)
        .map_err(|e| JsError::new(&e))
}

/// `[pq, sq, rq]` as fractions from raw counts; empty for an absent class.
#[wasm_bindgen]
pub fn class_pq(tp: u32, fp: u32, fn_: u32, iou_sum: f64) -> Vec<f64> {
    if iou_sum < 0.0 || iou_sum > tp as f64 {
        return Vec::new();
    }
    let s = ClassScore::from_counts(0, tp.into(), fp.into(), fn_.into(), iou_sum);
    score_class(&s).map(|q| vec![q.pq, q.sq, q.rq]).unwrap_or_default()
}

#[derive(Debug, Deserialize)]
struct ConditionInput {
    condition: String,
    pq: f64,
    sq: f64,
    rq: f64,
}

#[derive(Debug, Serialize, PartialEq)]
pub struct WeightedOutput {
    pub wpq: f64,
    pub wsq: f64,
    pub wrq: f64,
    pub weight_sum: f64,
}

pub fn weighted_from_json(conditions: &str, weights: &str) -> Result<WeightedOutput, String> {
    let input: Vec<ConditionInput> = serde_json::from_str(conditions).map_err(|e| e.to_string())?;
    let weights = WeightConfig::from_json(weights.as_bytes()).map_err(|e| e.to_string())?;
    let per = input
        .into_iter()
        .map(|c| {
            Ok(ConditionScores {
                condition: c.condition.parse().map_err(|e| format!("{e}"))?,
                pq: c.pq,
                sq: c.sq,
                rq: c.rq,
                per_class: Vec::new(),
                n_scenes: 0,
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    let s = weighted_scores(&per, &weights).map_err(|e| e.to_string())?;
    let weight_sum = per.iter().filter_map(|c| weights.get(c.condition)).sum();
    Ok(WeightedOutput {
        wpq: s.wpq,
        wsq: s.wsq,
        wrq: s.wrq,
        weight_sum,
    })
}

/// Weighted scores from `[{condition, pq, sq, rq}]` and a
/// `{"fog/day": 1.0, ...}` weight map, both JSON. Returns JSON.
#[wasm_bindgen]
pub fn weighted(conditions_json: &str, weights_json: &str) -> Result<String, JsError> {
    weighted_from_json(conditions_json, weights_json)
        .map(|w| serde_json::to_string(&w).expect("output serializes"))
        .map_err(|e| JsError::new(&e))
}

/// The default weight map as JSON.
#[wasm_bindgen]
pub fn default_weights() -> String {
    serde_json::to_string(&WeightConfig::default()).expect("weights serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scene_images_have_the_right_size() {
        let v = build_scene(40, 24, 6, 0.1, 0.5, 3).unwrap();
        assert_eq!(v.gt_rgba().len(), 40 * 24 * 4);
        assert_eq!(v.pred_rgba().len(), 40 * 24 * 4);
        assert_eq!(v.status_rgba().len(), 40 * 24 * 4);
        assert!(!v.summary.classes.is_empty());
    }

    #[test]
    fn unperturbed_scene_is_all_green() {
        let v = build_scene(32, 16, 5, 0.0, 0.0, 1).unwrap();
        assert_eq!(v.summary.pq, 100.0);
        assert!(v.status.chunks(4).all(|px| px[..3] == MATCHED));
    }

    #[test]
    fn class_pq_matches_formula() {
        assert_eq!(class_pq(1, 0, 0, 0.6), vec![0.6, 0.6, 1.0]);
        assert_eq!(class_pq(1, 1, 1, 1.0), vec![0.5, 1.0, 0.5]);
        assert!(class_pq(0, 0, 0, 0.0).is_empty());
        assert!(class_pq(1, 0, 0, 2.0).is_empty());
    }

    #[test]
    fn weighted_two_conditions() {
        let out = weighted_from_json(
            r#"[{"condition":"clear/day","pq":60,"sq":60,"rq":60},
                {"condition":"fog/day","pq":40,"sq":40,"rq":40}]"#,
            &default_weights(),
        )
        .unwrap();
        assert!((out.wpq - 140.0 / 3.0).abs() < 1e-9);
        assert_eq!(out.weight_sum, 1.5);
        assert!(weighted_from_json("[]", "{}").is_err());
    }
}
