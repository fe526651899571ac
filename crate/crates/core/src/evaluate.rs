//! End-to-end evaluation: decode, match, pool, report.
//!
//! Scenes are processed independently (in parallel with the `parallel`
//! feature, on the current rayon pool) and their accumulators are merged in
//! manifest order. Pooling is exact, so the report does not depend on the
//! number of threads.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use thiserror::Error;

use crate::condition::ConditionTag;
use crate::harness::archive::sidecar_path;
use crate::harness::validate::{load_prediction, structural_faults};
use crate::harness::{Fault, SubmissionArchive};
use crate::labels::{
    decode_label_map, load_manifest, read_png_dimensions, CategoryTable, LabelError,
    LabelWarning, PanopticLabelMap, SceneManifest,
};
use crate::matching::{match_pair, MatchError};
use crate::metrics::{build_report, MetricsError, ScoreAccumulator, ScoreReport, WeightConfig};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("manifest: {0}")]
    Manifest(LabelError),
    #[error("ground truth for scene `{scene}`: {message}")]
    GroundTruth { scene: String, message: String },
    #[error("scene `{scene}`: {source}")]
    Match { scene: String, source: MatchError },
    #[error("{} submission fault(s)", .0.len())]
    Faults(Vec<Fault>),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// The withheld side of an evaluation: manifest, label root and taxonomy.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub manifest: Vec<SceneManifest>,
    /// `gt_path` entries of the manifest are relative to this directory.
    pub root: PathBuf,
    pub categories: CategoryTable,
}

impl GroundTruth {
    pub fn new(manifest: Vec<SceneManifest>, root: impl Into<PathBuf>, categories: CategoryTable) -> Self {
        Self {
            manifest,
            root: root.into(),
            categories,
        }
    }

    pub fn load(
        manifest_path: &Path,
        root: impl Into<PathBuf>,
        categories: CategoryTable,
    ) -> Result<Self, EvalError> {
        let bytes = fs::read(manifest_path).map_err(|source| EvalError::Io {
            path: manifest_path.to_path_buf(),
            source,
        })?;
        let manifest = load_manifest(&bytes).map_err(EvalError::Manifest)?;
        Ok(Self::new(manifest, root, categories))
    }

    /// `(png, segments_json)` paths of a scene's ground truth.
    pub fn scene_paths(&self, scene: &SceneManifest) -> (PathBuf, PathBuf) {
        let png = self.root.join(&scene.gt_path);
        let json = sidecar_path(&png);
        (png, json)
    }

    pub fn dimensions(&self, scene: &SceneManifest) -> Result<(u32, u32), String> {
        let (png, _) = self.scene_paths(scene);
        let bytes = fs::read(&png).map_err(|e| format!("{}: {e}", png.display()))?;
        read_png_dimensions(&bytes).map_err(|e| e.to_string())
    }

    pub fn load_scene(
        &self,
        scene: &SceneManifest,
    ) -> Result<(PanopticLabelMap, Vec<LabelWarning>), EvalError> {
        let gt_err = |message: String| EvalError::GroundTruth {
            scene: scene.scene_id.clone(),
            message,
        };
        let (png, json) = self.scene_paths(scene);
        let png_bytes = fs::read(&png).map_err(|e| gt_err(format!("{}: {e}", png.display())))?;
        let json_bytes = fs::read(&json).map_err(|e| gt_err(format!("{}: {e}", json.display())))?;
        decode_label_map(&png_bytes, &json_bytes, &self.categories).map_err(|e| gt_err(e.to_string()))
    }
}

/// A finished evaluation.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub report: ScoreReport,
    /// Non-fatal decode warnings, tagged `gt` or `pred` and by scene.
    pub warnings: Vec<String>,
}

enum SceneError {
    Fault(Fault),
    Fatal(EvalError),
}

fn score_scene(
    gt: &GroundTruth,
    archive: &SubmissionArchive,
    scene: &SceneManifest,
) -> Result<(ScoreAccumulator, Vec<String>), SceneError> {
    let (gt_map, gt_warn) = gt.load_scene(scene).map_err(SceneError::Fatal)?;
    let (pred_map, pred_warn) = load_prediction(
        archive,
        &scene.scene_id,
        &gt.categories,
        Some((gt_map.width(), gt_map.height())),
    )
    .map_err(SceneError::Fault)?;
    let result = match_pair(&gt_map, &pred_map).map_err(|source| {
        SceneError::Fatal(EvalError::Match {
            scene: scene.scene_id.clone(),
            source,
        })
    })?;
    let warnings = gt_warn
        .iter()
        .map(|w| format!("{} (gt): {w}", scene.scene_id))
        .chain(pred_warn.iter().map(|w| format!("{} (pred): {w}", scene.scene_id)))
        .collect();
    Ok((ScoreAccumulator::single(&result, scene.condition), warnings))
}

/// Scores a submission archive against ground truth.
///
/// Every scene is checked before any score is reported: structural problems
/// and undecodable or mis-sized predictions are collected and returned
/// together as [`EvalError::Faults`].
pub fn evaluate_submission(
    gt: &GroundTruth,
    archive: &SubmissionArchive,
    weights: &WeightConfig,
) -> Result<Evaluation, EvalError> {
    let faults = structural_faults(archive, &gt.manifest);
    if !faults.is_empty() {
        return Err(EvalError::Faults(faults));
    }

    let run = |scene: &SceneManifest| score_scene(gt, archive, scene);
    #[cfg(feature = "parallel")]
    let outcomes: Vec<_> = gt.manifest.par_iter().map(run).collect();
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<_> = gt.manifest.iter().map(run).collect();

    let mut acc = ScoreAccumulator::new();
    let mut warnings = Vec::new();
    let mut faults = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok((a, w)) => {
                acc = acc.merge(a);
                warnings.extend(w);
            }
            Err(SceneError::Fault(f)) => faults.push(f),
            Err(SceneError::Fatal(e)) => return Err(e),
        }
    }
    if !faults.is_empty() {
        return Err(EvalError::Faults(faults));
    }
    let report = build_report(&acc, weights)?;
    Ok(Evaluation { report, warnings })
}

/// Scores in-memory `(gt, pred, condition)` triples.
pub fn evaluate_maps(
    scenes: &[(PanopticLabelMap, PanopticLabelMap, ConditionTag)],
    weights: &WeightConfig,
) -> Result<ScoreReport, EvalError> {
    let mut acc = ScoreAccumulator::new();
    for (i, (gt, pred, tag)) in scenes.iter().enumerate() {
        let r = match_pair(gt, pred).map_err(|source| EvalError::Match {
            scene: i.to_string(),
            source,
        })?;
        acc.add(&r, *tag);
    }
    Ok(build_report(&acc, weights)?)
}
