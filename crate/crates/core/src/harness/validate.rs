use std::fmt;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::archive::{EntryStatus, SubmissionArchive};
use crate::evaluate::GroundTruth;
use crate::labels::{decode_label_map, CategoryTable, LabelError, LabelWarning, PanopticLabelMap, SceneManifest};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FaultKind {
    MissingPrediction,
    MissingSegments,
    DuplicatePrediction,
    UnexpectedPrediction,
    Unreadable(String),
    Undecodable(LabelError),
    DimensionMismatch { expected: (u32, u32), actual: (u32, u32) },
}

/// A problem with one scene of a submission.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fault {
    pub scene_id: String,
    pub kind: FaultKind,
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.scene_id)?;
        match &self.kind {
            FaultKind::MissingPrediction => f.write_str("missing prediction"),
            FaultKind::MissingSegments => f.write_str("missing segments json"),
            FaultKind::DuplicatePrediction => f.write_str("duplicate prediction files"),
            FaultKind::UnexpectedPrediction => f.write_str("prediction for a scene not in the manifest"),
            FaultKind::Unreadable(msg) => write!(f, "unreadable: {msg}"),
            FaultKind::Undecodable(e) => write!(f, "{e}"),
            FaultKind::DimensionMismatch { expected, actual } => write!(
                f,
                "size {}x{} does not match ground truth {}x{}",
                actual.0, actual.1, expected.0, expected.1
            ),
        }
    }
}

impl Fault {
    fn new(scene_id: &str, kind: FaultKind) -> Self {
        Self {
            scene_id: scene_id.to_string(),
            kind,
        }
    }
}

/// Checks that the archive holds exactly one complete prediction per
/// manifest scene and nothing else.
pub(crate) fn structural_faults(archive: &SubmissionArchive, manifest: &[SceneManifest]) -> Vec<Fault> {
    let mut faults = Vec::new();
    for scene in manifest {
        let kind = match archive.status(&scene.scene_id) {
            Some(EntryStatus::Complete) => continue,
            None | Some(EntryStatus::MissingPng) => FaultKind::MissingPrediction,
            Some(EntryStatus::MissingSegments) => FaultKind::MissingSegments,
            Some(EntryStatus::Duplicate) => FaultKind::DuplicatePrediction,
        };
        faults.push(Fault::new(&scene.scene_id, kind));
    }
    let known: std::collections::HashSet<&str> =
        manifest.iter().map(|s| s.scene_id.as_str()).collect();
    for id in archive.scene_ids() {
        if !known.contains(id) {
            faults.push(Fault::new(id, FaultKind::UnexpectedPrediction));
        }
    }
    faults
}

/// Reads and decodes one prediction, checking its size when `expected` is
/// given.
pub(crate) fn load_prediction(
    archive: &SubmissionArchive,
    scene_id: &str,
    cats: &CategoryTable,
    expected: Option<(u32, u32)>,
) -> Result<(PanopticLabelMap, Vec<LabelWarning>), Fault> {
    let (png, json) = archive
        .read(scene_id)
        .map_err(|e| Fault::new(scene_id, FaultKind::Unreadable(e.to_string())))?;
    let (map, warnings) = decode_label_map(&png, &json, cats)
        .map_err(|e| Fault::new(scene_id, FaultKind::Undecodable(e)))?;
    if let Some(expected) = expected {
        let actual = (map.width(), map.height());
        if actual != expected {
            return Err(Fault::new(
                scene_id,
                FaultKind::DimensionMismatch { expected, actual },
            ));
        }
    }
    Ok((map, warnings))
}

/// Validates a submission against a manifest.
///
/// With `ground_truth`, prediction sizes are also checked against the
/// ground-truth PNG headers. An empty list means the submission is valid.
pub fn validate_submission(
    archive: &SubmissionArchive,
    manifest: &[SceneManifest],
    cats: &CategoryTable,
    ground_truth: Option<&GroundTruth>,
) -> Vec<Fault> {
    let mut faults = structural_faults(archive, manifest);
    let complete: Vec<&SceneManifest> = manifest
        .iter()
        .filter(|s| archive.status(&s.scene_id) == Some(EntryStatus::Complete))
        .collect();

    let check = |scene: &&SceneManifest| -> Option<Fault> {
        let expected = match ground_truth.map(|gt| gt.dimensions(scene)) {
            Some(Ok(d)) => Some(d),
            Some(Err(e)) => {
                return Some(Fault::new(
                    &scene.scene_id,
                    FaultKind::Unreadable(format!("ground truth: {e}")),
                ))
            }
            None => None,
        };
        load_prediction(archive, &scene.scene_id, cats, expected).err()
    };
    #[cfg(feature = "parallel")]
    let decoded: Vec<Option<Fault>> = complete.par_iter().map(check).collect();
    #[cfg(not(feature = "parallel"))]
    let decoded: Vec<Option<Fault>> = complete.iter().map(check).collect();

    faults.extend(decoded.into_iter().flatten());
    faults
}
