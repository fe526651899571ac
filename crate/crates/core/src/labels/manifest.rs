use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::LabelError;
use crate::condition::ConditionTag;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

/// One scene of an evaluation set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneManifest {
    pub scene_id: String,
    pub condition: ConditionTag,
    /// Ground-truth PNG, relative to the ground-truth root. The sidecar sits
    /// next to it as `<stem>_segments.json`.
    pub gt_path: String,
    pub split: Split,
}

// Every field optional so a missing one becomes a typed error, not a serde message.
#[derive(Deserialize)]
struct RawRecord {
    scene_id: Option<String>,
    condition: Option<String>,
    gt_path: Option<String>,
    split: Option<String>,
}

/// Parses `manifest.json`, an array of `{scene_id, condition, gt_path, split}`.
pub fn load_manifest(json: &[u8]) -> Result<Vec<SceneManifest>, LabelError> {
    let raw: Vec<RawRecord> =
        serde_json::from_slice(json).map_err(|e| LabelError::Json(e.to_string()))?;
    let mut seen = HashSet::with_capacity(raw.len());
    let mut out = Vec::with_capacity(raw.len());
    for (index, r) in raw.into_iter().enumerate() {
        let missing = |field| LabelError::MissingField { index, field };
        let scene_id = r.scene_id.ok_or_else(|| missing("scene_id"))?;
        let condition = r.condition.ok_or_else(|| missing("condition"))?;
        let gt_path = r.gt_path.ok_or_else(|| missing("gt_path"))?;
        let split = r.split.ok_or_else(|| missing("split"))?;

        let condition = condition
            .parse()
            .map_err(|_| LabelError::UnknownCondition {
                scene: scene_id.clone(),
                value: condition.clone(),
            })?;
        let split = match split.as_str() {
            "train" => Split::Train,
            "val" => Split::Val,
            "test" => Split::Test,
            _ => return Err(LabelError::UnknownSplit { index, value: split }),
        };
        if !seen.insert(scene_id.clone()) {
            return Err(LabelError::DuplicateScene(scene_id));
        }
        out.push(SceneManifest {
            scene_id,
            condition,
            gt_path,
            split,
        });
    }
    Ok(out)
}

pub fn condition_counts(scenes: &[SceneManifest]) -> BTreeMap<ConditionTag, usize> {
    let mut counts = BTreeMap::new();
    for s in scenes {
        *counts.entry(s.condition).or_insert(0) += 1;
    }
    counts
}
