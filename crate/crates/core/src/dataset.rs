//! On-disk dataset layout used by the synthetic generator:
//!
//! ```text
//! <root>/manifest.json
//! <root>/categories.json
//! <root>/gt/<scene>.png, <scene>_segments.json
//! <root>/pred/<scene>.png, <scene>_segments.json
//! ```

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::condition::ConditionTag;
use crate::labels::{encode_label_map, CategoryTable, LabelError, PanopticLabelMap, SceneManifest, Split};
use crate::oracle::{generate_scene, SynthError, SynthSpec};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Label(#[from] LabelError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

#[derive(Debug, Clone)]
pub struct DatasetLayout {
    pub root: PathBuf,
}

impl DatasetLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn gt_dir(&self) -> PathBuf {
        self.root.join("gt")
    }

    pub fn pred_dir(&self) -> PathBuf {
        self.root.join("pred")
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    pub fn categories_path(&self) -> PathBuf {
        self.root.join("categories.json")
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), DatasetError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| DatasetError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, bytes).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `<dir>/<stem>.png` and `<dir>/<stem>_segments.json`.
pub fn write_label_map(dir: &Path, stem: &str, map: &PanopticLabelMap) -> Result<(), DatasetError> {
    let (png, json) = encode_label_map(map)?;
    write(&dir.join(format!("{stem}.png")), &png)?;
    write(&dir.join(format!("{stem}_segments.json")), &json)
}

/// Scene ids are `scene_0000`, `scene_0001`, ...; conditions cycle through
/// all eight cells so every condition is covered once `n >= 8`.
pub fn synth_manifest(n_scenes: usize) -> Vec<SceneManifest> {
    let tags = ConditionTag::all();
    (0..n_scenes)
        .map(|i| {
            let scene_id = format!("scene_{i:04}");
            SceneManifest {
                gt_path: format!("{scene_id}.png"),
                scene_id,
                condition: tags[i % tags.len()],
                split: Split::Val,
            }
        })
        .collect()
}

/// Generates `n_scenes` scenes from `base` (scene `i` uses seed
/// `base.seed + i`) and writes the full layout under `layout.root`.
pub fn write_synthetic(
    layout: &DatasetLayout,
    base: &SynthSpec,
    n_scenes: usize,
) -> Result<Vec<SceneManifest>, DatasetError> {
    base.validate()?;
    let manifest = synth_manifest(n_scenes);
    for (i, scene) in manifest.iter().enumerate() {
        let spec = SynthSpec {
            seed: base.seed.wrapping_add(i as u64),
            ..base.clone()
        };
        let s = generate_scene(&spec)?;
        write_label_map(&layout.gt_dir(), &scene.scene_id, &s.gt)?;
        write_label_map(&layout.pred_dir(), &scene.scene_id, &s.pred)?;
    }
    let mut json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    json.push(b'\n');
    write(&layout.manifest_path(), &json)?;
    write(&layout.categories_path(), CategoryTable::default().to_json().as_bytes())?;
    Ok(manifest)
}
