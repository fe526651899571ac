//! Label files: class taxonomy, panoptic label maps and scene manifests.

mod categories;
mod manifest;
mod map;

pub use categories::{Category, CategoryTable};
pub use manifest::{condition_counts, load_manifest, SceneManifest, Split};
pub use map::{
    decode_label_map, encode_label_map, id_to_rgb, read_png_dimensions, rgb_to_id,
    PanopticLabelMap, SegmentInfo, MAX_SEGMENT_ID,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabelError {
    #[error("malformed PNG: {0}")]
    Png(String),
    #[error("unsupported PNG layout: expected 8-bit RGB, found {0}")]
    UnsupportedPng(String),
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("segment id {0} appears in the label grid but not in the segment list")]
    UnlistedSegment(u32),
    #[error("segment id {0} is listed but has no pixels in the label grid")]
    EmptySegment(u32),
    #[error("segment id {0} is listed more than once")]
    DuplicateSegment(u32),
    #[error("segment list contains the void id {0}")]
    VoidSegment(u32),
    #[error("segment {segment_id} has unknown category {category_id}")]
    UnknownCategory { segment_id: u32, category_id: u32 },
    #[error("dimension mismatch: declared {declared:?}, actual {actual:?}")]
    DimensionMismatch {
        declared: (u32, u32),
        actual: (u32, u32),
    },
    #[error("segment id {0} does not fit in 24-bit RGB")]
    IdOutOfRange(u32),
    #[error("grid holds {actual} ids but {width}x{height} needs {expected}")]
    GridSize {
        width: u32,
        height: u32,
        expected: usize,
        actual: usize,
    },
    #[error("segment {segment_id} declares area {declared} but covers {actual} pixels")]
    AreaMismatch {
        segment_id: u32,
        declared: u64,
        actual: u64,
    },
    #[error("duplicate category id {0}")]
    DuplicateCategory(u32),
    #[error("category table is empty")]
    EmptyTaxonomy,
    #[error("duplicate scene id `{0}`")]
    DuplicateScene(String),
    #[error("scene `{scene}`: unknown condition `{value}`")]
    UnknownCondition { scene: String, value: String },
    #[error("manifest record {index}: missing field `{field}`")]
    MissingField { index: usize, field: &'static str },
    #[error("manifest record {index}: unknown split `{value}`")]
    UnknownSplit { index: usize, value: String },
}

/// Non-fatal issue found while decoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelWarning {
    /// The sidecar declared an area that disagrees with the pixel count.
    /// The pixel count wins.
    AreaMismatch {
        segment_id: u32,
        declared: u64,
        actual: u64,
    },
}

impl std::fmt::Display for LabelWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LabelWarning::AreaMismatch {
                segment_id,
                declared,
                actual,
            } => write!(
                f,
                "segment {segment_id}: declared area {declared}, recomputed {actual} from pixels"
            ),
        }
    }
}
