//! Panoptic label maps and their PNG + sidecar JSON encoding.
//!
//! Segment ids are packed into 8-bit RGB pixels as `R + 256·G + 65536·B`.
//! The sidecar lists every segment with its category:
//!
//! ```json
//! {"width": 2, "height": 1, "segments_info": [{"id": 7, "category_id": 13, "area": 2}]}
//! ```
//!
//! `width`/`height` are optional on input and checked when present. Areas
//! are always recomputed from the pixels.

use std::collections::{HashMap, HashSet};
use std::io::Cursor;

use serde::{Deserialize, Serialize};

use super::{CategoryTable, LabelError, LabelWarning};

/// Largest id representable in a 24-bit RGB pixel.
pub const MAX_SEGMENT_ID: u32 = (1 << 24) - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SegmentInfo {
    pub segment_id: u32,
    pub category_id: u32,
    pub area: u64,
}

/// Dense grid of segment ids plus per-segment metadata.
///
/// Construction checks that every non-void id in the grid is listed exactly
/// once and that every listed area equals its pixel count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PanopticLabelMap {
    width: u32,
    height: u32,
    void_id: u32,
    ids: Vec<u32>,
    segments: Vec<SegmentInfo>,
}

#[inline]
pub fn rgb_to_id(rgb: [u8; 3]) -> u32 {
    rgb[0] as u32 + 256 * rgb[1] as u32 + 65536 * rgb[2] as u32
}

#[inline]
pub fn id_to_rgb(id: u32) -> Result<[u8; 3], LabelError> {
    if id > MAX_SEGMENT_ID {
        return Err(LabelError::IdOutOfRange(id));
    }
    Ok([(id & 0xff) as u8, ((id >> 8) & 0xff) as u8, (id >> 16) as u8])
}

/// Pixel count per id, void included.
fn count_ids(ids: &[u32]) -> HashMap<u32, u64> {
    let mut counts: HashMap<u32, u64> = HashMap::new();
    let mut iter = ids.iter();
    let Some(&first) = iter.next() else {
        return counts;
    };
    // run-length over the row-major grid; label maps are mostly long runs
    let (mut cur, mut run) = (first, 1u64);
    for &id in iter {
        if id == cur {
            run += 1;
        } else {
            *counts.entry(cur).or_default() += run;
            cur = id;
            run = 1;
        }
    }
    *counts.entry(cur).or_default() += run;
    counts
}

impl PanopticLabelMap {
    /// Builds a map from a grid and a segment list whose areas must already
    /// match the grid.
    pub fn new(
        width: u32,
        height: u32,
        void_id: u32,
        ids: Vec<u32>,
        segments: Vec<SegmentInfo>,
    ) -> Result<Self, LabelError> {
        check_grid_len(width, height, ids.len())?;
        let counts = count_ids(&ids);
        let mut seen = HashSet::with_capacity(segments.len());
        for s in &segments {
            if s.segment_id == void_id {
                return Err(LabelError::VoidSegment(void_id));
            }
            if !seen.insert(s.segment_id) {
                return Err(LabelError::DuplicateSegment(s.segment_id));
            }
            let actual = counts.get(&s.segment_id).copied().unwrap_or(0);
            if actual == 0 {
                return Err(LabelError::EmptySegment(s.segment_id));
            }
            if actual != s.area {
                return Err(LabelError::AreaMismatch {
                    segment_id: s.segment_id,
                    declared: s.area,
                    actual,
                });
            }
        }
        if let Some(id) = first_unlisted(&counts, &seen, void_id) {
            return Err(LabelError::UnlistedSegment(id));
        }
        Ok(Self {
            width,
            height,
            void_id,
            ids,
            segments,
        })
    }

    /// Builds a map from a grid and `(segment_id, category_id)` pairs,
    /// computing areas from the pixels. Listed order is kept.
    pub fn from_grid(
        width: u32,
        height: u32,
        void_id: u32,
        ids: Vec<u32>,
        categories: &[(u32, u32)],
    ) -> Result<Self, LabelError> {
        check_grid_len(width, height, ids.len())?;
        let counts = count_ids(&ids);
        let segments = categories
            .iter()
            .map(|&(segment_id, category_id)| SegmentInfo {
                segment_id,
                category_id,
                area: counts.get(&segment_id).copied().unwrap_or(0),
            })
            .collect();
        Self::new(width, height, void_id, ids, segments)
    }

    /// A map where every pixel is void.
    pub fn void(width: u32, height: u32, void_id: u32) -> Self {
        Self {
            width,
            height,
            void_id,
            ids: vec![void_id; width as usize * height as usize],
            segments: Vec::new(),
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn void_id(&self) -> u32 {
        self.void_id
    }

    /// Row-major segment ids.
    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn segments(&self) -> &[SegmentInfo] {
        &self.segments
    }

    pub fn segment(&self, id: u32) -> Option<&SegmentInfo> {
        self.segments.iter().find(|s| s.segment_id == id)
    }

    pub fn get(&self, x: u32, y: u32) -> u32 {
        self.ids[(y * self.width + x) as usize]
    }

    pub fn void_pixels(&self) -> u64 {
        self.ids.iter().filter(|&&id| id == self.void_id).count() as u64
    }

    /// Every segment's category must exist in `cats`.
    pub fn check_categories(&self, cats: &CategoryTable) -> Result<(), LabelError> {
        for s in &self.segments {
            if !cats.contains(s.category_id) {
                return Err(LabelError::UnknownCategory {
                    segment_id: s.segment_id,
                    category_id: s.category_id,
                });
            }
        }
        Ok(())
    }

    pub fn into_parts(self) -> (u32, u32, u32, Vec<u32>, Vec<SegmentInfo>) {
        (self.width, self.height, self.void_id, self.ids, self.segments)
    }
}

fn check_grid_len(width: u32, height: u32, actual: usize) -> Result<(), LabelError> {
    let expected = width as usize * height as usize;
    if expected != actual {
        return Err(LabelError::GridSize {
            width,
            height,
            expected,
            actual,
        });
    }
    Ok(())
}

fn first_unlisted(counts: &HashMap<u32, u64>, listed: &HashSet<u32>, void_id: u32) -> Option<u32> {
    counts
        .keys()
        .filter(|&&id| id != void_id && !listed.contains(&id))
        .min()
        .copied()
}

#[derive(Debug, Serialize, Deserialize)]
struct SegmentsFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    width: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    height: Option<u32>,
    #[serde(alias = "segments")]
    segments_info: Vec<SegmentEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SegmentEntry {
    id: u32,
    #[serde(alias = "category")]
    category_id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    area: Option<u64>,
}

fn png_err(e: png::DecodingError) -> LabelError {
    LabelError::Png(e.to_string())
}

/// Reads only the PNG header and returns `(width, height)`.
pub fn read_png_dimensions(png_bytes: &[u8]) -> Result<(u32, u32), LabelError> {
    let reader = png::Decoder::new(Cursor::new(png_bytes))
        .read_info()
        .map_err(png_err)?;
    let info = reader.info();
    Ok((info.width, info.height))
}

fn decode_rgb(png_bytes: &[u8]) -> Result<(u32, u32, Vec<u8>), LabelError> {
    let mut decoder = png::Decoder::new(Cursor::new(png_bytes));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(png_err)?;
    let (color, depth) = {
        let info = reader.info();
        (info.color_type, info.bit_depth)
    };
    if color != png::ColorType::Rgb || depth != png::BitDepth::Eight {
        return Err(LabelError::UnsupportedPng(format!("{color:?} at {depth:?}")));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| LabelError::Png("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let frame = reader.next_frame(&mut buf).map_err(png_err)?;
    buf.truncate(frame.buffer_size());
    // rows are tightly packed for 8-bit RGB
    if frame.line_size != frame.width as usize * 3 {
        return Err(LabelError::Png("unexpected row stride".into()));
    }
    Ok((frame.width, frame.height, buf))
}

/// Decodes a panoptic PNG and its sidecar into a label map.
///
/// Areas come from the pixels; a disagreeing declared area yields a
/// [`LabelWarning`] rather than an error.
pub fn decode_label_map(
    png_bytes: &[u8],
    segments_json: &[u8],
    cats: &CategoryTable,
) -> Result<(PanopticLabelMap, Vec<LabelWarning>), LabelError> {
    let (width, height, rgb) = decode_rgb(png_bytes)?;
    let file: SegmentsFile =
        serde_json::from_slice(segments_json).map_err(|e| LabelError::Json(e.to_string()))?;
    let declared = (file.width.unwrap_or(width), file.height.unwrap_or(height));
    if declared != (width, height) {
        return Err(LabelError::DimensionMismatch {
            declared,
            actual: (width, height),
        });
    }

    let ids: Vec<u32> = rgb
        .chunks_exact(3)
        .map(|p| rgb_to_id([p[0], p[1], p[2]]))
        .collect();
    let counts = count_ids(&ids);
    let void_id = cats.void_id();

    let mut warnings = Vec::new();
    let mut seen = HashSet::with_capacity(file.segments_info.len());
    let mut segments = Vec::with_capacity(file.segments_info.len());
    for entry in &file.segments_info {
        if entry.id == void_id {
            return Err(LabelError::VoidSegment(void_id));
        }
        if !seen.insert(entry.id) {
            return Err(LabelError::DuplicateSegment(entry.id));
        }
        if !cats.contains(entry.category_id) {
            return Err(LabelError::UnknownCategory {
                segment_id: entry.id,
                category_id: entry.category_id,
            });
        }
        let actual = counts.get(&entry.id).copied().unwrap_or(0);
        if actual == 0 {
            return Err(LabelError::EmptySegment(entry.id));
        }
        if let Some(declared) = entry.area {
            if declared != actual {
                warnings.push(LabelWarning::AreaMismatch {
                    segment_id: entry.id,
                    declared,
                    actual,
                });
            }
        }
        segments.push(SegmentInfo {
            segment_id: entry.id,
            category_id: entry.category_id,
            area: actual,
        });
    }
    if let Some(id) = first_unlisted(&counts, &seen, void_id) {
        return Err(LabelError::UnlistedSegment(id));
    }

    Ok((
        PanopticLabelMap {
            width,
            height,
            void_id,
            ids,
            segments,
        },
        warnings,
    ))
}

/// Encodes a label map as `(png_bytes, segments_json)`.
pub fn encode_label_map(map: &PanopticLabelMap) -> Result<(Vec<u8>, Vec<u8>), LabelError> {
    let mut rgb = Vec::with_capacity(map.ids.len() * 3);
    for &id in &map.ids {
        rgb.extend_from_slice(&id_to_rgb(id)?);
    }

    let mut png_bytes = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut png_bytes, map.width, map.height);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc
            .write_header()
            .map_err(|e| LabelError::Png(e.to_string()))?;
        writer
            .write_image_data(&rgb)
            .map_err(|e| LabelError::Png(e.to_string()))?;
        writer.finish().map_err(|e| LabelError::Png(e.to_string()))?;
    }

    let file = SegmentsFile {
        width: Some(map.width),
        height: Some(map.height),
        segments_info: map
            .segments
            .iter()
            .map(|s| SegmentEntry {
                id: s.segment_id,
                category_id: s.category_id,
                area: Some(s.area),
            })
            .collect(),
    };
    let mut json = serde_json::to_vec_pretty(&file).map_err(|e| LabelError::Json(e.to_string()))?;
    json.push(b'\n');
    Ok((png_bytes, json))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn raw_png(width: u32, height: u32, rgb: &[u8]) -> Vec<u8> {
        let mut out = Vec::new();
        let mut enc = png::Encoder::new(&mut out, width, height);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc.write_header().unwrap();
        w.write_image_data(rgb).unwrap();
        w.finish().unwrap();
        out
    }

    #[test]
    fn single_void_pixel() {
        let cats = CategoryTable::default();
        let png = raw_png(1, 1, &[0, 0, 0]);
        let (map, warnings) = decode_label_map(&png, br#"{"segments_info": []}"#, &cats).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(map.ids(), &[0]);
        assert!(map.segments().is_empty());
        assert_eq!(map.void_pixels(), 1);
    }

    #[test]
    fn two_pixel_car() {
        let cats = CategoryTable::default();
        let png = raw_png(2, 1, &[7, 0, 0, 7, 0, 0]);
        let json = br#"{"segments_info": [{"id": 7, "category_id": 13, "area": 2}]}"#;
        let (map, warnings) = decode_label_map(&png, json, &cats).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(
            map.segments(),
            &[SegmentInfo {
                segment_id: 7,
                category_id: 13,
                area: 2
            }]
        );
    }

    #[test]
    fn stale_area_warns_and_is_recomputed() {
        let cats = CategoryTable::default();
        let png = raw_png(2, 1, &[7, 0, 0, 7, 0, 0]);
        let json = br#"{"segments_info": [{"id": 7, "category_id": 13, "area": 5}]}"#;
        let (map, warnings) = decode_label_map(&png, json, &cats).unwrap();
        assert_eq!(map.segments()[0].area, 2);
        assert_eq!(
            warnings,
            vec![LabelWarning::AreaMismatch {
                segment_id: 7,
                declared: 5,
                actual: 2
            }]
        );
    }

    #[test]
    fn decode_errors() {
        let cats = CategoryTable::default();
        let png = raw_png(2, 1, &[7, 0, 0, 0, 0, 0]);
        let car = br#"{"segments_info": [{"id": 7, "category_id": 13}]}"#;

        assert!(matches!(
            decode_label_map(b"not a png", car, &cats),
            Err(LabelError::Png(_))
        ));
        assert_eq!(
            decode_label_map(&png, br#"{"segments_info": []}"#, &cats),
            Err(LabelError::UnlistedSegment(7))
        );
        assert_eq!(
            decode_label_map(
                &png,
                br#"{"segments_info": [{"id": 7, "category_id": 13}, {"id": 8, "category_id": 13}]}"#,
                &cats
            ),
            Err(LabelError::EmptySegment(8))
        );
        assert_eq!(
            decode_label_map(
                &png,
                br#"{"segments_info": [{"id": 7, "category_id": 99}]}"#,
                &cats
            ),
            Err(LabelError::UnknownCategory {
                segment_id: 7,
                category_id: 99
            })
        );
        assert_eq!(
            decode_label_map(
                &png,
                br#"{"width": 3, "height": 1, "segments_info": [{"id": 7, "category_id": 13}]}"#,
                &cats
            ),
            Err(LabelError::DimensionMismatch {
                declared: (3, 1),
                actual: (2, 1)
            })
        );
        assert_eq!(
            decode_label_map(
                &png,
                br#"{"segments_info": [{"id": 7, "category_id": 13}, {"id": 7, "category_id": 13}]}"#,
                &cats
            ),
            Err(LabelError::DuplicateSegment(7))
        );
        assert!(matches!(
            decode_label_map(&png, b"{", &cats),
            Err(LabelError::Json(_))
        ));
    }

    #[test]
    fn rejects_non_rgb_png() {
        let mut out = Vec::new();
        let mut enc = png::Encoder::new(&mut out, 1, 1);
        enc.set_color(png::ColorType::Rgba);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc.write_header().unwrap();
        w.write_image_data(&[0, 0, 0, 255]).unwrap();
        w.finish().unwrap();
        let cats = CategoryTable::default();
        assert!(matches!(
            decode_label_map(&out, br#"{"segments_info": []}"#, &cats),
            Err(LabelError::UnsupportedPng(_))
        ));
    }

    #[test]
    fn encode_void_and_high_ids() {
        let map = PanopticLabelMap::void(1, 1, 0);
        let (png, _) = encode_label_map(&map).unwrap();
        let (_, _, rgb) = decode_rgb(&png).unwrap();
        assert_eq!(rgb, vec![0, 0, 0]);

        assert_eq!(id_to_rgb(65536).unwrap(), [0, 0, 1]);
        assert_eq!(id_to_rgb(1 << 24), Err(LabelError::IdOutOfRange(1 << 24)));

        let big = PanopticLabelMap::from_grid(1, 1, 0, vec![1 << 24], &[(1 << 24, 13)]).unwrap();
        assert_eq!(
            encode_label_map(&big),
            Err(LabelError::IdOutOfRange(1 << 24))
        );
    }

    #[test]
    fn constructor_checks_invariants() {
        assert_eq!(
            PanopticLabelMap::from_grid(2, 1, 0, vec![3, 4], &[(3, 1)]),
            Err(LabelError::UnlistedSegment(4))
        );
        assert!(matches!(
            PanopticLabelMap::from_grid(2, 2, 0, vec![3, 4], &[(3, 1), (4, 1)]),
            Err(LabelError::GridSize { .. })
        ));
        assert_eq!(
            PanopticLabelMap::new(
                1,
                1,
                0,
                vec![3],
                vec![SegmentInfo {
                    segment_id: 3,
                    category_id: 1,
                    area: 4
                }]
            ),
            Err(LabelError::AreaMismatch {
                segment_id: 3,
                declared: 4,
                actual: 1
            })
        );
    }

    fn arb_map() -> impl Strategy<Value = PanopticLabelMap> {
        (1u32..12, 1u32..12, prop::collection::vec(1u32..MAX_SEGMENT_ID, 1..5))
            .prop_flat_map(|(w, h, seg_ids)| {
                let n = (w * h) as usize;
                let choices = seg_ids.len();
                (
                    Just((w, h, seg_ids)),
                    prop::collection::vec(0..=choices, n),
                    prop::collection::vec(0u32..19, choices),
                )
            })
            .prop_map(|((w, h, seg_ids), picks, classes)| {
                // pick == choices means void
                let ids: Vec<u32> = picks
                    .iter()
                    .map(|&p| if p == seg_ids.len() { 0 } else { seg_ids[p] })
                    .collect();
                let mut listed = Vec::new();
                for (i, &id) in seg_ids.iter().enumerate() {
                    if ids.contains(&id) && !listed.iter().any(|&(s, _)| s == id) {
                        listed.push((id, classes[i]));
                    }
                }
                PanopticLabelMap::from_grid(w, h, 0, ids, &listed).unwrap()
            })
    }

    proptest! {
        #[test]
        fn round_trip(map in arb_map()) {
            let cats = CategoryTable::default();
            let (png, json) = encode_label_map(&map).unwrap();
            let (back, warnings) = decode_label_map(&png, &json, &cats).unwrap();
            prop_assert!(warnings.is_empty());
            prop_assert_eq!(&back, &map);
            let total: u64 = back.segments().iter().map(|s| s.area).sum::<u64>() + back.void_pixels();
            prop_assert_eq!(total, (back.width() * back.height()) as u64);
        }
    }
}
