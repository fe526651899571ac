//! Submission archives: `<scene_id>.png` + `<scene_id>_segments.json`,
//! either flat or one directory level deep, as a directory or a `.zip`.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

const SIDECAR_SUFFIX: &str = "_segments.json";

#[derive(Debug, Clone)]
enum Blob {
    File(PathBuf),
    Memory(Arc<[u8]>),
}

impl Blob {
    fn read(&self) -> io::Result<Vec<u8>> {
        match self {
            Blob::File(p) => fs::read(p),
            Blob::Memory(b) => Ok(b.to_vec()),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Entry {
    png: Vec<(String, Blob)>,
    json: Vec<(String, Blob)>,
}

/// Index of a submission's prediction files, keyed by scene id.
#[derive(Debug, Clone, Default)]
pub struct SubmissionArchive {
    entries: BTreeMap<String, Entry>,
}

/// What one scene has in an archive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryStatus {
    Complete,
    MissingPng,
    MissingSegments,
    Duplicate,
}

fn classify(name: &str) -> Option<(String, bool)> {
    if let Some(stem) = name.strip_suffix(SIDECAR_SUFFIX) {
        return Some((stem.to_string(), false));
    }
    let stem = name.strip_suffix(".png")?;
    Some((stem.to_string(), true))
}

impl SubmissionArchive {
    /// Opens a directory or, for a path ending in `.zip`, a zip file.
    pub fn open(path: &Path) -> io::Result<Self> {
        if path.is_dir() {
            Self::from_dir(path)
        } else if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("zip")) {
            Self::from_zip(&fs::read(path)?)
        } else {
            Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                format!("{} is neither a directory nor a .zip archive", path.display()),
            ))
        }
    }

    pub fn from_dir(root: &Path) -> io::Result<Self> {
        let mut archive = Self::default();
        for path in sorted_dir(root)? {
            if path.is_dir() {
                for inner in sorted_dir(&path)? {
                    if inner.is_file() {
                        archive.insert_file(root, inner);
                    }
                }
            } else if path.is_file() {
                archive.insert_file(root, path);
            }
        }
        Ok(archive)
    }

    #[cfg(feature = "archive")]
    pub fn from_zip(bytes: &[u8]) -> io::Result<Self> {
        use std::io::Read;

        let mut zip = zip::ZipArchive::new(io::Cursor::new(bytes)).map_err(io::Error::other)?;
        let mut archive = Self::default();
        let mut names: Vec<String> = zip.file_names().map(str::to_string).collect();
        names.sort();
        for name in names {
            let mut file = zip.by_name(&name).map_err(io::Error::other)?;
            if file.is_dir() {
                continue;
            }
            let depth = name.trim_end_matches('/').matches('/').count();
            if depth > 1 {
                continue;
            }
            let mut buf = Vec::with_capacity(file.size() as usize);
            file.read_to_end(&mut buf)?;
            let base = name.rsplit('/').next().unwrap_or(&name).to_string();
            archive.insert(&base, name.clone(), Blob::Memory(buf.into()));
        }
        Ok(archive)
    }

    #[cfg(not(feature = "archive"))]
    pub fn from_zip(_bytes: &[u8]) -> io::Result<Self> {
        Err(io::Error::new(
            io::ErrorKind::Unsupported,
            "zip support not compiled in",
        ))
    }

    /// Builds an archive from in-memory `(file name, bytes)` pairs.
    pub fn from_memory<I, S>(files: I) -> Self
    where
        I: IntoIterator<Item = (S, Vec<u8>)>,
        S: Into<String>,
    {
        let mut archive = Self::default();
        for (name, bytes) in files {
            let name = name.into();
            let base = name.rsplit('/').next().unwrap_or(&name).to_string();
            archive.insert(&base, name.clone(), Blob::Memory(bytes.into()));
        }
        archive
    }

    fn insert_file(&mut self, root: &Path, path: PathBuf) {
        let Some(base) = path.file_name().and_then(|n| n.to_str()).map(str::to_string) else {
            return;
        };
        let shown = path
            .strip_prefix(root)
            .unwrap_or(&path)
            .to_string_lossy()
            .into_owned();
        self.insert(&base, shown, Blob::File(path));
    }

    fn insert(&mut self, base: &str, shown: String, blob: Blob) {
        if base.starts_with('.') {
            return;
        }
        let Some((scene, is_png)) = classify(base) else {
            return;
        };
        let entry = self.entries.entry(scene).or_default();
        if is_png {
            entry.png.push((shown, blob));
        } else {
            entry.json.push((shown, blob));
        }
    }

    pub fn scene_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn contains(&self, scene_id: &str) -> bool {
        self.entries.contains_key(scene_id)
    }

    pub fn status(&self, scene_id: &str) -> Option<EntryStatus> {
        let e = self.entries.get(scene_id)?;
        Some(match (e.png.len(), e.json.len()) {
            (1, 1) => EntryStatus::Complete,
            (0, _) => EntryStatus::MissingPng,
            (_, 0) => EntryStatus::MissingSegments,
            _ => EntryStatus::Duplicate,
        })
    }

    /// Reads `(png, segments_json)` for a complete entry.
    pub fn read(&self, scene_id: &str) -> io::Result<(Vec<u8>, Vec<u8>)> {
        let e = self
            .entries
            .get(scene_id)
            .filter(|e| e.png.len() == 1 && e.json.len() == 1)
            .ok_or_else(|| {
                io::Error::new(
                    io::ErrorKind::NotFound,
                    format!("no complete prediction for `{scene_id}`"),
                )
            })?;
        Ok((e.png[0].1.read()?, e.json[0].1.read()?))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn sorted_dir(dir: &Path) -> io::Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<io::Result<_>>()?;
    out.sort();
    Ok(out)
}

/// Path of the segment sidecar that pairs with a label PNG.
pub fn sidecar_path(png: &Path) -> PathBuf {
    let stem = png
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    png.with_file_name(format!("{stem}{SIDECAR_SUFFIX}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classifies_names() {
        assert_eq!(classify("a.png"), Some(("a".into(), true)));
        assert_eq!(classify("a_segments.json"), Some(("a".into(), false)));
        assert_eq!(classify("manifest.json"), None);
        assert_eq!(classify("notes.txt"), None);
    }

    #[test]
    fn memory_archive_status() {
        let a = SubmissionArchive::from_memory([
            ("x.png", vec![1]),
            ("x_segments.json", vec![2]),
            ("y.png", vec![3]),
            ("sub/z_segments.json", vec![4]),
            ("w.png", vec![5]),
            ("sub/w.png", vec![6]),
            ("w_segments.json", vec![7]),
        ]);
        assert_eq!(a.status("x"), Some(EntryStatus::Complete));
        assert_eq!(a.status("y"), Some(EntryStatus::MissingSegments));
        assert_eq!(a.status("z"), Some(EntryStatus::MissingPng));
        assert_eq!(a.status("w"), Some(EntryStatus::Duplicate));
        assert_eq!(a.read("x").unwrap(), (vec![1], vec![2]));
        assert!(a.read("y").is_err());
    }

    #[test]
    fn sidecar_naming() {
        assert_eq!(
            sidecar_path(Path::new("gt/fog/a.png")),
            PathBuf::from("gt/fog/a_segments.json")
        );
    }
}
