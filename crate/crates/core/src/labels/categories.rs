use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::LabelError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    pub id: u32,
    pub name: String,
    pub is_thing: bool,
}

/// The class taxonomy plus the segment id reserved for unlabeled pixels.
///
/// `void_id` lives in the segment-id namespace: any pixel carrying it is
/// void, and no segment may use it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryTable {
    entries: Vec<Category>,
    void_id: u32,
    index: HashMap<u32, usize>,
}

/// The 19 evaluation classes, keyed by their conventional train ids.
const DEFAULT_TAXONOMY: [(u32, &str, bool); 19] = [
    (0, "road", false),
    (1, "sidewalk", false),
    (2, "building", false),
    (3, "wall", false),
    (4, "fence", false),
    (5, "pole", false),
    (6, "traffic light", false),
    (7, "traffic sign", false),
    (8, "vegetation", false),
    (9, "terrain", false),
    (10, "sky", false),
    (11, "person", true),
    (12, "rider", true),
    (13, "car", true),
    (14, "truck", true),
    (15, "bus", true),
    (16, "train", true),
    (17, "motorcycle", true),
    (18, "bicycle", true),
];

#[derive(Deserialize)]
#[serde(untagged)]
enum CategoriesFile {
    Bare(Vec<Category>),
    WithVoid {
        #[serde(default)]
        void_id: u32,
        categories: Vec<Category>,
    },
}

#[derive(Serialize)]
struct CategoriesOut<'a> {
    void_id: u32,
    categories: &'a [Category],
}

impl CategoryTable {
    pub fn new(entries: Vec<Category>, void_id: u32) -> Result<Self, LabelError> {
        if entries.is_empty() {
            return Err(LabelError::EmptyTaxonomy);
        }
        let mut index = HashMap::with_capacity(entries.len());
        for (i, c) in entries.iter().enumerate() {
            if index.insert(c.id, i).is_some() {
                return Err(LabelError::DuplicateCategory(c.id));
            }
        }
        Ok(Self {
            entries,
            void_id,
            index,
        })
    }

    /// Parses `categories.json`: either a bare array of `{id, name, is_thing}`
    /// (void id 0) or `{"void_id": n, "categories": [...]}`.
    pub fn from_json(bytes: &[u8]) -> Result<Self, LabelError> {
        let file: CategoriesFile =
            serde_json::from_slice(bytes).map_err(|e| LabelError::Json(e.to_string()))?;
        match file {
            CategoriesFile::Bare(entries) => Self::new(entries, 0),
            CategoriesFile::WithVoid {
                void_id,
                categories,
            } => Self::new(categories, void_id),
        }
    }

    pub fn to_json(&self) -> String {
        if self.void_id == 0 {
            serde_json::to_string_pretty(&self.entries).expect("categories serialize")
        } else {
            serde_json::to_string_pretty(&CategoriesOut {
                void_id: self.void_id,
                categories: &self.entries,
            })
            .expect("categories serialize")
        }
    }

    pub fn entries(&self) -> &[Category] {
        &self.entries
    }

    pub fn void_id(&self) -> u32 {
        self.void_id
    }

    pub fn with_void_id(mut self, void_id: u32) -> Self {
        self.void_id = void_id;
        self
    }

    pub fn get(&self, id: u32) -> Option<&Category> {
        self.index.get(&id).map(|&i| &self.entries[i])
    }

    pub fn contains(&self, id: u32) -> bool {
        self.index.contains_key(&id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn name(&self, id: u32) -> Option<&str> {
        self.get(id).map(|c| c.name.as_str())
    }
}

impl Default for CategoryTable {
    fn default() -> Self {
        let entries = DEFAULT_TAXONOMY
            .iter()
            .map(|&(id, name, is_thing)| Category {
                id,
                name: name.to_string(),
                is_thing,
            })
            .collect();
        Self::new(entries, 0).expect("default taxonomy is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_has_nineteen_classes() {
        let cats = CategoryTable::default();
        assert_eq!(cats.len(), 19);
        assert_eq!(cats.void_id(), 0);
        assert_eq!(cats.name(13), Some("car"));
        assert!(cats.get(13).unwrap().is_thing);
        assert!(!cats.get(10).unwrap().is_thing);
        assert_eq!(cats.entries().iter().filter(|c| c.is_thing).count(), 8);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let e = vec![
            Category {
                id: 1,
                name: "a".into(),
                is_thing: false,
            },
            Category {
                id: 1,
                name: "b".into(),
                is_thing: true,
            },
        ];
        assert_eq!(
            CategoryTable::new(e, 0),
            Err(LabelError::DuplicateCategory(1))
        );
    }

    #[test]
    fn json_forms() {
        let cats = CategoryTable::default();
        let back = CategoryTable::from_json(cats.to_json().as_bytes()).unwrap();
        assert_eq!(back, cats);

        let custom = br#"{"void_id": 255, "categories": [{"id": 3, "name": "x", "is_thing": true}]}"#;
        let t = CategoryTable::from_json(custom).unwrap();
        assert_eq!(t.void_id(), 255);
        assert_eq!(CategoryTable::from_json(t.to_json().as_bytes()).unwrap(), t);

        assert!(matches!(
            CategoryTable::from_json(b"[]"),
            Err(LabelError::EmptyTaxonomy)
        ));
        assert!(matches!(
            CategoryTable::from_json(b"[{\"id\": 1}]"),
            Err(LabelError::Json(_))
        ));
    }
}
