//! Dataset ingestion: one directory per subject, images sorted
//! lexicographically, every image run through the standard preprocessing.

use std::fs;
use std::path::{Path, PathBuf};

use curveface_core::image::Image;

use crate::error::{Error, Result};
use crate::imgio;

/// Subjects kept per dataset unless configured otherwise.
pub const DEFAULT_SUBJECT_LIMIT: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Orl,
    Grimace,
    Gatech,
    Custom,
}

impl DatasetKind {
    /// Images each subject directory is expected to hold, where the
    /// collection pins it down.
    pub fn expected_images_per_subject(self) -> Option<usize> {
        match self {
            DatasetKind::Orl => Some(10),
            DatasetKind::Grimace => Some(20),
            DatasetKind::Gatech => Some(15),
            DatasetKind::Custom => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DatasetKind::Orl => "orl",
            DatasetKind::Grimace => "grimace",
            DatasetKind::Gatech => "gatech",
            DatasetKind::Custom => "custom",
        }
    }
}

impl std::str::FromStr for DatasetKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "orl" => Ok(DatasetKind::Orl),
            "grimace" => Ok(DatasetKind::Grimace),
            "gatech" | "georgia-tech" => Ok(DatasetKind::Gatech),
            "custom" => Ok(DatasetKind::Custom),
            other => Err(format!("unknown dataset kind '{other}'")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DatasetSpec {
    pub root: PathBuf,
    pub subject_limit: usize,
    pub kind: DatasetKind,
}

impl DatasetSpec {
    pub fn new(root: impl Into<PathBuf>, kind: DatasetKind) -> Self {
        DatasetSpec { root: root.into(), subject_limit: DEFAULT_SUBJECT_LIMIT, kind }
    }
}

/// Loaded dataset: preprocessed images with 0-based subject labels and the
/// subject directory names those labels map to.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub items: Vec<(Image, usize)>,
    pub subjects: Vec<String>,
}

impl Dataset {
    pub fn labels(&self) -> Vec<usize> {
        self.items.iter().map(|&(_, l)| l).collect()
    }
}

const IMAGE_EXTENSIONS: [&str; 4] = ["pgm", "png", "jpg", "jpeg"];

fn is_image_file(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        .unwrap_or(false)
}

/// Load the first `subject_limit` subject directories (lexicographic order)
/// with their images preprocessed and labeled by subject index.
pub fn load_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    if spec.subject_limit < 2 {
        return Err(Error::Dataset(format!(
            "subject limit must be at least 2, got {}",
            spec.subject_limit
        )));
    }

    let mut subject_dirs: Vec<PathBuf> = fs::read_dir(&spec.root)
        .map_err(|e| Error::io(&spec.root, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subject_dirs.sort();
    if subject_dirs.is_empty() {
        return Err(Error::Dataset(format!(
            "no subject directories under {}",
            spec.root.display()
        )));
    }
    subject_dirs.truncate(spec.subject_limit);

    let expected = spec.kind.expected_images_per_subject();
    let mut items = Vec::new();
    let mut subjects = Vec::new();
    for (label, dir) in subject_dirs.iter().enumerate() {
        let mut files: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && is_image_file(p))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(Error::Dataset(format!(
                "subject directory {} holds no readable images",
                dir.display()
            )));
        }
        if let Some(expected) = expected {
            if files.len() != expected {
                return Err(Error::Dataset(format!(
                    "{} holds {} images; the {} layout expects {expected}",
                    dir.display(),
                    files.len(),
                    spec.kind.name()
                )));
            }
        }
        for file in &files {
            let raw = imgio::load_image(file)?;
            let prepared = imgio::preprocess(&raw)?;
            items.push((prepared.image, label));
        }
        subjects.push(
            dir.file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| label.to_string()),
        );
    }

    Ok(Dataset { items, subjects })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pgm;
    use std::path::Path;

    fn write_subject(root: &Path, name: &str, count: usize, base: u8) {
        let dir = root.join(name);
        fs::create_dir_all(&dir).unwrap();
        for i in 0..count {
            let value = f64::from(base.wrapping_add(i as u8 * 3) % 250);
            let img = Image::constant(6, 4, value, 8).unwrap();
            pgm::write_p5(&dir.join(format!("{i:02}.pgm")), &img).unwrap();
        }
    }

    #[test]
    fn loads_sorted_subjects_up_to_the_limit() {
        let tmp = tempfile::tempdir().unwrap();
        for (i, name) in ["s03", "s01", "s02", "s04"].iter().enumerate() {
            write_subject(tmp.path(), name, 3, 10 * (i as u8 + 1));
        }
        let spec = DatasetSpec {
            root: tmp.path().to_path_buf(),
            subject_limit: 3,
            kind: DatasetKind::Custom,
        };
        let ds = load_dataset(&spec).unwrap();
        assert_eq!(ds.subjects, vec!["s01", "s02", "s03"]);
        assert_eq!(ds.items.len(), 9);
        assert_eq!(ds.labels()[..3], [0, 0, 0]);
    }

    #[test]
    fn empty_root_is_a_dataset_error() {
        let tmp = tempfile::tempdir().unwrap();
        let spec = DatasetSpec::new(tmp.path(), DatasetKind::Custom);
        assert!(matches!(load_dataset(&spec), Err(Error::Dataset(_))));
    }

    #[test]
    fn subject_without_images_is_a_dataset_error() {
        let tmp = tempfile::tempdir().unwrap();
        write_subject(tmp.path(), "s1", 2, 5);
        fs::create_dir_all(tmp.path().join("s2")).unwrap();
        let spec = DatasetSpec::new(tmp.path(), DatasetKind::Custom);
        assert!(matches!(load_dataset(&spec), Err(Error::Dataset(_))));
    }

    #[test]
    fn named_layouts_enforce_their_image_counts() {
        let tmp = tempfile::tempdir().unwrap();
        write_subject(tmp.path(), "s1", 9, 5);
        write_subject(tmp.path(), "s2", 10, 6);
        let spec = DatasetSpec {
            root: tmp.path().to_path_buf(),
            subject_limit: 2,
            kind: DatasetKind::Orl,
        };
        assert!(matches!(load_dataset(&spec), Err(Error::Dataset(_))));
    }

    #[test]
    fn missing_root_is_an_io_error() {
        let spec = DatasetSpec::new("/nonexistent/path/xyz", DatasetKind::Custom);
        assert!(matches!(load_dataset(&spec), Err(Error::Io { .. })));
    }
}
