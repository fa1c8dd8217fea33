//! Dataset manifests: the JSON index of raw exams on disk, and the
//! augmented index produced by dataset expansion. All paths inside a
//! manifest are relative to the manifest file's directory.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::pgm;
use crate::data::preprocess::Roi;
use crate::data::stride::{ExamRecord, VideoClip};
use crate::error::{Error, Result};

pub const NOMINAL_FPS: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn name(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ViewEntry {
    /// Directory of PGM frames, relative to the manifest.
    pub dir: String,
    pub view_index: u8,
    /// Crop rectangle [x, y, w, h] in frame coordinates.
    pub roi: [usize; 4],
}

impl ViewEntry {
    pub fn roi(&self) -> Roi {
        let [x, y, w, h] = self.roi;
        Roi { x, y, w, h }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatientEntry {
    pub patient_id: String,
    pub label: u8,
    pub split: Split,
    pub views: Vec<ViewEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    /// Frame geometry [h, w] shared by every video.
    pub frame_size: [usize; 2],
    pub patients: Vec<PatientEntry>,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for p in &self.patients {
            // ids become directory names downstream
            if p.patient_id.is_empty()
                || !p
                    .patient_id
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
            {
                return Err(Error::Input(format!(
                    "patient id '{}' must be non-empty [A-Za-z0-9_-]",
                    p.patient_id
                )));
            }
            if !seen.insert(&p.patient_id) {
                return Err(Error::Input(format!("duplicate patient id {}", p.patient_id)));
            }
            if p.label > 1 {
                return Err(Error::Input(format!(
                    "patient {} label {} is not binary",
                    p.patient_id, p.label
                )));
            }
            let mut idx: Vec<u8> = p.views.iter().map(|v| v.view_index).collect();
            idx.sort_unstable();
            if idx != [1, 2, 3, 4] {
                return Err(Error::Input(format!(
                    "patient {} needs views 1..=4 exactly once",
                    p.patient_id
                )));
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json_atomic(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let m: DatasetManifest =
            serde_json::from_slice(&bytes).map_err(|e| Error::json(path, e))?;
        m.validate()?;
        Ok(m)
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &PatientEntry> {
        self.patients.iter().filter(move |p| p.split == split)
    }
}

/// Frame files of one video directory, in name order.
pub fn frame_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "pgm"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Input(format!("no .pgm frames in {}", dir.display())));
    }
    Ok(paths)
}

/// Read a patient's four videos from disk.
pub fn load_exam(base: &Path, patient: &PatientEntry) -> Result<(ExamRecord, [Roi; 4])> {
    let mut views = Vec::with_capacity(4);
    let mut rois = [Roi { x: 0, y: 0, w: 0, h: 0 }; 4];
    for v in &patient.views {
        let dir = base.join(&v.dir);
        let frames = frame_paths(&dir)?
            .iter()
            .map(|p| pgm::read(p))
            .collect::<Result<Vec<_>>>()?;
        rois[(v.view_index - 1) as usize] = v.roi();
        views.push(VideoClip::new(frames, NOMINAL_FPS, v.view_index)?);
    }
    Ok((ExamRecord::new(patient.patient_id.clone(), patient.label, views)?, rois))
}

/// One rendered training/eval image in an expanded dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImageEntry {
    /// PGM path relative to the augmented manifest.
    pub path: String,
    pub source_patient: String,
    pub label: u8,
    pub split: Split,
    /// View stacking order, top band first; absent for single-video images.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub permutation: Option<[u8; 4]>,
    /// Frame-shuffle seed; absent for temporal order.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub view_index: Option<u8>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AugmentedManifest {
    pub regime: String,
    /// Rendered image geometry [h, w].
    pub image_size: [usize; 2],
    pub aligned: bool,
    pub images: Vec<ImageEntry>,
}

impl AugmentedManifest {
    pub fn save(&self, path: &Path) -> Result<()> {
        write_json_atomic(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_slice(&bytes).map_err(|e| Error::json(path, e))
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ImageEntry> {
        self.images.iter().filter(move |i| i.split == split)
    }
}

/// Serialize to pretty JSON and rename into place so readers never see a
/// half-written file.
pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::json(path, e))?;
    bytes.push(b'\n');
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, &bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
