//! Dataset expansion: materialize every rendered image for a manifest to
//! disk. Augmentation applies to the training split only; validation and
//! test exams always get the one canonical stacked image (identity view
//! order, temporal frames), whatever the regime.

use std::fs;
use std::path::{Path, PathBuf};

use crate::data::manifest::{
    frame_paths, load_exam, AugmentedManifest, DatasetManifest, ImageEntry, Split,
};
use crate::data::pgm;
use crate::data::stride::{
    exam_to_vis, ssda_expand, video_to_svi, video_to_vi, Mode, RegimeSpec, RenderSpec, StrideImage,
};
use crate::error::{Error, Result};

/// Expand `manifest_path`'s dataset under `regime` into `out_dir`, writing
/// one PGM per image plus `manifest.json`. `out_dir` must be empty or
/// absent; on failure it is removed entirely.
pub fn expand_dataset(
    manifest_path: &Path,
    regime: &RegimeSpec,
    spec: &RenderSpec,
    out_dir: &Path,
) -> Result<AugmentedManifest> {
    regime.validate()?;
    if matches!(regime.mode, Mode::Vi | Mode::Svi) && spec.aligned {
        return Err(Error::Config(
            "single-video regimes produce square images; aligned stacking would give \
             the validation split a different geometry"
                .into(),
        ));
    }
    let manifest = DatasetManifest::load(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));

    // verify every input exists before writing anything
    let mut missing = Vec::new();
    for p in &manifest.patients {
        for v in &p.views {
            if let Err(e) = frame_paths(&base.join(&v.dir)) {
                missing.push(e.to_string());
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::Input(format!(
            "{} unreadable video director{}:\n  {}",
            missing.len(),
            if missing.len() == 1 { "y" } else { "ies" },
            missing.join("\n  ")
        )));
    }

    if out_dir.exists() {
        let occupied = fs::read_dir(out_dir)
            .map_err(|e| Error::io(out_dir, e))?
            .next()
            .is_some();
        if occupied {
            return Err(Error::Input(format!(
                "output directory {} is not empty",
                out_dir.display()
            )));
        }
    } else {
        fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    }

    match expand_into(&manifest, base, regime, spec, out_dir) {
        Ok(m) => Ok(m),
        Err(e) => {
            let _ = fs::remove_dir_all(out_dir);
            Err(e)
        }
    }
}

fn expand_into(
    manifest: &DatasetManifest,
    base: &Path,
    regime: &RegimeSpec,
    spec: &RenderSpec,
    out_dir: &Path,
) -> Result<AugmentedManifest> {
    let image_size = match regime.mode {
        Mode::Vi | Mode::Svi => [spec.width, spec.width],
        Mode::Vis | Mode::Ssda => [spec.stack_height(), spec.width],
    };
    let mut entries = Vec::new();
    for patient in &manifest.patients {
        let (exam, rois) = load_exam(base, patient)?;
        let images: Vec<(String, StrideImage)> = if patient.split == Split::Train {
            match regime.mode {
                Mode::Vi => exam
                    .views
                    .iter()
                    .map(|clip| {
                        let img = video_to_vi(
                            clip,
                            &rois[(clip.view_index - 1) as usize],
                            &exam.patient_id,
                            spec,
                        )?;
                        Ok((format!("view{}.pgm", clip.view_index), img))
                    })
                    .collect::<Result<_>>()?,
                Mode::Svi => {
                    let seed = regime.seed_set[0];
                    exam.views
                        .iter()
                        .map(|clip| {
                            let img = video_to_svi(
                                clip,
                                &rois[(clip.view_index - 1) as usize],
                                seed,
                                &exam.patient_id,
                                spec,
                            )?;
                            Ok((format!("view{}_s{seed:02}.pgm", clip.view_index), img))
                        })
                        .collect::<Result<_>>()?
                }
                Mode::Vis => {
                    let img = exam_to_vis(&exam, &rois, &[1, 2, 3, 4], spec)?;
                    vec![("00_1234.pgm".to_string(), img)]
                }
                Mode::Ssda => {
                    let expanded = ssda_expand(&exam, &rois, regime, spec)?;
                    expanded
                        .into_iter()
                        .map(|img| {
                            let p = img.provenance.permutation.unwrap();
                            let k = match img.provenance.seed {
                                None => 0,
                                Some(s) => {
                                    1 + regime.seed_set.iter().position(|&x| x == s).unwrap()
                                }
                            };
                            (
                                format!("{k:02}_{}{}{}{}.pgm", p[0], p[1], p[2], p[3]),
                                img,
                            )
                        })
                        .collect()
                }
            }
        } else {
            let img = exam_to_vis(&exam, &rois, &[1, 2, 3, 4], spec)?;
            vec![("00_1234.pgm".to_string(), img)]
        };

        let dir = out_dir
            .join(patient.split.name())
            .join(&patient.patient_id);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for (name, img) in images {
            if (img.pixels.h, img.pixels.w) != (image_size[0], image_size[1]) {
                return Err(Error::Contract(format!(
                    "rendered {}x{} but dataset geometry is {}x{}",
                    img.pixels.h, img.pixels.w, image_size[0], image_size[1]
                )));
            }
            pgm::write(&dir.join(&name), &img.pixels.quantize())?;
            entries.push(ImageEntry {
                path: format!(
                    "{}/{}/{}",
                    patient.split.name(),
                    patient.patient_id,
                    name
                ),
                source_patient: patient.patient_id.clone(),
                label: patient.label,
                split: patient.split,
                permutation: img.provenance.permutation,
                seed: img.provenance.seed,
                view_index: img.provenance.view_index,
            });
        }
    }

    let augmented = AugmentedManifest {
        regime: regime.to_string(),
        image_size,
        aligned: spec.aligned,
        images: entries,
    };
    augmented.save(&out_dir.join("manifest.json"))?;
    Ok(augmented)
}

/// Load the pixel file behind an augmented-manifest entry.
pub fn read_image(manifest_dir: &Path, entry: &ImageEntry) -> Result<crate::data::image::GrayU8> {
    pgm::read(&manifest_dir.join(&entry.path))
}

/// Recursively collect relative path -> file bytes, for determinism checks.
pub fn dir_snapshot(root: &Path) -> Result<Vec<(String, Vec<u8>)>> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) -> Result<()> {
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .collect();
        paths.sort();
        for p in paths {
            if p.is_dir() {
                walk(root, &p, out)?;
            } else {
                let rel = p
                    .strip_prefix(root)
                    .unwrap_or(&p)
                    .to_string_lossy()
                    .replace('\\', "/");
                out.push((rel, fs::read(&p).map_err(|e| Error::io(&p, e))?));
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(root, root, &mut out)?;
    Ok(out)
}
