//! Synthetic ultrasound-like exams. Label 1 carries the bright-vertical-
//! streak signature; label 0 is a heterogeneous mix of three negative
//! sub-types. Purely procedural, fully determined by the spec's seed.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::image::GrayU8;
use crate::data::manifest::{DatasetManifest, PatientEntry, ViewEntry, NOMINAL_FPS};
use crate::data::pgm;
use crate::data::preprocess::Roi;
use crate::data::stride::{ExamRecord, VideoClip};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, Stream};

/// Train/val/test proportions.
pub const SPLIT_WEIGHTS: [usize; 3] = [61, 18, 16];

fn default_n_patients() -> usize { 95 }
fn default_prevalence() -> f64 { 0.295 }
fn default_frames() -> usize { 16 }
fn default_frame_size() -> usize { 112 }
fn default_noise() -> f64 { 0.05 }
fn default_mix() -> [f64; 3] { [0.4, 0.3, 0.3] }

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    #[serde(default = "default_n_patients")]
    pub n_patients: usize,
    /// Fraction of label-1 patients.
    #[serde(default = "default_prevalence")]
    pub prevalence: f64,
    #[serde(default = "default_frames")]
    pub frames_per_video: usize,
    /// Frames are square, frame_size x frame_size.
    #[serde(default = "default_frame_size")]
    pub frame_size: usize,
    /// Additive uniform pixel noise amplitude on the [0,1] scale.
    #[serde(default = "default_noise")]
    pub noise_level: f64,
    /// Sub-type weights for label 0: [irregular-patchy, many-thin-streaks,
    /// healthy-banded].
    #[serde(default = "default_mix")]
    pub class0_mix: [f64; 3],
    #[serde(default)]
    pub master_seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_patients: default_n_patients(),
            prevalence: default_prevalence(),
            frames_per_video: default_frames(),
            frame_size: default_frame_size(),
            noise_level: default_noise(),
            class0_mix: default_mix(),
            master_seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_patients == 0 {
            return Err(Error::Config("n_patients must be positive".into()));
        }
        if !(self.prevalence > 0.0 && self.prevalence < 1.0) {
            return Err(Error::Config(format!(
                "prevalence {} outside (0,1)",
                self.prevalence
            )));
        }
        if self.frames_per_video == 0 {
            return Err(Error::Config("frames_per_video must be positive".into()));
        }
        if self.frame_size < 32 {
            return Err(Error::Config(format!(
                "frame_size {} too small for the texture model (min 32)",
                self.frame_size
            )));
        }
        if !(0.0..=1.0).contains(&self.noise_level) {
            return Err(Error::Config(format!(
                "noise_level {} outside [0,1]",
                self.noise_level
            )));
        }
        let sum: f64 = self.class0_mix.iter().sum();
        if self.class0_mix.iter().any(|&w| w < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "class0_mix {:?} must be non-negative and sum to 1",
                self.class0_mix
            )));
        }
        Ok(())
    }
}

/// Negative-class sub-types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Class0Kind {
    /// Few irregular dim streaks plus patchy blobs.
    NcipLike,
    /// Many thin streaks under a thickened band.
    IldLike,
    /// Repeating horizontal bands only.
    HealthyLike,
}

/// Exact largest-remainder apportionment of `total` over integer weights.
/// Ties broken by larger remainder first, then lower index.
pub fn largest_remainder(total: usize, weights: &[usize]) -> Vec<usize> {
    let wsum: u128 = weights.iter().map(|&w| w as u128).sum();
    assert!(wsum > 0, "weights must not all be zero");
    let mut floors: Vec<usize> = Vec::with_capacity(weights.len());
    let mut rems: Vec<(u128, usize)> = Vec::with_capacity(weights.len());
    for (i, &w) in weights.iter().enumerate() {
        let num = total as u128 * w as u128;
        floors.push((num / wsum) as usize);
        rems.push((num % wsum, i));
    }
    let assigned: usize = floors.iter().sum();
    rems.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in rems.iter().take(total - assigned) {
        floors[i] += 1;
    }
    floors
}

/// One frame's procedural texture state, shared across a whole exam.
struct ExamBase {
    label: u8,
    sub: Option<Class0Kind>,
    /// Pleural-band analogue top row, fraction of height.
    band_top: f64,
    band_thickness: usize,
    band_bright: u8,
    /// (x fraction, width px, brightness) per streak.
    streaks: Vec<(f64, usize, u8)>,
    /// (x frac, y frac, radius px, brightness) per blob.
    blobs: Vec<(f64, f64, usize, u8)>,
    /// Repeating-band spacing as a fraction of height (healthy only).
    line_gap: f64,
}

fn exam_base(label: u8, sub: Option<Class0Kind>, ex: &mut Stream) -> ExamBase {
    let band_top = 0.05 + ex.next_f64() * 0.04; // 5..9% of height
    let mut base = ExamBase {
        label,
        sub,
        band_top,
        band_thickness: 0,
        band_bright: 0,
        streaks: vec![],
        blobs: vec![],
        line_gap: 0.0,
    };
    let streaks = |ex: &mut Stream, n: usize, w_lo: usize, w_hi: usize, b_lo: u8, b_hi: u8| {
        (0..n)
            .map(|_| {
                let x = 0.12 + ex.next_f64() * 0.76;
                let w = w_lo + ex.below((w_hi - w_lo + 1) as u64) as usize;
                let b = b_lo + ex.below((b_hi - b_lo + 1) as u64) as u8;
                (x, w, b)
            })
            .collect::<Vec<_>>()
    };
    match (label, sub) {
        (1, _) => {
            base.band_thickness = 3 + ex.below(3) as usize; // 3..=5 rows
            base.band_bright = 220 + ex.below(26) as u8;
            let n = 3 + ex.below(3) as usize; // 3..=5 streaks
            base.streaks = streaks(ex, n, 4, 7, 190, 240);
        }
        (0, Some(Class0Kind::NcipLike)) => {
            base.band_thickness = 2;
            base.band_bright = 140 + ex.below(31) as u8;
            let n = 1 + ex.below(3) as usize; // 1..=3 short dim streaks
            base.streaks = streaks(ex, n, 2, 3, 100, 130);
            let n_blobs = 2 + ex.below(3) as usize;
            base.blobs = (0..n_blobs)
                .map(|_| {
                    let x = 0.1 + ex.next_f64() * 0.8;
                    let y = 0.04 + ex.next_f64() * 0.22;
                    let r = 1 + ex.below(2) as usize;
                    let b = 150 + ex.below(51) as u8;
                    (x, y, r, b)
                })
                .collect();
        }
        (0, Some(Class0Kind::IldLike)) => {
            base.band_thickness = 6 + ex.below(4) as usize; // thickened 6..=9
            base.band_bright = 160 + ex.below(41) as u8;
            let n = 9 + ex.below(6) as usize; // 9..=14 thin streaks
            base.streaks = streaks(ex, n, 1, 2, 100, 135);
        }
        (0, Some(Class0Kind::HealthyLike)) => {
            base.band_thickness = 2 + ex.below(2) as usize;
            base.band_bright = 190 + ex.below(31) as u8;
            base.line_gap = 0.09 + ex.next_f64() * 0.04; // 9..13% of height
        }
        _ => unreachable!("label/sub combinations are validated by the caller"),
    }
    base
}

/// Render one frame. `view_stream` supplies the per-frame jitter.
fn render_frame(base: &ExamBase, size: usize, noise: f64, vs: &mut Stream) -> GrayU8 {
    let s = size as f64;
    let mut px = vec![0u8; size * size];
    // dim speckle, everything below the preprocessing floor
    for v in px.iter_mut() {
        *v = vs.below(50) as u8;
    }
    let paint = |px: &mut [u8], y: usize, x: usize, b: u8| {
        let cell = &mut px[y * size + x];
        *cell = (*cell).max(b);
    };

    let jb = |vs: &mut Stream, b: u8| -> u8 {
        (b as i64 + vs.below(21) as i64 - 10).clamp(0, 255) as u8
    };

    // pleural-band analogue with lateral brightness ripple
    let band_y = (base.band_top * s) as usize + vs.below(3) as usize;
    let band_b = jb(vs, base.band_bright);
    let patchy = base.sub == Some(Class0Kind::NcipLike);
    for x in 0..size {
        if patchy && vs.below(10) < 3 {
            continue; // gaps in the irregular band
        }
        for dy in 0..base.band_thickness {
            let y = (band_y + dy).min(size - 1);
            paint(&mut px, y, x, band_b.saturating_sub((dy as u8) * 6));
        }
    }

    // vertical streaks descending from the band
    let y0 = band_y + base.band_thickness;
    let y1 = match (base.label, base.sub) {
        (0, Some(Class0Kind::NcipLike)) => (y0 + size / 10).min(size - 1), // short
        _ => (0.55 * s) as usize,
    };
    for &(xf, w, b) in &base.streaks {
        let jx = (xf * s) as i64 + vs.below(5) as i64 - 2;
        let b = jb(vs, b);
        for dx in 0..w {
            let x = (jx + dx as i64).clamp(0, size as i64 - 1) as usize;
            for y in y0..=y1.min(size - 1) {
                paint(&mut px, y, x, b);
            }
        }
    }

    // patchy blobs
    for &(xf, yf, r, b) in &base.blobs {
        let cx = (xf * s) as i64 + vs.below(5) as i64 - 2;
        let cy = (yf * s) as i64 + vs.below(5) as i64 - 2;
        let b = jb(vs, b);
        for dy in -(r as i64)..=r as i64 {
            for dx in -(r as i64)..=r as i64 {
                if dx * dx + dy * dy <= (r * r) as i64 {
                    let x = (cx + dx).clamp(0, size as i64 - 1) as usize;
                    let y = (cy + dy).clamp(0, size as i64 - 1) as usize;
                    paint(&mut px, y, x, b);
                }
            }
        }
    }

    // repeating horizontal bands fading with depth
    if base.line_gap > 0.0 {
        let mut k = 1usize;
        loop {
            let y = ((base.band_top + base.line_gap * k as f64) * s) as usize;
            if y + 1 >= size || k > 6 {
                break;
            }
            let fade = (base.band_bright as f64 * 0.75f64.powi(k as i32)) as u8;
            if fade < 96 {
                break; // below the preprocessing floor, invisible downstream
            }
            let b = jb(vs, fade);
            for x in 0..size {
                paint(&mut px, y, x, b);
                paint(&mut px, y + 1, x, b.saturating_sub(8));
            }
            k += 1;
        }
    }

    // additive noise
    if noise > 0.0 {
        let amp = noise * 255.0;
        for v in px.iter_mut() {
            let n = (vs.uniform(-amp, amp)).round() as i64;
            *v = (*v as i64 + n).clamp(0, 255) as u8;
        }
    }
    GrayU8 { h: size, w: size, px }
}

/// Generate one exam: four correlated views sharing base texture
/// parameters, independently jittered per view and frame.
pub fn generate_exam(
    spec: &SynthSpec,
    patient_id: &str,
    label: u8,
    sub: Option<Class0Kind>,
    seed: u64,
) -> Result<ExamRecord> {
    spec.validate()?;
    match (label, &sub) {
        (0, Some(_)) | (1, None) => {}
        (1, Some(_)) => return Err(Error::Config("label 1 takes no sub-type".into())),
        (0, None) => return Err(Error::Config("label 0 needs a sub-type".into())),
        _ => return Err(Error::Config(format!("label {label} is not binary"))),
    }
    let mut ex = Stream::from_seed(seed);
    let base = exam_base(label, sub, &mut ex);
    let views = (1..=4u8)
        .map(|v| {
            let mut vs = Stream::from_seed(derive_seed(&[seed, v as u64]));
            let frames = (0..spec.frames_per_video)
                .map(|_| render_frame(&base, spec.frame_size, spec.noise_level, &mut vs))
                .collect();
            VideoClip::new(frames, NOMINAL_FPS, v)
        })
        .collect::<Result<Vec<_>>>()?;
    ExamRecord::new(patient_id, label, views)
}

/// Split sizes and per-split positive counts for a dataset, or an error
/// when any split would lack a positive or a negative.
pub fn plan_splits(n_patients: usize, prevalence: f64) -> Result<([usize; 3], [usize; 3])> {
    let sizes = largest_remainder(n_patients, &SPLIT_WEIGHTS);
    if sizes.iter().any(|&s| s == 0) {
        return Err(Error::Config(format!(
            "{n_patients} patients cannot fill all three splits (got {sizes:?})"
        )));
    }
    let n_pos = (prevalence * n_patients as f64).round() as usize;
    let pos = largest_remainder(n_pos, &sizes);
    for (s, p) in sizes.iter().zip(&pos) {
        if *p == 0 || p >= s {
            return Err(Error::Config(format!(
                "splits {sizes:?} with positives {pos:?}: every split needs at least \
                 one positive and one negative"
            )));
        }
    }
    Ok((
        [sizes[0], sizes[1], sizes[2]],
        [pos[0], pos[1], pos[2]],
    ))
}

/// Generate the full dataset under `out_dir` (must be empty or absent)
/// and write its manifest to `out_dir/dataset.json`.
pub fn generate_dataset(spec: &SynthSpec, out_dir: &Path) -> Result<DatasetManifest> {
    spec.validate()?;
    let (sizes, pos) = plan_splits(spec.n_patients, spec.prevalence)?;

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
    match generate_into(spec, sizes, pos, out_dir) {
        Ok(m) => Ok(m),
        Err(e) => {
            let _ = fs::remove_dir_all(out_dir);
            Err(e)
        }
    }
}

fn generate_into(
    spec: &SynthSpec,
    sizes: [usize; 3],
    pos: [usize; 3],
    out_dir: &Path,
) -> Result<DatasetManifest> {
    use crate::data::manifest::Split;
    let n = spec.n_patients;

    // assignment stream is separate from exam streams so content is stable
    // under reshuffles of the same patients
    let mut assign = Stream::from_seed(derive_seed(&[spec.master_seed, u64::MAX]));
    let order = assign.permutation(n);

    // order[0..sizes[0]] -> train, next sizes[1] -> val, rest -> test;
    // within each split the first `pos` get label 1
    let mut label = vec![0u8; n];
    let mut split = vec![Split::Train; n];
    let mut cursor = 0usize;
    for (si, sp) in [Split::Train, Split::Val, Split::Test].into_iter().enumerate() {
        for j in 0..sizes[si] {
            let idx = order[cursor + j];
            split[idx] = sp;
            label[idx] = (j < pos[si]) as u8;
        }
        cursor += sizes[si];
    }

    let mut subs = Stream::from_seed(derive_seed(&[spec.master_seed, u64::MAX - 1]));
    let roi = Roi::default_for(spec.frame_size, spec.frame_size);
    let mut patients = Vec::with_capacity(n);
    for idx in 0..n {
        let pid = format!("p{idx:03}");
        let sub = if label[idx] == 0 {
            let r = subs.next_f64();
            Some(if r < spec.class0_mix[0] {
                Class0Kind::NcipLike
            } else if r < spec.class0_mix[0] + spec.class0_mix[1] {
                Class0Kind::IldLike
            } else {
                Class0Kind::HealthyLike
            })
        } else {
            None
        };
        let seed = derive_seed(&[spec.master_seed, idx as u64]);
        let exam = generate_exam(spec, &pid, label[idx], sub, seed)?;

        let mut views = Vec::with_capacity(4);
        for clip in &exam.views {
            let dir = format!("{pid}/view{}", clip.view_index);
            let vd = out_dir.join(&dir);
            fs::create_dir_all(&vd).map_err(|e| Error::io(&vd, e))?;
            for (fi, frame) in clip.frames.iter().enumerate() {
                pgm::write(&vd.join(format!("{fi:04}.pgm")), frame)?;
            }
            views.push(ViewEntry {
                dir,
                view_index: clip.view_index,
                roi: [roi.x, roi.y, roi.w, roi.h],
            });
        }
        patients.push(PatientEntry { patient_id: pid, label: label[idx], split: split[idx], views });
    }

    let manifest = DatasetManifest { frame_size: [spec.frame_size, spec.frame_size], patients };
    manifest.validate()?;
    manifest.save(&out_dir.join("dataset.json"))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::manifest::Split;

    #[test]
    fn apportionment_golden_values() {
        assert_eq!(largest_remainder(95, &SPLIT_WEIGHTS), vec![61, 18, 16]);
        assert_eq!(largest_remainder(20, &SPLIT_WEIGHTS), vec![13, 4, 3]);
        assert_eq!(largest_remainder(3, &SPLIT_WEIGHTS), vec![2, 1, 0]);
        // positives over split sizes
        assert_eq!(largest_remainder(28, &[61, 18, 16]), vec![18, 5, 5]);
        assert_eq!(largest_remainder(6, &[13, 4, 3]), vec![4, 1, 1]);
        let total: usize = largest_remainder(97, &SPLIT_WEIGHTS).iter().sum();
        assert_eq!(total, 97);
    }

    #[test]
    fn split_plans() {
        let (sizes, pos) = plan_splits(95, 0.295).unwrap();
        assert_eq!(sizes, [61, 18, 16]);
        assert_eq!(pos, [18, 5, 5]);
        let (sizes, pos) = plan_splits(20, 0.3).unwrap();
        assert_eq!(sizes, [13, 4, 3]);
        assert_eq!(pos, [4, 1, 1]);
        // too small to fill the test split at all
        assert!(plan_splits(3, 0.295).is_err());
        // fills splits but leaves the test split without a positive
        assert!(plan_splits(12, 0.295).is_err());
    }

    #[test]
    fn exam_regeneration_is_bit_identical() {
        let spec = SynthSpec { frames_per_video: 3, frame_size: 48, ..Default::default() };
        let a = generate_exam(&spec, "p0", 1, None, 99).unwrap();
        let b = generate_exam(&spec, "p0", 1, None, 99).unwrap();
        for (va, vb) in a.views.iter().zip(&b.views) {
            assert_eq!(va.frames, vb.frames);
        }
        let c = generate_exam(&spec, "p0", 1, None, 100).unwrap();
        assert_ne!(a.views[0].frames[0], c.views[0].frames[0]);
    }

    #[test]
    fn noiseless_positive_streaks_clear_background() {
        let spec = SynthSpec {
            frames_per_video: 2,
            frame_size: 64,
            noise_level: 0.0,
            ..Default::default()
        };
        let exam = generate_exam(&spec, "p0", 1, None, 7).unwrap();
        for clip in &exam.views {
            for f in &clip.frames {
                let max = *f.px.iter().max().unwrap();
                assert!(max >= 190, "streaks must stand clear of the 0..50 speckle");
                // speckle pixels below, signal pixels above the floor
                assert!(f.px.iter().any(|&v| v < 93));
                assert!(f.px.iter().filter(|&&v| v >= 190).count() > 32);
            }
        }
    }

    #[test]
    fn sub_types_produce_distinct_content() {
        let spec = SynthSpec {
            frames_per_video: 1,
            frame_size: 64,
            noise_level: 0.0,
            ..Default::default()
        };
        let kinds = [Class0Kind::NcipLike, Class0Kind::IldLike, Class0Kind::HealthyLike];
        let frames: Vec<_> = kinds
            .iter()
            .map(|&k| generate_exam(&spec, "p", 0, Some(k), 3).unwrap().views[0].frames[0].clone())
            .collect();
        assert_ne!(frames[0], frames[1]);
        assert_ne!(frames[1], frames[2]);

        assert!(generate_exam(&spec, "p", 0, None, 3).is_err());
        assert!(generate_exam(&spec, "p", 1, Some(Class0Kind::IldLike), 3).is_err());
        assert!(generate_exam(&spec, "p", 2, None, 3).is_err());
    }

    #[test]
    fn dataset_generation_writes_split_sizes_and_positives() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SynthSpec {
            n_patients: 20,
            prevalence: 0.3,
            frames_per_video: 2,
            frame_size: 32,
            master_seed: 5,
            ..Default::default()
        };
        let out = dir.path().join("data");
        let m = generate_dataset(&spec, &out).unwrap();
        assert_eq!(m.patients.len(), 20);
        let count = |s: Split| m.split(s).count();
        assert_eq!((count(Split::Train), count(Split::Val), count(Split::Test)), (13, 4, 3));
        let pos = |s: Split| m.split(s).filter(|p| p.label == 1).count();
        assert_eq!((pos(Split::Train), pos(Split::Val), pos(Split::Test)), (4, 1, 1));

        // no patient id in two splits, all frames on disk
        let ids: std::collections::BTreeSet<_> =
            m.patients.iter().map(|p| &p.patient_id).collect();
        assert_eq!(ids.len(), 20);
        for p in &m.patients {
            for v in &p.views {
                assert_eq!(crate::data::manifest::frame_paths(&out.join(&v.dir)).unwrap().len(), 2);
            }
        }
        assert!(out.join("dataset.json").is_file());

        // reloading gives the same manifest
        let back = DatasetManifest::load(&out.join("dataset.json")).unwrap();
        assert_eq!(back.patients.len(), m.patients.len());
    }

    #[test]
    fn dataset_generation_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SynthSpec {
            n_patients: 12,
            prevalence: 0.5,
            frames_per_video: 2,
            frame_size: 32,
            master_seed: 11,
            ..Default::default()
        };
        let a = dir.path().join("a");
        let b = dir.path().join("b");
        generate_dataset(&spec, &a).unwrap();
        generate_dataset(&spec, &b).unwrap();
        assert_eq!(
            crate::data::expand::dir_snapshot(&a).unwrap(),
            crate::data::expand::dir_snapshot(&b).unwrap()
        );
    }

    #[test]
    fn spec_validation() {
        let ok = SynthSpec::default();
        ok.validate().unwrap();
        assert!(SynthSpec { prevalence: 0.0, ..ok.clone() }.validate().is_err());
        assert!(SynthSpec { class0_mix: [0.5, 0.5, 0.5], ..ok.clone() }.validate().is_err());
        assert!(SynthSpec { frame_size: 16, ..ok.clone() }.validate().is_err());
        assert!(SynthSpec { noise_level: 1.5, ..ok }.validate().is_err());

        let parsed: SynthSpec = serde_json::from_str(r#"{"n_patients": 10}"#).unwrap();
        assert_eq!(parsed.frames_per_video, 16);
        assert_eq!(parsed.prevalence, 0.295);
        assert!(serde_json::from_str::<SynthSpec>(r#"{"bogus": 1}"#).is_err());
    }
}
