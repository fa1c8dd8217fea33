//! Video-to-image renderings and the shuffle/permutation augmentation.
//!
//! A video becomes a wide image by concatenating its frames (temporal order
//! or a seeded shuffle); an exam's four views become one training image by
//! stacking per-view bands. The augmentation enumerates all 24 view orders,
//! optionally repeated under prime-seeded frame shuffles.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::image::{bilinear_resize, hconcat, vstack, GrayF, GrayU8};
use crate::data::preprocess::{preprocess_frame, Roi};
use crate::error::{Error, Result};
use crate::rng::Stream;

/// The only frame-shuffle seeds the augmentation accepts.
pub const PRIME_SEEDS: [u64; 10] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29];

#[derive(Debug, Clone)]
pub struct VideoClip {
    pub frames: Vec<GrayU8>,
    pub fps: f64,
    /// Probe position, 1..=4.
    pub view_index: u8,
}

impl VideoClip {
    pub fn new(frames: Vec<GrayU8>, fps: f64, view_index: u8) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::Input("video has no frames".into()))?;
        let (h, w) = (first.h, first.w);
        if frames.iter().any(|f| (f.h, f.w) != (h, w)) {
            return Err(Error::Input("video frames differ in size".into()));
        }
        if !(1..=4).contains(&view_index) {
            return Err(Error::Input(format!("view index {view_index} outside 1..=4")));
        }
        Ok(VideoClip { frames, fps, view_index })
    }
}

#[derive(Debug, Clone)]
pub struct ExamRecord {
    pub patient_id: String,
    /// Sorted by view_index, exactly 1..=4.
    pub views: Vec<VideoClip>,
    pub label: u8,
}

impl ExamRecord {
    pub fn new(patient_id: impl Into<String>, label: u8, mut views: Vec<VideoClip>) -> Result<Self> {
        if label > 1 {
            return Err(Error::Input(format!("label {label} is not binary")));
        }
        views.sort_by_key(|v| v.view_index);
        let indices: Vec<u8> = views.iter().map(|v| v.view_index).collect();
        if indices != [1, 2, 3, 4] {
            return Err(Error::Input(format!(
                "exam needs views 1..=4 exactly once, got {indices:?}"
            )));
        }
        Ok(ExamRecord { patient_id: patient_id.into(), views, label })
    }

    pub fn view(&self, view_index: u8) -> &VideoClip {
        &self.views[(view_index - 1) as usize]
    }
}

/// Where and how big rendered images are.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderSpec {
    /// Output width; VI/SVI images are width x width squares.
    pub width: usize,
    /// When set, view bands are padded up to a whole number of 16-pixel
    /// patch rows, so reordering views is exactly a patch permutation.
    pub aligned: bool,
}

impl RenderSpec {
    pub fn new(width: usize, aligned: bool) -> Result<Self> {
        if width == 0 || width % 4 != 0 {
            return Err(Error::Config(format!("render width {width} must be a positive multiple of 4")));
        }
        Ok(RenderSpec { width, aligned })
    }

    /// Height of one view band in a stacked image.
    pub fn band_height(&self) -> usize {
        let base = self.width / 4;
        if self.aligned {
            base.div_ceil(16) * 16
        } else {
            base
        }
    }

    /// Height of the full four-band image.
    pub fn stack_height(&self) -> usize {
        4 * self.band_height()
    }

    /// Per-frame working size frames are standardized to before concatenation.
    fn work(&self) -> usize {
        self.width
    }
}

/// Everything needed to regenerate a rendered image bit-exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub patient_id: String,
    pub regime: String,
    /// View order for stacked images, top band first.
    pub permutation: Option<[u8; 4]>,
    /// Frame-shuffle seed, absent for temporal order.
    pub seed: Option<u64>,
    /// Set for single-video images.
    pub view_index: Option<u8>,
}

#[derive(Debug, Clone)]
pub struct StrideImage {
    pub pixels: GrayF,
    pub provenance: Provenance,
}

/// Augmentation regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Vi,
    Svi,
    Vis,
    Ssda,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeSpec {
    pub mode: Mode,
    /// Frame-shuffle seeds; meaningful for Svi (exactly one) and Ssda
    /// (zero or more). Order is preserved in the output sequence.
    pub seed_set: Vec<u64>,
}

impl RegimeSpec {
    pub fn vis() -> Self {
        RegimeSpec { mode: Mode::Vis, seed_set: vec![] }
    }

    pub fn ssda(seeds: &[u64]) -> Self {
        RegimeSpec { mode: Mode::Ssda, seed_set: seeds.to_vec() }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.seed_set.iter().enumerate() {
            if !PRIME_SEEDS.contains(s) {
                return Err(Error::Config(format!(
                    "seed {s} is not in the allowed prime list {PRIME_SEEDS:?}"
                )));
            }
            if self.seed_set[..i].contains(s) {
                return Err(Error::Config(format!("duplicate seed {s}")));
            }
        }
        match self.mode {
            Mode::Vi | Mode::Vis if !self.seed_set.is_empty() => Err(Error::Config(
                "temporal-order regimes take no seeds".into(),
            )),
            Mode::Svi if self.seed_set.len() != 1 => Err(Error::Config(
                "frame-shuffled single-video regime takes exactly one seed".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Images emitted per training exam.
    pub fn images_per_exam(&self) -> usize {
        match self.mode {
            Mode::Vi | Mode::Svi => 4,
            Mode::Vis => 1,
            Mode::Ssda => 24 * (1 + self.seed_set.len()),
        }
    }

    /// Short name used in file paths.
    pub fn tag(&self) -> String {
        match self.mode {
            Mode::Vi => "vi".into(),
            Mode::Svi => format!("svi{}", self.seed_set[0]),
            Mode::Vis => "vis".into(),
            Mode::Ssda if self.seed_set.is_empty() => "ssda0".into(),
            Mode::Ssda => {
                let seeds: Vec<String> = self.seed_set.iter().map(|s| s.to_string()).collect();
                format!("ssda_{}", seeds.join("_"))
            }
        }
    }
}

impl FromStr for RegimeSpec {
    type Err = Error;

    /// Grammar: `vi`, `svi:SEED`, `vis`, `ssda0`, `ssda:2,3,...`.
    fn from_str(s: &str) -> Result<Self> {
        let spec = match s {
            "vi" => RegimeSpec { mode: Mode::Vi, seed_set: vec![] },
            "vis" => RegimeSpec::vis(),
            "ssda0" => RegimeSpec::ssda(&[]),
            _ => {
                let (mode, seeds) = s
                    .split_once(':')
                    .ok_or_else(|| Error::Config(format!("unknown regime '{s}'")))?;
                let seed_set = seeds
                    .split(',')
                    .map(|t| {
                        t.trim()
                            .parse::<u64>()
                            .map_err(|_| Error::Config(format!("bad seed '{t}' in regime '{s}'")))
                    })
                    .collect::<Result<Vec<u64>>>()?;
                match mode {
                    "svi" => RegimeSpec { mode: Mode::Svi, seed_set },
                    "ssda" => RegimeSpec { mode: Mode::Ssda, seed_set },
                    _ => return Err(Error::Config(format!("unknown regime '{s}'"))),
                }
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for RegimeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.mode {
            Mode::Vi => write!(f, "vi"),
            Mode::Svi => write!(f, "svi:{}", self.seed_set[0]),
            Mode::Vis => write!(f, "vis"),
            Mode::Ssda if self.seed_set.is_empty() => write!(f, "ssda0"),
            Mode::Ssda => {
                let seeds: Vec<String> = self.seed_set.iter().map(|s| s.to_string()).collect();
                write!(f, "ssda:{}", seeds.join(","))
            }
        }
    }
}

/// All 24 orderings of [1,2,3,4] in lexicographic order.
pub fn permutations_s4() -> Vec<[u8; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 1..=4u8 {
        for b in 1..=4u8 {
            for c in 1..=4u8 {
                for d in 1..=4u8 {
                    if a != b && a != c && a != d && b != c && b != d && c != d {
                        out.push([a, b, c, d]);
                    }
                }
            }
        }
    }
    out
}

fn check_seed(seed: u64) -> Result<()> {
    if PRIME_SEEDS.contains(&seed) {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "seed {seed} is not in the allowed prime list {PRIME_SEEDS:?}"
        )))
    }
}

/// Preprocess every frame of a clip to the working square.
fn working_frames(clip: &VideoClip, roi: &Roi, spec: &RenderSpec) -> Result<Vec<GrayF>> {
    let work = spec.work();
    clip.frames
        .iter()
        .map(|f| preprocess_frame(f, roi, work, work))
        .collect()
}

/// Concatenate working frames in the given order and resize to the target.
fn assemble(frames: &[GrayF], order: &[usize], out_h: usize, out_w: usize) -> Result<GrayF> {
    let ordered: Vec<GrayF> = order.iter().map(|&i| frames[i].clone()).collect();
    bilinear_resize(&hconcat(&ordered)?, out_h, out_w)
}

fn identity_order(n: usize) -> Vec<usize> {
    (0..n).collect()
}

/// One video, temporal frame order, square output.
pub fn video_to_vi(
    clip: &VideoClip,
    roi: &Roi,
    patient_id: &str,
    spec: &RenderSpec,
) -> Result<StrideImage> {
    let frames = working_frames(clip, roi, spec)?;
    let pixels = assemble(&frames, &identity_order(frames.len()), spec.width, spec.width)?;
    Ok(StrideImage {
        pixels,
        provenance: Provenance {
            patient_id: patient_id.into(),
            regime: "vi".into(),
            permutation: None,
            seed: None,
            view_index: Some(clip.view_index),
        },
    })
}

/// One video, frames shuffled by the seeded stream, square output.
pub fn video_to_svi(
    clip: &VideoClip,
    roi: &Roi,
    seed: u64,
    patient_id: &str,
    spec: &RenderSpec,
) -> Result<StrideImage> {
    check_seed(seed)?;
    let frames = working_frames(clip, roi, spec)?;
    let order = Stream::from_seed(seed).permutation(frames.len());
    let pixels = assemble(&frames, &order, spec.width, spec.width)?;
    Ok(StrideImage {
        pixels,
        provenance: Provenance {
            patient_id: patient_id.into(),
            regime: "svi".into(),
            permutation: None,
            seed: Some(seed),
            view_index: Some(clip.view_index),
        },
    })
}

fn check_view_order(order: &[u8; 4]) -> Result<()> {
    let mut sorted = *order;
    sorted.sort_unstable();
    if sorted != [1, 2, 3, 4] {
        return Err(Error::Input(format!("{order:?} is not an ordering of views 1..=4")));
    }
    Ok(())
}

/// Four views stacked top-to-bottom in the given order, temporal frames.
pub fn exam_to_vis(
    exam: &ExamRecord,
    rois: &[Roi; 4],
    order: &[u8; 4],
    spec: &RenderSpec,
) -> Result<StrideImage> {
    check_view_order(order)?;
    let mut bands = Vec::with_capacity(4);
    for &v in order {
        let clip = exam.view(v);
        let frames = working_frames(clip, &rois[(v - 1) as usize], spec)?;
        bands.push(assemble(
            &frames,
            &identity_order(frames.len()),
            spec.band_height(),
            spec.width,
        )?);
    }
    Ok(StrideImage {
        pixels: vstack(&bands)?,
        provenance: Provenance {
            patient_id: exam.patient_id.clone(),
            regime: "vis".into(),
            permutation: Some(*order),
            seed: None,
            view_index: None,
        },
    })
}

/// The full augmentation: for the temporal ordering and then for every
/// seed in the regime, emit all 24 view-order stackings. Output order is
/// (seed position, lexicographic view order); 24·(1+|seeds|) images total.
pub fn ssda_expand(
    exam: &ExamRecord,
    rois: &[Roi; 4],
    regime: &RegimeSpec,
    spec: &RenderSpec,
) -> Result<Vec<StrideImage>> {
    regime.validate()?;
    if regime.mode != Mode::Ssda {
        return Err(Error::Config(format!(
            "expansion is defined for the shuffle-stack regime, got {regime}"
        )));
    }
    let perms = permutations_s4();
    let mut out = Vec::with_capacity(regime.images_per_exam());

    let worked: Vec<Vec<GrayF>> = exam
        .views
        .iter()
        .zip(rois)
        .map(|(clip, roi)| working_frames(clip, roi, spec))
        .collect::<Result<_>>()?;

    let seeds = std::iter::once(None).chain(regime.seed_set.iter().copied().map(Some));
    for seed in seeds {
        let bands: Vec<GrayF> = worked
            .iter()
            .map(|frames| {
                let order = match seed {
                    None => identity_order(frames.len()),
                    Some(s) => Stream::from_seed(s).permutation(frames.len()),
                };
                assemble(frames, &order, spec.band_height(), spec.width)
            })
            .collect::<Result<_>>()?;
        for perm in &perms {
            let picked: Vec<GrayF> = perm.iter().map(|&v| bands[(v - 1) as usize].clone()).collect();
            out.push(StrideImage {
                pixels: vstack(&picked)?,
                provenance: Provenance {
                    patient_id: exam.patient_id.clone(),
                    regime: "ssda".into(),
                    permutation: Some(*perm),
                    seed,
                    view_index: None,
                },
            });
        }
    }
    Ok(out)
}
