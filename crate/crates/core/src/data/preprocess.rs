//! Frame preprocessing: normalize, suppress sub-threshold intensities,
//! crop to the region of interest, keep the upper half, resize.

use serde::{Deserialize, Serialize};

use crate::data::image::{bilinear_resize, GrayF, GrayU8};
use crate::error::{Error, Result};

/// Intensity floor on the original 0..255 scale; anything below is zeroed.
pub const INTENSITY_FLOOR: u8 = 93;

/// Crop rectangle in frame pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roi {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Roi {
    /// Default region when none is given: centered 80% of the width,
    /// upper 60% of the height.
    pub fn default_for(h: usize, w: usize) -> Roi {
        let rw = ((w as f64 * 0.8).round() as usize).max(1);
        let rh = ((h as f64 * 0.6).round() as usize).max(2);
        Roi { x: (w - rw.min(w)) / 2, y: 0, w: rw.min(w), h: rh.min(h) }
    }
}

/// Zero every value below the floor, leave the rest on the [0,1] scale.
/// Idempotent: the surviving values are all >= floor/255.
pub fn suppress_floor(img: &mut GrayF) {
    let cut = INTENSITY_FLOOR as f64 / 255.0;
    for v in &mut img.px {
        if *v < cut {
            *v = 0.0;
        }
    }
}

/// Full frame pipeline: scale to [0,1], zero sub-floor pixels, crop to
/// `roi`, keep the upper half of the crop, resize to `out_h` x `out_w`.
pub fn preprocess_frame(raw: &GrayU8, roi: &Roi, out_h: usize, out_w: usize) -> Result<GrayF> {
    if roi.x + roi.w > raw.w || roi.y + roi.h > raw.h || roi.w == 0 || roi.h == 0 {
        return Err(Error::Input(format!(
            "roi [{},{},{},{}] outside {}x{} frame",
            roi.x, roi.y, roi.w, roi.h, raw.h, raw.w
        )));
    }
    if roi.h < 2 {
        return Err(Error::Input("roi too short to halve".into()));
    }
    let mut f = raw.to_f();
    suppress_floor(&mut f);
    let cropped = f.crop(roi.x, roi.y, roi.w, roi.h)?;
    let upper = cropped.crop(0, 0, cropped.w, cropped.h / 2)?;
    bilinear_resize(&upper, out_h, out_w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_boundary() {
        let below = GrayU8::filled(4, 4, 92);
        let roi = Roi { x: 0, y: 0, w: 4, h: 4 };
        let out = preprocess_frame(&below, &roi, 4, 4).unwrap();
        assert!(out.px.iter().all(|&v| v == 0.0));

        let at = GrayU8::filled(4, 4, 93);
        let out = preprocess_frame(&at, &roi, 4, 4).unwrap();
        let want = 93.0 / 255.0;
        assert!(out.px.iter().all(|&v| (v - want).abs() < 1e-15));
    }

    #[test]
    fn floor_is_idempotent() {
        let mut px: Vec<f64> = (0u8..=255).map(|v| v as f64 / 255.0).collect();
        px.push(0.5);
        let mut img = GrayF::new(1, px.len(), px).unwrap();
        suppress_floor(&mut img);
        let once = img.clone();
        suppress_floor(&mut img);
        assert_eq!(img, once);
    }

    #[test]
    fn crop_then_halve_keeps_upper_rows() {
        // 6x4 frame, bright row at y=1 inside a roi of height 4:
        // halving keeps rows 0..2 of the roi, so the bright row survives
        let mut px = vec![0u8; 24];
        for x in 0..4 {
            px[4 + x] = 200;
            px[3 * 4 + x] = 150; // row 3: inside roi but below the half cut
        }
        let raw = GrayU8::new(6, 4, px).unwrap();
        let roi = Roi { x: 0, y: 0, w: 4, h: 4 };
        // 2x4 target matches the halved roi, so no resampling blurs rows
        let out = preprocess_frame(&raw, &roi, 2, 4).unwrap();
        assert!(out.px[..4].iter().all(|&v| v == 0.0));
        assert!(out.px[4..].iter().all(|&v| (v - 200.0 / 255.0).abs() < 1e-15));
        // the 150-row sat below the half cut and must be gone entirely
        assert!(out.px.iter().all(|&v| (v - 150.0 / 255.0).abs() > 1e-6));
    }

    #[test]
    fn roi_bounds_and_degenerate_heights_rejected() {
        let raw = GrayU8::filled(8, 8, 100);
        assert!(preprocess_frame(&raw, &Roi { x: 4, y: 0, w: 8, h: 4 }, 2, 2).is_err());
        assert!(preprocess_frame(&raw, &Roi { x: 0, y: 6, w: 4, h: 4 }, 2, 2).is_err());
        assert!(preprocess_frame(&raw, &Roi { x: 0, y: 0, w: 4, h: 1 }, 2, 2).is_err());
    }

    #[test]
    fn default_roi_proportions() {
        let r = Roi::default_for(112, 112);
        assert_eq!((r.x, r.y, r.w, r.h), (11, 0, 90, 67));
        let r224 = Roi::default_for(224, 224);
        assert_eq!((r224.x, r224.y, r224.w, r224.h), (22, 0, 179, 134));
    }
}
