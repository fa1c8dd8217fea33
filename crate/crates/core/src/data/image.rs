//! Grayscale raster containers and the resampling primitives the pipeline
//! is built from. Two representations: `GrayU8` is what lives on disk,
//! `GrayF` (values in [0,1]) is what the pipeline transforms.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayU8 {
    pub h: usize,
    pub w: usize,
    pub px: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrayF {
    pub h: usize,
    pub w: usize,
    pub px: Vec<f64>,
}

impl GrayU8 {
    pub fn new(h: usize, w: usize, px: Vec<u8>) -> Result<Self> {
        if h == 0 || w == 0 || px.len() != h * w {
            return Err(Error::Input(format!(
                "image buffer {} does not match {h}x{w}",
                px.len()
            )));
        }
        Ok(GrayU8 { h, w, px })
    }

    pub fn filled(h: usize, w: usize, v: u8) -> Self {
        GrayU8 { h, w, px: vec![v; h * w] }
    }

    pub fn at(&self, y: usize, x: usize) -> u8 {
        self.px[y * self.w + x]
    }

    /// Scale to [0,1].
    pub fn to_f(&self) -> GrayF {
        GrayF {
            h: self.h,
            w: self.w,
            px: self.px.iter().map(|&v| v as f64 / 255.0).collect(),
        }
    }
}

impl GrayF {
    pub fn new(h: usize, w: usize, px: Vec<f64>) -> Result<Self> {
        if h == 0 || w == 0 || px.len() != h * w {
            return Err(Error::Input(format!(
                "image buffer {} does not match {h}x{w}",
                px.len()
            )));
        }
        Ok(GrayF { h, w, px })
    }

    pub fn zeros(h: usize, w: usize) -> Self {
        GrayF { h, w, px: vec![0.0; h * w] }
    }

    pub fn at(&self, y: usize, x: usize) -> f64 {
        self.px[y * self.w + x]
    }

    /// Quantize [0,1] to 8-bit, rounding half away from zero.
    pub fn quantize(&self) -> GrayU8 {
        let px = self
            .px
            .iter()
            .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect();
        GrayU8 { h: self.h, w: self.w, px }
    }

    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Result<GrayF> {
        if w == 0 || h == 0 || x + w > self.w || y + h > self.h {
            return Err(Error::Input(format!(
                "crop [{x},{y},{w},{h}] outside {}x{} image",
                self.h, self.w
            )));
        }
        let mut px = Vec::with_capacity(w * h);
        for row in y..y + h {
            px.extend_from_slice(&self.px[row * self.w + x..row * self.w + x + w]);
        }
        Ok(GrayF { h, w, px })
    }
}

/// Bilinear resample with the pixel-center convention: output center
/// (i+0.5, j+0.5) maps to source coordinates scaled by the size ratio,
/// clamped to the source grid.
pub fn bilinear_resize(src: &GrayF, out_h: usize, out_w: usize) -> Result<GrayF> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::Input("resize target has a zero dimension".into()));
    }
    if (src.h, src.w) == (out_h, out_w) {
        return Ok(src.clone());
    }
    let sy = src.h as f64 / out_h as f64;
    let sx = src.w as f64 / out_w as f64;
    let mut px = Vec::with_capacity(out_h * out_w);
    for i in 0..out_h {
        let fy = ((i as f64 + 0.5) * sy - 0.5).clamp(0.0, (src.h - 1) as f64);
        let y0 = fy.floor() as usize;
        let y1 = (y0 + 1).min(src.h - 1);
        let dy = fy - y0 as f64;
        for j in 0..out_w {
            let fx = ((j as f64 + 0.5) * sx - 0.5).clamp(0.0, (src.w - 1) as f64);
            let x0 = fx.floor() as usize;
            let x1 = (x0 + 1).min(src.w - 1);
            let dx = fx - x0 as f64;
            let top = src.at(y0, x0) * (1.0 - dx) + src.at(y0, x1) * dx;
            let bot = src.at(y1, x0) * (1.0 - dx) + src.at(y1, x1) * dx;
            px.push(top * (1.0 - dy) + bot * dy);
        }
    }
    Ok(GrayF { h: out_h, w: out_w, px })
}

/// Concatenate left-to-right. All images must share a height.
pub fn hconcat(frames: &[GrayF]) -> Result<GrayF> {
    let first = frames.first().ok_or_else(|| Error::Input("hconcat of nothing".into()))?;
    let h = first.h;
    if frames.iter().any(|f| f.h != h) {
        return Err(Error::Input("hconcat height mismatch".into()));
    }
    let w: usize = frames.iter().map(|f| f.w).sum();
    let mut px = Vec::with_capacity(h * w);
    for row in 0..h {
        for f in frames {
            px.extend_from_slice(&f.px[row * f.w..(row + 1) * f.w]);
        }
    }
    Ok(GrayF { h, w, px })
}

/// Stack top-to-bottom. All images must share a width.
pub fn vstack(bands: &[GrayF]) -> Result<GrayF> {
    let first = bands.first().ok_or_else(|| Error::Input("vstack of nothing".into()))?;
    let w = first.w;
    if bands.iter().any(|b| b.w != w) {
        return Err(Error::Input("vstack width mismatch".into()));
    }
    let h: usize = bands.iter().map(|b| b.h).sum();
    let mut px = Vec::with_capacity(h * w);
    for b in bands {
        px.extend_from_slice(&b.px);
    }
    Ok(GrayF { h, w, px })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantize_rounds_half_away_from_zero() {
        let f = GrayF::new(1, 4, vec![0.0, 0.5 / 255.0, 1.5 / 255.0, 1.0]).unwrap();
        assert_eq!(f.quantize().px, vec![0, 1, 2, 255]);
        // out-of-range input clamps instead of wrapping
        let f = GrayF::new(1, 2, vec![-0.3, 1.7]).unwrap();
        assert_eq!(f.quantize().px, vec![0, 255]);
    }

    #[test]
    fn u8_roundtrip_through_f_is_exact() {
        let img = GrayU8::new(2, 3, vec![0, 92, 93, 128, 200, 255]).unwrap();
        assert_eq!(img.to_f().quantize(), img);
    }

    #[test]
    fn resize_identity_and_constant() {
        let f = GrayF::new(3, 3, (0..9).map(|i| i as f64 / 10.0).collect()).unwrap();
        assert_eq!(bilinear_resize(&f, 3, 3).unwrap(), f);

        let c = GrayF::new(5, 7, vec![0.25; 35]).unwrap();
        let r = bilinear_resize(&c, 3, 11).unwrap();
        assert!(r.px.iter().all(|&v| (v - 0.25).abs() < 1e-12));
    }

    #[test]
    fn resize_2x_upsample_hand_case() {
        // 1x2 [0, 1] -> 1x4: centers at src coords -0.25, 0.25, 0.75, 1.25
        let f = GrayF::new(1, 2, vec![0.0, 1.0]).unwrap();
        let r = bilinear_resize(&f, 1, 4).unwrap();
        let want = [0.0, 0.25, 0.75, 1.0];
        for (got, w) in r.px.iter().zip(want) {
            assert!((got - w).abs() < 1e-12, "{got} vs {w}");
        }
    }

    #[test]
    fn resize_downsample_preserves_mean_of_uniform_grid() {
        // 4x4 ramp -> 2x2: each output pixel is the mean of a 2x2 block
        let f = GrayF::new(4, 4, (0..16).map(|i| i as f64).collect()).unwrap();
        let r = bilinear_resize(&f, 2, 2).unwrap();
        assert_eq!(r.px, vec![2.5, 4.5, 10.5, 12.5]);
    }

    #[test]
    fn hconcat_preserves_column_order() {
        let a = GrayF::new(2, 1, vec![1.0, 3.0]).unwrap();
        let b = GrayF::new(2, 2, vec![5.0, 6.0, 7.0, 8.0]).unwrap();
        let c = hconcat(&[a, b]).unwrap();
        assert_eq!((c.h, c.w), (2, 3));
        assert_eq!(c.px, vec![1.0, 5.0, 6.0, 3.0, 7.0, 8.0]);
    }

    #[test]
    fn vstack_stacks_rows() {
        let a = GrayF::new(1, 2, vec![1.0, 2.0]).unwrap();
        let b = GrayF::new(2, 2, vec![3.0, 4.0, 5.0, 6.0]).unwrap();
        let c = vstack(&[a, b]).unwrap();
        assert_eq!((c.h, c.w), (3, 2));
        assert_eq!(c.px, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn crop_and_bounds() {
        let f = GrayF::new(3, 3, (0..9).map(|i| i as f64).collect()).unwrap();
        let c = f.crop(1, 0, 2, 2).unwrap();
        assert_eq!(c.px, vec![1.0, 2.0, 4.0, 5.0]);
        assert!(f.crop(2, 2, 2, 1).is_err());
        assert!(f.crop(0, 0, 0, 1).is_err());
    }

    #[test]
    fn shape_mismatch_rejected() {
        assert!(GrayU8::new(2, 2, vec![0; 3]).is_err());
        assert!(GrayF::new(0, 2, vec![]).is_err());
        let a = GrayF::new(1, 2, vec![0.0; 2]).unwrap();
        let b = GrayF::new(2, 2, vec![0.0; 4]).unwrap();
        assert!(hconcat(&[a.clone(), b.clone()]).is_err());
        let c = GrayF::new(2, 1, vec![0.0; 2]).unwrap();
        assert!(vstack(&[b, c]).is_err());
        assert!(hconcat(&[]).is_err());
    }
}
