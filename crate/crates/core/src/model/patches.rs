//! Non-overlapping patch extraction: the only place image geometry is
//! flattened away. Both models consume the [N x patch*patch*C] matrix this
//! produces; reassembly exists to prove extraction loses nothing.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Expands a grayscale image (row-major, values in [0, 1]) to an
/// [H, W, C] tensor by replicating the channel.
pub fn image_from_gray(px: &[f64], h: usize, w: usize, channels: usize) -> Result<Tensor> {
    if px.len() != h * w {
        return Err(Error::Contract(format!(
            "gray image {}x{} wants {} pixels, got {}",
            h,
            w,
            h * w,
            px.len()
        )));
    }
    let mut data = Vec::with_capacity(h * w * channels);
    for &v in px {
        for _ in 0..channels {
            data.push(v);
        }
    }
    Tensor::new(vec![h, w, channels], data)
}

/// Splits an [H, W, C] image into non-overlapping patches, row-major over
/// the patch grid, each flattened (y, x, c) with c fastest:
/// [N, patch*patch*C] with N = (H/patch) * (W/patch).
pub fn extract_patches(image: &Tensor, patch: usize) -> Result<Tensor> {
    let shape = image.shape();
    if shape.len() != 3 {
        return Err(Error::Contract(format!(
            "extract_patches wants [H, W, C], got {shape:?}"
        )));
    }
    let (h, w, c) = (shape[0], shape[1], shape[2]);
    if patch == 0 || h % patch != 0 || w % patch != 0 {
        return Err(Error::Geometry(format!(
            "image {h}x{w} not divisible by patch {patch}"
        )));
    }
    let (gh, gw) = (h / patch, w / patch);
    let pd = patch * patch * c;
    let src = image.data();
    let mut out = Vec::with_capacity(gh * gw * pd);
    for pr in 0..gh {
        for pc in 0..gw {
            for dy in 0..patch {
                let y = pr * patch + dy;
                let x0 = pc * patch;
                let row = &src[(y * w + x0) * c..(y * w + x0 + patch) * c];
                out.extend_from_slice(row);
            }
        }
    }
    Tensor::matrix(gh * gw, pd, out)
}

/// Inverse of [`extract_patches`]; bit-exact because extraction only
/// re-indexes.
pub fn reassemble_patches(
    patches: &Tensor,
    h: usize,
    w: usize,
    c: usize,
    patch: usize,
) -> Result<Tensor> {
    if patches.shape().len() != 2 {
        return Err(Error::Contract("patches must be 2-d".into()));
    }
    let (gh, gw) = (h / patch, w / patch);
    let pd = patch * patch * c;
    if patches.rows() != gh * gw || patches.cols() != pd {
        return Err(Error::Contract(format!(
            "patches {}x{} do not cover {}x{}x{} with patch {}",
            patches.rows(),
            patches.cols(),
            h,
            w,
            c,
            patch
        )));
    }
    let src = patches.data();
    let mut out = vec![0.0; h * w * c];
    for pr in 0..gh {
        for pc in 0..gw {
            let p = &src[(pr * gw + pc) * pd..(pr * gw + pc + 1) * pd];
            for dy in 0..patch {
                let y = pr * patch + dy;
                let x0 = pc * patch;
                out[(y * w + x0) * c..(y * w + x0 + patch) * c]
                    .copy_from_slice(&p[dy * patch * c..(dy + 1) * patch * c]);
            }
        }
    }
    Tensor::new(vec![h, w, c], out)
}
