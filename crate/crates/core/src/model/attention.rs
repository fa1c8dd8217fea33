//! Multi-head self-attention assembled from tape primitives.
//!
//! Per head h: softmax(Q_h K_h^T / sqrt(d_h)) V_h with per-head projection
//! matrices (no bias); heads are concatenated and mixed by an output
//! projection (with bias). No masking anywhere: every token attends to all
//! tokens, which is what makes the op equivariant to token permutations.

use crate::error::{Error, Result};
use crate::tape::{BufId, Tape};

#[derive(Clone, Copy, Debug)]
pub struct HeadBufs {
    pub wq: BufId,
    pub wk: BufId,
    pub wv: BufId,
}

pub fn multi_head_attention(
    tape: &mut Tape,
    x: BufId,
    heads: &[HeadBufs],
    wo: BufId,
    bo: BufId,
) -> Result<BufId> {
    if heads.is_empty() {
        return Err(Error::Config("attention needs at least one head".into()));
    }
    let (_n, d) = tape.dims(x);
    if d % heads.len() != 0 {
        return Err(Error::Config(format!(
            "width {} not divisible by {} heads",
            d,
            heads.len()
        )));
    }
    let dh = d / heads.len();
    let scale = 1.0 / (dh as f64).sqrt();
    let mut outs = Vec::with_capacity(heads.len());
    for hb in heads {
        for (wname, w) in [("wq", hb.wq), ("wk", hb.wk), ("wv", hb.wv)] {
            if tape.dims(w) != (d, dh) {
                return Err(Error::Contract(format!(
                    "head {wname} must be {d}x{dh}, got {:?}",
                    tape.dims(w)
                )));
            }
        }
        let q = tape.matmul(x, hb.wq)?;
        let k = tape.matmul(x, hb.wk)?;
        let v = tape.matmul(x, hb.wv)?;
        let scores = tape.matmul_nt(q, k)?;
        let scaled = tape.scale(scores, scale)?;
        let attn = tape.softmax_rows(scaled)?;
        outs.push(tape.matmul(attn, v)?);
    }
    let cat = tape.concat_cols(&outs)?;
    tape.dense(cat, wo, Some(bo))
}
