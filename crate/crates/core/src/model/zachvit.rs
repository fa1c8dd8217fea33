//! The zero-token hierarchical transformer.
//!
//! Patch embeddings go straight into the blocks: no class token, no
//! positional table. Each block is
//!
//! ```text
//! a   = MHA(LN(z))            (dropout after attention in training)
//! mid = AdaptiveAdd(z, a)
//! f   = Dense(units_l)(LN(mid))
//! z'  = AdaptiveAdd(mid, f)
//! ```
//!
//! and AdaptiveAdd projects its first argument when widths differ, which
//! lets successive blocks narrow. The head is a global average pool over
//! tokens followed by a single-logit Dense.

use super::adaptive_add;
use super::attention::{multi_head_attention, HeadBufs};
use super::config::ZachVitConfig;
use crate::error::Result;
use crate::params::{glorot_uniform, ParamId, ParamSet};
use crate::rng::Stream;
use crate::tape::{BufId, Tape};

#[derive(Clone, Debug)]
pub struct ZachVit {
    pub(super) cfg: ZachVitConfig,
    pub(super) params: ParamSet,
    arch: Arch,
}

#[derive(Clone, Debug)]
struct Arch {
    embed_w: ParamId,
    embed_b: ParamId,
    blocks: Vec<BlockIds>,
    head_w: ParamId,
    head_b: ParamId,
}

#[derive(Clone, Debug)]
struct BlockIds {
    ln1: (ParamId, ParamId),
    heads: Vec<(ParamId, ParamId, ParamId)>,
    wo: ParamId,
    bo: ParamId,
    ln2: (ParamId, ParamId),
    mlp_w: ParamId,
    mlp_b: ParamId,
    proj: Option<(ParamId, ParamId)>,
}

impl ZachVit {
    pub fn init(cfg: ZachVitConfig, seed: u64) -> Result<Self> {
        Self::build(cfg, Some(Stream::from_seed(seed)))
    }

    /// Structure with zeroed weights, for checkpoint loading.
    pub(super) fn empty(cfg: ZachVitConfig) -> Result<Self> {
        Self::build(cfg, None)
    }

    fn build(cfg: ZachVitConfig, mut stream: Option<Stream>) -> Result<Self> {
        cfg.validate()?;
        let mut p = ParamSet::new();
        let mut weight = |p: &mut ParamSet, name: &str, rows: usize, cols: usize| {
            let v = match stream.as_mut() {
                Some(s) => glorot_uniform(rows, cols, s),
                None => vec![0.0; rows * cols],
            };
            p.add(name, rows, cols, v)
        };

        let embed_w = weight(&mut p, "embed/w", cfg.patch_dim(), cfg.embed_dim)?;
        let embed_b = p.add("embed/b", 1, cfg.embed_dim, vec![0.0; cfg.embed_dim])?;

        let mut blocks = Vec::new();
        for (i, (&d, &u)) in cfg
            .block_input_widths()
            .iter()
            .zip(&cfg.block_units)
            .enumerate()
        {
            let nh = cfg.block_heads[i];
            let dh = d / nh;
            let ln1 = (
                p.add(&format!("block{i}/ln1/g"), 1, d, vec![1.0; d])?,
                p.add(&format!("block{i}/ln1/b"), 1, d, vec![0.0; d])?,
            );
            let mut heads = Vec::new();
            for j in 0..nh {
                heads.push((
                    weight(&mut p, &format!("block{i}/attn/h{j}/wq"), d, dh)?,
                    weight(&mut p, &format!("block{i}/attn/h{j}/wk"), d, dh)?,
                    weight(&mut p, &format!("block{i}/attn/h{j}/wv"), d, dh)?,
                ));
            }
            let wo = weight(&mut p, &format!("block{i}/attn/wo"), d, d)?;
            let bo = p.add(&format!("block{i}/attn/bo"), 1, d, vec![0.0; d])?;
            let ln2 = (
                p.add(&format!("block{i}/ln2/g"), 1, d, vec![1.0; d])?,
                p.add(&format!("block{i}/ln2/b"), 1, d, vec![0.0; d])?,
            );
            let mlp_w = weight(&mut p, &format!("block{i}/mlp/w"), d, u)?;
            let mlp_b = p.add(&format!("block{i}/mlp/b"), 1, u, vec![0.0; u])?;
            // one residual projection per narrowing site, created with the
            // block and reused by every forward pass; equal widths need no
            // projection at all, so the parameter only exists when d != u
            let proj = if d != u {
                Some((
                    weight(&mut p, &format!("block{i}/adapt/w"), d, u)?,
                    p.add(&format!("block{i}/adapt/b"), 1, u, vec![0.0; u])?,
                ))
            } else {
                None
            };
            blocks.push(BlockIds {
                ln1,
                heads,
                wo,
                bo,
                ln2,
                mlp_w,
                mlp_b,
                proj,
            });
        }

        let last = *cfg.block_units.last().unwrap();
        let head_w = weight(&mut p, "head/w", last, 1)?;
        let head_b = p.add("head/b", 1, 1, vec![0.0])?;

        Ok(ZachVit {
            cfg,
            params: p,
            arch: Arch {
                embed_w,
                embed_b,
                blocks,
                head_w,
                head_b,
            },
        })
    }

    pub fn config(&self) -> &ZachVitConfig {
        &self.cfg
    }

    /// Records the full forward pass for one patch matrix; returns the 1x1
    /// logit buffer. `bufs` must come from `params.register_all` on `tape`.
    pub fn forward(
        &self,
        tape: &mut Tape,
        bufs: &[BufId],
        patches: BufId,
        train: bool,
        stream: &mut Stream,
    ) -> Result<BufId> {
        let b = |id: ParamId| bufs[id.0];
        let a = &self.arch;
        let eps = self.cfg.layer_norm_eps;
        let mut z = tape.dense(patches, b(a.embed_w), Some(b(a.embed_b)))?;
        for blk in &a.blocks {
            let x1 = tape.layer_norm(z, b(blk.ln1.0), b(blk.ln1.1), eps)?;
            let heads: Vec<HeadBufs> = blk
                .heads
                .iter()
                .map(|&(wq, wk, wv)| HeadBufs {
                    wq: b(wq),
                    wk: b(wk),
                    wv: b(wv),
                })
                .collect();
            let attn = multi_head_attention(tape, x1, &heads, b(blk.wo), b(blk.bo))?;
            let attn = tape.dropout(attn, self.cfg.dropout, train, stream)?;
            let mid = adaptive_add(tape, z, attn, None)?;
            let x2 = tape.layer_norm(mid, b(blk.ln2.0), b(blk.ln2.1), eps)?;
            let mut f = tape.dense(x2, b(blk.mlp_w), Some(b(blk.mlp_b)))?;
            if self.cfg.mlp_gelu {
                f = tape.gelu(f)?;
            }
            if self.cfg.mlp_dropout {
                f = tape.dropout(f, self.cfg.dropout, train, stream)?;
            }
            let proj = blk.proj.map(|(w, bias)| (b(w), b(bias)));
            z = adaptive_add(tape, mid, f, proj)?;
        }
        let pooled = tape.mean_rows(z)?;
        tape.dense(pooled, b(a.head_w), Some(b(a.head_b)))
    }
}
