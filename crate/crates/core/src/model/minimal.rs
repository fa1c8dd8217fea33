//! Positional-embedding baseline: a standard pre-LN transformer of
//! constant width. Patch embeddings get a learned position table added
//! before the blocks (this is the piece the zero-token model deletes), and
//! the head is the same global-average-pool + Dense(1).

use super::attention::{multi_head_attention, HeadBufs};
use super::config::MinimalVitConfig;
use crate::error::{Error, Result};
use crate::params::{glorot_uniform, ParamId, ParamSet};
use crate::rng::Stream;
use crate::tape::{BufId, Tape};

#[derive(Clone, Debug)]
pub struct MinimalVit {
    pub(super) cfg: MinimalVitConfig,
    pub(super) params: ParamSet,
    arch: Arch,
}

#[derive(Clone, Debug)]
struct Arch {
    embed_w: ParamId,
    embed_b: ParamId,
    pos_table: ParamId,
    blocks: Vec<BlockIds>,
    ln_f: (ParamId, ParamId),
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
    mlp1_w: ParamId,
    mlp1_b: ParamId,
    mlp2_w: ParamId,
    mlp2_b: ParamId,
}

impl MinimalVit {
    pub fn init(cfg: MinimalVitConfig, seed: u64) -> Result<Self> {
        Self::build(cfg, Some(Stream::from_seed(seed)))
    }

    pub(super) fn empty(cfg: MinimalVitConfig) -> Result<Self> {
        Self::build(cfg, None)
    }

    fn build(cfg: MinimalVitConfig, mut stream: Option<Stream>) -> Result<Self> {
        cfg.validate()?;
        let d = cfg.embed_dim;
        let mut p = ParamSet::new();
        fn weight(
            p: &mut ParamSet,
            stream: &mut Option<Stream>,
            name: &str,
            rows: usize,
            cols: usize,
        ) -> Result<crate::params::ParamId> {
            let v = match stream.as_mut() {
                Some(s) => glorot_uniform(rows, cols, s),
                None => vec![0.0; rows * cols],
            };
            p.add(name, rows, cols, v)
        }

        let embed_w = weight(&mut p, &mut stream, "embed/w", cfg.patch_dim(), d)?;
        let embed_b = p.add("embed/b", 1, d, vec![0.0; d])?;
        // learned position table, one row per patch; uniform(-0.1, 0.1) is
        // large enough that position information is visible at init
        let n = cfg.n_patches();
        let pos_vals = match stream.as_mut() {
            Some(s) => (0..n * d).map(|_| s.uniform(-0.1, 0.1)).collect(),
            None => vec![0.0; n * d],
        };
        let pos_table = p.add("pos_table", n, d, pos_vals)?;

        let mut blocks = Vec::new();
        let dh = d / cfg.heads;
        for i in 0..cfg.blocks {
            let ln1 = (
                p.add(&format!("block{i}/ln1/g"), 1, d, vec![1.0; d])?,
                p.add(&format!("block{i}/ln1/b"), 1, d, vec![0.0; d])?,
            );
            let mut heads = Vec::new();
            for j in 0..cfg.heads {
                heads.push((
                    weight(&mut p, &mut stream, &format!("block{i}/attn/h{j}/wq"), d, dh)?,
                    weight(&mut p, &mut stream, &format!("block{i}/attn/h{j}/wk"), d, dh)?,
                    weight(&mut p, &mut stream, &format!("block{i}/attn/h{j}/wv"), d, dh)?,
                ));
            }
            let wo = weight(&mut p, &mut stream, &format!("block{i}/attn/wo"), d, d)?;
            let bo = p.add(&format!("block{i}/attn/bo"), 1, d, vec![0.0; d])?;
            let ln2 = (
                p.add(&format!("block{i}/ln2/g"), 1, d, vec![1.0; d])?,
                p.add(&format!("block{i}/ln2/b"), 1, d, vec![0.0; d])?,
            );
            let mlp1_w = weight(&mut p, &mut stream, &format!("block{i}/mlp1/w"), d, cfg.mlp_dim)?;
            let mlp1_b = p.add(&format!("block{i}/mlp1/b"), 1, cfg.mlp_dim, vec![0.0; cfg.mlp_dim])?;
            let mlp2_w = weight(&mut p, &mut stream, &format!("block{i}/mlp2/w"), cfg.mlp_dim, d)?;
            let mlp2_b = p.add(&format!("block{i}/mlp2/b"), 1, d, vec![0.0; d])?;
            blocks.push(BlockIds {
                ln1,
                heads,
                wo,
                bo,
                ln2,
                mlp1_w,
                mlp1_b,
                mlp2_w,
                mlp2_b,
            });
        }

        let ln_f = (
            p.add("ln_final/g", 1, d, vec![1.0; d])?,
            p.add("ln_final/b", 1, d, vec![0.0; d])?,
        );
        let head_w = weight(&mut p, &mut stream, "head/w", d, 1)?;
        let head_b = p.add("head/b", 1, 1, vec![0.0])?;

        Ok(MinimalVit {
            cfg,
            params: p,
            arch: Arch {
                embed_w,
                embed_b,
                pos_table,
                blocks,
                ln_f,
                head_w,
                head_b,
            },
        })
    }

    pub fn config(&self) -> &MinimalVitConfig {
        &self.cfg
    }

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
        let (n, _) = tape.dims(patches);
        if n != self.cfg.n_patches() {
            return Err(Error::Geometry(format!(
                "{} patches but position table has {} rows",
                n,
                self.cfg.n_patches()
            )));
        }
        let embedded = tape.dense(patches, b(a.embed_w), Some(b(a.embed_b)))?;
        let mut x = tape.add(embedded, b(a.pos_table))?;
        for blk in &a.blocks {
            let h1 = tape.layer_norm(x, b(blk.ln1.0), b(blk.ln1.1), eps)?;
            let heads: Vec<HeadBufs> = blk
                .heads
                .iter()
                .map(|&(wq, wk, wv)| HeadBufs {
                    wq: b(wq),
                    wk: b(wk),
                    wv: b(wv),
                })
                .collect();
            let attn = multi_head_attention(tape, h1, &heads, b(blk.wo), b(blk.bo))?;
            let attn = tape.dropout(attn, self.cfg.dropout, train, stream)?;
            x = tape.add(x, attn)?;
            let h2 = tape.layer_norm(x, b(blk.ln2.0), b(blk.ln2.1), eps)?;
            let m = tape.dense(h2, b(blk.mlp1_w), Some(b(blk.mlp1_b)))?;
            let m = tape.gelu(m)?;
            let m = tape.dense(m, b(blk.mlp2_w), Some(b(blk.mlp2_b)))?;
            let m = tape.dropout(m, self.cfg.dropout, train, stream)?;
            x = tape.add(x, m)?;
        }
        let xf = tape.layer_norm(x, b(a.ln_f.0), b(a.ln_f.1), eps)?;
        let pooled = tape.mean_rows(xf)?;
        tape.dense(pooled, b(a.head_w), Some(b(a.head_b)))
    }
}
