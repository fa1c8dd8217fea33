//! The two architectures and everything they share: patch extraction, the
//! dimension-adaptive residual, checkpoints.

pub mod attention;
pub mod checkpoint;
pub mod config;
pub mod minimal;
pub mod patches;
pub mod zachvit;

use crate::error::{Error, Result};
use crate::params::ParamSet;
use crate::rng::Stream;
use crate::tape::{BufId, Tape};
use crate::tensor::Tensor;
pub use config::{MinimalVitConfig, ModelConfig, ZachVitConfig};
pub use minimal::MinimalVit;
pub use zachvit::ZachVit;

/// Residual add that projects `x` to `y`'s width when they differ.
/// `proj` is the per-site projection (weight, bias) and must be present
/// exactly when the widths differ.
pub fn adaptive_add(
    tape: &mut Tape,
    x: BufId,
    y: BufId,
    proj: Option<(BufId, BufId)>,
) -> Result<BufId> {
    let (_, dx) = tape.dims(x);
    let (_, dy) = tape.dims(y);
    match (dx == dy, proj) {
        (true, None) => tape.add(x, y),
        (true, Some(_)) => Err(Error::Contract(format!(
            "projection supplied but widths already match ({dx})"
        ))),
        (false, Some((w, b))) => {
            if tape.dims(w) != (dx, dy) {
                return Err(Error::Contract(format!(
                    "projection must be {dx}x{dy}, got {:?}",
                    tape.dims(w)
                )));
            }
            let xp = tape.dense(x, w, Some(b))?;
            tape.add(xp, y)
        }
        (false, None) => Err(Error::Contract(format!(
            "widths {dx} vs {dy} need a projection"
        ))),
    }
}

/// Either architecture behind one API.
#[derive(Clone, Debug)]
pub enum Model {
    ZachVit(ZachVit),
    MinimalVit(MinimalVit),
}

impl Model {
    pub fn init(cfg: ModelConfig, seed: u64) -> Result<Self> {
        Ok(match cfg {
            ModelConfig::ZachVit(c) => Model::ZachVit(ZachVit::init(c, seed)?),
            ModelConfig::MinimalVit(c) => Model::MinimalVit(MinimalVit::init(c, seed)?),
        })
    }

    /// Structure with zeroed weights (checkpoint loading).
    pub fn empty(cfg: ModelConfig) -> Result<Self> {
        Ok(match cfg {
            ModelConfig::ZachVit(c) => Model::ZachVit(ZachVit::empty(c)?),
            ModelConfig::MinimalVit(c) => Model::MinimalVit(MinimalVit::empty(c)?),
        })
    }

    pub fn config(&self) -> ModelConfig {
        match self {
            Model::ZachVit(m) => ModelConfig::ZachVit(m.cfg.clone()),
            Model::MinimalVit(m) => ModelConfig::MinimalVit(m.cfg.clone()),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Model::ZachVit(_) => "zachvit",
            Model::MinimalVit(_) => "minimal-vit",
        }
    }

    pub fn params(&self) -> &ParamSet {
        match self {
            Model::ZachVit(m) => &m.params,
            Model::MinimalVit(m) => &m.params,
        }
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        match self {
            Model::ZachVit(m) => &mut m.params,
            Model::MinimalVit(m) => &mut m.params,
        }
    }

    pub fn param_count(&self) -> usize {
        self.params().param_count()
    }

    pub fn image_geometry(&self) -> (usize, usize) {
        self.config().image_geometry()
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        bufs: &[BufId],
        patches: BufId,
        train: bool,
        stream: &mut Stream,
    ) -> Result<BufId> {
        match self {
            Model::ZachVit(m) => m.forward(tape, bufs, patches, train, stream),
            Model::MinimalVit(m) => m.forward(tape, bufs, patches, train, stream),
        }
    }

    /// Patch matrix for a grayscale image under this model's config.
    pub fn patches_for_gray(&self, px: &[f64], h: usize, w: usize) -> Result<Tensor> {
        let (ch, patch, (gh, gw)) = match self {
            Model::ZachVit(m) => (m.cfg.channels, m.cfg.patch, (m.cfg.image_height, m.cfg.image_width)),
            Model::MinimalVit(m) => (m.cfg.channels, m.cfg.patch, (m.cfg.image_height, m.cfg.image_width)),
        };
        if (h, w) != (gh, gw) {
            return Err(Error::Geometry(format!(
                "image {h}x{w} does not match model geometry {gh}x{gw}"
            )));
        }
        let img = patches::image_from_gray(px, h, w, ch)?;
        patches::extract_patches(&img, patch)
    }

    /// Evaluation-mode logit for a pre-extracted patch matrix.
    pub fn logit_patches(&self, patches: &Tensor) -> Result<f64> {
        let mut tape = Tape::new();
        let bufs = self.params().register_all(&mut tape)?;
        let pid = tape.input(patches.rows(), patches.cols(), patches.data().to_vec())?;
        let mut unused = Stream::from_seed(0);
        let out = self.forward(&mut tape, &bufs, pid, false, &mut unused)?;
        Ok(tape.value(out)[0])
    }

    /// Evaluation-mode logit for a grayscale image.
    pub fn logit_gray(&self, px: &[f64], h: usize, w: usize) -> Result<f64> {
        let patches = self.patches_for_gray(px, h, w)?;
        self.logit_patches(&patches)
    }
}
