//! Zero-token vision transformer on stride images, with the full pipeline
//! around it: deterministic augmentation, synthetic data generation, and a
//! reproducible training/evaluation harness.
//!
//! Everything is CPU-only f64. All randomness flows through explicitly
//! seeded streams ([`rng::Stream`]), so any fixed (inputs, config, seed)
//! triple reproduces outputs byte for byte.

pub mod data;
pub mod error;
pub mod model;
pub mod params;
pub mod rng;
pub mod synth;
pub mod tape;
pub mod tensor;
pub mod train;
pub mod verify;

pub use error::{Error, Result};
pub use model::{Model, ModelConfig};
pub use tensor::Tensor;
