//! Everything between raw frames on disk and patch matrices: image
//! containers, the PGM codec, frame preprocessing, video-to-image
//! renderings with the shuffle/stack augmentation, dataset manifests,
//! and on-disk expansion.

pub mod expand;
pub mod image;
pub mod manifest;
pub mod pgm;
pub mod preprocess;
pub mod stride;

pub use expand::expand_dataset;
pub use image::{GrayF, GrayU8};
pub use manifest::{AugmentedManifest, DatasetManifest, Split};
pub use preprocess::Roi;
pub use stride::{ExamRecord, Mode, RegimeSpec, RenderSpec, StrideImage, VideoClip};
