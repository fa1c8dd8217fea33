//! Optimizer, metrics, and the training loop.

pub mod adam;
pub mod metrics;
pub mod trainer;

pub use adam::{AdamParams, AdamState};
pub use metrics::{class_weights, evaluate, pairwise_concordance_auc, roc_auc, MetricsReport};
pub use trainer::{
    bce_mean, curves_csv, eval_logits, evaluate_set, load_split, peak_val_auc, train,
    ClassWeighting, EpochRow, ImageSet, StopReason, TrainConfig, TrainReport, TrainRun,
};
