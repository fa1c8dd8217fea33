//! Training loop: weighted BCE over the augmented training split, unweighted
//! validation loss each epoch, early stopping on best validation loss, and
//! restore-best-checkpoint semantics.

use crate::data::{AugmentedManifest, GrayU8, Split};
use crate::error::{Error, Result};
use crate::model::{Model, ModelConfig};
use crate::params::ParamId;
use crate::rng::{derive_seed, Stream};
use crate::tape::{sigmoid, Tape};
use crate::train::adam::{AdamParams, AdamState};
use crate::train::metrics::{self, MetricsReport};
use serde::{Deserialize, Serialize};
use std::path::Path;

// Sub-stream salts: weight init, dropout, per-epoch shuffles.
const SALT_INIT: u64 = 1;
const SALT_DROPOUT: u64 = 2;
const SALT_SHUFFLE: u64 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassWeighting {
    Auto,
    Off,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub max_epochs: usize,
    pub early_stop_patience: usize,
    pub batch_size: usize,
    pub class_weighting: ClassWeighting,
    pub eval_threshold: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-4,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            max_epochs: 23,
            early_stop_patience: 5,
            batch_size: 8,
            class_weighting: ClassWeighting::Auto,
            eval_threshold: 0.50,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamParams {
        AdamParams {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.adam().validate()?;
        if self.max_epochs == 0 {
            return Err(Error::Config("max_epochs must be at least 1".into()));
        }
        if self.early_stop_patience > self.max_epochs {
            return Err(Error::Config(format!(
                "patience {} exceeds max_epochs {}",
                self.early_stop_patience, self.max_epochs
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !self.eval_threshold.is_finite() || !(0.0..=1.0).contains(&self.eval_threshold) {
            return Err(Error::Config(format!(
                "eval_threshold must be in [0, 1], got {}",
                self.eval_threshold
            )));
        }
        Ok(())
    }
}

/// A split loaded into memory. Pixels stay as bytes; patch matrices are
/// produced per forward pass.
#[derive(Clone, Debug)]
pub struct ImageSet {
    pub height: usize,
    pub width: usize,
    pub images: Vec<GrayU8>,
    pub labels: Vec<u8>,
    /// Source patient id per image, for exam-level grouping.
    pub sources: Vec<String>,
}

impl ImageSet {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }
}

/// Load one split of an augmented dataset from disk.
pub fn load_split(base: &Path, man: &AugmentedManifest, split: Split) -> Result<ImageSet> {
    let [h, w] = man.image_size;
    let mut set = ImageSet {
        height: h,
        width: w,
        images: Vec::new(),
        labels: Vec::new(),
        sources: Vec::new(),
    };
    for entry in man.split(split) {
        let img = crate::data::pgm::read(&base.join(&entry.path))?;
        if (img.h, img.w) != (h, w) {
            return Err(Error::Geometry(format!(
                "{} is {}x{}, manifest says {h}x{w}",
                entry.path, img.h, img.w
            )));
        }
        if entry.label > 1 {
            return Err(Error::Input(format!(
                "{} has label {}, expected 0 or 1",
                entry.path, entry.label
            )));
        }
        set.images.push(img);
        set.labels.push(entry.label);
        set.sources.push(entry.source_patient.clone());
    }
    if set.is_empty() {
        return Err(Error::Input(format!("split {} has no images", split.name())));
    }
    Ok(set)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRow {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_auc: f64,
    pub val_loss: f64,
    pub val_auc: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    MaxEpochs,
    EarlyStop,
    NonFinite,
}

/// Outcome of a training run. The model carries the best-validation-loss
/// parameters, not the last epoch's.
#[derive(Debug)]
pub struct TrainRun {
    pub model: Model,
    pub curves: Vec<EpochRow>,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stop_reason: StopReason,
    pub class_weights: (f64, f64),
}

/// Evaluation-mode logits for every image in a set.
pub fn eval_logits(model: &Model, set: &ImageSet) -> Result<Vec<f64>> {
    check_geometry(model, set)?;
    let mut out = Vec::with_capacity(set.len());
    for img in &set.images {
        let f = img.to_f();
        out.push(model.logit_gray(&f.px, f.h, f.w)?);
    }
    Ok(out)
}

/// Mean weighted binary cross-entropy from raw logits.
pub fn bce_mean(logits: &[f64], labels: &[u8], weights: (f64, f64)) -> f64 {
    let mut loss = 0.0;
    for (&z, &y) in logits.iter().zip(labels) {
        let w = if y == 1 { weights.1 } else { weights.0 };
        loss += w * (z.max(0.0) - f64::from(y) * z + (-z.abs()).exp().ln_1p());
    }
    loss / logits.len() as f64
}

/// Confusion metrics for a model over a set at a probability threshold.
pub fn evaluate_set(model: &Model, set: &ImageSet, threshold: f64) -> Result<MetricsReport> {
    let logits = eval_logits(model, set)?;
    let probs: Vec<f64> = logits.iter().map(|&z| sigmoid(z)).collect();
    metrics::evaluate(&probs, &set.labels, threshold)
}

fn check_geometry(model: &Model, set: &ImageSet) -> Result<()> {
    let (mh, mw) = model.image_geometry();
    if (mh, mw) != (set.height, set.width) {
        return Err(Error::Geometry(format!(
            "model expects {mh}x{mw} images, set is {}x{}",
            set.height, set.width
        )));
    }
    Ok(())
}

fn snapshot(model: &Model) -> Vec<Vec<f64>> {
    model.params().entries().iter().map(|e| e.value.clone()).collect()
}

fn restore(model: &mut Model, snap: &[Vec<f64>]) -> Result<()> {
    for (i, values) in snap.iter().enumerate() {
        model.params_mut().set_value(ParamId(i), values.clone())?;
    }
    Ok(())
}

/// Train a model on an augmented training split against a canonical
/// validation split. Fully determined by (sets, config): weight init,
/// dropout, and per-epoch shuffles all derive from `config.seed`.
pub fn train(model_cfg: &ModelConfig, train_set: &ImageSet, val_set: &ImageSet, tc: &TrainConfig) -> Result<TrainRun> {
    tc.validate()?;
    model_cfg.validate()?;
    let weights = match tc.class_weighting {
        ClassWeighting::Auto => metrics::class_weights(&train_set.labels)?,
        ClassWeighting::Off => (1.0, 1.0),
    };
    let mut model = Model::init(model_cfg.clone(), derive_seed(&[tc.seed, SALT_INIT]))?;
    check_geometry(&model, train_set)?;
    check_geometry(&model, val_set)?;

    let h = tc.adam();
    let mut adam = AdamState::new(model.params());
    let mut dropout = Stream::from_seed(derive_seed(&[tc.seed, SALT_DROPOUT]));

    let n = train_set.len();
    let mut best: Vec<Vec<f64>> = snapshot(&model);
    let mut best_epoch = 0usize;
    let mut best_val_loss = f64::INFINITY;
    let mut curves: Vec<EpochRow> = Vec::new();
    let mut stop_reason = StopReason::MaxEpochs;

    'epochs: for epoch in 1..=tc.max_epochs {
        let mut order: Vec<usize> = (0..n).collect();
        Stream::from_seed(derive_seed(&[tc.seed, SALT_SHUFFLE, epoch as u64])).shuffle(&mut order);

        let mut loss_sum = 0.0;
        let mut train_scores = vec![0.0; n];
        for chunk in order.chunks(tc.batch_size) {
            let mut tape = Tape::new();
            let bufs = model.params().register_all(&mut tape)?;
            let mut logit_ids = Vec::with_capacity(chunk.len());
            let mut labels = Vec::with_capacity(chunk.len());
            for &idx in chunk {
                let f = train_set.images[idx].to_f();
                let patches = model.patches_for_gray(&f.px, f.h, f.w)?;
                let pid = tape.input(patches.rows(), patches.cols(), patches.into_data())?;
                logit_ids.push(model.forward(&mut tape, &bufs, pid, true, &mut dropout)?);
                labels.push(f64::from(train_set.labels[idx]));
            }
            let logits = tape.concat_rows(&logit_ids)?;
            let loss = tape.sigmoid_bce(logits, &labels, weights)?;
            let loss_val = tape.value(loss)[0];
            for (&idx, &z) in chunk.iter().zip(tape.value(logits)) {
                train_scores[idx] = z;
            }
            if !loss_val.is_finite() {
                stop_reason = StopReason::NonFinite;
                restore(&mut model, &best)?;
                return Ok(TrainRun {
                    model,
                    curves,
                    epochs_run: epoch - 1,
                    best_epoch,
                    best_val_loss,
                    stop_reason,
                    class_weights: weights,
                });
            }
            loss_sum += loss_val * chunk.len() as f64;

            model.params_mut().zero_grads();
            tape.backward(loss)?;
            model.params_mut().accumulate_grads(&tape, &bufs);
            adam.step(model.params_mut(), &h)?;
        }

        let train_loss = loss_sum / n as f64;
        let train_auc = metrics::roc_auc(&train_scores, &train_set.labels)?;
        let val_logits = eval_logits(&model, val_set)?;
        let val_loss = bce_mean(&val_logits, &val_set.labels, (1.0, 1.0));
        let val_auc = metrics::roc_auc(&val_logits, &val_set.labels)?;
        curves.push(EpochRow {
            epoch,
            train_loss,
            train_auc,
            val_loss,
            val_auc,
        });

        if val_loss < best_val_loss {
            best_val_loss = val_loss;
            best_epoch = epoch;
            best = snapshot(&model);
        } else if epoch - best_epoch > tc.early_stop_patience {
            stop_reason = StopReason::EarlyStop;
            restore(&mut model, &best)?;
            return Ok(TrainRun {
                model,
                epochs_run: epoch,
                curves,
                best_epoch,
                best_val_loss,
                stop_reason,
                class_weights: weights,
            });
        }
        if !val_loss.is_finite() {
            stop_reason = StopReason::NonFinite;
            break 'epochs;
        }
    }

    restore(&mut model, &best)?;
    let epochs_run = curves.len();
    Ok(TrainRun {
        model,
        curves,
        epochs_run,
        best_epoch,
        best_val_loss,
        stop_reason,
        class_weights: weights,
    })
}

/// Curves in CSV form: one row per epoch.
pub fn curves_csv(rows: &[EpochRow]) -> String {
    let mut out = String::from("epoch,train_loss,train_auc,val_loss,val_auc\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.epoch, r.train_loss, r.train_auc, r.val_loss, r.val_auc
        ));
    }
    out
}

/// Highest validation AUC over the curves (first epoch on ties).
pub fn peak_val_auc(rows: &[EpochRow]) -> Option<(usize, f64)> {
    let mut peak: Option<(usize, f64)> = None;
    for r in rows {
        if peak.map_or(true, |(_, a)| r.val_auc > a) {
            peak = Some((r.epoch, r.val_auc));
        }
    }
    peak
}

/// Final run report: resolved configs, stopping summary, per-epoch curves,
/// and metrics at the restored best checkpoint. Reports both the best-loss
/// epoch and the peak-AUC epoch; no timestamps, so reruns serialize
/// identically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub class_weights: [f64; 2],
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stop_reason: StopReason,
    pub peak_val_auc_epoch: usize,
    pub peak_val_auc: f64,
    pub curves: Vec<EpochRow>,
    pub val: MetricsReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test: Option<MetricsReport>,
}

impl TrainReport {
    pub fn new(run: &TrainRun, tc: &TrainConfig, val: MetricsReport, test: Option<MetricsReport>) -> Self {
        let (peak_epoch, peak_auc) = peak_val_auc(&run.curves).unwrap_or((0, f64::NAN));
        TrainReport {
            model: run.model.config(),
            train: tc.clone(),
            class_weights: [run.class_weights.0, run.class_weights.1],
            epochs_run: run.epochs_run,
            best_epoch: run.best_epoch,
            best_val_loss: run.best_val_loss,
            stop_reason: run.stop_reason,
            peak_val_auc_epoch: peak_epoch,
            peak_val_auc: peak_auc,
            curves: run.curves.clone(),
            val,
            test,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ZachVitConfig;

    fn tiny_cfg() -> ModelConfig {
        ModelConfig::ZachVit(ZachVitConfig {
            image_height: 32,
            image_width: 32,
            patch: 16,
            channels: 1,
            embed_dim: 16,
            block_units: vec![12],
            block_heads: vec![2],
            dropout: 0.1,
            mlp_dropout: false,
            mlp_gelu: false,
            layer_norm_eps: 1e-5,
        })
    }

    /// Positives carry two high-contrast checker patches; negatives are
    /// flat. Distinct patch multisets, so a permutation-invariant model can
    /// separate them.
    fn toy_set(n_pos: usize, n_neg: usize, seed: u64) -> ImageSet {
        let mut s = Stream::from_seed(seed);
        let mut set = ImageSet {
            height: 32,
            width: 32,
            images: Vec::new(),
            labels: Vec::new(),
            sources: Vec::new(),
        };
        for i in 0..n_pos + n_neg {
            let positive = i < n_pos;
            let jitter = s.below(9) as u8;
            let mut img = GrayU8::filled(32, 32, 120 + jitter);
            if positive {
                for r in 0..16 {
                    for c in 0..32 {
                        img.px[r * 32 + c] = if (r + c) % 2 == 0 { 235 } else { 8 };
                    }
                }
            }
            set.images.push(img);
            set.labels.push(u8::from(positive));
            set.sources.push(format!("p{i:03}"));
        }
        set
    }

    #[test]
    fn zero_learning_rate_freezes_parameters_and_val_metrics() {
        let cfg = tiny_cfg();
        let train_set = toy_set(3, 5, 11);
        let val_set = toy_set(2, 2, 12);
        let tc = TrainConfig {
            learning_rate: 0.0,
            max_epochs: 23,
            early_stop_patience: 2,
            batch_size: 4,
            seed: 9,
            ..TrainConfig::default()
        };
        let run = train(&cfg, &train_set, &val_set, &tc).unwrap();

        let init = Model::init(cfg, derive_seed(&[9, SALT_INIT])).unwrap();
        for (a, b) in run.model.params().entries().iter().zip(init.params().entries()) {
            assert_eq!(a.value, b.value, "{} drifted at lr=0", a.name);
        }
        let first = run.curves[0];
        for row in &run.curves {
            assert_eq!(row.val_loss.to_bits(), first.val_loss.to_bits());
            assert_eq!(row.val_auc.to_bits(), first.val_auc.to_bits());
        }
        // best at epoch 1; epochs 2..4 fail to improve; 4 - 1 > 2 stops it
        assert_eq!(run.stop_reason, StopReason::EarlyStop);
        assert_eq!(run.best_epoch, 1);
        assert_eq!(run.epochs_run, 4);
    }

    #[test]
    fn zero_patience_stops_after_first_non_improving_epoch() {
        let tc = TrainConfig {
            learning_rate: 0.0,
            early_stop_patience: 0,
            batch_size: 4,
            seed: 3,
            ..TrainConfig::default()
        };
        let run = train(&tiny_cfg(), &toy_set(2, 4, 5), &toy_set(1, 2, 6), &tc).unwrap();
        assert_eq!(run.stop_reason, StopReason::EarlyStop);
        assert_eq!(run.best_epoch, 1);
        assert_eq!(run.epochs_run, 2);
    }

    #[test]
    fn identical_runs_are_bit_identical() {
        let tc = TrainConfig {
            learning_rate: 1e-3,
            max_epochs: 3,
            early_stop_patience: 3,
            batch_size: 4,
            seed: 21,
            ..TrainConfig::default()
        };
        let train_set = toy_set(3, 5, 1);
        let val_set = toy_set(2, 2, 2);
        let a = train(&tiny_cfg(), &train_set, &val_set, &tc).unwrap();
        let b = train(&tiny_cfg(), &train_set, &val_set, &tc).unwrap();
        assert_eq!(curves_csv(&a.curves), curves_csv(&b.curves));
        for (x, y) in a.model.params().entries().iter().zip(b.model.params().entries()) {
            let same = x.value.iter().zip(&y.value).all(|(p, q)| p.to_bits() == q.to_bits());
            assert!(same, "{} differs between identical runs", x.name);
        }
        assert_eq!(a.stop_reason, StopReason::MaxEpochs);
        assert_eq!(a.epochs_run, 3);
    }

    #[test]
    fn learns_to_separate_toy_classes() {
        let tc = TrainConfig {
            learning_rate: 3e-3,
            max_epochs: 12,
            early_stop_patience: 12,
            batch_size: 4,
            seed: 7,
            ..TrainConfig::default()
        };
        let train_set = toy_set(6, 10, 31);
        let val_set = toy_set(3, 5, 32);
        let run = train(&tiny_cfg(), &train_set, &val_set, &tc).unwrap();
        let (_, peak) = peak_val_auc(&run.curves).unwrap();
        assert!(peak >= 0.95, "peak val AUC {peak}");
        let report = evaluate_set(&run.model, &val_set, 0.5).unwrap();
        assert!(report.roc_auc >= 0.95, "restored-best AUC {}", report.roc_auc);
    }

    #[test]
    fn class_weighting_changes_the_loss() {
        let train_set = toy_set(2, 6, 41);
        let val_set = toy_set(1, 3, 42);
        let base = TrainConfig {
            learning_rate: 1e-3,
            max_epochs: 1,
            early_stop_patience: 1,
            batch_size: 8,
            seed: 13,
            ..TrainConfig::default()
        };
        let auto = train(&tiny_cfg(), &train_set, &val_set, &base).unwrap();
        let off = TrainConfig {
            class_weighting: ClassWeighting::Off,
            ..base
        };
        let off = train(&tiny_cfg(), &train_set, &val_set, &off).unwrap();
        assert_eq!(auto.class_weights, (8.0 / 12.0, 8.0 / 4.0));
        assert_eq!(off.class_weights, (1.0, 1.0));
        assert_ne!(auto.curves[0].train_loss, off.curves[0].train_loss);
    }

    #[test]
    fn doubling_positive_weight_doubles_positive_contribution_exactly() {
        let mut tape = Tape::new();
        let z = tape.input(1, 1, vec![0.37]).unwrap();
        let l1 = tape.sigmoid_bce(z, &[1.0], (1.0, 1.3)).unwrap();
        let l2 = tape.sigmoid_bce(z, &[1.0], (1.0, 2.6)).unwrap();
        let a = tape.value(l1)[0];
        let b = tape.value(l2)[0];
        assert_eq!(b.to_bits(), (2.0 * a).to_bits());
    }

    #[test]
    fn geometry_mismatch_is_rejected() {
        let train_set = toy_set(2, 2, 1);
        let mut wrong = train_set.clone();
        wrong.height = 16;
        let tc = TrainConfig::default();
        assert!(matches!(
            train(&tiny_cfg(), &wrong, &train_set, &tc),
            Err(Error::Geometry(_))
        ));
        let model = Model::init(tiny_cfg(), 0).unwrap();
        assert!(matches!(
            evaluate_set(&model, &wrong, 0.5),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn config_validation_bounds() {
        let mut tc = TrainConfig::default();
        assert!(tc.validate().is_ok());
        tc.learning_rate = -1e-4;
        assert!(tc.validate().is_err());
        tc = TrainConfig {
            early_stop_patience: 24,
            ..TrainConfig::default()
        };
        assert!(tc.validate().is_err());
        tc = TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        };
        assert!(tc.validate().is_err());
        tc = TrainConfig {
            eval_threshold: 1.5,
            ..TrainConfig::default()
        };
        assert!(tc.validate().is_err());
        // lr = 0 stays legal so frozen-parameter runs are expressible
        tc = TrainConfig {
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        assert!(tc.validate().is_ok());
    }

    #[test]
    fn train_config_serde_round_trip_and_defaults() {
        let tc: TrainConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(tc, TrainConfig::default());
        assert_eq!(tc.learning_rate, 1e-4);
        assert_eq!(tc.max_epochs, 23);
        assert_eq!(tc.class_weighting, ClassWeighting::Auto);
        let json = serde_json::to_string(&tc).unwrap();
        let back: TrainConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, tc);
        assert!(serde_json::from_str::<TrainConfig>("{\"bogus\":1}").is_err());
    }

    #[test]
    fn curves_csv_format() {
        let rows = vec![EpochRow {
            epoch: 1,
            train_loss: 0.5,
            train_auc: 0.75,
            val_loss: 0.25,
            val_auc: 1.0,
        }];
        assert_eq!(
            curves_csv(&rows),
            "epoch,train_loss,train_auc,val_loss,val_auc\n1,0.5,0.75,0.25,1\n"
        );
    }

    #[test]
    fn load_split_reads_pgms_and_checks_geometry() {
        use crate::data::manifest::ImageEntry;
        let dir = tempfile::tempdir().unwrap();
        let img = GrayU8::filled(8, 8, 40);
        crate::data::pgm::write(&dir.path().join("a.pgm"), &img).unwrap();
        crate::data::pgm::write(&dir.path().join("b.pgm"), &img).unwrap();
        let entry = |path: &str, split| ImageEntry {
            path: path.into(),
            source_patient: "p000".into(),
            label: 1,
            split,
            permutation: None,
            seed: None,
            view_index: None,
        };
        let man = AugmentedManifest {
            regime: "vis".into(),
            image_size: [8, 8],
            aligned: false,
            images: vec![entry("a.pgm", Split::Train), entry("b.pgm", Split::Val)],
        };
        let set = load_split(dir.path(), &man, Split::Train).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.labels, vec![1]);
        assert_eq!(set.sources, vec!["p000".to_string()]);
        assert!(matches!(
            load_split(dir.path(), &man, Split::Test),
            Err(Error::Input(_))
        ));
        let bad = AugmentedManifest {
            image_size: [16, 16],
            ..man
        };
        assert!(matches!(
            load_split(dir.path(), &bad, Split::Train),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn peak_tracking_prefers_first_tie() {
        let row = |epoch, val_auc| EpochRow {
            epoch,
            train_loss: 0.0,
            train_auc: 0.5,
            val_loss: 0.1,
            val_auc,
        };
        let rows = vec![row(1, 0.8), row(2, 0.9), row(3, 0.9)];
        assert_eq!(peak_val_auc(&rows), Some((2, 0.9)));
        assert_eq!(peak_val_auc(&[]), None);
    }
}
