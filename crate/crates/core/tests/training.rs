//! Training over the full disk path: synthetic generation, stride
//! expansion, the train loop, checkpointing, and the run report.

use zachvit_core::data::expand::expand_dataset;
use zachvit_core::data::stride::{RegimeSpec, RenderSpec};
use zachvit_core::data::Split;
use zachvit_core::model::checkpoint;
use zachvit_core::model::ZachVitConfig;
use zachvit_core::synth::{generate_dataset, SynthSpec};
use zachvit_core::train::{
    curves_csv, eval_logits, evaluate_set, load_split, train, ImageSet, StopReason, TrainConfig,
    TrainReport,
};
use zachvit_core::ModelConfig;

fn build_sets(dir: &std::path::Path, width: usize) -> (ImageSet, ImageSet, ImageSet) {
    let spec = SynthSpec {
        n_patients: 12,
        prevalence: 0.5,
        frames_per_video: 4,
        frame_size: 64,
        master_seed: 5,
        ..SynthSpec::default()
    };
    let root = dir.join("raw");
    generate_dataset(&spec, &root).unwrap();
    let render = RenderSpec::new(width, false).unwrap();
    let out = dir.join("aug");
    let man = expand_dataset(&root.join("dataset.json"), &RegimeSpec::vis(), &render, &out).unwrap();
    (
        load_split(&out, &man, Split::Train).unwrap(),
        load_split(&out, &man, Split::Val).unwrap(),
        load_split(&out, &man, Split::Test).unwrap(),
    )
}

fn model_cfg(width: usize) -> ModelConfig {
    ModelConfig::ZachVit(ZachVitConfig::for_geometry(width, width, 1))
}

#[test]
fn short_run_produces_curves_checkpoint_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let (train_set, val_set, test_set) = build_sets(dir.path(), 112);
    let tc = TrainConfig {
        learning_rate: 1e-3,
        max_epochs: 4,
        early_stop_patience: 4,
        batch_size: 4,
        seed: 17,
        ..TrainConfig::default()
    };
    let run = train(&model_cfg(112), &train_set, &val_set, &tc).unwrap();
    assert_eq!(run.curves.len(), run.epochs_run);
    assert!(run.best_epoch >= 1);
    assert!(run.best_val_loss.is_finite());

    // Curves CSV: header plus one line per epoch, five fields each.
    let csv = curves_csv(&run.curves);
    let lines: Vec<&str> = csv.trim_end().lines().collect();
    assert_eq!(lines.len(), 1 + run.epochs_run);
    assert_eq!(lines[0], "epoch,train_loss,train_auc,val_loss,val_auc");
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 5));

    // Checkpoint round trip preserves evaluation bit-for-bit.
    let ckpt = dir.path().join("model.ckpt");
    checkpoint::save(&ckpt, &run.model).unwrap();
    let loaded = checkpoint::load(&ckpt).unwrap();
    let a = eval_logits(&run.model, &val_set).unwrap();
    let b = eval_logits(&loaded, &val_set).unwrap();
    assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));

    // Report serializes without timestamps and round-trips.
    let val = evaluate_set(&run.model, &val_set, tc.eval_threshold).unwrap();
    let test = evaluate_set(&run.model, &test_set, tc.eval_threshold).unwrap();
    let report = TrainReport::new(&run, &tc, val, Some(test));
    let json = serde_json::to_string_pretty(&report).unwrap();
    let back: TrainReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, report);
    assert!(!json.contains("time"));
}

#[test]
fn two_runs_write_identical_checkpoint_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let (train_set, val_set, _) = build_sets(dir.path(), 64);
    let tc = TrainConfig {
        learning_rate: 5e-4,
        max_epochs: 3,
        early_stop_patience: 3,
        batch_size: 4,
        seed: 29,
        ..TrainConfig::default()
    };
    let cfg = model_cfg(64);
    let a = train(&cfg, &train_set, &val_set, &tc).unwrap();
    let b = train(&cfg, &train_set, &val_set, &tc).unwrap();
    assert_eq!(checkpoint::to_bytes(&a.model), checkpoint::to_bytes(&b.model));
    assert_eq!(curves_csv(&a.curves), curves_csv(&b.curves));
}

#[test]
fn exploding_run_stops_with_best_so_far_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let (train_set, val_set, _) = build_sets(dir.path(), 64);
    // Steps of ~1e160 overflow the next forward pass into non-finite loss
    // mid-epoch; the run must end normally with the last good snapshot.
    let tc = TrainConfig {
        learning_rate: 1e160,
        max_epochs: 3,
        early_stop_patience: 3,
        batch_size: 4,
        seed: 3,
        ..TrainConfig::default()
    };
    let run = train(&model_cfg(64), &train_set, &val_set, &tc).unwrap();
    assert_eq!(run.stop_reason, StopReason::NonFinite);
    let finite = run
        .model
        .params()
        .entries()
        .iter()
        .all(|e| e.value.iter().all(|v| v.is_finite()));
    assert!(finite, "restored parameters must be the last finite snapshot");
}
