//! Command implementations. Every command takes a required output directory,
//! resolves its configuration as defaults <- config file <- flags, and writes
//! a run manifest there; `--dry-run` prints the resolved configuration and
//! performs no writes.

use crate::emit;
use crate::runinfo::{walk_files, Run};
use crate::svg::{LinePlot, Series};
use serde::de::DeserializeOwned;
use serde_json::json;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use zachvit_core::data::manifest::write_json_atomic;
use zachvit_core::data::{AugmentedManifest, RegimeSpec, RenderSpec, Split};
use zachvit_core::model::checkpoint;
use zachvit_core::model::{MinimalVitConfig, ZachVitConfig};
use zachvit_core::synth::{generate_dataset, SynthSpec};
use zachvit_core::train::{
    curves_csv, evaluate_set, load_split, train, ClassWeighting, TrainConfig, TrainReport,
};
use zachvit_core::verify::{run_suite, SuiteOutcome, SUITES};
use zachvit_core::{Error, ModelConfig, Result};

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

fn to_value<T: serde::Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("config types serialize infallibly")
}

fn print_dry(command: &str, config: &serde_json::Value) {
    let body = json!({ "command": command, "config": config });
    emit(&serde_json::to_string_pretty(&body).expect("json value"));
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn parent_of(path: &Path) -> PathBuf {
    let p = path.parent().unwrap_or(Path::new("."));
    if p.as_os_str().is_empty() { PathBuf::from(".") } else { p.to_path_buf() }
}

fn parse_split(s: &str) -> Result<Split> {
    match s {
        "train" => Ok(Split::Train),
        "val" => Ok(Split::Val),
        "test" => Ok(Split::Test),
        other => Err(Error::Config(format!(
            "unknown split '{other}'; expected train, val, or test"
        ))),
    }
}

// ---------------------------------------------------------------- synth

#[derive(clap::Args)]
pub struct SynthArgs {
    /// Output directory for the dataset; created, must be empty.
    #[arg(long)]
    pub out: PathBuf,
    /// JSON file with generator settings; the flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub patients: Option<usize>,
    /// Fraction of label-1 patients, in (0,1).
    #[arg(long)]
    pub prevalence: Option<f64>,
    /// Frames per video.
    #[arg(long)]
    pub frames: Option<usize>,
    /// Square frame edge in pixels.
    #[arg(long)]
    pub frame_size: Option<usize>,
    /// Additive pixel noise amplitude on the [0,1] scale.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn synth(a: SynthArgs, dry_run: bool) -> Result<()> {
    let mut spec = match &a.config {
        Some(p) => read_json::<SynthSpec>(p)?,
        None => SynthSpec::default(),
    };
    if let Some(v) = a.patients {
        spec.n_patients = v;
    }
    if let Some(v) = a.prevalence {
        spec.prevalence = v;
    }
    if let Some(v) = a.frames {
        spec.frames_per_video = v;
    }
    if let Some(v) = a.frame_size {
        spec.frame_size = v;
    }
    if let Some(v) = a.noise {
        spec.noise_level = v;
    }
    if let Some(v) = a.seed {
        spec.master_seed = v;
    }
    spec.validate()?;
    let config = to_value(&spec);
    if dry_run {
        print_dry("synth", &config);
        return Ok(());
    }
    let mut run = Run::new("synth", config);
    if let Some(p) = &a.config {
        run.input(p)?;
    }
    let manifest = generate_dataset(&spec, &a.out)?;
    for f in walk_files(&a.out)? {
        run.output(&f);
    }
    run.finish(&a.out)?;
    emit(&format!(
        "wrote {} patients ({} videos) to {}",
        manifest.patients.len(),
        manifest.patients.len() * 4,
        a.out.display()
    ));
    Ok(())
}

// -------------------------------------------------------------- augment

#[derive(clap::Args)]
pub struct AugmentArgs {
    /// Output directory for the rendered images; created, must be empty.
    #[arg(long)]
    pub out: PathBuf,
    /// Dataset manifest written by `synth` (dataset.json).
    #[arg(long)]
    pub manifest: PathBuf,
    /// vi | svi:SEED | vis | ssda0 | ssda:S1,S2,...
    #[arg(long, default_value = "vis")]
    pub regime: String,
    /// Rendered image width in pixels (multiple of 4).
    #[arg(long, default_value_t = 224)]
    pub width: usize,
    /// Pad view bands to whole 16-pixel patch rows.
    #[arg(long)]
    pub aligned: bool,
}

pub fn augment(a: AugmentArgs, dry_run: bool) -> Result<()> {
    let regime: RegimeSpec = a.regime.parse()?;
    let render = RenderSpec::new(a.width, a.aligned)?;
    let config = json!({
        "manifest": a.manifest.display().to_string(),
        "regime": to_value(&regime),
        "render": to_value(&render),
    });
    if dry_run {
        print_dry("augment", &config);
        return Ok(());
    }
    let mut run = Run::new("augment", config);
    run.input(&a.manifest)?;
    let augmented = zachvit_core::data::expand_dataset(&a.manifest, &regime, &render, &a.out)?;
    for f in walk_files(&a.out)? {
        run.output(&f);
    }
    run.finish(&a.out)?;
    emit(&format!(
        "rendered {} images ({}x{}) to {}",
        augmented.images.len(),
        augmented.image_size[0],
        augmented.image_size[1],
        a.out.display()
    ));
    Ok(())
}

// ---------------------------------------------------------------- train

#[derive(clap::Args)]
pub struct TrainArgs {
    /// Output directory for model.ckpt, curves.csv, and report.json.
    #[arg(long)]
    pub out: PathBuf,
    /// Augmented manifest written by `augment` (manifest.json); images are
    /// loaded relative to it.
    #[arg(long)]
    pub manifest: PathBuf,
    /// zachvit | minimal-vit. Geometry comes from the manifest.
    #[arg(long, default_value = "zachvit")]
    pub model: String,
    /// JSON file with training settings; the flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    /// Early-stop patience in epochs.
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Decision threshold for reported metrics.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// auto | off
    #[arg(long)]
    pub class_weighting: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn resolve_train_config(a: &TrainArgs) -> Result<TrainConfig> {
    let mut tc = match &a.config {
        Some(p) => read_json::<TrainConfig>(p)?,
        None => TrainConfig::default(),
    };
    if let Some(v) = a.learning_rate {
        tc.learning_rate = v;
    }
    if let Some(v) = a.max_epochs {
        tc.max_epochs = v;
    }
    if let Some(v) = a.patience {
        tc.early_stop_patience = v;
    }
    if let Some(v) = a.batch_size {
        tc.batch_size = v;
    }
    if let Some(v) = a.threshold {
        tc.eval_threshold = v;
    }
    if let Some(v) = &a.class_weighting {
        tc.class_weighting = match v.as_str() {
            "auto" => ClassWeighting::Auto,
            "off" => ClassWeighting::Off,
            other => {
                return Err(Error::Config(format!(
                    "unknown class weighting '{other}'; expected auto or off"
                )))
            }
        };
    }
    if let Some(v) = a.seed {
        tc.seed = v;
    }
    tc.validate()?;
    Ok(tc)
}

fn model_config_for(model: &str, h: usize, w: usize) -> Result<ModelConfig> {
    match model {
        "zachvit" => Ok(ModelConfig::ZachVit(ZachVitConfig::for_geometry(h, w, 1))),
        "minimal-vit" => Ok(ModelConfig::MinimalVit(MinimalVitConfig::for_geometry(h, w, 1))),
        other => Err(Error::Config(format!(
            "unknown model '{other}'; expected zachvit or minimal-vit"
        ))),
    }
}

pub fn train_cmd(a: TrainArgs, dry_run: bool) -> Result<()> {
    let tc = resolve_train_config(&a)?;
    let man = AugmentedManifest::load(&a.manifest)?;
    let [h, w] = man.image_size;
    let model_cfg = model_config_for(&a.model, h, w)?;
    let config = json!({
        "manifest": a.manifest.display().to_string(),
        "model": to_value(&model_cfg),
        "train": to_value(&tc),
    });
    if dry_run {
        print_dry("train", &config);
        return Ok(());
    }
    let mut run = Run::new("train", config);
    run.input(&a.manifest)?;
    if let Some(p) = &a.config {
        run.input(p)?;
    }

    let base = parent_of(&a.manifest);
    let train_set = load_split(&base, &man, Split::Train)?;
    let val_set = load_split(&base, &man, Split::Val)?;
    let outcome = train(&model_cfg, &train_set, &val_set, &tc)?;
    let val_metrics = evaluate_set(&outcome.model, &val_set, tc.eval_threshold)?;
    let test_metrics = if man.split(Split::Test).next().is_some() {
        let test_set = load_split(&base, &man, Split::Test)?;
        Some(evaluate_set(&outcome.model, &test_set, tc.eval_threshold)?)
    } else {
        None
    };
    let report = TrainReport::new(&outcome, &tc, val_metrics, test_metrics);

    ensure_dir(&a.out)?;
    let ckpt = a.out.join("model.ckpt");
    let curves = a.out.join("curves.csv");
    let report_path = a.out.join("report.json");
    checkpoint::save(&ckpt, &outcome.model)?;
    std::fs::write(&curves, curves_csv(&outcome.curves)).map_err(|e| Error::io(&curves, e))?;
    write_json_atomic(&report_path, &report)?;
    run.output(&ckpt);
    run.output(&curves);
    run.output(&report_path);
    run.finish(&a.out)?;
    emit(&format!(
        "trained {} for {} epochs (best epoch {}, val loss {:.6}); val AUC {:.4}",
        a.model, report.epochs_run, report.best_epoch, report.best_val_loss, report.val.roc_auc
    ));
    if let Some(t) = &report.test {
        emit(&format!("test AUC {:.4}, accuracy {:.4}", t.roc_auc, t.accuracy));
    }
    Ok(())
}

// ----------------------------------------------------------------- eval

#[derive(clap::Args)]
pub struct EvalArgs {
    /// Output directory for metrics.json and metrics.csv.
    #[arg(long)]
    pub out: PathBuf,
    /// Model checkpoint written by `train`.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Augmented manifest describing the images to score.
    #[arg(long)]
    pub manifest: PathBuf,
    /// train | val | test
    #[arg(long, default_value = "test")]
    pub split: String,
    /// Decision threshold on the predicted probability.
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
}

pub fn eval(a: EvalArgs, dry_run: bool) -> Result<()> {
    let split = parse_split(&a.split)?;
    if !(a.threshold.is_finite() && (0.0..=1.0).contains(&a.threshold)) {
        return Err(Error::Config(format!("threshold {} outside [0,1]", a.threshold)));
    }
    let config = json!({
        "checkpoint": a.checkpoint.display().to_string(),
        "manifest": a.manifest.display().to_string(),
        "split": split.name(),
        "threshold": a.threshold,
    });
    if dry_run {
        print_dry("eval", &config);
        return Ok(());
    }
    let mut run = Run::new("eval", config);
    run.input(&a.checkpoint)?;
    run.input(&a.manifest)?;

    let model = checkpoint::load(&a.checkpoint)?;
    let man = AugmentedManifest::load(&a.manifest)?;
    let set = load_split(&parent_of(&a.manifest), &man, split)?;
    let metrics = evaluate_set(&model, &set, a.threshold)?;

    ensure_dir(&a.out)?;
    let json_path = a.out.join("metrics.json");
    let csv_path = a.out.join("metrics.csv");
    write_json_atomic(&json_path, &metrics)?;
    let csv = format!(
        "n,tp,fp,tn,fn,sensitivity,specificity,accuracy,f1,roc_auc\n{},{},{},{},{},{},{},{},{},{}\n",
        metrics.n,
        metrics.tp,
        metrics.fp,
        metrics.tn,
        metrics.fn_,
        metrics.sensitivity,
        metrics.specificity,
        metrics.accuracy,
        metrics.f1,
        metrics.roc_auc
    );
    std::fs::write(&csv_path, csv).map_err(|e| Error::io(&csv_path, e))?;
    run.output(&json_path);
    run.output(&csv_path);
    run.finish(&a.out)?;
    emit(&format!(
        "{} split ({} images): AUC {:.4}, accuracy {:.4}, sensitivity {:.4}, specificity {:.4}",
        split.name(),
        metrics.n,
        metrics.roc_auc,
        metrics.accuracy,
        metrics.sensitivity,
        metrics.specificity
    ));
    Ok(())
}

// --------------------------------------------------------------- verify

#[derive(clap::Args)]
pub struct VerifyArgs {
    /// Output directory for verify_report.json.
    #[arg(long)]
    pub out: PathBuf,
    /// Suite to run (repeatable): gradcheck, perm-invariance, params,
    /// auc-oracle, ssda-cardinality. Default: all.
    #[arg(long = "suite")]
    pub suites: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(serde::Serialize)]
struct VerifyReport {
    seed: u64,
    pass: bool,
    suites: Vec<SuiteOutcome>,
}

pub fn verify(a: VerifyArgs, dry_run: bool) -> Result<()> {
    let names: Vec<String> = if a.suites.is_empty() {
        SUITES.iter().map(|s| s.to_string()).collect()
    } else {
        a.suites.clone()
    };
    let config = json!({ "suites": names, "seed": a.seed });
    if dry_run {
        print_dry("verify", &config);
        return Ok(());
    }
    let mut run = Run::new("verify", config);
    let mut outcomes = Vec::new();
    for name in &names {
        let outcome = run_suite(name, a.seed)?;
        emit(&format!("suite {}: {}", outcome.suite, if outcome.pass { "PASS" } else { "FAIL" }));
        for line in &outcome.lines {
            emit(&format!("  {line}"));
        }
        outcomes.push(outcome);
    }
    let failed = outcomes.iter().filter(|o| !o.pass).count();
    let report = VerifyReport { seed: a.seed, pass: failed == 0, suites: outcomes };

    ensure_dir(&a.out)?;
    let path = a.out.join("verify_report.json");
    write_json_atomic(&path, &report)?;
    run.output(&path);
    run.finish(&a.out)?;
    if failed > 0 {
        return Err(Error::Verification(format!(
            "{failed} of {} suites failed; see {}",
            report.suites.len(),
            path.display()
        )));
    }
    emit(&format!("all {} suites passed", report.suites.len()));
    Ok(())
}

// --------------------------------------------------------------- report

#[derive(clap::Args)]
pub struct ReportArgs {
    /// Output directory for summary.csv, curves.csv, and SVG plots.
    #[arg(long)]
    pub out: PathBuf,
    /// Training run directory, or a directory whose immediate children are
    /// run directories. Repeatable.
    #[arg(long = "runs", required = true, num_args = 1..)]
    pub runs: Vec<PathBuf>,
}

/// A directory is a run directory when it holds `report.json`; otherwise its
/// immediate subdirectories are checked.
fn find_runs(roots: &[PathBuf]) -> Result<Vec<(String, PathBuf)>> {
    let mut found = Vec::new();
    for root in roots {
        if root.join("report.json").is_file() {
            found.push(root.clone());
            continue;
        }
        let mut subs: Vec<PathBuf> = std::fs::read_dir(root)
            .map_err(|e| Error::io(root, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join("report.json").is_file())
            .collect();
        subs.sort();
        found.extend(subs);
    }
    if found.is_empty() {
        return Err(Error::Input(format!(
            "no report.json found under {:?}",
            roots.iter().map(|p| p.display().to_string()).collect::<Vec<_>>()
        )));
    }
    let mut names = Vec::new();
    let mut out = Vec::new();
    for dir in found {
        let base = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".into());
        let mut name = base.clone();
        let mut k = 2;
        while names.contains(&name) {
            name = format!("{base}-{k}");
            k += 1;
        }
        names.push(name.clone());
        out.push((name, dir));
    }
    Ok(out)
}

fn stop_reason_str(r: &TrainReport) -> String {
    match serde_json::to_value(r.stop_reason) {
        Ok(serde_json::Value::String(s)) => s,
        _ => format!("{:?}", r.stop_reason),
    }
}

fn model_name(cfg: &ModelConfig) -> &'static str {
    match cfg {
        ModelConfig::ZachVit(_) => "zachvit",
        ModelConfig::MinimalVit(_) => "minimal-vit",
    }
}

pub fn report(a: ReportArgs, dry_run: bool) -> Result<()> {
    let config = json!({
        "runs": a.runs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    });
    if dry_run {
        print_dry("report", &config);
        return Ok(());
    }
    let runs = find_runs(&a.runs)?;
    let mut run = Run::new("report", config);
    let mut reports: Vec<(String, TrainReport)> = Vec::new();
    for (name, dir) in &runs {
        let path = dir.join("report.json");
        run.input(&path)?;
        reports.push((name.clone(), read_json(&path)?));
    }

    // summary.csv: one row per run.
    let mut summary = String::from(
        "run,model,params,epochs_run,best_epoch,best_val_loss,stop_reason,\
         peak_val_auc_epoch,peak_val_auc,val_auc,val_accuracy,test_auc,test_accuracy\n",
    );
    for (name, r) in &reports {
        let (test_auc, test_acc) = match &r.test {
            Some(t) => (t.roc_auc.to_string(), t.accuracy.to_string()),
            None => (String::new(), String::new()),
        };
        let _ = writeln!(
            summary,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            name,
            model_name(&r.model),
            r.model.param_count(),
            r.epochs_run,
            r.best_epoch,
            r.best_val_loss,
            stop_reason_str(r),
            r.peak_val_auc_epoch,
            r.peak_val_auc,
            r.val.roc_auc,
            r.val.accuracy,
            test_auc,
            test_acc
        );
    }

    // Combined curves.csv: epoch column plus four columns per run; runs
    // shorter than the longest leave cells blank.
    let max_epochs = reports.iter().map(|(_, r)| r.curves.len()).max().unwrap_or(0);
    let mut curves = String::from("epoch");
    for (name, _) in &reports {
        let _ = write!(
            curves,
            ",{name}_train_loss,{name}_train_auc,{name}_val_loss,{name}_val_auc"
        );
    }
    curves.push('\n');
    for i in 0..max_epochs {
        let _ = write!(curves, "{}", i + 1);
        for (_, r) in &reports {
            match r.curves.get(i) {
                Some(row) => {
                    let _ = write!(
                        curves,
                        ",{},{},{},{}",
                        row.train_loss, row.train_auc, row.val_loss, row.val_auc
                    );
                }
                None => curves.push_str(",,,,"),
            }
        }
        curves.push('\n');
    }

    let series = |pick: fn(&zachvit_core::train::EpochRow) -> f64| -> Vec<Series> {
        reports
            .iter()
            .map(|(name, r)| Series {
                name: name.clone(),
                points: r
                    .curves
                    .iter()
                    .map(|row| (row.epoch as f64, pick(row)))
                    .collect(),
            })
            .collect()
    };
    let auc_plot = LinePlot {
        title: "validation AUC by epoch".into(),
        x_label: "epoch".into(),
        y_label: "val AUC".into(),
        series: series(|r| r.val_auc),
    };
    let loss_plot = LinePlot {
        title: "validation loss by epoch".into(),
        x_label: "epoch".into(),
        y_label: "val loss".into(),
        series: series(|r| r.val_loss),
    };

    ensure_dir(&a.out)?;
    let files = [
        (a.out.join("summary.csv"), summary),
        (a.out.join("curves.csv"), curves),
        (a.out.join("val_auc.svg"), auc_plot.render()),
        (a.out.join("val_loss.svg"), loss_plot.render()),
    ];
    for (path, body) in &files {
        std::fs::write(path, body).map_err(|e| Error::io(path, e))?;
        run.output(path);
    }
    run.finish(&a.out)?;
    emit(&format!("summarized {} runs into {}", reports.len(), a.out.display()));
    Ok(())
}
