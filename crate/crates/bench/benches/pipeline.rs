//! Benchmarks for the hot kernels: the matmul at model shapes, one model
//! forward pass, per-exam augmentation, and AUC computation.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;
use zachvit_core::data::{ExamRecord, GrayU8, RegimeSpec, RenderSpec, Roi, VideoClip};
use zachvit_core::data::stride::ssda_expand;
use zachvit_core::model::{Model, ZachVitConfig};
use zachvit_core::rng::Stream;
use zachvit_core::tensor::mm;
use zachvit_core::train::roc_auc;
use zachvit_core::ModelConfig;

fn rand_vec(n: usize, seed: u64) -> Vec<f64> {
    let mut s = Stream::from_seed(seed);
    (0..n).map(|_| s.uniform(-1.0, 1.0)).collect()
}

fn rand_frame(h: usize, w: usize, s: &mut Stream) -> GrayU8 {
    let px: Vec<u8> = (0..h * w).map(|_| s.below(256) as u8).collect();
    GrayU8::new(h, w, px).unwrap()
}

fn synthetic_exam(frame: usize, frames: usize) -> (ExamRecord, [Roi; 4]) {
    let mut s = Stream::from_seed(42);
    let views = (1..=4u8)
        .map(|v| {
            let fs = (0..frames).map(|_| rand_frame(frame, frame, &mut s)).collect();
            VideoClip::new(fs, 30.0, v).unwrap()
        })
        .collect();
    let exam = ExamRecord::new("bench", 1, views).unwrap();
    let roi = Roi::default_for(frame, frame);
    (exam, [roi, roi, roi, roi])
}

/// 196x256 by 256x128: the patch-embedding matmul of the default geometry.
fn bench_matmul(c: &mut Criterion) {
    let (m, k, n) = (196, 256, 128);
    let a = rand_vec(m * k, 1);
    let b = rand_vec(k * n, 2);
    c.bench_function("mm_196x256x128", |bch| {
        bch.iter(|| mm(black_box(&a), black_box(&b), m, k, n))
    });
}

fn bench_forward(c: &mut Criterion) {
    let cfg = ModelConfig::ZachVit(ZachVitConfig::for_geometry(112, 112, 1));
    let model = Model::init(cfg, 0).unwrap();
    let px = rand_vec(112 * 112, 3);
    c.bench_function("zachvit_forward_112", |bch| {
        bch.iter(|| model.logit_gray(black_box(&px), 112, 112).unwrap())
    });
}

fn bench_ssda(c: &mut Criterion) {
    let (exam, rois) = synthetic_exam(64, 4);
    let regime = RegimeSpec::ssda(&[2]);
    let spec = RenderSpec::new(64, false).unwrap();
    c.bench_function("ssda_expand_48_images", |bch| {
        bch.iter(|| ssda_expand(black_box(&exam), &rois, &regime, &spec).unwrap())
    });
}

fn bench_auc(c: &mut Criterion) {
    let n = 2000;
    let mut s = Stream::from_seed(9);
    let scores: Vec<f64> = (0..n).map(|_| s.next_f64()).collect();
    let labels: Vec<u8> = (0..n).map(|_| s.below(2) as u8).collect();
    c.bench_function("roc_auc_2000", |bch| {
        bch.iter_batched(
            || (scores.clone(), labels.clone()),
            |(sc, lb)| roc_auc(black_box(&sc), black_box(&lb)).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

fn config() -> Criterion {
    Criterion::default().sample_size(10)
}

criterion_group! {
    name = benches;
    config = config();
    targets = bench_matmul, bench_forward, bench_ssda, bench_auc
}
criterion_main!(benches);
