//! Logit invariance under patch permutations (the architecture's central
//! property) and its deliberate violation by the positional-embedding
//! baseline, at reduced scale; the acceptance test runs the full sweep.

use zachvit_core::model::{MinimalVitConfig, ZachVitConfig};
use zachvit_core::verify::{
    perm_invariance_sweep, view_permutation_sweep, BASELINE_DEVIATION_FLOOR, INVARIANCE_BOUND,
};
use zachvit_core::ModelConfig;

#[test]
fn zachvit_is_invariant_at_default_geometry() {
    let cfg = ModelConfig::ZachVit(ZachVitConfig::default());
    let r = perm_invariance_sweep(&cfg, 4, 10, 23).unwrap();
    assert!(
        r.max_abs_dev <= INVARIANCE_BOUND,
        "max deviation {:.3e}",
        r.max_abs_dev
    );
}

#[test]
fn minimal_vit_violates_invariance_at_default_geometry() {
    let cfg = ModelConfig::MinimalVit(MinimalVitConfig::default());
    let r = perm_invariance_sweep(&cfg, 4, 10, 23).unwrap();
    assert!(
        r.max_abs_dev > BASELINE_DEVIATION_FLOOR,
        "max deviation {:.3e} suspiciously small for a positional model",
        r.max_abs_dev
    );
}

#[test]
fn invariance_holds_across_model_seeds() {
    // The property is architectural: any weight draw satisfies it.
    let cfg = ModelConfig::ZachVit(ZachVitConfig::for_geometry(96, 96, 1));
    for seed in [1, 99, 4096] {
        let r = perm_invariance_sweep(&cfg, 3, 8, seed).unwrap();
        assert!(
            r.max_abs_dev <= INVARIANCE_BOUND,
            "seed {seed}: deviation {:.3e}",
            r.max_abs_dev
        );
    }
}

#[test]
fn view_order_invariance_in_aligned_mode_at_both_widths() {
    for width in [112, 224] {
        let r = view_permutation_sweep(width, 31).unwrap();
        assert!(
            r.aligned_max_dev <= INVARIANCE_BOUND,
            "width {width}: aligned deviation {:.3e}",
            r.aligned_max_dev
        );
        // Unaligned bands are not whole patch rows; the deviation is a
        // measurement, not a bound. It must at least be finite.
        assert!(r.unaligned_max_dev.is_finite());
    }
}

#[test]
fn aligned_band_height_is_whole_patch_rows() {
    let r = view_permutation_sweep(224, 7).unwrap();
    assert_eq!(r.aligned_geometry, (256, 224)); // 4 bands of 64 = 4 patch rows
    assert_eq!(r.unaligned_geometry, (224, 224)); // 4 bands of 56
}
