//! Metric bookkeeping invariants of `run_experiment` on synthetic data.

use curveface::harness::{
    render_csv, run_experiment, run_seeds, ExperimentMeta, SplitMode, SplitPolicy,
};
use curveface::synthetic::{generate, SyntheticSpec};
use curveface_core::ensemble::EnsembleConfig;

fn small_data() -> (Vec<(curveface_core::image::Image, usize)>, ExperimentMeta) {
    let spec = SyntheticSpec {
        classes: 4,
        images_per_class: 6,
        width: 32,
        height: 32,
        ..Default::default()
    };
    (generate(&spec), ExperimentMeta::synthetic(4))
}

fn config() -> EnsembleConfig {
    EnsembleConfig { num_scales: 4, ..EnsembleConfig::default() }
}

#[test]
fn confusion_matrix_accounts_for_every_test_image() {
    let (data, meta) = small_data();
    let policy = SplitPolicy { train_count: 4, mode: SplitMode::SeededRandom(3) };
    let report = run_experiment(&data, &policy, &config(), &meta).unwrap();

    assert!(report.accuracy >= 0.0 && report.accuracy <= 1.0);
    assert_eq!(report.test_total, 8);

    // Per-class: matrix row plus that class's rejections covers its test
    // images; grand total covers the whole test set.
    let per_class_test = 2usize;
    let mut grand_total = 0usize;
    for (row, &rejected) in report.confusion.counts.iter().zip(&report.confusion.rejected) {
        let row_sum: usize = row.iter().sum();
        assert_eq!(row_sum + rejected, per_class_test);
        grand_total += row_sum + rejected;
    }
    assert_eq!(grand_total, report.test_total);

    // Accuracy counts only diagonal hits; rejections stay in the denominator.
    let trace: usize = (0..4).map(|c| report.confusion.counts[c][c]).sum();
    assert_eq!(report.correct, trace);
    assert_eq!(report.accuracy, trace as f64 / report.test_total as f64);
    let rejected_total: usize = report.confusion.rejected.iter().sum();
    assert_eq!(report.rejections, rejected_total);
}

#[test]
fn identical_seeds_give_identical_reports_modulo_timing() {
    let (data, meta) = small_data();
    let policy = SplitPolicy { train_count: 3, mode: SplitMode::SeededRandom(11) };
    let a = run_experiment(&data, &policy, &config(), &meta).unwrap();
    let b = run_experiment(&data, &policy, &config(), &meta).unwrap();
    assert_eq!(a.accuracy, b.accuracy);
    assert_eq!(a.confusion, b.confusion);
    assert_eq!(a.per_class, b.per_class);
    assert_eq!(a.config_hash, b.config_hash);
}

#[test]
fn multi_seed_summary_matches_its_reports() {
    let (data, meta) = small_data();
    let seeds = [1u64, 2, 3, 4];
    let (reports, summary) = run_seeds(&data, 3, &seeds, &config(), &meta).unwrap();
    assert_eq!(reports.len(), 4);
    let mean = reports.iter().map(|r| r.accuracy).sum::<f64>() / 4.0;
    assert!((summary.mean_accuracy - mean).abs() < 1e-12);
    assert!(summary.std_accuracy >= 0.0);
    for (report, &seed) in reports.iter().zip(&seeds) {
        assert_eq!(report.config.seed, Some(seed));
    }

    // Exporting the same reports twice is byte-identical.
    assert_eq!(render_csv(&reports), render_csv(&reports));
}
