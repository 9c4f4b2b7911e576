//! Experiment execution: train/test splits, ensemble evaluation, metrics
//! and machine-readable reports.

use std::path::Path;
use std::time::Instant;

use curveface_core::ensemble::{
    ensemble_train_observed, ClassifierSpec, EnsembleConfig, MetricSpec, ScaleEnsembleModel,
    TrainObserver, TrainPhase,
};
use curveface_core::image::Image;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    /// First `train_count` images of each subject, in dataset order.
    FirstK,
    /// Per-subject shuffle driven by one seed, then the first `train_count`.
    SeededRandom(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitPolicy {
    pub train_count: usize,
    pub mode: SplitMode,
}

impl SplitPolicy {
    pub fn seed(&self) -> Option<u64> {
        match self.mode {
            SplitMode::FirstK => None,
            SplitMode::SeededRandom(seed) => Some(seed),
        }
    }
}

/// Split item indices into disjoint train/test sets covering everything.
/// Every subject must have more images than `train_count`.
pub fn split(labels: &[usize], policy: &SplitPolicy) -> Result<(Vec<usize>, Vec<usize>)> {
    if policy.train_count == 0 {
        return Err(Error::Dataset("train count must be at least 1".into()));
    }
    if labels.is_empty() {
        return Err(Error::Dataset("cannot split an empty dataset".into()));
    }

    let max_label = *labels.iter().max().expect("non-empty");
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); max_label + 1];
    for (idx, &label) in labels.iter().enumerate() {
        groups[label].push(idx);
    }

    let mut rng = match policy.mode {
        SplitMode::FirstK => None,
        SplitMode::SeededRandom(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
    };

    let mut train = Vec::new();
    let mut test = Vec::new();
    for (label, group) in groups.iter_mut().enumerate() {
        if group.is_empty() {
            continue;
        }
        if group.len() <= policy.train_count {
            return Err(Error::Dataset(format!(
                "subject {label} has {} images, not more than train count {}",
                group.len(),
                policy.train_count
            )));
        }
        if let Some(rng) = rng.as_mut() {
            group.shuffle(rng);
        }
        train.extend_from_slice(&group[..policy.train_count]);
        test.extend_from_slice(&group[policy.train_count..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Config echo embedded in every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportConfig {
    pub dataset: String,
    pub train_count: usize,
    pub split_mode: String,
    pub seed: Option<u64>,
    pub num_scales: usize,
    pub angles_coarse: usize,
    pub scales: Vec<usize>,
    pub pca_components: usize,
    pub classifier: String,
    pub tie_break_scale: Option<usize>,
    pub quantized: bool,
}

/// Confusion counts over true (rows) by predicted (columns) classes.
/// Rejected test images are tracked per true class but sit in no cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<usize>>,
    pub rejected: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseTimings {
    pub transform_ms: f64,
    pub pca_ms: f64,
    pub classify_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassAccuracy {
    pub class: String,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

/// Everything one experiment run produces. Rejections count against
/// accuracy: the denominator is the full test size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub config: ReportConfig,
    pub config_hash: String,
    pub accuracy: f64,
    pub correct: usize,
    pub test_total: usize,
    pub rejections: usize,
    pub per_class: Vec<ClassAccuracy>,
    pub confusion: ConfusionMatrix,
    pub timing: PhaseTimings,
}

/// Dataset identity attached to reports.
#[derive(Debug, Clone)]
pub struct ExperimentMeta {
    pub dataset_name: String,
    pub class_names: Vec<String>,
}

impl ExperimentMeta {
    pub fn synthetic(classes: usize) -> Self {
        ExperimentMeta {
            dataset_name: "synthetic".into(),
            class_names: (0..classes).map(|c| format!("class{c:02}")).collect(),
        }
    }
}

#[derive(Default)]
struct PhaseClock {
    transform: f64,
    pca: f64,
    classify: f64,
    started: Option<(TrainPhase, Instant)>,
}

impl PhaseClock {
    fn bucket(&mut self, phase: TrainPhase) -> &mut f64 {
        match phase {
            TrainPhase::Transform => &mut self.transform,
            TrainPhase::PcaFit => &mut self.pca,
            TrainPhase::ClassifierFit => &mut self.classify,
        }
    }

    fn add(&mut self, phase: TrainPhase, seconds: f64) {
        *self.bucket(phase) += seconds * 1e3;
    }
}

impl TrainObserver for PhaseClock {
    fn enter(&mut self, phase: TrainPhase) {
        self.started = Some((phase, Instant::now()));
    }

    fn exit(&mut self, phase: TrainPhase) {
        if let Some((started_phase, at)) = self.started.take() {
            if started_phase == phase {
                self.add(phase, at.elapsed().as_secs_f64());
            }
        }
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn classifier_tag(spec: &ClassifierSpec) -> String {
    match spec {
        ClassifierSpec::Knn { k, metric } => match metric {
            MetricSpec::Euclidean => format!("knn-{k}-euclidean"),
            MetricSpec::Gaussian { sigma: Some(s) } => format!("knn-{k}-gaussian-{s}"),
            MetricSpec::Gaussian { sigma: None } => format!("knn-{k}-gaussian-median"),
        },
        ClassifierSpec::Svm(cfg) => format!("svm-c{}", cfg.c),
    }
}

fn report_config(
    meta: &ExperimentMeta,
    policy: &SplitPolicy,
    cfg: &EnsembleConfig,
) -> ReportConfig {
    ReportConfig {
        dataset: meta.dataset_name.clone(),
        train_count: policy.train_count,
        split_mode: match policy.mode {
            SplitMode::FirstK => "first-k".into(),
            SplitMode::SeededRandom(_) => "seeded-random".into(),
        },
        seed: policy.seed(),
        num_scales: cfg.num_scales,
        angles_coarse: cfg.angles_coarse,
        scales: match &cfg.quantized {
            Some(q) => vec![q.scale],
            None => cfg.voter_scales.clone(),
        },
        pca_components: cfg.pca_components,
        classifier: classifier_tag(&cfg.classifier),
        tie_break_scale: cfg.tie_break_scale,
        quantized: cfg.quantized.is_some(),
    }
}

/// Train on the split's training half and evaluate on the rest.
pub fn run_experiment(
    items: &[(Image, usize)],
    policy: &SplitPolicy,
    cfg: &EnsembleConfig,
    meta: &ExperimentMeta,
) -> Result<EvaluationReport> {
    let labels: Vec<usize> = items.iter().map(|&(_, l)| l).collect();
    if let Some(&bad) = labels.iter().find(|&&l| l >= meta.class_names.len()) {
        return Err(Error::Dataset(format!(
            "label {bad} has no class name (got {} names)",
            meta.class_names.len()
        )));
    }
    let (train_idx, test_idx) = split(&labels, policy)?;
    assert!(train_idx.iter().all(|i| !test_idx.contains(i)), "split overlaps");
    assert_eq!(train_idx.len() + test_idx.len(), items.len(), "split loses items");

    let train: Vec<(Image, usize)> =
        train_idx.iter().map(|&i| items[i].clone()).collect();
    let test: Vec<&(Image, usize)> = test_idx.iter().map(|&i| &items[i]).collect();

    let mut clock = PhaseClock::default();
    let model = ensemble_train_observed(&train, cfg, &mut clock)?;
    let report = evaluate_split(&model, &test, meta, policy, cfg, clock)?;
    Ok(report)
}

fn evaluate_split(
    model: &ScaleEnsembleModel,
    test: &[&(Image, usize)],
    meta: &ExperimentMeta,
    policy: &SplitPolicy,
    cfg: &EnsembleConfig,
    mut clock: PhaseClock,
) -> Result<EvaluationReport> {
    let n_classes = meta.class_names.len();
    let mut counts = vec![vec![0usize; n_classes]; n_classes];
    let mut rejected = vec![0usize; n_classes];
    let mut correct = 0usize;

    for (img, truth) in test {
        let t0 = Instant::now();
        let features = model.voter_features(img)?;
        clock.add(TrainPhase::Transform, t0.elapsed().as_secs_f64());

        let t1 = Instant::now();
        let projected = model.project_features(&features)?;
        clock.add(TrainPhase::PcaFit, t1.elapsed().as_secs_f64());

        let t2 = Instant::now();
        let prediction = model.classify_projected(&projected)?;
        clock.add(TrainPhase::ClassifierFit, t2.elapsed().as_secs_f64());

        match prediction.label() {
            Some(label) => {
                counts[*truth][label] += 1;
                if label == *truth {
                    correct += 1;
                }
            }
            None => rejected[*truth] += 1,
        }
    }

    let test_total = test.len();
    let rejections: usize = rejected.iter().sum();
    let accuracy = correct as f64 / test_total as f64;

    let per_class = (0..n_classes)
        .filter_map(|c| {
            let total = counts[c].iter().sum::<usize>() + rejected[c];
            if total == 0 {
                return None;
            }
            Some(ClassAccuracy {
                class: meta.class_names[c].clone(),
                correct: counts[c][c],
                total,
                accuracy: counts[c][c] as f64 / total as f64,
            })
        })
        .collect();

    let config = report_config(meta, policy, cfg);
    let config_hash = format!(
        "{:016x}",
        fnv1a64(serde_json::to_string(&config).expect("config serializes").as_bytes())
    );

    Ok(EvaluationReport {
        config,
        config_hash,
        accuracy,
        correct,
        test_total,
        rejections,
        per_class,
        confusion: ConfusionMatrix {
            classes: meta.class_names.clone(),
            counts,
            rejected,
        },
        timing: PhaseTimings {
            transform_ms: clock.transform,
            pca_ms: clock.pca,
            classify_ms: clock.classify,
        },
    })
}

/// Mean and spread of accuracy over seeded repetitions.
#[derive(Debug, Clone, Serialize)]
pub struct SeedSummary {
    pub seeds: Vec<u64>,
    pub mean_accuracy: f64,
    /// Sample standard deviation; zero for a single seed.
    pub std_accuracy: f64,
}

/// Run one seeded-random experiment per seed.
pub fn run_seeds(
    items: &[(Image, usize)],
    train_count: usize,
    seeds: &[u64],
    cfg: &EnsembleConfig,
    meta: &ExperimentMeta,
) -> Result<(Vec<EvaluationReport>, SeedSummary)> {
    if seeds.is_empty() {
        return Err(Error::Dataset("at least one seed required".into()));
    }
    let mut reports = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let policy = SplitPolicy { train_count, mode: SplitMode::SeededRandom(seed) };
        reports.push(run_experiment(items, &policy, cfg, meta)?);
    }
    let n = reports.len() as f64;
    let mean = reports.iter().map(|r| r.accuracy).sum::<f64>() / n;
    let std = if reports.len() > 1 {
        let var = reports
            .iter()
            .map(|r| (r.accuracy - mean) * (r.accuracy - mean))
            .sum::<f64>()
            / (n - 1.0);
        var.sqrt()
    } else {
        0.0
    };
    Ok((
        reports,
        SeedSummary { seeds: seeds.to_vec(), mean_accuracy: mean, std_accuracy: std },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    JsonLines,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "jsonl" | "json-lines" => Ok(ReportFormat::JsonLines),
            other => Err(format!("unknown report format '{other}'")),
        }
    }
}

pub const CSV_HEADER: &str = "config_hash,dataset,train_count,pca_k,classifier,scales,seed,\
accuracy,rejections,transform_ms,pca_ms,classify_ms";

/// Render reports as CSV, one row per run. Deterministic for a fixed input.
pub fn render_csv(reports: &[EvaluationReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        let scales = r
            .config
            .scales
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join("+");
        let seed = r.config.seed.map(|s| s.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{:.6},{},{:.3},{:.3},{:.3}\n",
            r.config_hash,
            r.config.dataset,
            r.config.train_count,
            r.config.pca_components,
            r.config.classifier,
            scales,
            seed,
            r.accuracy,
            r.rejections,
            r.timing.transform_ms,
            r.timing.pca_ms,
            r.timing.classify_ms,
        ));
    }
    out
}

/// Render reports as JSON lines (full report objects, one per line).
pub fn render_jsonl(reports: &[EvaluationReport]) -> String {
    let mut out = String::new();
    for r in reports {
        out.push_str(&serde_json::to_string(r).expect("report serializes"));
        out.push('\n');
    }
    out
}

/// Write reports to disk in the requested format.
pub fn export_reports(
    reports: &[EvaluationReport],
    path: &Path,
    format: ReportFormat,
) -> Result<()> {
    let body = match format {
        ReportFormat::Csv => render_csv(reports),
        ReportFormat::JsonLines => render_jsonl(reports),
    };
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}
