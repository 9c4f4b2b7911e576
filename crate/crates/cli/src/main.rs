use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use curveface::bench::bench_transform_vs_fft;
use curveface::dataset::{load_dataset, Dataset, DatasetKind, DatasetSpec, DEFAULT_SUBJECT_LIMIT};
use curveface::harness::{
    export_reports, run_experiment, run_seeds, EvaluationReport, ExperimentMeta, ReportFormat,
    SplitMode, SplitPolicy,
};
use curveface::imgio;
use curveface::model_io;
use curveface::pgm;
use curveface_core::ensemble::{
    ensemble_train, ClassifierSpec, EnsembleConfig, MetricSpec, QuantizedConfig,
};
use curveface_core::fdct::{build_windows, fdct_forward};
use curveface_core::image::quantize;
use curveface_core::svm::SvmConfig;

#[derive(Parser)]
#[command(
    name = "curveface",
    version,
    about = "Curvelet-feature face recognition experiments"
)]
struct Cli {
    /// Flat key=value config file; command-line flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose one image and dump the coefficients to a binary file.
    Transform(TransformArgs),
    /// Reduce an image's bit depth and write the result as PGM (P5).
    Quantize(QuantizeArgs),
    /// Train an ensemble on a dataset and serialize the model bundle.
    Train(TrainArgs),
    /// Run a train/test experiment and report accuracy.
    Evaluate(EvaluateArgs),
    /// Compare the forward transform against one 2-D FFT of the same image.
    BenchFft(BenchArgs),
}

#[derive(Args)]
struct TransformArgs {
    /// Input image (pgm, png, jpg).
    #[arg(long)]
    input: PathBuf,
    /// Output coefficient dump.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    num_scales: Option<usize>,
    #[arg(long)]
    angles: Option<usize>,
}

#[derive(Args)]
struct QuantizeArgs {
    #[arg(long)]
    input: PathBuf,
    /// Target bit depth: 2, 4 or 8.
    #[arg(long)]
    bits: u8,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Output model bundle.
    #[arg(long)]
    out: PathBuf,
    /// Also dump each voter's PCA model to `<prefix>-<voter>.cfpc`.
    #[arg(long)]
    dump_pca: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Report file; format chosen by --format.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or jsonl.
    #[arg(long)]
    format: Option<ReportFormat>,
}

#[derive(Args)]
struct BenchArgs {
    /// Square image edge length.
    #[arg(long)]
    size: Option<usize>,
    /// Timed repetitions; the median is reported.
    #[arg(long)]
    runs: Option<usize>,
}

/// Dataset and pipeline options shared by train and evaluate. Every value
/// can also come from the config file under the same (kebab-case) key.
#[derive(Args)]
struct PipelineArgs {
    /// Dataset root: one subdirectory per subject.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// orl, grimace, gatech or custom.
    #[arg(long)]
    dataset_kind: Option<String>,
    #[arg(long)]
    subject_limit: Option<usize>,
    /// Training images per subject.
    #[arg(long)]
    train_count: Option<usize>,
    /// Retained PCA components per scale.
    #[arg(long)]
    pca_k: Option<usize>,
    /// knn or svm.
    #[arg(long)]
    classifier: Option<String>,
    #[arg(long)]
    knn_k: Option<usize>,
    /// euclidean or gaussian.
    #[arg(long)]
    metric: Option<String>,
    /// Gaussian sigma; omitted means the median-distance heuristic.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    svm_c: Option<f64>,
    #[arg(long)]
    num_scales: Option<usize>,
    #[arg(long)]
    angles: Option<usize>,
    /// Voter scales, comma separated (e.g. 1,2,3,4).
    #[arg(long)]
    scales: Option<String>,
    /// Scale whose vote settles ties, or 'none'.
    #[arg(long)]
    tie_break_scale: Option<String>,
    /// Vote across 8/4/2-bit versions instead of across scales.
    #[arg(long)]
    quantized_ensemble: bool,
    /// Feature scale for the quantized ensemble.
    #[arg(long)]
    quantized_scale: Option<usize>,
    /// Seed for one seeded-random split; omitted means first-k.
    #[arg(long)]
    seed: Option<u64>,
    /// Several seeds: comma separated or an inclusive a..b range.
    #[arg(long)]
    seeds: Option<String>,
}

/// Parsed key=value config file.
struct FileConfig(HashMap<String, String>);

impl FileConfig {
    fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let mut map = HashMap::new();
        if let Some(path) = path {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line
                    .split_once('=')
                    .with_context(|| format!("{}:{}: expected key=value", path.display(), lineno + 1))?;
                map.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(FileConfig(map))
    }

    fn get<T: FromStr>(&self, key: &str) -> anyhow::Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| anyhow::anyhow!("config key '{key}': {e}")),
        }
    }

    fn get_flag(&self, key: &str) -> anyhow::Result<bool> {
        Ok(self.get::<bool>(key)?.unwrap_or(false))
    }
}

fn parse_scale_list(raw: &str) -> anyhow::Result<Vec<usize>> {
    raw.split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|e| anyhow::anyhow!("scale list: {e}")))
        .collect()
}

fn parse_seed_list(raw: &str) -> anyhow::Result<Vec<u64>> {
    if let Some((a, b)) = raw.split_once("..") {
        let start: u64 = a.trim().parse().context("seed range start")?;
        let end: u64 = b.trim().parse().context("seed range end")?;
        if end < start {
            bail!("seed range {raw} is empty");
        }
        return Ok((start..=end).collect());
    }
    raw.split(',')
        .map(|s| s.trim().parse::<u64>().map_err(|e| anyhow::anyhow!("seed list: {e}")))
        .collect()
}

struct ResolvedPipeline {
    dataset: DatasetSpec,
    train_count: Option<usize>,
    seed: Option<u64>,
    seeds: Option<Vec<u64>>,
    ensemble: EnsembleConfig,
}

fn resolve_pipeline(args: &PipelineArgs, file: &FileConfig) -> anyhow::Result<ResolvedPipeline> {
    let root = match args.dataset.clone().or(file.get::<PathBuf>("dataset")?) {
        Some(root) => root,
        None => bail!("--dataset (or a 'dataset' config entry) is required"),
    };
    let kind: DatasetKind = args
        .dataset_kind
        .clone()
        .or(file.get("dataset-kind")?)
        .map(|s: String| DatasetKind::from_str(&s).map_err(|e| anyhow::anyhow!(e)))
        .transpose()?
        .unwrap_or(DatasetKind::Custom);
    let subject_limit = args
        .subject_limit
        .or(file.get("subject-limit")?)
        .unwrap_or(DEFAULT_SUBJECT_LIMIT);

    let defaults = EnsembleConfig::default();
    let num_scales = args.num_scales.or(file.get("num-scales")?).unwrap_or(defaults.num_scales);
    let angles = args.angles.or(file.get("angles")?).unwrap_or(defaults.angles_coarse);
    let voter_scales = match args.scales.clone().or(file.get("scales")?) {
        Some(raw) => parse_scale_list(&raw)?,
        None => (1..=num_scales).collect(),
    };
    let pca_k = args.pca_k.or(file.get("pca-k")?).unwrap_or(defaults.pca_components);

    let tie_break_scale = match args
        .tie_break_scale
        .clone()
        .or(file.get("tie-break-scale")?)
    {
        None => defaults.tie_break_scale,
        Some(raw) if raw.eq_ignore_ascii_case("none") => None,
        Some(raw) => Some(raw.parse::<usize>().context("tie-break-scale")?),
    };

    let classifier_name: String = args
        .classifier
        .clone()
        .or(file.get("classifier")?)
        .unwrap_or_else(|| "knn".into());
    let classifier = match classifier_name.to_ascii_lowercase().as_str() {
        "knn" => {
            let k = args.knn_k.or(file.get("knn-k")?).unwrap_or(1);
            let metric_name: String = args
                .metric
                .clone()
                .or(file.get("metric")?)
                .unwrap_or_else(|| "euclidean".into());
            let metric = match metric_name.to_ascii_lowercase().as_str() {
                "euclidean" => MetricSpec::Euclidean,
                "gaussian" => {
                    MetricSpec::Gaussian { sigma: args.sigma.or(file.get("sigma")?) }
                }
                other => bail!("unknown metric '{other}' (euclidean or gaussian)"),
            };
            ClassifierSpec::Knn { k, metric }
        }
        "svm" => {
            let c = args.svm_c.or(file.get("svm-c")?).unwrap_or(1.0);
            ClassifierSpec::Svm(SvmConfig { c, ..SvmConfig::default() })
        }
        other => bail!("unknown classifier '{other}' (knn or svm)"),
    };

    let quantized = if args.quantized_ensemble || file.get_flag("quantized-ensemble")? {
        let scale = args.quantized_scale.or(file.get("quantized-scale")?).unwrap_or(3);
        Some(QuantizedConfig { scale, ..QuantizedConfig::default() })
    } else {
        None
    };

    let ensemble = EnsembleConfig {
        num_scales,
        angles_coarse: angles,
        voter_scales,
        pca_components: pca_k,
        classifier,
        tie_break_scale,
        quantized,
    };

    let seeds = match args.seeds.clone().or(file.get("seeds")?) {
        Some(raw) => Some(parse_seed_list(&raw)?),
        None => None,
    };

    Ok(ResolvedPipeline {
        dataset: DatasetSpec { root, subject_limit, kind },
        train_count: args.train_count.or(file.get("train-count")?),
        seed: args.seed.or(file.get("seed")?),
        seeds,
        ensemble,
    })
}

fn load_for(resolved: &ResolvedPipeline) -> anyhow::Result<Dataset> {
    let ds = load_dataset(&resolved.dataset)?;
    println!(
        "loaded {} images across {} subjects from {}",
        ds.items.len(),
        ds.subjects.len(),
        resolved.dataset.root.display()
    );
    Ok(ds)
}

fn print_report(report: &EvaluationReport) {
    println!(
        "accuracy {:.4} ({}/{} correct, {} rejected)",
        report.accuracy, report.correct, report.test_total, report.rejections
    );
    println!(
        "timings: transform {:.1} ms, pca {:.1} ms, classify {:.1} ms",
        report.timing.transform_ms, report.timing.pca_ms, report.timing.classify_ms
    );
}

fn cmd_transform(args: &TransformArgs, file: &FileConfig) -> anyhow::Result<()> {
    let raw = imgio::load_image(&args.input)?;
    let prepared = imgio::preprocess(&raw)?;
    let img = &prepared.image;
    if prepared.downsample_factor > 1 {
        println!(
            "reduced {}x{} by {} to {}x{}",
            prepared.original_width,
            prepared.original_height,
            prepared.downsample_factor,
            img.width(),
            img.height()
        );
    }

    let defaults = EnsembleConfig::default();
    let num_scales = args.num_scales.or(file.get("num-scales")?).unwrap_or(defaults.num_scales);
    let angles = args.angles.or(file.get("angles")?).unwrap_or(defaults.angles_coarse);
    let family = build_windows(img.width(), img.height(), num_scales, angles)?;
    let coeffs = fdct_forward(img, &family)?;

    for scale in &coeffs.scales {
        let total: usize = scale.bands.iter().map(|b| b.values.len()).sum();
        println!(
            "scale {}: {} band(s), {} coefficients",
            scale.scale_index,
            scale.bands.len(),
            total
        );
    }
    println!(
        "total {} coefficients for {} pixels",
        coeffs.coefficient_count(),
        img.width() * img.height()
    );

    model_io::write_decomposition(&args.out, &coeffs)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_quantize(args: &QuantizeArgs) -> anyhow::Result<()> {
    let img = imgio::load_image(&args.input)?;
    let out = quantize(&img, args.bits)?;
    pgm::write_p5(&args.out, &out)?;
    println!(
        "quantized {} to {} bits ({} distinct levels), wrote {}",
        args.input.display(),
        args.bits,
        out.distinct_values(),
        args.out.display()
    );
    Ok(())
}

fn cmd_train(args: &TrainArgs, file: &FileConfig) -> anyhow::Result<()> {
    let resolved = resolve_pipeline(&args.pipeline, file)?;
    let ds = load_for(&resolved)?;

    let train: Vec<_> = match resolved.train_count {
        Some(count) => {
            let mode = match resolved.seed {
                Some(seed) => SplitMode::SeededRandom(seed),
                None => SplitMode::FirstK,
            };
            let (train_idx, _) =
                curveface::harness::split(&ds.labels(), &SplitPolicy { train_count: count, mode })?;
            train_idx.iter().map(|&i| ds.items[i].clone()).collect()
        }
        None => ds.items.clone(),
    };

    println!("training on {} images", train.len());
    let model = ensemble_train(&train, &resolved.ensemble)?;
    for voter in model.voters() {
        println!(
            "voter {:?}: features {} -> {} components",
            voter.key,
            voter.pca.dim(),
            voter.pca.k()
        );
    }

    model_io::write_ensemble(&args.out, &model, &ds.subjects)?;
    println!("wrote {}", args.out.display());

    if let Some(prefix) = &args.dump_pca {
        for voter in model.voters() {
            let tag = match voter.key {
                curveface_core::ensemble::VoterKey::Scale(s) => format!("scale{s}"),
                curveface_core::ensemble::VoterKey::BitDepth(b) => format!("bits{b}"),
            };
            let path = PathBuf::from(format!("{}-{}.cfpc", prefix.display(), tag));
            model_io::write_pca(&path, &voter.pca)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn cmd_evaluate(args: &EvaluateArgs, file: &FileConfig) -> anyhow::Result<()> {
    let resolved = resolve_pipeline(&args.pipeline, file)?;
    let train_count = resolved
        .train_count
        .context("--train-count (or a 'train-count' config entry) is required")?;
    let ds = load_for(&resolved)?;
    let meta = ExperimentMeta {
        dataset_name: resolved.dataset.kind.name().to_string(),
        class_names: ds.subjects.clone(),
    };

    let reports: Vec<EvaluationReport> = match &resolved.seeds {
        Some(seeds) => {
            let (reports, summary) =
                run_seeds(&ds.items, train_count, seeds, &resolved.ensemble, &meta)?;
            for report in &reports {
                print!("seed {:?}: ", report.config.seed.expect("seeded run"));
                print_report(report);
            }
            println!(
                "over {} seeds: mean accuracy {:.4}, std {:.4}",
                summary.seeds.len(),
                summary.mean_accuracy,
                summary.std_accuracy
            );
            reports
        }
        None => {
            let mode = match resolved.seed {
                Some(seed) => SplitMode::SeededRandom(seed),
                None => SplitMode::FirstK,
            };
            let policy = SplitPolicy { train_count, mode };
            let report = run_experiment(&ds.items, &policy, &resolved.ensemble, &meta)?;
            print_report(&report);
            vec![report]
        }
    };

    if let Some(out) = &args.out {
        let format = args
            .format
            .or(file.get("format")?)
            .unwrap_or(ReportFormat::Csv);
        export_reports(&reports, out, format)?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn cmd_bench(args: &BenchArgs, file: &FileConfig) -> anyhow::Result<()> {
    let size = args.size.or(file.get("size")?).unwrap_or(256);
    let runs = args.runs.or(file.get("runs")?).unwrap_or(20);
    let result = bench_transform_vs_fft(size, runs)?;
    println!(
        "size={} runs={} fft_ms={:.3} transform_ms={:.3} ratio={:.2}",
        result.size, result.runs, result.fft_ms, result.transform_ms, result.ratio
    );
    Ok(())
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let file = FileConfig::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Transform(args) => cmd_transform(args, &file),
        Command::Quantize(args) => cmd_quantize(args),
        Command::Train(args) => cmd_train(args, &file),
        Command::Evaluate(args) => cmd_evaluate(args, &file),
        Command::BenchFft(args) => cmd_bench(args, &file),
    }
}
