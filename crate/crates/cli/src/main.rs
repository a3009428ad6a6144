use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use tsoc::clm::{ClassifierConfig, ClassifierKind};
use tsoc::data::{parse_ts_file, parse_ts_regression, uniform_edges, OrdinalDataset};
use tsoc::harness::{
    build_report, load_results_dir, run_experiment, Pairing, Pipeline, ReportKind, ReportOptions, RunManifest,
};
use tsoc::metrics::Metric;
use tsoc::stats::{RelativeMaeFormula, DEFAULT_ALPHA};
use tsoc::transform::{write_feature_matrix, FittedTransform, TransformConfig, Variant};

#[derive(Parser)]
#[command(name = "tsoc", version, about = "Time series ordinal classification benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every cell of a manifest, resuming from existing results.
    Run { manifest: PathBuf },
    /// Statistical report over a results directory.
    Stats(StatsArgs),
    /// Fit a transform on a training file and write feature matrices.
    Transform(TransformArgs),
    /// Fit features and a classifier on a training file.
    Fit(FitArgs),
    /// Predict with a model written by `fit`.
    Predict(PredictArgs),
}

#[derive(Args)]
struct StatsArgs {
    results_dir: PathBuf,
    #[arg(long, default_value = "mae")]
    metric: Metric,
    #[arg(long, default_value = "cdd")]
    report: ReportKind,
    #[arg(long, default_value = "datasets")]
    pairing: Pairing,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    /// `balanced` (mae / (mae + median)) or `ratio` (mae / median).
    #[arg(long, default_value = "balanced")]
    relmae_formula: String,
    /// Extra results CSVs to merge.
    #[arg(long)]
    external: Vec<PathBuf>,
    /// Where to write the report files; defaults to `<results_dir>/reports`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

/// How targets of a `.ts` file become classes.
#[derive(Args, Clone)]
struct TargetArgs {
    /// Bin real targets into this many equal-width classes of the training range.
    #[arg(long, conflicts_with = "edges")]
    bins: Option<usize>,
    /// Bin real targets against these comma-separated inner edges.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    edges: Option<Vec<f64>>,
}

#[derive(Args)]
struct TransformArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long, default_value = "minirocket")]
    variant: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    num_features: Option<usize>,
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    target: TargetArgs,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    train: PathBuf,
    /// rocket, minirocket, multirocket or flatten.
    #[arg(long, default_value = "minirocket")]
    features: String,
    /// logistic_at or multinomial.
    #[arg(long, default_value = "logistic_at")]
    classifier: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    num_features: Option<usize>,
    /// Fixed penalty; cross-validated when absent.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    target: TargetArgs,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// CSV of predictions; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Model file: the pipeline plus the edges used to bin real targets.
#[derive(serde::Serialize, serde::Deserialize)]
struct ModelFile {
    pipeline: Pipeline,
    target_edges: Option<Vec<f64>>,
}

fn read_text(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Loads a labelled file, or a regression file binned with `edges`.
fn load(path: &Path, edges: Option<&[f64]>) -> anyhow::Result<OrdinalDataset> {
    let text = read_text(path)?;
    Ok(match edges {
        Some(e) => parse_ts_regression(&text)?.discretize_thresholds(e)?,
        None => parse_ts_file(&text)?,
    })
}

/// Resolves the binning edges from the training file.
fn train_edges(path: &Path, target: &TargetArgs) -> anyhow::Result<Option<Vec<f64>>> {
    Ok(match (target.bins, &target.edges) {
        (Some(b), _) => Some(uniform_edges(&parse_ts_regression(&read_text(path)?)?.targets, b)?),
        (None, Some(e)) => Some(e.clone()),
        (None, None) => None,
    })
}

fn parse_variant(s: &str) -> anyhow::Result<Option<Variant>> {
    Ok(match s {
        "rocket" => Some(Variant::Rocket),
        "minirocket" => Some(Variant::Minirocket),
        "multirocket" => Some(Variant::Multirocket),
        "flatten" => None,
        _ => bail!("unknown feature variant {s:?}"),
    })
}

fn transform_config(variant: Variant, seed: u64, num_features: Option<usize>) -> TransformConfig {
    let mut cfg = TransformConfig::for_variant(variant).with_seed(seed);
    if let Some(n) = num_features {
        cfg.num_features = n;
        if variant == Variant::Rocket {
            cfg.num_kernels = n / 2;
        }
    }
    cfg
}

fn cmd_run(manifest: &Path) -> anyhow::Result<()> {
    let m = RunManifest::load(manifest)?;
    let (_, summary) = run_experiment(&m)?;
    println!(
        "{}",
        json!({
            "output_dir": m.output_path(),
            "cells_total": summary.cells_total,
            "cells_run": summary.cells_run,
            "cells_skipped": summary.cells_skipped,
            "cells_failed": summary.cells_failed,
        })
    );
    Ok(())
}

fn cmd_stats(a: &StatsArgs) -> anyhow::Result<()> {
    let formula = match a.relmae_formula.as_str() {
        "balanced" => RelativeMaeFormula::Balanced,
        "ratio" => RelativeMaeFormula::Ratio,
        other => bail!("unknown relative MAE formula {other:?}"),
    };
    let results = load_results_dir(&a.results_dir, &a.external)?;
    let opts = ReportOptions {
        metric: a.metric,
        pairing: a.pairing,
        alpha: a.alpha,
        relmae_formula: formula,
    };
    let report = build_report(&results, a.report, &opts)?;
    let dir = a.out_dir.clone().unwrap_or_else(|| a.results_dir.join("reports"));
    let (json_path, _) = report.write(&dir, a.metric)?;
    print!("{}", report.render_text());
    log::info!("wrote {}", json_path.display());
    Ok(())
}

fn cmd_transform(a: &TransformArgs) -> anyhow::Result<()> {
    let Some(variant) = parse_variant(&a.variant)? else {
        bail!("transform needs rocket, minirocket or multirocket");
    };
    let edges = train_edges(&a.train, &a.target)?;
    let train = load(&a.train, edges.as_deref())?;
    let cfg = transform_config(variant, a.seed, a.num_features);
    let fitted = FittedTransform::fit(&cfg, &train)?;
    std::fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let train_path = a.out_dir.join("train_features.csv");
    write_feature_matrix(&train_path, &fitted.transform(&train)?)?;
    let mut written = vec![train_path];
    if let Some(test) = &a.test {
        let test = load(test, edges.as_deref())?;
        let p = a.out_dir.join("test_features.csv");
        write_feature_matrix(&p, &fitted.transform(&test)?)?;
        written.push(p);
    }
    let p = a.out_dir.join("transform.json");
    std::fs::write(&p, serde_json::to_string(&fitted)?)?;
    written.push(p);
    println!("{}", json!({ "num_features": fitted.num_features(), "files": written }));
    Ok(())
}

fn cmd_fit(a: &FitArgs) -> anyhow::Result<()> {
    let edges = train_edges(&a.train, &a.target)?;
    let train = load(&a.train, edges.as_deref())?;
    let variant = parse_variant(&a.features)?;
    let kind = match a.classifier.as_str() {
        "logistic_at" => ClassifierKind::LogisticAt,
        "multinomial" => ClassifierKind::Multinomial,
        other => bail!("unknown classifier {other:?}"),
    };
    let mut clf = ClassifierConfig::new(kind);
    clf.cv.seed = a.seed;
    clf.lambda = a.lambda;
    let cfg = variant.map(|v| transform_config(v, a.seed, a.num_features));
    let pipeline = Pipeline::fit(&train, cfg.as_ref(), &clf)?;
    let lambda = pipeline.classifier.lambda();
    let file = ModelFile {
        pipeline,
        target_edges: edges,
    };
    std::fs::write(&a.model, serde_json::to_string(&file)?).with_context(|| format!("writing {}", a.model.display()))?;
    println!("{}", json!({ "model": a.model, "lambda": lambda, "n_train": train.len() }));
    Ok(())
}

fn cmd_predict(a: &PredictArgs) -> anyhow::Result<()> {
    let file: ModelFile = serde_json::from_str(&read_text(&a.model)?).context("parsing model file")?;
    let data = load(&a.data, file.target_edges.as_deref())?;
    let names = &file.pipeline.class_names;
    if data.class_names() != names.as_slice() {
        bail!("data classes {:?} differ from the model's {:?}", data.class_names(), names);
    }
    let pred = file.pipeline.predict(&data)?;
    let mut csv = String::from("index,predicted,actual\n");
    for (i, (p, y)) in pred.iter().zip(data.labels()).enumerate() {
        csv.push_str(&format!("{i},{},{}\n", names[p - 1], names[y - 1]));
    }
    let mut scores = serde_json::Map::new();
    for m in Metric::ALL {
        let v = m.evaluate(data.labels(), &pred, names.len()).ok();
        scores.insert(m.name().into(), json!(v));
    }
    match &a.out {
        Some(p) => {
            std::fs::write(p, csv).with_context(|| format!("writing {}", p.display()))?;
            println!("{}", json!({ "predictions": p, "metrics": scores }));
        }
        None => {
            print!("{csv}");
            eprintln!("{}", json!({ "metrics": scores }));
        }
    }
    Ok(())
}

fn error_record(e: &anyhow::Error) -> serde_json::Value {
    let kind = e
        .chain()
        .find_map(|c| c.downcast_ref::<tsoc::Error>())
        .map_or("cli", |t| t.kind());
    json!({ "error": kind, "message": format!("{e:#}") })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { manifest } => cmd_run(manifest),
        Command::Stats(a) => cmd_stats(a),
        Command::Transform(a) => cmd_transform(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Predict(a) => cmd_predict(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_record(&e));
            ExitCode::from(1)
        }
    }
}
