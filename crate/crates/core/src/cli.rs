//! `varlstm` command line: `synth`, `crossval`, `eval`, `packcheck`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::classifier::{predict_batch, Aggregation, VideoPrediction};
use crate::data_io::{load_checkpoint, load_dataset, read_manifest, save_checkpoint, write_synthetic, SyntheticConfig};
use crate::error::{Error, Result};
use crate::metrics::{
    confusion_at_threshold, distribution_to_csv, prob_distribution, pr_curve, roc_curve, write_curve_csv,
    MetricReport, RankedPredictions,
};
use crate::packed::FeatureSequence;
use crate::selfcheck::{self, CheckSizes};
use crate::training::{train_crossval, TrainConfig};

#[derive(Debug, Parser)]
#[command(name = "varlstm", version, about = "Variable-length LSTM video classification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic feature dataset and manifest.
    Synth(SynthArgs),
    /// Stratified k-fold training with best-checkpoint retention.
    Crossval(CrossvalArgs),
    /// Evaluate a checkpoint on a manifest.
    Eval(EvalArgs),
    /// Randomized packed-vs-sequential and gradient checks.
    Packcheck(PackcheckArgs),
}

fn positive_f64(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{s} is not a positive number"))
    }
}

fn non_negative_f64(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{s} is not a non-negative number"))
    }
}

fn positive_count(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

fn fold_count(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v >= 2 => Ok(v),
        Ok(_) => Err("must be at least 2".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn unit_interval(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{s} is not in [0, 1]"))
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 381)]
    pub benign: usize,
    #[arg(long, default_value_t = 420)]
    pub malignant: usize,
    /// Frame count range, inclusive.
    #[arg(long, num_args = 2, value_names = ["MIN", "MAX"], default_values_t = [1, 30])]
    pub frames: Vec<usize>,
    #[arg(long, default_value_t = 512, value_parser = positive_count)]
    pub dim: usize,
    #[arg(long, default_value_t = 1.0, value_parser = positive_f64)]
    pub separation: f64,
    #[arg(long, default_value_t = 1.0, value_parser = non_negative_f64)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct CrossvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1e-5, value_parser = non_negative_f64)]
    pub lr: f64,
    #[arg(long, default_value_t = 300, value_parser = positive_count)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32, value_parser = positive_count)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 20, value_parser = positive_count)]
    pub eval_every: usize,
    #[arg(long, default_value_t = 5, value_parser = fold_count)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Aggregation::Average)]
    pub aggregation: Aggregation,
    #[arg(long, default_value_t = 0.5, value_parser = unit_interval)]
    pub threshold: f64,
    /// Folds trained in parallel.
    #[arg(long, default_value_t = 1, value_parser = positive_count)]
    pub jobs: usize,
    #[arg(long, default_value_t = 256, value_parser = positive_count)]
    pub hidden: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.5, value_parser = unit_interval)]
    pub threshold: f64,
    #[arg(long, value_enum, default_value_t = Aggregation::Average)]
    pub aggregation: Aggregation,
}

#[derive(Debug, Args)]
pub struct PackcheckArgs {
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 20)]
    pub grad_trials: usize,
    #[arg(long, default_value_t = 8, value_parser = positive_count)]
    pub max_batch: usize,
    #[arg(long, default_value_t = 10, value_parser = positive_count)]
    pub max_len: usize,
    #[arg(long, default_value_t = 8, value_parser = positive_count)]
    pub max_dim: usize,
    #[arg(long, default_value_t = 6, value_parser = positive_count)]
    pub max_hidden: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Test hook: corrupt every packed schedule before the forward pass.
    #[arg(long, hide = true)]
    pub corrupt_batch_sizes: bool,
}

#[derive(Debug, Serialize)]
pub struct FoldSummary {
    pub fold: usize,
    pub best_epoch: usize,
    pub best_val_accuracy: f64,
    pub val_size: usize,
    pub metrics: MetricReport,
}

/// Everything a command produced. `wall_time_secs` is the only
/// non-deterministic field.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub config: serde_json::Value,
    pub folds: Vec<FoldSummary>,
    pub pooled: Option<MetricReport>,
    pub outputs: Vec<PathBuf>,
    pub wall_time_secs: f64,
}

struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.written.push(path.clone());
        Ok(path)
    }

    fn record(&mut self, path: PathBuf) {
        self.written.push(path);
    }
}

fn predictions_csv(preds: &[VideoPrediction], folds: Option<&[usize]>) -> String {
    let mut out = String::from("video_id,fold,label,score,predicted\n");
    for (i, p) in preds.iter().enumerate() {
        let fold = folds.map_or_else(String::new, |f| f[i].to_string());
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            p.video_id,
            fold,
            p.true_label,
            crate::metrics::sig9(p.score()),
            p.predicted_class
        ));
    }
    out
}

/// Writes PR/ROC curves (header only when a curve is undefined).
fn write_curves(out: &mut Outputs, ranked: &RankedPredictions) -> Result<()> {
    for (name, curve) in [("pr_curve.csv", pr_curve(ranked)), ("roc_curve.csv", roc_curve(ranked))] {
        let path = out.dir.join(name);
        write_curve_csv(&path, &curve.unwrap_or_default())?;
        out.record(path);
    }
    Ok(())
}

fn load_manifest_dataset(path: &Path) -> Result<Vec<FeatureSequence>> {
    let manifest = read_manifest(path)?;
    if manifest.records.is_empty() {
        return Err(Error::Manifest(format!("{}: no records", path.display())));
    }
    load_dataset(&manifest)
}

pub fn cmd_synth(args: &SynthArgs) -> Result<PathBuf> {
    let config = SyntheticConfig {
        num_benign: args.benign,
        num_malignant: args.malignant,
        min_frames: args.frames[0],
        max_frames: args.frames[1],
        feature_dim: args.dim,
        class_separation: args.separation,
        noise_scale: args.noise,
        seed: args.seed,
    };
    let (_, path) = write_synthetic(&config, &args.out)?;
    Ok(path)
}

pub fn cmd_crossval(args: &CrossvalArgs) -> Result<RunReport> {
    let start = Instant::now();
    let config = TrainConfig {
        learning_rate: args.lr,
        epochs: args.epochs,
        batch_size: args.batch_size,
        eval_every: args.eval_every,
        folds: args.folds,
        seed: args.seed,
        aggregation: args.aggregation,
        hidden_size: args.hidden,
    };
    config.validate()?;
    let dataset = load_manifest_dataset(&args.manifest)?;
    let result = train_crossval(&dataset, &config, args.jobs)?;

    let mut out = Outputs::new(&args.out)?;
    let mut folds = Vec::new();
    let mut fold_of = Vec::new();
    for f in &result.folds {
        let path = out.dir.join(format!("fold_{}.ckpt", f.split.fold_index));
        save_checkpoint(&path, &f.best)?;
        out.record(path);
        let ranked = RankedPredictions::from_videos(&f.predictions)?;
        folds.push(FoldSummary {
            fold: f.split.fold_index,
            best_epoch: f.best.epoch,
            best_val_accuracy: f.best.best_val_accuracy,
            val_size: f.predictions.len(),
            metrics: MetricReport::compute(&ranked, args.threshold)?,
        });
        fold_of.extend(std::iter::repeat_n(f.split.fold_index, f.predictions.len()));
    }
    let ranked = RankedPredictions::from_videos(&result.pooled)?;
    let pooled = MetricReport::compute(&ranked, args.threshold)?;
    let fold_mean = MetricReport::mean_of(&folds.iter().map(|f| f.metrics.clone()).collect::<Vec<_>>());

    let metrics_json = serde_json::json!({
        "threshold": args.threshold,
        "aggregation": args.aggregation,
        "pooled": pooled,
        "fold_mean": fold_mean,
        "folds": folds,
    });
    out.write("metrics.json", serde_json::to_string_pretty(&metrics_json)? + "\n")?;
    out.write("metrics.txt", pooled.to_key_value())?;
    write_curves(&mut out, &ranked)?;
    out.write("predictions.csv", predictions_csv(&result.pooled, Some(&fold_of)))?;
    let losses: Vec<_> = result
        .folds
        .iter()
        .map(|f| serde_json::json!({ "fold": f.split.fold_index, "loss": f.loss_trace, "history": f.history }))
        .collect();
    out.write("training_log.json", serde_json::to_string_pretty(&losses)? + "\n")?;

    let mut report = RunReport {
        command: "crossval".into(),
        config: serde_json::to_value(&config)?,
        folds,
        pooled: Some(pooled),
        outputs: Vec::new(),
        wall_time_secs: 0.0,
    };
    finish_report(&mut out, &mut report, start)?;
    Ok(report)
}

fn finish_report(out: &mut Outputs, report: &mut RunReport, start: Instant) -> Result<()> {
    let report_path = out.dir.join("run_report.json");
    out.record(report_path.clone());
    report.outputs = out.written.clone();
    report.wall_time_secs = start.elapsed().as_secs_f64();
    let text = serde_json::to_string_pretty(report)? + "\n";
    fs::write(&report_path, text).map_err(|e| Error::io(&report_path, e))
}

pub fn cmd_eval(args: &EvalArgs) -> Result<RunReport> {
    let start = Instant::now();
    let ckpt = load_checkpoint(&args.checkpoint)?;
    let dataset = load_manifest_dataset(&args.manifest)?;
    let expected = ckpt.model.input_size();
    if let Some(s) = dataset.iter().find(|s| s.dim() != expected) {
        return Err(Error::InvalidConfig(format!(
            "checkpoint {} expects {expected}-wide features but video {} has {}",
            args.checkpoint.display(),
            s.video_id,
            s.dim()
        )));
    }
    let preds = predict_batch(&ckpt.model, &dataset, args.aggregation)?;
    let ranked = RankedPredictions::from_videos(&preds)?;
    let metrics = MetricReport::compute(&ranked, args.threshold)?;
    let cm = confusion_at_threshold(&ranked, args.threshold)?;
    let normalized = cm.normalized().ok();

    let mut out = Outputs::new(&args.out)?;
    let metrics_json = serde_json::json!({
        "threshold": args.threshold,
        "aggregation": args.aggregation,
        "metrics": metrics,
        "normalized_confusion": normalized,
    });
    out.write("metrics.json", serde_json::to_string_pretty(&metrics_json)? + "\n")?;
    let mut text = metrics.to_key_value();
    match normalized {
        Some(n) => {
            for (k, v) in [("norm_tn", n[0][0]), ("norm_fp", n[0][1]), ("norm_fn", n[1][0]), ("norm_tp", n[1][1])] {
                text.push_str(&format!("{k}={}\n", crate::metrics::sig9(v)));
            }
        }
        None => text.push_str("normalized_confusion=undefined\n"),
    }
    out.write("metrics.txt", text)?;
    write_curves(&mut out, &ranked)?;
    out.write(
        "prob_distribution.csv",
        distribution_to_csv(&prob_distribution(&ranked, args.threshold)?),
    )?;
    out.write("predictions.csv", predictions_csv(&preds, None))?;

    let mut report = RunReport {
        command: "eval".into(),
        config: serde_json::json!({
            "checkpoint": args.checkpoint,
            "manifest": args.manifest,
            "threshold": args.threshold,
            "aggregation": args.aggregation,
            "fold_index": ckpt.fold_index,
            "epoch": ckpt.epoch,
        }),
        folds: Vec::new(),
        pooled: Some(metrics),
        outputs: Vec::new(),
        wall_time_secs: 0.0,
    };
    finish_report(&mut out, &mut report, start)?;
    Ok(report)
}

pub fn cmd_packcheck(args: &PackcheckArgs) -> Result<selfcheck::CheckReport> {
    let sizes = CheckSizes {
        max_batch: args.max_batch,
        max_len: args.max_len,
        max_dim: args.max_dim,
        max_hidden: args.max_hidden,
    };
    selfcheck::run(sizes, args.trials, args.grad_trials, args.seed, args.corrupt_batch_sizes)
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let outcome = match &cli.command {
        Command::Synth(a) => cmd_synth(a).map(|p| {
            println!("{}", p.display());
            0
        }),
        Command::Crossval(a) => cmd_crossval(a).map(|r| {
            print_pooled(&r);
            0
        }),
        Command::Eval(a) => cmd_eval(a).map(|r| {
            print_pooled(&r);
            0
        }),
        Command::Packcheck(a) => cmd_packcheck(a).map(|r| {
            println!("forward trials: {}", r.forward_trials);
            println!("gradient trials: {}", r.gradient_trials);
            println!("max forward deviation: {:e}", r.max_forward_deviation);
            println!("max gradient relative error: {:e}", r.max_gradient_rel_error);
            println!("{}", if r.passed { "PASS" } else { "FAIL" });
            i32::from(!r.passed)
        }),
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        1
    })
}

fn print_pooled(report: &RunReport) {
    if let Some(m) = &report.pooled {
        print!("{}", m.to_key_value());
    }
    if let Some(dir) = report.outputs.last().and_then(|p| p.parent()) {
        println!("outputs: {}", dir.display());
    }
}
