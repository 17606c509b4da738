//! `evsvm` command-line tool: train, predict, evaluate, extract texture
//! features, and generate or split datasets.
//!
//! Exit status: 0 on success, 1 for usage errors, 2 for data errors, 3 for
//! numeric failures (non-convergence, total conflict, non-finite values).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use evsvm::data::{self, SyntheticSpec};
use evsvm::decision::DecisionRule;
use evsvm::multiclass::{train_multiclass, LambdaMode, Strategy, TrainConfig};
use evsvm::report::{evaluate, predict, RunConfig};
use evsvm::texture::{tile_and_extract, FeatureVector, GrayImage};
use evsvm::{model_io, Dataset, ErrorKind, Frame, Kernel};
use log::info;

#[derive(Parser)]
#[command(name = "evsvm", version, about = "Evidential multiclass SVM toolkit")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train binary SVMs and calibrate their masses.
    Train {
        #[arg(long)]
        data: PathBuf,
        /// File listing the learned classes, one per line. Defaults to all
        /// labels in the data.
        #[arg(long)]
        frame: Option<PathBuf>,
        #[arg(long, default_value = "ovo")]
        strategy: Strategy,
        /// `linear`, `poly:DEGREE`, `rbf:GAMMA`, or `rbf` for γ = 1/dim.
        #[arg(long, default_value = "rbf")]
        kernel: String,
        #[arg(long = "C", default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long, default_value = "total")]
        lambda_mode: LambdaMode,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write one decision per data row.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "pignistic")]
        rule: DecisionRule,
        #[arg(long, default_value_t = 0.6)]
        r: f64,
        /// Output CSV; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate decisions against true labels.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "pignistic")]
        rule: DecisionRule,
        #[arg(long, default_value_t = 0.6)]
        r: f64,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        report: ReportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Texture features of every full tile of a PGM image.
    Features {
        #[arg(long)]
        image: PathBuf,
        #[arg(long, default_value_t = 32)]
        tile: usize,
        #[arg(long, default_value_t = 16)]
        levels: usize,
        /// Label written on every row; defaults to the image file stem.
        #[arg(long)]
        label: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample a synthetic dataset.
    Synth {
        /// TOML mixture description; the built-in benchmark when absent.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the learned classes as a frame file.
        #[arg(long)]
        frame_out: Option<PathBuf>,
    },
    /// Stratified train/test split.
    Split {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0.667)]
        ratio: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Defaults to `<stem>.train.csv` next to the input.
        #[arg(long)]
        train_out: Option<PathBuf>,
        /// Defaults to `<stem>.test.csv` next to the input.
        #[arg(long)]
        test_out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Csv,
    Text,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
    Lib(evsvm::Error),
}

impl From<evsvm::Error> for Failure {
    fn from(e: evsvm::Error) -> Self {
        Failure::Lib(e)
    }
}

macro_rules! lib_from {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Failure::Lib(e.into())
            }
        }
    )*};
}
lib_from!(
    evsvm::data::DataError,
    evsvm::model_io::ModelIoError,
    evsvm::multiclass::MulticlassError,
    evsvm::report::EvalError,
    evsvm::texture::TextureError,
    evsvm::belief::BeliefError
);

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Lib(e) => match e.kind() {
                ErrorKind::Usage => 1,
                ErrorKind::Data => 2,
                ErrorKind::Numeric => 3,
            },
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Data(m) => f.write_str(m),
            Failure::Lib(e) => write!(f, "{e}"),
        }
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Data(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn train(
    data_path: &Path,
    frame_path: Option<&Path>,
    strategy: Strategy,
    kernel: &str,
    c: f64,
    tol: f64,
    lambda_mode: LambdaMode,
    out: &Path,
) -> Result<(), Failure> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Failure::Usage(format!("--C must be > 0, got {c}")));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Failure::Usage(format!("--tol must be > 0, got {tol}")));
    }
    let frame = frame_path
        .map(|p| data::load_frame(p).map(Arc::new))
        .transpose()?;
    let dataset = data::load_dataset(data_path, frame)?;
    let kernel =
        Kernel::parse_for_dim(kernel, dataset.dim()).map_err(|e| Failure::Usage(e.to_string()))?;
    let (x, y) = dataset.learned();
    info!(
        "training {strategy} on {} rows ({} learned), {} features, kernel {kernel}",
        dataset.len(),
        x.len(),
        dataset.dim()
    );
    let mut cfg = TrainConfig::new(strategy, kernel, c);
    cfg.tol = tol;
    cfg.lambda_mode = lambda_mode;
    let start = Instant::now();
    let model = train_multiclass(&x, &y, Arc::clone(&dataset.frame), &cfg)?;
    info!("trained in {:.2?}", start.elapsed());
    for clf in &model.classifiers {
        let cal = &clf.calibration;
        info!(
            "{:?}: {} support vectors, lambda_p {:.4}, lambda_n {:.4}, alpha {:.4}",
            clf.scope,
            clf.svm.support_vectors.len(),
            cal.lambda_p,
            cal.lambda_n,
            cal.alpha
        );
    }
    model_io::save_model(&model, out)?;
    Ok(())
}

fn load_for_model(
    model_path: &Path,
    data_path: &Path,
) -> Result<(evsvm::EvidentialModel, Dataset), Failure> {
    let model = model_io::load_model(model_path)?;
    let dataset = data::load_dataset(data_path, Some(Arc::clone(&model.frame)))?;
    Ok((model, dataset))
}

fn run_config(rule: DecisionRule, r: f64) -> Result<RunConfig, Failure> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Failure::Usage(format!("--r must be in [0, 1], got {r}")));
    }
    Ok(RunConfig { rule, r })
}

fn predict_cmd(
    model_path: &Path,
    data_path: &Path,
    rule: DecisionRule,
    r: f64,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let cfg = run_config(rule, r)?;
    let (model, dataset) = load_for_model(model_path, data_path)?;
    let predictions = predict(&model, &dataset.features, &cfg)?;
    let mut text = String::from("row,label,decision,conflict\n");
    for (k, (p, label)) in predictions.iter().zip(&dataset.labels).enumerate() {
        let conflict = p.conflict.map(|c| c.to_string()).unwrap_or_default();
        let _ = writeln!(
            text,
            "{k},{label},{},{conflict}",
            p.outcome.label(&model.frame)
        );
    }
    write_output(out, &text)
}

fn eval_cmd(
    model_path: &Path,
    data_path: &Path,
    rule: DecisionRule,
    r: f64,
    format: ReportFormat,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let cfg = run_config(rule, r)?;
    let (model, dataset) = load_for_model(model_path, data_path)?;
    let report = evaluate(&model, &dataset, &cfg)?;
    let text = match format {
        ReportFormat::Csv => report.to_csv(),
        ReportFormat::Text => report.to_text(),
    };
    write_output(out, &text)
}

fn features_cmd(
    image: &Path,
    tile: usize,
    levels: usize,
    label: Option<String>,
    out: &Path,
) -> Result<(), Failure> {
    let label = match label {
        Some(l) => l,
        None => image
            .file_stem()
            .and_then(|s| s.to_str())
            .filter(|s| !s.is_empty())
            .ok_or_else(|| {
                Failure::Usage("cannot derive a label from the image name; pass --label".into())
            })?
            .to_string(),
    };
    let img = GrayImage::read_pgm(image)?;
    let tiles = tile_and_extract(&img, tile, levels)?;
    info!(
        "{} tiles of {tile}x{tile} with {} features each",
        tiles.len(),
        FeatureVector::NAMES.len()
    );
    let rows: Vec<Vec<f64>> = tiles
        .iter()
        .map(|t| t.features.to_array().to_vec())
        .collect();
    let labels = vec![label.clone(); rows.len()];
    let frame = Arc::new(Frame::new([label])?);
    Dataset::new(rows, labels, frame)?.save_csv(out)?;
    Ok(())
}

fn synth_cmd(
    spec: Option<&Path>,
    seed: u64,
    out: &Path,
    frame_out: Option<&Path>,
) -> Result<(), Failure> {
    let spec = match spec {
        Some(p) => SyntheticSpec::load(p)?,
        None => SyntheticSpec::benchmark(),
    };
    let dataset = data::generate_synthetic(&spec, seed)?;
    dataset.save_csv(out)?;
    if let Some(p) = frame_out {
        write_output(Some(p), &data::frame_to_string(&dataset.frame))?;
    }
    Ok(())
}

fn derived(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("data");
    path.with_file_name(format!("{stem}.{suffix}.csv"))
}

fn split_cmd(
    data_path: &Path,
    ratio: f64,
    seed: u64,
    train_out: Option<PathBuf>,
    test_out: Option<PathBuf>,
) -> Result<(), Failure> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Failure::Usage(format!(
            "--ratio must be in (0, 1), got {ratio}"
        )));
    }
    let dataset = data::load_dataset(data_path, None)?;
    let (train, test) = data::split(&dataset, ratio, seed)?;
    let train_out = train_out.unwrap_or_else(|| derived(data_path, "train"));
    let test_out = test_out.unwrap_or_else(|| derived(data_path, "test"));
    train.save_csv(&train_out)?;
    test.save_csv(&test_out)?;
    info!(
        "{} training rows -> {}, {} test rows -> {}",
        train.len(),
        train_out.display(),
        test.len(),
        test_out.display()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Train {
            data,
            frame,
            strategy,
            kernel,
            c,
            tol,
            lambda_mode,
            out,
        } => train(
            &data,
            frame.as_deref(),
            strategy,
            &kernel,
            c,
            tol,
            lambda_mode,
            &out,
        ),
        Command::Predict {
            model,
            data,
            rule,
            r,
            out,
        } => predict_cmd(&model, &data, rule, r, out.as_deref()),
        Command::Eval {
            model,
            data,
            rule,
            r,
            report,
            out,
        } => eval_cmd(&model, &data, rule, r, report, out.as_deref()),
        Command::Features {
            image,
            tile,
            levels,
            label,
            out,
        } => features_cmd(&image, tile, levels, label, &out),
        Command::Synth {
            spec,
            seed,
            out,
            frame_out,
        } => synth_cmd(spec.as_deref(), seed, &out, frame_out.as_deref()),
        Command::Split {
            data,
            ratio,
            seed,
            train_out,
            test_out,
        } => split_cmd(&data, ratio, seed, train_out, test_out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
