//! `woamlp` command line: `fuse`, `train`, `eval`, `bench`.
//!
//! Exit codes: 0 success, 1 usage or bad config, 2 I/O, 3 data validation,
//! 4 numeric failure (non-finite objective or activation).

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, ErrorKind};
use crate::feature_io::{self, FeatureError, FeatureTable};
use crate::metrics::{self, MetricsReport};
use crate::nn::{Activation, MlpTopology};
use crate::trainer::{self, TrainConfig, TrainError, WoaSettings};
use crate::woa::{self, benchmarks::Objective, Bounds, WoaConfig};

#[derive(Debug, Parser)]
#[command(
    name = "woamlp",
    version,
    about = "WOA-trained MLP over fused feature tables"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Concatenate two feature tables column-wise, matched by sample id.
    Fuse {
        first: PathBuf,
        second: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Split, normalize and train an MLP with the whale optimizer.
    Train(TrainArgs),
    /// Score a model (or a predictions file) and write a metrics report.
    Eval(EvalArgs),
    /// Run the optimizer on a standard test function.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// JSON run config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Feature CSV to split and train on.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Model JSON path. Sibling files get `.history.csv`, `.config.json`,
    /// `.train.csv` and `.test.csv` suffixes.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    test_fraction: Option<f64>,
    /// Hidden layer sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    #[arg(long)]
    activation: Option<Activation>,
    #[arg(long)]
    population: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    spiral_shape: Option<f64>,
    #[arg(long)]
    weight_bound: Option<f64>,
    /// Skip z-score normalization.
    #[arg(long)]
    no_normalize: bool,
    /// Evaluate fitness on one thread.
    #[arg(long)]
    serial: bool,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long, requires = "data", conflicts_with = "predictions")]
    model: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// CSV with header `id,truth,prediction` instead of a model.
    #[arg(long, required_unless_present = "model")]
    predictions: Option<PathBuf>,
    /// Positive class; defaults to the first class name in sorted order.
    #[arg(long)]
    positive: Option<String>,
    /// Report JSON path; printed to stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, default_value = "sphere")]
    objective: Objective,
    #[arg(long, default_value_t = 10)]
    dim: usize,
    #[arg(long, default_value_t = 30)]
    population: usize,
    #[arg(long, default_value_t = 200)]
    iterations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
    lower: f64,
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    upper: f64,
    #[arg(long, default_value_t = 1.0)]
    spiral_shape: f64,
    /// History CSV path; printed to stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// Optimizer keys of a run config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WoaRunConfig {
    pub population_size: usize,
    pub max_iterations: usize,
    pub spiral_shape: f64,
    pub parallel: bool,
}

impl Default for WoaRunConfig {
    fn default() -> Self {
        let d = WoaSettings::default();
        Self {
            population_size: d.population_size,
            max_iterations: d.max_iterations,
            spiral_shape: d.spiral_shape,
            parallel: d.parallel,
        }
    }
}

/// Everything a `train` run depends on. The resolved copy is written next
/// to the model so the run can be repeated from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub seed: u64,
    pub test_fraction: f64,
    pub hidden_layers: Vec<usize>,
    pub hidden_activation: Activation,
    pub weight_bound: f64,
    pub normalize: bool,
    pub woa: WoaRunConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: None,
            output: None,
            seed: 0,
            test_fraction: 0.25,
            hidden_layers: vec![8],
            hidden_activation: Activation::Sigmoid,
            weight_bound: 10.0,
            normalize: true,
            woa: WoaRunConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn train_config(&self, input: usize, classes: usize) -> Result<TrainConfig, CliError> {
        let mut layers = Vec::with_capacity(self.hidden_layers.len() + 2);
        layers.push(input);
        layers.extend(&self.hidden_layers);
        layers.push(classes);
        let topology = MlpTopology::new(layers, self.hidden_activation).map_err(Error::from)?;
        Ok(TrainConfig {
            topology,
            woa: WoaSettings {
                population_size: self.woa.population_size,
                max_iterations: self.woa.max_iterations,
                spiral_shape: self.woa.spiral_shape,
                seed: self.seed,
                parallel: self.woa.parallel,
            },
            weight_bound: self.weight_bound,
            normalize: self.normalize,
        })
    }
}

/// A failure with its exit-code class and a one-line message.
#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Usage,
            message: message.into(),
        }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Self {
            kind: ErrorKind::Io,
            message: format!("{}: {e}", path.display()),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl<E: Into<Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        let e = e.into();
        Self {
            kind: e.kind(),
            message: e.to_string(),
        }
    }
}

/// Parses `args` (program name first), runs the command, and returns the
/// process exit code. Diagnostics go to stderr as a single line.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as K;
            if matches!(e.kind(), K::DisplayHelp | K::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or("usage error");
            eprintln!("{first} (see --help)");
            return ErrorKind::Usage.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message.replace('\n', " "));
            e.exit_code()
        }
    }
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Fuse {
            first,
            second,
            output,
        } => fuse_cmd(&first, &second, &output),
        Command::Train(args) => train_cmd(args),
        Command::Eval(args) => eval_cmd(args),
        Command::Bench(args) => bench_cmd(args),
    }
}

fn fuse_cmd(first: &Path, second: &Path, output: &Path) -> Result<(), CliError> {
    let a = feature_io::load_feature_table(first)?;
    let b = feature_io::load_feature_table(second)?;
    let fused = feature_io::fuse(&a, &b)?;
    feature_io::save_feature_table(&fused, output)?;
    println!(
        "fused {} samples: {} + {} = {} columns -> {}",
        fused.len(),
        a.dim(),
        b.dim(),
        fused.dim(),
        output.display()
    );
    Ok(())
}

fn read_to_string(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// `model.json` -> `model.<suffix>` next to it.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".into());
    path.with_file_name(format!("{stem}.{suffix}"))
}

/// Merges config file and flags, flags winning.
fn resolve_run_config(args: &TrainArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => serde_json::from_str::<RunConfig>(&read_to_string(path)?)
            .map_err(|e| CliError::usage(format!("bad config {}: {e}", path.display())))?,
        None => RunConfig::default(),
    };
    if let Some(v) = &args.data {
        cfg.data = Some(v.clone());
    }
    if let Some(v) = &args.output {
        cfg.output = Some(v.clone());
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.test_fraction {
        cfg.test_fraction = v;
    }
    if let Some(v) = &args.hidden {
        cfg.hidden_layers = v.clone();
    }
    if let Some(v) = args.activation {
        cfg.hidden_activation = v;
    }
    if let Some(v) = args.population {
        cfg.woa.population_size = v;
    }
    if let Some(v) = args.iterations {
        cfg.woa.max_iterations = v;
    }
    if let Some(v) = args.spiral_shape {
        cfg.woa.spiral_shape = v;
    }
    if let Some(v) = args.weight_bound {
        cfg.weight_bound = v;
    }
    if args.no_normalize {
        cfg.normalize = false;
    }
    if args.serial {
        cfg.woa.parallel = false;
    }
    if cfg.data.is_none() {
        return Err(CliError::usage(
            "no training data: pass --data or set `data` in the config",
        ));
    }
    if cfg.output.is_none() {
        return Err(CliError::usage(
            "no output path: pass -o or set `output` in the config",
        ));
    }
    Ok(cfg)
}

fn train_cmd(args: TrainArgs) -> Result<(), CliError> {
    let cfg = resolve_run_config(&args)?;
    let data_path = cfg.data.clone().expect("resolved");
    let out = cfg.output.clone().expect("resolved");
    if !data_path.exists() {
        return Err(CliError::io(
            &data_path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        ));
    }

    let table = feature_io::load_feature_table(&data_path)?;
    let tc = cfg.train_config(table.dim(), table.class_names.len())?;
    tc.validate()?;
    let (train_set, test_set) = feature_io::split(&table, cfg.test_fraction, cfg.seed)?;

    write_file(
        &sibling(&out, "config.json"),
        &serde_json::to_string_pretty(&cfg).expect("config serializes"),
    )?;
    let model = trainer::train(&tc, &train_set)?;

    trainer::save_model(&model, &out)?;
    write_file(
        &sibling(&out, "history.csv"),
        &woa::history_csv(&model.history),
    )?;
    feature_io::save_feature_table(&train_set, sibling(&out, "train.csv"))?;
    feature_io::save_feature_table(&test_set, sibling(&out, "test.csv"))?;

    println!(
        "trained {:?} on {} samples ({} held out), final fitness {}",
        tc.topology.layers,
        train_set.len(),
        test_set.len(),
        model.history.last().copied().unwrap_or(f64::NAN)
    );
    println!(
        "train accuracy {:.4}, test accuracy {:.4}",
        model.accuracy(&train_set)?,
        model.accuracy(&test_set)?
    );
    println!("model -> {}", out.display());
    Ok(())
}

/// Report JSON written by `eval`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOutput {
    pub samples: usize,
    #[serde(flatten)]
    pub report: MetricsReport,
}

fn eval_cmd(args: EvalArgs) -> Result<(), CliError> {
    let (preds, truth, classes) = match (&args.model, &args.predictions) {
        (Some(model_path), None) => {
            let model = trainer::load_model(model_path)?;
            let data = feature_io::load_feature_table(args.data.as_ref().expect("clap requires"))?;
            check_labels(&data, &model.class_names)?;
            let preds = model.predict_table(&data)?;
            let truth = (0..data.len())
                .map(|i| data.label_name(i).to_owned())
                .collect();
            (preds, truth, model.class_names)
        }
        (None, Some(path)) => read_predictions(path)?,
        _ => {
            return Err(CliError::usage(
                "pass either --model with --data, or --predictions",
            ))
        }
    };
    let positive = args.positive.clone().unwrap_or_else(|| classes[0].clone());
    let cm = metrics::confusion(&preds, &truth, &positive)?;
    let report = metrics::metrics_report(&cm)?;
    print!("{}", report.to_table("model"));

    let out = EvalOutput {
        samples: preds.len(),
        report,
    };
    let json = serde_json::to_string_pretty(&out).expect("report serializes");
    match &args.output {
        Some(path) => write_file(path, &json)?,
        None => println!("{json}"),
    }
    Ok(())
}

fn check_labels(data: &FeatureTable, classes: &[String]) -> Result<(), CliError> {
    match data.class_names.iter().find(|c| !classes.contains(c)) {
        Some(unknown) => Err(TrainError::UnknownLabel(unknown.clone()).into()),
        None => Ok(()),
    }
}

type LabeledPredictions = (Vec<String>, Vec<String>, Vec<String>);

fn read_predictions(path: &Path) -> Result<LabeledPredictions, CliError> {
    let text = read_to_string(path)?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let bad = |msg: String| CliError::from(FeatureError::Csv(msg));
    let header = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != ["id", "truth", "prediction"] {
        return Err(FeatureError::BadHeader("expected `id,truth,prediction`".into()).into());
    }
    let mut preds = Vec::new();
    let mut truth = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        truth.push(rec[1].to_owned());
        preds.push(rec[2].to_owned());
    }
    if preds.is_empty() {
        return Err(FeatureError::Empty.into());
    }
    let mut classes: Vec<String> = truth.iter().chain(&preds).cloned().collect();
    classes.sort();
    classes.dedup();
    Ok((preds, truth, classes))
}

fn bench_cmd(args: BenchArgs) -> Result<(), CliError> {
    let config = WoaConfig {
        population_size: args.population,
        max_iterations: args.iterations,
        bounds: Bounds::uniform(args.dim, args.lower, args.upper),
        spiral_shape: args.spiral_shape,
        seed: args.seed,
        parallel: false,
    };
    let objective = args.objective;
    let state = woa::optimize(|x| objective.eval(x), &config)?;
    let csv = woa::history_csv(&state.history);
    match &args.output {
        Some(path) => {
            write_file(path, &csv)?;
            println!(
                "{} dim={} best_fitness={} evaluations={}",
                objective.name(),
                args.dim,
                state.best_fitness,
                state.evaluations
            );
        }
        None => print!("{csv}"),
    }
    Ok(())
}
