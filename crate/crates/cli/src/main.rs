use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rlf::harness::{compression_ratio, evaluate_error, learning_curve, write_curve_csv, CurveCell};
use rlf::io::{load_csv, load_idx, load_libsvm, load_model, save_model, write_atomic, LoadOptions};
use rlf::rf::train_rf;
use rlf::train::RlfTrainer;
use rlf::{Dataset64, FeaturePool, Forest, ModelKind, TrainConfig};

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;

#[derive(Parser)]
#[command(name = "rlf", version, about = "Train, evaluate and benchmark residual likelihood forests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a forest and write it to a model file.
    Train(TrainArgs),
    /// Print the classification error of a saved model on a dataset.
    Eval(EvalArgs),
    /// Run a multi-seed learning-curve benchmark and write it as CSV.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Libsvm,
    Csv,
    Idx,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Rlf,
    Rf,
}

impl From<Method> for ModelKind {
    fn from(m: Method) -> Self {
        match m {
            Method::Rlf => ModelKind::Rlf,
            Method::Rf => ModelKind::Rf,
        }
    }
}

#[derive(Args)]
struct FormatArgs {
    #[arg(long, value_enum, default_value = "libsvm")]
    format: Format,
    /// Zero-based label column for CSV input.
    #[arg(long, default_value_t = 0)]
    label_column: usize,
}

#[derive(Args)]
struct Hyper {
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(1..))]
    trees: u32,
    #[arg(long, default_value_t = 15, value_parser = clap::value_parser!(u32).range(1..=30))]
    depth: u32,
    /// Features sampled per node: a count, or `auto` for ceil(sqrt(d)).
    #[arg(long, default_value = "auto", value_parser = parse_pool)]
    features: FeaturePool,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    thresholds: u32,
    #[arg(long = "residual-iters", default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    residual_iters: u32,
    #[arg(long, default_value_t = 1e-6, value_parser = parse_epsilon)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl Hyper {
    fn config(&self) -> TrainConfig {
        TrainConfig {
            num_trees: self.trees as usize,
            max_depth: self.depth as usize,
            feature_pool: self.features,
            thresholds_per_feature: self.thresholds as usize,
            residual_iterations: self.residual_iters as usize,
            epsilon: self.epsilon,
            seed: self.seed,
            bagging: None,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    /// IDX label file (required with `--format idx`).
    #[arg(long)]
    labels: Option<PathBuf>,
    #[command(flatten)]
    format: FormatArgs,
    #[arg(long, value_enum, default_value = "rlf")]
    method: Method,
    #[command(flatten)]
    hyper: Hyper,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[command(flatten)]
    format: FormatArgs,
    /// Training data whose label values define the class order. Without it
    /// the class order comes from the labels present in `--data`.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long)]
    reference_labels: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    train_labels: Option<PathBuf>,
    #[arg(long)]
    test: PathBuf,
    #[arg(long)]
    test_labels: Option<PathBuf>,
    #[command(flatten)]
    format: FormatArgs,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "rlf,rf")]
    methods: Vec<Method>,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    runs: u32,
    #[arg(long, value_delimiter = ',', default_value = "1,5,25,100", value_parser = clap::value_parser!(u32).range(1..))]
    trees_grid: Vec<u32>,
    #[arg(long, value_delimiter = ',', default_value = "5,10,15", value_parser = clap::value_parser!(u32).range(1..=30))]
    depth_grid: Vec<u32>,
    /// Per-run hyperparameters; `--trees` and `--depth` are replaced by the grids.
    #[command(flatten)]
    hyper: Hyper,
    #[arg(long)]
    out: PathBuf,
}

fn parse_pool(s: &str) -> Result<FeaturePool, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(FeaturePool::Auto);
    }
    match s.parse::<usize>() {
        Ok(k) if k >= 1 => Ok(FeaturePool::Fixed(k)),
        _ => Err(format!("expected a positive integer or `auto`, got `{s}`")),
    }
}

fn parse_epsilon(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(e) if e > 0.0 && e < 1.0 => Ok(e),
        _ => Err(format!("expected a number in (0, 1), got `{s}`")),
    }
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

fn data_err(e: rlf::Error) -> Failure {
    Failure { code: EXIT_DATA, message: e.to_string() }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

fn load(path: &Path, labels: Option<&Path>, fmt: &FormatArgs, opts: &LoadOptions) -> Result<Dataset64, Failure> {
    let loaded = match fmt.format {
        Format::Libsvm => load_libsvm(path, opts),
        Format::Csv => load_csv(path, fmt.label_column, opts),
        Format::Idx => {
            let labels = labels.ok_or_else(|| usage("--format idx needs a label file (--labels)"))?;
            load_idx(path, labels, opts)
        }
    };
    loaded.map_err(|e| Failure { code: EXIT_DATA, message: format!("{}: {e}", path.display()) })
}

fn check_idx_labels(fmt: &FormatArgs, labels: &[Option<&PathBuf>]) -> Result<(), Failure> {
    if matches!(fmt.format, Format::Idx) && labels.iter().any(Option::is_none) {
        return Err(usage("--format idx needs a label file for every image file"));
    }
    Ok(())
}

fn train(args: TrainArgs) -> Result<(), Failure> {
    let config = args.hyper.config();
    config.validate().map_err(|e| usage(e.to_string()))?;
    check_idx_labels(&args.format, &[args.labels.as_ref()])?;
    let data = load(&args.data, args.labels.as_deref(), &args.format, &LoadOptions::default())?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let forest: Forest = match args.method {
        Method::Rlf => {
            let mut trainer = RlfTrainer::new(&data, &config).map_err(data_err)?;
            let _ = writeln!(out, "tree,loss");
            for t in 0..config.num_trees {
                let loss = trainer.step().map_err(data_err)?;
                let _ = writeln!(out, "{},{loss}", t + 1);
            }
            trainer.into_forest()
        }
        Method::Rf => train_rf(&data, &config).map_err(data_err)?,
    };
    save_model(&forest, &args.out).map_err(data_err)
}

fn eval(args: EvalArgs) -> Result<(), Failure> {
    check_idx_labels(&args.format, &[args.labels.as_ref()])?;
    if args.reference.is_some() {
        check_idx_labels(&args.format, &[args.reference_labels.as_ref()])?;
    }
    let forest: Forest = load_model(&args.model)
        .map_err(|e| Failure { code: EXIT_DATA, message: format!("{}: {e}", args.model.display()) })?;
    let label_map = match &args.reference {
        Some(path) => {
            load(path, args.reference_labels.as_deref(), &args.format, &LoadOptions::default())?.label_map().cloned()
        }
        None => None,
    };
    let opts =
        LoadOptions { feature_dim: Some(forest.feature_dim()), num_classes: Some(forest.num_classes()), label_map };
    let data = load(&args.data, args.labels.as_deref(), &args.format, &opts)?;
    if data.num_classes() != forest.num_classes() {
        return Err(Failure {
            code: EXIT_DATA,
            message: format!(
                "data has {} classes but the model was trained on {}",
                data.num_classes(),
                forest.num_classes()
            ),
        });
    }
    let error = evaluate_error(&forest, &data).map_err(data_err)?;
    println!("{error:.6}");
    Ok(())
}

fn bench(args: BenchArgs) -> Result<(), Failure> {
    let base = args.hyper.config();
    base.validate().map_err(|e| usage(e.to_string()))?;
    check_idx_labels(&args.format, &[args.train_labels.as_ref(), args.test_labels.as_ref()])?;
    let train = load(&args.train, args.train_labels.as_deref(), &args.format, &LoadOptions::default())?;
    let test = load(&args.test, args.test_labels.as_deref(), &args.format, &LoadOptions::matching(&train))?;
    let trees: Vec<usize> = args.trees_grid.iter().map(|&t| t as usize).collect();
    let depths: Vec<usize> = args.depth_grid.iter().map(|&d| d as usize).collect();

    let mut cells: Vec<CurveCell> = Vec::new();
    for &method in &args.methods {
        let curve = learning_curve(&train, &test, &base, method.into(), &trees, &depths, args.runs as usize)
            .map_err(data_err)?;
        cells.extend(curve);
    }
    write_atomic(&args.out, |w| write_curve_csv(&cells, w)).map_err(data_err)?;

    if let Some(reference) = cells.iter().find(|c| c.result.method == ModelKind::Rf) {
        for cell in cells.iter().filter(|c| c.result.method == ModelKind::Rlf) {
            let ratio = compression_ratio(&reference.result, &cell.result).map_err(data_err)?;
            println!(
                "compression rf(depth={},trees={}) / rlf(depth={},trees={}) = {ratio:.4}",
                reference.depth, reference.trees, cell.depth, cell.trees
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Bench(a) => bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
