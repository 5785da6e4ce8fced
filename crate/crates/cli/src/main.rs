use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use isingml::experiment::{
    self, DataConfig, DataSource, EpsilonSetting, ModelConfig, OutputPaths, Provenance,
};
use isingml::{
    bas_decode, gen_bas, gen_function, gen_random, predict_all, save_csv, BackendSpec, BasEncoding,
    BasMatrix, BasOptions, BasOrientation, Checkpoint, Dataset, Execution, IsingMachine,
    PreprocessSpec, Preset, ProblemDocument, RunConfig, RunManifest, Sampling, SeedPolicy,
    TargetFunction, TrainConfig,
};

/// Train and run Ising-machine regression and classification models.
#[derive(Parser, Debug)]
#[command(name = "isingml", version)]
struct Cli {
    /// Solver backend (`exact` or `simulated-annealing`).
    #[arg(long, global = true)]
    backend: Option<String>,

    /// Backend parameter, e.g. `sweeps=2000`. Repeatable.
    #[arg(long = "backend-param", value_name = "KEY=VALUE", global = true)]
    backend_params: Vec<String>,

    /// Base seed for data generation and solver calls.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for generated files.
    #[arg(long, global = true, env = "ISINGML_OUT_DIR", default_value = "runs")]
    out_dir: PathBuf,

    /// Run configuration file (TOML). Flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// More log output (-v info, -vv debug).
    #[arg(short = 'v', long = "log-verbose", action = clap::ArgAction::Count, global = true)]
    log_verbosity: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a dataset CSV.
    GenData {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Train a model and write metrics, checkpoint and manifest.
    Train(TrainArgs),
    /// Evaluate a trained model.
    Predict(PredictArgs),
    /// Run a preset end to end and write plot-ready tables.
    Reproduce(ReproduceArgs),
    /// Solve a single problem document.
    Solve {
        /// Problem file with `n`, `biases` and `edges`.
        problem: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum GenKind {
    /// Uniform random inputs and targets.
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        samples: usize,
        #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        hi: f64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Samples of `2x - 6` or `1.2 (x - 0.5)^2 - 2`.
    Function {
        #[arg(long, value_enum)]
        function: FunctionArg,
        #[arg(long)]
        samples: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        hi: f64,
        /// Draw inputs uniformly at random instead of on an even grid.
        #[arg(long)]
        uniform: bool,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Bars-and-stripes matrices flattened row-wise.
    Bas {
        /// Matrix side length.
        #[arg(long, visible_alias = "size")]
        k: usize,
        #[arg(long)]
        samples: usize,
        #[arg(long, value_enum, default_value_t = OrientationArg::StripesHorizontal)]
        orientation: OrientationArg,
        #[arg(long, value_enum, default_value_t = EncodingArg::Binary)]
        encoding: EncodingArg,
        /// Also write the matrices as 0/1 grids to this file.
        #[arg(long)]
        matrices: Option<PathBuf>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Start from a published experiment configuration.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(Preset::NAMES))]
    preset: Option<String>,
    /// Total spins for the function presets (50 or 150).
    #[arg(long)]
    size: Option<usize>,
    /// Training data CSV.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Test data CSV.
    #[arg(long)]
    test_data: Option<PathBuf>,
    /// Targets are BAS-encoded (0 bars, 10 stripes); report accuracy.
    #[arg(long)]
    bas_labels: bool,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    /// Fixed offset.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "epsilon_from_data")]
    epsilon: Option<f64>,
    /// Compute the offset from a first round of solves.
    #[arg(long)]
    epsilon_from_data: bool,
    /// Hidden-spin offset step `d` (requires --copies).
    #[arg(long, requires = "copies", allow_hyphen_values = true)]
    offset_step: Option<f64>,
    /// Number of shifted input copies.
    #[arg(long, requires = "offset_step")]
    copies: Option<usize>,
    #[arg(long)]
    update_lambda: bool,
    #[arg(long)]
    update_epsilon: bool,
    #[arg(long, value_enum)]
    seed_policy: Option<SeedPolicyArg>,
    /// Write a checkpoint every K epochs.
    #[arg(long, value_name = "K")]
    checkpoint_every: Option<usize>,
    /// Solve samples one at a time.
    #[arg(long)]
    sequential: bool,
    /// Run name; output goes to `<out-dir>/<name>`.
    #[arg(long)]
    name: Option<String>,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("inputs").required(true).args(["input", "data", "bas"]))]
struct PredictArgs {
    /// Checkpoint written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// Comma-separated input vector.
    #[arg(long, allow_hyphen_values = true)]
    input: Option<String>,
    /// Dataset CSV; prints one output per row.
    #[arg(long)]
    data: Option<PathBuf>,
    /// BAS matrix file (0/1 grid); prints the decoded label.
    #[arg(long)]
    bas: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OrientationArg::StripesHorizontal)]
    orientation: OrientationArg,
    #[arg(long, value_enum, default_value_t = EncodingArg::Binary)]
    encoding: EncodingArg,
    /// Also print the ground state and its energy.
    #[arg(long)]
    verbose: bool,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("what").required(true).args(["preset", "manifest"]))]
struct ReproduceArgs {
    #[arg(value_parser = clap::builder::PossibleValuesParser::new(Preset::NAMES))]
    preset: Option<String>,
    /// Total spins for the function presets (50 or 150).
    #[arg(long)]
    size: Option<usize>,
    /// Replay a previous run from its manifest.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Run the repetitions one at a time.
    #[arg(long)]
    sequential: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FunctionArg {
    Linear,
    Quadratic,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OrientationArg {
    StripesHorizontal,
    StripesVertical,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EncodingArg {
    Binary,
    Spin,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SeedPolicyArg {
    Fixed,
    PerCall,
}

impl From<OrientationArg> for BasOrientation {
    fn from(o: OrientationArg) -> Self {
        match o {
            OrientationArg::StripesHorizontal => BasOrientation::StripesHorizontal,
            OrientationArg::StripesVertical => BasOrientation::StripesVertical,
        }
    }
}

impl From<EncodingArg> for BasEncoding {
    fn from(e: EncodingArg) -> Self {
        match e {
            EncodingArg::Binary => BasEncoding::Binary,
            EncodingArg::Spin => BasEncoding::Spin,
        }
    }
}

/// Error caused by how the tool was invoked rather than by the run itself.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn is_usage(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        e.is::<Usage>()
            || matches!(
                e.downcast_ref::<isingml::Error>(),
                Some(
                    isingml::Error::UnknownPreset(_)
                        | isingml::Error::UnknownBackend { .. }
                        | isingml::Error::UnknownBackendParam { .. }
                        | isingml::Error::InvalidBackendParam { .. }
                        | isingml::Error::InvalidConfig(_)
                        | isingml::Error::Document(_)
                )
            )
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.log_verbosity {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if is_usage(&err) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let backend = backend_override(&cli)?;
    match &cli.command {
        Command::GenData { kind } => gen_data(&cli, kind),
        Command::Train(args) => train(&cli, args, backend),
        Command::Predict(args) => predict(&cli, args, backend),
        Command::Reproduce(args) => reproduce(&cli, args, backend),
        Command::Solve { problem } => solve(&cli, problem, backend),
    }
}

fn backend_override(cli: &Cli) -> anyhow::Result<Option<BackendSpec>> {
    if cli.backend.is_none() && cli.backend_params.is_empty() {
        return Ok(None);
    }
    let name = cli
        .backend
        .clone()
        .unwrap_or_else(|| isingml::SimulatedAnnealing::NAME.to_string());
    let mut spec = BackendSpec::new(name);
    for kv in &cli.backend_params {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| usage(format!("backend parameter '{kv}' is not KEY=VALUE")))?;
        let value: f64 = v.trim().parse().map_err(|_| {
            usage(format!(
                "backend parameter '{k}' has non-numeric value '{v}'"
            ))
        })?;
        spec = spec.with_param(k.trim(), value);
    }
    spec.build()?;
    Ok(Some(spec))
}

fn output_path(
    cli: &Cli,
    explicit: &Option<PathBuf>,
    default_name: &str,
) -> anyhow::Result<PathBuf> {
    let path = explicit
        .clone()
        .unwrap_or_else(|| cli.out_dir.join(default_name));
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(path)
}

fn gen_data(cli: &Cli, kind: &GenKind) -> anyhow::Result<()> {
    let seed = cli.seed.unwrap_or(0);
    let (data, path) = match kind {
        GenKind::Random {
            n,
            samples,
            lo,
            hi,
            output,
        } => (
            gen_random(*n, *samples, *lo, *hi, seed)?,
            output_path(cli, output, "random.csv")?,
        ),
        GenKind::Function {
            function,
            samples,
            lo,
            hi,
            uniform,
            output,
        } => {
            let f = match function {
                FunctionArg::Linear => TargetFunction::Linear,
                FunctionArg::Quadratic => TargetFunction::Quadratic,
            };
            let sampling = if *uniform {
                Sampling::Uniform { seed }
            } else {
                Sampling::Grid
            };
            let name = match function {
                FunctionArg::Linear => "fn-lin.csv",
                FunctionArg::Quadratic => "fn-quad.csv",
            };
            (
                gen_function(f, *samples, (*lo, *hi), sampling)?,
                output_path(cli, output, name)?,
            )
        }
        GenKind::Bas {
            k,
            samples,
            orientation,
            encoding,
            matrices,
            output,
        } => {
            let options = BasOptions {
                orientation: (*orientation).into(),
                encoding: (*encoding).into(),
            };
            let (data, mats) = gen_bas(*k, *samples, seed, options)?;
            if let Some(mpath) = matrices {
                let text: Vec<String> = mats
                    .iter()
                    .map(|m| format!("# {}\n{}", m.label(), m.to_grid_text()))
                    .collect();
                std::fs::write(mpath, text.join("\n"))
                    .with_context(|| format!("writing {}", mpath.display()))?;
            }
            (data, output_path(cli, output, "bas.csv")?)
        }
    };
    save_csv(&data, &path)?;
    println!(
        "wrote {} rows x {} features to {}",
        data.len(),
        data.input_dim(),
        path.display()
    );
    Ok(())
}

fn resolve_train_config(
    cli: &Cli,
    args: &TrainArgs,
    backend: Option<BackendSpec>,
) -> anyhow::Result<RunConfig> {
    let seed = cli.seed.unwrap_or(0);
    let mut cfg = if let Some(path) = &cli.config {
        if args.preset.is_some() {
            return Err(usage("--preset and --config are mutually exclusive"));
        }
        let mut c = RunConfig::load(path)?;
        if let Some(s) = cli.seed {
            c.training.seed = s;
        }
        c
    } else if let Some(name) = &args.preset {
        Preset::parse(name, args.size)?.config(seed)
    } else if args.data.is_some() {
        RunConfig {
            name: "custom".into(),
            checkpoint_every: 0,
            datasets: DataConfig {
                train: DataSource::File {
                    path: PathBuf::new(),
                    bas_labels: false,
                },
                test: None,
            },
            model: ModelConfig {
                lambda: 1.0,
                epsilon: EpsilonSetting::FromData,
                preprocess: PreprocessSpec::Identity,
                bounds: Default::default(),
            },
            training: TrainConfig {
                seed,
                ..TrainConfig::new(0.1, 50)
            },
            solvers: BackendSpec::simulated_annealing(),
            provenance: Default::default(),
        }
    } else {
        return Err(usage("train needs --preset, --config or --data"));
    };
    if args.size.is_some() && args.preset.is_none() {
        return Err(usage("--size only applies with --preset"));
    }

    let mut user = |key: &str| {
        cfg.provenance.insert(key.to_string(), Provenance::User);
    };
    let file = |path: &PathBuf| DataSource::File {
        path: path.clone(),
        bas_labels: args.bas_labels,
    };
    let mut set_data = Vec::new();
    if let Some(p) = &args.data {
        set_data.push(("datasets.train", Some(file(p))));
    }
    if let Some(p) = &args.test_data {
        set_data.push(("datasets.test", Some(file(p))));
    }
    for (key, _) in &set_data {
        user(key);
    }
    for key in [
        ("training.epochs", args.epochs.is_some()),
        ("training.eta", args.eta.is_some()),
        ("model.lambda", args.lambda.is_some()),
        (
            "model.epsilon",
            args.epsilon.is_some() || args.epsilon_from_data,
        ),
        ("model.preprocess", args.copies.is_some()),
        ("training.seed_policy", args.seed_policy.is_some()),
    ]
    .into_iter()
    .filter_map(|(k, set)| set.then_some(k))
    {
        user(key);
    }
    for (key, source) in set_data {
        match key {
            "datasets.train" => cfg.datasets.train = source.expect("set"),
            _ => cfg.datasets.test = source,
        }
    }
    if let Some(e) = args.epochs {
        cfg.training.epochs = e;
    }
    if let Some(eta) = args.eta {
        cfg.training.eta = eta;
    }
    if let Some(l) = args.lambda {
        cfg.model.lambda = l;
    }
    if let Some(value) = args.epsilon {
        cfg.model.epsilon = EpsilonSetting::Pinned { value };
    }
    if args.epsilon_from_data {
        cfg.model.epsilon = EpsilonSetting::FromData;
    }
    if let (Some(step), Some(copies)) = (args.offset_step, args.copies) {
        let n = cfg.datasets.train.input_dim()?;
        cfg.model.preprocess = PreprocessSpec::uniform_offset(n, step, copies);
    }
    cfg.training.update_lambda |= args.update_lambda;
    cfg.training.update_epsilon |= args.update_epsilon;
    if let Some(p) = args.seed_policy {
        cfg.training.seed_policy = match p {
            SeedPolicyArg::Fixed => SeedPolicy::Fixed,
            SeedPolicyArg::PerCall => SeedPolicy::PerCall,
        };
    }
    if let Some(k) = args.checkpoint_every {
        cfg.checkpoint_every = k;
    }
    if args.sequential {
        cfg.training.execution = Execution::Sequential;
    }
    if let Some(name) = &args.name {
        cfg.name = name.clone();
    }
    if let Some(b) = backend {
        cfg.set_backend(b);
    }
    if let DataSource::File { path, .. } = &cfg.datasets.train {
        if path.as_os_str().is_empty() {
            return Err(usage("no training data given"));
        }
    }
    cfg.training.validate()?;
    Ok(cfg)
}

fn train(cli: &Cli, args: &TrainArgs, backend: Option<BackendSpec>) -> anyhow::Result<()> {
    let cfg = resolve_train_config(cli, args, backend)?;
    let dir = cli.out_dir.join(&cfg.name);
    let (outcome, manifest) = experiment::run_to_dir(&cfg, &dir)?;
    let recs = &outcome.report.records;
    let (first, last) = (&recs[0], &recs[recs.len() - 1]);
    println!(
        "{}: {} epochs, train MSE {:.6} -> {:.6}, epsilon {}",
        cfg.name,
        recs.len(),
        first.train_mse,
        last.train_mse,
        outcome.epsilon
    );
    if let Some(acc) = last.train_accuracy {
        println!("train accuracy {acc:.4}");
    }
    if let (Some(mse), acc) = (last.test_mse, last.test_accuracy) {
        match acc {
            Some(a) => println!("test MSE {mse:.6}, accuracy {a:.4}"),
            None => println!("test MSE {mse:.6}"),
        }
    }
    for note in &manifest.notes {
        println!("note: {note}");
    }
    println!("metrics: {}", manifest.outputs.metrics.display());
    println!("model: {}", manifest.outputs.checkpoint.display());
    println!("manifest: {}", dir.join(OutputPaths::MANIFEST).display());
    Ok(())
}

fn parse_vector(text: &str) -> anyhow::Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("'{}' is not a number", s.trim())))
        })
        .collect()
}

fn machine_for(
    backend: Option<BackendSpec>,
    checkpoint: &Checkpoint,
) -> anyhow::Result<Box<dyn IsingMachine>> {
    Ok(backend
        .unwrap_or_else(|| checkpoint.backend.clone())
        .build()?)
}

fn predict(cli: &Cli, args: &PredictArgs, backend: Option<BackendSpec>) -> anyhow::Result<()> {
    let checkpoint = Checkpoint::load(&args.model)?;
    let state = checkpoint.state()?;
    let machine = machine_for(backend, &checkpoint)?;
    let seed = cli.seed.unwrap_or(0);

    let single = |theta: &[f64]| -> anyhow::Result<f64> {
        let p = state.predict(theta, machine.as_ref(), seed)?;
        if args.verbose {
            println!("z* = {}", p.solve.configuration);
            println!("E0 = {}", p.solve.energy);
        }
        Ok(p.value)
    };

    if let Some(text) = &args.input {
        let theta = parse_vector(text)?;
        println!("{}", single(&theta)?);
    } else if let Some(path) = &args.bas {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let m = BasMatrix::from_grid_text(&text, args.orientation.into())?;
        let f = single(&m.flatten(args.encoding.into()))?;
        println!("{f}");
        println!("label: {}", bas_decode(f));
    } else if let Some(path) = &args.data {
        let data: Dataset = isingml::load_csv(path)?;
        let outputs = predict_all(&state, &data, machine.as_ref(), seed, Execution::Parallel)?;
        let mut out = std::io::stdout().lock();
        let written = writeln!(out, "output,target").and_then(|_| {
            outputs
                .iter()
                .zip(data.targets())
                .try_for_each(|(f, y)| writeln!(out, "{f},{y}"))
        });
        match written {
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => return Ok(()),
            other => other.context("writing predictions")?,
        }
        eprintln!("mse {}", isingml::mse_loss(&outputs, data.targets())?);
    }
    Ok(())
}

fn reproduce(cli: &Cli, args: &ReproduceArgs, backend: Option<BackendSpec>) -> anyhow::Result<()> {
    let execution = if args.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    if let Some(path) = &args.manifest {
        let manifest = RunManifest::load(path)?;
        if backend.is_some() {
            bail!(usage(
                "a manifest replay uses the recorded backend; drop --backend"
            ));
        }
        let dir = cli.out_dir.join(format!("{}-replay", manifest.config.name));
        let (_, replayed) = experiment::replay(&manifest, &dir)?;
        let same = std::fs::read(&manifest.outputs.metrics).ok()
            == std::fs::read(&replayed.outputs.metrics).ok();
        println!("replayed into {}", dir.display());
        println!(
            "metrics {} the recorded run",
            if same { "match" } else { "differ from" }
        );
        return Ok(());
    }
    let name = args
        .preset
        .as_deref()
        .expect("clap requires preset or manifest");
    let preset = Preset::parse(name, args.size)?;
    let dir = cli.out_dir.join(format!("reproduce-{}", preset.name()));
    let summary = experiment::reproduce(preset, cli.seed.unwrap_or(0), backend, &dir, execution)?;
    for line in &summary.lines {
        println!("{line}");
    }
    for f in &summary.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn solve(cli: &Cli, problem: &Path, backend: Option<BackendSpec>) -> anyhow::Result<()> {
    let doc: ProblemDocument = isingml::checkpoint::read_toml(problem)?;
    let problem = doc.into_problem()?;
    let spec = backend.unwrap_or_else(|| {
        if problem.num_spins() <= isingml::EXACT_MAX_SPINS {
            BackendSpec::exact()
        } else {
            BackendSpec::simulated_annealing()
        }
    });
    let result = spec.build()?.solve(&problem, cli.seed.unwrap_or(0))?;
    println!("backend: {}", result.meta.backend);
    println!("energy: {}", result.energy);
    println!("configuration: {}", result.configuration);
    Ok(())
}
