//! Run configuration, experiment presets, output files and run manifests.
//!
//! A [`RunConfig`] is a TOML document with one section per subsystem
//! (`datasets`, `model`, `training`, `solvers`). Every run writes the fully
//! resolved config back next to its metrics, together with a [`RunManifest`]
//! that is sufficient to replay the run.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::checkpoint::{read_toml, write_toml, Checkpoint};
use crate::datasets::{
    gen_bas, gen_function, gen_random, grid, load_csv, BasOptions, Dataset, Sampling,
    TargetFunction,
};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::ising::ParameterBounds;
use crate::model::{ModelState, PreprocessSpec};
use crate::solvers::{BackendSpec, IsingMachine, EXACT_MAX_SPINS};
use crate::training::{
    epsilon_init, train_observed, EpochRecord, MeanStd, TrainConfig, TrainError, TrainObserver,
    TrainReport,
};

/// Where a dataset comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataSource {
    Random {
        n: usize,
        samples: usize,
        lo: f64,
        hi: f64,
        seed: u64,
    },
    Function {
        function: TargetFunction,
        samples: usize,
        lo: f64,
        hi: f64,
        #[serde(default)]
        sampling: Sampling,
    },
    Bas {
        size: usize,
        samples: usize,
        seed: u64,
        #[serde(default)]
        options: BasOptions,
    },
    File {
        path: PathBuf,
        /// Targets are BAS-encoded; labels are recovered by decoding.
        #[serde(default)]
        bas_labels: bool,
    },
}

impl DataSource {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DataSource::Random {
                n,
                samples,
                lo,
                hi,
                seed,
            } => gen_random(*n, *samples, *lo, *hi, *seed),
            DataSource::Function {
                function,
                samples,
                lo,
                hi,
                sampling,
            } => gen_function(*function, *samples, (*lo, *hi), *sampling),
            DataSource::Bas {
                size,
                samples,
                seed,
                options,
            } => gen_bas(*size, *samples, *seed, *options).map(|(d, _)| d),
            DataSource::File { path, bas_labels } => {
                let d = load_csv(path)?;
                if *bas_labels {
                    d.with_labels_from_targets()
                } else {
                    Ok(d)
                }
            }
        }
    }

    /// Input width without materializing generated data.
    pub fn input_dim(&self) -> Result<usize> {
        Ok(match self {
            DataSource::Random { n, .. } => *n,
            DataSource::Function { .. } => 1,
            DataSource::Bas { size, .. } => size * size,
            DataSource::File { .. } => self.load()?.input_dim(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub train: DataSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<DataSource>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EpsilonSetting {
    /// Use this value as-is.
    Pinned { value: f64 },
    /// Mean gap between targets and the zero-offset model on the training set.
    FromData,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub lambda: f64,
    pub epsilon: EpsilonSetting,
    pub preprocess: PreprocessSpec,
    #[serde(default, skip_serializing_if = "ParameterBounds::is_unbounded")]
    pub bounds: ParameterBounds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Value published with the original experiment.
    Published,
    /// Our choice where no value was published.
    Default,
    /// Set explicitly by the user.
    User,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    /// Write a checkpoint every this many epochs (0 disables).
    #[serde(default)]
    pub checkpoint_every: usize,
    pub datasets: DataConfig,
    pub model: ModelConfig,
    pub training: TrainConfig,
    pub solvers: BackendSpec,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub provenance: BTreeMap<String, Provenance>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Random,
    FnLin { size: usize },
    FnQuad { size: usize },
    Bas,
}

impl Preset {
    pub const NAMES: &'static [&'static str] = &["random", "fn-lin", "fn-quad", "bas"];

    /// `size` selects the hidden-spin total for the function presets (50 or 150).
    pub fn parse(name: &str, size: Option<usize>) -> Result<Self> {
        let size = size.unwrap_or(50);
        let check = |s: usize| {
            if s == 50 || s == 150 {
                Ok(s)
            } else {
                Err(Error::InvalidConfig(format!(
                    "function presets exist for 50 or 150 total spins, not {s}"
                )))
            }
        };
        match name {
            "random" => Ok(Preset::Random),
            "fn-lin" => Ok(Preset::FnLin { size: check(size)? }),
            "fn-quad" => Ok(Preset::FnQuad { size: check(size)? }),
            "bas" => Ok(Preset::Bas),
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Preset::Random => "random".into(),
            Preset::FnLin { size } => format!("fn-lin-{size}"),
            Preset::FnQuad { size } => format!("fn-quad-{size}"),
            Preset::Bas => "bas".into(),
        }
    }

    /// The published configuration, with `seed` feeding data generation and
    /// solver seeds.
    pub fn config(&self, seed: u64) -> RunConfig {
        use Provenance::{Default as Ours, Published};
        let mut provenance = BTreeMap::new();
        let mut mark = |keys: &[&str], p: Provenance| {
            for k in keys {
                provenance.insert((*k).to_string(), p);
            }
        };
        mark(&["solvers.name"], Ours);
        mark(
            &["solvers.params", "training.seed", "training.seed_policy"],
            Ours,
        );
        mark(&["model.bounds"], Ours);

        let (datasets, model, training) = match *self {
            Preset::Random => {
                mark(
                    &[
                        "datasets.train.n",
                        "datasets.train.samples",
                        "datasets.train.range",
                        "model.lambda",
                        "model.epsilon",
                        "model.preprocess",
                        "training.eta",
                        "training.epochs",
                    ],
                    Published,
                );
                (
                    DataConfig {
                        train: DataSource::Random {
                            n: 10,
                            samples: 20,
                            lo: -1.0,
                            hi: 1.0,
                            seed,
                        },
                        test: None,
                    },
                    ModelConfig {
                        lambda: 1.0,
                        epsilon: EpsilonSetting::FromData,
                        preprocess: PreprocessSpec::Identity,
                        bounds: ParameterBounds::default(),
                    },
                    TrainConfig {
                        seed,
                        ..TrainConfig::new(0.2, 50)
                    },
                )
            }
            Preset::FnLin { size } | Preset::FnQuad { size } => {
                let linear = matches!(self, Preset::FnLin { .. });
                let (function, step, lambda, epsilon, eta) = match (linear, size) {
                    (true, 50) => (TargetFunction::Linear, 0.8 / 50.0, -0.3, -9.30, 0.02),
                    (true, _) => (TargetFunction::Linear, 0.8 / 150.0, -0.1, 17.63, 0.02),
                    (false, 50) => (TargetFunction::Quadratic, 1.0 / 50.0, -0.05, -2.70, 0.25),
                    (false, _) => (TargetFunction::Quadratic, 1.0 / 150.0, -0.0167, -4.23, 0.25),
                };
                mark(
                    &[
                        "datasets.train.function",
                        "datasets.train.samples",
                        "datasets.train.domain",
                        "model.preprocess",
                        "model.lambda",
                        "model.epsilon",
                        "training.eta",
                        "training.epochs",
                    ],
                    Published,
                );
                mark(&["datasets.train.sampling"], Ours);
                (
                    DataConfig {
                        train: DataSource::Function {
                            function,
                            samples: 20,
                            lo: 0.0,
                            hi: 1.0,
                            sampling: Sampling::Grid,
                        },
                        test: None,
                    },
                    ModelConfig {
                        lambda,
                        epsilon: EpsilonSetting::Pinned { value: epsilon },
                        preprocess: PreprocessSpec::uniform_offset(1, step, size),
                        bounds: ParameterBounds::default(),
                    },
                    TrainConfig {
                        seed,
                        ..TrainConfig::new(eta, 200)
                    },
                )
            }
            Preset::Bas => {
                mark(
                    &[
                        "datasets.train.size",
                        "datasets.train.samples",
                        "datasets.test.samples",
                        "model.lambda",
                        "model.epsilon",
                        "model.preprocess",
                        "training.eta",
                        "training.epochs",
                    ],
                    Published,
                );
                mark(&["datasets.train.options"], Ours);
                (
                    DataConfig {
                        train: DataSource::Bas {
                            size: 12,
                            samples: 80,
                            seed,
                            options: BasOptions::default(),
                        },
                        test: Some(DataSource::Bas {
                            size: 12,
                            samples: 80,
                            seed: seed.wrapping_add(1),
                            options: BasOptions::default(),
                        }),
                    },
                    ModelConfig {
                        lambda: -0.3,
                        epsilon: EpsilonSetting::FromData,
                        preprocess: PreprocessSpec::Identity,
                        bounds: ParameterBounds::default(),
                    },
                    TrainConfig {
                        seed,
                        ..TrainConfig::new(0.02, 8)
                    },
                )
            }
        };
        RunConfig {
            name: self.name(),
            checkpoint_every: 0,
            datasets,
            model,
            training,
            solvers: BackendSpec::simulated_annealing(),
            provenance,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        read_toml(path)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_toml(self, path)
    }

    /// Replaces the solver backend, recording the override.
    pub fn set_backend(&mut self, backend: BackendSpec) {
        self.solvers = backend;
        self.provenance
            .insert("solvers.name".into(), Provenance::User);
    }

    /// Builds the untrained model for this configuration (ε still unresolved
    /// when it is derived from data).
    pub fn initial_state(&self, input_dim: usize) -> Result<ModelState> {
        let epsilon = match self.model.epsilon {
            EpsilonSetting::Pinned { value } => value,
            EpsilonSetting::FromData => 0.0,
        };
        Ok(ModelState::complete(
            input_dim,
            self.model.preprocess.clone(),
            self.model.lambda,
            epsilon,
        )?
        .with_bounds(self.model.bounds))
    }
}

/// Everything produced by [`run`].
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: TrainReport,
    pub train: Dataset,
    pub test: Option<Dataset>,
    /// The offset the model started from.
    pub epsilon: f64,
}

/// Trains according to `config`.
pub fn run<O: TrainObserver + ?Sized>(config: &RunConfig, observer: &mut O) -> Result<RunOutcome> {
    let machine = config.solvers.build()?;
    run_with_machine(config, machine.as_ref(), observer)
}

pub fn run_with_machine<M: IsingMachine + ?Sized, O: TrainObserver + ?Sized>(
    config: &RunConfig,
    machine: &M,
    observer: &mut O,
) -> Result<RunOutcome> {
    let train = config.datasets.train.load()?;
    let test = config
        .datasets
        .test
        .as_ref()
        .map(DataSource::load)
        .transpose()?;
    let mut state = config.initial_state(train.input_dim())?;
    if state.total_spins() > EXACT_MAX_SPINS && machine.is_exact() {
        // Fail before any data-dependent work.
        return Err(Error::Capacity {
            n: state.total_spins(),
            max: EXACT_MAX_SPINS,
        });
    }
    if config.model.epsilon == EpsilonSetting::FromData {
        state.epsilon = epsilon_init(
            &train,
            config.model.lambda,
            &state,
            machine,
            config.training.seed,
        )?;
    }
    let epsilon = state.epsilon;
    log::info!(
        "{}: {} samples x {} features, {} spins, {} couplings, lambda={}, epsilon={}",
        config.name,
        train.len(),
        train.input_dim(),
        state.total_spins(),
        state.couplings().len(),
        state.lambda,
        epsilon
    );
    let report = train_observed(
        &train,
        state,
        &config.training,
        machine,
        test.as_ref(),
        observer,
    )?;
    Ok(RunOutcome {
        report,
        train,
        test,
        epsilon,
    })
}

pub const METRICS_HEADER: &str = "epoch,train_mse,test_mse,accuracy,mean_step";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One metrics CSV row; `accuracy` is the training accuracy when labels exist.
pub fn metrics_row(r: &EpochRecord) -> String {
    format!(
        "{},{},{},{},{}",
        r.epoch,
        r.train_mse,
        opt(r.test_mse),
        opt(r.train_accuracy),
        r.mean_step
    )
}

/// Streams metrics rows and periodic checkpoints to an output directory.
pub struct RunWriter {
    dir: PathBuf,
    metrics: BufWriter<File>,
    backend: BackendSpec,
    checkpoint_every: usize,
}

impl RunWriter {
    pub fn create(dir: &Path, backend: BackendSpec, checkpoint_every: usize) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(OutputPaths::METRICS);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut metrics = BufWriter::new(file);
        writeln!(metrics, "{METRICS_HEADER}").map_err(|e| Error::io(&path, e))?;
        Ok(RunWriter {
            dir: dir.to_path_buf(),
            metrics,
            backend,
            checkpoint_every,
        })
    }

    pub fn finish(mut self) -> Result<()> {
        let path = self.dir.join(OutputPaths::METRICS);
        self.metrics.flush().map_err(|e| Error::io(path, e))
    }
}

impl TrainObserver for RunWriter {
    fn on_epoch(&mut self, record: &EpochRecord, state: &ModelState) -> Result<()> {
        let path = self.dir.join(OutputPaths::METRICS);
        writeln!(self.metrics, "{}", metrics_row(record)).map_err(|e| Error::io(&path, e))?;
        self.metrics.flush().map_err(|e| Error::io(&path, e))?;
        let done = record.epoch + 1;
        if self.checkpoint_every > 0 && done % self.checkpoint_every == 0 {
            let cp = self.dir.join(format!("checkpoint-{done:04}.toml"));
            Checkpoint::new(state, self.backend.clone(), done).save(&cp)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputPaths {
    pub metrics: PathBuf,
    pub checkpoint: PathBuf,
    pub config: PathBuf,
}

impl OutputPaths {
    pub const METRICS: &'static str = "metrics.csv";
    pub const CHECKPOINT: &'static str = "model.toml";
    pub const CONFIG: &'static str = "config.toml";
    pub const MANIFEST: &'static str = "manifest.toml";

    pub fn in_dir(dir: &Path) -> Self {
        OutputPaths {
            metrics: dir.join(Self::METRICS),
            checkpoint: dir.join(Self::CHECKPOINT),
            config: dir.join(Self::CONFIG),
        }
    }
}

/// Record of a finished run; replaying `config` reproduces it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub code_version: String,
    pub backend: BackendSpec,
    pub training_seed: u64,
    pub epsilon_used: f64,
    pub solver_calls: usize,
    pub outputs: OutputPaths,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub config: RunConfig,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        read_toml(path)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_toml(self, path)
    }
}

/// Trains and writes `metrics.csv`, `model.toml`, `config.toml` and
/// `manifest.toml` into `dir`.
pub fn run_to_dir(config: &RunConfig, dir: &Path) -> Result<(RunOutcome, RunManifest)> {
    let machine = config.solvers.build()?;
    let mut writer = RunWriter::create(dir, machine.spec(), config.checkpoint_every)?;
    let outcome = run_with_machine(config, machine.as_ref(), &mut writer)?;
    writer.finish()?;

    let outputs = OutputPaths::in_dir(dir);
    let epochs = outcome.report.records.last().map_or(0, |r| r.epoch + 1);
    Checkpoint::new(&outcome.report.final_state, machine.spec(), epochs)
        .save(&outputs.checkpoint)?;
    config.save(&outputs.config)?;

    let mut notes = Vec::new();
    if config.name == "bas" && !machine.is_exact() {
        notes.push(
            "bars-and-stripes runs use simulated annealing in place of quantum annealing hardware"
                .to_string(),
        );
    }
    if let (Some(test), train) = (&outcome.test, &outcome.train) {
        notes.push(format!(
            "{} of {} test inputs also occur in the training set",
            test.overlap(train),
            test.len()
        ));
    }
    let manifest = RunManifest {
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        backend: machine.spec(),
        training_seed: config.training.seed,
        epsilon_used: outcome.epsilon,
        solver_calls: outcome.report.solver_calls,
        outputs,
        notes,
        config: config.clone(),
    };
    manifest.save(&dir.join(OutputPaths::MANIFEST))?;
    Ok((outcome, manifest))
}

/// Re-runs a manifest's config into `dir`.
pub fn replay(manifest: &RunManifest, dir: &Path) -> Result<(RunOutcome, RunManifest)> {
    run_to_dir(&manifest.config, dir)
}

/// Per-epoch mean and spread of the training loss across runs.
pub fn aggregate_losses(runs: &[TrainReport]) -> Vec<MeanStd> {
    let epochs = runs.iter().map(|r| r.records.len()).min().unwrap_or(0);
    (0..epochs)
        .map(|k| {
            let v: Vec<f64> = runs.iter().map(|r| r.records[k].train_mse).collect();
            MeanStd::of(&v).expect("at least one run")
        })
        .collect()
}

/// Trailing moving average with window `w` (length `len - w + 1`).
pub fn moving_average(values: &[f64], w: usize) -> Vec<f64> {
    if w == 0 || values.len() < w {
        return Vec::new();
    }
    values
        .windows(w)
        .map(|s| s.iter().sum::<f64>() / w as f64)
        .collect()
}

/// Model output over an evenly spaced grid, paired with a reference function.
pub fn sweep<M: IsingMachine + ?Sized>(
    state: &ModelState,
    function: TargetFunction,
    (lo, hi): (f64, f64),
    points: usize,
    machine: &M,
    seed: u64,
    execution: Execution,
) -> Result<Vec<(f64, f64, f64)>> {
    let xs = grid(lo, hi, points);
    execution.try_map(xs.len(), |a| {
        let x = xs[a];
        let p = state.predict(
            &[x],
            machine,
            crate::numeric::derive_seed(seed, &[3, a as u64]),
        )?;
        Ok((x, function.eval(x), p.value))
    })
}

/// Number of independent datasets in the random-data reproduction.
pub const RANDOM_REPEATS: usize = 30;

/// Files written by [`reproduce`], relative to its output directory.
#[derive(Debug, Clone, Default)]
pub struct ReproduceSummary {
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
}

/// Runs a preset end to end and writes plot-ready CSV tables.
pub fn reproduce(
    preset: Preset,
    seed: u64,
    backend: Option<BackendSpec>,
    dir: &Path,
    execution: Execution,
) -> Result<ReproduceSummary> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut summary = ReproduceSummary::default();
    let configure = |s: u64| {
        let mut cfg = preset.config(s);
        if let Some(b) = &backend {
            cfg.set_backend(b.clone());
        }
        cfg
    };

    match preset {
        Preset::Random => {
            let attempts = execution.try_map(RANDOM_REPEATS, |i| {
                let cfg = configure(seed.wrapping_add(i as u64));
                match run_to_dir(&cfg, &dir.join(format!("run-{i:02}"))) {
                    Ok((o, _)) => Ok(Ok(o.report)),
                    Err(Error::Train(e)) if matches!(*e, TrainError::Diverged { .. }) => {
                        Ok(Err((i, e.to_string())))
                    }
                    Err(e) => Err(e),
                }
            })?;
            let mut runs = Vec::with_capacity(attempts.len());
            for attempt in attempts {
                match attempt {
                    Ok(report) => runs.push(report),
                    Err((i, msg)) => summary
                        .lines
                        .push(format!("run {i:02} left out of the aggregate: {msg}")),
                }
            }
            if runs.is_empty() {
                return Err(Error::InvalidConfig(
                    "every random-data run diverged".into(),
                ));
            }
            let agg = aggregate_losses(&runs);
            let mut text = String::from("epoch,mean_mse,std_mse,runs\n");
            for (k, m) in agg.iter().enumerate() {
                let _ = writeln!(text, "{k},{},{},{}", m.mean, m.std, runs.len());
            }
            let path = write_file(dir, "loss_aggregate.csv", &text)?;
            summary.files.push(path);
            if let (Some(first), Some(last)) = (agg.first(), agg.last()) {
                summary.lines.push(format!(
                    "mean MSE over {} datasets: epoch 0 {:.4} (std {:.4}) -> epoch {} {:.4} (std {:.4})",
                    runs.len(),
                    first.mean,
                    first.std,
                    agg.len() - 1,
                    last.mean,
                    last.std
                ));
            }
        }
        Preset::FnLin { .. } | Preset::FnQuad { .. } => {
            let cfg = configure(seed);
            let run_dir = dir.join("run");
            let (outcome, _) = run_to_dir(&cfg, &run_dir)?;
            summary.files.push(run_dir.join(OutputPaths::METRICS));
            let function = match preset {
                Preset::FnLin { .. } => TargetFunction::Linear,
                _ => TargetFunction::Quadratic,
            };
            let machine = cfg.solvers.build()?;
            let rows = sweep(
                &outcome.report.final_state,
                function,
                (0.0, 1.0),
                50,
                machine.as_ref(),
                seed,
                execution,
            )?;
            let mut text = String::from("x,target,model\n");
            for (x, y, f) in &rows {
                let _ = writeln!(text, "{x},{y},{f}");
            }
            summary.files.push(write_file(dir, "sweep.csv", &text)?);
            let max_err = rows
                .iter()
                .map(|(_, y, f)| (y - f).abs())
                .fold(0.0, f64::max);
            let recs = &outcome.report.records;
            summary.lines.push(format!(
                "{}: MSE {:.5} -> {:.5} over {} epochs; max |F - f| on grid {:.4}",
                cfg.name,
                recs[0].train_mse,
                recs[recs.len() - 1].train_mse,
                recs.len(),
                max_err
            ));
        }
        Preset::Bas => {
            let cfg = configure(seed);
            let run_dir = dir.join("run");
            let (outcome, manifest) = run_to_dir(&cfg, &run_dir)?;
            summary.files.push(run_dir.join(OutputPaths::METRICS));
            let recs = &outcome.report.records;

            let mut outputs = String::from("epoch,set,label,mean,std\n");
            let mut loss = String::from("epoch,train_mse,test_mse\n");
            let mut acc = String::from("epoch,train_accuracy,test_accuracy\n");
            for r in recs {
                for (set, classes) in [("train", r.train_classes), ("test", r.test_classes)] {
                    let Some(c) = classes else { continue };
                    for (label, stats) in [("bars", c.bars), ("stripes", c.stripes)] {
                        if let Some(s) = stats {
                            let _ =
                                writeln!(outputs, "{},{set},{label},{},{}", r.epoch, s.mean, s.std);
                        }
                    }
                }
                let _ = writeln!(loss, "{},{},{}", r.epoch, r.train_mse, opt(r.test_mse));
                let _ = writeln!(
                    acc,
                    "{},{},{}",
                    r.epoch,
                    opt(r.train_accuracy),
                    opt(r.test_accuracy)
                );
            }
            summary
                .files
                .push(write_file(dir, "class_outputs.csv", &outputs)?);
            summary.files.push(write_file(dir, "loss.csv", &loss)?);
            summary.files.push(write_file(dir, "accuracy.csv", &acc)?);
            let last = &recs[recs.len() - 1];
            summary.lines.push(format!(
                "bas: train accuracy {:.3}, test accuracy {:.3} at epoch {}",
                last.train_accuracy.unwrap_or(f64::NAN),
                last.test_accuracy.unwrap_or(f64::NAN),
                last.epoch
            ));
            summary.lines.extend(manifest.notes);
        }
    }
    Ok(summary)
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
