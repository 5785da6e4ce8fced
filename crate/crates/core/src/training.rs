//! Gradient-descent training where the Ising machine supplies the gradients.
//!
//! For the MSE loss `L = (1/N) Σ_a (F(θ_a) − y_a)²` and ground state `z*`,
//! `∂F/∂Γ_ij = λ z*_i z*_j` almost everywhere (the ground state is piecewise
//! constant in `Γ`), `∂F/∂λ = E(θ, Γ, z*)` and `∂F/∂ε = 1`. One epoch solves
//! every sample once with the current parameters and applies a single
//! full-batch step to `Γ`, then `λ`, then `ε`, all from the same solves.
//!
//! Every reduction over samples is exactly rounded ([`exact_sum`]), so the
//! update is independent of thread scheduling and unchanged when each sample
//! is duplicated.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datasets::{bas_accuracy, BasLabel, Dataset};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::{ModelState, Prediction};
use crate::numeric::{derive_seed, exact_mean, exact_sum};
use crate::solvers::{IsingMachine, SolveResult};

const TRAIN_STREAM: u64 = 0;
const TEST_STREAM: u64 = 1;
const EPSILON_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedPolicy {
    /// Every solver call uses the base seed.
    Fixed,
    /// Seeds derived from `(base, stream, epoch, sample)`.
    #[default]
    PerCall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub eta: f64,
    pub epochs: usize,
    #[serde(default)]
    pub update_lambda: bool,
    #[serde(default)]
    pub update_epsilon: bool,
    #[serde(default)]
    pub seed_policy: SeedPolicy,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub execution: Execution,
    /// Abort when the loss exceeds this multiple of the first epoch's loss.
    #[serde(default = "default_divergence_factor")]
    pub divergence_factor: f64,
    /// First epoch index; non-zero when resuming from a checkpoint.
    #[serde(default)]
    pub start_epoch: usize,
}

fn default_divergence_factor() -> f64 {
    1e6
}

impl TrainConfig {
    pub fn new(eta: f64, epochs: usize) -> Self {
        TrainConfig {
            eta,
            epochs,
            update_lambda: false,
            update_epsilon: false,
            seed_policy: SeedPolicy::PerCall,
            seed: 0,
            execution: Execution::Parallel,
            divergence_factor: default_divergence_factor(),
            start_epoch: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be finite and non-negative, got {}",
                self.eta
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        if self.start_epoch >= self.epochs {
            return Err(Error::InvalidConfig(format!(
                "start epoch {} is not below the epoch count {}",
                self.start_epoch, self.epochs
            )));
        }
        if self.divergence_factor.is_nan() || self.divergence_factor <= 1.0 {
            return Err(Error::InvalidConfig(
                "divergence factor must exceed 1".into(),
            ));
        }
        Ok(())
    }

    fn seed_for(&self, stream: u64, epoch: usize, sample: usize) -> u64 {
        match self.seed_policy {
            SeedPolicy::Fixed => self.seed,
            SeedPolicy::PerCall => derive_seed(self.seed, &[stream, epoch as u64, sample as u64]),
        }
    }
}

/// Machine output for one sample together with its target.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub solve: SolveResult,
    pub target: f64,
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<Self> {
        let mean = exact_mean(values)?;
        let var = exact_mean(
            &values
                .iter()
                .map(|v| (v - mean) * (v - mean))
                .collect::<Vec<_>>(),
        )?;
        Some(MeanStd {
            mean,
            std: var.sqrt(),
        })
    }
}

/// Model output statistics per BAS class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassOutputs {
    pub bars: Option<MeanStd>,
    pub stripes: Option<MeanStd>,
}

impl ClassOutputs {
    pub fn of(outputs: &[f64], labels: &[BasLabel]) -> Self {
        let pick = |l: BasLabel| {
            let v: Vec<f64> = outputs
                .iter()
                .zip(labels)
                .filter(|(_, &x)| x == l)
                .map(|(&f, _)| f)
                .collect();
            MeanStd::of(&v)
        };
        ClassOutputs {
            bars: pick(BasLabel::Bars),
            stripes: pick(BasLabel::Stripes),
        }
    }
}

/// Metrics of one epoch, measured with the parameters in effect *before*
/// that epoch's update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_mse: f64,
    pub test_mse: Option<f64>,
    pub train_accuracy: Option<f64>,
    pub test_accuracy: Option<f64>,
    /// Mean `|δΓ_ij|` over all edges.
    pub mean_step: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub train_classes: Option<ClassOutputs>,
    pub test_classes: Option<ClassOutputs>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub records: Vec<EpochRecord>,
    /// Parameters after the last update: the trained model.
    pub final_state: ModelState,
    pub solver_calls: usize,
    pub seed: u64,
    pub seed_policy: SeedPolicy,
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Setup(Error),
    #[error("solver failed during epoch {epoch}: {source}")]
    Solver {
        epoch: usize,
        #[source]
        source: Error,
        /// State after the last completed epoch; resume with `start_epoch = epoch`.
        checkpoint: Box<ModelState>,
        records: Vec<EpochRecord>,
    },
    #[error(
        "loss diverged at epoch {epoch}: {loss} exceeds {factor} x initial loss {initial}; try a smaller learning rate"
    )]
    Diverged {
        epoch: usize,
        loss: f64,
        initial: f64,
        factor: f64,
        checkpoint: Box<ModelState>,
        records: Vec<EpochRecord>,
    },
}

/// Called after every completed epoch with the updated state.
pub trait TrainObserver {
    fn on_epoch(&mut self, record: &EpochRecord, state: &ModelState) -> Result<()>;
}

impl TrainObserver for () {
    fn on_epoch(&mut self, _: &EpochRecord, _: &ModelState) -> Result<()> {
        Ok(())
    }
}

impl<F: FnMut(&EpochRecord, &ModelState) -> Result<()>> TrainObserver for F {
    fn on_epoch(&mut self, record: &EpochRecord, state: &ModelState) -> Result<()> {
        self(record, state)
    }
}

/// `(1/N) Σ (F_a − y_a)²`.
pub fn mse_loss(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            what: "predictions",
            expected: targets.len(),
            actual: predictions.len(),
        });
    }
    if targets.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let sq: Vec<f64> = predictions
        .iter()
        .zip(targets)
        .map(|(f, y)| (f - y) * (f - y))
        .collect();
    Ok(exact_mean(&sq).expect("non-empty"))
}

fn check_dims(dataset: &Dataset, state: &ModelState) -> Result<()> {
    if dataset.input_dim() != state.input_dim() {
        return Err(Error::DimensionMismatch {
            what: "dataset input dimension",
            expected: state.input_dim(),
            actual: dataset.input_dim(),
        });
    }
    Ok(())
}

/// Offset from one sampling round: `ε = (1/N) Σ_a [y_a − F(θ_a | Γ, λ, 0)]`.
///
/// With an exact machine and all-zero couplings the result is cross-checked
/// against [`epsilon_closed_form`]; a disagreement is an error.
pub fn epsilon_init<M: IsingMachine + ?Sized>(
    dataset: &Dataset,
    lambda: f64,
    state: &ModelState,
    machine: &M,
    seed: u64,
) -> Result<f64> {
    check_dims(dataset, state)?;
    let mut probe = state.clone();
    probe.lambda = lambda;
    probe.epsilon = 0.0;
    let gaps = (0..dataset.len())
        .map(|a| {
            let p = probe.predict(
                dataset.input(a),
                machine,
                derive_seed(seed, &[EPSILON_STREAM, a as u64]),
            )?;
            Ok(dataset.targets()[a] - p.value)
        })
        .collect::<Result<Vec<f64>>>()?;
    let sampled = exact_mean(&gaps).ok_or(Error::EmptyDataset)?;
    if machine.is_exact() && state.couplings().iter().all(|&c| c == 0.0) {
        let closed_form = epsilon_closed_form(dataset, lambda, state)?;
        if sampled.to_bits() != closed_form.to_bits() {
            return Err(Error::EpsilonMismatch {
                sampled,
                closed_form,
            });
        }
    }
    Ok(sampled)
}

/// Zero-coupling shortcut: `ε = (1/N) Σ_a [y_a + λ Σ_i |θ_a,i|]` over the
/// preprocessed (and clamped) biases. Ignores the model's couplings.
pub fn epsilon_closed_form(dataset: &Dataset, lambda: f64, state: &ModelState) -> Result<f64> {
    check_dims(dataset, state)?;
    let terms = (0..dataset.len())
        .map(|a| {
            let problem = state.problem_for(dataset.input(a))?;
            let l1 = problem.biases().iter().fold(0.0, |acc, t| acc + t.abs());
            Ok(dataset.targets()[a] + lambda * l1)
        })
        .collect::<Result<Vec<f64>>>()?;
    exact_mean(&terms).ok_or(Error::EmptyDataset)
}

fn residuals(state: &ModelState, batch: &[Outcome]) -> Vec<f64> {
    batch
        .iter()
        .map(|o| state.output(o.solve.energy) - o.target)
        .collect()
}

/// Coupling update `Γ_ij − η (2λ/N) Σ_a (λE₀_a + ε − y_a) z*_i z*_j`,
/// clamped to the model's bounds. Returns the new coupling vector.
pub fn gamma_step(state: &ModelState, batch: &[Outcome], eta: f64) -> Result<Vec<f64>> {
    if batch.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for o in batch {
        if o.solve.configuration.len() != state.total_spins() {
            return Err(Error::DimensionMismatch {
                what: "solver configuration",
                expected: state.total_spins(),
                actual: o.solve.configuration.len(),
            });
        }
    }
    let r = residuals(state, batch);
    let coef = eta * (2.0 * state.lambda);
    let n = batch.len() as f64;
    let mut terms = vec![0.0; batch.len()];
    let updated = state
        .topology()
        .edges()
        .iter()
        .zip(state.couplings())
        .map(|(&(i, j), &g)| {
            for (t, (o, &ra)) in terms.iter_mut().zip(batch.iter().zip(&r)) {
                *t = ra * o.solve.configuration.product(i, j);
            }
            let mean = exact_sum(terms.iter().copied()) / n;
            state.bounds().clamp_coupling(g - coef * mean)
        })
        .collect();
    Ok(updated)
}

/// `λ − η (2/N) Σ_a r_a E(θ_a, Γ, z*_a)` and `ε − η (2/N) Σ_a r_a`, each
/// applied only when enabled in `config`.
pub fn lambda_epsilon_step(
    state: &ModelState,
    batch: &[Outcome],
    eta: f64,
    config: &TrainConfig,
) -> (f64, f64) {
    if batch.is_empty() {
        return (state.lambda, state.epsilon);
    }
    let r = residuals(state, batch);
    let coef = eta * 2.0;
    let lambda = if config.update_lambda {
        let terms: Vec<f64> = r
            .iter()
            .zip(batch)
            .map(|(ra, o)| ra * o.solve.energy)
            .collect();
        state.lambda - coef * exact_mean(&terms).expect("non-empty")
    } else {
        state.lambda
    };
    let epsilon = if config.update_epsilon {
        state.epsilon - coef * exact_mean(&r).expect("non-empty")
    } else {
        state.epsilon
    };
    (lambda, epsilon)
}

/// Model outputs for every input of `data`; sample `a` is solved with seed
/// `derive_seed(seed, [a])`.
pub fn predict_all<M: IsingMachine + ?Sized>(
    state: &ModelState,
    data: &Dataset,
    machine: &M,
    seed: u64,
    execution: Execution,
) -> Result<Vec<f64>> {
    check_dims(data, state)?;
    execution.try_map(data.len(), |a| {
        state
            .predict(data.input(a), machine, derive_seed(seed, &[a as u64]))
            .map(|p| p.value)
    })
}

struct Evaluation {
    outcomes: Vec<Outcome>,
    outputs: Vec<f64>,
}

fn evaluate<M: IsingMachine + ?Sized>(
    state: &ModelState,
    data: &Dataset,
    machine: &M,
    config: &TrainConfig,
    stream: u64,
    epoch: usize,
) -> Result<Evaluation> {
    let preds: Vec<Prediction> = config.execution.try_map(data.len(), |a| {
        state.predict(data.input(a), machine, config.seed_for(stream, epoch, a))
    })?;
    let outputs = preds.iter().map(|p| p.value).collect();
    let outcomes = preds
        .into_iter()
        .zip(data.targets())
        .map(|(p, &target)| Outcome {
            solve: p.solve,
            target,
        })
        .collect();
    Ok(Evaluation { outcomes, outputs })
}

/// Runs the training loop without an observer.
pub fn train<M: IsingMachine + ?Sized>(
    dataset: &Dataset,
    state: ModelState,
    config: &TrainConfig,
    machine: &M,
    test_set: Option<&Dataset>,
) -> Result<TrainReport, TrainError> {
    train_observed(dataset, state, config, machine, test_set, &mut ())
}

/// Full-batch training for epochs `config.start_epoch..config.epochs`.
pub fn train_observed<M: IsingMachine + ?Sized, O: TrainObserver + ?Sized>(
    dataset: &Dataset,
    mut state: ModelState,
    config: &TrainConfig,
    machine: &M,
    test_set: Option<&Dataset>,
    observer: &mut O,
) -> Result<TrainReport, TrainError> {
    config.validate().map_err(TrainError::Setup)?;
    check_dims(dataset, &state).map_err(TrainError::Setup)?;
    if let Some(test) = test_set {
        check_dims(test, &state).map_err(TrainError::Setup)?;
    }

    let mut records: Vec<EpochRecord> = Vec::with_capacity(config.epochs - config.start_epoch);
    let mut solver_calls = 0;
    let mut initial_loss = None;

    for epoch in config.start_epoch..config.epochs {
        let solver_failure =
            |source: Error, state: &ModelState, records: &[EpochRecord]| TrainError::Solver {
                epoch,
                source,
                checkpoint: Box::new(state.clone()),
                records: records.to_vec(),
            };
        let train_eval = evaluate(&state, dataset, machine, config, TRAIN_STREAM, epoch)
            .map_err(|e| solver_failure(e, &state, &records))?;
        solver_calls += dataset.len();
        let train_mse =
            mse_loss(&train_eval.outputs, dataset.targets()).map_err(TrainError::Setup)?;

        let (test_mse, test_accuracy, test_classes) = match test_set {
            Some(test) => {
                let eval = evaluate(&state, test, machine, config, TEST_STREAM, epoch)
                    .map_err(|e| solver_failure(e, &state, &records))?;
                solver_calls += test.len();
                let mse = mse_loss(&eval.outputs, test.targets()).map_err(TrainError::Setup)?;
                let labels = test.labels();
                (
                    Some(mse),
                    labels.map(|l| bas_accuracy(&eval.outputs, l)),
                    labels.map(|l| ClassOutputs::of(&eval.outputs, l)),
                )
            }
            None => (None, None, None),
        };

        let initial = *initial_loss.get_or_insert(train_mse);
        if initial > 0.0 && (train_mse.is_nan() || train_mse > config.divergence_factor * initial) {
            return Err(TrainError::Diverged {
                epoch,
                loss: train_mse,
                initial,
                factor: config.divergence_factor,
                checkpoint: Box::new(state),
                records,
            });
        }

        let couplings =
            gamma_step(&state, &train_eval.outcomes, config.eta).map_err(TrainError::Setup)?;
        let (lambda, epsilon) =
            lambda_epsilon_step(&state, &train_eval.outcomes, config.eta, config);
        let steps: Vec<f64> = couplings
            .iter()
            .zip(state.couplings())
            .map(|(new, old)| (new - old).abs())
            .collect();
        let mean_step = exact_mean(&steps).unwrap_or(0.0);

        let labels = dataset.labels();
        let record = EpochRecord {
            epoch,
            train_mse,
            test_mse,
            train_accuracy: labels.map(|l| bas_accuracy(&train_eval.outputs, l)),
            test_accuracy,
            mean_step,
            lambda: state.lambda,
            epsilon: state.epsilon,
            train_classes: labels.map(|l| ClassOutputs::of(&train_eval.outputs, l)),
            test_classes,
        };

        state.set_couplings(couplings).map_err(TrainError::Setup)?;
        state.lambda = lambda;
        state.epsilon = epsilon;
        observer
            .on_epoch(&record, &state)
            .map_err(TrainError::Setup)?;
        log::debug!("epoch {epoch}: train_mse={train_mse} mean_step={mean_step}");
        records.push(record);
    }

    Ok(TrainReport {
        records,
        final_state: state,
        solver_calls,
        seed: config.seed,
        seed_policy: config.seed_policy,
    })
}

/// Central difference versus the analytic coupling derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCheck {
    /// `[F(Γ_e + h) − F(Γ_e − h)] / 2h`
    pub numeric: f64,
    /// `λ z*_i z*_j` at the unperturbed couplings.
    pub analytic: f64,
    /// Whether the machine returned the same ground state at `Γ_e` and `Γ_e ± h`.
    /// When false the point straddles a non-differentiability and a
    /// mismatch is expected.
    pub stable: bool,
}

/// Test oracle for `∂F/∂Γ_e`. Use with an exact machine.
pub fn finite_difference_gradient<M: IsingMachine + ?Sized>(
    state: &ModelState,
    theta: &[f64],
    edge: usize,
    h: f64,
    machine: &M,
) -> Result<GradientCheck> {
    if h.is_nan() || h <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "step h must be positive, got {h}"
        )));
    }
    let Some(&(i, j)) = state.topology().edges().get(edge) else {
        return Err(Error::DimensionMismatch {
            what: "edge index bound",
            expected: state.topology().num_edges(),
            actual: edge,
        });
    };
    let shifted = |delta: f64| -> Result<Prediction> {
        let mut s = state.clone();
        let mut c = s.couplings().to_vec();
        c[edge] += delta;
        s.set_couplings(c)?;
        s.predict(theta, machine, 0)
    };
    let centre = state.predict(theta, machine, 0)?;
    let plus = shifted(h)?;
    let minus = shifted(-h)?;
    Ok(GradientCheck {
        numeric: (plus.value - minus.value) / (2.0 * h),
        analytic: state.lambda * centre.solve.configuration.product(i, j),
        stable: plus.solve.configuration == minus.solve.configuration
            && plus.solve.configuration == centre.solve.configuration,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::gen_random;
    use crate::ising::SpinConfiguration;
    use crate::model::PreprocessSpec;
    use crate::solvers::{ExactSolver, SolveMeta};
    use std::time::Duration;

    fn outcome(spins: Vec<i8>, energy: f64, target: f64) -> Outcome {
        Outcome {
            solve: SolveResult {
                configuration: SpinConfiguration::new(spins).unwrap(),
                energy,
                meta: SolveMeta {
                    backend: "test".into(),
                    seed: 0,
                    wall_time: Duration::ZERO,
                },
            },
            target,
        }
    }

    fn pair_model(lambda: f64, epsilon: f64) -> ModelState {
        ModelState::complete(2, PreprocessSpec::Identity, lambda, epsilon).unwrap()
    }

    #[test]
    fn mse_examples() {
        assert_eq!(mse_loss(&[1.0, 3.0], &[0.0, 1.0]).unwrap(), 2.5);
        assert_eq!(mse_loss(&[0.3, -2.0], &[0.3, -2.0]).unwrap(), 0.0);
        assert_eq!(mse_loss(&[-3.0], &[0.0]).unwrap(), 9.0);
        assert!(mse_loss(&[1.0], &[1.0, 2.0]).is_err());
        assert!(matches!(mse_loss(&[], &[]), Err(Error::EmptyDataset)));
    }

    #[test]
    fn gamma_step_examples() {
        // residual F − y = (1·(−1) + 0) − (−3) = 2, z0 z1 = +1
        let m = pair_model(1.0, 0.0);
        let batch = [outcome(vec![1, 1], -1.0, -3.0)];
        let g = gamma_step(&m, &batch, 0.1).unwrap();
        assert!((g[0] - (-0.4)).abs() < 1e-15, "{g:?}");

        let perfect = [outcome(vec![1, -1], -1.0, -1.0)];
        assert_eq!(gamma_step(&m, &perfect, 0.1).unwrap(), vec![0.0]);

        let flat = pair_model(0.0, 0.0);
        assert_eq!(gamma_step(&flat, &batch, 0.1).unwrap(), vec![0.0]);
    }

    #[test]
    fn lambda_epsilon_examples() {
        let m = pair_model(1.0, 0.0);
        // residual 1·(−3) + 0 − (−5) = 2, E = −3
        let batch = [outcome(vec![-1, 1], -3.0, -5.0)];
        let off = TrainConfig::new(0.1, 1);
        assert_eq!(lambda_epsilon_step(&m, &batch, 0.1, &off), (1.0, 0.0));
        let on = TrainConfig {
            update_lambda: true,
            update_epsilon: true,
            ..off
        };
        let (l, e) = lambda_epsilon_step(&m, &batch, 0.1, &on);
        assert!((l - (1.0 + 1.2)).abs() < 1e-12, "{l}");
        assert!((e - (-0.4)).abs() < 1e-15, "{e}");
    }

    #[test]
    fn epsilon_examples() {
        let exact = ExactSolver::new();
        let m = pair_model(1.0, 0.0);
        let d = Dataset::new(vec![vec![1.0, -2.0]], vec![0.0]).unwrap();
        assert_eq!(epsilon_init(&d, 1.0, &m, &exact, 0).unwrap(), 3.0);

        let m1 = ModelState::complete(1, PreprocessSpec::Identity, 1.0, 0.0).unwrap();
        let d = Dataset::new(vec![vec![1.0], vec![-1.0]], vec![0.0, 0.0]).unwrap();
        assert_eq!(epsilon_init(&d, 1.0, &m1, &exact, 0).unwrap(), 1.0);
        assert_eq!(epsilon_closed_form(&d, 1.0, &m1).unwrap(), 1.0);
    }

    #[test]
    fn epsilon_paths_agree_on_random_data() {
        let exact = ExactSolver::new();
        for seed in 0..10 {
            let d = gen_random(6, 12, -1.0, 1.0, seed).unwrap();
            let m = ModelState::complete(6, PreprocessSpec::Identity, 0.7, 0.0).unwrap();
            let a = epsilon_init(&d, -1.3, &m, &exact, seed).unwrap();
            let b = epsilon_closed_form(&d, -1.3, &m).unwrap();
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn zero_learning_rate_keeps_couplings() {
        let exact = ExactSolver::new();
        let d = gen_random(4, 6, -1.0, 1.0, 3).unwrap();
        let m = ModelState::complete(4, PreprocessSpec::Identity, 1.0, 0.5).unwrap();
        let report = train(&d, m.clone(), &TrainConfig::new(0.0, 1), &exact, None).unwrap();
        assert_eq!(report.records.len(), 1);
        assert_eq!(report.final_state, m);
        assert_eq!(report.solver_calls, 6);
    }

    #[test]
    fn solver_calls_include_test_set() {
        let exact = ExactSolver::new();
        let d = gen_random(3, 5, -1.0, 1.0, 3).unwrap();
        let t = gen_random(3, 4, -1.0, 1.0, 4).unwrap();
        let m = ModelState::complete(3, PreprocessSpec::Identity, 1.0, 0.0).unwrap();
        let r = train(&d, m, &TrainConfig::new(0.1, 3), &exact, Some(&t)).unwrap();
        assert_eq!(r.solver_calls, 3 * (5 + 4));
        assert!(r.records.iter().all(|rec| rec.test_mse.is_some()));
    }

    #[test]
    fn divergence_guard_trips() {
        let exact = ExactSolver::new();
        let d = gen_random(4, 8, -1.0, 1.0, 1).unwrap();
        let m = ModelState::complete(4, PreprocessSpec::Identity, 1.0, 0.0).unwrap();
        let cfg = TrainConfig {
            divergence_factor: 1.0 + 1e-9,
            ..TrainConfig::new(50.0, 20)
        };
        match train(&d, m, &cfg, &exact, None) {
            Err(TrainError::Diverged { epoch, records, .. }) => {
                assert!(epoch > 0);
                assert_eq!(records.len(), epoch);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    struct FailingAfter(std::sync::atomic::AtomicUsize);

    impl IsingMachine for FailingAfter {
        fn name(&self) -> &'static str {
            "failing"
        }

        fn solve(&self, problem: &crate::ising::IsingProblem, seed: u64) -> Result<SolveResult> {
            if self.0.fetch_sub(1, std::sync::atomic::Ordering::SeqCst) == 0 {
                return Err(Error::Capacity { n: 0, max: 0 });
            }
            ExactSolver::new().solve(problem, seed)
        }

        fn spec(&self) -> crate::solvers::BackendSpec {
            crate::solvers::BackendSpec::new("failing")
        }
    }

    #[test]
    fn solver_failure_returns_resumable_checkpoint() {
        let d = gen_random(3, 4, -1.0, 1.0, 2).unwrap();
        let m = ModelState::complete(3, PreprocessSpec::Identity, 1.0, 0.0).unwrap();
        let mut cfg = TrainConfig::new(0.1, 4);
        cfg.execution = Execution::Sequential;
        // fails on the 10th call: epoch 2, sample 1
        let failing = FailingAfter(9.into());
        let (checkpoint, done) = match train(&d, m.clone(), &cfg, &failing, None) {
            Err(TrainError::Solver {
                epoch,
                checkpoint,
                records,
                ..
            }) => {
                assert_eq!(epoch, 2);
                assert_eq!(records.len(), 2);
                (*checkpoint, records)
            }
            other => panic!("{other:?}"),
        };
        let full = train(&d, m, &cfg, &ExactSolver::new(), None).unwrap();
        let resumed_cfg = TrainConfig {
            start_epoch: 2,
            ..cfg
        };
        let rest = train(&d, checkpoint, &resumed_cfg, &ExactSolver::new(), None).unwrap();
        assert_eq!(&full.records[..2], &done[..]);
        assert_eq!(&full.records[2..], &rest.records[..]);
        assert_eq!(full.final_state, rest.final_state);
    }

    #[test]
    fn finite_difference_examples() {
        let exact = ExactSolver::new();
        let mut m = ModelState::complete(3, PreprocessSpec::Identity, 1.7, 0.2).unwrap();
        m.set_couplings(vec![0.3, -0.4, 0.25]).unwrap();
        let theta = [0.2, -0.5, 0.9];
        for e in 0..3 {
            let g = finite_difference_gradient(&m, &theta, e, 1e-6, &exact).unwrap();
            assert!(g.stable);
            assert!((g.numeric - g.analytic).abs() <= 1e-8 * g.analytic.abs().max(1.0));
        }
        let mut flat = m.clone();
        flat.lambda = 0.0;
        let g = finite_difference_gradient(&flat, &theta, 0, 1e-6, &exact).unwrap();
        assert_eq!((g.numeric, g.analytic), (0.0, 0.0));
    }

    #[test]
    fn finite_difference_flags_spin_flip_boundary() {
        // θ = (0.5, 0.5): with Γ = 0.5 the states (−,−) and (−,+)/(+,−) tie.
        let exact = ExactSolver::new();
        let mut m = pair_model(1.0, 0.0);
        m.set_couplings(vec![0.5]).unwrap();
        let g = finite_difference_gradient(&m, &[0.5, 0.5], 0, 1e-3, &exact).unwrap();
        assert!(!g.stable);
        assert!((g.numeric - g.analytic).abs() > 0.1);
    }
}
