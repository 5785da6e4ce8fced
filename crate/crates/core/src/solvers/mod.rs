//! Ising machines: anything mapping `(θ, Γ)` to a low-energy spin
//! configuration and its energy.
//!
//! Two backends ship with the crate: [`ExactSolver`] (exhaustive search,
//! `n <= 24`) and [`SimulatedAnnealing`] (Metropolis single-spin-flip with
//! geometric cooling). Both recompute the reported energy from the returned
//! configuration, so `result.energy == energy(problem, &result.configuration)`
//! holds bit-for-bit.

mod anneal;
mod exact;

use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use anneal::{sa_solve, AnnealSchedule, SimulatedAnnealing};
pub use exact::{exact_solve, ExactSolver, EXACT_MAX_SPINS};

use crate::error::{Error, Result};
use crate::ising::{IsingProblem, SpinConfiguration};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveMeta {
    pub backend: String,
    pub seed: u64,
    #[serde(with = "duration_secs")]
    pub wall_time: Duration,
}

/// Output of an Ising machine.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveResult {
    pub configuration: SpinConfiguration,
    pub energy: f64,
    pub meta: SolveMeta,
}

/// Equality ignores wall time, which is the only non-reproducible field.
impl PartialEq for SolveResult {
    fn eq(&self, other: &Self) -> bool {
        self.configuration == other.configuration
            && self.energy.to_bits() == other.energy.to_bits()
            && self.meta.backend == other.meta.backend
            && self.meta.seed == other.meta.seed
    }
}

impl SolveResult {
    pub(crate) fn new(
        problem: &IsingProblem,
        configuration: SpinConfiguration,
        backend: &str,
        seed: u64,
        wall_time: Duration,
    ) -> Self {
        let energy = problem.energy_of(configuration.spins());
        SolveResult {
            configuration,
            energy,
            meta: SolveMeta {
                backend: backend.to_string(),
                seed,
                wall_time,
            },
        }
    }
}

/// Behavioural contract every backend satisfies:
///
/// * the reported energy is the energy of the reported configuration;
/// * the same `(problem, seed)` always yields the same result.
pub trait IsingMachine: Send + Sync {
    fn name(&self) -> &'static str;

    fn solve(&self, problem: &IsingProblem, seed: u64) -> Result<SolveResult>;

    /// True when results are global minima regardless of seed.
    fn is_exact(&self) -> bool {
        false
    }

    /// The configuration this backend was built from.
    fn spec(&self) -> BackendSpec;
}

impl<M: IsingMachine + ?Sized> IsingMachine for Box<M> {
    fn name(&self) -> &'static str {
        (**self).name()
    }

    fn solve(&self, problem: &IsingProblem, seed: u64) -> Result<SolveResult> {
        (**self).solve(problem, seed)
    }

    fn is_exact(&self) -> bool {
        (**self).is_exact()
    }

    fn spec(&self) -> BackendSpec {
        (**self).spec()
    }
}

pub type BackendParams = BTreeMap<String, f64>;

pub const REGISTERED_BACKENDS: &[&str] = &[ExactSolver::NAME, SimulatedAnnealing::NAME];

/// Serializable backend selection: a registered name plus numeric parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendSpec {
    pub name: String,
    #[serde(default)]
    pub params: BackendParams,
}

impl BackendSpec {
    pub fn new(name: impl Into<String>) -> Self {
        BackendSpec {
            name: name.into(),
            params: BackendParams::new(),
        }
    }

    pub fn exact() -> Self {
        Self::new(ExactSolver::NAME)
    }

    pub fn simulated_annealing() -> Self {
        Self::new(SimulatedAnnealing::NAME)
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn build(&self) -> Result<Box<dyn IsingMachine>> {
        make_backend(&self.name, &self.params)
    }
}

/// Instantiates a registered backend, rejecting unknown names and keys.
pub fn make_backend(name: &str, params: &BackendParams) -> Result<Box<dyn IsingMachine>> {
    match name {
        ExactSolver::NAME => Ok(Box::new(ExactSolver::from_params(params)?)),
        SimulatedAnnealing::NAME => Ok(Box::new(SimulatedAnnealing::from_params(params)?)),
        _ => Err(Error::UnknownBackend {
            name: name.to_string(),
            registered: REGISTERED_BACKENDS.join(", "),
        }),
    }
}

pub(crate) fn reject_unknown(backend: &str, params: &BackendParams, known: &[&str]) -> Result<()> {
    match params.keys().find(|k| !known.contains(&k.as_str())) {
        Some(key) => Err(Error::UnknownBackendParam {
            backend: backend.to_string(),
            key: key.clone(),
        }),
        None => Ok(()),
    }
}

pub(crate) fn count_param(params: &BackendParams, key: &str, default: usize) -> Result<usize> {
    match params.get(key) {
        None => Ok(default),
        Some(&v) if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 => Ok(v as usize),
        Some(&v) => Err(Error::InvalidBackendParam {
            key: key.to_string(),
            value: v,
            reason: "expected a positive integer",
        }),
    }
}

mod duration_secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        Duration::try_from_secs_f64(secs).map_err(serde::de::Error::custom)
    }
}
