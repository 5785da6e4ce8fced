//! TOML persistence for trained models and standalone Ising problems.
//!
//! Floats are written in shortest round-trip form, so a saved model reloads
//! bit-identically.

use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::{IsingProblem, ParameterBounds, Topology};
use crate::model::{ModelState, PreprocessSpec};
use crate::solvers::BackendSpec;

pub const CHECKPOINT_FORMAT: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: u32,
    /// Epochs completed when the checkpoint was written.
    #[serde(default)]
    pub epochs_completed: usize,
    pub model: ModelDocument,
    pub backend: BackendSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub input_dim: usize,
    pub lambda: f64,
    pub epsilon: f64,
    pub preprocess: PreprocessSpec,
    #[serde(default, skip_serializing_if = "ParameterBounds::is_unbounded")]
    pub bounds: ParameterBounds,
    pub spins: usize,
    /// `(i, j, Γ_ij)` for every edge.
    pub edges: Vec<(usize, usize, f64)>,
}

impl From<&ModelState> for ModelDocument {
    fn from(m: &ModelState) -> Self {
        ModelDocument {
            input_dim: m.input_dim(),
            lambda: m.lambda,
            epsilon: m.epsilon,
            preprocess: m.preprocess().clone(),
            bounds: *m.bounds(),
            spins: m.total_spins(),
            edges: m
                .topology()
                .edges()
                .iter()
                .zip(m.couplings())
                .map(|(&(i, j), &w)| (i, j, w))
                .collect(),
        }
    }
}

impl ModelDocument {
    pub fn into_state(self) -> Result<ModelState> {
        let topology = Topology::new(self.spins, self.edges.iter().map(|&(i, j, _)| (i, j)))?;
        let mut couplings = vec![0.0; topology.num_edges()];
        for &(i, j, w) in &self.edges {
            couplings[topology.edge_index(i, j).expect("edge present")] = w;
        }
        let state = ModelState::new(
            self.input_dim,
            self.preprocess,
            topology,
            couplings,
            self.lambda,
            self.epsilon,
        )?;
        Ok(state.with_bounds(self.bounds))
    }
}

impl Checkpoint {
    pub fn new(state: &ModelState, backend: BackendSpec, epochs_completed: usize) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT,
            epochs_completed,
            model: state.into(),
            backend,
        }
    }

    pub fn state(&self) -> Result<ModelState> {
        self.model.clone().into_state()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_toml(self, path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let cp: Checkpoint = read_toml(path)?;
        if cp.format != CHECKPOINT_FORMAT {
            return Err(Error::Document(format!(
                "{}: unsupported checkpoint format {}",
                path.display(),
                cp.format
            )));
        }
        Ok(cp)
    }
}

/// Flat record for a single problem: `n`, `biases`, and `(i, j, Γ_ij)` edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDocument {
    pub n: usize,
    pub biases: Vec<f64>,
    #[serde(default)]
    pub edges: Vec<(usize, usize, f64)>,
}

impl From<&IsingProblem> for ProblemDocument {
    fn from(p: &IsingProblem) -> Self {
        ProblemDocument {
            n: p.num_spins(),
            biases: p.biases().to_vec(),
            edges: p.weighted_edges().collect(),
        }
    }
}

impl ProblemDocument {
    pub fn into_problem(self) -> Result<IsingProblem> {
        if self.biases.len() != self.n {
            return Err(Error::DimensionMismatch {
                what: "biases",
                expected: self.n,
                actual: self.biases.len(),
            });
        }
        IsingProblem::from_edges(self.biases, &self.edges)
    }
}

pub fn to_toml_string<T: Serialize>(value: &T) -> Result<String> {
    toml::to_string(value).map_err(|e| Error::Document(e.to_string()))
}

pub fn write_toml<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = to_toml_string(value)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_toml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Document(format!("{}: {e}", path.display())))
}
