//! The predictor `F(θ | Γ, λ, ε) = λ · E₀(h(θ), Γ) + ε`, where `E₀` is the
//! ground-state energy reported by an Ising machine, `h` an optional
//! hidden-spin preprocessing map and `Γ` the trainable couplings.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::{IsingProblem, ParameterBounds, Topology};
use crate::solvers::{IsingMachine, SolveResult};

/// Maps an `n`-dimensional input to the biases of `n_total` spins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PreprocessSpec {
    Identity,
    /// `(θ, θ + d, θ + 2d, …, θ + (copies-1)·d)`, so `n_total = copies · n`.
    Offset {
        step: Vec<f64>,
        copies: usize,
    },
}

impl PreprocessSpec {
    /// Offset preprocessing with the same step for every feature.
    pub fn uniform_offset(input_dim: usize, step: f64, copies: usize) -> Self {
        PreprocessSpec::Offset {
            step: vec![step; input_dim],
            copies,
        }
    }

    pub fn validate(&self, input_dim: usize) -> Result<()> {
        match self {
            PreprocessSpec::Identity => Ok(()),
            PreprocessSpec::Offset { step, copies } => {
                if *copies == 0 {
                    return Err(Error::InvalidPreprocess(
                        "offset replication count must be at least 1".into(),
                    ));
                }
                if step.len() != input_dim {
                    return Err(Error::DimensionMismatch {
                        what: "offset step",
                        expected: input_dim,
                        actual: step.len(),
                    });
                }
                for &d in step {
                    Error::finite("offset step", d)?;
                }
                Ok(())
            }
        }
    }

    pub fn total_spins(&self, input_dim: usize) -> usize {
        match self {
            PreprocessSpec::Identity => input_dim,
            PreprocessSpec::Offset { copies, .. } => copies * input_dim,
        }
    }

    pub fn apply(&self, theta: &[f64]) -> Vec<f64> {
        match self {
            PreprocessSpec::Identity => theta.to_vec(),
            PreprocessSpec::Offset { step, copies } => (0..*copies)
                .flat_map(|m| theta.iter().zip(step).map(move |(t, d)| t + m as f64 * d))
                .collect(),
        }
    }
}

/// Applies `spec` to `theta`, checking the input length against the step.
pub fn preprocess(spec: &PreprocessSpec, theta: &[f64]) -> Result<Vec<f64>> {
    if let PreprocessSpec::Offset { step, .. } = spec {
        if step.len() != theta.len() {
            return Err(Error::DimensionMismatch {
                what: "input",
                expected: step.len(),
                actual: theta.len(),
            });
        }
    }
    spec.validate(theta.len())?;
    Ok(spec.apply(theta))
}

/// Everything needed to evaluate the model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    input_dim: usize,
    preprocess: PreprocessSpec,
    topology: Arc<Topology>,
    couplings: Vec<f64>,
    pub lambda: f64,
    pub epsilon: f64,
    bounds: ParameterBounds,
}

impl ModelState {
    pub fn new(
        input_dim: usize,
        preprocess: PreprocessSpec,
        topology: Topology,
        couplings: Vec<f64>,
        lambda: f64,
        epsilon: f64,
    ) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::InvalidPreprocess(
                "input dimension must be positive".into(),
            ));
        }
        preprocess.validate(input_dim)?;
        let total = preprocess.total_spins(input_dim);
        if topology.num_spins() != total {
            return Err(Error::DimensionMismatch {
                what: "topology spins",
                expected: total,
                actual: topology.num_spins(),
            });
        }
        if couplings.len() != topology.num_edges() {
            return Err(Error::DimensionMismatch {
                what: "couplings",
                expected: topology.num_edges(),
                actual: couplings.len(),
            });
        }
        for &c in &couplings {
            Error::finite("coupling", c)?;
        }
        Error::finite("lambda", lambda)?;
        Error::finite("epsilon", epsilon)?;
        if lambda == 0.0 {
            log::warn!("lambda = 0: the model output is the constant epsilon = {epsilon}");
        }
        Ok(ModelState {
            input_dim,
            preprocess,
            topology: Arc::new(topology),
            couplings,
            lambda,
            epsilon,
            bounds: ParameterBounds::default(),
        })
    }

    /// All-to-all model with zero initial couplings.
    pub fn complete(
        input_dim: usize,
        preprocess: PreprocessSpec,
        lambda: f64,
        epsilon: f64,
    ) -> Result<Self> {
        preprocess.validate(input_dim)?;
        let topology = Topology::complete(preprocess.total_spins(input_dim))?;
        let m = topology.num_edges();
        Self::new(
            input_dim,
            preprocess,
            topology,
            vec![0.0; m],
            lambda,
            epsilon,
        )
    }

    /// Installs value bounds; current couplings are clamped immediately.
    pub fn with_bounds(mut self, bounds: ParameterBounds) -> Self {
        for c in &mut self.couplings {
            *c = bounds.clamp_coupling(*c);
        }
        self.bounds = bounds;
        self
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn total_spins(&self) -> usize {
        self.topology.num_spins()
    }

    pub fn preprocess(&self) -> &PreprocessSpec {
        &self.preprocess
    }

    pub fn topology(&self) -> &Arc<Topology> {
        &self.topology
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn bounds(&self) -> &ParameterBounds {
        &self.bounds
    }

    /// Replaces the couplings, clamping into the configured bounds.
    pub fn set_couplings(&mut self, couplings: Vec<f64>) -> Result<()> {
        if couplings.len() != self.couplings.len() {
            return Err(Error::DimensionMismatch {
                what: "couplings",
                expected: self.couplings.len(),
                actual: couplings.len(),
            });
        }
        for &c in &couplings {
            Error::finite("coupling", c)?;
        }
        self.couplings = couplings
            .into_iter()
            .map(|c| self.bounds.clamp_coupling(c))
            .collect();
        Ok(())
    }

    /// Ising problem for input `theta`: biases from preprocessing, couplings
    /// from the model.
    pub fn problem_for(&self, theta: &[f64]) -> Result<IsingProblem> {
        if theta.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                what: "input",
                expected: self.input_dim,
                actual: theta.len(),
            });
        }
        let biases = self.preprocess.apply(theta);
        let problem = IsingProblem::new(self.topology.clone(), biases, self.couplings.clone())?;
        Ok(if self.bounds.is_unbounded() {
            problem
        } else {
            problem.with_bounds(&self.bounds)
        })
    }

    /// `λ · E₀ + ε` for the given machine output.
    pub fn output(&self, energy: f64) -> f64 {
        self.lambda * energy + self.epsilon
    }

    pub fn predict<M: IsingMachine + ?Sized>(
        &self,
        theta: &[f64],
        machine: &M,
        seed: u64,
    ) -> Result<Prediction> {
        let problem = self.problem_for(theta)?;
        let solve = machine.solve(&problem, seed)?;
        Ok(Prediction {
            value: self.output(solve.energy),
            solve,
        })
    }
}

/// Free-function form of [`ModelState::predict`].
pub fn predict<M: IsingMachine + ?Sized>(
    state: &ModelState,
    theta: &[f64],
    machine: &M,
    seed: u64,
) -> Result<Prediction> {
    state.predict(theta, machine, seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// `λ · solve.energy + ε`.
    pub value: f64,
    pub solve: SolveResult,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::ExactSolver;

    #[test]
    fn preprocess_examples() {
        assert_eq!(
            preprocess(&PreprocessSpec::Identity, &[0.3, 0.7]).unwrap(),
            vec![0.3, 0.7]
        );
        let spec = PreprocessSpec::Offset {
            step: vec![0.1],
            copies: 3,
        };
        let out = preprocess(&spec, &[0.5]).unwrap();
        assert_eq!(out, vec![0.5, 0.5 + 0.1, 0.5 + 2.0 * 0.1]);
        assert!((out[1] - 0.6).abs() < 1e-15 && (out[2] - 0.7).abs() < 1e-15);
        let spec = PreprocessSpec::Offset {
            step: vec![10.0, 20.0],
            copies: 2,
        };
        assert_eq!(
            preprocess(&spec, &[1.0, 2.0]).unwrap(),
            vec![1.0, 2.0, 11.0, 22.0]
        );
        assert!(matches!(
            preprocess(&spec, &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        let zero = PreprocessSpec::Offset {
            step: vec![1.0],
            copies: 0,
        };
        assert!(preprocess(&zero, &[1.0]).is_err());
    }

    #[test]
    fn predict_examples() {
        let exact = ExactSolver::new();
        let m = ModelState::complete(2, PreprocessSpec::Identity, 2.0, 1.0).unwrap();
        let p = m.predict(&[1.0, -1.0], &exact, 0).unwrap();
        assert_eq!(p.solve.energy, -2.0);
        assert_eq!(p.value, -3.0);

        let m = ModelState::complete(10, PreprocessSpec::Identity, 1.0, 0.0).unwrap();
        assert_eq!(m.predict(&[0.0; 10], &exact, 0).unwrap().value, 0.0);

        let mut m = ModelState::complete(2, PreprocessSpec::Identity, -0.3, -15.43).unwrap();
        m.set_couplings(vec![1.0]).unwrap();
        let p = m.predict(&[0.0, 0.0], &exact, 0).unwrap();
        assert_eq!(p.solve.energy, -1.0);
        assert!((p.value - (-15.13)).abs() < 1e-12);
        assert_eq!(p.value, -0.3 * -1.0 + -15.43);
    }

    #[test]
    fn wrong_input_length_names_expected() {
        let m = ModelState::complete(3, PreprocessSpec::Identity, 1.0, 0.0).unwrap();
        let err = m.predict(&[1.0], &ExactSolver::new(), 0).unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch {
                expected: 3,
                actual: 1,
                ..
            }
        ));
    }

    #[test]
    fn hidden_spins_add_couplings() {
        let mut last = 0;
        for copies in 1..6 {
            let m =
                ModelState::complete(2, PreprocessSpec::uniform_offset(2, 0.1, copies), 1.0, 0.0)
                    .unwrap();
            let total = 2 * copies;
            assert_eq!(m.total_spins(), total);
            assert_eq!(m.couplings().len(), total * (total - 1) / 2);
            assert!(m.couplings().len() > last);
            last = m.couplings().len();
        }
    }

    #[test]
    fn lambda_epsilon_do_not_touch_ground_state() {
        let exact = ExactSolver::new();
        let mut a = ModelState::complete(3, PreprocessSpec::Identity, 1.0, 0.0).unwrap();
        a.set_couplings(vec![0.4, -0.7, 0.2]).unwrap();
        let theta = [0.3, -0.1, 0.5];
        let base = a.predict(&theta, &exact, 0).unwrap();
        let mut b = a.clone();
        b.lambda = 2.0;
        let doubled = b.predict(&theta, &exact, 0).unwrap();
        b.epsilon = 1.5;
        let shifted = b.predict(&theta, &exact, 0).unwrap();
        assert_eq!(base.solve, doubled.solve);
        assert_eq!(base.solve, shifted.solve);
        assert_eq!(doubled.value, 2.0 * base.value);
        assert_eq!(shifted.value - doubled.value, 1.5);
    }

    #[test]
    fn bounds_clamp_couplings_and_biases() {
        let bounds = ParameterBounds {
            bias: Some(crate::ising::Interval::new(-1.0, 1.0).unwrap()),
            coupling: Some(crate::ising::Interval::new(-0.5, 0.5).unwrap()),
        };
        let mut m = ModelState::complete(2, PreprocessSpec::Identity, 1.0, 0.0)
            .unwrap()
            .with_bounds(bounds);
        m.set_couplings(vec![3.0]).unwrap();
        assert_eq!(m.couplings(), &[0.5]);
        let p = m.problem_for(&[4.0, -4.0]).unwrap();
        assert_eq!(p.biases(), &[1.0, -1.0]);
    }
}
