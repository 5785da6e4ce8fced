//! Supervised learning with an Ising machine as the model's forward pass.
//!
//! An input vector becomes the biases of an Ising problem whose couplings are
//! the trainable weights. The machine returns a low-energy configuration, and
//! the model output is an affine function of that energy:
//!
//! ```text
//! F(θ) = λ · E₀(θ, Γ) + ε
//! ```
//!
//! Couplings are trained by gradient descent using the spin correlations of
//! the returned configuration, so only forward solves are ever needed.
//!
//! ```
//! use isingml::{ExactSolver, ModelState, PreprocessSpec};
//!
//! let model = ModelState::complete(2, PreprocessSpec::Identity, 1.0, 0.0).unwrap();
//! let out = model.predict(&[0.5, -1.0], &ExactSolver::new(), 0).unwrap();
//! assert_eq!(out.value, -1.5);
//! ```

pub mod checkpoint;
pub mod datasets;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod ising;
pub mod model;
pub mod numeric;
pub mod solvers;
pub mod training;

pub use checkpoint::{Checkpoint, ModelDocument, ProblemDocument};
pub use datasets::{
    bas_accuracy, bas_decode, bas_encode, gen_bas, gen_function, gen_random, load_csv, save_csv,
    BasEncoding, BasLabel, BasMatrix, BasOptions, BasOrientation, Dataset, Sampling,
    TargetFunction,
};
pub use error::{Error, Result};
pub use exec::Execution;
pub use experiment::{Preset, RunConfig, RunManifest};
pub use ising::{
    complete_topology, energy, Interval, IsingProblem, ParameterBounds, SpinConfiguration, Topology,
};
pub use model::{predict, preprocess, ModelState, Prediction, PreprocessSpec};
pub use solvers::{
    exact_solve, make_backend, sa_solve, AnnealSchedule, BackendSpec, ExactSolver, IsingMachine,
    SimulatedAnnealing, SolveResult, EXACT_MAX_SPINS,
};
pub use training::{
    epsilon_init, gamma_step, lambda_epsilon_step, mse_loss, predict_all, train, train_observed,
    EpochRecord, SeedPolicy, TrainConfig, TrainError, TrainReport,
};
