use std::cmp::Ordering;
use std::time::Instant;

use super::{reject_unknown, BackendParams, BackendSpec, IsingMachine, SolveResult};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::ising::{IsingProblem, SpinConfiguration};

/// Largest problem the exhaustive solver accepts.
pub const EXACT_MAX_SPINS: usize = 24;

/// Spins enumerated by the inner Gray-code loop; the remaining leading spins
/// are fixed per block. Blocks restart from exactly computed local fields so
/// incremental rounding drift stays bounded.
const INNER_BITS: usize = 12;

/// Exhaustive ground-state search.
///
/// Among degenerate minima the lexicographically smallest configuration
/// (ordering `-1 < +1`, spin 0 most significant) is returned, so results are
/// fully deterministic.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactSolver {
    execution: Execution,
}

impl ExactSolver {
    pub const NAME: &'static str = "exact";

    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_execution(execution: Execution) -> Self {
        ExactSolver { execution }
    }

    pub(crate) fn from_params(params: &BackendParams) -> Result<Self> {
        reject_unknown(Self::NAME, params, &[])?;
        Ok(Self::new())
    }
}

impl IsingMachine for ExactSolver {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn solve(&self, problem: &IsingProblem, seed: u64) -> Result<SolveResult> {
        let start = Instant::now();
        let z = ground_state(problem, self.execution)?;
        Ok(SolveResult::new(
            problem,
            z,
            Self::NAME,
            seed,
            start.elapsed(),
        ))
    }

    fn is_exact(&self) -> bool {
        true
    }

    fn spec(&self) -> BackendSpec {
        BackendSpec::exact()
    }
}

/// Global minimizer by exhaustive enumeration (sequential).
pub fn exact_solve(problem: &IsingProblem) -> Result<SolveResult> {
    ExactSolver::with_execution(Execution::Sequential).solve(problem, 0)
}

/// Code with bit `n-1-i` set iff `z_i = +1`; numeric order is lexicographic
/// order of configurations.
fn spins_from_code(code: u32, n: usize) -> Vec<i8> {
    (0..n)
        .map(|i| if code >> (n - 1 - i) & 1 == 1 { 1 } else { -1 })
        .collect()
}

#[derive(Clone, Copy)]
struct Best {
    energy: f64,
    code: u32,
}

impl Best {
    fn better_than(&self, other: &Best) -> bool {
        match self.energy.total_cmp(&other.energy) {
            Ordering::Less => true,
            Ordering::Equal => self.code < other.code,
            Ordering::Greater => false,
        }
    }
}

fn ground_state(problem: &IsingProblem, execution: Execution) -> Result<SpinConfiguration> {
    let n = problem.num_spins();
    if n > EXACT_MAX_SPINS {
        return Err(Error::Capacity {
            n,
            max: EXACT_MAX_SPINS,
        });
    }
    let inner = n.min(INNER_BITS);
    let outer = n - inner;
    let dense = problem.dense_couplings();
    let scale = 1.0
        + problem.biases().iter().map(|v| v.abs()).sum::<f64>()
        + problem.couplings().iter().map(|v| v.abs()).sum::<f64>();
    let tol = 1e-9 * scale;

    let blocks = execution.map(1usize << outer, |block| {
        search_block(problem, &dense, block as u32, inner, tol)
    });
    let best = blocks
        .into_iter()
        .reduce(|a, b| if b.better_than(&a) { b } else { a })
        .expect("at least one block");
    Ok(SpinConfiguration::from_trusted(spins_from_code(
        best.code, n,
    )))
}

fn search_block(problem: &IsingProblem, dense: &[f64], block: u32, inner: usize, tol: f64) -> Best {
    let n = problem.num_spins();
    let base_code = block << inner;
    let mut z = spins_from_code(base_code, n);
    let mut code = base_code;

    // Exact local fields h_i = θ_i + Σ_j Γ_ij z_j for the block's first state.
    let mut field: Vec<f64> = (0..n)
        .map(|i| {
            let row = &dense[i * n..(i + 1) * n];
            problem.biases()[i]
                + row
                    .iter()
                    .zip(&z)
                    .map(|(w, &s)| w * f64::from(s))
                    .sum::<f64>()
        })
        .collect();
    let mut running = problem.energy_of(&z);
    let mut best = Best {
        energy: running,
        code,
    };

    for step in 1u32..(1u32 << inner) {
        let bit = step.trailing_zeros() as usize;
        let i = n - 1 - bit;
        let before = z[i];
        running -= 2.0 * f64::from(before) * field[i];
        z[i] = -before;
        code ^= 1 << bit;
        let delta = 2.0 * f64::from(z[i]);
        let row = &dense[i * n..(i + 1) * n];
        for (h, &w) in field.iter_mut().zip(row) {
            *h += delta * w;
        }
        if running <= best.energy + tol {
            let candidate = Best {
                energy: problem.energy_of(&z),
                code,
            };
            if candidate.better_than(&best) {
                best = candidate;
            }
        }
    }
    best
}
