use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{count_param, reject_unknown, BackendParams, BackendSpec, IsingMachine, SolveResult};
use crate::error::{Error, Result};
use crate::ising::{IsingProblem, SpinConfiguration};
use crate::numeric::derive_seed;

/// Geometric cooling from `t_initial` to `t_final` over `sweeps` full passes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    t_initial: f64,
    t_final: f64,
    sweeps: usize,
}

impl AnnealSchedule {
    pub const DEFAULT_SWEEPS: usize = 1000;

    pub fn new(t_initial: f64, t_final: f64, sweeps: usize) -> Result<Self> {
        if !(t_initial.is_finite() && t_initial > 0.0) || !(t_final.is_finite() && t_final > 0.0) {
            return Err(Error::InvalidSchedule(format!(
                "temperatures must be positive and finite (got {t_initial}, {t_final})"
            )));
        }
        if t_final >= t_initial {
            return Err(Error::InvalidSchedule(format!(
                "t_final ({t_final}) must be below t_initial ({t_initial})"
            )));
        }
        if sweeps == 0 {
            return Err(Error::InvalidSchedule("sweeps must be at least 1".into()));
        }
        Ok(AnnealSchedule {
            t_initial,
            t_final,
            sweeps,
        })
    }

    /// `t_initial = 10 · max(|θ|∞, |Γ|∞, 1)`, `t_final = t_initial / 1000`.
    pub fn default_for(problem: &IsingProblem, sweeps: usize) -> Result<Self> {
        let t_initial = 10.0 * problem.max_abs_value().max(1.0);
        Self::new(t_initial, t_initial * 1e-3, sweeps)
    }

    pub fn t_initial(&self) -> f64 {
        self.t_initial
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// Temperature of sweep `k`; a single-sweep schedule runs at `t_final`.
    pub fn temperature(&self, k: usize) -> f64 {
        if self.sweeps == 1 {
            return self.t_final;
        }
        let ratio = (self.t_final / self.t_initial).powf(1.0 / (self.sweeps - 1) as f64);
        self.t_initial * ratio.powi(k as i32)
    }
}

/// One annealing run from a random start. Spins are visited in index order
/// each sweep; the lowest-energy configuration seen is returned.
pub fn sa_solve(problem: &IsingProblem, schedule: &AnnealSchedule, seed: u64) -> SolveResult {
    let start = Instant::now();
    let z = anneal(problem, schedule, seed);
    SolveResult::new(problem, z, SimulatedAnnealing::NAME, seed, start.elapsed())
}

fn anneal(problem: &IsingProblem, schedule: &AnnealSchedule, seed: u64) -> SpinConfiguration {
    let n = problem.num_spins();
    let adj = problem.adjacency();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z: Vec<i8> = (0..n)
        .map(|_| if rng.random::<bool>() { 1 } else { -1 })
        .collect();
    let mut field: Vec<f64> = (0..n)
        .map(|i| {
            let (nb, w) = adj.row(i);
            problem.biases()[i]
                + nb.iter()
                    .zip(w)
                    .map(|(&j, &w)| w * f64::from(z[j]))
                    .sum::<f64>()
        })
        .collect();
    let mut energy = problem.energy_of(&z);
    let mut best_energy = energy;
    let mut best = z.clone();

    for sweep in 0..schedule.sweeps {
        let beta = 1.0 / schedule.temperature(sweep);
        for i in 0..n {
            let s = f64::from(z[i]);
            let delta = -2.0 * s * field[i];
            let accept = delta <= 0.0 || rng.random::<f64>() < (-beta * delta).exp();
            if !accept {
                continue;
            }
            z[i] = -z[i];
            energy += delta;
            let shift = -2.0 * s;
            let (nb, w) = adj.row(i);
            for (&j, &w) in nb.iter().zip(w) {
                field[j] += shift * w;
            }
            if energy < best_energy {
                best_energy = energy;
                best.copy_from_slice(&z);
            }
        }
    }
    SpinConfiguration::from_trusted(best)
}

/// Simulated-annealing backend. Temperatures default to the problem-scaled
/// range of [`AnnealSchedule::default_for`]; with `reads > 1` the best of
/// several independent runs is returned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulatedAnnealing {
    pub sweeps: usize,
    pub reads: usize,
    pub temperatures: Option<(f64, f64)>,
}

impl Default for SimulatedAnnealing {
    fn default() -> Self {
        SimulatedAnnealing {
            sweeps: AnnealSchedule::DEFAULT_SWEEPS,
            reads: 1,
            temperatures: None,
        }
    }
}

impl SimulatedAnnealing {
    pub const NAME: &'static str = "simulated-annealing";
    const KEYS: &'static [&'static str] = &["sweeps", "reads", "t_initial", "t_final"];

    pub fn with_sweeps(sweeps: usize) -> Self {
        SimulatedAnnealing {
            sweeps,
            ..Self::default()
        }
    }

    pub(crate) fn from_params(params: &BackendParams) -> Result<Self> {
        reject_unknown(Self::NAME, params, Self::KEYS)?;
        let sweeps = count_param(params, "sweeps", AnnealSchedule::DEFAULT_SWEEPS)?;
        let reads = count_param(params, "reads", 1)?;
        let temperatures = match (params.get("t_initial"), params.get("t_final")) {
            (None, None) => None,
            (Some(&hi), Some(&lo)) => {
                AnnealSchedule::new(hi, lo, sweeps)?;
                Some((hi, lo))
            }
            _ => {
                return Err(Error::InvalidSchedule(
                    "t_initial and t_final must be given together".into(),
                ))
            }
        };
        Ok(SimulatedAnnealing {
            sweeps,
            reads,
            temperatures,
        })
    }

    pub fn schedule_for(&self, problem: &IsingProblem) -> Result<AnnealSchedule> {
        match self.temperatures {
            Some((hi, lo)) => AnnealSchedule::new(hi, lo, self.sweeps),
            None => AnnealSchedule::default_for(problem, self.sweeps),
        }
    }
}

impl IsingMachine for SimulatedAnnealing {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn solve(&self, problem: &IsingProblem, seed: u64) -> Result<SolveResult> {
        let start = Instant::now();
        let schedule = self.schedule_for(problem)?;
        let mut best = sa_solve(problem, &schedule, seed);
        for read in 1..self.reads {
            let r = sa_solve(problem, &schedule, derive_seed(seed, &[read as u64]));
            if r.energy < best.energy {
                best = r;
            }
        }
        best.meta.seed = seed;
        best.meta.wall_time = start.elapsed();
        Ok(best)
    }

    fn spec(&self) -> BackendSpec {
        let mut spec = BackendSpec::simulated_annealing()
            .with_param("sweeps", self.sweeps as f64)
            .with_param("reads", self.reads as f64);
        if let Some((hi, lo)) = self.temperatures {
            spec = spec.with_param("t_initial", hi).with_param("t_final", lo);
        }
        spec
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::Topology;
    use crate::solvers::exact_solve;
    use std::sync::Arc;

    fn random_problem(n: usize, seed: u64) -> IsingProblem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let topo = Arc::new(Topology::complete(n).unwrap());
        let biases = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let couplings = (0..topo.num_edges())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        IsingProblem::new(topo, biases, couplings).unwrap()
    }

    #[test]
    fn schedule_validation() {
        assert!(AnnealSchedule::new(1.0, 1.0, 10).is_err());
        assert!(AnnealSchedule::new(1.0, 0.0, 10).is_err());
        assert!(AnnealSchedule::new(1.0, 0.1, 0).is_err());
        let s = AnnealSchedule::new(10.0, 0.01, 4).unwrap();
        assert_eq!(s.temperature(0), 10.0);
        assert!((s.temperature(3) - 0.01).abs() < 1e-12);
        assert!(s.temperature(1) < 10.0 && s.temperature(1) > s.temperature(2));
    }

    #[test]
    fn default_schedule_scales_with_problem() {
        let p = IsingProblem::from_edges(vec![3.0, 0.1], &[(0, 1, -0.5)]).unwrap();
        let s = AnnealSchedule::default_for(&p, 1000).unwrap();
        assert_eq!(s.t_initial(), 30.0);
        assert_eq!(s.t_final(), 30.0 * 1e-3);
        let small = IsingProblem::from_edges(vec![0.1], &[]).unwrap();
        assert_eq!(
            AnnealSchedule::default_for(&small, 1).unwrap().t_initial(),
            10.0
        );
    }

    #[test]
    fn antiferromagnetic_pair_reaches_ground_energy() {
        let p = IsingProblem::from_edges(vec![0.0, 0.0], &[(0, 1, 1.0)]).unwrap();
        for seed in 0..20 {
            let r = SimulatedAnnealing::default().solve(&p, seed).unwrap();
            assert_eq!(r.energy, -1.0);
        }
    }

    #[test]
    fn zero_temperature_single_sweep_is_greedy() {
        let p = IsingProblem::from_edges(vec![5.0], &[]).unwrap();
        let s = AnnealSchedule::new(1e-9, 1e-10, 1).unwrap();
        for seed in 0..10 {
            let r = sa_solve(&p, &s, seed);
            assert_eq!(r.configuration.spins(), &[-1]);
            assert_eq!(r.energy, -5.0);
        }
    }

    #[test]
    fn same_seed_same_result() {
        let p = random_problem(16, 3);
        let sa = SimulatedAnnealing::with_sweeps(200);
        assert_eq!(sa.solve(&p, 42).unwrap(), sa.solve(&p, 42).unwrap());
    }

    #[test]
    fn matches_exact_on_small_random_problems() {
        let sa = SimulatedAnnealing::default();
        let mut hits = 0;
        for seed in 0..100u64 {
            let p = random_problem(10, 1000 + seed);
            let exact = exact_solve(&p).unwrap().energy;
            let r = sa.solve(&p, seed).unwrap();
            assert!(r.energy >= exact);
            assert_eq!(r.energy, p.energy(&r.configuration).unwrap());
            if r.energy == exact {
                hits += 1;
            }
        }
        assert!(hits >= 95, "{hits}/100");
    }

    #[test]
    fn more_reads_never_hurt() {
        let p = random_problem(20, 9);
        let one = SimulatedAnnealing {
            sweeps: 5,
            reads: 1,
            temperatures: None,
        };
        let many = SimulatedAnnealing { reads: 8, ..one };
        assert!(many.solve(&p, 1).unwrap().energy <= one.solve(&p, 1).unwrap().energy);
    }

    #[test]
    fn params_round_trip_through_spec() {
        let sa = SimulatedAnnealing {
            sweeps: 50,
            reads: 3,
            temperatures: Some((5.0, 0.01)),
        };
        let rebuilt = SimulatedAnnealing::from_params(&sa.spec().params).unwrap();
        assert_eq!(sa, rebuilt);
        let bad: BackendParams = [("t_initial".to_string(), 1.0)].into();
        assert!(SimulatedAnnealing::from_params(&bad).is_err());
    }
}
