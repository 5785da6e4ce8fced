//! Ising problems: topology, biases, couplings and the energy function.
//!
//! The energy of a spin configuration `z ∈ {-1, +1}^n` is
//!
//! ```text
//! E(θ, Γ, z) = Σ_i θ_i z_i + Σ_{(i,j) ∈ E} Γ_ij z_i z_j
//! ```
//!
//! where every unordered edge is counted exactly once. Couplings live in an
//! edge-indexed vector aligned with [`Topology::edges`]; non-edges are zero.

use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Graph over `n` spins. Edges are stored canonically as `(i, j)` with
/// `i < j`, sorted lexicographically, so that two topologies built from
/// permutations of the same edge list are identical.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawTopology", into = "RawTopology")]
pub struct Topology {
    n: usize,
    edges: Vec<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct RawTopology {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl TryFrom<RawTopology> for Topology {
    type Error = Error;

    fn try_from(raw: RawTopology) -> Result<Self> {
        Topology::new(raw.n, raw.edges)
    }
}

impl From<Topology> for RawTopology {
    fn from(t: Topology) -> Self {
        RawTopology {
            n: t.n,
            edges: t.edges,
        }
    }
}

impl Topology {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyTopology);
        }
        let mut canonical = Vec::new();
        let mut seen = HashSet::new();
        for (i, j) in edges {
            if i == j {
                return Err(Error::SelfLoop(i, j));
            }
            if i >= n || j >= n {
                return Err(Error::EdgeOutOfRange { i, j, n });
            }
            let e = (i.min(j), i.max(j));
            if !seen.insert(e) {
                return Err(Error::DuplicateEdge(e.0, e.1));
            }
            canonical.push(e);
        }
        canonical.sort_unstable();
        Ok(Topology {
            n,
            edges: canonical,
        })
    }

    /// All-to-all connectivity: `n(n-1)/2` edges.
    pub fn complete(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyTopology);
        }
        let edges = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        Ok(Topology { n, edges })
    }

    pub fn num_spins(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Position of edge `{i, j}` in [`Topology::edges`].
    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        let e = (i.min(j), i.max(j));
        self.edges.binary_search(&e).ok()
    }
}

/// Shorthand for [`Topology::complete`].
pub fn complete_topology(n: usize) -> Result<Topology> {
    Topology::complete(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub min: f64,
    pub max: f64,
}

impl Interval {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if min.is_nan() || max.is_nan() || min > max {
            return Err(Error::InvalidInterval { min, max });
        }
        Ok(Interval { min, max })
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.min, self.max)
    }
}

/// Optional box constraints on problem values, enforced by clamping.
/// Unbounded unless configured.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ParameterBounds {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias: Option<Interval>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<Interval>,
}

impl ParameterBounds {
    pub fn is_unbounded(&self) -> bool {
        self.bias.is_none() && self.coupling.is_none()
    }

    pub fn clamp_bias(&self, v: f64) -> f64 {
        self.bias.map_or(v, |b| b.clamp(v))
    }

    pub fn clamp_coupling(&self, v: f64) -> f64 {
        self.coupling.map_or(v, |b| b.clamp(v))
    }
}

/// A spin vector with entries in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct SpinConfiguration(Vec<i8>);

impl TryFrom<Vec<i8>> for SpinConfiguration {
    type Error = Error;

    fn try_from(spins: Vec<i8>) -> Result<Self> {
        SpinConfiguration::new(spins)
    }
}

impl From<SpinConfiguration> for Vec<i8> {
    fn from(z: SpinConfiguration) -> Self {
        z.0
    }
}

impl SpinConfiguration {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some((index, &v)) = spins.iter().enumerate().find(|(_, &v)| v != 1 && v != -1) {
            return Err(Error::InvalidSpin {
                index,
                value: v as i64,
            });
        }
        Ok(SpinConfiguration(spins))
    }

    pub fn uniform(n: usize, spin: i8) -> Result<Self> {
        Self::new(vec![spin; n])
    }

    pub(crate) fn from_trusted(spins: Vec<i8>) -> Self {
        debug_assert!(spins.iter().all(|&s| s == 1 || s == -1));
        SpinConfiguration(spins)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn spins(&self) -> &[i8] {
        &self.0
    }

    pub fn get(&self, i: usize) -> i8 {
        self.0[i]
    }

    /// `z_i z_j` as a float.
    pub fn product(&self, i: usize, j: usize) -> f64 {
        f64::from(self.0[i] * self.0[j])
    }

    pub fn flipped(&self) -> Self {
        SpinConfiguration(self.0.iter().map(|s| -s).collect())
    }
}

impl std::fmt::Display for SpinConfiguration {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for s in &self.0 {
            f.write_str(if *s > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

/// Biases θ and couplings Γ over a topology: the input of an Ising machine.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingProblem {
    topology: Arc<Topology>,
    biases: Vec<f64>,
    couplings: Vec<f64>,
}

impl IsingProblem {
    /// `couplings[e]` is the weight of `topology.edges()[e]`.
    pub fn new(topology: Arc<Topology>, biases: Vec<f64>, couplings: Vec<f64>) -> Result<Self> {
        if biases.len() != topology.num_spins() {
            return Err(Error::DimensionMismatch {
                what: "biases",
                expected: topology.num_spins(),
                actual: biases.len(),
            });
        }
        if couplings.len() != topology.num_edges() {
            return Err(Error::DimensionMismatch {
                what: "couplings",
                expected: topology.num_edges(),
                actual: couplings.len(),
            });
        }
        for &b in &biases {
            Error::finite("bias", b)?;
        }
        for &c in &couplings {
            Error::finite("coupling", c)?;
        }
        Ok(IsingProblem {
            topology,
            biases,
            couplings,
        })
    }

    /// Builds a problem from `(i, j, Γ_ij)` triples; edge order is irrelevant.
    pub fn from_edges(biases: Vec<f64>, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let topology = Topology::new(biases.len(), edges.iter().map(|&(i, j, _)| (i, j)))?;
        let mut couplings = vec![0.0; topology.num_edges()];
        for &(i, j, w) in edges {
            let idx = topology.edge_index(i, j).expect("edge was just inserted");
            couplings[idx] = w;
        }
        Self::new(Arc::new(topology), biases, couplings)
    }

    /// Clamps every value into the configured bounds.
    pub fn with_bounds(mut self, bounds: &ParameterBounds) -> Self {
        for b in &mut self.biases {
            *b = bounds.clamp_bias(*b);
        }
        for c in &mut self.couplings {
            *c = bounds.clamp_coupling(*c);
        }
        self
    }

    pub fn num_spins(&self) -> usize {
        self.topology.num_spins()
    }

    pub fn topology(&self) -> &Arc<Topology> {
        &self.topology
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    /// Iterator over `(i, j, Γ_ij)`.
    pub fn weighted_edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.topology
            .edges()
            .iter()
            .zip(&self.couplings)
            .map(|(&(i, j), &w)| (i, j, w))
    }

    /// Largest absolute bias or coupling, `0` for an all-zero problem.
    pub fn max_abs_value(&self) -> f64 {
        self.biases
            .iter()
            .chain(&self.couplings)
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn energy(&self, z: &SpinConfiguration) -> Result<f64> {
        energy(self, z)
    }

    /// Energy without the length check. Canonical evaluation order: biases in
    /// index order, then edges in topology order, into one accumulator.
    pub(crate) fn energy_of(&self, z: &[i8]) -> f64 {
        let mut e = 0.0;
        for (t, &s) in self.biases.iter().zip(z) {
            e += t * f64::from(s);
        }
        for (&(i, j), &w) in self.topology.edges().iter().zip(&self.couplings) {
            e += w * f64::from(z[i] * z[j]);
        }
        e
    }

    /// Dense symmetric coupling matrix, row-major `n × n`.
    pub(crate) fn dense_couplings(&self) -> Vec<f64> {
        let n = self.num_spins();
        let mut m = vec![0.0; n * n];
        for (i, j, w) in self.weighted_edges() {
            m[i * n + j] = w;
            m[j * n + i] = w;
        }
        m
    }

    /// Compressed neighbour lists: `(offsets, neighbours, weights)`.
    pub(crate) fn adjacency(&self) -> Adjacency {
        let n = self.num_spins();
        let mut degree = vec![0usize; n + 1];
        for &(i, j) in self.topology.edges() {
            degree[i + 1] += 1;
            degree[j + 1] += 1;
        }
        for k in 0..n {
            degree[k + 1] += degree[k];
        }
        let offsets = degree;
        let mut fill = offsets.clone();
        let total = offsets[n];
        let mut neighbours = vec![0usize; total];
        let mut weights = vec![0.0; total];
        for (i, j, w) in self.weighted_edges() {
            neighbours[fill[i]] = j;
            weights[fill[i]] = w;
            fill[i] += 1;
            neighbours[fill[j]] = i;
            weights[fill[j]] = w;
            fill[j] += 1;
        }
        Adjacency {
            offsets,
            neighbours,
            weights,
        }
    }
}

pub(crate) struct Adjacency {
    pub offsets: Vec<usize>,
    pub neighbours: Vec<usize>,
    pub weights: Vec<f64>,
}

impl Adjacency {
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.offsets[i]..self.offsets[i + 1];
        (&self.neighbours[r.clone()], &self.weights[r])
    }
}

/// Total energy `Σ θ_i z_i + Σ_{(i,j)∈E} Γ_ij z_i z_j`.
pub fn energy(problem: &IsingProblem, z: &SpinConfiguration) -> Result<f64> {
    if z.len() != problem.num_spins() {
        return Err(Error::DimensionMismatch {
            what: "spin configuration",
            expected: problem.num_spins(),
            actual: z.len(),
        });
    }
    Ok(problem.energy_of(z.spins()))
}

/// Ground state of an uncoupled problem: `z_i = -sign(θ_i)` with `z_i = +1`
/// when `θ_i = 0`. Its energy is `-Σ|θ_i|`.
pub fn uncoupled_ground_state(biases: &[f64]) -> SpinConfiguration {
    SpinConfiguration::from_trusted(
        biases
            .iter()
            .map(|&t| if t > 0.0 { -1 } else { 1 })
            .collect(),
    )
}
