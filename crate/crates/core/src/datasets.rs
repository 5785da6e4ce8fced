//! Training data: uniform random regression sets, polynomial samples and
//! bars-and-stripes (BAS) classification, plus a CSV codec.

use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered `(θ, y)` pairs with a fixed input width.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
    labels: Option<Vec<BasLabel>>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(Error::InvalidDataset(format!(
                "{} input rows but {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        if inputs.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let width = inputs[0].len();
        if width == 0 {
            return Err(Error::InvalidDataset("input rows are empty".into()));
        }
        if let Some(row) = inputs.iter().position(|r| r.len() != width) {
            return Err(Error::InvalidDataset(format!(
                "row {row} has {} features, expected {width}",
                inputs[row].len()
            )));
        }
        Ok(Dataset {
            inputs,
            targets,
            labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<BasLabel>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::DimensionMismatch {
                what: "labels",
                expected: self.len(),
                actual: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Recovers BAS labels from targets encoded with [`bas_encode`].
    pub fn with_labels_from_targets(self) -> Result<Self> {
        let labels = self.targets.iter().map(|&y| bas_decode(y)).collect();
        self.with_labels(labels)
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn input(&self, a: usize) -> &[f64] {
        &self.inputs[a]
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn labels(&self) -> Option<&[BasLabel]> {
        self.labels.as_deref()
    }

    /// Every sample repeated `times` times, in blocks (`D ++ D ++ …`).
    pub fn repeated(&self, times: usize) -> Dataset {
        let inputs = (0..times).flat_map(|_| self.inputs.clone()).collect();
        let targets = (0..times).flat_map(|_| self.targets.clone()).collect();
        let labels = self
            .labels
            .as_ref()
            .map(|l| (0..times).flat_map(|_| l.clone()).collect());
        Dataset {
            inputs,
            targets,
            labels,
        }
    }

    /// Number of rows of `self` whose input also occurs in `other`.
    pub fn overlap(&self, other: &Dataset) -> usize {
        self.inputs
            .iter()
            .filter(|r| other.inputs.iter().any(|o| o == *r))
            .count()
    }
}

/// Inputs and targets i.i.d. uniform on `[lo, hi]`.
pub fn gen_random(n: usize, samples: usize, lo: f64, hi: f64, seed: u64) -> Result<Dataset> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidDataset(format!("invalid range [{lo}, {hi}]")));
    }
    if n == 0 {
        return Err(Error::InvalidDataset(
            "input dimension must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inputs = Vec::with_capacity(samples);
    let mut targets = Vec::with_capacity(samples);
    for _ in 0..samples {
        inputs.push((0..n).map(|_| rng.random_range(lo..=hi)).collect());
        targets.push(rng.random_range(lo..=hi));
    }
    Dataset::new(inputs, targets)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetFunction {
    /// `2x − 6`
    Linear,
    /// `1.2 (x − 0.5)² − 2`
    Quadratic,
}

impl TargetFunction {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            TargetFunction::Linear => 2.0 * x - 6.0,
            TargetFunction::Quadratic => 1.2 * (x - 0.5) * (x - 0.5) - 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Sampling {
    /// Evenly spaced, endpoints included.
    #[default]
    Grid,
    Uniform {
        seed: u64,
    },
}

/// `samples` points `(x, f(x))` on `[lo, hi]`; inputs are one-dimensional.
pub fn gen_function(
    f: TargetFunction,
    samples: usize,
    domain: (f64, f64),
    sampling: Sampling,
) -> Result<Dataset> {
    let (lo, hi) = domain;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::InvalidDataset(format!(
            "invalid domain [{lo}, {hi}]"
        )));
    }
    let xs: Vec<f64> = match sampling {
        Sampling::Grid => grid(lo, hi, samples),
        Sampling::Uniform { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..samples).map(|_| rng.random_range(lo..=hi)).collect()
        }
    };
    let targets = xs.iter().map(|&x| f.eval(x)).collect();
    Dataset::new(xs.into_iter().map(|x| vec![x]).collect(), targets)
}

/// `count` evenly spaced points on `[lo, hi]` (just `lo` when `count == 1`).
pub fn grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|a| lo + (hi - lo) * a as f64 / (count - 1) as f64)
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasLabel {
    Bars,
    Stripes,
}

impl fmt::Display for BasLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BasLabel::Bars => "bars",
            BasLabel::Stripes => "stripes",
        })
    }
}

pub const BAS_BARS_TARGET: f64 = 0.0;
pub const BAS_STRIPES_TARGET: f64 = 10.0;
pub const BAS_THRESHOLD: f64 = 5.0;

pub fn bas_encode(label: BasLabel) -> f64 {
    match label {
        BasLabel::Bars => BAS_BARS_TARGET,
        BasLabel::Stripes => BAS_STRIPES_TARGET,
    }
}

/// `F ≤ 5` is bars, anything above is stripes.
pub fn bas_decode(output: f64) -> BasLabel {
    if output <= BAS_THRESHOLD {
        BasLabel::Bars
    } else {
        BasLabel::Stripes
    }
}

/// Fraction of outputs whose decoded label matches.
pub fn bas_accuracy(outputs: &[f64], labels: &[BasLabel]) -> f64 {
    assert_eq!(outputs.len(), labels.len());
    let hits = outputs
        .iter()
        .zip(labels)
        .filter(|(&f, &l)| bas_decode(f) == l)
        .count();
    hits as f64 / labels.len() as f64
}

/// Which spatial direction a label refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasOrientation {
    /// Stripes have constant rows, bars constant columns.
    #[default]
    StripesHorizontal,
    /// Stripes have constant columns, bars constant rows.
    StripesVertical,
}

/// How binary matrix entries become biases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasEncoding {
    /// `{0, 1}`
    #[default]
    Binary,
    /// `{-1, +1}`
    Spin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BasOptions {
    #[serde(default)]
    pub orientation: BasOrientation,
    #[serde(default)]
    pub encoding: BasEncoding,
}

/// A square binary matrix with constant rows or constant columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasMatrix {
    size: usize,
    entries: Vec<u8>,
    label: BasLabel,
}

impl BasMatrix {
    /// Builds a matrix from one bit per line (row or column depending on
    /// label and orientation).
    pub fn from_pattern(pattern: &[u8], label: BasLabel, orientation: BasOrientation) -> Self {
        let k = pattern.len();
        let rows_constant = matches!(
            (label, orientation),
            (BasLabel::Stripes, BasOrientation::StripesHorizontal)
                | (BasLabel::Bars, BasOrientation::StripesVertical)
        );
        let entries = (0..k * k)
            .map(|idx| {
                let (r, c) = (idx / k, idx % k);
                if rows_constant {
                    pattern[r]
                } else {
                    pattern[c]
                }
            })
            .collect();
        BasMatrix {
            size: k,
            entries,
            label,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn label(&self) -> BasLabel {
        self.label
    }

    pub fn entry(&self, r: usize, c: usize) -> u8 {
        self.entries[r * self.size + c]
    }

    fn rows_constant(&self) -> bool {
        (0..self.size).all(|r| (0..self.size).all(|c| self.entry(r, c) == self.entry(r, 0)))
    }

    fn cols_constant(&self) -> bool {
        (0..self.size).all(|c| (0..self.size).all(|r| self.entry(r, c) == self.entry(0, c)))
    }

    /// Constant lines in exactly the labelled direction, not all entries equal.
    pub fn is_valid(&self, orientation: BasOrientation) -> bool {
        let rows = self.rows_constant();
        let cols = self.cols_constant();
        if rows && cols {
            return false;
        }
        let stripes_rows = orientation == BasOrientation::StripesHorizontal;
        match self.label {
            BasLabel::Stripes => (stripes_rows && rows) || (!stripes_rows && cols),
            BasLabel::Bars => (stripes_rows && cols) || (!stripes_rows && rows),
        }
    }

    /// Row-wise flattening.
    pub fn flatten(&self, encoding: BasEncoding) -> Vec<f64> {
        self.entries
            .iter()
            .map(|&b| match encoding {
                BasEncoding::Binary => f64::from(b),
                BasEncoding::Spin => 2.0 * f64::from(b) - 1.0,
            })
            .collect()
    }

    /// `0`/`1` characters, one line per row.
    pub fn to_grid_text(&self) -> String {
        let mut s = String::with_capacity(self.size * (self.size + 1));
        for r in 0..self.size {
            for c in 0..self.size {
                s.push(if self.entry(r, c) == 1 { '1' } else { '0' });
            }
            s.push('\n');
        }
        s
    }

    /// Parses the format of [`BasMatrix::to_grid_text`]. The label is inferred
    /// from the pattern; all-equal and mixed matrices are rejected.
    pub fn from_grid_text(text: &str, orientation: BasOrientation) -> Result<Self> {
        let rows: Vec<Vec<u8>> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| {
                l.chars()
                    .filter(|c| !c.is_whitespace() && *c != ',')
                    .map(|c| match c {
                        '0' => Ok(0),
                        '1' => Ok(1),
                        other => Err(Error::InvalidDataset(format!(
                            "unexpected character '{other}' in matrix"
                        ))),
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        let k = rows.len();
        if k < 2 || rows.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidDataset(format!(
                "matrix must be square with size >= 2 (got {k} rows)"
            )));
        }
        let mut m = BasMatrix {
            size: k,
            entries: rows.concat(),
            label: BasLabel::Bars,
        };
        if !m.is_valid(orientation) {
            m.label = BasLabel::Stripes;
            if !m.is_valid(orientation) {
                return Err(Error::InvalidDataset(
                    "matrix is neither bars nor stripes".into(),
                ));
            }
        }
        Ok(m)
    }
}

/// `samples` BAS matrices of size `k × k`. Each label is a fair coin; each
/// line pattern is uniform over the `2^k − 2` non-constant patterns.
/// Duplicates are kept.
pub fn gen_bas(
    k: usize,
    samples: usize,
    seed: u64,
    options: BasOptions,
) -> Result<(Dataset, Vec<BasMatrix>)> {
    if k < 2 {
        return Err(Error::BasSize(k));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut matrices = Vec::with_capacity(samples);
    for _ in 0..samples {
        let label = if rng.random::<bool>() {
            BasLabel::Stripes
        } else {
            BasLabel::Bars
        };
        let pattern = loop {
            let p: Vec<u8> = (0..k).map(|_| u8::from(rng.random::<bool>())).collect();
            if p.iter().any(|&b| b != p[0]) {
                break p;
            }
        };
        matrices.push(BasMatrix::from_pattern(
            &pattern,
            label,
            options.orientation,
        ));
    }
    let inputs = matrices
        .iter()
        .map(|m| m.flatten(options.encoding))
        .collect();
    let targets = matrices.iter().map(|m| bas_encode(m.label)).collect();
    let labels = matrices.iter().map(|m| m.label).collect();
    let data = Dataset::new(inputs, targets)?.with_labels(labels)?;
    Ok((data, matrices))
}

/// Writes `theta_0,…,theta_{n-1},y` with shortest round-trip float formatting.
pub fn save_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    let mut header: Vec<String> = (0..dataset.input_dim())
        .map(|i| format!("theta_{i}"))
        .collect();
    header.push("y".into());
    w.write_record(&header).map_err(|e| csv_io(path, e))?;
    for (row, y) in dataset.inputs.iter().zip(&dataset.targets) {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        rec.push(y.to_string());
        w.write_record(&rec).map_err(|e| csv_io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_csv(path: &Path) -> Result<Dataset> {
    let mut r = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_io(path, e))?;
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let header = r.headers().map_err(|e| csv_io(path, e))?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::EmptyDataset);
    }
    let n = header.len() - 1;
    for (i, name) in header.iter().enumerate() {
        let expected = if i == n {
            "y".to_string()
        } else {
            format!("theta_{i}")
        };
        if name.trim() != expected {
            return Err(parse_err(
                1,
                format!("header column {i} is '{name}', expected '{expected}'"),
            ));
        }
    }
    if n == 0 {
        return Err(parse_err(1, "no input columns".into()));
    }
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_io(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != n + 1 {
            return Err(parse_err(
                line,
                format!("expected {} fields, found {}", n + 1, rec.len()),
            ));
        }
        let mut values = Vec::with_capacity(n + 1);
        for (col, cell) in rec.iter().enumerate() {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| parse_err(line, format!("column {col}: '{cell}' is not a number")))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("column {col}: non-finite value")));
            }
            values.push(v);
        }
        targets.push(values.pop().expect("n + 1 fields"));
        inputs.push(values);
    }
    if inputs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Dataset::new(inputs, targets)
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{other:?}"),
        },
    }
}
