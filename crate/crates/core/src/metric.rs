//! Problem instances and the cost formalism.
//!
//! An [`Instance`] is a finite point set `U` with a distance oracle and a
//! nonnegative weight per point. Points are addressed by local indices
//! `0..n`; restricted instances (a weight class, a contracted support) share
//! the parent's [`DistanceOracle`] and keep a map back to oracle indices.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack used only when validating metric axioms on computed doubles.
const AXIOM_RELATIVE_SLACK: f64 = 1e-12;

/// Exhaustive axiom checks are used up to this many points.
pub const EXHAUSTIVE_VALIDATION_LIMIT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricMode {
    ExplicitMatrix,
    Euclidean,
    SquaredEuclidean,
}

impl MetricMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricMode::ExplicitMatrix => "explicit-matrix",
            MetricMode::Euclidean => "euclidean",
            MetricMode::SquaredEuclidean => "squared-euclidean",
        }
    }

    /// Constant the triangle inequality holds to: 1 for metrics, 2 for squared distances.
    pub fn triangle_factor(self) -> f64 {
        match self {
            MetricMode::SquaredEuclidean => 2.0,
            _ => 1.0,
        }
    }
}

impl fmt::Display for MetricMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "explicit-matrix" | "matrix" => Ok(MetricMode::ExplicitMatrix),
            "euclidean" => Ok(MetricMode::Euclidean),
            "squared-euclidean" | "sqeuclidean" => Ok(MetricMode::SquaredEuclidean),
            other => Err(Error::InvalidParams(format!("unknown metric mode `{other}`"))),
        }
    }
}

/// Distance function over oracle indices.
///
/// Coordinate modes compute distances on demand; the matrix mode stores all
/// `n * n` entries row-major.
#[derive(Debug, Clone, PartialEq)]
pub enum DistanceOracle {
    Matrix { n: usize, data: Vec<f64> },
    Coordinates { dim: usize, coords: Vec<f64>, squared: bool },
}

impl DistanceOracle {
    /// Builds a matrix oracle, rejecting negative, non-finite or asymmetric entries.
    pub fn matrix(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("distance matrix is empty".into()));
        }
        if data.len() != n * n {
            return Err(Error::InvalidInput(format!(
                "distance matrix has {} entries, expected {}",
                data.len(),
                n * n
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let d = data[i * n + j];
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::InvalidInput(format!("d({i},{j}) = {d} is not a nonnegative real")));
                }
                if d != data[j * n + i] {
                    return Err(Error::InvalidInput(format!(
                        "distance matrix is not symmetric: d({i},{j}) = {d} but d({j},{i}) = {}",
                        data[j * n + i]
                    )));
                }
            }
            if data[i * n + i] != 0.0 {
                return Err(Error::InvalidInput(format!("d({i},{i}) must be 0")));
            }
        }
        Ok(DistanceOracle::Matrix { n, data })
    }

    /// Builds a coordinate oracle from `n` rows of `dim` reals.
    pub fn coordinates(dim: usize, coords: Vec<f64>, mode: MetricMode) -> Result<Self> {
        if dim == 0 || coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidInput(format!(
                "coordinate table of {} values does not split into rows of dimension {dim}",
                coords.len()
            )));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite coordinate {bad}")));
        }
        let squared = match mode {
            MetricMode::Euclidean => false,
            MetricMode::SquaredEuclidean => true,
            MetricMode::ExplicitMatrix => {
                return Err(Error::UnsupportedMetric("coordinate table cannot use explicit-matrix mode".into()))
            }
        };
        Ok(DistanceOracle::Coordinates { dim, coords, squared })
    }

    pub fn len(&self) -> usize {
        match self {
            DistanceOracle::Matrix { n, .. } => *n,
            DistanceOracle::Coordinates { dim, coords, .. } => coords.len() / dim,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mode(&self) -> MetricMode {
        match self {
            DistanceOracle::Matrix { .. } => MetricMode::ExplicitMatrix,
            DistanceOracle::Coordinates { squared: false, .. } => MetricMode::Euclidean,
            DistanceOracle::Coordinates { squared: true, .. } => MetricMode::SquaredEuclidean,
        }
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            DistanceOracle::Coordinates { dim, .. } => Some(*dim),
            DistanceOracle::Matrix { .. } => None,
        }
    }

    pub fn point(&self, i: usize) -> Option<&[f64]> {
        match self {
            DistanceOracle::Coordinates { dim, coords, .. } => Some(&coords[i * dim..(i + 1) * dim]),
            DistanceOracle::Matrix { .. } => None,
        }
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        match self {
            DistanceOracle::Matrix { n, data } => data[i * n + j],
            DistanceOracle::Coordinates { dim, coords, squared } => {
                let a = &coords[i * dim..(i + 1) * dim];
                let b = &coords[j * dim..(j + 1) * dim];
                let sq = squared_distance(a, b);
                if *squared {
                    sq
                } else {
                    sq.sqrt()
                }
            }
        }
    }
}

#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Neumaier-compensated sum, accumulated in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// A weighted point set over a shared distance oracle.
#[derive(Debug, Clone)]
pub struct Instance {
    oracle: Arc<DistanceOracle>,
    ids: Vec<usize>,
    weights: Vec<f64>,
    raw_weights: Vec<f64>,
}

impl Instance {
    /// Builds an instance over every oracle point.
    ///
    /// Weights are divided by the smallest nonzero weight so that the minimum
    /// nonzero weight is 1; the weights as given remain available through
    /// [`Instance::raw_weights`].
    pub fn new(oracle: DistanceOracle, raw_weights: Vec<f64>) -> Result<Self> {
        let n = oracle.len();
        if n == 0 {
            return Err(Error::InvalidInput("instance has no points".into()));
        }
        if raw_weights.len() != n {
            return Err(Error::InvalidInput(format!("{} weights for {n} points", raw_weights.len())));
        }
        let min_nonzero = check_weights(&raw_weights)?;
        let weights = raw_weights.iter().map(|w| w / min_nonzero).collect();
        Ok(Instance { oracle: Arc::new(oracle), ids: (0..n).collect(), weights, raw_weights })
    }

    /// Unit-weight instance over every oracle point.
    pub fn uniform(oracle: DistanceOracle) -> Result<Self> {
        let n = oracle.len();
        Self::new(oracle, vec![1.0; n])
    }

    /// Sub-instance on `subset` (local indices of `self`) carrying `weights`
    /// verbatim. Used for weight classes and contracted instances, whose
    /// weights are meaningful as given.
    pub fn restrict(&self, subset: &[usize], weights: Vec<f64>) -> Result<Instance> {
        if subset.is_empty() {
            return Err(Error::InvalidInput("restriction to an empty subset".into()));
        }
        if subset.len() != weights.len() {
            return Err(Error::InvalidInput(format!("{} weights for {} points", weights.len(), subset.len())));
        }
        if let Some(&bad) = subset.iter().find(|&&i| i >= self.len()) {
            return Err(Error::InvalidInput(format!("point index {bad} out of range")));
        }
        check_weights(&weights)?;
        Ok(Instance {
            oracle: Arc::clone(&self.oracle),
            ids: subset.iter().map(|&i| self.ids[i]).collect(),
            raw_weights: weights.clone(),
            weights,
        })
    }

    /// Same points and weights under a different coordinate metric mode.
    pub fn with_mode(&self, mode: MetricMode) -> Result<Instance> {
        if mode == self.mode() {
            return Ok(self.clone());
        }
        let oracle = match (&*self.oracle, mode) {
            (DistanceOracle::Coordinates { dim, coords, .. }, MetricMode::Euclidean | MetricMode::SquaredEuclidean) => {
                DistanceOracle::Coordinates { dim: *dim, coords: coords.clone(), squared: mode == MetricMode::SquaredEuclidean }
            }
            _ => {
                return Err(Error::UnsupportedMetric(format!("cannot convert {} to {mode}", self.mode())));
            }
        };
        Ok(Instance { oracle: Arc::new(oracle), ..self.clone() })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    #[inline]
    pub fn dist(&self, x: usize, y: usize) -> f64 {
        self.oracle.dist(self.ids[x], self.ids[y])
    }

    #[inline]
    pub fn weight(&self, x: usize) -> f64 {
        self.weights[x]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn raw_weights(&self) -> &[f64] {
        &self.raw_weights
    }

    pub fn mode(&self) -> MetricMode {
        self.oracle.mode()
    }

    pub fn oracle(&self) -> &DistanceOracle {
        &self.oracle
    }

    /// Oracle index of local point `x`.
    pub fn oracle_index(&self, x: usize) -> usize {
        self.ids[x]
    }

    /// Coordinates of local point `x`, if the oracle is coordinate based.
    pub fn coords(&self, x: usize) -> Option<&[f64]> {
        self.oracle.point(self.ids[x])
    }

    pub fn dim(&self) -> Option<usize> {
        self.oracle.dim()
    }

    /// `w(U)`, compensated and accumulated in index order.
    pub fn total_weight(&self) -> f64 {
        compensated_sum(self.weights.iter().copied())
    }

    /// `w(Y)` for a subset of local indices, accumulated in the given order.
    pub fn subset_weight(&self, subset: &[usize]) -> f64 {
        compensated_sum(subset.iter().map(|&x| self.weights[x]))
    }

    /// Points with nonzero weight, ascending.
    pub fn nonzero_points(&self) -> Vec<usize> {
        (0..self.len()).filter(|&x| self.weights[x] > 0.0).collect()
    }

    /// True when every point carries the same weight.
    pub fn has_uniform_weights(&self) -> bool {
        self.weights.windows(2).all(|w| w[0] == w[1])
    }

    /// `R_w`: largest weight over smallest nonzero weight.
    pub fn weight_ratio(&self) -> f64 {
        let max = self.weights.iter().copied().fold(0.0, f64::max);
        let min = self.weights.iter().copied().filter(|&w| w > 0.0).fold(f64::INFINITY, f64::min);
        max / min
    }

    /// `r_w = 1 + ceil(log2 R_w)`.
    pub fn weight_class_bound(&self) -> usize {
        1 + self.weight_ratio().log2().ceil().max(0.0) as usize
    }

    /// `R_d`: diameter over the smallest nonzero interpoint distance. Quadratic.
    pub fn distance_ratio(&self) -> f64 {
        let mut max = 0.0f64;
        let mut min = f64::INFINITY;
        for x in 0..self.len() {
            for y in x + 1..self.len() {
                let d = self.dist(x, y);
                max = max.max(d);
                if d > 0.0 {
                    min = min.min(d);
                }
            }
        }
        if min.is_finite() {
            max / min
        } else {
            1.0
        }
    }

    /// `r_d = 1 + ceil(log2 R_d)`.
    pub fn distance_class_bound(&self) -> usize {
        1 + self.distance_ratio().log2().ceil().max(0.0) as usize
    }
}

fn check_weights(weights: &[f64]) -> Result<f64> {
    if let Some(bad) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::InvalidInput(format!("weight {bad} is not a nonnegative real")));
    }
    weights
        .iter()
        .copied()
        .filter(|&w| w > 0.0)
        .min_by(f64::total_cmp)
        .ok_or_else(|| Error::DegenerateInstance("every weight is zero".into()))
}

/// A nonempty set of centers, stored as ascending local indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration(Vec<usize>);

impl Configuration {
    pub fn new(mut centers: Vec<usize>, n: usize) -> Result<Self> {
        centers.sort_unstable();
        centers.dedup();
        if centers.is_empty() {
            return Err(Error::InvalidConfiguration("configuration is empty".into()));
        }
        if let Some(&bad) = centers.iter().find(|&&c| c >= n) {
            return Err(Error::InvalidConfiguration(format!("center {bad} out of range for {n} points")));
        }
        Ok(Configuration(centers))
    }

    /// Every point of `inst` as a center.
    pub fn all(inst: &Instance) -> Self {
        Configuration((0..inst.len()).collect())
    }

    pub fn centers(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.0.binary_search(&x).is_ok()
    }

    /// Relabels centers through `map` (e.g. contracted index to parent index).
    pub fn map_through(&self, map: &[usize], n: usize) -> Result<Configuration> {
        Configuration::new(self.0.iter().map(|&c| map[c]).collect(), n)
    }
}

/// A map `tau: U -> U`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    target: Vec<usize>,
}

impl Assignment {
    pub fn new(target: Vec<usize>) -> Result<Self> {
        let n = target.len();
        if n == 0 {
            return Err(Error::InvalidInput("assignment over an empty point set".into()));
        }
        if let Some(&bad) = target.iter().find(|&&y| y >= n) {
            return Err(Error::InvalidInput(format!("assignment target {bad} out of range")));
        }
        Ok(Assignment { target })
    }

    pub fn identity(n: usize) -> Self {
        Assignment { target: (0..n).collect() }
    }

    #[inline]
    pub fn target(&self, x: usize) -> usize {
        self.target[x]
    }

    pub fn targets(&self) -> &[usize] {
        &self.target
    }

    pub fn len(&self) -> usize {
        self.target.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target.is_empty()
    }

    /// `tau(U)`, ascending.
    pub fn image(&self) -> Vec<usize> {
        let mut seen = vec![false; self.target.len()];
        for &y in &self.target {
            seen[y] = true;
        }
        seen.iter().enumerate().filter_map(|(y, &s)| s.then_some(y)).collect()
    }

    pub fn image_size(&self) -> usize {
        self.image().len()
    }
}

/// Nearest center of `x` among ascending `centers`; ties go to the smallest index.
#[inline]
pub(crate) fn nearest_among(inst: &Instance, x: usize, centers: &[usize]) -> (usize, f64) {
    let mut best = (centers[0], inst.dist(x, centers[0]));
    for &c in &centers[1..] {
        let d = inst.dist(x, c);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// `(y, d(x, X))` for the center `y` of `config` closest to `x`.
pub fn nearest(inst: &Instance, x: usize, config: &Configuration) -> Result<(usize, f64)> {
    if config.is_empty() {
        return Err(Error::InvalidConfiguration("configuration is empty".into()));
    }
    Ok(nearest_among(inst, x, config.centers()))
}

/// `cost(X, Y) = sum over x in Y of d(x, X) * w(x)`; `Y` defaults to `U`.
///
/// Terms are added sequentially in the order of `Y`, so pointwise-dominated
/// sums over the same `Y` compare exactly.
pub fn cost_config(inst: &Instance, config: &Configuration, subset: Option<&[usize]>) -> Result<f64> {
    if config.is_empty() {
        return Err(Error::InvalidConfiguration("configuration is empty".into()));
    }
    let centers = config.centers();
    let term = |x: usize| {
        let w = inst.weight(x);
        if w == 0.0 {
            0.0
        } else {
            nearest_among(inst, x, centers).1 * w
        }
    };
    Ok(match subset {
        Some(ys) => ys.iter().map(|&x| term(x)).sum(),
        None => (0..inst.len()).map(term).sum(),
    })
}

/// `c(tau, Y) = sum over x in Y of d(x, tau(x)) * w(x)`; `Y` defaults to `U`.
pub fn cost_assignment(inst: &Instance, tau: &Assignment, subset: Option<&[usize]>) -> f64 {
    let term = |x: usize| {
        let w = inst.weight(x);
        if w == 0.0 {
            0.0
        } else {
            inst.dist(x, tau.target(x)) * w
        }
    };
    match subset {
        Some(ys) => ys.iter().map(|&x| term(x)).sum(),
        None => (0..inst.len()).map(term).sum(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    Negative { x: usize, y: usize, d: f64 },
    Asymmetric { x: usize, y: usize, forward: f64, backward: f64 },
    /// `d(x, y) = 0` with `x != y`, or `d(x, x) != 0`.
    Identity { x: usize, y: usize, d: f64 },
    Triangle { x: usize, y: usize, z: usize, direct: f64, bound: f64 },
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct MetricReport {
    pub exhaustive: bool,
    pub triples_checked: u64,
    pub violations: Vec<Violation>,
}

impl MetricReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Spot-checks the metric axioms of `inst`.
///
/// Instances of at most [`EXHAUSTIVE_VALIDATION_LIMIT`] points are checked on
/// every pair and triple; larger ones on `sample_budget` random triples drawn
/// from a fixed stream. Squared-Euclidean instances are held to the
/// factor-2 relaxed triangle inequality.
pub fn validate_metric(inst: &Instance, sample_budget: u64) -> MetricReport {
    validate_metric_seeded(inst, sample_budget, 0)
}

pub fn validate_metric_seeded(inst: &Instance, sample_budget: u64, seed: u64) -> MetricReport {
    let n = inst.len();
    let factor = inst.mode().triangle_factor();
    let mut report = MetricReport::default();
    let check_pair = |x: usize, y: usize, report: &mut MetricReport| {
        let fwd = inst.dist(x, y);
        let bwd = inst.dist(y, x);
        if fwd < 0.0 {
            report.violations.push(Violation::Negative { x, y, d: fwd });
        }
        if (fwd - bwd).abs() > AXIOM_RELATIVE_SLACK * fwd.abs().max(bwd.abs()) {
            report.violations.push(Violation::Asymmetric { x, y, forward: fwd, backward: bwd });
        }
        if (x == y) != (fwd == 0.0) {
            report.violations.push(Violation::Identity { x, y, d: fwd });
        }
    };
    let check_triple = |x: usize, y: usize, z: usize, report: &mut MetricReport| {
        let direct = inst.dist(x, z);
        let bound = factor * (inst.dist(x, y) + inst.dist(y, z));
        report.triples_checked += 1;
        if direct > bound * (1.0 + AXIOM_RELATIVE_SLACK) {
            report.violations.push(Violation::Triangle { x, y, z, direct, bound });
        }
    };

    if n <= EXHAUSTIVE_VALIDATION_LIMIT {
        report.exhaustive = true;
        for x in 0..n {
            for y in x..n {
                check_pair(x, y, &mut report);
            }
        }
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    check_triple(x, y, z, &mut report);
                }
            }
        }
    } else {
        let mut rng = crate::rng::stream(seed, 0);
        for _ in 0..sample_budget {
            let x = rng.random_range(0..n);
            let y = rng.random_range(0..n);
            let z = rng.random_range(0..n);
            check_pair(x, y, &mut report);
            check_triple(x, y, z, &mut report);
        }
    }
    report
}
