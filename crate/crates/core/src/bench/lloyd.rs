//! Lloyd's k-means refinement and helpers for comparing initializations.
//!
//! Lloyd works on coordinates regardless of the instance's metric mode and
//! always minimizes `sum of w(x) * |x - c(x)|^2`. Centroids are free points
//! of the coordinate space.

use rand::seq::index;

use crate::error::{Error, Result};
use crate::metric::{squared_distance, Configuration, Instance};
use crate::rng::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct LloydOutcome {
    pub centroids: Vec<Vec<f64>>,
    pub cost: f64,
    pub iters: usize,
    /// Cost after the initial assignment and after each iteration.
    pub history: Vec<f64>,
}

impl LloydOutcome {
    pub fn initial_cost(&self) -> f64 {
        self.history[0]
    }
}

fn require_coords(inst: &Instance) -> Result<usize> {
    inst.dim()
        .ok_or_else(|| Error::UnsupportedMetric("k-means refinement needs coordinates, not a distance matrix".into()))
}

/// Nearest centroid (smallest index on ties) and squared distance to it.
fn closest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, squared_distance(point, &centroids[0]));
    for (j, c) in centroids.iter().enumerate().skip(1) {
        let d = squared_distance(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn assign(inst: &Instance, centroids: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>, f64) {
    let mut labels = Vec::with_capacity(inst.len());
    let mut dists = Vec::with_capacity(inst.len());
    let mut cost = 0.0;
    for x in 0..inst.len() {
        let (j, d) = closest(inst.coords(x).expect("coordinate instance"), centroids);
        labels.push(j);
        dists.push(d);
        cost += inst.weight(x) * d;
    }
    (labels, dists, cost)
}

/// Squared-distance k-means cost of `centroids`.
pub fn kmeans_cost(inst: &Instance, centroids: &[Vec<f64>]) -> Result<f64> {
    require_coords(inst)?;
    Ok(assign(inst, centroids).2)
}

/// Weighted k-median cost (plain distances) of free `centroids`.
pub fn centroid_median_cost(inst: &Instance, centroids: &[Vec<f64>]) -> Result<f64> {
    require_coords(inst)?;
    Ok((0..inst.len())
        .map(|x| {
            let p = inst.coords(x).expect("coordinate instance");
            inst.weight(x) * closest(p, centroids).1.sqrt()
        })
        .sum())
}

/// Coordinates of the centers of `config`.
pub fn config_centroids(inst: &Instance, config: &Configuration) -> Result<Vec<Vec<f64>>> {
    require_coords(inst)?;
    Ok(config.centers().iter().map(|&c| inst.coords(c).expect("coordinate instance").to_vec()).collect())
}

/// Lloyd iterations from the coordinates of `init`.
pub fn lloyd_refine(inst: &Instance, init: &Configuration, max_iters: usize) -> Result<LloydOutcome> {
    let centroids = config_centroids(inst, init)?;
    lloyd_from_centroids(inst, centroids, max_iters)
}

/// Lloyd iterations from free starting centroids.
///
/// Stops after `max_iters` iterations or once an iteration leaves every
/// assignment unchanged. A centroid left without weight is moved onto the
/// point currently farthest from its own centroid.
pub fn lloyd_from_centroids(inst: &Instance, mut centroids: Vec<Vec<f64>>, max_iters: usize) -> Result<LloydOutcome> {
    let dim = require_coords(inst)?;
    if centroids.is_empty() {
        return Err(Error::InvalidConfiguration("no initial centroids".into()));
    }
    if centroids.iter().any(|c| c.len() != dim) {
        return Err(Error::InvalidInput(format!("centroids must have dimension {dim}")));
    }
    let k = centroids.len();
    let (mut labels, mut dists, cost) = assign(inst, &centroids);
    let mut history = vec![cost];
    let mut iters = 0;

    while iters < max_iters {
        iters += 1;
        let mut sums = vec![vec![0.0; dim]; k];
        let mut mass = vec![0.0; k];
        for x in 0..inst.len() {
            let w = inst.weight(x);
            if w == 0.0 {
                continue;
            }
            let p = inst.coords(x).expect("coordinate instance");
            mass[labels[x]] += w;
            for (s, v) in sums[labels[x]].iter_mut().zip(p) {
                *s += w * v;
            }
        }
        let mut taken = vec![false; inst.len()];
        for j in 0..k {
            if mass[j] > 0.0 {
                centroids[j] = sums[j].iter().map(|s| s / mass[j]).collect();
            } else {
                let far = (0..inst.len())
                    .filter(|&x| !taken[x])
                    .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)));
                if let Some(x) = far {
                    taken[x] = true;
                    dists[x] = 0.0;
                    centroids[j] = inst.coords(x).expect("coordinate instance").to_vec();
                }
            }
        }
        let (next, next_dists, cost) = assign(inst, &centroids);
        history.push(cost);
        dists = next_dists;
        if next == labels {
            break;
        }
        labels = next;
    }
    let cost = *history.last().expect("nonempty history");
    Ok(LloydOutcome { centroids, cost, iters, history })
}

/// Replaces each centroid by its nearest input point (smallest index on ties).
pub fn snap_to_points(inst: &Instance, centroids: &[Vec<f64>]) -> Result<Configuration> {
    require_coords(inst)?;
    let centers = centroids
        .iter()
        .map(|c| {
            let mut best = (0, f64::INFINITY);
            for x in 0..inst.len() {
                let d = squared_distance(inst.coords(x).expect("coordinate instance"), c);
                if d < best.1 {
                    best = (x, d);
                }
            }
            best.0
        })
        .collect();
    Configuration::new(centers, inst.len())
}

/// `k` distinct points chosen uniformly at random.
pub fn random_init(inst: &Instance, k: usize, rng: &mut ChaCha8Rng) -> Result<Configuration> {
    if k == 0 || k > inst.len() {
        return Err(Error::InfeasibleK { k, available: inst.len() });
    }
    Configuration::new(index::sample(rng, inst.len(), k).into_vec(), inst.len())
}

/// Farthest-point traversal from a random first point.
pub fn farthest_point_init(inst: &Instance, k: usize, rng: &mut ChaCha8Rng) -> Result<Configuration> {
    use rand::Rng;
    if k == 0 || k > inst.len() {
        return Err(Error::InfeasibleK { k, available: inst.len() });
    }
    let first = rng.random_range(0..inst.len());
    let mut chosen = vec![first];
    let mut gap: Vec<f64> = (0..inst.len()).map(|x| inst.dist(x, first)).collect();
    while chosen.len() < k {
        let next = (0..inst.len())
            .max_by(|&a, &b| gap[a].total_cmp(&gap[b]).then(b.cmp(&a)))
            .expect("nonempty instance");
        chosen.push(next);
        for x in 0..inst.len() {
            gap[x] = gap[x].min(inst.dist(x, next));
        }
    }
    Configuration::new(chosen, inst.len())
}
