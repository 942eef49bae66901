//! Successive sampling.
//!
//! Each round draws `floor(alpha * k')` points from the active set with
//! probability proportional to weight, finds the smallest radius `nu` whose
//! closed balls around the sample hold at least a `beta` fraction of the
//! active weight, assigns every point inside those balls to its nearest
//! sample point, and removes them. Rounds continue while more than
//! `alpha * k'` points remain; survivors map to themselves.

use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{compensated_sum, nearest_among, Assignment, Instance};
use crate::rng::{self, ChaCha8Rng};

pub const DEFAULT_ALPHA: f64 = 4.0;
pub const DEFAULT_BETA: f64 = 0.5;

/// Active sets at least this large compute sample distances on the rayon pool.
const PARALLEL_DISTANCE_THRESHOLD: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerParams {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Per-round sample budget; `None` means `max(k, ceil(log2 n))`.
    pub k_prime: Option<usize>,
    pub seed: u64,
}

impl SamplerParams {
    pub fn new(k: usize, seed: u64) -> Self {
        SamplerParams { k, alpha: DEFAULT_ALPHA, beta: DEFAULT_BETA, k_prime: None, seed }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_k_prime(mut self, k_prime: usize) -> Self {
        self.k_prime = Some(k_prime);
        self
    }

    /// `k'` for an instance of `n` points.
    pub fn resolved_k_prime(&self, n: usize) -> usize {
        self.k_prime.unwrap_or_else(|| self.k.max(ceil_log2(n)))
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParams("k must be at least 1".into()));
        }
        if self.k > n {
            return Err(Error::InfeasibleK { k: self.k, available: n });
        }
        if !self.alpha.is_finite() || self.alpha <= 0.0 {
            return Err(Error::InvalidParams(format!("alpha = {} must be positive", self.alpha)));
        }
        if (self.alpha * self.resolved_k_prime(n) as f64) < 1.0 {
            return Err(Error::InvalidParams(format!("alpha = {} draws no sample points per round", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidParams(format!("beta = {} must lie in (0, 1)", self.beta)));
        }
        if self.resolved_k_prime(n) < self.k {
            return Err(Error::InvalidParams(format!("k' = {} is below k = {}", self.resolved_k_prime(n), self.k)));
        }
        Ok(())
    }
}

/// `ceil(log2 n)` for `n >= 1`.
pub fn ceil_log2(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

/// One sampling round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    /// Distinct sampled points, ascending.
    pub sample: Vec<usize>,
    /// Raw number of draws, duplicates included.
    pub draw_count: usize,
    pub nu: f64,
    /// Carved set `C_i`, ascending.
    pub carved: Vec<usize>,
    pub carved_weight: f64,
    pub active_count: usize,
    pub active_weight: f64,
    pub surviving_count: usize,
    pub surviving_weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerTrace {
    pub rounds: Vec<RoundRecord>,
    /// `U_t`, ascending.
    pub residual: Vec<usize>,
    pub k_prime: usize,
    pub alpha: f64,
    pub beta: f64,
}

impl SamplerTrace {
    /// Number of loop iterations `t`.
    pub fn t(&self) -> usize {
        self.rounds.len()
    }

    /// `floor(alpha * k')`.
    pub fn draws_per_round(&self) -> usize {
        (self.alpha * self.k_prime as f64).floor() as usize
    }

    /// `(t + 1) * floor(alpha * k') + alpha * k'`.
    pub fn image_bound(&self) -> f64 {
        ((self.t() + 1) * self.draws_per_round()) as f64 + self.alpha * self.k_prime as f64
    }

    /// Upper bound on `t` for total weight `total_weight`:
    /// `ceil(log_{1/(1-beta)}(w(U) / (alpha k'))) + 1`.
    pub fn round_bound(&self, total_weight: f64) -> usize {
        let ratio = total_weight / (self.alpha * self.k_prime as f64);
        if ratio <= 1.0 {
            return 1;
        }
        let rounds = (ratio.ln() / (1.0 / (1.0 - self.beta)).ln()).ceil();
        rounds as usize + 1
    }

    /// Round index of every point; the residual gets index `t`.
    pub fn round_of(&self, n: usize) -> Vec<usize> {
        let mut round = vec![self.t(); n];
        for r in &self.rounds {
            for &x in &r.carved {
                round[x] = r.round;
            }
        }
        round
    }

    /// `sum over rounds of nu_i * w(C_i)`, with `nu_t = 0` for the residual.
    ///
    /// Accumulated point by point in index order, the same order
    /// [`crate::metric::cost_assignment`] uses, so `c(sigma) <= bound`
    /// compares term-dominated sums exactly.
    pub fn cost_bound(&self, inst: &Instance) -> f64 {
        let round = self.round_of(inst.len());
        (0..inst.len())
            .map(|x| {
                let nu = self.rounds.get(round[x]).map_or(0.0, |r| r.nu);
                let w = inst.weight(x);
                if w == 0.0 {
                    0.0
                } else {
                    nu * w
                }
            })
            .sum()
    }

    /// Writes one JSON object per round.
    pub fn write_jsonl<W: Write>(&self, mut out: W, class: Option<usize>, ids: Option<&[usize]>) -> Result<()> {
        for r in &self.rounds {
            let line = TraceLine {
                class,
                round: r.round,
                sample_indices: r.sample.iter().map(|&x| ids.map_or(x, |m| m[x])).collect(),
                nu: r.nu,
                carved_count: r.carved.len(),
                carved_weight: r.carved_weight,
                surviving_count: r.surviving_count,
                surviving_weight: r.surviving_weight,
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Serialized form of a round in the trace stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceLine {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<usize>,
    pub round: usize,
    pub sample_indices: Vec<usize>,
    pub nu: f64,
    pub carved_count: usize,
    pub carved_weight: f64,
    pub surviving_count: usize,
    pub surviving_weight: f64,
}

#[derive(Debug, Clone)]
pub struct SampledAssignment {
    pub sigma: Assignment,
    pub trace: SamplerTrace,
}

/// Draws `count` points from `active` with replacement, each draw picking `x`
/// with probability `w(x) / w(active)`.
pub fn weighted_sample_with_replacement(
    inst: &Instance,
    active: &[usize],
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<usize>> {
    if active.is_empty() || count == 0 {
        return Err(Error::InvalidParams("sampling needs a nonempty active set and a positive count".into()));
    }
    let table = WeightedIndex::new(active.iter().map(|&x| inst.weight(x)))
        .map_err(|e| Error::DegenerateInstance(format!("cannot sample active set: {e}")))?;
    Ok((0..count).map(|_| active[table.sample(rng)]).collect())
}

/// Distance from each active point to its nearest sample point, with that point.
fn sample_distances(inst: &Instance, active: &[usize], sample: &[usize]) -> Vec<(usize, f64)> {
    let nearest = |&x: &usize| nearest_among(inst, x, sample);
    if active.len() >= PARALLEL_DISTANCE_THRESHOLD {
        active.par_iter().map(nearest).collect()
    } else {
        active.iter().map(nearest).collect()
    }
}

/// Positions (into `active`) of the carved points and the carve radius.
fn carve_positions(inst: &Instance, active: &[usize], dists: &[(usize, f64)], beta: f64) -> (f64, Vec<usize>) {
    let active_weight = inst.subset_weight(active);
    let target = beta * active_weight;
    let surviving_cap = (1.0 - beta) * active_weight;

    let mut order: Vec<usize> = (0..active.len()).collect();
    order.sort_unstable_by(|&a, &b| dists[a].1.total_cmp(&dists[b].1).then(a.cmp(&b)));

    // Smallest prefix of the sorted distances reaching the target weight.
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut cut = order.len() - 1;
    for (pos, &p) in order.iter().enumerate() {
        let v = inst.weight(active[p]);
        let t = sum + v;
        comp += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
        if sum + comp >= target {
            cut = pos;
            break;
        }
    }

    // Closed balls: every point at distance exactly nu is carved. Extend to the
    // next distinct radius in the rare case that rounding leaves the survivors
    // above their cap.
    loop {
        let nu = dists[order[cut]].1;
        while cut + 1 < order.len() && dists[order[cut + 1]].1 <= nu {
            cut += 1;
        }
        let mut rest = order[cut + 1..].to_vec();
        rest.sort_unstable();
        let surviving = compensated_sum(rest.iter().map(|&p| inst.weight(active[p])));
        if surviving <= surviving_cap || cut + 1 == order.len() {
            let mut carved: Vec<usize> = order[..=cut].to_vec();
            carved.sort_unstable();
            return (nu, carved);
        }
        cut += 1;
    }
}

/// Smallest `nu` (one of the computed distances) such that the active points
/// within distance `nu` of `sample` weigh at least `beta * w(active)`, and
/// the carved set of those points (ascending).
pub fn carve_radius(inst: &Instance, active: &[usize], sample: &[usize], beta: f64) -> Result<(f64, Vec<usize>)> {
    if active.is_empty() || sample.is_empty() {
        return Err(Error::InvalidParams("carving needs a nonempty active set and sample".into()));
    }
    let mut sample = sample.to_vec();
    sample.sort_unstable();
    sample.dedup();
    let dists = sample_distances(inst, active, &sample);
    let (nu, positions) = carve_positions(inst, active, &dists, beta);
    let mut carved: Vec<usize> = positions.into_iter().map(|p| active[p]).collect();
    carved.sort_unstable();
    Ok((nu, carved))
}

/// Runs successive sampling with the generator derived from `params.seed`.
pub fn successive_sample(inst: &Instance, params: &SamplerParams) -> Result<SampledAssignment> {
    let mut rng = rng::stream(params.seed, rng::SAMPLER_STREAM);
    successive_sample_with_rng(inst, params, &mut rng)
}

/// Runs successive sampling drawing from `rng`.
///
/// Zero-weight points take part in carving like any other point. Should the
/// active set ever weigh nothing while still above the size threshold, the
/// loop stops and the remaining points map to themselves.
pub fn successive_sample_with_rng(
    inst: &Instance,
    params: &SamplerParams,
    rng: &mut ChaCha8Rng,
) -> Result<SampledAssignment> {
    let n = inst.len();
    params.validate(n)?;
    let k_prime = params.resolved_k_prime(n);
    let threshold = params.alpha * k_prime as f64;
    let draws = (params.alpha * k_prime as f64).floor() as usize;

    let mut target: Vec<usize> = (0..n).collect();
    let mut active: Vec<usize> = (0..n).collect();
    let mut rounds = Vec::new();

    while active.len() as f64 > threshold {
        let active_weight = inst.subset_weight(&active);
        if active_weight <= 0.0 {
            break;
        }
        let raw = weighted_sample_with_replacement(inst, &active, draws, rng)?;
        let mut sample = raw.clone();
        sample.sort_unstable();
        sample.dedup();

        let dists = sample_distances(inst, &active, &sample);
        let (nu, positions) = carve_positions(inst, &active, &dists, params.beta);

        let mut keep = vec![true; active.len()];
        for &p in &positions {
            keep[p] = false;
            target[active[p]] = dists[p].0;
        }
        let carved: Vec<usize> = positions.iter().map(|&p| active[p]).collect();
        let next: Vec<usize> = active.iter().zip(&keep).filter_map(|(&x, &k)| k.then_some(x)).collect();

        rounds.push(RoundRecord {
            round: rounds.len(),
            sample,
            draw_count: raw.len(),
            nu,
            carved_weight: inst.subset_weight(&carved),
            carved,
            active_count: active.len(),
            active_weight,
            surviving_count: next.len(),
            surviving_weight: inst.subset_weight(&next),
        });
        active = next;
    }

    let trace = SamplerTrace { rounds, residual: active, k_prime, alpha: params.alpha, beta: params.beta };
    debug_assert!(trace.t() <= trace.round_bound(inst.total_weight()) || inst.total_weight() <= 0.0);
    Ok(SampledAssignment { sigma: Assignment::new(target)?, trace })
}

/// Total weight mapped onto each image point of `sigma`, as `(y, weight)`
/// pairs ascending by `y`. Accumulation runs in point-index order.
pub fn assignment_weights(sigma: &Assignment, inst: &Instance) -> Vec<(usize, f64)> {
    let n = inst.len();
    let mut sum = vec![0.0f64; n];
    let mut comp = vec![0.0f64; n];
    let mut hit = vec![false; n];
    for x in 0..n {
        let y = sigma.target(x);
        let v = inst.weight(x);
        let t = sum[y] + v;
        comp[y] += if sum[y].abs() >= v.abs() { (sum[y] - t) + v } else { (v - t) + sum[y] };
        sum[y] = t;
        hit[y] = true;
    }
    (0..n).filter(|&y| hit[y]).map(|y| (y, sum[y] + comp[y])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::fixtures::path;
    use crate::metric::{cost_assignment, DistanceOracle, MetricMode};

    #[test]
    fn singleton_active_set_always_drawn() {
        let inst = path(5);
        let mut rng = rng::stream(1, 0);
        let draws = weighted_sample_with_replacement(&inst, &[3], 50, &mut rng).unwrap();
        assert!(draws.iter().all(|&x| x == 3));
    }

    #[test]
    fn zero_weight_active_set_is_degenerate() {
        let oracle = DistanceOracle::coordinates(1, vec![0.0, 1.0, 2.0], MetricMode::Euclidean).unwrap();
        let inst = Instance::new(oracle, vec![1.0, 0.0, 0.0]).unwrap();
        let mut rng = rng::stream(1, 0);
        let err = weighted_sample_with_replacement(&inst, &[1, 2], 3, &mut rng).unwrap_err();
        assert!(matches!(err, Error::DegenerateInstance(_)));
    }

    #[test]
    fn heavy_point_frequency() {
        let oracle = DistanceOracle::coordinates(1, vec![0.0, 1.0], MetricMode::Euclidean).unwrap();
        let inst = Instance::new(oracle, vec![1.0, 3.0]).unwrap();
        let mut rng = rng::stream(2024, 0);
        let draws = weighted_sample_with_replacement(&inst, &[0, 1], 100_000, &mut rng).unwrap();
        let heavy = draws.iter().filter(|&&x| x == 1).count() as f64 / 1e5;
        // sd = sqrt(0.75 * 0.25 / 1e5) ~ 0.0014
        assert!((heavy - 0.75).abs() < 0.01, "heavy fraction {heavy}");
    }

    #[test]
    fn uniform_draws_have_near_maximal_entropy() {
        let inst = path(4);
        let mut counts = [0usize; 4];
        for seed in 0..2000 {
            let mut rng = rng::stream(seed, 0);
            for x in weighted_sample_with_replacement(&inst, &[0, 1, 2, 3], 4, &mut rng).unwrap() {
                counts[x] += 1;
            }
        }
        let total = counts.iter().sum::<usize>() as f64;
        let entropy: f64 = counts.iter().map(|&c| c as f64 / total).map(|p| -p * p.ln()).sum();
        assert!((entropy - 4f64.ln()).abs() < 1e-3, "entropy {entropy}");
        // chi-square with 3 dof; 16.27 is the 0.999 quantile
        let expected = total / 4.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < 16.27, "chi2 {chi2}");
    }

    #[test]
    fn carve_sample_equal_to_active() {
        let inst = path(4);
        let all = [0, 1, 2, 3];
        assert_eq!(carve_radius(&inst, &all, &all, 0.5).unwrap(), (0.0, all.to_vec()));
    }

    #[test]
    fn carve_path_half_and_three_quarters() {
        let inst = path(4);
        let all = [0, 1, 2, 3];
        assert_eq!(carve_radius(&inst, &all, &[0], 0.5).unwrap(), (1.0, vec![0, 1]));
        assert_eq!(carve_radius(&inst, &all, &[0], 0.75).unwrap(), (2.0, vec![0, 1, 2]));
    }

    #[test]
    fn carve_includes_ties_at_radius() {
        let inst = path(5);
        let all = [0, 1, 2, 3, 4];
        // distances from {2}: 2,1,0,1,2; target 0.4*5 = 2 reached at radius 1 and both
        // points at distance 1 are carved
        assert_eq!(carve_radius(&inst, &all, &[2], 0.4).unwrap(), (1.0, vec![1, 2, 3]));
    }

    #[test]
    fn small_instance_gets_identity() {
        let inst = path(10);
        let out = successive_sample(&inst, &SamplerParams::new(2, 9)).unwrap();
        assert_eq!(out.sigma, Assignment::identity(10));
        assert_eq!(out.trace.t(), 0);
        assert_eq!(cost_assignment(&inst, &out.sigma, None), 0.0);
    }

    #[test]
    fn path_of_64_halves_each_round() {
        let inst = path(64);
        let params = SamplerParams::new(2, 11).with_alpha(2.0);
        let out = successive_sample(&inst, &params).unwrap();
        // k' = max(2, 6) = 6, alpha k' = 12 < 64
        assert!(out.trace.t() >= 1);
        for r in &out.trace.rounds {
            assert!(r.surviving_weight <= 0.5 * r.active_weight);
        }
        let c_sigma = cost_assignment(&inst, &out.sigma, None);
        assert!(c_sigma <= out.trace.cost_bound(&inst));
    }

    #[test]
    fn assignment_weight_table() {
        let inst = path(4);
        let sigma = Assignment::new(vec![0, 0, 3, 3]).unwrap();
        assert_eq!(assignment_weights(&sigma, &inst), vec![(0, 2.0), (3, 2.0)]);
        let ident = assignment_weights(&Assignment::identity(4), &inst);
        assert_eq!(ident, vec![(0, 1.0), (1, 1.0), (2, 1.0), (3, 1.0)]);
        let single = assignment_weights(&Assignment::new(vec![2; 4]).unwrap(), &inst);
        assert_eq!(single, vec![(2, 4.0)]);
    }

    #[test]
    fn parameter_validation() {
        let inst = path(8);
        assert!(SamplerParams::new(0, 0).validate(8).is_err());
        assert!(matches!(SamplerParams::new(9, 0).validate(8), Err(Error::InfeasibleK { k: 9, available: 8 })));
        assert!(SamplerParams::new(2, 0).with_beta(1.0).validate(8).is_err());
        assert!(SamplerParams::new(2, 0).with_alpha(0.5).validate(8).is_ok());
        assert!(SamplerParams::new(2, 0).with_alpha(0.3).validate(8).is_err());
        assert!(SamplerParams::new(2, 0).with_alpha(-1.0).validate(8).is_err());
        assert!(SamplerParams::new(4, 0).with_k_prime(3).validate(8).is_err());
        assert!(successive_sample(&inst, &SamplerParams::new(2, 0).with_beta(0.0)).is_err());
    }

    #[test]
    fn k_prime_default() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(64), 6);
        assert_eq!(ceil_log2(65), 7);
        assert_eq!(SamplerParams::new(2, 0).resolved_k_prime(4096), 12);
        assert_eq!(SamplerParams::new(64, 0).resolved_k_prime(4096), 64);
    }

    #[test]
    fn trace_lines_serialize() {
        let inst = path(64);
        let out = successive_sample(&inst, &SamplerParams::new(1, 5).with_alpha(1.0)).unwrap();
        let mut buf = Vec::new();
        out.trace.write_jsonl(&mut buf, None, None).unwrap();
        let lines: Vec<TraceLine> = String::from_utf8(buf)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(lines.len(), out.trace.t());
        assert_eq!(lines[0].carved_count, out.trace.rounds[0].carved.len());
        assert!(lines[0].class.is_none());
    }
}
