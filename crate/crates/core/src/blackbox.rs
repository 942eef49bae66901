//! k-median solvers used as the extraction black box and as the exact oracle.
//!
//! Both solvers only open centers at nonzero-weight points: replacing a
//! zero-weight center by its closest nonzero-weight point at most doubles the
//! cost of a configuration.

use rand::seq::{IndexedRandom, SliceRandom};

use crate::error::{Error, Result};
use crate::metric::{Configuration, Instance};
use crate::rng::{self, ChaCha8Rng};

pub const DEFAULT_EPSILON: f64 = 1e-3;
pub const DEFAULT_ORACLE_CAP: u128 = 5_000_000;

/// Anything that returns a k-configuration for a weighted instance.
pub trait KMedianSolver: Sync {
    fn name(&self) -> &'static str;

    /// Returns a configuration of at most `k` centers.
    fn solve(&self, inst: &Instance, k: usize, rng: &mut ChaCha8Rng) -> Result<Configuration>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalSearchParams {
    pub k: usize,
    pub epsilon: f64,
    /// Cap on swap evaluations; `None` means `100 * k * n`.
    pub max_iterations: Option<u64>,
    pub seed: u64,
}

impl LocalSearchParams {
    pub fn new(k: usize, seed: u64) -> Self {
        LocalSearchParams { k, epsilon: DEFAULT_EPSILON, max_iterations: None, seed }
    }
}

/// Single-swap local search with first-improvement acceptance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalSearch {
    pub epsilon: f64,
    pub max_iterations: Option<u64>,
}

impl Default for LocalSearch {
    fn default() -> Self {
        LocalSearch { epsilon: DEFAULT_EPSILON, max_iterations: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalSearchOutcome {
    pub config: Configuration,
    pub cost: f64,
    pub swaps: u64,
    pub evaluations: u64,
    /// False when the evaluation cap stopped the search.
    pub converged: bool,
}

struct SwapState<'a> {
    inst: &'a Instance,
    /// Nonzero-weight points; the only ones that contribute to cost.
    points: Vec<usize>,
    slots: Vec<usize>,
    is_center: Vec<bool>,
    near: Vec<usize>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

impl<'a> SwapState<'a> {
    fn new(inst: &'a Instance, points: Vec<usize>, slots: Vec<usize>) -> Self {
        let mut is_center = vec![false; inst.len()];
        for &c in &slots {
            is_center[c] = true;
        }
        let m = points.len();
        let mut state =
            SwapState { inst, points, slots, is_center, near: vec![0; m], d1: vec![0.0; m], d2: vec![0.0; m] };
        state.refresh();
        state
    }

    /// Recomputes nearest and second-nearest center distances.
    fn refresh(&mut self) {
        for (i, &x) in self.points.iter().enumerate() {
            let mut best = (f64::INFINITY, usize::MAX, 0usize);
            let mut second = f64::INFINITY;
            for (s, &c) in self.slots.iter().enumerate() {
                let d = self.inst.dist(x, c);
                if d < best.0 || (d == best.0 && c < best.1) {
                    second = best.0;
                    best = (d, c, s);
                } else if d < second {
                    second = d;
                }
            }
            self.d1[i] = best.0;
            self.near[i] = best.2;
            self.d2[i] = second;
        }
    }

    fn cost(&self) -> f64 {
        self.points.iter().enumerate().map(|(i, &x)| self.d1[i] * self.inst.weight(x)).sum()
    }

    /// Cost change of swapping `p` in for each slot, in one pass over the points.
    fn swap_deltas(&self, p: usize, deltas: &mut [f64]) {
        deltas.iter_mut().for_each(|d| *d = 0.0);
        let mut common = 0.0;
        for (i, &x) in self.points.iter().enumerate() {
            let w = self.inst.weight(x);
            let dp = self.inst.dist(x, p);
            if dp < self.d1[i] {
                common += w * (dp - self.d1[i]);
            } else {
                deltas[self.near[i]] += w * (dp.min(self.d2[i]) - self.d1[i]);
            }
        }
        deltas.iter_mut().for_each(|d| *d += common);
    }

    fn apply(&mut self, slot: usize, p: usize) {
        self.is_center[self.slots[slot]] = false;
        self.is_center[p] = true;
        self.slots[slot] = p;
        self.refresh();
    }
}

impl LocalSearch {
    pub fn run(&self, inst: &Instance, k: usize, rng: &mut ChaCha8Rng) -> Result<LocalSearchOutcome> {
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::InvalidParams(format!("epsilon = {} must be positive", self.epsilon)));
        }
        if self.max_iterations == Some(0) {
            return Err(Error::InvalidParams("max_iterations must be at least 1".into()));
        }
        let candidates = inst.nonzero_points();
        if k == 0 {
            return Err(Error::InvalidParams("k must be at least 1".into()));
        }
        if k > candidates.len() {
            return Err(Error::InfeasibleK { k, available: candidates.len() });
        }

        let initial: Vec<usize> = if k == candidates.len() {
            candidates.clone()
        } else {
            candidates
                .choose_multiple_weighted(rng, k, |&x| inst.weight(x))
                .map_err(|e| Error::DegenerateInstance(format!("cannot seed local search: {e}")))?
                .copied()
                .collect()
        };
        let mut state = SwapState::new(inst, candidates.clone(), initial);
        let mut cost = state.cost();
        let cap = self.max_iterations.unwrap_or(100 * k as u64 * inst.len() as u64);
        let shrink = 1.0 - self.epsilon / k as f64;

        let mut order = candidates;
        let mut deltas = vec![0.0; k];
        let mut swaps = 0u64;
        let mut evaluations = 0u64;
        let mut converged = k == order.len();

        while !converged {
            order.shuffle(rng);
            let mut improved = false;
            for &p in &order {
                if state.is_center[p] {
                    continue;
                }
                if evaluations >= cap {
                    return Ok(self.finish(inst, &state, cost, swaps, evaluations, false));
                }
                state.swap_deltas(p, &mut deltas);
                evaluations += k as u64;
                let (slot, delta) = deltas
                    .iter()
                    .copied()
                    .enumerate()
                    .min_by(|a, b| a.1.total_cmp(&b.1).then(state.slots[a.0].cmp(&state.slots[b.0])))
                    .expect("k >= 1");
                if cost + delta < shrink * cost {
                    state.apply(slot, p);
                    cost = state.cost();
                    swaps += 1;
                    improved = true;
                }
            }
            converged = !improved;
        }
        Ok(self.finish(inst, &state, cost, swaps, evaluations, true))
    }

    fn finish(
        &self,
        inst: &Instance,
        state: &SwapState<'_>,
        cost: f64,
        swaps: u64,
        evaluations: u64,
        converged: bool,
    ) -> LocalSearchOutcome {
        let config = Configuration::new(state.slots.clone(), inst.len()).expect("slots are valid points");
        LocalSearchOutcome { config, cost, swaps, evaluations, converged }
    }
}

impl KMedianSolver for LocalSearch {
    fn name(&self) -> &'static str {
        "local-search"
    }

    fn solve(&self, inst: &Instance, k: usize, rng: &mut ChaCha8Rng) -> Result<Configuration> {
        Ok(self.run(inst, k, rng)?.config)
    }
}

/// Local search with its generator derived from `params.seed`.
pub fn local_search_kmedian(inst: &Instance, params: &LocalSearchParams) -> Result<Configuration> {
    let solver = LocalSearch { epsilon: params.epsilon, max_iterations: params.max_iterations };
    let mut rng = rng::stream(params.seed, rng::SOLVER_STREAM);
    solver.solve(inst, params.k, &mut rng)
}

/// Exhaustive search over every k-subset of the nonzero-weight points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BruteForce {
    pub cap: u128,
}

impl Default for BruteForce {
    fn default() -> Self {
        BruteForce { cap: DEFAULT_ORACLE_CAP }
    }
}

/// `C(n, k)`, saturating.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

impl BruteForce {
    /// Minimum-cost k-configuration and its cost. Ties go to the
    /// lexicographically smallest sorted index tuple.
    pub fn run(&self, inst: &Instance, k: usize) -> Result<(Configuration, f64)> {
        let candidates = inst.nonzero_points();
        if k == 0 {
            return Err(Error::InvalidParams("k must be at least 1".into()));
        }
        if k > candidates.len() {
            return Err(Error::InfeasibleK { k, available: candidates.len() });
        }
        let subsets = binomial(candidates.len(), k);
        if subsets > self.cap {
            return Err(Error::OracleTooLarge { subsets, cap: self.cap });
        }

        // Contributing points are exactly the candidates.
        let m = candidates.len();
        let table: Vec<f64> = candidates
            .iter()
            .flat_map(|&c| candidates.iter().map(move |&x| (c, x)))
            .map(|(c, x)| inst.dist(x, c))
            .collect();
        let weights: Vec<f64> = candidates.iter().map(|&x| inst.weight(x)).collect();

        let mut combo: Vec<usize> = (0..k).collect();
        let mut best: Option<(Vec<usize>, f64)> = None;
        loop {
            let cost: f64 = (0..m)
                .map(|j| {
                    let d = combo.iter().map(|&c| table[c * m + j]).fold(f64::INFINITY, f64::min);
                    d * weights[j]
                })
                .sum();
            if best.as_ref().is_none_or(|(_, b)| cost < *b) {
                best = Some((combo.clone(), cost));
            }
            // Next combination in lexicographic order.
            let mut i = k;
            while i > 0 && combo[i - 1] == m - k + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            combo[i - 1] += 1;
            for j in i..k {
                combo[j] = combo[j - 1] + 1;
            }
        }
        let (combo, cost) = best.expect("at least one subset");
        let centers = combo.into_iter().map(|c| candidates[c]).collect();
        Ok((Configuration::new(centers, inst.len())?, cost))
    }
}

impl KMedianSolver for BruteForce {
    fn name(&self) -> &'static str {
        "brute-force"
    }

    fn solve(&self, inst: &Instance, k: usize, _rng: &mut ChaCha8Rng) -> Result<Configuration> {
        Ok(self.run(inst, k)?.0)
    }
}

/// Exact `OPT_k` with the default subset cap.
pub fn brute_force_kmedian(inst: &Instance, k: usize) -> Result<(Configuration, f64)> {
    BruteForce::default().run(inst, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::fixtures::{five_point, path};
    use crate::metric::{cost_config, DistanceOracle, MetricMode};

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(64, 2), 2016);
        assert_eq!(binomial(5, 3), 10);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(1000, 500), u128::MAX);
    }

    #[test]
    fn full_k_is_free() {
        let inst = path(5);
        let ls = local_search_kmedian(&inst, &LocalSearchParams::new(5, 0)).unwrap();
        assert_eq!(ls.centers(), &[0, 1, 2, 3, 4]);
        let (bf, cost) = brute_force_kmedian(&inst, 5).unwrap();
        assert_eq!(bf.len(), 5);
        assert_eq!(cost, 0.0);
    }

    #[test]
    fn path_oracle_single_center() {
        let (config, cost) = brute_force_kmedian(&path(4), 1).unwrap();
        assert_eq!(config.centers(), &[1]);
        assert_eq!(cost, 4.0);
    }

    #[test]
    fn path_two_centers_local_search_hits_opt() {
        let inst = path(4);
        let (_, opt) = brute_force_kmedian(&inst, 2).unwrap();
        assert_eq!(opt, 2.0);
        for seed in 0..20 {
            let config = local_search_kmedian(&inst, &LocalSearchParams::new(2, seed)).unwrap();
            assert!(cost_config(&inst, &config, None).unwrap() <= 2.0, "seed {seed}");
        }
    }

    #[test]
    fn five_point_local_search_matches_oracle() {
        let inst = five_point(1000.0, MetricMode::Euclidean);
        let (config, opt) = brute_force_kmedian(&inst, 3).unwrap();
        assert_eq!(opt, 2.0);
        assert_eq!(config.centers(), &[1, 3, 4]);
        for seed in 0..10 {
            let ls = local_search_kmedian(&inst, &LocalSearchParams::new(3, seed)).unwrap();
            assert_eq!(cost_config(&inst, &ls, None).unwrap(), opt);
        }
    }

    #[test]
    fn infeasible_k_and_cap() {
        let oracle = DistanceOracle::coordinates(1, vec![0.0, 1.0, 2.0], MetricMode::Euclidean).unwrap();
        let inst = Instance::new(oracle, vec![1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(brute_force_kmedian(&inst, 3), Err(Error::InfeasibleK { k: 3, available: 2 })));
        assert!(matches!(
            local_search_kmedian(&inst, &LocalSearchParams::new(3, 0)),
            Err(Error::InfeasibleK { .. })
        ));
        let big = path(40);
        let err = BruteForce { cap: 100 }.run(&big, 3).unwrap_err();
        assert!(matches!(err, Error::OracleTooLarge { subsets: 9880, cap: 100 }));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn zero_weight_points_never_open() {
        let oracle = DistanceOracle::coordinates(1, vec![0.0, 1.0, 2.0, 10.0], MetricMode::Euclidean).unwrap();
        let inst = Instance::new(oracle, vec![1.0, 0.0, 1.0, 1.0]).unwrap();
        let (bf, _) = brute_force_kmedian(&inst, 2).unwrap();
        assert!(!bf.contains(1));
        let ls = local_search_kmedian(&inst, &LocalSearchParams::new(2, 3)).unwrap();
        assert!(!ls.contains(1));
    }

    #[test]
    fn evaluation_cap_stops_early() {
        let inst = path(30);
        let solver = LocalSearch { epsilon: 1e-3, max_iterations: Some(1) };
        let out = solver.run(&inst, 3, &mut rng::stream(0, 1)).unwrap();
        assert!(!out.converged);
        assert_eq!(out.config.len(), 3);
    }
}
