//! End-to-end k-median algorithms.
//!
//! [`uniform_kmedian`] samples, contracts the instance onto the image of the
//! sampled assignment (each image point weighted by everything mapped onto
//! it) and extracts `k` centers from the contracted instance with a
//! [`KMedianSolver`]. [`weighted_kmedian`] splits the points into dyadic weight
//! classes, runs the uniform algorithm per class, and extracts `k` centers
//! from the union of the per-class solutions.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blackbox::KMedianSolver;
use crate::error::{Error, Result};
use crate::metric::{cost_assignment, cost_config, nearest_among, Assignment, Configuration, Instance};
use crate::rng;
use crate::sampler::{assignment_weights, successive_sample_with_rng, SamplerParams, SamplerTrace};

/// An instance supported on the image of an assignment.
#[derive(Debug, Clone)]
pub struct ContractedInstance {
    pub instance: Instance,
    /// Local index in `instance` to local index in the originating instance.
    pub back_map: Vec<usize>,
}

impl ContractedInstance {
    pub fn len(&self) -> usize {
        self.back_map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.back_map.is_empty()
    }

    /// Lifts a configuration of the contracted instance to the originating one.
    pub fn lift(&self, config: &Configuration, parent_len: usize) -> Result<Configuration> {
        config.map_through(&self.back_map, parent_len)
    }
}

/// Support `tau(U)`, each support point weighted by the total weight mapped onto it.
pub fn contract(inst: &Instance, tau: &Assignment) -> Result<ContractedInstance> {
    if tau.len() != inst.len() {
        return Err(Error::InvalidInput(format!("assignment covers {} of {} points", tau.len(), inst.len())));
    }
    let (support, weights): (Vec<usize>, Vec<f64>) = assignment_weights(tau, inst).into_iter().unzip();
    let instance = inst.restrict(&support, weights)?;
    Ok(ContractedInstance { instance, back_map: support })
}

/// Dyadic weight classes `B_i = { x : 2^i <= w(x) < 2^(i+1) }` over normalized weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightClassPartition {
    /// Nonempty classes as `(i, members ascending)`, ascending in `i`.
    pub classes: Vec<(usize, Vec<usize>)>,
    pub r_w: usize,
}

/// `i` with `2^i <= w < 2^(i+1)`, for `w >= 1`.
pub fn weight_class_of(w: f64) -> usize {
    let mut i = w.log2().floor().max(0.0) as i32;
    while 2f64.powi(i + 1) <= w {
        i += 1;
    }
    while i > 0 && 2f64.powi(i) > w {
        i -= 1;
    }
    i as usize
}

pub fn weight_classes(inst: &Instance) -> WeightClassPartition {
    let mut classes: Vec<(usize, Vec<usize>)> = Vec::new();
    for x in inst.nonzero_points() {
        let i = weight_class_of(inst.weight(x));
        match classes.binary_search_by_key(&i, |(c, _)| *c) {
            Ok(pos) => classes[pos].1.push(x),
            Err(pos) => classes.insert(pos, (i, vec![x])),
        }
    }
    WeightClassPartition { classes, r_w: inst.weight_class_bound() }
}

/// Maps every point of `subset` to its nearest center of `z` (smallest index
/// on ties) and every other point to itself.
pub fn induced_assignment(inst: &Instance, z: &Configuration, subset: &[usize]) -> Result<Assignment> {
    if z.is_empty() {
        return Err(Error::InvalidConfiguration("configuration is empty".into()));
    }
    let mut target: Vec<usize> = (0..inst.len()).collect();
    for &x in subset {
        target[x] = nearest_among(inst, x, z.centers()).0;
    }
    Assignment::new(target)
}

/// Wall-clock time per stage, in milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub sampling: f64,
    pub contraction: f64,
    pub blackbox: f64,
}

impl StageTimings {
    fn add(&mut self, other: &StageTimings) {
        self.sampling += other.sampling;
        self.contraction += other.contraction;
        self.blackbox += other.blackbox;
    }
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PipelineKind {
    Uniform,
    Weighted,
}

/// A sampler trace together with the map from its local indices to the
/// indices of the instance the pipeline was called on.
#[derive(Debug, Clone)]
pub struct StageTrace {
    pub class: Option<usize>,
    pub ids: Vec<usize>,
    pub trace: SamplerTrace,
    pub c_sigma: f64,
    pub cost_bound: f64,
    pub image_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub class: usize,
    pub size: usize,
    /// `Z_i`, as indices of the input instance.
    pub centers: Vec<usize>,
    /// `c(phi_i)` over the class, under normalized weights.
    pub phi_cost: f64,
}

#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub kind: PipelineKind,
    pub k: usize,
    pub seed: u64,
    pub alpha: f64,
    pub beta: f64,
    pub k_prime: usize,
    pub final_config: Configuration,
    pub final_cost: f64,
    /// `c(sigma)` for the uniform pipeline, `c(phi)` for the weighted one.
    pub c_sigma: f64,
    /// Cost of the extracted solution on the contracted instance.
    pub contracted_cost: f64,
    /// Largest sampler round count over all stages.
    pub rounds: usize,
    /// `|sigma(U)|` or `|phi(U)|`.
    pub image_size: usize,
    pub per_class: Vec<ClassReport>,
    pub traces: Vec<StageTrace>,
    pub timings: StageTimings,
}

struct UniformOutcome {
    config: Configuration,
    contracted_cost: f64,
    trace: StageTrace,
    timings: StageTimings,
}

fn uniform_stage(
    inst: &Instance,
    params: &SamplerParams,
    solver: &dyn KMedianSolver,
    streams: (u64, u64),
    class: Option<usize>,
) -> Result<UniformOutcome> {
    let mut timings = StageTimings::default();

    let start = Instant::now();
    let mut sampler_rng = rng::stream(params.seed, streams.0);
    let sampled = successive_sample_with_rng(inst, params, &mut sampler_rng)?;
    let c_sigma = cost_assignment(inst, &sampled.sigma, None);
    let cost_bound = sampled.trace.cost_bound(inst);
    timings.sampling = elapsed_ms(start);

    let start = Instant::now();
    let contracted = contract(inst, &sampled.sigma)?;
    timings.contraction = elapsed_ms(start);

    let start = Instant::now();
    let k = params.k.min(contracted.instance.nonzero_points().len());
    let mut solver_rng = rng::stream(params.seed, streams.1);
    let local = solver.solve(&contracted.instance, k, &mut solver_rng)?;
    let contracted_cost = cost_config(&contracted.instance, &local, None)?;
    let config = contracted.lift(&local, inst.len())?;
    timings.blackbox = elapsed_ms(start);

    let trace = StageTrace {
        class,
        ids: (0..inst.len()).collect(),
        image_size: contracted.len(),
        trace: sampled.trace,
        c_sigma,
        cost_bound,
    };
    Ok(UniformOutcome { config, contracted_cost, trace, timings })
}

/// Uniform-weight k-median: successive sampling, contraction, extraction.
///
/// Rejects instances whose weights are not all equal.
pub fn uniform_kmedian(inst: &Instance, params: &SamplerParams, solver: &dyn KMedianSolver) -> Result<PipelineReport> {
    if !inst.has_uniform_weights() {
        return Err(Error::NonUniformWeights);
    }
    params.validate(inst.len())?;
    let out = uniform_stage(inst, params, solver, (rng::SAMPLER_STREAM, rng::SOLVER_STREAM), None)?;
    let final_cost = cost_config(inst, &out.config, None)?;
    Ok(PipelineReport {
        kind: PipelineKind::Uniform,
        k: params.k,
        seed: params.seed,
        alpha: params.alpha,
        beta: params.beta,
        k_prime: params.resolved_k_prime(inst.len()),
        final_config: out.config,
        final_cost,
        c_sigma: out.trace.c_sigma,
        contracted_cost: out.contracted_cost,
        rounds: out.trace.trace.t(),
        image_size: out.trace.image_size,
        per_class: Vec::new(),
        traces: vec![out.trace],
        timings: out.timings,
    })
}

struct ClassOutcome {
    class: usize,
    members: Vec<usize>,
    centers: Vec<usize>,
    trace: StageTrace,
    timings: StageTimings,
}

/// Arbitrary-weight k-median over dyadic weight classes.
///
/// Each class runs the uniform pipeline with fixed weight `2^(i+1)` and the
/// sample budget `k'` of the whole instance; the union of the per-class
/// center sets induces `phi`, and the solver extracts `k` centers from the
/// instance contracted onto `phi(U)`. Classes run in parallel, each on its
/// own random streams, and are joined in class order.
pub fn weighted_kmedian(inst: &Instance, params: &SamplerParams, solver: &dyn KMedianSolver) -> Result<PipelineReport> {
    params.validate(inst.len())?;
    let k_prime = params.resolved_k_prime(inst.len());
    let partition = weight_classes(inst);

    let outcomes: Vec<ClassOutcome> = partition
        .classes
        .par_iter()
        .map(|(i, members)| -> Result<ClassOutcome> {
            let fixed = 2f64.powi(*i as i32 + 1);
            let sub = inst.restrict(members, vec![fixed; members.len()])?;
            let class_params = SamplerParams { k: params.k.min(members.len()), k_prime: Some(k_prime), ..params.clone() };
            let out = uniform_stage(&sub, &class_params, solver, rng::class_streams(*i), Some(*i))?;
            let centers = out.config.centers().iter().map(|&c| members[c]).collect();
            let mut trace = out.trace;
            trace.ids = members.clone();
            Ok(ClassOutcome { class: *i, members: members.clone(), centers, trace, timings: out.timings })
        })
        .collect::<Result<_>>()?;

    let mut timings = StageTimings::default();
    for o in &outcomes {
        timings.add(&o.timings);
    }

    let start = Instant::now();
    let mut target: Vec<usize> = (0..inst.len()).collect();
    let mut per_class = Vec::with_capacity(outcomes.len());
    for o in &outcomes {
        let mut phi_cost = 0.0;
        for &x in &o.members {
            let (y, d) = nearest_among(inst, x, &o.centers);
            target[x] = y;
            phi_cost += d * inst.weight(x);
        }
        per_class.push(ClassReport { class: o.class, size: o.members.len(), centers: o.centers.clone(), phi_cost });
    }
    let mut union: Vec<usize> = outcomes.iter().flat_map(|o| o.centers.iter().copied()).collect();
    union.sort_unstable();
    for x in 0..inst.len() {
        if inst.weight(x) == 0.0 {
            target[x] = nearest_among(inst, x, &union).0;
        }
    }
    let phi = Assignment::new(target)?;
    let c_phi = cost_assignment(inst, &phi, None);
    let contracted = contract(inst, &phi)?;
    timings.contraction += elapsed_ms(start);

    let start = Instant::now();
    let k = params.k.min(contracted.instance.nonzero_points().len());
    let mut solver_rng = rng::stream(params.seed, rng::SOLVER_STREAM);
    let local = solver.solve(&contracted.instance, k, &mut solver_rng)?;
    let contracted_cost = cost_config(&contracted.instance, &local, None)?;
    let final_config = contracted.lift(&local, inst.len())?;
    timings.blackbox += elapsed_ms(start);

    let final_cost = cost_config(inst, &final_config, None)?;
    Ok(PipelineReport {
        kind: PipelineKind::Weighted,
        k: params.k,
        seed: params.seed,
        alpha: params.alpha,
        beta: params.beta,
        k_prime,
        final_config,
        final_cost,
        c_sigma: c_phi,
        contracted_cost,
        rounds: outcomes.iter().map(|o| o.trace.trace.t()).max().unwrap_or(0),
        image_size: contracted.len(),
        per_class,
        traces: outcomes.into_iter().map(|o| o.trace).collect(),
        timings,
    })
}

/// Uniform pipeline when every weight is equal, weighted pipeline otherwise.
pub fn auto_kmedian(inst: &Instance, params: &SamplerParams, solver: &dyn KMedianSolver) -> Result<PipelineReport> {
    if inst.has_uniform_weights() {
        uniform_kmedian(inst, params, solver)
    } else {
        weighted_kmedian(inst, params, solver)
    }
}

/// Serialized pipeline report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub k: usize,
    pub mode: String,
    pub pipeline: PipelineKind,
    pub metric: crate::metric::MetricMode,
    pub solver: String,
    pub n: usize,
    pub seed: u64,
    pub alpha: f64,
    pub beta: f64,
    pub k_prime: usize,
    pub final_centers: Vec<usize>,
    pub final_cost: f64,
    pub c_sigma: f64,
    pub stage_timings_ms: StageTimings,
    pub rounds: usize,
    pub image_size: usize,
}

impl PipelineReport {
    /// Report record for a run in `mode`. Without `timings` the stage
    /// timings are written as zero, making the record a pure function of
    /// the inputs.
    pub fn record(&self, inst: &Instance, mode: &str, solver: &str, timings: bool) -> ReportRecord {
        ReportRecord {
            k: self.k,
            mode: mode.to_string(),
            pipeline: self.kind,
            metric: inst.mode(),
            solver: solver.to_string(),
            n: inst.len(),
            seed: self.seed,
            alpha: self.alpha,
            beta: self.beta,
            k_prime: self.k_prime,
            final_centers: self.final_config.centers().to_vec(),
            final_cost: self.final_cost,
            c_sigma: self.c_sigma,
            stage_timings_ms: if timings { self.timings } else { StageTimings::default() },
            rounds: self.rounds,
            image_size: self.image_size,
        }
    }
}
