use ssmedian::bench::generate::{generate, GeneratorSpec};
use ssmedian::blackbox::{brute_force_kmedian, LocalSearch};
use ssmedian::metric::{cost_config, Instance, MetricMode};
use ssmedian::pipeline::{auto_kmedian, uniform_kmedian, weighted_kmedian, PipelineKind};
use ssmedian::rng;
use ssmedian::sampler::SamplerParams;

fn clusters(seed: u64) -> Instance {
    let spec = GeneratorSpec::GaussianMixture { centers: 4, per: 50, sigma: 0.1, side: 10.0, dim: 2, wmax: 1.0, seed: None };
    generate(&spec, seed, MetricMode::Euclidean).unwrap()
}

fn best_of_restarts(inst: &Instance, k: usize, restarts: u64) -> f64 {
    (0..restarts)
        .map(|s| LocalSearch::default().run(inst, k, &mut rng::stream(s, 1)).unwrap().cost)
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn separated_clusters_get_one_center_each() {
    for seed in 0..5 {
        let inst = clusters(seed);
        let report = uniform_kmedian(&inst, &SamplerParams::new(4, seed), &LocalSearch::default()).unwrap();
        let mut blobs: Vec<usize> = report.final_config.centers().iter().map(|&c| c / 50).collect();
        blobs.sort_unstable();
        blobs.dedup();
        let reference = best_of_restarts(&inst, 4, 20);
        // blob centers are drawn uniformly in the box, so two may overlap; only
        // require distinct blobs when every pair is well separated
        let separated = (0..4).all(|a| {
            (a + 1..4).all(|b| inst.dist(a * 50, b * 50) > 2.0)
        });
        if separated {
            assert_eq!(blobs.len(), 4, "seed {seed}: centers {:?}", report.final_config);
        }
        assert!(report.final_cost <= 3.0 * reference, "seed {seed}: {} vs {reference}", report.final_cost);
    }
}

#[test]
fn sampling_rounds_stay_within_oracle_ratio() {
    // alpha = 1 forces real sampling rounds on small instances
    for seed in 0..60u64 {
        let n = 16 + (seed % 5) as usize;
        let k = 1 + (seed % 3) as usize;
        let wmax = if seed % 2 == 0 { 1.0 } else { 256.0 };
        let spec = GeneratorSpec::UniformBox { n, dim: 2, side: 10.0, wmax, seed: None };
        let inst = generate(&spec, seed, MetricMode::Euclidean).unwrap();
        let (_, opt) = brute_force_kmedian(&inst, k).unwrap();
        let params = SamplerParams::new(k, seed).with_alpha(1.0).with_k_prime(k);
        let report = if wmax == 1.0 {
            uniform_kmedian(&inst, &params, &LocalSearch::default()).unwrap()
        } else {
            weighted_kmedian(&inst, &params, &LocalSearch::default()).unwrap()
        };
        if wmax == 1.0 {
            assert!(report.rounds >= 1, "seed {seed}: no sampling round");
        }
        assert!(report.final_cost <= 10.0 * opt, "seed {seed}: {} vs OPT {opt}", report.final_cost);
    }
}

#[test]
fn auto_dispatch_follows_weights() {
    let uniform = generate(&"uniform-box:n=100".parse().unwrap(), 1, MetricMode::Euclidean).unwrap();
    let weighted = generate(&"uniform-box:n=100,wmax=100".parse().unwrap(), 1, MetricMode::Euclidean).unwrap();
    let params = SamplerParams::new(3, 0);
    assert_eq!(auto_kmedian(&uniform, &params, &LocalSearch::default()).unwrap().kind, PipelineKind::Uniform);
    assert_eq!(auto_kmedian(&weighted, &params, &LocalSearch::default()).unwrap().kind, PipelineKind::Weighted);
}

#[test]
fn weighted_report_is_consistent() {
    let inst = generate(&"gaussian-mixture:centers=5,per=80,wmax=1000".parse().unwrap(), 3, MetricMode::Euclidean).unwrap();
    let report = weighted_kmedian(&inst, &SamplerParams::new(5, 3), &LocalSearch::default()).unwrap();
    assert!(report.final_config.len() <= 5);
    assert_eq!(report.final_cost, cost_config(&inst, &report.final_config, None).unwrap());
    assert_eq!(report.per_class.iter().map(|c| c.size).sum::<usize>(), inst.len());
    assert!(report.per_class.windows(2).all(|w| w[0].class < w[1].class));
}
