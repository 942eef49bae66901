//! Synthetic instances.
//!
//! Specs are written `kind:key=value,key=value`, for example
//! `gaussian-mixture:centers=4,per=50,sigma=0.1,box=10` or `path:n=64`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::metric::{DistanceOracle, Instance, MetricMode};
use crate::rng;

/// Stream reserved for instance generation.
const GENERATOR_STREAM: u64 = 0x0067_656e;

#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorSpec {
    /// `centers` Gaussian blobs of `per` points with standard deviation
    /// `sigma`, blob centers uniform in `[0, box]^dim`.
    GaussianMixture { centers: usize, per: usize, sigma: f64, side: f64, dim: usize, wmax: f64, seed: Option<u64> },
    /// `n` points uniform in `[0, side]^dim`.
    UniformBox { n: usize, dim: usize, side: f64, wmax: f64, seed: Option<u64> },
    /// Unit-spaced path as an explicit matrix.
    Path { n: usize },
    /// Blue points `(0, 1), (0, 0), (0, -1)` and red points `(-d, 0), (d, 0)`.
    Counterexample { d: f64 },
}

impl GeneratorSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            GeneratorSpec::GaussianMixture { .. } => "gaussian-mixture",
            GeneratorSpec::UniformBox { .. } => "uniform-box",
            GeneratorSpec::Path { .. } => "path",
            GeneratorSpec::Counterexample { .. } => "counterexample-5pt",
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(format!("{}: {m}", self.kind())));
        match *self {
            GeneratorSpec::GaussianMixture { centers, per, sigma, side, dim, wmax, .. } => {
                if centers == 0 || per == 0 || dim == 0 {
                    return bad("centers, per and dim must be positive");
                }
                if !(sigma >= 0.0 && side > 0.0 && wmax >= 1.0) {
                    return bad("need sigma >= 0, box > 0 and wmax >= 1");
                }
            }
            GeneratorSpec::UniformBox { n, dim, side, wmax, .. } => {
                if n == 0 || dim == 0 || !(side > 0.0 && wmax >= 1.0) {
                    return bad("need n, dim, side > 0 and wmax >= 1");
                }
            }
            GeneratorSpec::Path { n } => {
                if n == 0 {
                    return bad("n must be positive");
                }
            }
            GeneratorSpec::Counterexample { d } => {
                if !(d > 0.0 && d.is_finite()) {
                    return bad("D must be positive");
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorSpec::GaussianMixture { centers, per, sigma, side, dim, wmax, seed } => {
                write!(f, "gaussian-mixture:centers={centers},per={per},sigma={sigma},box={side},dim={dim},wmax={wmax}")?;
                if let Some(s) = seed {
                    write!(f, ",seed={s}")?;
                }
                Ok(())
            }
            GeneratorSpec::UniformBox { n, dim, side, wmax, seed } => {
                write!(f, "uniform-box:n={n},dim={dim},side={side},wmax={wmax}")?;
                if let Some(s) = seed {
                    write!(f, ",seed={s}")?;
                }
                Ok(())
            }
            GeneratorSpec::Path { n } => write!(f, "path:n={n}"),
            GeneratorSpec::Counterexample { d } => write!(f, "counterexample-5pt:d={d}"),
        }
    }
}

struct Keys(BTreeMap<String, String>);

impl Keys {
    fn get<T: FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        match self.0.remove(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| Error::InvalidParams(format!("bad value `{v}` for `{key}`"))),
        }
    }

    fn opt<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.0.remove(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| Error::InvalidParams(format!("bad value `{v}` for `{key}`"))),
        }
    }

    fn finish(self) -> Result<()> {
        match self.0.keys().next() {
            None => Ok(()),
            Some(k) => Err(Error::InvalidParams(format!("unknown generator parameter `{k}`"))),
        }
    }
}

impl FromStr for GeneratorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut map = BTreeMap::new();
        for pair in rest.split(',').filter(|p| !p.is_empty()) {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| Error::InvalidParams(format!("generator parameter `{pair}` is not key=value")))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        let mut keys = Keys(map);
        let spec = match kind {
            "gaussian-mixture" => GeneratorSpec::GaussianMixture {
                centers: keys.get("centers", 4)?,
                per: keys.get("per", 50)?,
                sigma: keys.get("sigma", 0.1)?,
                side: keys.get("box", 10.0)?,
                dim: keys.get("dim", 2)?,
                wmax: keys.get("wmax", 1.0)?,
                seed: keys.opt("seed")?,
            },
            "uniform-box" => GeneratorSpec::UniformBox {
                n: keys.get("n", 1000)?,
                dim: keys.get("dim", 2)?,
                side: keys.get("side", 1.0)?,
                wmax: keys.get("wmax", 1.0)?,
                seed: keys.opt("seed")?,
            },
            "path" => GeneratorSpec::Path { n: keys.get("n", 64)? },
            "counterexample-5pt" => GeneratorSpec::Counterexample { d: keys.get("d", 1000.0)? },
            other => return Err(Error::InvalidParams(format!("unknown generator `{other}`"))),
        };
        keys.finish()?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Log-uniform weights in `[1, wmax)`, or unit weights when `wmax == 1`.
fn weights(n: usize, wmax: f64, rng: &mut impl Rng) -> Vec<f64> {
    if wmax <= 1.0 {
        return vec![1.0; n];
    }
    let top = wmax.ln();
    (0..n).map(|_| rng.random_range(0.0..top).exp()).collect()
}

/// Builds the instance described by `spec`. Coordinate kinds use `metric`;
/// the generator seed is the spec's own `seed` if given, else `seed`.
pub fn generate(spec: &GeneratorSpec, seed: u64, metric: MetricMode) -> Result<Instance> {
    spec.validate()?;
    match *spec {
        GeneratorSpec::GaussianMixture { centers, per, sigma, side, dim, wmax, seed: own } => {
            let mut rng = rng::stream(own.unwrap_or(seed), GENERATOR_STREAM);
            let noise = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParams(e.to_string()))?;
            let mut coords = Vec::with_capacity(centers * per * dim);
            for _ in 0..centers {
                let mean: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..side)).collect();
                for _ in 0..per {
                    coords.extend(mean.iter().map(|m| m + noise.sample(&mut rng)));
                }
            }
            let w = weights(centers * per, wmax, &mut rng);
            Instance::new(DistanceOracle::coordinates(dim, coords, metric)?, w)
        }
        GeneratorSpec::UniformBox { n, dim, side, wmax, seed: own } => {
            let mut rng = rng::stream(own.unwrap_or(seed), GENERATOR_STREAM);
            let coords = (0..n * dim).map(|_| rng.random_range(0.0..side)).collect();
            let w = weights(n, wmax, &mut rng);
            Instance::new(DistanceOracle::coordinates(dim, coords, metric)?, w)
        }
        GeneratorSpec::Path { n } => {
            let data = (0..n * n).map(|k| (k / n).abs_diff(k % n) as f64).collect();
            Instance::uniform(DistanceOracle::matrix(n, data)?)
        }
        GeneratorSpec::Counterexample { d } => {
            let coords = vec![0.0, 1.0, 0.0, 0.0, 0.0, -1.0, -d, 0.0, d, 0.0];
            Instance::uniform(DistanceOracle::coordinates(2, coords, metric)?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counterexample_coordinates() {
        let spec: GeneratorSpec = "counterexample-5pt:d=1000".parse().unwrap();
        let inst = generate(&spec, 0, MetricMode::Euclidean).unwrap();
        let pts: Vec<&[f64]> = (0..5).map(|x| inst.coords(x).unwrap()).collect();
        assert_eq!(pts, vec![&[0.0, 1.0][..], &[0.0, 0.0], &[0.0, -1.0], &[-1000.0, 0.0], &[1000.0, 0.0]]);
        assert!(inst.has_uniform_weights());
    }

    #[test]
    fn mixture_count() {
        let spec: GeneratorSpec = "gaussian-mixture:centers=4,per=50,sigma=0.1,box=10".parse().unwrap();
        assert_eq!(generate(&spec, 3, MetricMode::Euclidean).unwrap().len(), 200);
    }

    #[test]
    fn path_is_explicit() {
        let inst = generate(&GeneratorSpec::Path { n: 64 }, 0, MetricMode::Euclidean).unwrap();
        assert_eq!(inst.len(), 64);
        assert_eq!(inst.mode(), MetricMode::ExplicitMatrix);
        assert_eq!(inst.dist(3, 60), 57.0);
    }

    #[test]
    fn deterministic_under_seed() {
        let spec: GeneratorSpec = "uniform-box:n=50,dim=3,wmax=256".parse().unwrap();
        let a = generate(&spec, 9, MetricMode::Euclidean).unwrap();
        let b = generate(&spec, 9, MetricMode::Euclidean).unwrap();
        let c = generate(&spec, 10, MetricMode::Euclidean).unwrap();
        assert_eq!(a.oracle(), b.oracle());
        assert_eq!(a.raw_weights(), b.raw_weights());
        assert_ne!(a.oracle(), c.oracle());
        assert!(a.raw_weights().iter().all(|&w| (1.0..256.0).contains(&w)));
    }

    #[test]
    fn spec_round_trips_through_display() {
        for s in ["gaussian-mixture:centers=3,per=7,sigma=0.5,box=2,dim=2,wmax=1,seed=4", "path:n=5"] {
            let spec: GeneratorSpec = s.parse().unwrap();
            assert_eq!(spec.to_string().parse::<GeneratorSpec>().unwrap(), spec);
        }
    }

    #[test]
    fn invalid_specs() {
        assert!("counterexample-5pt:d=0".parse::<GeneratorSpec>().is_err());
        assert!("path:n=4,bogus=1".parse::<GeneratorSpec>().is_err());
        assert!("spiral".parse::<GeneratorSpec>().is_err());
        assert!("path:n".parse::<GeneratorSpec>().is_err());
    }
}
