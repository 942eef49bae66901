//! Successive-sampling approximate k-median clustering.
//!
//! The crate is organised around five pieces:
//!
//! - [`metric`]: problem instances, distance oracles, configurations,
//!   assignments and the cost functions defined over them.
//! - [`sampler`]: successive sampling, which reduces an instance to a weighted
//!   assignment with a small image.
//! - [`blackbox`]: k-median solvers used for extraction (single-swap local
//!   search) and verification (exhaustive enumeration).
//! - [`pipeline`]: the uniform-weight and arbitrary-weight algorithms that
//!   compose sampling, contraction and extraction.
//! - [`bench`]: input parsing, instance generators, Lloyd refinement and the
//!   report/benchmark plumbing used by the `ssmedian` binary.

pub mod bench;
pub mod blackbox;
pub mod error;
pub mod metric;
pub mod pipeline;
pub mod rng;
pub mod sampler;

pub use blackbox::{BruteForce, KMedianSolver, LocalSearch, LocalSearchParams};
pub use error::{Error, Result};
pub use metric::{Assignment, Configuration, DistanceOracle, Instance, MetricMode};
pub use pipeline::{uniform_kmedian, weighted_kmedian, PipelineReport};
pub use sampler::{successive_sample, SampledAssignment, SamplerParams, SamplerTrace};
