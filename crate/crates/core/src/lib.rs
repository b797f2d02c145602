//! Variance-optimal weighted reservoir sampling.
//!
//! The crate maintains a fixed-capacity sample of a weighted stream such that
//! every item is included with probability `min(1, w / tau)` (ipps), the sample
//! size never exceeds `k`, and the adjusted weights sum exactly to the total
//! weight seen. Samples drawn from disjoint partitions of a stream can be
//! merged into a sample of the union with the same guarantees.
//!
//! Layout:
//!
//! - [`threshold`], [`step`]: the threshold math and the k-out-of-(k+1) step.
//! - [`reservoir`]: streaming maintenance (tree, amortized and naive variants).
//! - [`merge`], [`wire`]: combining samples and shipping them between processes.
//! - [`stats`]: subset estimates, variance accounting, tail and confidence bounds.
//! - [`baselines`]: competing schemes and adversarial instances.
//! - [`experiment`]: Monte Carlo harness, instance generators and throughput bench.

pub mod baselines;
pub mod step;
mod error;
pub mod experiment;
mod item;
pub mod merge;
pub mod reservoir;
mod rng;
pub mod stats;
pub mod threshold;
pub mod wire;

pub use crate::step::select_drop;
pub use crate::error::{Error, Result};
pub use crate::item::{stream_of, Sample, SampleEntry, WeightedItem};
pub use crate::merge::merge;
pub use crate::reservoir::{Implementation, Reservoir};
pub use crate::rng::RandomSource;
pub use crate::threshold::{inclusion_probability, ipps_threshold};

/// Relative tolerance used for equality of totals and adjusted weights.
pub const REL_TOL: f64 = 1e-9;

/// Relative tolerance for internal consistency checks.
pub const CONSISTENCY_TOL: f64 = 1e-12;

pub(crate) fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
