//! Streaming maintenance of a variance-optimal weighted reservoir.
//!
//! The first `k` items are stored verbatim. Each later item is added to the
//! reservoir and one of the k+1 entries is dropped with the base step, which
//! keeps the reservoir a variance-optimal sample of the whole prefix.
//!
//! Entries are split into a set `L` of large items, kept at their original
//! weight (strictly above the threshold), and a pool `T` of small items whose
//! common adjusted weight is the threshold. Three engines maintain this state:
//!
//! - [`Implementation::Tree`]: order-statistic trees over `L` and `T`,
//!   logarithmic work per insert.
//! - [`Implementation::Amortized`]: a min-heap over `L` and a flat array for
//!   `T`, cheap on average.
//! - [`Implementation::Naive`]: recomputes everything by full sort on every
//!   insert. Slow; used as an oracle.
//!
//! Drop order for the segments of the unit interval is: the new item (if it
//! is light), then the remaining light entries by ascending adjusted weight,
//! ties by arrival. Tree and naive follow it exactly, so they produce the
//! same realization for the same seed. The amortized engine has the same
//! distribution but scans `T` in array order.

mod amortized;
mod naive;
mod ost;
mod simple;
mod tree;

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{check_weight, Error, Result};
use crate::item::{Sample, SampleEntry, WeightedItem};
use crate::rng::RandomSource;
use crate::{rel_close, REL_TOL};

pub use simple::{try_simple_insert, try_simple_insert_with, SimpleOutcome, SimpleView};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Implementation {
    Tree,
    Amortized,
    Naive,
}

impl Implementation {
    pub const ALL: [Implementation; 3] = [Self::Tree, Self::Amortized, Self::Naive];

    pub fn name(self) -> &'static str {
        match self {
            Self::Tree => "tree",
            Self::Amortized => "amortized",
            Self::Naive => "naive",
        }
    }
}

impl fmt::Display for Implementation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Implementation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tree" => Ok(Self::Tree),
            "amortized" => Ok(Self::Amortized),
            "naive" | "naive_oracle" => Ok(Self::Naive),
            other => Err(Error::domain(format!(
                "unknown implementation `{other}` (expected tree, amortized or naive)"
            ))),
        }
    }
}

/// Counters describing how inserts were processed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct InsertStats {
    /// Inserts that went straight into a non-full reservoir.
    pub fills: u64,
    /// Inserts resolved by the constant-time simple case.
    pub simple: u64,
    /// Inserts that ran the full algorithm.
    pub full: u64,
}

impl InsertStats {
    /// Fraction of post-fill inserts handled by the simple case.
    pub fn simple_fraction(&self) -> f64 {
        let n = self.simple + self.full;
        if n == 0 {
            0.0
        } else {
            self.simple as f64 / n as f64
        }
    }
}

/// f64 with a total order, for use in ordered containers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct OrdF64(pub f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Operations each engine provides. Counters, duplicate detection and the
/// simple-case dispatch live in [`Reservoir`].
pub(crate) trait Engine {
    fn len(&self) -> usize;
    fn threshold(&self) -> f64;
    fn large_count(&self) -> usize;
    fn large_weight(&self) -> f64;
    /// Stores an item verbatim while the reservoir is not full.
    fn fill(&mut self, item: WeightedItem);
    /// State needed by the simple case, if the engine supports it.
    fn simple_view(&self) -> Option<SimpleView>;
    /// Applies a simple-case outcome: the new item is dropped and `T` is
    /// implicitly raised to `tau`.
    fn raise_threshold(&mut self, tau: f64);
    /// Full k-out-of-(k+1) step. Uses `r` if given, otherwise draws one
    /// uniform. Returns the key of the dropped entry.
    fn insert_full(
        &mut self,
        item: WeightedItem,
        r: Option<f64>,
        rng: &mut RandomSource,
    ) -> Result<String>;
    fn entries(&self) -> Vec<SampleEntry>;
}

#[derive(Clone, Debug)]
enum Inner {
    Tree(tree::TreeReservoir),
    Amortized(amortized::AmortizedReservoir),
    Naive(naive::NaiveReservoir),
}

impl Inner {
    fn engine(&self) -> &dyn Engine {
        match self {
            Inner::Tree(e) => e,
            Inner::Amortized(e) => e,
            Inner::Naive(e) => e,
        }
    }

    fn engine_mut(&mut self) -> &mut dyn Engine {
        match self {
            Inner::Tree(e) => e,
            Inner::Amortized(e) => e,
            Inner::Naive(e) => e,
        }
    }
}

/// A variance-optimal reservoir of capacity `k`.
///
/// ```
/// use varopt::{Implementation, RandomSource, Reservoir};
///
/// let mut rng = RandomSource::new(7);
/// let mut res = Reservoir::new(2, Implementation::Tree).unwrap();
/// for (key, w) in [("a", 1.0), ("b", 1.0), ("c", 8.0)] {
///     res.push(key, w, &mut rng).unwrap();
/// }
/// let sample = res.sample();
/// assert_eq!(sample.len(), 2);
/// assert_eq!(sample.threshold, 2.0);
/// assert_eq!(sample.get("c").unwrap().adjusted_weight, 8.0);
/// assert_eq!(sample.adjusted_total(), 10.0);
/// ```
#[derive(Clone, Debug)]
pub struct Reservoir {
    inner: Inner,
    implementation: Implementation,
    capacity: usize,
    items_seen: u64,
    total_weight: f64,
    last_arrival: Option<u64>,
    resident: HashSet<String>,
    fast_path: bool,
    stats: InsertStats,
}

impl Reservoir {
    pub fn new(capacity: usize, implementation: Implementation) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::domain("reservoir capacity must be at least 1"));
        }
        let inner = match implementation {
            Implementation::Tree => Inner::Tree(tree::TreeReservoir::new(capacity)),
            Implementation::Amortized => {
                Inner::Amortized(amortized::AmortizedReservoir::new(capacity))
            }
            Implementation::Naive => Inner::Naive(naive::NaiveReservoir::new(capacity)),
        };
        Ok(Self {
            inner,
            implementation,
            capacity,
            items_seen: 0,
            total_weight: 0.0,
            last_arrival: None,
            resident: HashSet::with_capacity(capacity + 1),
            fast_path: true,
            stats: InsertStats::default(),
        })
    }

    /// Enables or disables the constant-time simple case (on by default).
    /// Both settings produce the same realization for the same seed.
    pub fn with_fast_path(mut self, enabled: bool) -> Self {
        self.fast_path = enabled;
        self
    }

    pub fn implementation(&self) -> Implementation {
        self.implementation
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.inner.engine().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn items_seen(&self) -> u64 {
        self.items_seen
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// Current threshold; 0 until more than `k` items have been seen.
    pub fn threshold(&self) -> f64 {
        self.inner.engine().threshold()
    }

    /// Number of entries kept at their original weight.
    pub fn large_count(&self) -> usize {
        self.inner.engine().large_count()
    }

    /// Number of entries whose adjusted weight is the threshold.
    pub fn small_count(&self) -> usize {
        self.len() - self.large_count()
    }

    pub fn stats(&self) -> InsertStats {
        self.stats
    }

    pub fn contains(&self, key: &str) -> bool {
        self.resident.contains(key)
    }

    /// Inserts with the next arrival index.
    pub fn push(&mut self, key: impl Into<String>, weight: f64, rng: &mut RandomSource) -> Result<()> {
        let arrival = self.last_arrival.map_or(0, |a| a + 1);
        self.insert(WeightedItem::new(key, weight, arrival)?, rng)
    }

    /// Inserts an item. Consumes no randomness while the reservoir is
    /// filling and exactly one uniform afterwards.
    ///
    /// Duplicate detection covers keys currently held in the reservoir.
    pub fn insert(&mut self, item: WeightedItem, rng: &mut RandomSource) -> Result<()> {
        check_weight(item.weight)?;
        if let Some(last) = self.last_arrival {
            if item.arrival <= last {
                return Err(Error::domain(format!(
                    "arrival index {} is not after {last}",
                    item.arrival
                )));
            }
        }
        if self.resident.contains(&item.key) {
            return Err(Error::DuplicateKey(item.key));
        }
        self.last_arrival = Some(item.arrival);
        self.items_seen += 1;
        self.total_weight += item.weight;

        let engine = self.inner.engine_mut();
        if engine.len() < self.capacity {
            self.resident.insert(item.key.clone());
            engine.fill(item);
            self.stats.fills += 1;
            return Ok(());
        }

        let mut carried = None;
        if self.fast_path {
            if let Some(view) = engine.simple_view() {
                match try_simple_insert(&view, item.weight, rng) {
                    SimpleOutcome::Handled { threshold } => {
                        engine.raise_threshold(threshold);
                        self.stats.simple += 1;
                        return Ok(());
                    }
                    SimpleOutcome::Fallback { r } => carried = r,
                }
            }
        }
        self.stats.full += 1;
        let key = item.key.clone();
        let dropped = engine.insert_full(item, carried, rng)?;
        if dropped != key {
            self.resident.remove(&dropped);
            self.resident.insert(key);
        }
        Ok(())
    }

    /// Snapshot of the current sample.
    pub fn sample(&self) -> Sample {
        Sample::new(
            self.inner.engine().entries(),
            self.capacity,
            self.threshold(),
            self.total_weight,
            self.items_seen,
        )
    }

    /// Verifies the structural invariants of the live state.
    pub fn check_invariants(&self) -> Result<()> {
        let e = self.inner.engine();
        let expected = (self.capacity as u64).min(self.items_seen) as usize;
        if e.len() != expected || self.resident.len() != expected {
            return Err(Error::Internal(format!(
                "reservoir holds {} entries ({} keys), expected {expected}",
                e.len(),
                self.resident.len()
            )));
        }
        let tau = e.threshold();
        let small = e.len() - e.large_count();
        if self.items_seen > self.capacity as u64 && small == 0 {
            return Err(Error::Internal("no entry at the threshold".into()));
        }
        let implied = tau * small as f64 + e.large_weight();
        if self.items_seen > 0 && !rel_close(implied, self.total_weight, REL_TOL) {
            return Err(Error::Internal(format!(
                "tau*|T| + w(L) = {implied} but total weight seen is {}",
                self.total_weight
            )));
        }
        self.sample().check_threshold_rule()
    }
}
