use std::collections::HashSet;

use crate::error::{check_weight, Error, Result};
use crate::{rel_close, REL_TOL};

/// A stream element.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedItem {
    pub key: String,
    pub weight: f64,
    /// Position in the stream. Strictly increasing within one stream.
    pub arrival: u64,
}

impl WeightedItem {
    pub fn new(key: impl Into<String>, weight: f64, arrival: u64) -> Result<Self> {
        check_weight(weight)?;
        Ok(Self {
            key: key.into(),
            weight,
            arrival,
        })
    }
}

/// Builds a stream with arrival indices `0..n` from `(key, weight)` pairs.
pub fn stream_of<K: Into<String>>(
    pairs: impl IntoIterator<Item = (K, f64)>,
) -> Result<Vec<WeightedItem>> {
    pairs
        .into_iter()
        .enumerate()
        .map(|(i, (k, w))| WeightedItem::new(k, w, i as u64))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleEntry {
    pub key: String,
    /// Unbiased estimate of the item's weight.
    pub adjusted_weight: f64,
    pub original_weight: f64,
}

/// A capacity-bounded weighted sample with its threshold. Entries are kept
/// sorted by key.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub entries: Vec<SampleEntry>,
    pub capacity: usize,
    pub threshold: f64,
    pub total_weight_seen: f64,
    pub items_seen: u64,
}

impl Sample {
    pub fn empty(capacity: usize) -> Self {
        Self {
            entries: Vec::new(),
            capacity,
            threshold: 0.0,
            total_weight_seen: 0.0,
            items_seen: 0,
        }
    }

    /// Builds a sample, sorting the entries by key.
    pub fn new(
        mut entries: Vec<SampleEntry>,
        capacity: usize,
        threshold: f64,
        total_weight_seen: f64,
        items_seen: u64,
    ) -> Self {
        entries.sort_by(|a, b| a.key.cmp(&b.key));
        Self {
            entries,
            capacity,
            threshold,
            total_weight_seen,
            items_seen,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&SampleEntry> {
        self.entries
            .binary_search_by(|e| e.key.as_str().cmp(key))
            .ok()
            .map(|i| &self.entries[i])
    }

    pub fn adjusted_total(&self) -> f64 {
        self.entries.iter().map(|e| e.adjusted_weight).sum()
    }

    /// Checks the invariants every sample produced by this crate satisfies:
    /// unique keys, exact size `min(capacity, items_seen)`, positive finite
    /// weights, no adjusted weight below the threshold, and an adjusted total
    /// equal to the total weight seen.
    pub fn validate(&self) -> Result<()> {
        let mut keys = HashSet::with_capacity(self.entries.len());
        for e in &self.entries {
            if !keys.insert(e.key.as_str()) {
                return Err(Error::DuplicateKey(e.key.clone()));
            }
            check_weight(e.adjusted_weight)?;
            check_weight(e.original_weight)?;
            if e.adjusted_weight < self.threshold * (1.0 - REL_TOL) {
                return Err(Error::Internal(format!(
                    "entry `{}` has adjusted weight {} below threshold {}",
                    e.key, e.adjusted_weight, self.threshold
                )));
            }
        }
        let expected = (self.capacity as u64).min(self.items_seen);
        if self.entries.len() as u64 != expected {
            return Err(Error::Internal(format!(
                "sample holds {} entries, expected min({}, {}) = {expected}",
                self.entries.len(),
                self.capacity,
                self.items_seen
            )));
        }
        let total = self.adjusted_total();
        if !self.entries.is_empty() && !rel_close(total, self.total_weight_seen, REL_TOL) {
            return Err(Error::Internal(format!(
                "adjusted total {total} differs from total weight seen {}",
                self.total_weight_seen
            )));
        }
        Ok(())
    }

    /// Checks `adjusted = max(original, threshold)` for every entry. Holds for
    /// reservoir output and for merges that performed sampling.
    pub fn check_threshold_rule(&self) -> Result<()> {
        for e in &self.entries {
            let expected = e.original_weight.max(self.threshold);
            if !rel_close(e.adjusted_weight, expected, REL_TOL) {
                return Err(Error::Internal(format!(
                    "entry `{}`: adjusted {} != max(original {}, threshold {})",
                    e.key, e.adjusted_weight, e.original_weight, self.threshold
                )));
            }
        }
        Ok(())
    }
}
