//! The base sampling step: reduce k+1 weighted entries to k by dropping one.
//!
//! Entry `i` is dropped with probability `q_i = 1 - min(1, w_i / tau)`, where
//! `tau` solves `sum_i min(1, w_i / tau) = k`. The `q_i` sum to one, so the
//! unit interval is cut into consecutive segments of length `q_i` and a single
//! uniform `r` picks the segment to drop. Work is done in units scaled by
//! `tau`: segment `i` has length `tau - w_i` and the target is `r * tau`.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::item::SampleEntry;
use crate::threshold::ipps_threshold;
use crate::{rel_close, REL_TOL};

/// An entry taking part in a drop, with the arrival index used to break
/// ties in the canonical order.
#[derive(Clone, Debug, PartialEq)]
pub struct DropCandidate {
    pub entry: SampleEntry,
    pub arrival: u64,
}

/// Canonical drop order: ascending adjusted weight, then ascending arrival.
pub fn canonical_cmp(a: &DropCandidate, b: &DropCandidate) -> Ordering {
    a.entry
        .adjusted_weight
        .total_cmp(&b.entry.adjusted_weight)
        .then(a.arrival.cmp(&b.arrival))
}

/// Index of the entry whose segment contains `r`, for adjusted weights given
/// in drop order. Entries at or above `tau` have empty segments.
pub(crate) fn drop_position<I>(adjusted: I, tau: f64, r: f64) -> Result<usize>
where
    I: IntoIterator<Item = f64>,
{
    let target = r * tau;
    let mut acc = 0.0;
    let mut chosen = None;
    let mut last_positive = None;
    for (i, w) in adjusted.into_iter().enumerate() {
        if w >= tau {
            continue;
        }
        acc += tau - w;
        last_positive = Some(i);
        if chosen.is_none() && acc >= target {
            chosen = Some(i);
        }
    }
    if !rel_close(acc, tau, REL_TOL) {
        return Err(Error::Internal(format!(
            "drop segments sum to {} instead of 1",
            acc / tau
        )));
    }
    // Rounding can leave `r` a hair beyond the last boundary.
    chosen
        .or(last_positive)
        .ok_or_else(|| Error::Internal("no entry below the threshold".into()))
}

/// Incremental search for the light entries of a k+1 set and their
/// threshold.
///
/// Entries already known to be light are summarized by a count and a weight
/// sum; the others are offered in ascending order. A weight `w` is light when
/// it does not exceed the threshold computed with it included, i.e.
/// `sum + w >= count * w`. Every engine and the simple case decide with this
/// one expression and sum in the same order, so they agree bit for bit even
/// when weights tie with the threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct LightScan {
    pub count: usize,
    pub sum: f64,
}

impl LightScan {
    /// `count` entries at the common adjusted weight `tau`.
    pub fn at_threshold(count: usize, tau: f64) -> Self {
        Self {
            count,
            sum: count as f64 * tau,
        }
    }

    pub fn accepts(&self, w: f64) -> bool {
        self.sum + w >= self.count as f64 * w
    }

    /// Absorbs `w` if it is light.
    pub fn offer(&mut self, w: f64) -> bool {
        let light = self.accepts(w);
        if light {
            self.sum += w;
            self.count += 1;
        }
        light
    }

    /// Threshold for the light entries absorbed so far (at least two).
    pub fn tau(&self) -> f64 {
        self.sum / (self.count - 1) as f64
    }
}

/// Drops one of `entries` (k+1 of them, already in drop order) using `r` and
/// raises the light survivors to `tau`. Returns the dropped entry and the
/// survivors in their original order.
pub fn select_drop(
    mut entries: Vec<SampleEntry>,
    tau: f64,
    r: f64,
) -> Result<(SampleEntry, Vec<SampleEntry>)> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::domain(format!("threshold must be positive, got {tau}")));
    }
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::domain(format!("r must lie in (0, 1), got {r}")));
    }
    let d = drop_position(entries.iter().map(|e| e.adjusted_weight), tau, r)?;
    let dropped = entries.remove(d);
    for e in &mut entries {
        if e.adjusted_weight < tau {
            e.adjusted_weight = tau;
        }
    }
    Ok((dropped, entries))
}

/// One complete k-out-of-(k+1) step from scratch: computes the threshold by
/// full sort, orders the candidates canonically (with `first`, if given,
/// moved to the front) and drops one.
///
/// Returns the threshold, the dropped candidate and the survivors.
pub fn reduce_by_one(
    mut candidates: Vec<DropCandidate>,
    first: Option<usize>,
    r: f64,
) -> Result<(f64, DropCandidate, Vec<DropCandidate>)> {
    let k = candidates
        .len()
        .checked_sub(1)
        .filter(|&k| k > 0)
        .ok_or_else(|| Error::domain("need at least two candidates"))?;
    let weights: Vec<f64> = candidates.iter().map(|c| c.entry.adjusted_weight).collect();
    let tau = ipps_threshold(&weights, k)?;
    let head = first.map(|i| candidates.remove(i));
    candidates.sort_by(canonical_cmp);
    if let Some(h) = head {
        candidates.insert(0, h);
    }
    let d = drop_position(candidates.iter().map(|c| c.entry.adjusted_weight), tau, r)?;
    let dropped = candidates.remove(d);
    for c in &mut candidates {
        if c.entry.adjusted_weight < tau {
            c.entry.adjusted_weight = tau;
        }
    }
    Ok((tau, dropped, candidates))
}
