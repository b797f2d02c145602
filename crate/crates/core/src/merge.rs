//! Combining independent samples of disjoint item sets.
//!
//! If each input is a variance-optimal sample of capacity `k_x >= k` drawn
//! independently, then sampling `k` entries from the union of the inputs,
//! with their adjusted weights standing in for weights, gives a
//! variance-optimal sample of capacity `k` of the union of the original
//! items.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::item::{Sample, SampleEntry};
use crate::reservoir::{Implementation, Reservoir};
use crate::rng::RandomSource;

/// Merges `samples` into one sample of capacity `k`.
///
/// The union is streamed through a fresh capacity-`k` reservoir in key
/// order. When the union already fits, it is returned without sampling.
/// `items_seen` and `total_weight_seen` of the result are the sums over the
/// inputs.
pub fn merge(samples: &[Sample], k: usize, rng: &mut RandomSource) -> Result<Sample> {
    if k == 0 {
        return Err(Error::domain("merge capacity must be at least 1"));
    }
    for (i, s) in samples.iter().enumerate() {
        if s.capacity < k {
            return Err(Error::Precondition(format!(
                "input {i} has capacity {} below the merge capacity {k}",
                s.capacity
            )));
        }
    }
    let mut originals: HashMap<&str, f64> = HashMap::new();
    let mut union: Vec<&SampleEntry> = Vec::new();
    for e in samples.iter().flat_map(|s| &s.entries) {
        if originals.insert(e.key.as_str(), e.original_weight).is_some() {
            return Err(Error::DuplicateKey(e.key.clone()));
        }
        union.push(e);
    }
    let total: f64 = samples.iter().map(|s| s.total_weight_seen).sum();
    let items_seen: u64 = samples.iter().map(|s| s.items_seen).sum();

    if union.len() <= k {
        // No sampling. With several inputs this only happens when none of
        // them sampled either, so every threshold is 0.
        let threshold = samples.iter().map(|s| s.threshold).fold(0.0, f64::max);
        let entries = union.into_iter().cloned().collect();
        return Ok(Sample::new(entries, k, threshold, total, items_seen));
    }

    union.sort_by(|a, b| a.key.cmp(&b.key));
    let mut res = Reservoir::new(k, Implementation::Tree)?;
    for e in &union {
        res.push(e.key.clone(), e.adjusted_weight, rng)?;
    }
    let mut out = res.sample();
    for e in &mut out.entries {
        e.original_weight = originals[e.key.as_str()];
    }
    out.total_weight_seen = total;
    out.items_seen = items_seen;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::item::SampleEntry;

    fn single(key: &str, w: f64) -> Sample {
        Sample::new(
            vec![SampleEntry {
                key: key.into(),
                adjusted_weight: w,
                original_weight: w,
            }],
            1,
            0.0,
            w,
            1,
        )
    }

    #[test]
    fn two_singletons_at_k1() {
        let (a, b) = (single("a", 2.0), single("b", 6.0));
        let trials = 40_000;
        let mut a_wins = 0;
        for t in 0..trials {
            let mut rng = RandomSource::for_trial(11, t);
            let m = merge(&[a.clone(), b.clone()], 1, &mut rng).unwrap();
            assert_eq!(m.len(), 1);
            assert_eq!(m.threshold, 8.0);
            assert_eq!(m.entries[0].adjusted_weight, 8.0);
            assert_eq!(m.total_weight_seen, 8.0);
            assert_eq!(m.items_seen, 2);
            m.validate().unwrap();
            m.check_threshold_rule().unwrap();
            if m.entries[0].key == "a" {
                a_wins += 1;
            }
        }
        let p = a_wins as f64 / trials as f64;
        let se = (0.25f64 * 0.75 / trials as f64).sqrt();
        assert!((p - 0.25).abs() < 4.0 * se, "{p}");
    }

    #[test]
    fn small_union_is_returned_unchanged() {
        let mut rng = RandomSource::new(1);
        let (a, b) = (single("a", 2.0), single("b", 6.0));
        let mut a3 = a.clone();
        a3.capacity = 3;
        let mut b3 = b.clone();
        b3.capacity = 3;
        let m = merge(&[a3, b3], 3, &mut rng).unwrap();
        assert_eq!(m.entries.len(), 2);
        assert_eq!(m.threshold, 0.0);
        assert_eq!(m.get("b").unwrap().adjusted_weight, 6.0);
        assert_eq!(rng.draws(), 0);
    }

    #[test]
    fn identity_for_one_input() {
        let mut rng = RandomSource::new(5);
        let mut res = Reservoir::new(2, Implementation::Tree).unwrap();
        for (k, w) in [("a", 1.0), ("b", 1.0), ("c", 8.0)] {
            res.push(k, w, &mut rng).unwrap();
        }
        let s = res.sample();
        let m = merge(std::slice::from_ref(&s), 2, &mut rng).unwrap();
        assert_eq!(m, s);
    }

    #[test]
    fn errors() {
        let mut rng = RandomSource::new(1);
        let a = single("a", 1.0);
        let mut big = single("b", 1.0);
        big.capacity = 2;
        assert!(matches!(merge(&[a.clone(), big], 2, &mut rng), Err(Error::Precondition(_))));
        assert!(matches!(
            merge(&[a.clone(), a.clone()], 1, &mut rng),
            Err(Error::DuplicateKey(k)) if k == "a"
        ));
        assert!(merge(&[a], 0, &mut rng).is_err());
    }
}
