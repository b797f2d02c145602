//! Competing sampling schemes and an adversarial instance.
//!
//! All schemes return a [`Sample`] whose adjusted weights are unbiased
//! per-item estimates. Unlike reservoir output, these samples do not in
//! general reproduce the exact total, so [`Sample::validate`] does not apply
//! to them.

use crate::error::{Error, Result};
use crate::item::{Sample, SampleEntry, WeightedItem};
use crate::rng::RandomSource;
use crate::threshold::ipps_threshold;

fn total_weight(items: &[WeightedItem]) -> f64 {
    items.iter().map(|it| it.weight).sum()
}

fn entry(item: &WeightedItem, adjusted: f64) -> SampleEntry {
    SampleEntry {
        key: item.key.clone(),
        adjusted_weight: adjusted,
        original_weight: item.weight,
    }
}

fn identity(items: &[WeightedItem], k: usize) -> Sample {
    Sample::new(
        items.iter().map(|it| entry(it, it.weight)).collect(),
        k,
        0.0,
        total_weight(items),
        items.len() as u64,
    )
}

/// `k` items uniformly without replacement, each scaled by `n / k`.
pub fn uniform_sample(items: &[WeightedItem], k: usize, rng: &mut RandomSource) -> Result<Sample> {
    let n = items.len();
    if k >= n {
        return Ok(identity(items, k));
    }
    let scale = n as f64 / k as f64;
    let mut order: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + rng.index(n - i);
        order.swap(i, j);
    }
    let entries = order[..k].iter().map(|&i| entry(&items[i], items[i].weight * scale)).collect();
    Ok(Sample::new(entries, k, 0.0, total_weight(items), n as u64))
}

/// `k` independent draws proportional to weight. An item drawn at least once
/// is kept with adjusted weight `w / p`, where `p = 1 - (1 - w/W)^k`.
pub fn ppswr_sample(items: &[WeightedItem], k: usize, rng: &mut RandomSource) -> Result<Sample> {
    if k == 0 {
        return Err(Error::domain("k must be at least 1"));
    }
    let total = total_weight(items);
    let mut cumulative = Vec::with_capacity(items.len());
    let mut acc = 0.0;
    for it in items {
        acc += it.weight;
        cumulative.push(acc);
    }
    let mut drawn = vec![false; items.len()];
    if !items.is_empty() {
        for _ in 0..k {
            let target = rng.uniform() * acc;
            let i = cumulative.partition_point(|&c| c <= target).min(items.len() - 1);
            drawn[i] = true;
        }
    }
    let kf = k as f64;
    let entries = items
        .iter()
        .zip(&drawn)
        .filter(|(_, &d)| d)
        .map(|(it, _)| {
            let p = -(kf * (-it.weight / total).ln_1p()).exp_m1();
            entry(it, it.weight / p)
        })
        .collect();
    Ok(Sample::new(entries, k, 0.0, total, items.len() as u64))
}

/// Independent inclusion with `p = min(1, w / tau_k)`; sampled light items
/// get adjusted weight `tau_k`. The size is `k` only in expectation.
pub fn poisson_ipps_sample(items: &[WeightedItem], k: usize, rng: &mut RandomSource) -> Result<Sample> {
    let weights: Vec<f64> = items.iter().map(|it| it.weight).collect();
    let tau = ipps_threshold(&weights, k)?;
    if tau == 0.0 {
        return Ok(identity(items, k));
    }
    let mut entries = Vec::new();
    for it in items {
        if it.weight >= tau {
            entries.push(entry(it, it.weight));
        } else if rng.uniform() * tau < it.weight {
            entries.push(entry(it, tau));
        }
    }
    Ok(Sample::new(entries, k, tau, total_weight(items), items.len() as u64))
}

/// Priority sampling: priority `w / u` with `u` uniform, keep the `k` highest
/// priorities, threshold is the `(k+1)`-st highest, adjusted weight
/// `max(w, threshold)`.
pub fn priority_sample(items: &[WeightedItem], k: usize, rng: &mut RandomSource) -> Result<Sample> {
    if k == 0 {
        return Err(Error::domain("k must be at least 1"));
    }
    let n = items.len();
    if k >= n {
        return Ok(identity(items, k));
    }
    let mut ranked: Vec<(f64, usize)> = items
        .iter()
        .enumerate()
        .map(|(i, it)| (it.weight / rng.uniform(), i))
        .collect();
    ranked.select_nth_unstable_by(k, |a, b| b.0.total_cmp(&a.0));
    let tau = ranked[k].0;
    let entries = ranked[..k]
        .iter()
        .map(|&(_, i)| entry(&items[i], items[i].weight.max(tau)))
        .collect();
    Ok(Sample::new(entries, k, tau, total_weight(items), n as u64))
}

/// First `count` keys of a probability-proportional-to-size ordering without
/// replacement, generated by sorting exponential variates scaled by `1/w`.
pub fn ppswor_order(items: &[WeightedItem], count: usize, rng: &mut RandomSource) -> Vec<String> {
    let mut ranked: Vec<(f64, usize)> = items
        .iter()
        .enumerate()
        .map(|(i, it)| (rng.exponential() / it.weight, i))
        .collect();
    let count = count.min(items.len());
    if count < ranked.len() && count > 0 {
        ranked.select_nth_unstable_by(count - 1, |a, b| a.0.total_cmp(&b.0));
    }
    ranked.truncate(count);
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
    ranked.into_iter().map(|(_, i)| items[i].key.clone()).collect()
}

/// `k - 1` items of weight `ell` (keys `big0..`) followed by `ell` unit items
/// (keys `unit0..`).
pub fn bad_instance(k: usize, ell: usize) -> Result<Vec<WeightedItem>> {
    if k < 2 || ell < 1 {
        return Err(Error::domain(format!("need k >= 2 and ell >= 1, got k = {k}, ell = {ell}")));
    }
    let big = (0..k - 1).map(|i| (format!("big{i}"), ell as f64));
    let unit = (0..ell).map(|j| (format!("unit{j}"), 1.0));
    crate::item::stream_of(big.chain(unit))
}
