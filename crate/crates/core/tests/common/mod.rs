#![allow(dead_code)]

//! Oracles shared by the integration tests. Nothing here calls into the
//! crate's threshold or drop code.

/// Solves `sum min(1, w/tau) = k` by bisection; 0 when `k >= n`.
pub fn bisect_threshold(weights: &[f64], k: usize) -> f64 {
    if k >= weights.len() {
        return 0.0;
    }
    let f = |tau: f64| weights.iter().map(|&w| (w / tau).min(1.0)).sum::<f64>() - k as f64;
    let (mut lo, mut hi) = (0.0f64, weights.iter().sum::<f64>() * 2.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// One possible final state of the streaming sampler: its probability and
/// the adjusted weight of every item (0 when not sampled).
#[derive(Clone, Debug)]
pub struct Outcome {
    pub prob: f64,
    pub adjusted: Vec<f64>,
}

/// Exact distribution of the reservoir after streaming `weights` in order
/// with capacity `k`, by enumerating every drop: when the reservoir holds
/// k+1 entries with adjusted weights `a_i`, entry `i` is dropped with
/// probability `1 - min(1, a_i / tau)`.
pub fn exact_distribution(weights: &[f64], k: usize) -> Vec<Outcome> {
    let n = weights.len();
    let mut states = vec![(1.0, Vec::<(usize, f64)>::new())];
    for (j, &w) in weights.iter().enumerate() {
        let mut next = Vec::new();
        for (p, mut held) in states {
            held.push((j, w));
            if held.len() <= k {
                next.push((p, held));
                continue;
            }
            let adj: Vec<f64> = held.iter().map(|&(_, a)| a).collect();
            let tau = bisect_threshold(&adj, k);
            for d in 0..held.len() {
                let q = 1.0 - (held[d].1 / tau).min(1.0);
                if q <= 1e-15 {
                    continue;
                }
                let survivors = held
                    .iter()
                    .enumerate()
                    .filter(|&(x, _)| x != d)
                    .map(|(_, &(i, a))| (i, a.max(tau)))
                    .collect();
                next.push((p * q, survivors));
            }
        }
        states = next;
    }
    states
        .into_iter()
        .map(|(prob, held)| {
            let mut adjusted = vec![0.0; n];
            for (i, a) in held {
                adjusted[i] = a;
            }
            Outcome { prob, adjusted }
        })
        .collect()
}

/// Exact covariance matrix of the adjusted weights.
pub fn exact_covariance(weights: &[f64], outcomes: &[Outcome]) -> Vec<Vec<f64>> {
    let n = weights.len();
    let mut cov = vec![vec![0.0; n]; n];
    for o in outcomes {
        for i in 0..n {
            for j in 0..n {
                cov[i][j] += o.prob * (o.adjusted[i] - weights[i]) * (o.adjusted[j] - weights[j]);
            }
        }
    }
    cov
}

/// Standard error of a frequency estimate of probability `p`.
pub fn binomial_se(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Inclusion test at 4 standard errors, with a floor for p near 0 or 1.
pub fn within_4se(freq: f64, p: f64, trials: u64) -> bool {
    (freq - p).abs() <= 4.0 * binomial_se(p, trials).max(1.0 / trials as f64)
}
