//! Subset-sum estimation, variance accounting, tail bounds and confidence
//! intervals.
//!
//! Notation: `sigma_v` is the sum of per-item variances, `v_sigma` the
//! variance of the estimated grand total. For a variance-optimal sample the
//! latter is zero and the former is as small as any scheme with the same
//! sample size can achieve.

use std::collections::HashSet;
use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::item::{Sample, WeightedItem};
use crate::rng::RandomSource;
use crate::threshold::ipps_threshold;

/// Which keys a subset query covers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Selector {
    All,
    Keys(HashSet<String>),
    Prefix(String),
}

impl Selector {
    pub fn keys<I, S>(keys: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Selector::Keys(keys.into_iter().map(Into::into).collect())
    }

    pub fn matches(&self, key: &str) -> bool {
        match self {
            Selector::All => true,
            Selector::Keys(set) => set.contains(key),
            Selector::Prefix(p) => key.starts_with(p.as_str()),
        }
    }
}

/// Sum of adjusted weights of the sampled keys accepted by `selector`.
/// Unsampled keys contribute nothing.
pub fn subset_estimate(sample: &Sample, selector: &Selector) -> f64 {
    sample
        .entries
        .iter()
        .filter(|e| selector.matches(&e.key))
        .fold(0.0, |acc, e| acc + e.adjusted_weight)
}

/// Sum of per-item variances of the ipps estimator with `k` samples:
/// `sum w (tau - w)` over the items below the threshold.
pub fn sigma_v_analytic(weights: &[f64], k: usize) -> Result<f64> {
    let tau = ipps_threshold(weights, k)?;
    Ok(weights
        .iter()
        .filter(|&&w| w < tau)
        .map(|&w| w * (tau - w))
        .sum())
}

/// Average variance over all subsets of size `m` out of `n` items.
pub fn v_m(sigma_v: f64, v_sigma: f64, n: usize, m: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::domain(format!("v_m needs n >= 2, got {n}")));
    }
    if m < 1 || m > n {
        return Err(Error::domain(format!("subset size {m} is outside [1, {n}]")));
    }
    let (n, m) = (n as f64, m as f64);
    Ok(m / n * ((n - m) / (n - 1.0) * sigma_v + (m - 1.0) / (n - 1.0) * v_sigma))
}

/// Expected variance of a random subset that includes each item
/// independently with probability `p`.
pub fn w_p(sigma_v: f64, v_sigma: f64, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("probability {p} is outside [0, 1]")));
    }
    Ok(p * ((1.0 - p) * sigma_v + p * v_sigma))
}

/// Expected variance of `sum xi_i * w_i` estimates when the auxiliary
/// multipliers `xi_i` are i.i.d. with the given mean and variance.
pub fn aux_variance(sigma_v: f64, v_sigma: f64, xi_mean: f64, xi_var: f64) -> Result<f64> {
    if !(xi_var >= 0.0) {
        return Err(Error::domain(format!("multiplier variance {xi_var} is negative")));
    }
    Ok(xi_var * sigma_v + xi_mean * xi_mean * v_sigma)
}

/// `a * ln(b / a)`, taken as 0 at `a = 0`.
fn xlog_ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a * (b.ln() - a.ln())
    }
}

/// Tail bound for the number `X` of sampled items among `m` light items with
/// `E[X] = mu`: `((m - mu)/(m - a))^(m - a) * (mu/a)^a`.
///
/// Bounds `P(X >= a)` for `a >= mu` and `P(X <= a)` for `a <= mu`.
pub fn chernoff_bound(m: f64, mu: f64, a: f64) -> Result<f64> {
    if !(a > 0.0 && a < m) {
        return Err(Error::domain(format!("a = {a} is outside (0, {m})")));
    }
    if !(mu > 0.0 && mu < m) {
        return Err(Error::domain(format!("mu = {mu} is outside (0, {m})")));
    }
    let log = xlog_ratio(m - a, m - mu) + xlog_ratio(a, mu);
    Ok(log.exp().min(1.0))
}

/// The `m`-free relaxation `e^(a - mu) * (mu/a)^a` of [`chernoff_bound`].
/// `a = 0` is allowed and gives `e^(-mu)`.
pub fn chernoff_bound_loose(mu: f64, a: f64) -> Result<f64> {
    if !(a >= 0.0 && a.is_finite()) || !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::domain(format!("need a >= 0 and mu >= 0, got a = {a}, mu = {mu}")));
    }
    if mu == 0.0 {
        return Ok(if a == 0.0 { 1.0 } else { 0.0 });
    }
    Ok((a - mu + xlog_ratio(a, mu)).exp().min(1.0))
}

const BISECTION_TOL: f64 = 1e-9;

fn bisect(mut lo: f64, mut hi: f64, mut above: impl FnMut(f64) -> bool) -> f64 {
    // Invariant: `above(lo)` is false and `above(hi)` is true.
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if above(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Interval for the true weight of the selected subset, each side failing
/// with probability at most `delta`.
///
/// An explicit key set whose keys are all in the sample has its weight known
/// exactly from the original weights. Otherwise selected entries with `original_weight >= threshold` are counted exactly.
/// The rest contribute `threshold * X`, where `X` is the number of them; the
/// range of means `mu` not rejected by the tail bound at level `delta` is
/// scaled back by the threshold. The population size of the light part is not
/// recoverable from a sample, so the `m`-free bound is used.
pub fn confidence_interval(sample: &Sample, selector: &Selector, delta: f64) -> Result<(f64, f64)> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("delta = {delta} is outside (0, 1)")));
    }
    if let Selector::Keys(keys) = selector {
        let found: Option<Vec<f64>> =
            keys.iter().map(|k| sample.get(k).map(|e| e.original_weight)).collect();
        if let Some(ws) = found {
            let w = ws.iter().sum();
            return Ok((w, w));
        }
    }
    let tau = sample.threshold;
    let mut heavy = 0.0;
    let mut light = 0usize;
    for e in sample.entries.iter().filter(|e| selector.matches(&e.key)) {
        if tau == 0.0 || e.original_weight >= tau {
            heavy += e.original_weight;
        } else {
            light += 1;
        }
    }
    if tau == 0.0 {
        return Ok((heavy, heavy));
    }
    let x = light as f64;
    let p_lower_tail = |mu: f64| chernoff_bound_loose(mu, x).unwrap_or(0.0);
    let mu_lo = if light == 0 {
        0.0
    } else {
        // P(X >= x) grows from 0 to 1 as mu goes from 0 to x.
        bisect(0.0, x, |mu| p_lower_tail(mu) >= delta)
    };
    let mut hi = x.max(1.0);
    while p_lower_tail(hi) >= delta {
        hi *= 2.0;
    }
    // P(X <= x) falls from 1 to 0 as mu grows past x.
    let mu_hi = bisect(x, hi, |mu| p_lower_tail(mu) < delta);
    Ok((heavy + tau * mu_lo, heavy + tau * mu_hi))
}

/// Where the numbers in a [`VarianceReport`] came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    Analytic,
    Empirical { trials: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VarianceReport {
    pub sigma_v: f64,
    pub v_sigma: f64,
    pub n: usize,
    pub source: Source,
}

impl VarianceReport {
    /// Analytic report for a variance-optimal sample (`v_sigma = 0`).
    pub fn varopt(weights: &[f64], k: usize) -> Result<Self> {
        Ok(Self {
            sigma_v: sigma_v_analytic(weights, k)?,
            v_sigma: 0.0,
            n: weights.len(),
            source: Source::Analytic,
        })
    }

    pub fn v_m(&self, m: usize) -> Result<f64> {
        v_m(self.sigma_v, self.v_sigma, self.n, m)
    }

    pub fn w_p(&self, p: f64) -> Result<f64> {
        w_p(self.sigma_v, self.v_sigma, p)
    }

    pub const TSV_HEADER: &'static str = "source\ttrials\tn\tsigma_v\tv_sigma\tw_half";

    pub fn to_tsv_row(&self) -> String {
        let (source, trials) = match self.source {
            Source::Analytic => ("analytic", 0),
            Source::Empirical { trials } => ("empirical", trials),
        };
        format!(
            "{source}\t{trials}\t{}\t{}\t{}\t{}",
            self.n,
            self.sigma_v,
            self.v_sigma,
            self.w_p(0.5).unwrap_or(f64::NAN)
        )
    }
}

impl fmt::Display for VarianceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let source = match self.source {
            Source::Analytic => "analytic".to_string(),
            Source::Empirical { trials } => format!("empirical ({trials} trials)"),
        };
        write!(
            f,
            "{source}: n={} sigma_v={:.6} v_sigma={:.6e} w_half={:.6}",
            self.n,
            self.sigma_v,
            self.v_sigma,
            self.w_p(0.5).unwrap_or(f64::NAN)
        )
    }
}

/// What [`empirical_report`] should accumulate beyond per-item moments.
#[derive(Clone, Debug, Default)]
pub struct ReportOptions {
    /// Pairwise covariances (quadratic in the item count).
    pub covariance: bool,
    /// Group index per item; enables the per-partition squared error.
    pub partition: Option<Vec<usize>>,
}

/// Monte Carlo estimate of the variance profile of a sampling scheme.
#[derive(Clone, Debug)]
pub struct EmpiricalReport {
    pub report: VarianceReport,
    pub trials: u64,
    /// Per-item mean of the estimate.
    pub means: Vec<f64>,
    /// Per-item sample variance of the estimate.
    pub variances: Vec<f64>,
    /// Fraction of trials each item was sampled in.
    pub inclusion: Vec<f64>,
    /// Mean of the estimated grand total.
    pub total_mean: f64,
    /// Row-major `n x n` covariance matrix, when requested.
    pub covariance: Option<Vec<f64>>,
    /// Standard errors of the covariance entries.
    pub covariance_se: Option<Vec<f64>>,
    /// Per-trial sum over groups of the squared error of the group estimate,
    /// averaged over trials, when a partition was supplied.
    pub sse_mean: Option<f64>,
}

impl EmpiricalReport {
    /// Standard error of the mean estimate of item `i`.
    pub fn mean_se(&self, i: usize) -> f64 {
        (self.variances[i] / self.trials as f64).sqrt()
    }

    pub fn cov(&self, i: usize, j: usize) -> Option<f64> {
        let n = self.means.len();
        self.covariance.as_ref().map(|c| c[i * n + j])
    }

    pub fn cov_se(&self, i: usize, j: usize) -> Option<f64> {
        let n = self.means.len();
        self.covariance_se.as_ref().map(|c| c[i * n + j])
    }
}

/// Running sums of deviations from the true weights. Shifting by the true
/// value keeps the sums small for unbiased schemes and the variance
/// computation well conditioned.
#[derive(Clone)]
struct Accumulator {
    trials: u64,
    dev: Vec<f64>,
    dev_sq: Vec<f64>,
    hits: Vec<u64>,
    total_dev: f64,
    total_dev_sq: f64,
    pair: Vec<f64>,
    pair_sq: Vec<f64>,
    sse: f64,
}

impl Accumulator {
    fn new(n: usize, covariance: bool) -> Self {
        let pairs = if covariance { n * n } else { 0 };
        Self {
            trials: 0,
            dev: vec![0.0; n],
            dev_sq: vec![0.0; n],
            hits: vec![0; n],
            total_dev: 0.0,
            total_dev_sq: 0.0,
            pair: vec![0.0; pairs],
            pair_sq: vec![0.0; pairs],
            sse: 0.0,
        }
    }

    fn absorb(&mut self, other: &Accumulator) {
        self.trials += other.trials;
        let add = |a: &mut [f64], b: &[f64]| a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        add(&mut self.dev, &other.dev);
        add(&mut self.dev_sq, &other.dev_sq);
        add(&mut self.pair, &other.pair);
        add(&mut self.pair_sq, &other.pair_sq);
        self.hits.iter_mut().zip(&other.hits).for_each(|(x, y)| *x += y);
        self.total_dev += other.total_dev;
        self.total_dev_sq += other.total_dev_sq;
        self.sse += other.sse;
    }
}

/// Trials per deterministic work unit; results do not depend on the number
/// of threads.
const CHUNK: u64 = 512;

/// Runs `scheme` once per trial, with the trial's own [`RandomSource`]
/// derived from `(seed, trial index)`, and accumulates per-item estimate
/// moments for `items`. Sampled keys not in `items` are an error.
pub fn empirical_report<F>(
    scheme: F,
    items: &[WeightedItem],
    trials: u64,
    seed: u64,
    options: &ReportOptions,
) -> Result<EmpiricalReport>
where
    F: Fn(&mut RandomSource) -> Result<Sample> + Sync,
{
    if trials == 0 {
        return Err(Error::domain("at least one trial is required"));
    }
    let n = items.len();
    let index: std::collections::HashMap<&str, usize> =
        items.iter().enumerate().map(|(i, it)| (it.key.as_str(), i)).collect();
    let truth: Vec<f64> = items.iter().map(|it| it.weight).collect();
    let total: f64 = truth.iter().sum();
    let groups = match &options.partition {
        Some(p) if p.len() != n => {
            return Err(Error::domain(format!(
                "partition labels {} items, instance has {n}",
                p.len()
            )))
        }
        Some(p) => Some((p.clone(), p.iter().max().map_or(0, |&g| g + 1))),
        None => None,
    };
    let group_truth = groups.as_ref().map(|(labels, count)| {
        let mut t = vec![0.0; *count];
        for (i, &g) in labels.iter().enumerate() {
            t[g] += truth[i];
        }
        t
    });

    let chunks = trials.div_ceil(CHUNK);
    let partials: Vec<Accumulator> = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<Accumulator> {
            let mut acc = Accumulator::new(n, options.covariance);
            let mut est = vec![0.0; n];
            let mut group_est = group_truth.as_ref().map(|t| vec![0.0; t.len()]);
            for t in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                let mut rng = RandomSource::for_trial(seed, t);
                let sample = scheme(&mut rng)?;
                est.iter_mut().for_each(|e| *e = 0.0);
                for e in &sample.entries {
                    let &i = index.get(e.key.as_str()).ok_or_else(|| {
                        Error::Internal(format!("sampled key `{}` is not in the instance", e.key))
                    })?;
                    est[i] = e.adjusted_weight;
                    acc.hits[i] += 1;
                }
                acc.trials += 1;
                let mut total_est = 0.0;
                for i in 0..n {
                    let d = est[i] - truth[i];
                    acc.dev[i] += d;
                    acc.dev_sq[i] += d * d;
                    total_est += est[i];
                }
                let d = total_est - total;
                acc.total_dev += d;
                acc.total_dev_sq += d * d;
                if options.covariance {
                    for i in 0..n {
                        let di = est[i] - truth[i];
                        for j in 0..n {
                            let p = di * (est[j] - truth[j]);
                            acc.pair[i * n + j] += p;
                            acc.pair_sq[i * n + j] += p * p;
                        }
                    }
                }
                if let (Some((labels, _)), Some(ge), Some(gt)) =
                    (&groups, group_est.as_mut(), &group_truth)
                {
                    ge.iter_mut().for_each(|g| *g = 0.0);
                    for (i, &g) in labels.iter().enumerate() {
                        ge[g] += est[i];
                    }
                    acc.sse += ge.iter().zip(gt).map(|(e, t)| (e - t) * (e - t)).sum::<f64>();
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;

    let mut acc = Accumulator::new(n, options.covariance);
    for p in &partials {
        acc.absorb(p);
    }
    let tf = trials as f64;
    // Sample variance from shifted sums; 0 for a single trial.
    let var = |s: f64, sq: f64| {
        if trials < 2 {
            0.0
        } else {
            ((sq - s * s / tf) / (tf - 1.0)).max(0.0)
        }
    };
    let variances: Vec<f64> = (0..n).map(|i| var(acc.dev[i], acc.dev_sq[i])).collect();
    let means: Vec<f64> = (0..n).map(|i| truth[i] + acc.dev[i] / tf).collect();
    let (covariance, covariance_se) = if options.covariance {
        let mut cov = vec![0.0; n * n];
        let mut se = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let (s, sq) = (acc.pair[i * n + j], acc.pair_sq[i * n + j]);
                if trials >= 2 {
                    cov[i * n + j] = (s - acc.dev[i] * acc.dev[j] / tf) / (tf - 1.0);
                    se[i * n + j] = (var(s, sq) / tf).sqrt();
                }
            }
        }
        (Some(cov), Some(se))
    } else {
        (None, None)
    };
    Ok(EmpiricalReport {
        report: VarianceReport {
            sigma_v: variances.iter().sum(),
            v_sigma: var(acc.total_dev, acc.total_dev_sq),
            n,
            source: Source::Empirical { trials },
        },
        trials,
        means,
        variances,
        inclusion: acc.hits.iter().map(|&h| h as f64 / tf).collect(),
        total_mean: total + acc.total_dev / tf,
        covariance,
        covariance_se,
        sse_mean: groups.map(|_| acc.sse / tf),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::item::SampleEntry;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn entry(key: &str, adjusted: f64, original: f64) -> SampleEntry {
        SampleEntry { key: key.into(), adjusted_weight: adjusted, original_weight: original }
    }

    fn example_sample() -> Sample {
        Sample::new(vec![entry("a", 2.0, 1.0), entry("c", 8.0, 8.0)], 2, 2.0, 10.0, 3)
    }

    #[test]
    fn estimates() {
        let s = example_sample();
        assert_eq!(subset_estimate(&s, &Selector::keys(Vec::<String>::new())), 0.0);
        assert_eq!(subset_estimate(&s, &Selector::All), 10.0);
        assert_eq!(subset_estimate(&s, &Selector::keys(["c"])), 8.0);
        assert_eq!(subset_estimate(&s, &Selector::keys(["b"])), 0.0);
        assert_eq!(subset_estimate(&s, &Selector::Prefix("a".into())), 2.0);
    }

    #[test]
    fn sigma_v_examples() {
        assert_eq!(sigma_v_analytic(&[1.0, 2.0, 3.0, 4.0], 2).unwrap(), 20.0);
        assert_eq!(sigma_v_analytic(&[1.0, 1.0, 8.0], 2).unwrap(), 2.0);
        assert_eq!(sigma_v_analytic(&[1.0, 1.0, 8.0], 3).unwrap(), 0.0);
        assert!(sigma_v_analytic(&[1.0], 0).is_err());
    }

    #[test]
    fn v_m_and_w_p_examples() {
        assert_eq!(v_m(20.0, 0.0, 4, 1).unwrap(), 5.0);
        assert_eq!(v_m(20.0, 0.0, 4, 4).unwrap(), 0.0);
        assert_relative_eq!(v_m(20.0, 0.0, 4, 2).unwrap(), 20.0 / 3.0, max_relative = 1e-15);
        assert_eq!(v_m(20.0, 7.0, 4, 4).unwrap(), 7.0);
        assert!(v_m(20.0, 0.0, 4, 0).is_err());
        assert!(v_m(20.0, 0.0, 4, 5).is_err());
        assert!(v_m(20.0, 0.0, 1, 1).is_err());
        assert_eq!(w_p(20.0, 3.0, 1.0).unwrap(), 3.0);
        assert_eq!(w_p(20.0, 3.0, 0.0).unwrap(), 0.0);
        assert_eq!(w_p(20.0, 0.0, 0.5).unwrap(), 5.0);
        assert!(w_p(1.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn aux_examples() {
        assert_eq!(aux_variance(20.0, 3.0, 2.0, 0.0).unwrap(), 12.0);
        assert_eq!(aux_variance(20.0, 3.0, 0.0, 0.5).unwrap(), 10.0);
        assert!(aux_variance(20.0, 3.0, 0.0, -0.5).is_err());
        for p in [0.0, 0.1, 0.5, 0.9, 1.0] {
            assert_relative_eq!(
                aux_variance(20.0, 3.0, p, p * (1.0 - p)).unwrap(),
                w_p(20.0, 3.0, p).unwrap(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn chernoff_spot_values() {
        assert_eq!(chernoff_bound(10.0, 2.0, 2.0).unwrap(), 1.0);
        let direct_upper = (8.0f64 / 6.0).powi(6) * 0.5f64.powi(4);
        assert_relative_eq!(chernoff_bound(10.0, 2.0, 4.0).unwrap(), direct_upper, max_relative = 1e-12);
        assert!((chernoff_bound(10.0, 2.0, 4.0).unwrap() - 0.35117).abs() < 1e-4);
        let direct_lower = (8.0f64 / 9.0).powi(9) * 2.0;
        assert_relative_eq!(chernoff_bound(10.0, 2.0, 1.0).unwrap(), direct_lower, max_relative = 1e-12);
        // High-precision evaluation of (8/9)^9 * 2.
        assert!((chernoff_bound(10.0, 2.0, 1.0).unwrap() - 0.692_878_832_229).abs() < 1e-12);
        assert!(chernoff_bound(10.0, 2.0, 10.0).is_err());
        assert!(chernoff_bound(10.0, 2.0, 0.0).is_err());
        assert!(chernoff_bound(10.0, 0.0, 1.0).is_err());
        assert_eq!(chernoff_bound_loose(2.0, 0.0).unwrap(), (-2.0f64).exp());
        assert_eq!(chernoff_bound_loose(0.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn chernoff_is_stable_for_large_m() {
        let b = chernoff_bound(1e9, 1e6, 1.1e6).unwrap();
        assert!((0.0..1e-300).contains(&b));
        let b = chernoff_bound(1e9, 1e6, 1.001e6).unwrap();
        assert!(b > 0.0 && b < 1.0 && b.is_finite());
    }

    proptest! {
        #[test]
        fn loose_bound_dominates(m in 2.0f64..1e4, fm in 0.01f64..0.99, fa in 0.01f64..0.99) {
            let (mu, a) = (fm * m, fa * m);
            let tight = chernoff_bound(m, mu, a).unwrap();
            let loose = chernoff_bound_loose(mu, a).unwrap();
            prop_assert!(tight <= loose * (1.0 + 1e-12));
            prop_assert!((0.0..=1.0).contains(&tight));
        }
    }

    #[test]
    fn confidence_degenerate_cases() {
        let s = example_sample();
        assert_eq!(confidence_interval(&s, &Selector::keys(["c"]), 0.05).unwrap(), (8.0, 8.0));
        assert_eq!(confidence_interval(&s, &Selector::keys(["a", "c"]), 0.05).unwrap(), (9.0, 9.0));
        let (lo, hi) = confidence_interval(&s, &Selector::keys(["b", "c"]), 0.05).unwrap();
        assert_eq!(lo, 8.0);
        assert_relative_eq!(hi, 8.0 + 2.0 * (1.0f64 / 0.05).ln(), max_relative = 1e-8);
        assert_eq!(
            confidence_interval(&s, &Selector::keys(Vec::<String>::new()), 0.05).unwrap().0,
            0.0
        );
        assert!(confidence_interval(&s, &Selector::All, 0.0).is_err());
        assert!(confidence_interval(&s, &Selector::All, 1.0).is_err());
        let exact = Sample::new(vec![entry("a", 1.0, 1.0)], 2, 0.0, 1.0, 1);
        assert_eq!(confidence_interval(&exact, &Selector::All, 0.1).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn confidence_bracket_the_estimate() {
        let s = example_sample();
        let (lo, hi) = confidence_interval(&s, &Selector::All, 0.05).unwrap();
        assert!(lo < 10.0 && 10.0 < hi, "{lo} {hi}");
        // The light side solves e^(x - mu) (mu/x)^x = delta for x = 1.
        let mu_lo = (lo - 8.0) / 2.0;
        let mu_hi = (hi - 8.0) / 2.0;
        assert_relative_eq!(chernoff_bound_loose(mu_lo, 1.0).unwrap(), 0.05, max_relative = 1e-6);
        assert_relative_eq!(chernoff_bound_loose(mu_hi, 1.0).unwrap(), 0.05, max_relative = 1e-6);
    }

    #[test]
    fn single_trial_has_zero_variance() {
        let items = crate::item::stream_of([("a", 1.0), ("b", 2.0)]).unwrap();
        let r = empirical_report(
            |_| Ok(Sample::new(vec![entry("a", 3.0, 1.0)], 1, 3.0, 3.0, 2)),
            &items,
            1,
            0,
            &ReportOptions { covariance: true, partition: Some(vec![0, 0]) },
        )
        .unwrap();
        assert_eq!(r.report.sigma_v, 0.0);
        assert_eq!(r.report.v_sigma, 0.0);
        assert_eq!(r.means, vec![3.0, 0.0]);
        assert_eq!(r.sse_mean, Some(0.0));
        assert!(r.covariance.unwrap().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn report_is_independent_of_thread_count() {
        let items = crate::item::stream_of([("a", 1.0), ("b", 2.0), ("c", 3.0)]).unwrap();
        let scheme = |rng: &mut RandomSource| {
            crate::baselines::poisson_ipps_sample(&items, 1, rng)
        };
        let run = || {
            empirical_report(scheme, &items, 3000, 9, &ReportOptions::default()).unwrap()
        };
        let a = run();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(run);
        assert_eq!(a.report, b.report);
        assert_eq!(a.means, b.means);
    }

    #[test]
    fn unknown_key_is_reported() {
        let items = crate::item::stream_of([("a", 1.0)]).unwrap();
        let r = empirical_report(
            |_| Ok(Sample::new(vec![entry("zz", 1.0, 1.0)], 1, 0.0, 1.0, 1)),
            &items,
            3,
            0,
            &ReportOptions::default(),
        );
        assert!(matches!(r, Err(Error::Internal(_))));
    }
}
