//! Monte Carlo comparison harness, instance generators, input parsing and a
//! throughput benchmark.

use std::fmt;
use std::io::BufRead;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use crate::baselines;
use crate::error::{Error, Result};
use crate::item::{Sample, WeightedItem};
use crate::reservoir::{Implementation, InsertStats, Reservoir};
use crate::rng::RandomSource;
use crate::stats::{empirical_report, ReportOptions};

/// A sampling scheme the harness can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    VarOpt(Implementation),
    Uniform,
    Ppswr,
    Poisson,
    Priority,
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [
        Scheme::VarOpt(Implementation::Tree),
        Scheme::VarOpt(Implementation::Amortized),
        Scheme::VarOpt(Implementation::Naive),
        Scheme::Uniform,
        Scheme::Ppswr,
        Scheme::Poisson,
        Scheme::Priority,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::VarOpt(Implementation::Tree) => "varopt",
            Scheme::VarOpt(Implementation::Amortized) => "varopt-amortized",
            Scheme::VarOpt(Implementation::Naive) => "varopt-naive",
            Scheme::Uniform => "uniform",
            Scheme::Ppswr => "ppswr",
            Scheme::Poisson => "poisson",
            Scheme::Priority => "priority",
        }
    }

    /// Draws one sample of `items` with capacity `k`.
    pub fn sample(self, items: &[WeightedItem], k: usize, rng: &mut RandomSource) -> Result<Sample> {
        match self {
            Scheme::VarOpt(imp) => {
                let mut res = Reservoir::new(k, imp)?;
                for it in items {
                    res.insert(it.clone(), rng)?;
                }
                Ok(res.sample())
            }
            Scheme::Uniform => baselines::uniform_sample(items, k, rng),
            Scheme::Ppswr => baselines::ppswr_sample(items, k, rng),
            Scheme::Poisson => baselines::poisson_ipps_sample(items, k, rng),
            Scheme::Priority => baselines::priority_sample(items, k, rng),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL.into_iter().find(|sc| sc.name() == s).ok_or_else(|| {
            let names: Vec<_> = Scheme::ALL.iter().map(|s| s.name()).collect();
            Error::domain(format!("unknown scheme `{s}`; valid schemes: {}", names.join(", ")))
        })
    }
}

/// Parses one `key<TAB>weight` input line. Blank lines and lines starting
/// with `#` yield `None`. `line_no` is only used in error messages.
pub fn parse_item_line(line: &str, line_no: usize) -> Result<Option<(&str, f64)>> {
    let line = line.trim_end_matches(['\r', '\n']);
    if line.trim().is_empty() || line.starts_with('#') {
        return Ok(None);
    }
    let Some((key, weight)) = line.split_once('\t') else {
        return Err(Error::parse(line_no, "expected `key<TAB>weight`"));
    };
    if key.is_empty() {
        return Err(Error::parse(line_no, "empty key"));
    }
    let w: f64 = weight
        .trim()
        .parse()
        .map_err(|_| Error::parse(line_no, format!("cannot parse weight {weight:?}")))?;
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::parse(line_no, format!("weight {w} must be positive and finite")));
    }
    Ok(Some((key, w)))
}

/// Reads a whole `key<TAB>weight` file.
pub fn read_items(reader: impl BufRead) -> Result<Vec<WeightedItem>> {
    let mut items = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::parse(i + 1, e.to_string()))?;
        if let Some((key, w)) = parse_item_line(&line, i + 1)? {
            items.push(WeightedItem::new(key, w, items.len() as u64)?);
        }
    }
    Ok(items)
}

/// Where an experiment's items come from.
#[derive(Clone, Debug, PartialEq)]
pub enum InstanceSpec {
    /// `pareto:N:SHAPE`, weights `u^(-1/shape)` (Pareto with scale 1).
    Pareto { n: usize, shape: f64 },
    /// `uniform:N:LO:HI`.
    Uniform { n: usize, lo: f64, hi: f64 },
    /// `bad:K:ELL`, see [`baselines::bad_instance`].
    Bad { k: usize, ell: usize },
    /// `file:PATH` with `key<TAB>weight` lines.
    File(PathBuf),
    /// `list:W1,W2,...`, keys `i0, i1, ...`.
    List(Vec<f64>),
}

fn field<T: FromStr>(spec: &str, v: Option<&str>, what: &str) -> Result<T> {
    v.and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::domain(format!("instance `{spec}`: missing or invalid {what}")))
}

impl FromStr for InstanceSpec {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let mut parts = rest.split(':');
        let parsed = match kind {
            "pareto" => InstanceSpec::Pareto {
                n: field(spec, parts.next(), "N")?,
                shape: field(spec, parts.next(), "SHAPE")?,
            },
            "uniform" => InstanceSpec::Uniform {
                n: field(spec, parts.next(), "N")?,
                lo: field(spec, parts.next(), "LO")?,
                hi: field(spec, parts.next(), "HI")?,
            },
            "bad" => InstanceSpec::Bad {
                k: field(spec, parts.next(), "K")?,
                ell: field(spec, parts.next(), "ELL")?,
            },
            "file" if !rest.is_empty() => return Ok(InstanceSpec::File(PathBuf::from(rest))),
            "list" => {
                return rest
                    .split(',')
                    .map(|w| field(spec, Some(w.trim()), "weight"))
                    .collect::<Result<_>>()
                    .map(InstanceSpec::List)
            }
            _ => {
                return Err(Error::domain(format!(
                    "unknown instance `{spec}`; expected pareto:N:SHAPE, uniform:N:LO:HI, \
                     bad:K:ELL, file:PATH or list:W1,W2,..."
                )))
            }
        };
        if parts.next().is_some() {
            return Err(Error::domain(format!("instance `{spec}` has extra fields")));
        }
        Ok(parsed)
    }
}

impl InstanceSpec {
    /// Materializes the instance; synthetic ones are drawn from `seed`.
    pub fn generate(&self, seed: u64) -> Result<Vec<WeightedItem>> {
        let mut rng = RandomSource::derived(seed, "instance");
        let keyed = |ws: Vec<f64>| {
            crate::item::stream_of(ws.into_iter().enumerate().map(|(i, w)| (format!("i{i}"), w)))
        };
        match self {
            InstanceSpec::Pareto { n, shape } => {
                if !(*shape > 0.0) {
                    return Err(Error::domain("Pareto shape must be positive"));
                }
                keyed((0..*n).map(|_| rng.uniform().powf(-1.0 / shape)).collect())
            }
            InstanceSpec::Uniform { n, lo, hi } => {
                if !(*lo > 0.0 && hi >= lo) {
                    return Err(Error::domain("uniform weights need 0 < LO <= HI"));
                }
                keyed((0..*n).map(|_| lo + (hi - lo) * rng.uniform()).collect())
            }
            InstanceSpec::Bad { k, ell } => baselines::bad_instance(*k, *ell),
            InstanceSpec::File(path) => load_items(path),
            InstanceSpec::List(ws) => keyed(ws.clone()),
        }
    }
}

pub fn load_items(path: &Path) -> Result<Vec<WeightedItem>> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::domain(format!("cannot open {}: {e}", path.display())))?;
    read_items(std::io::BufReader::new(file))
}

/// How items are grouped when summing squared errors: one group with every
/// item, one group per item, or item `i` in group `i mod g`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Partition {
    Single,
    All,
    Mod(usize),
}

impl Partition {
    pub fn labels(self, n: usize) -> Vec<usize> {
        match self {
            Partition::Single => vec![0; n],
            Partition::All => (0..n).collect(),
            Partition::Mod(g) => (0..n).map(|i| i % g).collect(),
        }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Partition::Single => f.write_str("single"),
            Partition::All => f.write_str("all"),
            Partition::Mod(g) => write!(f, "mod:{g}"),
        }
    }
}

impl FromStr for Partition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Partition::Single),
            "all" => Ok(Partition::All),
            _ => match s.strip_prefix("mod:").and_then(|g| g.parse().ok()) {
                Some(g) if g > 0 => Ok(Partition::Mod(g)),
                _ => Err(Error::domain(format!(
                    "unknown partition `{s}`; expected single, all or mod:G"
                ))),
            },
        }
    }
}

pub const CSV_HEADER: &str = "scheme,k,trials,partition,sse_mean,sigma_v,v_sigma,w_half";

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRow {
    pub scheme: Scheme,
    pub k: usize,
    pub trials: u64,
    pub partition: Partition,
    pub sse_mean: f64,
    pub sigma_v: f64,
    pub v_sigma: f64,
    pub w_half: f64,
}

impl ExperimentRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.scheme,
            self.k,
            self.trials,
            self.partition,
            self.sse_mean,
            self.sigma_v,
            self.v_sigma,
            self.w_half
        )
    }
}

/// Runs every scheme on `items` for `trials` trials and reports, per
/// partition, the squared error of the group estimates averaged over trials
/// together with the scheme's variance profile.
///
/// Each scheme draws from its own seed derived from `seed`, and every
/// partition of a scheme sees the same realizations.
pub fn run_experiment(
    items: &[WeightedItem],
    schemes: &[Scheme],
    k: usize,
    trials: u64,
    partitions: &[Partition],
    seed: u64,
) -> Result<Vec<ExperimentRow>> {
    let mut rows = Vec::new();
    for &scheme in schemes {
        let scheme_seed = RandomSource::derived(seed, &format!("experiment/{scheme}")).seed();
        for &partition in partitions {
            let options = ReportOptions {
                covariance: false,
                partition: Some(partition.labels(items.len())),
            };
            let r = empirical_report(|rng| scheme.sample(items, k, rng), items, trials, scheme_seed, &options)?;
            rows.push(ExperimentRow {
                scheme,
                k,
                trials,
                partition,
                sse_mean: r.sse_mean.unwrap_or(0.0),
                sigma_v: r.report.sigma_v,
                v_sigma: r.report.v_sigma,
                w_half: r.report.w_p(0.5)?,
            });
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub implementation: Implementation,
    pub k: usize,
    pub n: usize,
    pub seconds: f64,
    pub items_per_sec: f64,
    pub stats: InsertStats,
}

pub const BENCH_HEADER: &str = "impl\tk\tn\tseconds\titems_per_sec\tsimple_fraction";

impl BenchRow {
    pub fn to_tsv(&self) -> String {
        format!(
            "{}\t{}\t{}\t{:.4}\t{:.0}\t{:.4}",
            self.implementation,
            self.k,
            self.n,
            self.seconds,
            self.items_per_sec,
            self.stats.simple_fraction()
        )
    }
}

/// Streams `items` through a fresh reservoir and times it. Item construction
/// is outside the timed region.
pub fn bench_one(
    items: &[WeightedItem],
    k: usize,
    implementation: Implementation,
    seed: u64,
) -> Result<BenchRow> {
    let owned = items.to_vec();
    let mut rng = RandomSource::derived(seed, "bench");
    let mut res = Reservoir::new(k, implementation)?;
    let start = Instant::now();
    for it in owned {
        res.insert(it, &mut rng)?;
    }
    let seconds = start.elapsed().as_secs_f64();
    Ok(BenchRow {
        implementation,
        k,
        n: items.len(),
        seconds,
        items_per_sec: items.len() as f64 / seconds.max(1e-12),
        stats: res.stats(),
    })
}
