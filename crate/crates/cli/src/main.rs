//! `varopt`: stream sampling, merging, estimation and experiments.

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use varopt::experiment::{
    bench_one, parse_item_line, run_experiment, InstanceSpec, Partition, Scheme, BENCH_HEADER,
    CSV_HEADER,
};
use varopt::stats::{confidence_interval, subset_estimate, Selector, Source, VarianceReport};
use varopt::wire::{decode, serialize_sample, to_text};
use varopt::{merge, Implementation, RandomSource, Reservoir, Sample, WeightedItem};

#[derive(Parser)]
#[command(name = "varopt", version, about = "Variance-optimal weighted stream sampling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
enum Format {
    #[default]
    Binary,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a `key<TAB>weight` stream (file or stdin).
    Sample {
        input: Option<PathBuf>,
        #[arg(long)]
        k: usize,
        #[arg(long = "impl", default_value = "tree", value_parser = parse_impl)]
        implementation: Implementation,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Binary)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Merge samples of disjoint streams into one sample of size k.
    Merge {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Binary)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate the total weight of a subset of keys.
    Estimate {
        sample: PathBuf,
        /// File with one key per line.
        #[arg(long, conflicts_with = "prefix")]
        keys: Option<PathBuf>,
        #[arg(long)]
        prefix: Option<String>,
        /// Also print a two-sided interval, each side at this level.
        #[arg(long)]
        confidence: Option<f64>,
    },
    /// Monte Carlo comparison of schemes; one CSV row per scheme and partition.
    Experiment {
        /// pareto:N:SHAPE, uniform:N:LO:HI, bad:K:ELL, file:PATH or list:W1,W2,...
        #[arg(long, default_value = "pareto:100:1.5", value_parser = parse_instance)]
        instance: InstanceSpec,
        #[arg(long, value_delimiter = ',', default_value = "varopt,poisson", value_parser = parse_scheme)]
        schemes: Vec<Scheme>,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        /// single, all or mod:G (comma separated).
        #[arg(long, value_delimiter = ',', default_value = "single,all", value_parser = parse_partition)]
        partition: Vec<Partition>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Throughput of the reservoir implementations on synthetic streams.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "64,1000")]
        k: Vec<usize>,
        #[arg(long, default_value_t = 1_000_000)]
        n: usize,
        /// pareto:SHAPE or uniform:LO:HI
        #[arg(long, default_value = "pareto:1.5")]
        dist: String,
        #[arg(long = "impl", value_delimiter = ',', default_value = "tree,amortized", value_parser = parse_impl)]
        implementations: Vec<Implementation>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_impl(s: &str) -> Result<Implementation, String> {
    s.parse().map_err(|e: varopt::Error| e.to_string())
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: varopt::Error| e.to_string())
}

fn parse_partition(s: &str) -> Result<Partition, String> {
    s.parse().map_err(|e: varopt::Error| e.to_string())
}

fn parse_instance(s: &str) -> Result<InstanceSpec, String> {
    s.parse().map_err(|e: varopt::Error| e.to_string())
}

/// Bad invocation rather than bad data; exits with status 2.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Writes to `out` through a temporary file in the same directory and a
/// rename, or to stdout.
fn write_output(out: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    match out {
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)
                .with_context(|| format!("cannot create a temporary file in {}", dir.display()))?;
            tmp.write_all(bytes)?;
            tmp.as_file().sync_all()?;
            tmp.persist(path)
                .with_context(|| format!("cannot write {}", path.display()))?;
        }
    }
    Ok(())
}

fn encode(sample: &Sample, format: Format) -> anyhow::Result<Vec<u8>> {
    Ok(match format {
        Format::Binary => serialize_sample(sample)?,
        Format::Text => to_text(sample)?.into_bytes(),
    })
}

fn read_sample(path: &Path) -> anyhow::Result<Sample> {
    let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    decode(&bytes).with_context(|| format!("{}", path.display()))
}

fn cmd_sample(
    input: Option<&Path>,
    k: usize,
    implementation: Implementation,
    seed: u64,
) -> anyhow::Result<Sample> {
    let reader: Box<dyn BufRead> = match input {
        Some(p) => Box::new(BufReader::new(
            File::open(p).map_err(|e| usage(format!("cannot open {}: {e}", p.display())))?,
        )),
        None => Box::new(io::stdin().lock()),
    };
    sample_stream(reader, k, implementation, seed)
}

/// Reads one line at a time; only the reservoir is kept.
fn sample_stream(
    mut reader: impl BufRead,
    k: usize,
    implementation: Implementation,
    seed: u64,
) -> anyhow::Result<Sample> {
    let mut res = Reservoir::new(k, implementation)?;
    let mut rng = RandomSource::derived(seed, "sample");
    let mut line = String::new();
    let mut line_no = 0;
    let mut arrival = 0u64;
    loop {
        line.clear();
        line_no += 1;
        if reader
            .read_line(&mut line)
            .with_context(|| format!("line {line_no}: read failed"))?
            == 0
        {
            break;
        }
        let parsed = parse_item_line(&line, line_no).map_err(|e| match e {
            varopt::Error::Parse { position, message } => anyhow::anyhow!("line {position}: {message}"),
            other => other.into(),
        })?;
        if let Some((key, w)) = parsed {
            let item = WeightedItem::new(key, w, arrival)?;
            res.insert(item, &mut rng)
                .with_context(|| format!("line {line_no}"))?;
            arrival += 1;
        }
    }
    Ok(res.sample())
}

fn cmd_merge(inputs: &[PathBuf], k: usize, seed: u64) -> anyhow::Result<Sample> {
    let mut samples = Vec::with_capacity(inputs.len());
    for path in inputs {
        let s = read_sample(path)?;
        if s.capacity < k {
            bail!(
                "{}: sample capacity {} is smaller than the requested k = {k}",
                path.display(),
                s.capacity
            );
        }
        samples.push(s);
    }
    let mut rng = RandomSource::derived(seed, "merge");
    Ok(merge(&samples, k, &mut rng)?)
}

fn cmd_estimate(
    sample: &Path,
    keys: Option<&Path>,
    prefix: Option<String>,
    confidence: Option<f64>,
) -> anyhow::Result<String> {
    let sample = read_sample(sample)?;
    let selector = match (keys, prefix) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            Selector::keys(
                text.lines()
                    .map(str::trim_end)
                    .filter(|l| !l.is_empty() && !l.starts_with('#')),
            )
        }
        (None, Some(p)) => Selector::Prefix(p),
        (None, None) => Selector::All,
    };
    let mut out = format!("estimate\t{}\n", subset_estimate(&sample, &selector));
    if let Some(delta) = confidence {
        let (lo, hi) = confidence_interval(&sample, &selector, delta)?;
        out.push_str(&format!("interval\t{lo}\t{hi}\n"));
    }
    Ok(out)
}

fn bench_instance(dist: &str, n: usize) -> anyhow::Result<InstanceSpec> {
    let spec = match dist.split_once(':') {
        Some(("pareto", rest)) => format!("pareto:{n}:{rest}"),
        Some(("uniform", rest)) => format!("uniform:{n}:{rest}"),
        _ => return Err(usage(format!("unknown distribution `{dist}`; expected pareto:SHAPE or uniform:LO:HI"))),
    };
    spec.parse().map_err(|e: varopt::Error| usage(e.to_string()))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Sample {
            input,
            k,
            implementation,
            seed,
            format,
            out,
        } => {
            let sample = cmd_sample(input.as_deref(), k, implementation, seed)?;
            write_output(out.as_deref(), &encode(&sample, format)?)
        }
        Command::Merge {
            inputs,
            k,
            seed,
            format,
            out,
        } => {
            let sample = cmd_merge(&inputs, k, seed)?;
            write_output(out.as_deref(), &encode(&sample, format)?)
        }
        Command::Estimate {
            sample,
            keys,
            prefix,
            confidence,
        } => {
            let text = cmd_estimate(&sample, keys.as_deref(), prefix, confidence)?;
            write_output(None, text.as_bytes())
        }
        Command::Experiment {
            instance,
            schemes,
            k,
            trials,
            partition,
            seed,
            out,
        } => {
            let items = instance.generate(seed)?;
            let rows = run_experiment(&items, &schemes, k, trials, &partition, seed)?;
            let mut csv = format!("{CSV_HEADER}\n");
            for row in &rows {
                csv.push_str(&row.to_csv());
                csv.push('\n');
            }
            // Every partition of a scheme shares sigma_v and v_sigma.
            for scheme in &schemes {
                if let Some(row) = rows.iter().find(|r| r.scheme == *scheme) {
                    let report = VarianceReport {
                        sigma_v: row.sigma_v,
                        v_sigma: row.v_sigma,
                        n: items.len(),
                        source: Source::Empirical { trials },
                    };
                    eprintln!("{scheme}: {report}");
                }
            }
            write_output(out.as_deref(), csv.as_bytes())
        }
        Command::Bench {
            k,
            n,
            dist,
            implementations,
            seed,
            out,
        } => {
            let items = bench_instance(&dist, n)?.generate(seed)?;
            let mut tsv = format!("{BENCH_HEADER}\n");
            for &kk in &k {
                for &imp in &implementations {
                    tsv.push_str(&bench_one(&items, kk, imp, seed)?.to_tsv());
                    tsv.push('\n');
                }
            }
            write_output(out.as_deref(), tsv.as_bytes())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
