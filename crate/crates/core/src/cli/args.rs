use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{ArgGroup, Parser};

use crate::error::{Error, Result};
use crate::metrics::MetricKind;
use crate::model::{PrivacyBudget, DEFAULT_SEED};
use crate::postprocess::PostProcessKind;
use crate::protocols::ProtocolKind;

#[derive(Debug, Parser)]
#[command(
    name = "ldp-bench",
    version,
    about = "Benchmark LDP frequency oracles and post-processing methods",
    group(ArgGroup::new("source").required(true).args(["dataset", "synthetic"]))
)]
struct RawArgs {
    /// Privacy budget epsilon
    #[arg(short = 'e', long = "epsilon", default_value_t = 1.0)]
    epsilon: f64,

    /// Protocols, comma separated, or "all"
    #[arg(short = 'p', long = "protocols", default_value = "all")]
    protocols: String,

    /// Post-processing methods, comma separated, or "all" (adds the "none" baseline)
    #[arg(short = 'm', long = "methods", default_value = "all")]
    methods: String,

    /// Repetitions per experiment
    #[arg(short = 'r', long = "repeat", default_value_t = 10)]
    repeat: usize,

    /// Worker threads
    #[arg(short = 't', long = "threads", default_value_t = 1)]
    threads: usize,

    /// Dataset file: one value per line, or values in the first CSV column
    #[arg(short = 'd', long = "dataset")]
    dataset: Option<PathBuf>,

    /// Utility metric: l1, l2, kl or emd
    #[arg(short = 'u', long = "metric", default_value = "l1")]
    metric: String,

    /// Write per-combination results as CSV
    #[arg(short = 'o', long = "output")]
    output: Option<PathBuf>,

    /// Master seed
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// Keep only the k most frequent values
    #[arg(long)]
    topk: Option<usize>,

    /// Generate data instead of reading it, as zipf:<s>:<d>:<n>
    #[arg(long)]
    synthetic: Option<String>,
}

/// Zipf generator parameters: exponent `s`, domain size `d`, users `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZipfSpec {
    pub exponent: f64,
    pub domain_size: usize,
    pub users: usize,
}

impl ZipfSpec {
    pub fn new(exponent: f64, domain_size: usize, users: usize) -> Result<Self> {
        if !(exponent.is_finite() && exponent > 0.0) {
            return Err(Error::Usage(format!(
                "zipf exponent must be positive, got {exponent}"
            )));
        }
        if domain_size < 2 {
            return Err(Error::Usage(format!(
                "zipf domain size must be >= 2, got {domain_size}"
            )));
        }
        if users == 0 {
            return Err(Error::Usage("zipf user count must be >= 1".into()));
        }
        Ok(ZipfSpec {
            exponent,
            domain_size,
            users,
        })
    }
}

impl FromStr for ZipfSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Usage(format!("expected zipf:<s>:<d>:<n>, got '{s}'"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            [kind, exp, d, n] if kind.eq_ignore_ascii_case("zipf") => ZipfSpec::new(
                exp.parse().map_err(|_| bad())?,
                d.parse().map_err(|_| bad())?,
                n.parse().map_err(|_| bad())?,
            ),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for ZipfSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "zipf:{}:{}:{}",
            self.exponent, self.domain_size, self.users
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    File(PathBuf),
    Synthetic(ZipfSpec),
}

/// Validated command line.
#[derive(Debug, Clone, PartialEq)]
pub struct CliArgs {
    pub epsilon: PrivacyBudget,
    pub protocols: Vec<ProtocolKind>,
    pub methods: Vec<PostProcessKind>,
    pub repeat: usize,
    pub threads: usize,
    pub source: DataSource,
    pub metric: MetricKind,
    pub output: Option<PathBuf>,
    pub seed: u64,
    pub topk: Option<usize>,
}

fn usage(e: Error) -> Error {
    match e {
        Error::UnknownName { .. } | Error::Usage(_) => e,
        other => Error::Usage(other.to_string()),
    }
}

/// Method list where `all` also brings in the `none` baseline.
fn parse_methods(spec: &str) -> Result<Vec<PostProcessKind>> {
    let mut methods = PostProcessKind::parse_list(spec)?;
    let wants_all = spec
        .split(',')
        .any(|p| p.trim().eq_ignore_ascii_case("all"));
    if wants_all && !methods.contains(&PostProcessKind::None) {
        methods.insert(0, PostProcessKind::None);
    }
    Ok(methods)
}

pub fn parse_args<I, T>(argv: I) -> Result<CliArgs>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let raw = RawArgs::try_parse_from(argv).map_err(|e| match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Error::HelpRequested(e.to_string()),
        _ => Error::Usage(e.to_string()),
    })?;

    let epsilon = PrivacyBudget::new(raw.epsilon).map_err(usage)?;
    if raw.repeat == 0 {
        return Err(Error::Usage("-r/--repeat must be at least 1".into()));
    }
    if raw.threads == 0 {
        return Err(Error::Usage("-t/--threads must be at least 1".into()));
    }
    if raw.topk == Some(0) {
        return Err(Error::Usage("--topk must be at least 1".into()));
    }
    let source = match (raw.dataset, raw.synthetic) {
        (Some(path), None) => DataSource::File(path),
        (None, Some(spec)) => DataSource::Synthetic(spec.parse()?),
        _ => {
            return Err(Error::Usage(
                "exactly one of -d or --synthetic is required".into(),
            ))
        }
    };

    Ok(CliArgs {
        epsilon,
        protocols: ProtocolKind::parse_list(&raw.protocols).map_err(usage)?,
        methods: parse_methods(&raw.methods).map_err(usage)?,
        repeat: raw.repeat,
        threads: raw.threads,
        source,
        metric: raw.metric.parse().map_err(usage)?,
        output: raw.output,
        seed: raw.seed,
        topk: raw.topk,
    })
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

/// Canonical argv (program name first) that parses back to `args`.
pub fn render(args: &CliArgs) -> Vec<String> {
    let mut argv = vec![
        "ldp-bench".to_owned(),
        "-e".into(),
        args.epsilon.epsilon().to_string(),
        "-p".into(),
        join(&args.protocols),
        "-m".into(),
        join(&args.methods),
        "-r".into(),
        args.repeat.to_string(),
        "-t".into(),
        args.threads.to_string(),
    ];
    match &args.source {
        DataSource::File(path) => {
            argv.push("-d".into());
            argv.push(path.display().to_string());
        }
        DataSource::Synthetic(spec) => {
            argv.push("--synthetic".into());
            argv.push(spec.to_string());
        }
    }
    argv.push("-u".into());
    argv.push(args.metric.to_string());
    if let Some(out) = &args.output {
        argv.push("-o".into());
        argv.push(out.display().to_string());
    }
    argv.push("--seed".into());
    argv.push(args.seed.to_string());
    if let Some(k) = args.topk {
        argv.push("--topk".into());
        argv.push(k.to_string());
    }
    argv
}
