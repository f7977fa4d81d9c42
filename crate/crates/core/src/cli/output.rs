use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use crate::engine::ResultRecord;
use crate::error::{Error, Result};
use crate::metrics::{MetricKind, KL_FLOOR};
use crate::postprocess::PostProcessKind;

pub const CSV_HEADER: [&str; 10] = [
    "protocol",
    "method",
    "epsilon",
    "metric",
    "mean",
    "std",
    "runtime_s",
    "repetitions",
    "threads",
    "seed",
];

/// `%g`-style formatting with `digits` significant digits.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        format!("{}e{exp}", trim_zeros(mantissa))
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_owned()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn record_row(r: &ResultRecord) -> [String; 10] {
    [
        r.protocol.to_string(),
        r.method.to_string(),
        format_significant(r.epsilon, 6),
        r.metric.to_string(),
        format_significant(r.mean, 6),
        format_significant(r.std, 6),
        format_significant(r.runtime_s, 6),
        r.repetitions.to_string(),
        r.threads.to_string(),
        r.seed.to_string(),
    ]
}

pub fn write_csv<W: Write>(records: &[ResultRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(record_row(r))?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn write_csv_file(records: &[ResultRecord], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(records, io::BufWriter::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

fn field<T: std::str::FromStr>(row: &csv::StringRecord, i: usize) -> Result<T> {
    let raw = row.get(i).unwrap_or_default();
    raw.parse().map_err(|_| {
        Error::InvalidParameter(format!("bad value '{raw}' in column {}", CSV_HEADER[i]))
    })
}

pub fn read_csv<R: io::Read>(input: R) -> Result<Vec<ResultRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    if reader.headers()?.iter().ne(CSV_HEADER) {
        return Err(Error::InvalidParameter("unexpected results header".into()));
    }
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row?;
        out.push(ResultRecord {
            protocol: field::<String>(&row, 0)?.parse()?,
            method: field::<String>(&row, 1)?.parse()?,
            epsilon: field(&row, 2)?,
            metric: field::<String>(&row, 3)?.parse()?,
            mean: field(&row, 4)?,
            std: field(&row, 5)?,
            runtime_s: field(&row, 6)?,
            repetitions: field(&row, 7)?,
            threads: field(&row, 8)?,
            seed: field(&row, 9)?,
        });
    }
    Ok(out)
}

pub fn read_csv_file(path: &Path) -> Result<Vec<ResultRecord>> {
    read_csv(File::open(path).map_err(|e| Error::io(path, e))?)
}

/// Indices of the records carrying the lowest mean error among the
/// post-processing methods of each protocol (ties all marked). The `none`
/// baseline is never marked.
pub fn best_per_protocol(records: &[ResultRecord]) -> Vec<usize> {
    let mut marked = Vec::new();
    let mut start = 0;
    while start < records.len() {
        let protocol = records[start].protocol;
        let end = records[start..]
            .iter()
            .position(|r| r.protocol != protocol)
            .map_or(records.len(), |p| start + p);
        let candidates = (start..end).filter(|&i| records[i].method != PostProcessKind::None);
        let best = candidates
            .clone()
            .map(|i| records[i].mean)
            .fold(f64::INFINITY, f64::min);
        marked.extend(candidates.filter(|&i| records[i].mean == best));
        start = end;
    }
    marked
}

/// Human-readable summary grouped by protocol.
pub fn write_table<W: Write>(records: &[ResultRecord], out: &mut W) -> io::Result<()> {
    let best = best_per_protocol(records);
    if let Some(first) = records.first() {
        writeln!(
            out,
            "metric={} epsilon={} repetitions={} threads={} seed={}",
            first.metric,
            format_significant(first.epsilon, 6),
            first.repetitions,
            first.threads,
            first.seed
        )?;
    }
    writeln!(
        out,
        "{:<8} {:<10} {:>12} {:>12} {:>11}",
        "protocol", "method", "mean", "std", "runtime_s"
    )?;
    let mut previous = None;
    for (i, r) in records.iter().enumerate() {
        if previous.is_some() && previous != Some(r.protocol) {
            writeln!(out)?;
        }
        previous = Some(r.protocol);
        let mark = if best.contains(&i) { " *" } else { "" };
        writeln!(
            out,
            "{:<8} {:<10} {:>12} {:>12} {:>11}{mark}",
            r.protocol.to_string(),
            r.method.to_string(),
            format_significant(r.mean, 6),
            format_significant(r.std, 6),
            format_significant(r.runtime_s, 4),
        )?;
    }
    if !best.is_empty() {
        writeln!(
            out,
            "\n* lowest mean error among post-processing methods for the protocol"
        )?;
    }
    if records.iter().any(|r| r.metric == MetricKind::Kl) {
        writeln!(
            out,
            "kl: estimates floored at {KL_FLOOR:e} and renormalized before comparison"
        )?;
    }
    Ok(())
}

/// Prints the table to `terminal` and, when a path is given, writes the CSV.
pub fn write_results<W: Write>(
    records: &[ResultRecord],
    csv_path: Option<&Path>,
    terminal: &mut W,
) -> Result<()> {
    if records.is_empty() {
        return Err(Error::InvalidParameter("no results to write".into()));
    }
    write_table(records, terminal).map_err(|e| Error::io("<stdout>", e))?;
    if let Some(path) = csv_path {
        write_csv_file(records, path)?;
    }
    Ok(())
}
