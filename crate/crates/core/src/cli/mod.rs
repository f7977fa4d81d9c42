//! Batch command-line front end: parse flags, load or generate a dataset,
//! run the plan and report.

mod args;
mod data;
mod output;

use std::ffi::OsString;
use std::io::Write;

pub use args::{parse_args, render, CliArgs, DataSource, ZipfSpec};
pub use data::{generate_synthetic, load_dataset, zipf_pmf, RawDataset};
pub use output::{
    best_per_protocol, format_significant, read_csv, read_csv_file, write_csv, write_csv_file,
    write_results, write_table, CSV_HEADER,
};

use crate::engine::{run_plan, ExperimentPlan, PlanOutcome};
use crate::error::Result;

/// Loads data, runs the experiment described by `args` and writes results.
pub fn execute<W: Write>(args: &CliArgs, terminal: &mut W) -> Result<PlanOutcome> {
    let (dataset, domain) = match &args.source {
        DataSource::File(path) => load_dataset(path, args.topk)?,
        DataSource::Synthetic(spec) => {
            let generated = generate_synthetic(spec, args.seed)?;
            match args.topk {
                Some(k) => {
                    let rows = generated
                        .0
                        .values()
                        .iter()
                        .map(|&v| generated.1.labels()[v].clone())
                        .collect();
                    RawDataset::from_rows(rows)?.top_k(k)?.into_dataset()?
                }
                None => generated,
            }
        }
    };
    let plan = ExperimentPlan::new(
        args.protocols.clone(),
        args.methods.clone(),
        args.epsilon,
        args.repeat,
        args.threads,
        args.metric,
        args.seed,
    )?;
    let outcome = run_plan(&plan, &dataset, &domain)?;
    if !outcome.records.is_empty() {
        write_results(&outcome.records, args.output.as_deref(), terminal)?;
    }
    Ok(outcome)
}

/// Full CLI entry point; returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match parse_args(argv) {
        Ok(a) => a,
        Err(e) => {
            if e.exit_code() == 0 {
                print!("{e}");
            } else {
                eprintln!("{e}");
            }
            return e.exit_code();
        }
    };
    let stdout = std::io::stdout();
    match execute(&args, &mut stdout.lock()) {
        Ok(outcome) if outcome.failures.is_empty() => 0,
        Ok(outcome) => {
            for f in &outcome.failures {
                eprintln!("{} + {}: {}", f.protocol, f.method, f.error);
            }
            4
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
