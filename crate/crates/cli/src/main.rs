mod config;

use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use di_audit_core::curve::di_curve;
use di_audit_core::dataset::{ingest_csv, partition};
use di_audit_core::report::audit;
use di_audit_core::synthetic::{
    published_range, sweep_with, write_sweep_csv, SweepMetric, SweepMode, SweepOptions,
};
use di_audit_core::DEFAULT_FAIRNESS_BOUND;

use crate::config::{parse_prior, AuditArgs, Cli, Command, SweepArgs};

const EXIT_FLAGGED: u8 = 2;
const EXIT_ERROR: u8 = 1;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_ERROR)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Audit(args) => run_audit(args),
        Command::Curve(args) => run_curve(args).map(|()| false),
        Command::Sweep(args) => run_sweep(args).map(|()| false),
    };
    match result {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(EXIT_FLAGGED),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

/// Returns whether any metric was flagged.
fn run_audit(args: AuditArgs) -> Result<bool> {
    let args = args.merged()?;
    let opts = args.audit_options()?;
    let format = args.format()?;
    let ds = ingest_csv(args.input()?, args.score_col()?, &args.attrs()?)?;
    let report = audit(&ds, &opts)?;
    emit(args.out.as_deref(), report.render(format)?.as_bytes())?;
    Ok(report.any_flagged())
}

fn run_curve(args: AuditArgs) -> Result<()> {
    let args = args.merged()?;
    let specs = args.attribute_specs()?;
    if specs.len() != 1 {
        bail!("curve takes a single attribute, or several together with --intersect");
    }
    let ds = ingest_csv(args.input()?, args.score_col()?, &args.attrs()?)?;
    let p = partition(&ds, &specs[0], args.min_group())?;
    let mut buf = Vec::new();
    di_curve(&p)?.write_csv(&mut buf)?;
    emit(args.out.as_deref(), &buf)
}

fn run_sweep(args: SweepArgs) -> Result<()> {
    let args = args.merged()?;
    let example = args.example.context("--example is required")?;
    let mode = match args.mode.as_deref().unwrap_or("analytic") {
        "analytic" => SweepMode::Analytic,
        "sampled" => SweepMode::Sampled {
            n_per_group: args.n.unwrap_or(100_000),
            seed: args.seed.unwrap_or(0),
        },
        other => bail!("unknown mode `{other}` (expected analytic or sampled)"),
    };
    let opts = SweepOptions {
        prior: parse_prior(args.prior.as_deref())?,
        fairness_bound: args.bound.unwrap_or(DEFAULT_FAIRNESS_BOUND),
        ..SweepOptions::default()
    };
    let params = published_range(example)?;
    let rows = sweep_with(example, &params, &SweepMetric::ALL, mode, &opts)?;
    let mut buf = Vec::new();
    write_sweep_csv(&rows, &mut buf)?;
    emit(args.out.as_deref(), &buf)
}
