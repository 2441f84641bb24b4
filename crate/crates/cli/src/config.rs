//! Command-line flags, optional TOML config file, and their merge.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use di_audit_core::curve::ProportionPrior;
use di_audit_core::report::{AuditOptions, Format, MetricKind};
use di_audit_core::DEFAULT_FAIRNESS_BOUND;
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(name = "di-audit", version, about = "Disparate impact audits for continuous hiring scores")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute bias metrics and write a flagged report.
    ///
    /// Exits 0 when nothing is flagged, 2 when any value falls below the
    /// fairness bound, and 1 on error.
    Audit(AuditArgs),
    /// Write the 100-point binary disparate impact curve of each group as CSV.
    Curve(AuditArgs),
    /// Evaluate MeanDI, MedDI, AucDI and PfDI across a synthetic example's parameter range.
    Sweep(SweepArgs),
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct AuditArgs {
    /// TOML file with defaults for any of these options; flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Input CSV (comma-separated, header row).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Name of the score column.
    #[arg(long)]
    pub score_col: Option<String>,
    /// Comma-separated protected attribute columns.
    #[arg(long, value_delimiter = ',')]
    pub attrs: Option<Vec<String>>,
    /// Group by the combination of all attributes instead of each one separately.
    #[arg(long)]
    #[serde(default)]
    pub intersect: bool,
    /// Comma-separated subset of mean, median, thresh, auc, pf, ks.
    #[arg(long, value_delimiter = ',')]
    pub metrics: Option<Vec<String>>,
    /// Raw score threshold for the thresh metric.
    #[arg(long, allow_negative_numbers = true)]
    pub threshold: Option<f64>,
    /// `flat`, `delta:<p>`, or a file of 100 weights (`file:<path>` or a bare path).
    #[arg(long)]
    pub prior: Option<String>,
    /// Fairness bound; values strictly below it are flagged.
    #[arg(long)]
    pub bound: Option<f64>,
    /// Groups with fewer members are excluded and listed in the report.
    #[arg(long)]
    pub min_group: Option<usize>,
    /// json, csv or table.
    #[arg(long)]
    pub format: Option<String>,
    /// Output path; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SweepArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Synthetic example: 1, 2 or 3.
    #[arg(long)]
    pub example: Option<u32>,
    /// analytic or sampled.
    #[arg(long)]
    pub mode: Option<String>,
    /// Samples per group in sampled mode.
    #[arg(long)]
    pub n: Option<usize>,
    /// RNG seed in sampled mode.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub prior: Option<String>,
    #[arg(long)]
    pub bound: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn read_config<T: for<'de> Deserialize<'de> + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("cannot read config file {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("invalid config file {}", p.display()))
        }
    }
}

impl AuditArgs {
    /// Fills unset flags from the config file, if one was given.
    pub fn merged(self) -> Result<Self> {
        let file: AuditArgs = read_config(self.config.as_deref())?;
        Ok(Self {
            config: self.config,
            input: self.input.or(file.input),
            score_col: self.score_col.or(file.score_col),
            attrs: self.attrs.or(file.attrs),
            intersect: self.intersect || file.intersect,
            metrics: self.metrics.or(file.metrics),
            threshold: self.threshold.or(file.threshold),
            prior: self.prior.or(file.prior),
            bound: self.bound.or(file.bound),
            min_group: self.min_group.or(file.min_group),
            format: self.format.or(file.format),
            out: self.out.or(file.out),
        })
    }

    pub fn input(&self) -> Result<&Path> {
        self.input.as_deref().context("--input is required")
    }

    pub fn score_col(&self) -> Result<&str> {
        self.score_col.as_deref().context("--score-col is required")
    }

    pub fn attrs(&self) -> Result<Vec<String>> {
        let attrs: Vec<String> = self
            .attrs
            .iter()
            .flatten()
            .map(|a| a.trim().to_string())
            .filter(|a| !a.is_empty())
            .collect();
        if attrs.is_empty() {
            bail!("--attrs needs at least one attribute column");
        }
        Ok(attrs)
    }

    pub fn attribute_specs(&self) -> Result<Vec<Vec<String>>> {
        let attrs = self.attrs()?;
        Ok(if self.intersect {
            vec![attrs]
        } else {
            attrs.into_iter().map(|a| vec![a]).collect()
        })
    }

    pub fn min_group(&self) -> usize {
        self.min_group.unwrap_or(1)
    }

    pub fn format(&self) -> Result<Format> {
        Ok(self.format.as_deref().unwrap_or("json").parse()?)
    }

    pub fn audit_options(&self) -> Result<AuditOptions> {
        let metrics = match &self.metrics {
            Some(list) => list
                .iter()
                .map(|m| m.parse::<MetricKind>().map_err(anyhow::Error::msg))
                .collect::<Result<Vec<_>>>()?,
            None => {
                let mut m = vec![MetricKind::Mean, MetricKind::Median, MetricKind::Auc, MetricKind::Pf];
                if self.threshold.is_some() {
                    m.insert(2, MetricKind::Thresh);
                }
                m
            }
        };
        Ok(AuditOptions {
            attribute_specs: self.attribute_specs()?,
            metrics,
            threshold: self.threshold,
            prior: parse_prior(self.prior.as_deref())?,
            fairness_bound: self.bound.unwrap_or(DEFAULT_FAIRNESS_BOUND),
            min_group_size: self.min_group(),
        })
    }
}

impl SweepArgs {
    pub fn merged(self) -> Result<Self> {
        let file: SweepArgs = read_config(self.config.as_deref())?;
        Ok(Self {
            config: self.config,
            example: self.example.or(file.example),
            mode: self.mode.or(file.mode),
            n: self.n.or(file.n),
            seed: self.seed.or(file.seed),
            prior: self.prior.or(file.prior),
            bound: self.bound.or(file.bound),
            out: self.out.or(file.out),
        })
    }
}

/// `flat` (default), `delta:<p>`, `file:<path>`, or a path to a weights file.
pub fn parse_prior(spec: Option<&str>) -> Result<ProportionPrior> {
    let Some(spec) = spec.map(str::trim) else {
        return Ok(ProportionPrior::flat());
    };
    if spec.eq_ignore_ascii_case("flat") || spec.starts_with("delta:") {
        return Ok(spec.parse()?);
    }
    let path = spec.strip_prefix("file:").unwrap_or(spec);
    let text = fs::read_to_string(path)
        .with_context(|| format!("prior `{spec}` is not flat, delta:<p>, or a readable weights file"))?;
    Ok(ProportionPrior::parse_weights(&text)?)
}
