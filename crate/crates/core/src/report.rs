//! Audit assembly, four-fifths flagging and report serialization.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::curve::{self, check_bound, ProportionPrior, GRID_SIZE};
use crate::dataset::{self, GroupKey, GroupPartition, ScoreDataset};
use crate::error::{AuditError, Result};
use crate::ks::ks_statistic;
use crate::metrics::{self, GroupMetricVector};

/// A value is flagged when it falls strictly below the bound.
pub fn is_flagged(value: f64, fairness_bound: f64) -> bool {
    value < fairness_bound
}

pub fn flag(values: &GroupMetricVector, fairness_bound: f64) -> BTreeMap<GroupKey, bool> {
    values
        .values
        .iter()
        .map(|(k, &v)| (k.clone(), is_flagged(v, fairness_bound)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MetricKind {
    Mean,
    Median,
    Thresh,
    Auc,
    Pf,
    Ks,
}

impl MetricKind {
    pub const ALL: [MetricKind; 6] = [
        MetricKind::Mean,
        MetricKind::Median,
        MetricKind::Thresh,
        MetricKind::Auc,
        MetricKind::Pf,
        MetricKind::Ks,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::Mean => "mean",
            MetricKind::Median => "median",
            MetricKind::Thresh => "thresh",
            MetricKind::Auc => "auc",
            MetricKind::Pf => "pf",
            MetricKind::Ks => "ks",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        MetricKind::ALL
            .into_iter()
            .find(|m| m.as_str() == s.trim())
            .ok_or_else(|| format!("unknown metric `{s}` (expected mean, median, thresh, auc, pf or ks)"))
    }
}

/// What to compute in an audit.
#[derive(Clone, Debug)]
pub struct AuditOptions {
    /// Each entry is one partition: a single attribute or an intersection.
    pub attribute_specs: Vec<Vec<String>>,
    pub metrics: Vec<MetricKind>,
    pub threshold: Option<f64>,
    pub prior: ProportionPrior,
    pub fairness_bound: f64,
    pub min_group_size: usize,
}

impl AuditOptions {
    pub fn validate(&self) -> Result<()> {
        if self.metrics.is_empty() {
            return Err(AuditError::InvalidSpec("no metric selected".into()));
        }
        if self.attribute_specs.is_empty() || self.attribute_specs.iter().any(Vec::is_empty) {
            return Err(AuditError::EmptyAttributeSpec);
        }
        let wants_thresh = self.metrics.contains(&MetricKind::Thresh);
        match (wants_thresh, self.threshold) {
            (true, None) => {
                return Err(AuditError::InvalidSpec(
                    "the thresh metric needs a score threshold".into(),
                ))
            }
            (false, Some(_)) => {
                return Err(AuditError::InvalidSpec(
                    "a score threshold was given but the thresh metric is not selected".into(),
                ))
            }
            (true, Some(z)) if !z.is_finite() => {
                return Err(AuditError::InvalidSpec(format!("threshold {z} is not finite")))
            }
            _ => {}
        }
        check_bound(self.fairness_bound)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcludedGroup {
    pub group: String,
    pub size: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionSummary {
    pub attributes: Vec<String>,
    pub groups: BTreeMap<String, usize>,
    pub excluded: Vec<ExcludedGroup>,
}

impl PartitionSummary {
    pub fn of(partition: &GroupPartition, min_group_size: usize) -> Self {
        Self {
            attributes: partition.attribute_spec().to_vec(),
            groups: partition
                .counts()
                .into_iter()
                .map(|(k, n)| (k.to_string(), n))
                .collect(),
            excluded: partition
                .excluded()
                .iter()
                .map(|(k, &size)| ExcludedGroup {
                    group: k.to_string(),
                    size,
                    reason: format!("fewer than {min_group_size} members"),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub records: usize,
    pub dropped: usize,
    pub partitions: Vec<PartitionSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub grid_size: usize,
    pub prior: String,
    pub fairness_bound: f64,
    pub threshold: Option<f64>,
    pub min_group_size: usize,
    pub metrics: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlaggedValue {
    pub value: f64,
    pub flag: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricEntry {
    pub name: String,
    pub attributes: Vec<String>,
    pub groups: BTreeMap<String, FlaggedValue>,
    pub reference_group: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsEntry {
    pub attributes: Vec<String>,
    pub group_a: String,
    pub group_b: String,
    pub statistic: f64,
    pub location: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub summary: DatasetSummary,
    pub config: ConfigEcho,
    pub metrics: Vec<MetricEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ks: Option<Vec<KsEntry>>,
}

impl AuditReport {
    pub fn new(summary: DatasetSummary, config: ConfigEcho) -> Self {
        Self {
            summary,
            config,
            metrics: Vec::new(),
            ks: None,
        }
    }

    /// Appends a metric row, flagging each group against the configured bound.
    pub fn push_metric(&mut self, attributes: &[String], values: &GroupMetricVector) {
        let bound = self.config.fairness_bound;
        self.metrics.push(MetricEntry {
            name: values.metric.clone(),
            attributes: attributes.to_vec(),
            groups: values
                .values
                .iter()
                .map(|(k, &value)| {
                    (
                        k.to_string(),
                        FlaggedValue {
                            value,
                            flag: is_flagged(value, bound),
                        },
                    )
                })
                .collect(),
            reference_group: values.reference_group.to_string(),
        });
    }

    /// KS distance for every unordered pair of groups in the partition.
    pub fn push_ks(&mut self, partition: &GroupPartition) -> Result<()> {
        let groups: Vec<_> = partition.groups().iter().collect();
        let entries = self.ks.get_or_insert_with(Vec::new);
        for (i, (ka, a)) in groups.iter().enumerate() {
            for (kb, b) in &groups[i + 1..] {
                let r = ks_statistic(a, b)?;
                entries.push(KsEntry {
                    attributes: partition.attribute_spec().to_vec(),
                    group_a: ka.to_string(),
                    group_b: kb.to_string(),
                    statistic: r.statistic,
                    location: r.location,
                });
            }
        }
        Ok(())
    }

    pub fn any_flagged(&self) -> bool {
        self.metrics
            .iter()
            .any(|m| m.groups.values().any(|g| g.flag))
    }

    pub fn render(&self, format: Format) -> Result<String> {
        render(self, format)
    }
}

/// Runs every requested metric on every requested partition of `ds`.
pub fn audit(ds: &ScoreDataset, opts: &AuditOptions) -> Result<AuditReport> {
    opts.validate()?;
    let mut selected = opts.metrics.clone();
    selected.sort();
    selected.dedup();

    let partitions = opts
        .attribute_specs
        .iter()
        .map(|spec| dataset::partition(ds, spec, opts.min_group_size))
        .collect::<Result<Vec<_>>>()?;

    let summary = DatasetSummary {
        records: ds.len(),
        dropped: ds.dropped_count(),
        partitions: partitions
            .iter()
            .map(|p| PartitionSummary::of(p, opts.min_group_size))
            .collect(),
    };
    let config = ConfigEcho {
        grid_size: GRID_SIZE,
        prior: opts.prior.kind().to_string(),
        fairness_bound: opts.fairness_bound,
        threshold: opts.threshold,
        min_group_size: opts.min_group_size,
        metrics: selected.iter().map(|m| m.to_string()).collect(),
    };
    let mut report = AuditReport::new(summary, config);

    for p in &partitions {
        let attrs = p.attribute_spec();
        let needs_curve = selected.contains(&MetricKind::Auc) || selected.contains(&MetricKind::Pf);
        let dc = if needs_curve { Some(curve::di_curve(p)?) } else { None };
        for &m in &selected {
            let v = match m {
                MetricKind::Mean => metrics::mean_di(p)?,
                MetricKind::Median => metrics::med_di(p)?,
                MetricKind::Thresh => metrics::thresh_di(p, opts.threshold.expect("validated"))?,
                MetricKind::Auc => curve::auc_di(dc.as_ref().unwrap(), &opts.prior)?,
                MetricKind::Pf => {
                    curve::pf_di(dc.as_ref().unwrap(), &opts.prior, opts.fairness_bound)?
                }
                MetricKind::Ks => {
                    report.push_ks(p)?;
                    continue;
                }
            };
            report.push_metric(attrs, &v);
        }
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Table,
}

impl FromStr for Format {
    type Err = AuditError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "table" | "text" | "text-table" => Ok(Format::Table),
            _ => Err(AuditError::UnknownFormat(s.to_string())),
        }
    }
}

pub fn render(report: &AuditReport, format: Format) -> Result<String> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report)?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => render_csv(report),
        Format::Table => Ok(render_table(report)),
    }
}

fn render_csv(report: &AuditReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["metric", "attributes", "group", "value", "flag"])?;
    for m in &report.metrics {
        let attrs = m.attributes.join("|");
        for (g, fv) in &m.groups {
            w.write_record([
                m.name.as_str(),
                attrs.as_str(),
                g.as_str(),
                &fv.value.to_string(),
                if fv.flag { "true" } else { "false" },
            ])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

/// Metrics as rows and groups as columns, one block per partition, values
/// to six decimals with flagged cells marked `*`.
fn render_table(report: &AuditReport) -> String {
    let mut out = String::new();
    let mut blocks: Vec<(&[String], Vec<&MetricEntry>)> = Vec::new();
    for m in &report.metrics {
        match blocks.iter_mut().find(|(a, _)| *a == m.attributes.as_slice()) {
            Some((_, rows)) => rows.push(m),
            None => blocks.push((&m.attributes, vec![m])),
        }
    }

    for (attrs, rows) in &blocks {
        let mut columns: Vec<&String> = rows.iter().flat_map(|m| m.groups.keys()).collect();
        columns.sort();
        columns.dedup();

        let mut cells: Vec<Vec<String>> = Vec::with_capacity(rows.len() + 1);
        let mut header = vec![String::new()];
        header.extend(columns.iter().map(|c| c.to_string()));
        cells.push(header);
        for m in rows {
            let mut line = vec![m.name.clone()];
            for c in &columns {
                line.push(match m.groups.get(*c) {
                    Some(fv) if fv.flag => format!("{:.6}*", fv.value),
                    Some(fv) => format!("{:.6}", fv.value),
                    None => "-".into(),
                });
            }
            cells.push(line);
        }

        let widths: Vec<usize> = (0..=columns.len())
            .map(|i| cells.iter().map(|r| r[i].len()).max().unwrap_or(0))
            .collect();
        let _ = writeln!(out, "[{}]", attrs.join(" x "));
        for row in &cells {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (cell, w))| {
                    if i == 0 {
                        format!("{cell:<w$}")
                    } else {
                        format!("{cell:>w$}")
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
        out.push('\n');
    }

    if let Some(ks) = &report.ks {
        out.push_str("KS statistic\n");
        for e in ks {
            let _ = writeln!(
                out,
                "  [{}] {} vs {}: {:.6} at {}",
                e.attributes.join(" x "),
                e.group_a,
                e.group_b,
                e.statistic,
                e.location
            );
        }
        out.push('\n');
    }

    let _ = writeln!(
        out,
        "* below fairness bound {}; records {}, dropped {}",
        report.config.fairness_bound, report.summary.records, report.summary.dropped
    );
    for p in &report.summary.partitions {
        for e in &p.excluded {
            let _ = writeln!(
                out,
                "excluded [{}] {}: {} member(s), {}",
                p.attributes.join(" x "),
                e.group,
                e.size,
                e.reason
            );
        }
    }
    out
}
