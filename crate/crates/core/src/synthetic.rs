//! Gaussian-mixture score distributions for two-group counterexamples.
//!
//! A [`SyntheticSpec`] can be evaluated exactly through its CDFs
//! ([`analytic_curve`], [`analytic_metrics`]) or realized as a sampled
//! [`GroupPartition`] ([`sample`]) and pushed through the empirical metrics.
//! [`sweep`] runs either route across a parameter range.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::curve::{self, DiCurve, ProportionGrid, ProportionPrior};
use crate::dataset::{GroupKey, GroupPartition};
use crate::error::{AuditError, Result};
use crate::exec::{try_map_indices, Execution};
use crate::metrics::{self, normalize_rates, ratio_to_max, GroupMetricVector};
use crate::DEFAULT_FAIRNESS_BOUND;

const BISECTION_TOLERANCE: f64 = 1e-9;
const BRACKET_STD_DEVS: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub mean: f64,
    pub std_dev: f64,
    pub weight: f64,
}

impl GaussianComponent {
    fn sf(&self, x: f64) -> f64 {
        0.5 * erfc((x - self.mean) / (self.std_dev * std::f64::consts::SQRT_2))
    }

    fn cdf(&self, x: f64) -> f64 {
        0.5 * erfc((self.mean - x) / (self.std_dev * std::f64::consts::SQRT_2))
    }
}

/// A normal distribution or a finite mixture of normals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupDistribution {
    components: Vec<GaussianComponent>,
}

impl GroupDistribution {
    pub fn new(components: Vec<GaussianComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(AuditError::InvalidSpec("distribution has no components".into()));
        }
        for c in &components {
            if !(c.std_dev > 0.0 && c.std_dev.is_finite()) || !c.mean.is_finite() {
                return Err(AuditError::InvalidSpec(format!(
                    "component N({}, {}) is degenerate",
                    c.mean, c.std_dev
                )));
            }
            if !(c.weight > 0.0 && c.weight <= 1.0) {
                return Err(AuditError::InvalidSpec(format!(
                    "component weight {} is outside (0, 1]",
                    c.weight
                )));
            }
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(AuditError::InvalidSpec(format!(
                "component weights sum to {total}"
            )));
        }
        Ok(Self { components })
    }

    pub fn normal(mean: f64, std_dev: f64) -> Result<Self> {
        Self::new(vec![GaussianComponent {
            mean,
            std_dev,
            weight: 1.0,
        }])
    }

    /// Equal-weight mixture of two normals.
    pub fn bimodal(first: (f64, f64), second: (f64, f64)) -> Result<Self> {
        Self::new(vec![
            GaussianComponent {
                mean: first.0,
                std_dev: first.1,
                weight: 0.5,
            },
            GaussianComponent {
                mean: second.0,
                std_dev: second.1,
                weight: 0.5,
            },
        ])
    }

    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    pub fn mean(&self) -> f64 {
        self.components.iter().map(|c| c.weight * c.mean).sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.components.iter().map(|c| c.weight * c.cdf(x)).sum()
    }

    /// `P(X >= x)`, computed from the upper tail directly.
    pub fn sf(&self, x: f64) -> f64 {
        self.components.iter().map(|c| c.weight * c.sf(x)).sum()
    }

    fn sample_one<R: Rng>(&self, rng: &mut R) -> f64 {
        let mut u: f64 = rng.random();
        let mut chosen = self.components.last().unwrap();
        for c in &self.components {
            if u < c.weight {
                chosen = c;
                break;
            }
            u -= c.weight;
        }
        Normal::new(chosen.mean, chosen.std_dev)
            .expect("validated component")
            .sample(rng)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticGroup {
    pub name: String,
    pub distribution: GroupDistribution,
    pub proportion: f64,
}

/// Score distributions of two or more groups, kept sorted by group name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    groups: Vec<SyntheticGroup>,
}

impl SyntheticSpec {
    /// Groups with equal population proportions.
    pub fn new<S: Into<String>>(groups: Vec<(S, GroupDistribution)>) -> Result<Self> {
        let share = 1.0 / groups.len().max(1) as f64;
        Self::with_proportions(groups.into_iter().map(|(n, d)| (n, d, share)).collect())
    }

    pub fn with_proportions<S: Into<String>>(groups: Vec<(S, GroupDistribution, f64)>) -> Result<Self> {
        if groups.len() < 2 {
            return Err(AuditError::InvalidSpec("need at least two groups".into()));
        }
        let mut groups: Vec<SyntheticGroup> = groups
            .into_iter()
            .map(|(name, distribution, proportion)| SyntheticGroup {
                name: name.into(),
                distribution,
                proportion,
            })
            .collect();
        if groups.iter().any(|g| g.proportion.is_nan() || g.proportion <= 0.0) {
            return Err(AuditError::InvalidSpec("group proportions must be positive".into()));
        }
        let total: f64 = groups.iter().map(|g| g.proportion).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(AuditError::InvalidSpec(format!("group proportions sum to {total}")));
        }
        groups.sort_by(|a, b| a.name.cmp(&b.name));
        if groups.windows(2).any(|w| w[0].name == w[1].name) {
            return Err(AuditError::InvalidSpec("duplicate group name".into()));
        }
        Ok(Self { groups })
    }

    pub fn groups(&self) -> &[SyntheticGroup] {
        &self.groups
    }

    pub fn group(&self, name: &str) -> Option<&GroupDistribution> {
        self.groups.iter().find(|g| g.name == name).map(|g| &g.distribution)
    }

    fn keys(&self) -> Vec<GroupKey> {
        self.groups.iter().map(|g| GroupKey::from(g.name.as_str())).collect()
    }

    /// CDF of the population pooled over groups.
    pub fn pooled_cdf(&self, x: f64) -> f64 {
        self.groups
            .iter()
            .map(|g| g.proportion * g.distribution.cdf(x))
            .sum()
    }

    /// Interval holding all but a negligible amount of the pooled mass.
    pub fn bracket(&self) -> (f64, f64) {
        let comps = self.groups.iter().flat_map(|g| g.distribution.components());
        let (mut lo_mean, mut hi_mean, mut max_sd) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
        for c in comps {
            lo_mean = lo_mean.min(c.mean);
            hi_mean = hi_mean.max(c.mean);
            max_sd = max_sd.max(c.std_dev);
        }
        (
            lo_mean - BRACKET_STD_DEVS * max_sd,
            hi_mean + BRACKET_STD_DEVS * max_sd,
        )
    }

    /// Pooled population quantile, solved by bisection to `|F(q) - p| <= 1e-9`.
    pub fn pooled_quantile(&self, p: f64) -> Result<f64> {
        let (mut lo, mut hi) = self.bracket();
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            let err = self.pooled_cdf(mid) - p;
            if err.abs() <= BISECTION_TOLERANCE {
                return Ok(mid);
            }
            if mid <= lo || mid >= hi {
                break;
            }
            if err < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Err(AuditError::BisectionNonConvergence { p })
    }
}

/// The three two-group families: `1` varies the spread of two normals
/// (`delta`), `2` pits a normal against a wide bimodal mixture (`sigma`),
/// `3` pits two bimodal mixtures differing in their upper mode (`sigma`).
pub fn example_spec(example_id: u32, parameter: f64) -> Result<SyntheticSpec> {
    let invalid = |reason| AuditError::InvalidParameter {
        example: example_id,
        value: parameter,
        reason,
    };
    let (a, b) = match example_id {
        1 => {
            if !(0.0..10.0).contains(&parameter) {
                return Err(invalid("delta must lie in [0, 10)"));
            }
            (
                GroupDistribution::normal(50.0, 10.0 - parameter)?,
                GroupDistribution::normal(50.0, 10.0 + parameter)?,
            )
        }
        2 | 3 => {
            if !(parameter > 0.0 && parameter.is_finite()) {
                return Err(invalid("sigma must be positive"));
            }
            if example_id == 2 {
                (
                    GroupDistribution::normal(50.0, parameter)?,
                    GroupDistribution::bimodal((20.0, 10.0), (80.0, 10.0))?,
                )
            } else {
                (
                    GroupDistribution::bimodal((30.0, 10.0), (70.0, parameter))?,
                    GroupDistribution::bimodal((30.0, 10.0), (80.0, parameter))?,
                )
            }
        }
        other => return Err(AuditError::UnknownExample(other)),
    };
    SyntheticSpec::new(vec![("a", a), ("b", b)])
}

/// Published parameter values of an example, ascending.
pub fn published_range(example_id: u32) -> Result<Vec<f64>> {
    match example_id {
        1 => Ok((0..=9).map(f64::from).collect()),
        2 | 3 => Ok((1..=10).map(f64::from).collect()),
        other => Err(AuditError::UnknownExample(other)),
    }
}

/// Draws `n_per_group` scores for each group. Each group has its own
/// ChaCha8 stream derived from `seed`, so output does not depend on
/// execution mode.
pub fn sample(spec: &SyntheticSpec, n_per_group: usize, seed: u64) -> Result<GroupPartition> {
    sample_with(spec, n_per_group, seed, Execution::default())
}

pub fn sample_with(
    spec: &SyntheticSpec,
    n_per_group: usize,
    seed: u64,
    exec: Execution,
) -> Result<GroupPartition> {
    if n_per_group == 0 {
        return Err(AuditError::InvalidSpec("n_per_group must be at least 1".into()));
    }
    let draws = crate::exec::map_indices(spec.groups.len(), exec, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let dist = &spec.groups[i].distribution;
        (0..n_per_group).map(|_| dist.sample_one(&mut rng)).collect::<Vec<f64>>()
    });
    GroupPartition::from_groups(
        ["group"],
        spec.groups.iter().map(|g| g.name.as_str()).zip(draws),
    )
}

/// Population binary disparate impact curve.
pub fn analytic_curve(spec: &SyntheticSpec) -> Result<DiCurve> {
    analytic_curve_with(spec, Execution::default())
}

pub fn analytic_curve_with(spec: &SyntheticSpec, exec: Execution) -> Result<DiCurve> {
    let grid = ProportionGrid::standard();
    let keys = spec.keys();
    let points = try_map_indices(grid.len(), exec, |k| -> Result<_> {
        if k == 0 {
            return Ok((vec![1.0; keys.len()], 0));
        }
        let q = spec.pooled_quantile(grid.points()[k])?;
        let rates: Vec<f64> = spec.groups.iter().map(|g| g.distribution.sf(q)).collect();
        Ok(normalize_rates(&rates))
    })?;
    Ok(DiCurve::from_points(&keys, points))
}

/// The four headline metrics of one distribution pair, with the curve behind them.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricSet {
    pub curve: DiCurve,
    pub mean_di: GroupMetricVector,
    pub med_di: GroupMetricVector,
    pub auc_di: GroupMetricVector,
    pub pf_di: GroupMetricVector,
}

impl MetricSet {
    pub fn get(&self, metric: SweepMetric) -> &GroupMetricVector {
        match metric {
            SweepMetric::MeanDi => &self.mean_di,
            SweepMetric::MedDi => &self.med_di,
            SweepMetric::AucDi => &self.auc_di,
            SweepMetric::PfDi => &self.pf_di,
        }
    }
}

/// Metrics from population quantities: group means and the pooled median.
pub fn analytic_metrics(
    spec: &SyntheticSpec,
    prior: &ProportionPrior,
    fairness_bound: f64,
    exec: Execution,
) -> Result<MetricSet> {
    let curve = analytic_curve_with(spec, exec)?;
    let means: BTreeMap<GroupKey, f64> = spec
        .keys()
        .into_iter()
        .zip(spec.groups.iter().map(|g| g.distribution.mean()))
        .collect();
    let max_mean = means.values().copied().fold(f64::NEG_INFINITY, f64::max);
    if max_mean <= 0.0 {
        return Err(AuditError::NonPositiveMean(max_mean));
    }
    let mean_di = ratio_to_max("MeanDI", means);
    let mut med_di = curve.at(ProportionGrid::standard().nearest_index(0.5));
    med_di.metric = "MedDI".into();
    let auc_di = curve::auc_di(&curve, prior)?;
    let pf_di = curve::pf_di(&curve, prior, fairness_bound)?;
    Ok(MetricSet {
        curve,
        mean_di,
        med_di,
        auc_di,
        pf_di,
    })
}

/// Metrics of a Monte Carlo realization of `spec`.
pub fn sampled_metrics(
    spec: &SyntheticSpec,
    n_per_group: usize,
    seed: u64,
    prior: &ProportionPrior,
    fairness_bound: f64,
    exec: Execution,
) -> Result<MetricSet> {
    let partition = sample_with(spec, n_per_group, seed, exec)?;
    let curve = curve::di_curve_with(&partition, exec)?;
    Ok(MetricSet {
        mean_di: metrics::mean_di(&partition)?,
        med_di: metrics::med_di(&partition)?,
        auc_di: curve::auc_di(&curve, prior)?,
        pf_di: curve::pf_di(&curve, prior, fairness_bound)?,
        curve,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepMetric {
    MeanDi,
    MedDi,
    AucDi,
    PfDi,
}

impl SweepMetric {
    pub const ALL: [SweepMetric; 4] = [
        SweepMetric::MeanDi,
        SweepMetric::MedDi,
        SweepMetric::AucDi,
        SweepMetric::PfDi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepMetric::MeanDi => "MeanDI",
            SweepMetric::MedDi => "MedDI",
            SweepMetric::AucDi => "AucDI",
            SweepMetric::PfDi => "PfDI",
        }
    }
}

impl fmt::Display for SweepMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepMode {
    Analytic,
    /// Every parameter value reuses the same seed.
    Sampled { n_per_group: usize, seed: u64 },
}

#[derive(Clone, Debug)]
pub struct SweepOptions {
    pub prior: ProportionPrior,
    pub fairness_bound: f64,
    pub exec: Execution,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            prior: ProportionPrior::flat(),
            fairness_bound: DEFAULT_FAIRNESS_BOUND,
            exec: Execution::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub parameter: f64,
    pub group: String,
    pub metric: SweepMetric,
    pub value: f64,
}

/// Evaluates `metrics` for every parameter value, in ascending parameter order.
pub fn sweep(
    example_id: u32,
    parameters: &[f64],
    metrics: &[SweepMetric],
    mode: SweepMode,
) -> Result<Vec<SweepRow>> {
    sweep_with(example_id, parameters, metrics, mode, &SweepOptions::default())
}

pub fn sweep_with(
    example_id: u32,
    parameters: &[f64],
    metrics: &[SweepMetric],
    mode: SweepMode,
    opts: &SweepOptions,
) -> Result<Vec<SweepRow>> {
    let mut params = parameters.to_vec();
    params.sort_by(f64::total_cmp);
    let specs = params
        .iter()
        .map(|&p| example_spec(example_id, p))
        .collect::<Result<Vec<_>>>()?;
    let sets = try_map_indices(specs.len(), opts.exec, |i| match mode {
        SweepMode::Analytic => {
            analytic_metrics(&specs[i], &opts.prior, opts.fairness_bound, opts.exec)
        }
        SweepMode::Sampled { n_per_group, seed } => sampled_metrics(
            &specs[i],
            n_per_group,
            seed,
            &opts.prior,
            opts.fairness_bound,
            opts.exec,
        ),
    })?;

    let mut rows = Vec::with_capacity(params.len() * metrics.len() * 2);
    for (&parameter, set) in params.iter().zip(&sets) {
        for &metric in metrics {
            for (group, &value) in &set.get(metric).values {
                rows.push(SweepRow {
                    parameter,
                    group: group.to_string(),
                    metric,
                    value,
                });
            }
        }
    }
    Ok(rows)
}

/// Writes `parameter,group,metric,value` rows.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["parameter", "group", "metric", "value"])?;
    for r in rows {
        w.write_record([
            r.parameter.to_string(),
            r.group.clone(),
            r.metric.to_string(),
            r.value.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
