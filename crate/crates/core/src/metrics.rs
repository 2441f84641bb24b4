//! Empirical quantiles, selection rates and pointwise disparate impact.
//!
//! All thresholds follow one convention: the pooled quantile for proportion
//! `p` over `n` scores is the lower order statistic `s[ceil(p * n)]`
//! (1-based), `p = 0` selects everyone, and a score equal to the threshold
//! counts as selected. Every threshold is therefore an observed score, and
//! for even `n` the median is the lower of the two middle values.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{GroupKey, GroupPartition};
use crate::error::{AuditError, Result};
use crate::exec::{map_indices, Execution};

/// Selection cut-off applied to scores.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Threshold {
    /// Every score is selected (the `p = 0` quantile, conceptually -inf).
    AllPass,
    /// Scores `>=` the value are selected.
    AtLeast(f64),
}

impl Threshold {
    pub fn selects(self, score: f64) -> bool {
        match self {
            Threshold::AllPass => true,
            Threshold::AtLeast(t) => score >= t,
        }
    }
}

impl From<f64> for Threshold {
    fn from(z: f64) -> Self {
        Threshold::AtLeast(z)
    }
}

impl From<QuantileThreshold> for Threshold {
    fn from(q: QuantileThreshold) -> Self {
        q.value
    }
}

/// Pooled quantile at a proportion of unsuccessful candidates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantileThreshold {
    pub proportion: f64,
    pub value: Threshold,
}

/// Per-group metric values, each in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupMetricVector {
    pub metric: String,
    pub values: BTreeMap<GroupKey, f64>,
    /// Group with the largest value (first in key order on ties).
    pub reference_group: GroupKey,
}

impl GroupMetricVector {
    pub fn value<K: Into<GroupKey>>(&self, key: K) -> Option<f64> {
        self.values.get(&key.into()).copied()
    }

    /// Builds a vector from raw values without normalizing them.
    pub fn from_values(metric: impl Into<String>, values: BTreeMap<GroupKey, f64>) -> Self {
        let reference_group = argmax(&values).clone();
        Self {
            metric: metric.into(),
            values,
            reference_group,
        }
    }

    pub fn min(&self) -> f64 {
        self.values.values().copied().fold(f64::INFINITY, f64::min)
    }
}

fn argmax(values: &BTreeMap<GroupKey, f64>) -> &GroupKey {
    let mut best: Option<(&GroupKey, f64)> = None;
    for (k, &v) in values {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((k, v));
        }
    }
    best.expect("metric vector has at least one group").0
}

/// Divides every value by the maximum. The caller guarantees the maximum is positive.
pub(crate) fn ratio_to_max(metric: &str, raw: BTreeMap<GroupKey, f64>) -> GroupMetricVector {
    let reference_group = argmax(&raw).clone();
    let max = raw[&reference_group];
    let values = raw.into_iter().map(|(k, v)| (k, v / max)).collect();
    GroupMetricVector {
        metric: metric.to_string(),
        values,
        reference_group,
    }
}

/// 1-based rank `ceil(p * n)` of the lower empirical quantile; 0 means all-pass.
///
/// `p * n` is snapped to the nearest integer when it lies within rounding
/// error of one, so that e.g. `0.07 * 100` gives rank 7 rather than 8.
pub(crate) fn quantile_rank(p: f64, n: usize) -> usize {
    let x = p * n as f64;
    let nearest = x.round();
    let rank = if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        x.ceil()
    };
    (rank as usize).min(n)
}

fn check_proportion(p: f64, allow_one: bool) -> Result<()> {
    let ok = if allow_one {
        (0.0..=1.0).contains(&p)
    } else {
        (0.0..1.0).contains(&p)
    };
    if ok {
        Ok(())
    } else {
        Err(AuditError::InvalidProportion(p))
    }
}

fn sorted(scores: &[f64]) -> Vec<f64> {
    let mut v = scores.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn count_at_least(sorted: &[f64], t: Threshold) -> usize {
    match t {
        Threshold::AllPass => sorted.len(),
        Threshold::AtLeast(z) => sorted.len() - sorted.partition_point(|&s| s < z),
    }
}

/// Lower empirical quantile of `scores` at proportion `p`.
pub fn pooled_quantile(scores: &[f64], p: f64) -> Result<QuantileThreshold> {
    if scores.is_empty() {
        return Err(AuditError::EmptyScores);
    }
    check_proportion(p, true)?;
    Ok(quantile_of_sorted(&sorted(scores), p))
}

fn quantile_of_sorted(sorted: &[f64], p: f64) -> QuantileThreshold {
    let rank = quantile_rank(p, sorted.len());
    let value = if rank == 0 {
        Threshold::AllPass
    } else {
        Threshold::AtLeast(sorted[rank - 1])
    };
    QuantileThreshold { proportion: p, value }
}

/// Fraction of `group_scores` selected by `threshold`.
pub fn selection_rate(group_scores: &[f64], threshold: impl Into<Threshold>) -> Result<f64> {
    if group_scores.is_empty() {
        return Err(AuditError::EmptyScores);
    }
    let t = threshold.into();
    let selected = group_scores.iter().filter(|&&s| t.selects(s)).count();
    Ok(selected as f64 / group_scores.len() as f64)
}

/// A partition with pooled and per-group scores sorted once, so that many
/// thresholds can be evaluated by binary search.
#[derive(Clone, Debug)]
pub struct SortedPartition {
    pooled: Vec<f64>,
    keys: Vec<GroupKey>,
    groups: Vec<Vec<f64>>,
}

impl SortedPartition {
    pub fn new(partition: &GroupPartition) -> Self {
        Self::with_execution(partition, Execution::default())
    }

    pub fn with_execution(partition: &GroupPartition, exec: Execution) -> Self {
        let keys: Vec<GroupKey> = partition.groups().keys().cloned().collect();
        let raw: Vec<&Vec<f64>> = partition.groups().values().collect();
        let groups = map_indices(raw.len(), exec, |i| sorted(raw[i]));
        let pooled = sorted(&partition.pooled());
        Self {
            pooled,
            keys,
            groups,
        }
    }

    pub fn keys(&self) -> &[GroupKey] {
        &self.keys
    }

    pub fn pooled(&self) -> &[f64] {
        &self.pooled
    }

    pub fn quantile(&self, p: f64) -> QuantileThreshold {
        quantile_of_sorted(&self.pooled, p)
    }

    /// Selection rate of each group, in key order.
    pub fn rates(&self, t: Threshold) -> Vec<f64> {
        self.groups
            .iter()
            .map(|g| count_at_least(g, t) as f64 / g.len() as f64)
            .collect()
    }

    /// Binary disparate impact at proportion `p`, in key order, together with
    /// the index of the maximizing group.
    pub fn bin_di(&self, p: f64) -> Result<(Vec<f64>, usize)> {
        check_proportion(p, false)?;
        let rates = self.rates(self.quantile(p).value);
        Ok(normalize_rates(&rates))
    }
}

/// Divides rates by their maximum; returns the ratios and the maximizing index.
pub(crate) fn normalize_rates(rates: &[f64]) -> (Vec<f64>, usize) {
    let mut best = 0;
    for (i, &r) in rates.iter().enumerate() {
        if r > rates[best] {
            best = i;
        }
    }
    let max = rates[best];
    debug_assert!(max > 0.0, "some group must have a positive rate");
    (rates.iter().map(|r| r / max).collect(), best)
}

/// Ratio of each group's mean score to the largest group mean.
pub fn mean_di(partition: &GroupPartition) -> Result<GroupMetricVector> {
    let means: BTreeMap<GroupKey, f64> = partition
        .groups()
        .iter()
        .map(|(k, v)| (k.clone(), v.iter().sum::<f64>() / v.len() as f64))
        .collect();
    let max = means.values().copied().fold(f64::NEG_INFINITY, f64::max);
    if max <= 0.0 {
        return Err(AuditError::NonPositiveMean(max));
    }
    Ok(ratio_to_max("MeanDI", means))
}

/// Binary disparate impact when the pooled `p`-quantile is the threshold.
/// `p = 1` is rejected.
pub fn bin_di_at(partition: &GroupPartition, p: f64) -> Result<GroupMetricVector> {
    check_proportion(p, false)?;
    let sp = SortedPartition::new(partition);
    let rates = sp.rates(sp.quantile(p).value);
    Ok(ratio_to_max("BinDI", sp.keys.iter().cloned().zip(rates).collect()))
}

/// Disparate impact of the above-pooled-median selection rates.
pub fn med_di(partition: &GroupPartition) -> Result<GroupMetricVector> {
    let mut v = bin_di_at(partition, 0.5)?;
    v.metric = "MedDI".into();
    Ok(v)
}

/// Disparate impact when every score `>= z` is selected.
pub fn thresh_di(partition: &GroupPartition, z: f64) -> Result<GroupMetricVector> {
    let t = Threshold::AtLeast(z);
    let rates: BTreeMap<GroupKey, f64> = partition
        .groups()
        .iter()
        .map(|(k, v)| Ok((k.clone(), selection_rate(v, t)?)))
        .collect::<Result<_>>()?;
    if rates.values().all(|&r| r <= 0.0) {
        return Err(AuditError::NoScoreReachesThreshold(z));
    }
    Ok(ratio_to_max("ThreshDI", rates))
}
