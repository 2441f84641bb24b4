//! Binary disparate impact curves over a fixed proportion grid, and their
//! prior-weighted aggregates `AucDI` and `PfDI`.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{GroupKey, GroupPartition};
use crate::error::{AuditError, Result};
use crate::exec::{try_map_indices, Execution};
use crate::metrics::{GroupMetricVector, SortedPartition};

/// Number of grid points. The grid is `k / 100` for `k = 0..100`, so it
/// contains 0 and stops at 0.99.
pub const GRID_SIZE: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct ProportionGrid {
    points: Vec<f64>,
}

impl Default for ProportionGrid {
    fn default() -> Self {
        Self::standard()
    }
}

impl ProportionGrid {
    pub fn standard() -> Self {
        Self {
            points: (0..GRID_SIZE).map(|k| k as f64 / GRID_SIZE as f64).collect(),
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index of the grid point nearest to `p`, ties going to the lower point.
    pub fn nearest_index(&self, p: f64) -> usize {
        let x = p * GRID_SIZE as f64;
        let k = (x - 0.5).ceil().max(0.0) as usize;
        k.min(GRID_SIZE - 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "at")]
pub enum PriorKind {
    Flat,
    Delta(f64),
    Custom,
}

impl fmt::Display for PriorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PriorKind::Flat => f.write_str("flat"),
            PriorKind::Delta(p) => write!(f, "delta:{p}"),
            PriorKind::Custom => f.write_str("custom"),
        }
    }
}

/// Prior over the proportion of unsuccessful candidates, discretized on the grid.
///
/// Weights are kept as given and divided by their total when aggregating,
/// so a flat prior produces exact hundredths.
#[derive(Clone, Debug, PartialEq)]
pub struct ProportionPrior {
    kind: PriorKind,
    raw: Vec<f64>,
    total: f64,
}

impl ProportionPrior {
    pub fn flat() -> Self {
        Self {
            kind: PriorKind::Flat,
            raw: vec![1.0; GRID_SIZE],
            total: GRID_SIZE as f64,
        }
    }

    /// Point mass at the grid point nearest `p`.
    pub fn delta(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(AuditError::InvalidPrior(format!(
                "delta location {p} is outside [0, 1]"
            )));
        }
        let mut raw = vec![0.0; GRID_SIZE];
        raw[ProportionGrid::standard().nearest_index(p)] = 1.0;
        Ok(Self {
            kind: PriorKind::Delta(p),
            raw,
            total: 1.0,
        })
    }

    /// Arbitrary non-negative weights, one per grid point.
    pub fn custom(weights: Vec<f64>) -> Result<Self> {
        if weights.len() != GRID_SIZE {
            return Err(AuditError::GridMismatch {
                expected: GRID_SIZE,
                found: weights.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(AuditError::InvalidPrior(format!("weight {w} is not a finite non-negative number")));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(AuditError::InvalidPrior("weights sum to zero".into()));
        }
        Ok(Self {
            kind: PriorKind::Custom,
            raw: weights,
            total,
        })
    }

    /// Parses whitespace- or comma-separated weights.
    pub fn parse_weights(text: &str) -> Result<Self> {
        let weights = text
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| AuditError::InvalidPrior(format!("`{t}` is not a number")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::custom(weights)
    }

    pub fn kind(&self) -> PriorKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    /// Normalized weights (summing to one).
    pub fn weights(&self) -> Vec<f64> {
        self.raw.iter().map(|w| w / self.total).collect()
    }

    fn check_grid(&self, curve: &DiCurve) -> Result<()> {
        if self.raw.len() != curve.grid.len() {
            return Err(AuditError::GridMismatch {
                expected: curve.grid.len(),
                found: self.raw.len(),
            });
        }
        Ok(())
    }

    fn integrate(&self, f: impl Fn(usize) -> f64) -> f64 {
        let acc: f64 = self
            .raw
            .iter()
            .enumerate()
            .filter(|(_, w)| **w != 0.0)
            .map(|(k, w)| f(k) * w)
            .sum();
        acc / self.total
    }
}

/// Accepts `flat` or `delta:<p>`.
impl FromStr for ProportionPrior {
    type Err = AuditError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("flat") {
            return Ok(Self::flat());
        }
        if let Some(p) = s.strip_prefix("delta:") {
            let p = p
                .trim()
                .parse::<f64>()
                .map_err(|_| AuditError::InvalidPrior(format!("bad delta location `{p}`")))?;
            return Self::delta(p);
        }
        Err(AuditError::InvalidPrior(format!(
            "`{s}` is neither `flat` nor `delta:<p>`"
        )))
    }
}

/// Per-group binary disparate impact at every grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct DiCurve {
    grid: ProportionGrid,
    values: BTreeMap<GroupKey, Vec<f64>>,
    reference: Vec<GroupKey>,
}

impl DiCurve {
    /// Assembles a curve from per-point values given in `keys` order.
    pub(crate) fn from_points(keys: &[GroupKey], points: Vec<(Vec<f64>, usize)>) -> Self {
        let grid = ProportionGrid::standard();
        debug_assert_eq!(points.len(), grid.len());
        let mut values: BTreeMap<GroupKey, Vec<f64>> = keys
            .iter()
            .map(|k| (k.clone(), Vec::with_capacity(points.len())))
            .collect();
        let mut reference = Vec::with_capacity(points.len());
        for (di, best) in points {
            for (key, v) in keys.iter().zip(di) {
                values.get_mut(key).unwrap().push(v);
            }
            reference.push(keys[best].clone());
        }
        Self {
            grid,
            values,
            reference,
        }
    }

    pub fn grid(&self) -> &ProportionGrid {
        &self.grid
    }

    pub fn values(&self) -> &BTreeMap<GroupKey, Vec<f64>> {
        &self.values
    }

    pub fn group<K: Into<GroupKey>>(&self, key: K) -> Option<&[f64]> {
        self.values.get(&key.into()).map(Vec::as_slice)
    }

    /// Group attaining 1 at each grid point.
    pub fn reference(&self) -> &[GroupKey] {
        &self.reference
    }

    /// Values at one grid point as a metric vector.
    pub fn at(&self, k: usize) -> GroupMetricVector {
        GroupMetricVector {
            metric: "BinDI".into(),
            values: self.values.iter().map(|(g, v)| (g.clone(), v[k])).collect(),
            reference_group: self.reference[k].clone(),
        }
    }

    /// Writes `proportion,group,bin_di` rows, grid-point major.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["proportion", "group", "bin_di"])?;
        for (k, p) in self.grid.points().iter().enumerate() {
            for (g, v) in &self.values {
                w.write_record([p.to_string(), g.to_string(), v[k].to_string()])?;
            }
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Binary disparate impact curve of an empirical partition.
pub fn di_curve(partition: &GroupPartition) -> Result<DiCurve> {
    di_curve_with(partition, Execution::default())
}

pub fn di_curve_with(partition: &GroupPartition, exec: Execution) -> Result<DiCurve> {
    let sp = SortedPartition::with_execution(partition, exec);
    let grid = ProportionGrid::standard();
    let points = try_map_indices(grid.len(), exec, |k| sp.bin_di(grid.points()[k]))?;
    Ok(DiCurve::from_points(sp.keys(), points))
}

/// Prior-weighted average of each group's curve.
pub fn auc_di(curve: &DiCurve, prior: &ProportionPrior) -> Result<GroupMetricVector> {
    prior.check_grid(curve)?;
    let values = curve
        .values
        .iter()
        .map(|(g, v)| (g.clone(), prior.integrate(|k| v[k])))
        .collect();
    Ok(GroupMetricVector::from_values("AucDI", values))
}

/// Prior mass of the grid points where a group's curve is at least `fairness_bound`.
pub fn pf_di(
    curve: &DiCurve,
    prior: &ProportionPrior,
    fairness_bound: f64,
) -> Result<GroupMetricVector> {
    check_bound(fairness_bound)?;
    prior.check_grid(curve)?;
    let values = curve
        .values
        .iter()
        .map(|(g, v)| {
            let fair = prior.integrate(|k| if v[k] >= fairness_bound { 1.0 } else { 0.0 });
            (g.clone(), fair)
        })
        .collect();
    Ok(GroupMetricVector::from_values("PfDI", values))
}

pub(crate) fn check_bound(bound: f64) -> Result<()> {
    if bound > 0.0 && bound <= 1.0 {
        Ok(())
    } else {
        Err(AuditError::InvalidBound(bound))
    }
}
