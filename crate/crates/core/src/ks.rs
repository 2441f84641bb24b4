//! Two-sample Kolmogorov-Smirnov statistic.

use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    /// `sup_x |F_a(x) - F_b(x)|` over the two empirical CDFs.
    pub statistic: f64,
    /// Smallest score at which the supremum is attained.
    pub location: f64,
}

/// Exact supremum distance between the empirical CDFs of two samples.
///
/// Both ECDFs are right-continuous steps that only move at sample points,
/// so evaluating just after each distinct value of the merged sample is
/// sufficient.
pub fn ks_statistic(scores_a: &[f64], scores_b: &[f64]) -> Result<KsResult> {
    if scores_a.is_empty() || scores_b.is_empty() {
        return Err(AuditError::EmptyScores);
    }
    let mut a = scores_a.to_vec();
    let mut b = scores_b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);

    let (mut i, mut j) = (0, 0);
    let mut best = KsResult {
        statistic: 0.0,
        location: a[0].min(b[0]),
    };
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(&u), Some(&v)) => u.min(v),
            (Some(&u), None) => u,
            (None, Some(&v)) => v,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        let d = (i as f64 / na - j as f64 / nb).abs();
        if d > best.statistic {
            best = KsResult {
                statistic: d,
                location: x,
            };
        }
    }
    Ok(best)
}
