//! Brute-force reference computations, written without touching the
//! library's sorted-partition or binary-search paths.

#![allow(dead_code)]

pub const GRID: usize = 100;

/// `ceil(k * n / 100)` in exact integer arithmetic.
pub fn rank(k: usize, n: usize) -> usize {
    (k * n).div_ceil(GRID)
}

pub fn bin_di(groups: &[Vec<f64>], k: usize) -> Vec<f64> {
    let mut pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    pooled.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let r = rank(k, pooled.len());
    let rates: Vec<f64> = groups
        .iter()
        .map(|g| {
            let selected = if r == 0 {
                g.len()
            } else {
                g.iter().filter(|&&s| s >= pooled[r - 1]).count()
            };
            selected as f64 / g.len() as f64
        })
        .collect();
    let max = rates.iter().copied().fold(0.0, f64::max);
    rates.iter().map(|x| x / max).collect()
}

/// `curve[group][k]`.
pub fn curve(groups: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let points: Vec<Vec<f64>> = (0..GRID).map(|k| bin_di(groups, k)).collect();
    (0..groups.len())
        .map(|g| points.iter().map(|p| p[g]).collect())
        .collect()
}

pub fn weighted_mean(values: &[f64], weights: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (v, w) in values.iter().zip(weights) {
        num += v * w;
        den += w;
    }
    num / den
}

pub fn fair_mass(values: &[f64], weights: &[f64], bound: f64) -> f64 {
    let indicator: Vec<f64> = values
        .iter()
        .map(|&v| if v >= bound { 1.0 } else { 0.0 })
        .collect();
    weighted_mean(&indicator, weights)
}

fn ecdf(sample: &[f64], x: f64) -> f64 {
    sample.iter().filter(|&&s| s <= x).count() as f64 / sample.len() as f64
}

/// KS distance evaluated on a grid made of every sample point, the
/// midpoints between consecutive distinct points and one point below the
/// minimum.
pub fn ks(a: &[f64], b: &[f64]) -> f64 {
    let mut pts: Vec<f64> = a.iter().chain(b).copied().collect();
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup();
    let mut eval = vec![pts[0] - 1.0];
    for w in pts.windows(2) {
        eval.push(0.5 * (w[0] + w[1]));
    }
    eval.extend(&pts);
    eval.iter()
        .map(|&x| (ecdf(a, x) - ecdf(b, x)).abs())
        .fold(0.0, f64::max)
}
