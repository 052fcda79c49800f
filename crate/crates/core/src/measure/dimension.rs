use serde::{Deserialize, Serialize};

use super::{AtomicMeasure, Ball};

/// Greedy separated-set size for one `(R, r)` pair, maximized over centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparatedCount {
    pub big: f64,
    pub small: f64,
    pub count: usize,
    pub center: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionReport {
    pub counts: Vec<SeparatedCount>,
    /// Fitted exponent `n` in `count <= C (R/r)^n`.
    pub exponent: f64,
    /// Smallest `C` making the fitted bound hold on every sampled pair.
    pub constant: f64,
}

/// At most this many centers are scanned; larger supports are subsampled
/// with a uniform stride.
const MAX_CENTERS: usize = 256;

fn greedy_separated(measure: &AtomicMeasure, ball: Ball, r: f64) -> usize {
    let range = measure.ball_range(ball);
    let mut count = 0;
    let mut last = f64::NEG_INFINITY;
    for &p in &measure.positions()[range] {
        if count == 0 || p - last >= r {
            count += 1;
            last = p;
        }
    }
    count
}

/// Estimates the doubling dimension from greedily built `r`-separated subsets
/// of balls of radius `R`, over all pairs of `scales` with `R >= 2r`.
pub fn estimate_doubling_dimension(measure: &AtomicMeasure, scales: &[f64]) -> DimensionReport {
    let h = measure.floor();
    let mut scales: Vec<f64> = scales.iter().copied().filter(|&s| s >= h).collect();
    scales.sort_by(f64::total_cmp);
    scales.dedup();
    let stride = measure.len().div_ceil(MAX_CENTERS).max(1);
    let centers: Vec<f64> = measure.positions().iter().copied().step_by(stride).collect();

    let mut counts = Vec::new();
    for (i, &r) in scales.iter().enumerate() {
        for &big in &scales[i..] {
            if big < 2.0 * r {
                continue;
            }
            let (count, center) = centers
                .iter()
                .map(|&c| (greedy_separated(measure, Ball::new(c, big), r), c))
                .fold((0, f64::NAN), |best, cur| if cur.0 > best.0 { cur } else { best });
            counts.push(SeparatedCount {
                big,
                small: r,
                count,
                center,
            });
        }
    }

    let exponent = fit_exponent(&counts);
    let constant = counts
        .iter()
        .map(|c| c.count as f64 / (c.big / c.small).powf(exponent))
        .fold(1.0, f64::max);
    DimensionReport {
        counts,
        exponent,
        constant,
    }
}

/// Least-squares slope of `log count` against `log(R/r)`.
fn fit_exponent(counts: &[SeparatedCount]) -> f64 {
    if counts.len() < 2 {
        return 0.0;
    }
    let pts: Vec<(f64, f64)> = counts
        .iter()
        .map(|c| ((c.big / c.small).ln(), (c.count as f64).ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return 0.0;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxy / sxx).max(0.0)
}
