use super::SignificanceError;
use crate::spatial::Point;
use std::collections::HashMap;
use std::f64::consts::PI;

/// Observed features whose gate value exceeds this are reported as clustered.
pub const PCF_CLUSTER_THRESHOLD: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcfBin {
    pub r_lo: f64,
    pub r_hi: f64,
    pub g: f64,
}

impl PcfBin {
    pub fn r_mid(&self) -> f64 {
        (self.r_lo + self.r_hi) / 2.0
    }
}

/// Binned pair correlation estimate on `[0, d_max]`:
///
/// `g(bin) = ordered_pairs(bin) * A / (n (n - 1) * annulus_area(bin))`
///
/// with `A` the window area. No edge correction is applied, so values near
/// the window boundary are biased low by the fraction of each annulus that
/// falls outside the window.
pub fn pair_correlation(
    points: &[Point],
    window_area: f64,
    d_max: f64,
    n_bins: usize,
) -> Result<Vec<PcfBin>, SignificanceError> {
    if points.len() < 2 {
        return Err(SignificanceError::InsufficientPoints(points.len()));
    }
    if !(d_max > 0.0 && d_max.is_finite()) || n_bins == 0 || !(window_area > 0.0) {
        return Err(SignificanceError::BadPcfParameters);
    }
    let width = d_max / n_bins as f64;
    let mut counts = vec![0u64; n_bins];

    let cell = |p: &Point| ((p.x / d_max).floor() as i64, (p.y / d_max).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        grid.entry(cell(p)).or_default().push(i);
    }
    for (i, p) in points.iter().enumerate() {
        let (cx, cy) = cell(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                let Some(bucket) = grid.get(&(cx + dx, cy + dy)) else {
                    continue;
                };
                for &j in bucket {
                    if j <= i {
                        continue;
                    }
                    let r = p.dist(&points[j]);
                    if r <= d_max {
                        let k = ((r / width) as usize).min(n_bins - 1);
                        counts[k] += 2;
                    }
                }
            }
        }
    }

    let n = points.len() as f64;
    Ok(counts
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let r_lo = k as f64 * width;
            let r_hi = (k + 1) as f64 * width;
            let annulus = PI * (r_hi * r_hi - r_lo * r_lo);
            PcfBin {
                r_lo,
                r_hi,
                g: c as f64 * window_area / (n * (n - 1.0) * annulus),
            }
        })
        .collect())
}

/// PCF averaged over all pairs up to distance `d` (a single bin on `[0, d]`).
/// This is the value the clustering diagnostic compares against
/// [`PCF_CLUSTER_THRESHOLD`].
pub fn pcf_up_to(points: &[Point], window_area: f64, d: f64) -> Result<f64, SignificanceError> {
    Ok(pair_correlation(points, window_area, d, 1)?[0].g)
}
