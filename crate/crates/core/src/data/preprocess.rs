//! The preprocessing chain from ROI time series to adjacency values:
//! Pearson correlation, Fisher z-transform, ROI truncation, and min-max
//! scaling with 50th-percentile binarization.

use crate::error::{Error, Result};

use super::{ConnectivityMatrix, TimeSeriesPanel};

/// Correlations are clamped to this magnitude before the Fisher transform so
/// identical series produce a finite ceiling instead of an infinity.
pub const CORRELATION_CLAMP: f64 = 1.0 - 1e-7;

/// Pearson product-moment correlation of two equally long series.
pub fn pearson_corr(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!(
            "series lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::DegenerateInput(
            "correlation needs at least 3 points".into(),
        ));
    }
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mean_x, b - mean_y);
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == 0.0 || var_y == 0.0 {
        return Err(Error::DegenerateInput(
            "zero-variance series has no correlation".into(),
        ));
    }
    Ok(cov / (var_x.sqrt() * var_y.sqrt()))
}

/// Fisher z-transform `z = 0.5 * ln((1 + r) / (1 - r))`, clamping `|r|`
/// below 1 first.
pub fn fisher_z(r: f64) -> f64 {
    let r = r.clamp(-CORRELATION_CLAMP, CORRELATION_CLAMP);
    0.5 * ((1.0 + r) / (1.0 - r)).ln()
}

/// ROI-to-ROI connectivity: entry (i, j) is the Fisher-z correlation of the
/// two ROI series; diagonal fixed to zero.
pub fn build_connectivity(panel: &TimeSeriesPanel) -> Result<ConnectivityMatrix> {
    let n = panel.n_rois();
    let mut values = vec![0.0f64; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let r = pearson_corr(panel.roi(i), panel.roi(j)).map_err(|e| match e {
                Error::DegenerateInput(msg) => {
                    Error::DegenerateInput(format!("ROIs ({i}, {j}): {msg}"))
                }
                other => other,
            })?;
            let z = fisher_z(r);
            values[i * n + j] = z;
            values[j * n + i] = z;
        }
    }
    ConnectivityMatrix::new(n, values)
}

/// Keeps the first `keep` ROIs (rows and columns), dropping the rest.
pub fn truncate_rois(m: &ConnectivityMatrix, keep: usize) -> Result<ConnectivityMatrix> {
    let n = m.n();
    if n < keep {
        return Err(Error::Config(format!(
            "cannot keep {keep} ROIs from a {n}x{n} matrix"
        )));
    }
    if n == keep {
        return Ok(m.clone());
    }
    let mut values = Vec::with_capacity(keep * keep);
    for i in 0..keep {
        values.extend_from_slice(&m.values()[i * n..i * n + keep]);
    }
    ConnectivityMatrix::new(keep, values)
}

/// Min-max scales all entries to [0, 1], then sets every entry strictly
/// greater than the 50th percentile (sort-based, midpoint of the two middle
/// values for even counts) to exactly 1.0.
///
/// Operates on the raw entry multiset, so symmetric input yields symmetric
/// output.
pub fn scale_and_threshold(values: &[f64]) -> Result<Vec<f64>> {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        min = min.min(v);
        max = max.max(v);
    }
    if !min.is_finite() || !max.is_finite() || max <= min {
        return Err(Error::DegenerateInput(
            "matrix needs at least two distinct finite entries to scale".into(),
        ));
    }
    let span = max - min;
    let mut scaled: Vec<f64> = values.iter().map(|&v| (v - min) / span).collect();

    let mut sorted = scaled.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let count = sorted.len();
    let percentile = if count % 2 == 0 {
        (sorted[count / 2 - 1] + sorted[count / 2]) / 2.0
    } else {
        sorted[count / 2]
    };

    for v in scaled.iter_mut() {
        if *v > percentile {
            *v = 1.0;
        }
    }
    Ok(scaled)
}
