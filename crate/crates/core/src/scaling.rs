//! Cross-sectional winsorize + min-max scaling and NA-aware weighted sums.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScalingError {
    #[error("column has no non-NA values")]
    EmptyColumn,
}

pub const LOWER_PCT: f64 = 0.05;
pub const UPPER_PCT: f64 = 0.95;

/// Percentile of an ascending slice using linear interpolation between order
/// statistics at rank `(n - 1) * q`.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty slice");
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaledColumn {
    pub values: Vec<Option<f64>>,
    pub p5: f64,
    pub p95: f64,
    pub min: f64,
    pub max: f64,
    pub degenerate: bool,
}

impl ScaledColumn {
    /// A column with nothing to scale.
    pub fn all_na(len: usize) -> Self {
        Self {
            values: vec![None; len],
            p5: f64::NAN,
            p95: f64::NAN,
            min: f64::NAN,
            max: f64::NAN,
            degenerate: true,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Clamps to the 5th/95th percentiles, then maps linearly onto `[0, 1]`.
/// A column with no spread after clamping scales to 0.50 everywhere.
pub fn winsorize_minmax(values: &[Option<f64>]) -> Result<ScaledColumn, ScalingError> {
    let mut sorted: Vec<f64> = values.iter().flatten().copied().collect();
    if sorted.is_empty() {
        return Err(ScalingError::EmptyColumn);
    }
    sorted.sort_by(f64::total_cmp);
    let p5 = percentile_sorted(&sorted, LOWER_PCT);
    let p95 = percentile_sorted(&sorted, UPPER_PCT);
    let clamped: Vec<Option<f64>> = values.iter().map(|v| v.map(|x| x.clamp(p5, p95))).collect();
    let (min, max) = clamped
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let degenerate = max == min;
    let scaled = clamped
        .into_iter()
        .map(|v| {
            v.map(|x| {
                if degenerate {
                    0.5
                } else {
                    ((x - min) / (max - min)).clamp(0.0, 1.0)
                }
            })
        })
        .collect();
    Ok(ScaledColumn {
        values: scaled,
        p5,
        p95,
        min,
        max,
        degenerate,
    })
}

/// [`winsorize_minmax`], treating an all-NA column as all-NA output.
pub fn scale_or_na(values: &[Option<f64>]) -> ScaledColumn {
    winsorize_minmax(values).unwrap_or_else(|_| ScaledColumn::all_na(values.len()))
}

/// `1 - x` for lower-is-better metrics.
pub fn invert(scaled: &ScaledColumn) -> ScaledColumn {
    ScaledColumn {
        values: scaled.values.iter().map(|v| v.map(|x| 1.0 - x)).collect(),
        ..scaled.clone()
    }
}

/// Effective weight of each available component after renormalizing a
/// ticker's weights over the components it actually has.
///
/// Weights are signed; renormalization uses their magnitudes so a negative
/// weight keeps subtracting. Returns `None` when every component is NA.
pub fn renormalized_weights(weights: &[f64], available: &[bool]) -> Option<Vec<f64>> {
    let total: f64 = weights.iter().map(|w| w.abs()).sum();
    let avail: f64 = weights
        .iter()
        .zip(available)
        .filter(|(_, a)| **a)
        .map(|(w, _)| w.abs())
        .sum();
    if avail == 0.0 {
        return None;
    }
    Some(
        weights
            .iter()
            .zip(available)
            .map(|(w, a)| if *a { w * total / avail } else { 0.0 })
            .collect(),
    )
}

/// Per-ticker weighted sum of a single row of component values.
pub fn combine_row(weights: &[f64], values: &[Option<f64>]) -> Option<f64> {
    let available: Vec<bool> = values.iter().map(Option::is_some).collect();
    let eff = renormalized_weights(weights, &available)?;
    Some(
        eff.iter()
            .zip(values)
            .filter_map(|(w, v)| v.map(|x| w * x))
            .sum(),
    )
}

/// Weighted combination across columns, renormalizing per ticker over the
/// non-NA components.
pub fn weighted_combine(components: &[(&ScaledColumn, f64)]) -> Vec<Option<f64>> {
    let Some(len) = components.first().map(|(c, _)| c.len()) else {
        return Vec::new();
    };
    assert!(
        components.iter().all(|(c, w)| c.len() == len && w.is_finite() && *w != 0.0),
        "components must be aligned and carry non-zero weights"
    );
    let weights: Vec<f64> = components.iter().map(|(_, w)| *w).collect();
    (0..len)
        .map(|i| {
            let row: Vec<Option<f64>> = components.iter().map(|(c, _)| c.values[i]).collect();
            combine_row(&weights, &row)
        })
        .collect()
}
