//! Forecast accuracy, revenue comparison and nearest-date selection.

use alloc::vec::Vec;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("series lengths differ: {actuals} actuals vs {forecasts} forecasts")]
    LengthMismatch { actuals: usize, forecasts: usize },
    #[error("WAPE is undefined when actuals sum to zero")]
    ZeroActuals,
    #[error("actual revenue must be positive, got {0}")]
    NonPositiveActual(f64),
    #[error("no values to summarise")]
    Empty,
}

/// Weighted absolute percentage error `Σ|a - f| / Σa` (a fraction, not %).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WapeResult {
    pub value: f64,
    pub numerator: f64,
    pub denominator: f64,
}

impl WapeResult {
    pub fn percent(&self) -> f64 {
        100.0 * self.value
    }
}

fn abs_error(actuals: &[f64], forecasts: &[f64]) -> Result<f64, MetricsError> {
    if actuals.len() != forecasts.len() {
        return Err(MetricsError::LengthMismatch { actuals: actuals.len(), forecasts: forecasts.len() });
    }
    Ok(actuals.iter().zip(forecasts).map(|(a, f)| (a - f).abs()).sum())
}

pub fn wape(actuals: &[f64], forecasts: &[f64]) -> Result<WapeResult, MetricsError> {
    let numerator = abs_error(actuals, forecasts)?;
    let denominator: f64 = actuals.iter().sum();
    if denominator == 0.0 {
        return Err(MetricsError::ZeroActuals);
    }
    Ok(WapeResult { value: numerator / denominator, numerator, denominator })
}

/// `100 · (optimal - actual) / actual`.
pub fn revenue_percent_change(actual: f64, optimal: f64) -> Result<f64, MetricsError> {
    if actual.is_nan() || actual <= 0.0 {
        return Err(MetricsError::NonPositiveActual(actual));
    }
    Ok(100.0 * (optimal - actual) / actual)
}

/// Mean and sample standard deviation (`n - 1`); the deviation is absent for
/// a single value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub sd: Option<f64>,
}

pub fn summarize(values: &[f64]) -> Result<Summary, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::Empty);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.len() > 1).then(|| libm::sqrt(values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)));
    Ok(Summary { count: values.len(), mean, sd })
}

/// Five-number summary plus mean, quartiles by linear interpolation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

pub fn box_stats(values: &[f64]) -> Result<BoxStats, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (v.len() - 1) as f64;
        let lo = libm::floor(pos) as usize;
        let hi = (lo + 1).min(v.len() - 1);
        v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
    };
    Ok(BoxStats {
        count: v.len(),
        min: v[0],
        q1: q(0.25),
        median: q(0.5),
        q3: q(0.75),
        max: v[v.len() - 1],
        mean: v.iter().sum::<f64>() / v.len() as f64,
    })
}

/// A dated series compared during date selection (per-day revenue over the
/// warm-up days).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatedSeries {
    pub date: NaiveDate,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pick {
    pub date: NaiveDate,
    /// Absent when the target's series sums to zero.
    pub wape: Option<f64>,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub picks: Vec<Pick>,
    /// Number of picks requested but not available.
    pub shortfall: usize,
}

/// The `k` eligible candidates closest to the target. Eligible candidates
/// fall on the target's weekday, strictly before it, with a series of the
/// same length. Ties go to the earlier date.
pub fn select_input_dates(target: &DatedSeries, candidates: &[DatedSeries], k: usize) -> Result<Selection, MetricsError> {
    let denominator: f64 = target.values.iter().sum();
    let mut scored = Vec::new();
    for c in candidates {
        if c.date >= target.date || c.date.weekday() != target.date.weekday() {
            continue;
        }
        let abs_error = abs_error(&target.values, &c.values)?;
        let wape = (denominator != 0.0).then(|| abs_error / denominator);
        scored.push(Pick { date: c.date, wape, abs_error });
    }
    scored.sort_by(|a, b| a.abs_error.total_cmp(&b.abs_error).then(a.date.cmp(&b.date)));
    let shortfall = k.saturating_sub(scored.len());
    scored.truncate(k);
    Ok(Selection { picks: scored, shortfall })
}
