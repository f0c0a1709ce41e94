//! JSON and CSV writers for reports.

use std::io::Write;
use std::path::Path;

use rmcurve_core::dp::RatePolicy;
use rmcurve_core::pipeline::{BacktestReport, ChangeRow, RateRow};
use serde::Serialize;

use crate::ingest::weekday_name;

#[derive(Debug, thiserror::Error)]
pub enum ExportError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ExportError> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(f, value)?;
    Ok(())
}

fn cell(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.digits$}"))
}

/// Percent revenue change by weekday plus the overall row.
/// Columns: `weekday, count, mean, sd`.
pub fn change_csv<W: Write>(rows: &[ChangeRow], out: W) -> Result<(), ExportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["weekday", "count", "mean", "sd"])?;
    for r in rows {
        let day = r.weekday.map_or("Overall", |d| weekday_name(d.num_days_from_monday()));
        w.write_record([day.to_string(), r.count.to_string(), cell(r.mean, 2), cell(r.sd, 2)])?;
    }
    w.flush()?;
    Ok(())
}

/// Mean WAPE in percent, one row per rate and one column per weekday.
/// Cells with no data hold `-`.
pub fn rate_wape_csv<W: Write>(rows: &[RateRow], out: W) -> Result<(), ExportError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["rate".to_string()];
    header.extend((0..7).map(|d| weekday_name(d).to_string()));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![format!("{:.0}", r.rate.as_major())];
        rec.extend(r.by_weekday.iter().map(|v| cell(v.map(|x| 100.0 * x), 2)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per target: `date, weekday, capacity, expected, actual,
/// percent_change, skipped`.
pub fn targets_csv<W: Write>(report: &BacktestReport, out: W) -> Result<(), ExportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["date", "weekday", "capacity", "expected_revenue", "actual_revenue", "percent_change", "skipped"])?;
    for t in &report.targets {
        w.write_record([
            t.date.to_string(),
            weekday_name(t.weekday.num_days_from_monday()).to_string(),
            t.capacity.to_string(),
            format!("{:.2}", t.expected_revenue),
            format!("{:.2}", t.actual_revenue),
            cell(t.percent_change, 2),
            t.skipped.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolicyRow {
    pub interval: usize,
    pub day: u32,
    pub capacity: u32,
    /// `None` when no capacity is left.
    pub rate: Option<f64>,
}

pub fn policy_rows(policy: &RatePolicy) -> Vec<PolicyRow> {
    let sub = policy.subdivisions.max(1) as usize;
    (0..policy.intervals())
        .flat_map(|t| {
            let day = policy.first_day + (t / sub) as u32;
            (0..policy.choice[t].len() as u32).map(move |x| PolicyRow {
                interval: t,
                day,
                capacity: x,
                rate: policy.posted_rate(t, x).map(|m| m.as_major()),
            })
        })
        .collect()
}

pub fn policy_csv<W: Write>(policy: &RatePolicy, out: W) -> Result<(), ExportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["interval", "day", "capacity", "rate"])?;
    for r in policy_rows(policy) {
        w.write_record([r.interval.to_string(), r.day.to_string(), r.capacity.to_string(), cell(r.rate, 2)])?;
    }
    w.flush()?;
    Ok(())
}
