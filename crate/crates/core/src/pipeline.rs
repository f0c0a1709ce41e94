//! Backtesting over a booking history.
//!
//! For each target check-in date: pick the `k` earlier same-weekday dates
//! whose warm-up revenue looks most like the target's, fit curves to their
//! forecast window, price that window with the DP using the target's actual
//! bookings as capacity, and compare with what the target actually earned.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{cumulate_choice_sets, DemandScenario, DomainError, Money};
use crate::dp::{self, DailyRates, DpError};
use crate::lp::Tolerances;
use crate::metrics::{self, DatedSeries, MetricsError, Pick};
use crate::spline::{self, evaluate_curve, FitData, FitDiagnostics, RateCurveSet, SplineError, Transform};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("smoothing anchors must satisfy 0 <= low ({low}) <= high ({high}) <= 1")]
    BadAnchors { low: f64, high: f64 },
    #[error("no rate classes")]
    NoClasses,
    #[error("warm-up of {warmup} days does not fit a {horizon}-day horizon")]
    BadWindow { warmup: u32, horizon: u32 },
    #[error("check-in date {0} appears twice in the history")]
    DuplicateDate(NaiveDate),
    #[error("scenario for {0} disagrees with the history's rates or horizon")]
    Inconsistent(NaiveDate),
    #[error("history has no scenario for {0}")]
    UnknownTarget(NaiveDate),
    #[error("scenario for {date} entered the fit for target {target}")]
    TemporalLeak { target: NaiveDate, date: NaiveDate },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Spline(#[from] SplineError),
    #[error(transparent)]
    Dp(#[from] DpError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Per-class smoothing, linear in class index from `low` (cheapest) to
/// `high` (dearest).
pub fn interpolate_smoothing(classes: usize, low: f64, high: f64) -> Result<Vec<f64>, PipelineError> {
    if !(0.0 <= low && low <= high && high <= 1.0) {
        return Err(PipelineError::BadAnchors { low, high });
    }
    match classes {
        0 => Err(PipelineError::NoClasses),
        1 => Ok(vec![low]),
        n => Ok((0..n).map(|i| low + (high - low) * i as f64 / (n - 1) as f64).collect()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BacktestConfig {
    pub horizon: u32,
    /// Days `1..=warmup` drive date selection; `warmup+1..=horizon` is forecast.
    pub warmup: u32,
    pub k: usize,
    pub g_low: f64,
    pub g_high: f64,
    pub subdivisions: u32,
    pub transform: Transform,
    /// Candidates must have check-in at least this many days before the
    /// target (0: any earlier date).
    pub gap_days: u32,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        BacktestConfig {
            horizon: 100,
            warmup: 72,
            k: 15,
            g_low: 0.4,
            g_high: 0.7,
            subdivisions: dp::DEFAULT_SUBDIVISIONS,
            transform: Transform::None,
            gap_days: 0,
        }
    }
}

impl BacktestConfig {
    pub fn forecast_window(&self) -> (u32, u32) {
        (self.warmup + 1, self.horizon)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.warmup == 0 || self.warmup + 3 > self.horizon {
            return Err(PipelineError::BadWindow { warmup: self.warmup, horizon: self.horizon });
        }
        interpolate_smoothing(2, self.g_low, self.g_high)?;
        Ok(())
    }
}

/// Raw scenarios ordered by check-in date, one per date, sharing rates and
/// horizon.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct History {
    scenarios: Vec<DemandScenario>,
}

/// The part of a history strictly before a cutoff date.
#[derive(Debug, Clone, Copy)]
pub struct Past<'a> {
    pub cutoff: NaiveDate,
    scenarios: &'a [DemandScenario],
}

impl<'a> Past<'a> {
    pub fn scenarios(&self) -> &'a [DemandScenario] {
        self.scenarios
    }
}

impl History {
    pub fn new(mut scenarios: Vec<DemandScenario>) -> Result<Self, PipelineError> {
        scenarios.sort_by_key(|s| s.checkin_date);
        for w in scenarios.windows(2) {
            if w[0].checkin_date == w[1].checkin_date {
                return Err(PipelineError::DuplicateDate(w[0].checkin_date));
            }
        }
        if let Some(first) = scenarios.first() {
            if let Some(bad) = scenarios.iter().find(|s| s.rates != first.rates || s.horizon() != first.horizon()) {
                return Err(PipelineError::Inconsistent(bad.checkin_date));
            }
        }
        Ok(History { scenarios })
    }

    pub fn scenarios(&self) -> &[DemandScenario] {
        &self.scenarios
    }

    pub fn rates(&self) -> &[Money] {
        self.scenarios.first().map_or(&[], |s| &s.rates)
    }

    pub fn get(&self, date: NaiveDate) -> Option<&DemandScenario> {
        self.scenarios.binary_search_by_key(&date, |s| s.checkin_date).ok().map(|i| &self.scenarios[i])
    }

    pub fn before(&self, cutoff: NaiveDate) -> Past<'_> {
        let end = self.scenarios.partition_point(|s| s.checkin_date < cutoff);
        Past { cutoff, scenarios: &self.scenarios[..end] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateWape {
    pub rate: Money,
    /// Fraction; absent when the class is excluded or the target has no
    /// observed bookings for it in the window.
    pub wape: Option<f64>,
    /// Fewer than three distinct observed days in the selected history.
    pub excluded: bool,
    pub observed_days: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetReport {
    pub date: NaiveDate,
    pub weekday: Weekday,
    pub selected: Vec<Pick>,
    pub shortfall: usize,
    pub smoothing: Vec<f64>,
    pub rates: Vec<RateWape>,
    pub diagnostics: Option<FitDiagnostics>,
    pub curves: Option<RateCurveSet>,
    pub capacity: u32,
    pub expected_revenue: f64,
    pub actual_revenue: f64,
    /// `100 · (expected - actual) / actual`; absent when nothing was earned.
    pub percent_change: Option<f64>,
    /// Why this target could not be priced, if it could not.
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChangeRow {
    /// `None` for the overall row.
    pub weekday: Option<Weekday>,
    pub count: usize,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
}

/// Mean per-rate WAPE (fraction) per weekday, Monday first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub rate: Money,
    pub by_weekday: [Option<f64>; 7],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub config: BacktestConfig,
    pub targets: Vec<TargetReport>,
    /// Percent change by weekday, Monday first, then the overall row.
    pub change: Vec<ChangeRow>,
    pub rate_wape: Vec<RateRow>,
    /// Scenarios checked against their target's cutoff before fitting.
    pub hygiene_checks: usize,
}

const WEEK: [Weekday; 7] =
    [Weekday::Mon, Weekday::Tue, Weekday::Wed, Weekday::Thu, Weekday::Fri, Weekday::Sat, Weekday::Sun];

fn change_row(weekday: Option<Weekday>, values: &[f64]) -> ChangeRow {
    match metrics::summarize(values) {
        Ok(s) => ChangeRow { weekday, count: s.count, mean: Some(s.mean), sd: s.sd },
        Err(_) => ChangeRow { weekday, count: 0, mean: None, sd: None },
    }
}

/// Recomputes the aggregate tables from per-target rows.
pub fn aggregate(targets: &[TargetReport], rates: &[Money]) -> (Vec<ChangeRow>, Vec<RateRow>) {
    let mut change = Vec::with_capacity(8);
    for day in WEEK {
        let v: Vec<f64> = targets.iter().filter(|t| t.weekday == day).filter_map(|t| t.percent_change).collect();
        change.push(change_row(Some(day), &v));
    }
    let all: Vec<f64> = targets.iter().filter_map(|t| t.percent_change).collect();
    change.push(change_row(None, &all));

    let rate_wape = rates
        .iter()
        .map(|&rate| {
            let mut by_weekday = [None; 7];
            for (slot, day) in by_weekday.iter_mut().zip(WEEK) {
                let v: Vec<f64> = targets
                    .iter()
                    .filter(|t| t.weekday == day)
                    .filter_map(|t| t.rates.iter().find(|r| r.rate == rate).and_then(|r| r.wape))
                    .collect();
                *slot = metrics::summarize(&v).ok().map(|s| s.mean);
            }
            RateRow { rate, by_weekday }
        })
        .collect();
    (change, rate_wape)
}

/// Curves fitted to a set of raw scenarios, with the classes that had too
/// few observed days left out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFit {
    /// Ladder classes that were fitted, in ladder order; curve `i` belongs
    /// to class `kept[i]`.
    pub kept: Vec<usize>,
    pub observed_days: Vec<usize>,
    /// `None` when no class had enough observed days.
    pub fit: Option<(RateCurveSet, FitDiagnostics)>,
}

/// Cumulates `raw` scenarios, drops classes with fewer than three observed
/// days inside `window`, and fits the rest with the matching entries of
/// `smoothing` (one per ladder class).
pub fn fit_scenarios(
    raw: &[DemandScenario],
    window: (u32, u32),
    smoothing: &[f64],
    transform: Transform,
) -> Result<ScenarioFit, PipelineError> {
    let inputs = raw.iter().map(cumulate_choice_sets).collect::<Result<Vec<_>, _>>()?;
    let data = FitData::from_scenarios(&inputs, Some(window))?;
    if smoothing.len() != data.rates.len() {
        return Err(SplineError::SmoothingCount { expected: data.rates.len(), got: smoothing.len() }.into());
    }
    let excluded = data.degenerate_classes();
    let kept: Vec<usize> = (0..data.rates.len()).filter(|r| !excluded.contains(r)).collect();
    let observed_days = (0..data.rates.len()).map(|r| data.observed_days(r)).collect();
    if kept.is_empty() {
        return Ok(ScenarioFit { kept, observed_days, fit: None });
    }
    let data = data.retain_classes(&kept);
    let g: Vec<f64> = kept.iter().map(|&r| smoothing[r]).collect();
    let program = spline::build_program(&data, &g, transform)?;
    let fit = spline::fit_curves(&program, &Tolerances::default())?;
    Ok(ScenarioFit { kept, observed_days, fit: Some(fit) })
}

pub fn run_backtest(history: &History, targets: &[NaiveDate], config: &BacktestConfig) -> Result<BacktestReport, PipelineError> {
    config.validate()?;
    let rates = history.rates().to_vec();
    let all_smoothing = interpolate_smoothing(rates.len(), config.g_low, config.g_high)?;
    let mut reports = Vec::with_capacity(targets.len());
    let mut hygiene_checks = 0;
    for &date in targets {
        let target = history.get(date).ok_or(PipelineError::UnknownTarget(date))?;
        if target.horizon() != config.horizon {
            return Err(PipelineError::BadWindow { warmup: config.warmup, horizon: target.horizon() });
        }
        let cutoff = date - chrono::Duration::days(i64::from(config.gap_days));
        let past = history.before(cutoff);
        let report = backtest_target(target, past, &all_smoothing, config, &mut hygiene_checks)?;
        reports.push(report);
    }
    let (change, rate_wape) = aggregate(&reports, &rates);
    Ok(BacktestReport { config: config.clone(), targets: reports, change, rate_wape, hygiene_checks })
}

fn backtest_target(
    target: &DemandScenario,
    past: Past<'_>,
    all_smoothing: &[f64],
    config: &BacktestConfig,
    hygiene_checks: &mut usize,
) -> Result<TargetReport, PipelineError> {
    let (first, last) = config.forecast_window();
    let date = target.checkin_date;
    let warm = |s: &DemandScenario| DatedSeries { date: s.checkin_date, values: s.daily_revenue(1, config.warmup) };
    let candidates: Vec<DatedSeries> = past.scenarios().iter().map(warm).collect();
    let selection = metrics::select_input_dates(&warm(target), &candidates, config.k)?;

    let capacity = target.total_bookings(first, last) as u32;
    let actual_revenue: f64 = target.daily_revenue(first, last).iter().sum();
    let mut report = TargetReport {
        date,
        weekday: date.weekday(),
        selected: selection.picks.clone(),
        shortfall: selection.shortfall,
        smoothing: Vec::new(),
        rates: target
            .rates
            .iter()
            .map(|&rate| RateWape { rate, wape: None, excluded: true, observed_days: 0 })
            .collect(),
        diagnostics: None,
        curves: None,
        capacity,
        expected_revenue: 0.0,
        actual_revenue,
        percent_change: None,
        skipped: None,
    };
    if selection.picks.is_empty() {
        report.skipped = Some(String::from("no earlier same-weekday dates"));
        return Ok(report);
    }

    let mut inputs = Vec::with_capacity(selection.picks.len());
    for pick in &selection.picks {
        let s = past
            .scenarios()
            .iter()
            .find(|s| s.checkin_date == pick.date)
            .ok_or(PipelineError::TemporalLeak { target: date, date: pick.date })?;
        *hygiene_checks += 1;
        if s.checkin_date >= date {
            return Err(PipelineError::TemporalLeak { target: date, date: s.checkin_date });
        }
        inputs.push(s.clone());
    }

    let fitted = fit_scenarios(&inputs, (first, last), all_smoothing, config.transform)?;
    for (r, entry) in report.rates.iter_mut().enumerate() {
        entry.observed_days = fitted.observed_days[r];
        entry.excluded = !fitted.kept.contains(&r);
    }
    let Some((curves, diagnostics)) = fitted.fit else {
        report.skipped = Some(String::from("every rate has fewer than 3 observed days"));
        return Ok(report);
    };
    let kept = fitted.kept;
    let smoothing: Vec<f64> = kept.iter().map(|&r| all_smoothing[r]).collect();

    let daily = DailyRates::from_curves(&curves, first, last)?;
    let arrival = dp::refine_time_grid(&daily, config.subdivisions)?;
    let expected_revenue = dp::solve_dp(&arrival, capacity).expected_revenue();

    let cumulated_target = cumulate_choice_sets(target)?;
    let (lo, hi) = (curves.first_knot(), curves.last_knot());
    for (fit_class, &r) in kept.iter().enumerate() {
        let mut a = Vec::new();
        let mut f = Vec::new();
        for day in first..=last {
            if cumulated_target.is_observed(r, day) {
                a.push(f64::from(cumulated_target.count(r, day)));
                f.push(evaluate_curve(&curves, fit_class, f64::from(day).clamp(lo, hi))?);
            }
        }
        report.rates[r].wape = metrics::wape(&a, &f).ok().map(|w| w.value);
    }

    report.smoothing = smoothing;
    report.expected_revenue = expected_revenue;
    report.percent_change = metrics::revenue_percent_change(actual_revenue, expected_revenue).ok();
    if report.percent_change.is_none() {
        report.skipped = Some(format!("no revenue in days {first}..={last}"));
    }
    report.diagnostics = Some(diagnostics);
    report.curves = Some(curves);
    Ok(report)
}
