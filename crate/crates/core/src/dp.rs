//! Finite-horizon capacity control.
//!
//! Time runs over small intervals in which at most one booking arrives. With
//! `x` rooms left at interval `t`, posting class `j` sells with probability
//! `λ_j(t)`:
//!
//! ```text
//! V_t(x) = max_j  λ_j(t) · (r_j + V_{t+1}(x-1)) + (1 - λ_j(t)) · V_{t+1}(x)
//! V_t(0) = 0,  V_{T'+1}(x) = 0
//! ```
//!
//! `λ_j(t)` is the choice-set rate: the chance that an arrival is willing to
//! pay at least `r_j`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::Money;
use crate::spline::{evaluate_curve, RateCurveSet, SplineError};

pub const DEFAULT_SUBDIVISIONS: u32 = 8;

/// Largest subdivision count refinement will try before giving up.
const MAX_SUBDIVISIONS: u32 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DpError {
    #[error("no rate classes")]
    NoClasses,
    #[error("prices must be strictly descending")]
    PricesNotDescending,
    #[error("subdivisions must be at least 1")]
    ZeroSubdivisions,
    #[error("arrival probability {value} for class {class} in interval {interval} is outside [0, 1)")]
    ProbabilityOutOfRange { class: usize, interval: usize, value: f64 },
    #[error("daily rate {value} for class {class} on day {day} is negative or not finite")]
    BadDailyRate { class: usize, day: u32, value: f64 },
    #[error("rate table shape does not match {classes} classes x {intervals} intervals")]
    ShapeMismatch { classes: usize, intervals: usize },
    #[error("refinement needs more than {0} subdivisions per day")]
    RefinementLimit(u32),
    #[error("arrival path has {got} intervals, policy has {expected}")]
    GridMismatch { expected: usize, got: usize },
    #[error("capacity {requested} exceeds the table's {available}")]
    CapacityTooLarge { requested: u32, available: u32 },
    #[error("price {0} is not offered")]
    UnknownPrice(Money),
    #[error("day {day} is outside {first}..={last}")]
    DayOutOfRange { day: u32, first: u32, last: u32 },
    #[error(transparent)]
    Curve(#[from] SplineError),
}

/// Expected arrivals per day and class, classes in ascending price order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyRates {
    pub prices: Vec<Money>,
    pub first_day: u32,
    /// `rates[class][day - first_day]`.
    pub rates: Vec<Vec<f64>>,
}

impl DailyRates {
    pub fn from_fn(prices: Vec<Money>, first_day: u32, last_day: u32, mut f: impl FnMut(usize, u32) -> f64) -> Self {
        let rates = (0..prices.len()).map(|c| (first_day..=last_day).map(|d| f(c, d)).collect()).collect();
        DailyRates { prices, first_day, rates }
    }

    /// Samples fitted curves on whole days. Days outside the knot range take
    /// the value at the nearest knot (the curves are flat at both ends).
    pub fn from_curves(curves: &RateCurveSet, first_day: u32, last_day: u32) -> Result<Self, DpError> {
        let (lo, hi) = (curves.first_knot(), curves.last_knot());
        let mut rates = Vec::with_capacity(curves.classes());
        for class in 0..curves.classes() {
            let row = (first_day..=last_day)
                .map(|d| evaluate_curve(curves, class, f64::from(d).clamp(lo, hi)))
                .collect::<Result<Vec<_>, _>>()?;
            rates.push(row);
        }
        Ok(DailyRates { prices: curves.rates(), first_day, rates })
    }

    pub fn days(&self) -> u32 {
        self.rates.first().map_or(0, |r| r.len() as u32)
    }

    pub fn last_day(&self) -> u32 {
        self.first_day + self.days() - 1
    }
}

/// Per-interval sale probabilities, prices in descending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalRates {
    pub prices: Vec<Money>,
    /// `lambda[j][interval]`.
    pub lambda: Vec<Vec<f64>>,
    pub subdivisions: u32,
    pub first_day: u32,
}

impl ArrivalRates {
    pub fn new(prices: Vec<Money>, lambda: Vec<Vec<f64>>, subdivisions: u32, first_day: u32) -> Result<Self, DpError> {
        if prices.is_empty() {
            return Err(DpError::NoClasses);
        }
        if subdivisions == 0 {
            return Err(DpError::ZeroSubdivisions);
        }
        if prices.windows(2).any(|w| w[0] <= w[1]) {
            return Err(DpError::PricesNotDescending);
        }
        let intervals = lambda.first().map_or(0, Vec::len);
        if lambda.len() != prices.len() || lambda.iter().any(|l| l.len() != intervals) {
            return Err(DpError::ShapeMismatch { classes: prices.len(), intervals });
        }
        for (class, row) in lambda.iter().enumerate() {
            for (interval, &value) in row.iter().enumerate() {
                if !(0.0..1.0).contains(&value) {
                    return Err(DpError::ProbabilityOutOfRange { class, interval, value });
                }
            }
        }
        Ok(ArrivalRates { prices, lambda, subdivisions, first_day })
    }

    pub fn intervals(&self) -> usize {
        self.lambda[0].len()
    }

    pub fn classes(&self) -> usize {
        self.prices.len()
    }

    /// Horizon day an interval belongs to.
    pub fn day_of(&self, interval: usize) -> u32 {
        self.first_day + interval as u32 / self.subdivisions
    }

    pub fn max_lambda(&self) -> f64 {
        self.lambda.iter().flatten().fold(0.0, |m, &v| m.max(v))
    }
}

/// Splits each day into `subdivisions` intervals, doubling the count until
/// every interval probability is below 1.
pub fn refine_time_grid(daily: &DailyRates, subdivisions: u32) -> Result<ArrivalRates, DpError> {
    if subdivisions == 0 {
        return Err(DpError::ZeroSubdivisions);
    }
    if daily.prices.is_empty() {
        return Err(DpError::NoClasses);
    }
    let mut peak: f64 = 0.0;
    for (class, row) in daily.rates.iter().enumerate() {
        for (i, &value) in row.iter().enumerate() {
            if !(value.is_finite() && value >= 0.0) {
                return Err(DpError::BadDailyRate { class, day: daily.first_day + i as u32, value });
            }
            peak = peak.max(value);
        }
    }
    let mut sub = subdivisions;
    while peak / f64::from(sub) >= 1.0 {
        sub = sub.checked_mul(2).filter(|&s| s <= MAX_SUBDIVISIONS).ok_or(DpError::RefinementLimit(MAX_SUBDIVISIONS))?;
    }
    let scale = f64::from(sub);
    let mut prices = daily.prices.clone();
    let mut lambda: Vec<Vec<f64>> = daily
        .rates
        .iter()
        .map(|row| row.iter().flat_map(|&v| core::iter::repeat_n(v / scale, sub as usize)).collect())
        .collect();
    // descending prices
    let mut order: Vec<usize> = (0..prices.len()).collect();
    order.sort_by(|&a, &b| prices[b].cmp(&prices[a]));
    prices = order.iter().map(|&i| daily.prices[i]).collect();
    lambda = order.iter().map(|&i| core::mem::take(&mut lambda[i])).collect();
    ArrivalRates::new(prices, lambda, sub, daily.first_day)
}

/// `V_t(x)` for intervals `t = 0..=T'` (row `T'` is the zero boundary) and
/// capacities `x = 0..=X`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueTable {
    pub capacity: u32,
    pub intervals: usize,
    values: Vec<f64>,
}

impl ValueTable {
    pub fn value(&self, t: usize, x: u32) -> f64 {
        self.values[t * (self.capacity as usize + 1) + x as usize]
    }

    pub fn expected_revenue(&self) -> f64 {
        self.value(0, self.capacity)
    }

    pub fn row(&self, t: usize) -> &[f64] {
        let w = self.capacity as usize + 1;
        &self.values[t * w..(t + 1) * w]
    }
}

/// Optimal class per interval and remaining capacity. `choice[t][0]` is
/// `None` (nothing left to sell). Ties go to the higher price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePolicy {
    pub prices: Vec<Money>,
    pub subdivisions: u32,
    pub first_day: u32,
    pub choice: Vec<Vec<Option<usize>>>,
}

impl RatePolicy {
    pub fn intervals(&self) -> usize {
        self.choice.len()
    }

    pub fn posted_rate(&self, t: usize, x: u32) -> Option<Money> {
        self.choice.get(t)?.get(x as usize).copied().flatten().map(|j| self.prices[j])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpSolution {
    pub values: ValueTable,
    pub policy: RatePolicy,
}

impl DpSolution {
    pub fn expected_revenue(&self) -> f64 {
        self.values.expected_revenue()
    }
}

/// Backward induction. `fixed[t]`, when present, forces the class posted in
/// interval `t` instead of maximising.
fn induct(rates: &ArrivalRates, capacity: u32, fixed: &[Option<usize>]) -> DpSolution {
    let n = rates.intervals();
    let w = capacity as usize + 1;
    let prices: Vec<f64> = rates.prices.iter().map(|p| p.as_major()).collect();
    let mut values = vec![0.0; (n + 1) * w];
    let mut choice = vec![vec![None; w]; n];
    for t in (0..n).rev() {
        let (head, tail) = values.split_at_mut((t + 1) * w);
        let next = &tail[..w];
        let row = &mut head[t * w..];
        for x in 1..w {
            let (stay, sell) = (next[x], next[x - 1]);
            let value_of = |j: usize| {
                let l = rates.lambda[j][t];
                l * (prices[j] + sell) + (1.0 - l) * stay
            };
            let (best_j, best) = match fixed.get(t).copied().flatten() {
                Some(j) => (j, value_of(j)),
                None => {
                    let mut best = (0, value_of(0));
                    for j in 1..prices.len() {
                        let v = value_of(j);
                        if v > best.1 {
                            best = (j, v);
                        }
                    }
                    best
                }
            };
            row[x] = best;
            choice[t][x] = Some(best_j);
        }
    }
    DpSolution {
        values: ValueTable { capacity, intervals: n, values },
        policy: RatePolicy {
            prices: rates.prices.clone(),
            subdivisions: rates.subdivisions,
            first_day: rates.first_day,
            choice,
        },
    }
}

pub fn solve_dp(rates: &ArrivalRates, capacity: u32) -> DpSolution {
    induct(rates, capacity, &[])
}

/// Expected revenue when the listed horizon days post a fixed price and all
/// other days follow the optimal rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIf {
    pub expected: f64,
    pub optimal: f64,
    /// `100 · (expected - optimal) / optimal`; `None` when the optimum is 0.
    pub gap_percent: Option<f64>,
}

pub fn evaluate_overrides(rates: &ArrivalRates, capacity: u32, overrides: &BTreeMap<u32, Money>) -> Result<WhatIf, DpError> {
    let last = rates.day_of(rates.intervals() - 1);
    let mut fixed = vec![None; rates.intervals()];
    for (&day, &price) in overrides {
        if day < rates.first_day || day > last {
            return Err(DpError::DayOutOfRange { day, first: rates.first_day, last });
        }
        let j = rates.prices.iter().position(|&p| p == price).ok_or(DpError::UnknownPrice(price))?;
        let start = ((day - rates.first_day) * rates.subdivisions) as usize;
        for slot in &mut fixed[start..start + rates.subdivisions as usize] {
            *slot = Some(j);
        }
    }
    let optimal = solve_dp(rates, capacity).expected_revenue();
    let expected = induct(rates, capacity, &fixed).expected_revenue();
    let gap_percent = (optimal > 0.0).then(|| 100.0 * (expected - optimal) / optimal);
    Ok(WhatIf { expected, optimal, gap_percent })
}

/// Arrivals on a refined grid: per interval, the highest offered price the
/// arriving customer would pay, if anyone arrives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalPath {
    pub subdivisions: u32,
    pub willingness: Vec<Option<Money>>,
}

/// Draws one arrival path consistent with `rates`: in each interval
/// `P(willing to pay ≥ r_j) = λ_j`. Rates that are not nested in price are
/// made nested by taking, for each price, the largest λ at that price or above.
pub fn sample_arrivals<R: Rng + ?Sized>(rates: &ArrivalRates, rng: &mut R) -> ArrivalPath {
    let willingness = (0..rates.intervals())
        .map(|t| {
            let u: f64 = rng.random();
            let mut cover = 0.0_f64;
            // prices are descending, so the running max gives nested probabilities
            let mut hit = None;
            for j in 0..rates.classes() {
                cover = cover.max(rates.lambda[j][t]);
                if u < cover {
                    hit = Some(rates.prices[j]);
                    break;
                }
            }
            hit
        })
        .collect();
    ArrivalPath { subdivisions: rates.subdivisions, willingness }
}

/// Revenue earned by following `policy` from `capacity` rooms on `path`.
pub fn policy_revenue_on_scenario(policy: &RatePolicy, path: &ArrivalPath, capacity: u32) -> Result<f64, DpError> {
    if path.subdivisions != policy.subdivisions || path.willingness.len() != policy.intervals() {
        return Err(DpError::GridMismatch { expected: policy.intervals(), got: path.willingness.len() });
    }
    let available = policy.choice.first().map_or(0, |r| r.len().saturating_sub(1)) as u32;
    if capacity > available && policy.intervals() > 0 {
        return Err(DpError::CapacityTooLarge { requested: capacity, available });
    }
    let mut left = capacity;
    let mut revenue = 0.0;
    for (t, wtp) in path.willingness.iter().enumerate() {
        if left == 0 {
            break;
        }
        if let (Some(posted), Some(wtp)) = (policy.posted_rate(t, left), wtp) {
            if *wtp >= posted {
                revenue += posted.as_major();
                left -= 1;
            }
        }
    }
    Ok(revenue)
}
