//! Shared vocabulary: money, rate ladders, booking horizons and demand scenarios.
//!
//! Rate classes are always stored in ascending price order. Class 0 is the
//! cheapest rate and therefore has the largest choice set once bookings are
//! cumulated.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of minor units (cents) per major currency unit.
pub const MINOR_PER_MAJOR: i64 = 100;

/// An amount of money in integer minor units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Money(pub i64);

impl Money {
    pub const ZERO: Money = Money(0);

    pub const fn from_major(units: i64) -> Self {
        Money(units * MINOR_PER_MAJOR)
    }

    pub const fn minor(self) -> i64 {
        self.0
    }

    /// Value in major units as a float, for model arithmetic.
    pub fn as_major(self) -> f64 {
        self.0 as f64 / MINOR_PER_MAJOR as f64
    }

    /// Rounds a major-unit float to the nearest minor unit.
    pub fn from_major_f64(value: f64) -> Self {
        Money(libm::round(value * MINOR_PER_MAJOR as f64) as i64)
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:02}", abs / 100, abs % 100)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("rate ladder needs at least one rate")]
    EmptyLadder,
    #[error("rate ladder step must be positive, got {0}")]
    NonPositiveStep(Money),
    #[error("rate ladder minimum {min} exceeds maximum {max}")]
    InvertedLadder { min: Money, max: Money },
    #[error("span {min}..{max} is not a multiple of step {step}")]
    UnevenLadder { min: Money, max: Money, step: Money },
    #[error("rate ladder {min}..{max} outside property bounds {lo}..{hi}")]
    OutsideBounds { min: Money, max: Money, lo: Money, hi: Money },
    #[error("booking horizon must be at least 3 days, got {0}")]
    HorizonTooShort(u32),
    #[error("negative lead time {0}")]
    NegativeLeadTime(i64),
    #[error("lead time {lead} exceeds horizon {horizon}")]
    LeadTimeBeyondHorizon { lead: i64, horizon: u32 },
    #[error("scenario is already cumulated")]
    AlreadyCumulated,
    #[error("scenario shape mismatch: expected {expected_rates}x{expected_days}, got {rates}x{days}")]
    ShapeMismatch { expected_rates: usize, expected_days: usize, rates: usize, days: usize },
    #[error("horizon day {day} outside 1..={horizon}")]
    DayOutOfRange { day: u32, horizon: u32 },
}

/// Evenly spaced, strictly increasing list of nightly rates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LadderSpec", into = "LadderSpec")]
pub struct RateLadder {
    min: Money,
    max: Money,
    step: Money,
    rates: Vec<Money>,
}

/// Serialized form of a ladder: the three settings a revenue manager configures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LadderSpec {
    pub min: Money,
    pub max: Money,
    pub step: Money,
}

impl TryFrom<LadderSpec> for RateLadder {
    type Error = DomainError;
    fn try_from(spec: LadderSpec) -> Result<Self, Self::Error> {
        RateLadder::new(spec.min, spec.max, spec.step)
    }
}

impl From<RateLadder> for LadderSpec {
    fn from(l: RateLadder) -> Self {
        LadderSpec { min: l.min, max: l.max, step: l.step }
    }
}

impl RateLadder {
    pub fn new(min: Money, max: Money, step: Money) -> Result<Self, DomainError> {
        if step.0 <= 0 {
            return Err(DomainError::NonPositiveStep(step));
        }
        if min > max {
            return Err(DomainError::InvertedLadder { min, max });
        }
        if (max.0 - min.0) % step.0 != 0 {
            return Err(DomainError::UnevenLadder { min, max, step });
        }
        let rates = (0..=(max.0 - min.0) / step.0).map(|i| Money(min.0 + i * step.0)).collect();
        Ok(RateLadder { min, max, step, rates })
    }

    /// Builds a ladder and checks it against a property's configured bounds.
    pub fn within_bounds(min: Money, max: Money, step: Money, bounds: LadderSpec) -> Result<Self, DomainError> {
        if min < bounds.min || max > bounds.max {
            return Err(DomainError::OutsideBounds { min, max, lo: bounds.min, hi: bounds.max });
        }
        Self::new(min, max, step)
    }

    /// Rate settings of the four reference properties (1-based).
    pub fn reference_property(hotel: usize) -> Option<Self> {
        let (min, max, step) = match hotel {
            1 => (70, 170, 10),
            2 => (90, 240, 15),
            3 => (100, 250, 15),
            4 => (150, 450, 20),
            _ => return None,
        };
        Self::new(Money::from_major(min), Money::from_major(max), Money::from_major(step)).ok()
    }

    pub fn rates(&self) -> &[Money] {
        &self.rates
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn min(&self) -> Money {
        self.min
    }

    pub fn max(&self) -> Money {
        self.max
    }

    pub fn step(&self) -> Money {
        self.step
    }

    pub fn spec(&self) -> LadderSpec {
        LadderSpec { min: self.min, max: self.max, step: self.step }
    }

    pub fn index_of(&self, rate: Money) -> Option<usize> {
        self.rates.iter().position(|&r| r == rate)
    }

    /// Bins an arbitrary rate to a ladder rung: rounds down to the step grid
    /// and clamps into `[min, max]`. The flag is set when clamping happened.
    pub fn bin(&self, rate: Money) -> (usize, bool) {
        if rate < self.min {
            return (0, true);
        }
        if rate > self.max {
            return (self.rates.len() - 1, true);
        }
        (((rate.0 - self.min.0) / self.step.0) as usize, false)
    }

    /// The choice set of each class: every rate at or above its price.
    pub fn choice_sets(&self) -> Vec<ChoiceSet> {
        (0..self.rates.len())
            .map(|class| ChoiceSet { class, members: self.rates[class..].to_vec() })
            .collect()
    }
}

/// Rates a guest in this class would accept, i.e. the class price and every
/// rate above it that the guest would also have been willing to pay at.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChoiceSet {
    pub class: usize,
    pub members: Vec<Money>,
}

impl ChoiceSet {
    pub fn price(&self) -> Money {
        self.members[0]
    }

    /// True when `other` is strictly contained in `self`.
    pub fn strictly_contains(&self, other: &ChoiceSet) -> bool {
        other.members.len() < self.members.len() && other.members.iter().all(|m| self.members.contains(m))
    }
}

/// Days from the first bookable day (t = 1) to check-in (t = T).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct BookingHorizon(u32);

impl TryFrom<u32> for BookingHorizon {
    type Error = DomainError;
    fn try_from(v: u32) -> Result<Self, Self::Error> {
        BookingHorizon::new(v)
    }
}

impl From<BookingHorizon> for u32 {
    fn from(h: BookingHorizon) -> u32 {
        h.0
    }
}

impl BookingHorizon {
    pub fn new(length: u32) -> Result<Self, DomainError> {
        if length < 3 {
            return Err(DomainError::HorizonTooShort(length));
        }
        Ok(BookingHorizon(length))
    }

    pub fn length(self) -> u32 {
        self.0
    }

    pub fn index(self, lead_time: i64) -> Result<u32, DomainError> {
        to_booking_horizon(lead_time, self.0)
    }
}

/// Maps a lead time (days before arrival) to the horizon index `T - lead`.
pub fn to_booking_horizon(lead_time: i64, horizon: u32) -> Result<u32, DomainError> {
    if lead_time < 0 {
        return Err(DomainError::NegativeLeadTime(lead_time));
    }
    if lead_time > i64::from(horizon) {
        return Err(DomainError::LeadTimeBeyondHorizon { lead: lead_time, horizon });
    }
    Ok(horizon - lead_time as u32)
}

/// Bookings for one check-in date, per rate class and horizon day.
///
/// `counts[r][t - 1]` holds the bookings for class `r` on horizon day `t`.
/// `observed[r][t - 1]` marks whether class `r` was on sale that day, which is
/// what makes the cell a data point for curve fitting. Cumulation leaves the
/// mask untouched.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemandScenario {
    pub checkin_date: NaiveDate,
    pub rates: Vec<Money>,
    counts: Vec<Vec<u32>>,
    observed: Vec<Vec<bool>>,
    cumulated: bool,
}

impl DemandScenario {
    /// An all-zero raw scenario with nothing observed.
    pub fn empty(checkin_date: NaiveDate, ladder: &RateLadder, horizon: BookingHorizon) -> Self {
        let r = ladder.len();
        let t = horizon.length() as usize;
        DemandScenario {
            checkin_date,
            rates: ladder.rates().to_vec(),
            counts: vec![vec![0; t]; r],
            observed: vec![vec![false; t]; r],
            cumulated: false,
        }
    }

    /// Raw scenario whose availability is inferred from the bookings: a class
    /// counts as observed on a day when at least one booking was made at it.
    pub fn from_counts(checkin_date: NaiveDate, rates: Vec<Money>, counts: Vec<Vec<u32>>) -> Result<Self, DomainError> {
        let observed = counts.iter().map(|row| row.iter().map(|&c| c > 0).collect()).collect();
        Self::with_availability(checkin_date, rates, counts, observed)
    }

    /// Raw scenario with an explicit availability mask.
    pub fn with_availability(
        checkin_date: NaiveDate,
        rates: Vec<Money>,
        counts: Vec<Vec<u32>>,
        observed: Vec<Vec<bool>>,
    ) -> Result<Self, DomainError> {
        let r = rates.len();
        let days = counts.first().map_or(0, Vec::len);
        let bad = counts.len() != r
            || observed.len() != r
            || counts.iter().any(|c| c.len() != days)
            || observed.iter().any(|o| o.len() != days);
        if bad {
            return Err(DomainError::ShapeMismatch {
                expected_rates: r,
                expected_days: days,
                rates: counts.len(),
                days: counts.iter().map(Vec::len).max().unwrap_or(0),
            });
        }
        if days < 3 {
            return Err(DomainError::HorizonTooShort(days as u32));
        }
        Ok(DemandScenario { checkin_date, rates, counts, observed, cumulated: false })
    }

    pub fn horizon(&self) -> u32 {
        self.counts.first().map_or(0, Vec::len) as u32
    }

    pub fn classes(&self) -> usize {
        self.rates.len()
    }

    pub fn is_cumulated(&self) -> bool {
        self.cumulated
    }

    /// Bookings for `class` on horizon day `day` (1-based).
    pub fn count(&self, class: usize, day: u32) -> u32 {
        self.counts[class][(day - 1) as usize]
    }

    pub fn is_observed(&self, class: usize, day: u32) -> bool {
        self.observed[class][(day - 1) as usize]
    }

    pub fn counts(&self) -> &[Vec<u32>] {
        &self.counts
    }

    pub fn observed(&self) -> &[Vec<bool>] {
        &self.observed
    }

    /// Adds one booking; marks the cell observed.
    pub fn record(&mut self, class: usize, day: u32) -> Result<(), DomainError> {
        let horizon = self.horizon();
        if day == 0 || day > horizon {
            return Err(DomainError::DayOutOfRange { day, horizon });
        }
        let idx = (day - 1) as usize;
        self.counts[class][idx] += 1;
        self.observed[class][idx] = true;
        Ok(())
    }

    /// Marks a class as on sale on a day without recording a booking.
    pub fn mark_open(&mut self, class: usize, day: u32) {
        self.observed[class][(day - 1) as usize] = true;
    }

    /// Total bookings over the inclusive day window.
    pub fn total_bookings(&self, first_day: u32, last_day: u32) -> u64 {
        self.counts
            .iter()
            .map(|row| row[(first_day - 1) as usize..last_day as usize].iter().map(|&c| u64::from(c)).sum::<u64>())
            .sum()
    }

    /// Booked revenue per day over the inclusive window, in major units.
    /// Only meaningful on raw scenarios.
    pub fn daily_revenue(&self, first_day: u32, last_day: u32) -> Vec<f64> {
        (first_day..=last_day)
            .map(|day| {
                self.rates
                    .iter()
                    .enumerate()
                    .map(|(r, rate)| f64::from(self.count(r, day)) * rate.as_major())
                    .sum()
            })
            .collect()
    }
}

/// Converts raw per-rate bookings into choice-set demand: the demand at a
/// class is every booking made at that rate or higher.
pub fn cumulate_choice_sets(scenario: &DemandScenario) -> Result<DemandScenario, DomainError> {
    if scenario.cumulated {
        return Err(DomainError::AlreadyCumulated);
    }
    let mut out = scenario.clone();
    let classes = out.counts.len();
    for r in (0..classes.saturating_sub(1)).rev() {
        let (lo, hi) = out.counts.split_at_mut(r + 1);
        for (cell, above) in lo[r].iter_mut().zip(hi[0].iter()) {
            *cell += above;
        }
    }
    out.cumulated = true;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn date() -> NaiveDate {
        NaiveDate::from_ymd_opt(2018, 6, 7).unwrap()
    }

    fn single_day(rates: &[i64], counts: &[u32]) -> DemandScenario {
        let rates = rates.iter().map(|&r| Money::from_major(r)).collect();
        let counts = counts.iter().map(|&c| vec![c, 0, 0]).collect();
        DemandScenario::from_counts(date(), rates, counts).unwrap()
    }

    #[test]
    fn cumulation_matches_thursday_top_rows() {
        let s = single_day(&[160, 170], &[55, 75]);
        let c = cumulate_choice_sets(&s).unwrap();
        assert_eq!(c.count(0, 1), 130);
        assert_eq!(c.count(1, 1), 75);
    }

    #[test]
    fn cumulation_single_class_is_identity() {
        let s = single_day(&[170], &[75]);
        let c = cumulate_choice_sets(&s).unwrap();
        assert_eq!(c.count(0, 1), 75);
        assert!(c.is_cumulated());
    }

    #[test]
    fn cumulation_running_sum_from_top() {
        let s = single_day(&[100, 200, 300], &[2, 3, 5]);
        let c = cumulate_choice_sets(&s).unwrap();
        assert_eq!([c.count(0, 1), c.count(1, 1), c.count(2, 1)], [10, 8, 5]);
    }

    #[test]
    fn double_cumulation_rejected() {
        let s = single_day(&[100, 200], &[1, 1]);
        let c = cumulate_choice_sets(&s).unwrap();
        assert_eq!(cumulate_choice_sets(&c), Err(DomainError::AlreadyCumulated));
    }

    #[test]
    fn horizon_index_examples() {
        assert_eq!(to_booking_horizon(0, 365), Ok(365));
        assert_eq!(to_booking_horizon(365, 365), Ok(0));
        assert_eq!(to_booking_horizon(28, 100), Ok(72));
        assert_eq!(to_booking_horizon(-1, 100), Err(DomainError::NegativeLeadTime(-1)));
        assert!(to_booking_horizon(101, 100).is_err());
    }

    #[test]
    fn horizon_minimum_length() {
        assert!(BookingHorizon::new(2).is_err());
        assert_eq!(BookingHorizon::new(3).unwrap().length(), 3);
    }

    #[test]
    fn reference_ladders() {
        let h1 = RateLadder::reference_property(1).unwrap();
        assert_eq!(h1.len(), 11);
        assert_eq!(h1.rates()[0], Money::from_major(70));
        assert_eq!(h1.rates()[10], Money::from_major(170));
        assert_eq!(RateLadder::reference_property(4).unwrap().len(), 16);
        assert!(RateLadder::reference_property(5).is_none());
    }

    #[test]
    fn ladder_validation() {
        let m = Money::from_major;
        assert!(matches!(RateLadder::new(m(70), m(175), m(10)), Err(DomainError::UnevenLadder { .. })));
        assert!(matches!(RateLadder::new(m(170), m(70), m(10)), Err(DomainError::InvertedLadder { .. })));
        assert!(matches!(RateLadder::new(m(70), m(170), m(0)), Err(DomainError::NonPositiveStep(_))));
        let bounds = LadderSpec { min: m(70), max: m(170), step: m(10) };
        assert!(RateLadder::within_bounds(m(60), m(170), m(10), bounds).is_err());
        assert!(RateLadder::within_bounds(m(80), m(160), m(10), bounds).is_ok());
    }

    #[test]
    fn binning_rounds_down_and_clamps() {
        let l = RateLadder::reference_property(1).unwrap();
        assert_eq!(l.bin(Money::from_major(70)), (0, false));
        assert_eq!(l.bin(Money(7_999)), (0, false));
        assert_eq!(l.bin(Money::from_major(80)), (1, false));
        assert_eq!(l.bin(Money::from_major(50)), (0, true));
        assert_eq!(l.bin(Money::from_major(500)), (10, true));
    }

    #[test]
    fn choice_sets_strictly_nested() {
        let l = RateLadder::reference_property(2).unwrap();
        let sets = l.choice_sets();
        for w in sets.windows(2) {
            assert!(w[0].strictly_contains(&w[1]));
            assert!(!w[1].strictly_contains(&w[0]));
        }
        assert_eq!(sets.last().unwrap().members.len(), 1);
    }

    #[test]
    fn money_display_and_rounding() {
        assert_eq!(alloc::format!("{}", Money(12_345)), "123.45");
        assert_eq!(alloc::format!("{}", Money(-5)), "-0.05");
        assert_eq!(Money::from_major_f64(99.994), Money(9_999));
    }

    #[test]
    fn ladder_serde_uses_settings() {
        let l = RateLadder::reference_property(1).unwrap();
        let spec: LadderSpec = l.clone().into();
        assert_eq!(RateLadder::try_from(spec).unwrap(), l);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn cumulated_is_nonincreasing_in_price(raw in proptest::collection::vec(proptest::collection::vec(0u32..20, 5), 1..6)) {
                let rates = (0..raw.len()).map(|i| Money::from_major(100 + 10 * i as i64)).collect();
                let s = DemandScenario::from_counts(date(), rates, raw.clone()).unwrap();
                let c = cumulate_choice_sets(&s).unwrap();
                for t in 1..=5 {
                    for r in 0..raw.len() - 1 {
                        prop_assert!(c.count(r, t) >= c.count(r + 1, t));
                    }
                    // top class is untouched
                    prop_assert_eq!(c.count(raw.len() - 1, t), raw[raw.len() - 1][(t - 1) as usize]);
                }
            }

            #[test]
            fn horizon_mapping_is_order_reversing_bijection(h in 3u32..400, a in 0i64..400, b in 0i64..400) {
                let a = a.min(i64::from(h));
                let b = b.min(i64::from(h));
                let ta = to_booking_horizon(a, h).unwrap();
                let tb = to_booking_horizon(b, h).unwrap();
                prop_assert!(ta <= h);
                prop_assert_eq!(a < b, ta > tb);
                prop_assert_eq!(a == b, ta == tb);
            }
        }
    }
}
