//! Reservation exports: parsing, cleaning, per-night explosion, KPIs and
//! demand scenarios.
//!
//! Two CSV files are expected, UTF-8 with a header row and ISO-8601 dates:
//!
//! * reservations: `reservation_id, arrival_date, departure_date,
//!   booking_date, status, rate_total, group, source, sub_source,
//!   market_code, length_of_stay`
//! * nightly rates: `reservation_id, stay_date, night_rate`

use std::collections::{BTreeMap, HashMap};
use std::io::Read;

use chrono::{Datelike, NaiveDate, Weekday};
use rmcurve_core::domain::{to_booking_horizon, BookingHorizon, DemandScenario, DomainError, Money, RateLadder};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{file}: missing column `{column}`")]
    MissingColumn { file: &'static str, column: &'static str },
    #[error("{file}: {source}")]
    Csv {
        file: &'static str,
        #[source]
        source: csv::Error,
    },
    #[error("reservation {id}: {expected} nights but {got} nightly rates")]
    Integrity { id: String, expected: u32, got: usize },
    #[error("reservation {id}: nightly rate for {date} is outside the stay")]
    NightOutsideStay { id: String, date: NaiveDate },
    #[error("capacity must be positive")]
    ZeroCapacity,
    #[error(transparent)]
    Domain(#[from] DomainError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Stay,
    Cancellation,
    NoShow,
}

impl std::str::FromStr for Status {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace(['-', ' '], "_").as_str() {
            "stay" | "checked_out" => Ok(Status::Stay),
            "cancellation" | "cancelled" | "canceled" | "cancel" => Ok(Status::Cancellation),
            "no_show" | "noshow" => Ok(Status::NoShow),
            other => Err(format!("unknown status `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reservation {
    pub id: String,
    pub arrival_date: NaiveDate,
    pub departure_date: NaiveDate,
    pub booking_date: NaiveDate,
    pub status: Status,
    pub rate_total: Money,
    pub group: bool,
    pub source: String,
    pub sub_source: String,
    pub market_code: String,
    pub length_of_stay: u32,
}

/// One row of the nightly rates table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NightRate {
    pub stay_date: NaiveDate,
    pub night_rate: Money,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StayNight {
    pub reservation_id: String,
    pub stay_date: NaiveDate,
    pub night_rate: Money,
    pub booking_date: NaiveDate,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowError {
    pub file: String,
    /// 1-based data row (the header is row 0).
    pub row: usize,
    pub column: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropReport {
    /// Reservations with a total rate of zero (complimentary stays).
    pub zero_rate: usize,
    /// Nights with a zero nightly rate inside otherwise paid stays.
    pub zero_rate_nights: usize,
    /// Nightly rates whose reservation is missing or was dropped.
    pub orphan_rates: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Cleaned {
    pub reservations: Vec<Reservation>,
    pub rates: BTreeMap<String, Vec<NightRate>>,
    pub drops: DropReport,
    pub row_errors: Vec<RowError>,
}

const RESERVATION_COLUMNS: [&str; 11] = [
    "reservation_id",
    "arrival_date",
    "departure_date",
    "booking_date",
    "status",
    "rate_total",
    "group",
    "source",
    "sub_source",
    "market_code",
    "length_of_stay",
];
const RATE_COLUMNS: [&str; 3] = ["reservation_id", "stay_date", "night_rate"];

fn column_index(file: &'static str, headers: &csv::StringRecord, wanted: &[&'static str]) -> Result<Vec<usize>, IngestError> {
    wanted
        .iter()
        .map(|&c| {
            headers
                .iter()
                .position(|h| h.trim().eq_ignore_ascii_case(c))
                .ok_or(IngestError::MissingColumn { file, column: c })
        })
        .collect()
}

struct Row<'a> {
    file: &'static str,
    row: usize,
    record: &'a csv::StringRecord,
    idx: &'a [usize],
    names: &'a [&'static str],
}

impl Row<'_> {
    fn raw(&self, i: usize) -> &str {
        self.record.get(self.idx[i]).unwrap_or("").trim()
    }

    fn err(&self, i: usize, message: impl Into<String>) -> RowError {
        RowError { file: self.file.into(), row: self.row, column: self.names[i].into(), message: message.into() }
    }

    fn date(&self, i: usize) -> Result<NaiveDate, RowError> {
        NaiveDate::parse_from_str(self.raw(i), "%Y-%m-%d").map_err(|e| self.err(i, format!("bad date `{}`: {e}", self.raw(i))))
    }

    fn money(&self, i: usize) -> Result<Money, RowError> {
        let v: f64 = self.raw(i).parse().map_err(|_| self.err(i, format!("bad amount `{}`", self.raw(i))))?;
        if !v.is_finite() || v < 0.0 {
            return Err(self.err(i, format!("amount must be a nonnegative number, got `{}`", self.raw(i))));
        }
        Ok(Money::from_major_f64(v))
    }

    fn flag(&self, i: usize) -> Result<bool, RowError> {
        match self.raw(i).to_ascii_lowercase().as_str() {
            "1" | "true" | "yes" | "y" => Ok(true),
            "0" | "false" | "no" | "n" | "" => Ok(false),
            other => Err(self.err(i, format!("bad flag `{other}`"))),
        }
    }
}

fn parse_reservation(r: &Row<'_>) -> Result<Reservation, RowError> {
    let id = r.raw(0).to_string();
    if id.is_empty() {
        return Err(r.err(0, "empty id"));
    }
    let arrival_date = r.date(1)?;
    let departure_date = r.date(2)?;
    let booking_date = r.date(3)?;
    let status = r.raw(4).parse().map_err(|m: String| r.err(4, m))?;
    let rate_total = r.money(5)?;
    let group = r.flag(6)?;
    let length_of_stay: u32 = r.raw(10).parse().map_err(|_| r.err(10, format!("bad length `{}`", r.raw(10))))?;
    if departure_date <= arrival_date {
        return Err(r.err(2, "departure must be after arrival"));
    }
    if i64::from(length_of_stay) != (departure_date - arrival_date).num_days() {
        return Err(r.err(10, "length of stay disagrees with the dates"));
    }
    Ok(Reservation {
        id,
        arrival_date,
        departure_date,
        booking_date,
        status,
        rate_total,
        group,
        source: r.raw(7).to_string(),
        sub_source: r.raw(8).to_string(),
        market_code: r.raw(9).to_string(),
        length_of_stay,
    })
}

/// Parses both files, drops zero-rate reservations and joins the nightly
/// rates. Malformed rows are collected in [`Cleaned::row_errors`].
pub fn parse_and_clean(reservations: impl Read, rates: impl Read) -> Result<Cleaned, IngestError> {
    let mut out = Cleaned::default();

    let file = "reservations";
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reservations);
    let headers = rdr.headers().map_err(|source| IngestError::Csv { file, source })?.clone();
    let idx = column_index(file, &headers, &RESERVATION_COLUMNS)?;
    let mut kept: HashMap<String, usize> = HashMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|source| IngestError::Csv { file, source })?;
        let row = Row { file, row: i + 1, record: &rec, idx: &idx, names: &RESERVATION_COLUMNS };
        match parse_reservation(&row) {
            Ok(r) if r.rate_total == Money(0) => out.drops.zero_rate += 1,
            Ok(r) => {
                kept.insert(r.id.clone(), out.reservations.len());
                out.reservations.push(r);
            }
            Err(e) => out.row_errors.push(e),
        }
    }

    let file = "rates";
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(rates);
    let headers = rdr.headers().map_err(|source| IngestError::Csv { file, source })?.clone();
    let idx = column_index(file, &headers, &RATE_COLUMNS)?;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|source| IngestError::Csv { file, source })?;
        let row = Row { file, row: i + 1, record: &rec, idx: &idx, names: &RATE_COLUMNS };
        let parsed = row.date(1).and_then(|d| row.money(2).map(|m| (d, m)));
        match parsed {
            Ok((stay_date, night_rate)) => {
                let id = row.raw(0);
                if kept.contains_key(id) {
                    out.rates.entry(id.to_string()).or_default().push(NightRate { stay_date, night_rate });
                } else {
                    out.drops.orphan_rates += 1;
                }
            }
            Err(e) => out.row_errors.push(e),
        }
    }
    for v in out.rates.values_mut() {
        v.sort_by_key(|n| n.stay_date);
    }
    Ok(out)
}

/// One stay night per night of each reservation, priced from the nightly
/// rates table. Zero-rate nights are dropped and counted in `drops`.
pub fn explode_stay_nights(
    reservations: &[Reservation],
    rates: &BTreeMap<String, Vec<NightRate>>,
    drops: &mut DropReport,
) -> Result<Vec<StayNight>, IngestError> {
    let mut out = Vec::new();
    for r in reservations {
        let nights = rates.get(&r.id).map_or(&[][..], Vec::as_slice);
        if nights.len() != r.length_of_stay as usize {
            return Err(IngestError::Integrity { id: r.id.clone(), expected: r.length_of_stay, got: nights.len() });
        }
        for n in nights {
            if n.stay_date < r.arrival_date || n.stay_date >= r.departure_date {
                return Err(IngestError::NightOutsideStay { id: r.id.clone(), date: n.stay_date });
            }
            if n.night_rate == Money(0) {
                drops.zero_rate_nights += 1;
                continue;
            }
            out.push(StayNight {
                reservation_id: r.id.clone(),
                stay_date: n.stay_date,
                night_rate: n.night_rate,
                booking_date: r.booking_date,
                status: r.status,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    Year,
    Month,
    Weekday,
    Total,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKey {
    Year(i32),
    Month(u32),
    Weekday(u32),
    Total,
}

impl GroupKey {
    fn of(grouping: Grouping, d: NaiveDate) -> Self {
        match grouping {
            Grouping::Year => GroupKey::Year(d.year()),
            Grouping::Month => GroupKey::Month(d.month()),
            Grouping::Weekday => GroupKey::Weekday(d.weekday().num_days_from_monday()),
            Grouping::Total => GroupKey::Total,
        }
    }
}

impl std::fmt::Display for GroupKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GroupKey::Year(y) => write!(f, "{y}"),
            GroupKey::Month(m) => write!(f, "{m:02}"),
            GroupKey::Weekday(w) => write!(f, "{}", weekday_name(*w)),
            GroupKey::Total => f.write_str("total"),
        }
    }
}

pub fn weekday_name(w: u32) -> &'static str {
    ["Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday"][w as usize % 7]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiReport {
    pub key: GroupKey,
    pub days: u32,
    pub occupied: u64,
    pub revenue: Money,
    /// Average daily rate; absent when no room was occupied.
    pub adr: Option<Money>,
    pub revpar: Money,
    pub occupancy: f64,
}

/// ADR, RevPAR and occupancy over the inclusive `period`, counting only
/// nights with status stay and measuring against full capacity.
pub fn compute_kpis(
    nights: &[StayNight],
    capacity: u32,
    grouping: Grouping,
    period: (NaiveDate, NaiveDate),
) -> Result<Vec<KpiReport>, IngestError> {
    if capacity == 0 {
        return Err(IngestError::ZeroCapacity);
    }
    let mut acc: BTreeMap<GroupKey, (u32, u64, i64)> = BTreeMap::new();
    for d in period.0.iter_days().take_while(|d| *d <= period.1) {
        acc.entry(GroupKey::of(grouping, d)).or_default().0 += 1;
    }
    for n in nights.iter().filter(|n| n.status == Status::Stay) {
        if n.stay_date < period.0 || n.stay_date > period.1 {
            continue;
        }
        let e = acc.entry(GroupKey::of(grouping, n.stay_date)).or_default();
        e.1 += 1;
        e.2 += n.night_rate.0;
    }
    Ok(acc
        .into_iter()
        .map(|(key, (days, occupied, revenue))| {
            let room_nights = f64::from(capacity) * f64::from(days);
            KpiReport {
                key,
                days,
                occupied,
                revenue: Money(revenue),
                adr: (occupied > 0).then(|| Money((revenue as f64 / occupied as f64).round() as i64)),
                revpar: Money((revenue as f64 / room_nights).round() as i64),
                occupancy: occupied as f64 / room_nights,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioWarnings {
    /// Nights priced outside the ladder, clamped to its ends.
    pub clamped_rates: usize,
    /// Nights booked at or before the horizon start, assigned to day 1.
    pub early_bookings: usize,
    /// Nights whose booking date is after the stay date (skipped).
    pub booked_after_stay: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScenarioBuild {
    pub scenarios: Vec<DemandScenario>,
    pub warnings: ScenarioWarnings,
}

/// One raw scenario per check-in date in the inclusive `dates` range (all
/// stay dates when `None`), optionally keeping a single weekday. Every
/// booking counts regardless of later status. A rate is marked observed on a
/// day when at least one booking was made at it.
pub fn build_demand_scenarios(
    nights: &[StayNight],
    ladder: &RateLadder,
    horizon: BookingHorizon,
    weekday: Option<Weekday>,
    dates: Option<(NaiveDate, NaiveDate)>,
) -> Result<ScenarioBuild, IngestError> {
    let mut warnings = ScenarioWarnings::default();
    let (from, to) = match dates {
        Some(r) => r,
        None => match (nights.iter().map(|n| n.stay_date).min(), nights.iter().map(|n| n.stay_date).max()) {
            (Some(a), Some(b)) => (a, b),
            _ => return Ok(ScenarioBuild::default()),
        },
    };
    let t = horizon.length();
    let mut grid: BTreeMap<NaiveDate, Vec<Vec<u32>>> = from
        .iter_days()
        .take_while(|d| *d <= to)
        .filter(|d| weekday.is_none_or(|w| d.weekday() == w))
        .map(|d| (d, vec![vec![0u32; t as usize]; ladder.len()]))
        .collect();
    for n in nights {
        let Some(counts) = grid.get_mut(&n.stay_date) else { continue };
        let lead = (n.stay_date - n.booking_date).num_days();
        if lead < 0 {
            warnings.booked_after_stay += 1;
            continue;
        }
        let day = if lead >= i64::from(t) {
            warnings.early_bookings += 1;
            1
        } else {
            to_booking_horizon(lead, t)?
        };
        let (class, clamped) = ladder.bin(n.night_rate);
        if clamped {
            warnings.clamped_rates += 1;
        }
        counts[class][(day - 1) as usize] += 1;
    }
    let scenarios = grid
        .into_iter()
        .map(|(date, counts)| DemandScenario::from_counts(date, ladder.rates().to_vec(), counts))
        .collect::<Result<_, _>>()?;
    Ok(ScenarioBuild { scenarios, warnings })
}
