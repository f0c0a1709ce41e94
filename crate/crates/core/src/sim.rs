//! Controlled-environment simulation: known demand curves, Poisson bookings
//! under a random single open rate per day, fitting studies against the
//! known truth, and synthetic booking histories for backtesting.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use chrono::NaiveDate;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{cumulate_choice_sets, DemandScenario, DomainError, Money};
use crate::dp::{self, DailyRates, DpError};
use crate::lp::Tolerances;
use crate::metrics::{self, BoxStats, MetricsError, Summary};
use crate::spline::{self, evaluate_curve, FitData, FitDiagnostics, RateCurveSet, SplineError, Transform};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("need at least one rate class")]
    NoClasses,
    #[error("scenario count must be at least 1")]
    NoScenarios,
    #[error("open-rate weights must be {expected} nonnegative numbers summing to 1")]
    BadWeights { expected: usize },
    #[error("smoothing set has {got} values for {expected} classes")]
    SmoothingCount { expected: usize, got: usize },
    #[error("sweep bounds {min}..={max} step {step} are invalid")]
    BadSweep { min: usize, max: usize, step: usize },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Spline(#[from] SplineError),
    #[error(transparent)]
    Dp(#[from] DpError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Shape of one individual class's expected arrivals per day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum CurveForm {
    /// `amplitude · sin(π t / T)`: one hump, zero at both ends.
    HalfSine { amplitude: f64 },
    /// `amplitude · sin(t)` with `t` in days, negative parts clamped to 0.
    Sine { amplitude: f64 },
    /// `slope · t`.
    Linear { slope: f64 },
    /// `scale · exp(growth · t)`.
    Exponential { scale: f64, growth: f64 },
}

impl CurveForm {
    /// Unclamped value at day `t` of a horizon of `horizon` days.
    pub fn raw(&self, t: f64, horizon: u32) -> f64 {
        match *self {
            CurveForm::HalfSine { amplitude } => amplitude * libm::sin(PI * t / f64::from(horizon)),
            CurveForm::Sine { amplitude } => amplitude * libm::sin(t),
            CurveForm::Linear { slope } => slope * t,
            CurveForm::Exponential { scale, growth } => scale * libm::exp(growth * t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueClass {
    pub price: Money,
    pub form: CurveForm,
}

/// Individual classes in ascending price order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueCurveSpec {
    pub horizon: u32,
    pub classes: Vec<TrueClass>,
}

impl TrueCurveSpec {
    /// Three classes at 100/200/300 over 28 days. `literal_sine` selects the
    /// clamped `0.43 sin(t)` form for the cheapest class instead of the
    /// single hump `0.43 sin(π t / 28)`.
    pub fn reference(literal_sine: bool) -> Self {
        let first = if literal_sine {
            CurveForm::Sine { amplitude: 0.43 }
        } else {
            CurveForm::HalfSine { amplitude: 0.43 }
        };
        TrueCurveSpec {
            horizon: 28,
            classes: vec![
                TrueClass { price: Money::from_major(100), form: first },
                TrueClass { price: Money::from_major(200), form: CurveForm::Linear { slope: 0.16 } },
                TrueClass {
                    price: Money::from_major(300),
                    form: CurveForm::Exponential { scale: 0.02, growth: 0.18 },
                },
            ],
        }
    }

    pub fn prices(&self) -> Vec<Money> {
        self.classes.iter().map(|c| c.price).collect()
    }
}

/// Known curves on days `1..=horizon`. `cumulated[r]` is the choice-set
/// curve: the sum of the individual curves at price `r` and above.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueCurves {
    pub prices: Vec<Money>,
    pub horizon: u32,
    pub individual: Vec<Vec<f64>>,
    pub cumulated: Vec<Vec<f64>>,
    /// Number of (class, day) values that were negative and set to 0.
    pub clamped: usize,
}

impl TrueCurves {
    pub fn individual_at(&self, class: usize, day: u32) -> f64 {
        self.individual[class][(day - 1) as usize]
    }

    pub fn cumulated_at(&self, class: usize, day: u32) -> f64 {
        self.cumulated[class][(day - 1) as usize]
    }

    pub fn daily_rates(&self) -> DailyRates {
        DailyRates::from_fn(self.prices.clone(), 1, self.horizon, |c, d| self.cumulated_at(c, d))
    }
}

pub fn generate_true_curves(spec: &TrueCurveSpec) -> Result<TrueCurves, SimError> {
    if spec.classes.is_empty() {
        return Err(SimError::NoClasses);
    }
    let mut clamped = 0;
    let individual: Vec<Vec<f64>> = spec
        .classes
        .iter()
        .map(|c| {
            (1..=spec.horizon)
                .map(|t| {
                    let v = c.form.raw(f64::from(t), spec.horizon);
                    if v < 0.0 {
                        clamped += 1;
                    }
                    v.max(0.0)
                })
                .collect()
        })
        .collect();
    let mut cumulated = individual.clone();
    for r in (0..cumulated.len().saturating_sub(1)).rev() {
        let (lo, hi) = cumulated.split_at_mut(r + 1);
        for (a, b) in lo[r].iter_mut().zip(&hi[0]) {
            *a += b;
        }
    }
    Ok(TrueCurves { prices: spec.prices(), horizon: spec.horizon, individual, cumulated, clamped })
}

fn check_weights(weights: &[f64], classes: usize) -> Result<WeightedIndex<f64>, SimError> {
    let bad = weights.len() != classes
        || weights.iter().any(|w| !(w.is_finite() && *w >= 0.0))
        || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9;
    if bad {
        return Err(SimError::BadWeights { expected: classes });
    }
    WeightedIndex::new(weights).map_err(|_| SimError::BadWeights { expected: classes })
}

fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u32 {
    if mean <= 0.0 {
        return 0;
    }
    // mean is finite and positive here
    Poisson::new(mean).map_or(0, |p| p.sample(rng) as u32)
}

/// Uniform open-rate weights.
pub fn uniform_weights(classes: usize) -> Vec<f64> {
    vec![1.0 / classes as f64; classes]
}

/// Draws `count` raw scenarios. Each day one class is open; the bookings that
/// day are Poisson with the open class's choice-set rate and are recorded at
/// that class. Check-in dates run consecutively from `first_date`.
pub fn simulate_scenarios<R: Rng + ?Sized>(
    curves: &TrueCurves,
    count: usize,
    weights: &[f64],
    first_date: NaiveDate,
    rng: &mut R,
) -> Result<Vec<DemandScenario>, SimError> {
    let pick = check_weights(weights, curves.prices.len())?;
    let horizon = curves.horizon as usize;
    let mut out = Vec::with_capacity(count);
    for s in 0..count {
        let mut counts = vec![vec![0u32; horizon]; curves.prices.len()];
        let mut open = vec![vec![false; horizon]; curves.prices.len()];
        for t in 0..horizon {
            let r = pick.sample(rng);
            open[r][t] = true;
            counts[r][t] = poisson(rng, curves.cumulated[r][t]);
        }
        let date = first_date + chrono::Duration::days(s as i64);
        out.push(DemandScenario::with_availability(date, curves.prices.clone(), counts, open)?);
    }
    Ok(out)
}

/// Splitmix-style derivation so that every study cell owns an independent,
/// reproducible stream.
pub fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    for _ in 0..2 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

fn sim_epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(2019, 1, 1).expect("valid date")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub scenarios: usize,
    pub out_of_sample: usize,
    pub seed: u64,
    /// Open-rate weights per class (ascending price), summing to 1.
    pub open_weights: Vec<f64>,
    /// Per-class smoothing parameters, one set per study arm.
    pub smoothing_sets: Vec<Vec<f64>>,
    pub capacity: u32,
    pub subdivisions: u32,
    pub literal_sine: bool,
    pub transform: Transform,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            scenarios: 50,
            out_of_sample: 100,
            seed: 2021,
            open_weights: uniform_weights(3),
            smoothing_sets: vec![vec![0.1, 0.2, 0.3], vec![0.7, 0.8, 0.9]],
            capacity: 100,
            subdivisions: dp::DEFAULT_SUBDIVISIONS,
            literal_sine: false,
            transform: Transform::None,
        }
    }
}

impl SimConfig {
    fn validate(&self, classes: usize) -> Result<(), SimError> {
        if self.scenarios == 0 {
            return Err(SimError::NoScenarios);
        }
        check_weights(&self.open_weights, classes)?;
        for set in &self.smoothing_sets {
            if set.len() != classes {
                return Err(SimError::SmoothingCount { expected: classes, got: set.len() });
            }
        }
        Ok(())
    }
}

/// Out-of-sample WAPE distributions for one class (fractions, not %).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutOfSample {
    pub rate: Money,
    pub against_true: Vec<f64>,
    pub against_fit: Vec<f64>,
    pub true_box: Option<BoxStats>,
    pub fit_box: Option<BoxStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyArm {
    pub smoothing: Vec<f64>,
    pub curves: RateCurveSet,
    pub diagnostics: FitDiagnostics,
    /// Per class: fitted curve against the mean observation at each knot.
    pub in_sample_wape: Vec<f64>,
    pub out_of_sample: Vec<OutOfSample>,
    pub pooled_true_mean: f64,
    pub pooled_fit_mean: f64,
    pub expected_revenue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub config: SimConfig,
    pub truth: TrueCurves,
    /// DP revenue on the true choice-set curves.
    pub true_revenue: f64,
    /// The same with the other sine reading for the cheapest class.
    pub alternate_form_revenue: f64,
    pub arms: Vec<StudyArm>,
    pub notes: Vec<String>,
}

/// DP expected revenue for arrival rates sampled on days `1..=horizon`.
pub fn expected_revenue(daily: &DailyRates, capacity: u32, subdivisions: u32) -> Result<f64, SimError> {
    let rates = dp::refine_time_grid(daily, subdivisions)?;
    Ok(dp::solve_dp(&rates, capacity).expected_revenue())
}

/// WAPE of a fitted curve against the per-knot mean of the observations.
pub fn in_sample_wape(data: &FitData, curves: &RateCurveSet, class: usize) -> Result<f64, SimError> {
    let mut actual = Vec::new();
    let mut fitted = Vec::new();
    for (&day, ys) in &data.observations[class] {
        actual.push(ys.iter().sum::<f64>() / ys.len() as f64);
        fitted.push(evaluate_curve(curves, class, f64::from(day))?);
    }
    Ok(metrics::wape(&actual, &fitted)?.value)
}

/// Per-class WAPE of one cumulated scenario's observed cells against a
/// curve; `None` when the class booked nothing on its open days.
fn scenario_wape(s: &DemandScenario, class: usize, mut curve: impl FnMut(u32) -> Result<f64, SimError>) -> Result<Option<f64>, SimError> {
    let mut a = Vec::new();
    let mut f = Vec::new();
    for day in 1..=s.horizon() {
        if s.is_observed(class, day) {
            a.push(f64::from(s.count(class, day)));
            f.push(curve(day)?);
        }
    }
    match metrics::wape(&a, &f) {
        Ok(w) => Ok(Some(w.value)),
        Err(MetricsError::ZeroActuals) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn cumulate_all(raw: &[DemandScenario]) -> Result<Vec<DemandScenario>, SimError> {
    Ok(raw.iter().map(cumulate_choice_sets).collect::<Result<_, _>>()?)
}

pub fn run_simulation_study(config: &SimConfig) -> Result<StudyReport, SimError> {
    let spec = TrueCurveSpec::reference(config.literal_sine);
    let truth = generate_true_curves(&spec)?;
    let classes = truth.prices.len();
    config.validate(classes)?;
    let true_revenue = expected_revenue(&truth.daily_rates(), config.capacity, config.subdivisions)?;
    let other = generate_true_curves(&TrueCurveSpec::reference(!config.literal_sine))?;
    let alternate_form_revenue = expected_revenue(&other.daily_rates(), config.capacity, config.subdivisions)?;

    let mut train_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 1, 0));
    let train = cumulate_all(&simulate_scenarios(&truth, config.scenarios, &config.open_weights, sim_epoch(), &mut train_rng)?)?;
    let mut test_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 2, 0));
    let test_epoch = sim_epoch() + chrono::Duration::days(config.scenarios as i64);
    let test = cumulate_all(&simulate_scenarios(&truth, config.out_of_sample, &config.open_weights, test_epoch, &mut test_rng)?)?;

    let data = FitData::from_scenarios(&train, None)?;
    let mut arms = Vec::new();
    for smoothing in &config.smoothing_sets {
        let program = spline::build_program(&data, smoothing, config.transform)?;
        let (curves, diagnostics) = spline::fit_curves(&program, &Tolerances::default())?;
        let in_sample_wape = (0..classes).map(|r| in_sample_wape(&data, &curves, r)).collect::<Result<Vec<_>, _>>()?;
        let lo = curves.first_knot();
        let hi = curves.last_knot();
        let mut out_of_sample = Vec::new();
        for r in 0..classes {
            let mut against_true = Vec::new();
            let mut against_fit = Vec::new();
            for s in &test {
                if let Some(w) = scenario_wape(s, r, |d| Ok(truth.cumulated_at(r, d)))? {
                    against_true.push(w);
                }
                if let Some(w) = scenario_wape(s, r, |d| Ok(evaluate_curve(&curves, r, f64::from(d).clamp(lo, hi))?))? {
                    against_fit.push(w);
                }
            }
            out_of_sample.push(OutOfSample {
                rate: truth.prices[r],
                true_box: metrics::box_stats(&against_true).ok(),
                fit_box: metrics::box_stats(&against_fit).ok(),
                against_true,
                against_fit,
            });
        }
        let pooled = |pick: fn(&OutOfSample) -> &Vec<f64>| {
            let all: Vec<f64> = out_of_sample.iter().flat_map(|o| pick(o).iter().copied()).collect();
            metrics::summarize(&all).map(|s| s.mean).unwrap_or(f64::NAN)
        };
        let pooled_true_mean = pooled(|o| &o.against_true);
        let pooled_fit_mean = pooled(|o| &o.against_fit);
        let daily = DailyRates::from_curves(&curves, 1, truth.horizon)?;
        let expected_revenue = expected_revenue(&daily, config.capacity, config.subdivisions)?;
        arms.push(StudyArm {
            smoothing: smoothing.clone(),
            curves,
            diagnostics,
            in_sample_wape,
            out_of_sample,
            pooled_true_mean,
            pooled_fit_mean,
            expected_revenue,
        });
    }

    let mut notes = Vec::new();
    if truth.clamped > 0 {
        notes.push(alloc::format!("{} negative true-curve values clamped to 0", truth.clamped));
    }
    let over = train.iter().chain(&test).filter(|s| s.total_bookings(1, s.horizon()) > u64::from(config.capacity)).count();
    if over > 0 {
        notes.push(alloc::format!("{over} simulated scenarios exceed capacity {} (kept)", config.capacity));
    }
    Ok(StudyReport { config: config.clone(), truth, true_revenue, alternate_form_revenue, arms, notes })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensitivityConfig {
    pub min_scenarios: usize,
    pub max_scenarios: usize,
    pub step: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub open_weights: Vec<f64>,
    pub smoothing_sets: Vec<Vec<f64>>,
    pub capacity: u32,
    pub subdivisions: u32,
    pub literal_sine: bool,
    pub transform: Transform,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        let base = SimConfig::default();
        SensitivityConfig {
            min_scenarios: 10,
            max_scenarios: 50,
            step: 1,
            repetitions: 10,
            seed: base.seed,
            open_weights: base.open_weights,
            smoothing_sets: base.smoothing_sets,
            capacity: base.capacity,
            subdivisions: base.subdivisions,
            literal_sine: base.literal_sine,
            transform: base.transform,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityCell {
    pub scenarios: usize,
    pub revenues: Vec<f64>,
    pub summary: Summary,
    /// Normal-approximation 95% interval of the mean; absent with one run.
    pub interval: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityArm {
    pub smoothing: Vec<f64>,
    pub cells: Vec<SensitivityCell>,
    pub runs: usize,
    /// Standard deviation of the per-count means.
    pub between_count_sd: Option<f64>,
    /// Average of the per-count standard deviations.
    pub within_count_sd: Option<f64>,
}

impl SensitivityArm {
    /// Whether the mean moves less across scenario counts than runs vary
    /// within a count.
    pub fn mean_is_steady(&self) -> Option<bool> {
        Some(self.between_count_sd? < self.within_count_sd?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub config: SensitivityConfig,
    pub true_revenue: f64,
    pub arms: Vec<SensitivityArm>,
}

/// Refits and re-optimises on fresh scenarios for every scenario count in
/// the sweep, `repetitions` times each. `progress` is called after each run.
pub fn run_sensitivity(
    config: &SensitivityConfig,
    mut progress: impl FnMut(usize, usize),
) -> Result<SensitivityReport, SimError> {
    if config.step == 0 || config.min_scenarios == 0 || config.min_scenarios > config.max_scenarios || config.repetitions == 0 {
        return Err(SimError::BadSweep { min: config.min_scenarios, max: config.max_scenarios, step: config.step });
    }
    let truth = generate_true_curves(&TrueCurveSpec::reference(config.literal_sine))?;
    let classes = truth.prices.len();
    check_weights(&config.open_weights, classes)?;
    for set in &config.smoothing_sets {
        if set.len() != classes {
            return Err(SimError::SmoothingCount { expected: classes, got: set.len() });
        }
    }
    let true_revenue = expected_revenue(&truth.daily_rates(), config.capacity, config.subdivisions)?;
    let counts: Vec<usize> = (config.min_scenarios..=config.max_scenarios).step_by(config.step).collect();
    let total = counts.len() * config.repetitions * config.smoothing_sets.len();
    let mut done = 0;
    let mut arms = Vec::new();
    for (arm_index, smoothing) in config.smoothing_sets.iter().enumerate() {
        let mut cells = Vec::new();
        for &count in &counts {
            let mut revenues = Vec::with_capacity(config.repetitions);
            for rep in 0..config.repetitions {
                let seed = derive_seed(config.seed, 1000 + arm_index as u64, (count as u64) << 16 | rep as u64);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let raw = simulate_scenarios(&truth, count, &config.open_weights, sim_epoch(), &mut rng)?;
                let (curves, _) = spline::fit(&cumulate_all(&raw)?, smoothing, config.transform, None)?;
                let daily = DailyRates::from_curves(&curves, 1, truth.horizon)?;
                revenues.push(expected_revenue(&daily, config.capacity, config.subdivisions)?);
                done += 1;
                progress(done, total);
            }
            let summary = metrics::summarize(&revenues)?;
            let interval = summary.sd.map(|sd| {
                let half = 1.96 * sd / libm::sqrt(revenues.len() as f64);
                (summary.mean - half, summary.mean + half)
            });
            cells.push(SensitivityCell { scenarios: count, revenues, summary, interval });
        }
        let means: Vec<f64> = cells.iter().map(|c| c.summary.mean).collect();
        let between_count_sd = metrics::summarize(&means)?.sd;
        let sds: Vec<f64> = cells.iter().filter_map(|c| c.summary.sd).collect();
        let within_count_sd = metrics::summarize(&sds).ok().map(|s| s.mean);
        arms.push(SensitivityArm {
            smoothing: smoothing.clone(),
            runs: cells.iter().map(|c| c.revenues.len()).sum(),
            cells,
            between_count_sd,
            within_count_sd,
        });
    }
    Ok(SensitivityReport { config: config.clone(), true_revenue, arms })
}

/// A synthetic booking history over a long horizon for backtesting.
///
/// Every check-in date shares one set of individual curves, scaled by a
/// weekday factor and a per-date factor. Each horizon day one class is open,
/// picked by `open_weights` regardless of demand, which makes the history a
/// fixed, demand-blind pricing policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HistorySpec {
    pub first_date: NaiveDate,
    pub dates: usize,
    pub horizon: u32,
    /// Ascending prices.
    pub prices: Vec<Money>,
    /// Expected total bookings per day at check-in.
    pub peak_demand: f64,
    /// Factor per weekday, Monday first.
    pub weekday_factors: [f64; 7],
    /// Per-date factor is uniform in `1 ± date_noise`.
    pub date_noise: f64,
    pub open_weights: Vec<f64>,
    pub seed: u64,
}

impl Default for HistorySpec {
    fn default() -> Self {
        let prices: Vec<Money> = (0..5).map(|i| Money::from_major(70 + 25 * i)).collect();
        HistorySpec {
            first_date: NaiveDate::from_ymd_opt(2018, 1, 1).expect("valid date"),
            dates: 28 * 7,
            horizon: 100,
            open_weights: uniform_weights(prices.len()),
            prices,
            peak_demand: 4.0,
            weekday_factors: [0.8, 0.85, 0.9, 1.1, 1.3, 1.25, 0.8],
            date_noise: 0.15,
            seed: 7,
        }
    }
}

impl HistorySpec {
    /// Individual expected bookings per day for `class` at horizon day `t`.
    /// Cheaper classes draw more customers; demand grows towards check-in.
    pub fn individual_rate(&self, class: usize, t: u32) -> f64 {
        let r = self.prices.len();
        let share = (r - class) as f64 / (r * (r + 1) / 2) as f64;
        let x = f64::from(t) / f64::from(self.horizon);
        self.peak_demand * share * (0.15 + 0.85 * x * libm::sqrt(x))
    }

    /// Choice-set rate of `class` at day `t`, before date factors.
    pub fn choice_rate(&self, class: usize, t: u32) -> f64 {
        (class..self.prices.len()).map(|c| self.individual_rate(c, t)).sum()
    }
}

pub fn synthetic_history(spec: &HistorySpec) -> Result<Vec<DemandScenario>, SimError> {
    use chrono::Datelike;
    if spec.prices.is_empty() {
        return Err(SimError::NoClasses);
    }
    let pick = check_weights(&spec.open_weights, spec.prices.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let h = spec.horizon as usize;
    let mut out = Vec::with_capacity(spec.dates);
    for i in 0..spec.dates {
        let date = spec.first_date + chrono::Duration::days(i as i64);
        let noise = if spec.date_noise > 0.0 { rng.random_range(-spec.date_noise..spec.date_noise) } else { 0.0 };
        let factor = spec.weekday_factors[date.weekday().num_days_from_monday() as usize] * (1.0 + noise);
        let mut counts = vec![vec![0u32; h]; spec.prices.len()];
        let mut open = vec![vec![false; h]; spec.prices.len()];
        for t in 1..=spec.horizon {
            let r = pick.sample(&mut rng);
            open[r][(t - 1) as usize] = true;
            counts[r][(t - 1) as usize] = poisson(&mut rng, factor * spec.choice_rate(r, t));
        }
        out.push(DemandScenario::with_availability(date, spec.prices.clone(), counts, open)?);
    }
    Ok(out)
}
