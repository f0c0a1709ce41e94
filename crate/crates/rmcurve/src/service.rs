//! HTTP/JSON service over a scenario store.
//!
//! | method | path                | body                                            |
//! |--------|---------------------|-------------------------------------------------|
//! | GET    | `/properties`       |                                                 |
//! | GET    | `/scenarios/{date}` |                                                 |
//! | POST   | `/fit`              | `{dates, g_low, g_high, transform?, window?}`   |
//! | POST   | `/optimize`         | `{fit_id, capacity?, subdivisions?}`            |
//! | POST   | `/whatif`           | `{fit_id, capacity?, overrides: {day: rate}}`   |
//! | POST   | `/backtest`         | `{from, to, config?}`                           |
//!
//! Errors are `{"error": ..., "field": ...}` with a 4xx status. Fits are
//! cached under an id derived from the request, so repeating a fit is free
//! and `fit_id`s stay valid for the life of the process.

use std::collections::{BTreeMap, HashMap};
use std::hash::{DefaultHasher, Hash, Hasher};
use std::sync::{Arc, Mutex};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::NaiveDate;
use rmcurve_core::domain::{DemandScenario, Money};
use rmcurve_core::dp::{self, DailyRates, RatePolicy, WhatIf};
use rmcurve_core::pipeline::{self, BacktestConfig, BacktestReport, History};
use rmcurve_core::spline::{FitDiagnostics, RateCurveSet, Transform};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::PropertyConfig;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    field: Option<&'static str>,
    message: String,
}

impl ApiError {
    fn invalid(field: &'static str, message: impl Into<String>) -> Self {
        ApiError { status: StatusCode::UNPROCESSABLE_ENTITY, field: Some(field), message: message.into() }
    }

    fn not_found(message: impl Into<String>) -> Self {
        ApiError { status: StatusCode::NOT_FOUND, field: None, message: message.into() }
    }

    fn internal(message: impl Into<String>) -> Self {
        ApiError { status: StatusCode::INTERNAL_SERVER_ERROR, field: None, message: message.into() }
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.field {
            Some(field) => write!(f, "{field}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ApiError {}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message, "field": self.field }))).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError { status: StatusCode::BAD_REQUEST, field: None, message: r.body_text() }
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CachedFit {
    pub fit_id: String,
    pub window: (u32, u32),
    pub curves: RateCurveSet,
    pub diagnostics: FitDiagnostics,
    /// Rates left out for having fewer than three observed days.
    pub excluded: Vec<Money>,
}

pub struct AppState {
    pub property: PropertyConfig,
    pub history: History,
    pub backtest: BacktestConfig,
    fits: Mutex<HashMap<String, Arc<CachedFit>>>,
}

impl AppState {
    pub fn new(property: PropertyConfig, history: History, backtest: BacktestConfig) -> Self {
        AppState { property, history, backtest, fits: Mutex::new(HashMap::new()) }
    }

    fn cached(&self, id: &str) -> Option<Arc<CachedFit>> {
        self.fits.lock().expect("fit cache poisoned").get(id).cloned()
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/properties", get(properties))
        .route("/scenarios/{date}", get(scenario))
        .route("/fit", post(fit))
        .route("/optimize", post(optimize))
        .route("/whatif", post(whatif))
        .route("/backtest", post(backtest))
        .with_state(state)
}

pub async fn serve(state: Arc<AppState>, bind: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

#[derive(Debug, Serialize)]
struct PropertySummary {
    name: String,
    capacity: u32,
    horizon: u32,
    rates: Vec<Money>,
    dates: usize,
    first_date: Option<NaiveDate>,
    last_date: Option<NaiveDate>,
}

async fn properties(State(st): State<Arc<AppState>>) -> Json<Vec<PropertySummary>> {
    let s = st.history.scenarios();
    Json(vec![PropertySummary {
        name: st.property.name.clone(),
        capacity: st.property.capacity,
        horizon: st.property.horizon,
        rates: st.history.rates().to_vec(),
        dates: s.len(),
        first_date: s.first().map(|s| s.checkin_date),
        last_date: s.last().map(|s| s.checkin_date),
    }])
}

async fn scenario(State(st): State<Arc<AppState>>, Path(date): Path<String>) -> ApiResult<DemandScenario> {
    let date: NaiveDate = date.parse().map_err(|_| ApiError::invalid("date", format!("`{date}` is not a YYYY-MM-DD date")))?;
    st.history.get(date).cloned().map(Json).ok_or_else(|| ApiError::not_found(format!("no scenario for {date}")))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitRequest {
    pub dates: Vec<NaiveDate>,
    pub g_low: f64,
    pub g_high: f64,
    #[serde(default)]
    pub transform: Transform,
    /// Inclusive horizon-day window; the backtest forecast window by default.
    #[serde(default)]
    pub window: Option<(u32, u32)>,
}

pub fn fit_id(req: &FitRequest) -> String {
    let mut h = DefaultHasher::new();
    let mut dates = req.dates.clone();
    dates.sort();
    dates.dedup();
    dates.hash(&mut h);
    req.g_low.to_bits().hash(&mut h);
    req.g_high.to_bits().hash(&mut h);
    req.transform.hash(&mut h);
    req.window.hash(&mut h);
    format!("{:016x}", h.finish())
}

/// Validates a fit request against a history and fits it. `default_window`
/// applies when the request names none.
pub fn run_fit(history: &History, default_window: (u32, u32), req: &FitRequest) -> Result<CachedFit, ApiError> {
    if req.dates.is_empty() {
        return Err(ApiError::invalid("dates", "at least one date is required"));
    }
    for (field, g) in [("g_low", req.g_low), ("g_high", req.g_high)] {
        if !(0.0..=1.0).contains(&g) {
            return Err(ApiError::invalid(field, format!("must be in [0, 1], got {g}")));
        }
    }
    if req.g_low > req.g_high {
        return Err(ApiError::invalid("g_high", "must not be below g_low"));
    }
    let horizon = history.scenarios().first().map_or(0, |s| s.horizon());
    let window = req.window.unwrap_or(default_window);
    if window.0 < 1 || window.1 > horizon || window.0 + 2 > window.1 {
        return Err(ApiError::invalid("window", format!("needs 1 <= first, first + 2 <= last <= {horizon}")));
    }
    let mut scenarios = Vec::with_capacity(req.dates.len());
    for d in &req.dates {
        let s = history.get(*d).ok_or_else(|| ApiError::invalid("dates", format!("no scenario for {d}")))?;
        scenarios.push(s.clone());
    }
    let rates = history.rates().to_vec();
    let smoothing = pipeline::interpolate_smoothing(rates.len(), req.g_low, req.g_high)
        .map_err(|e| ApiError::invalid("g_low", e.to_string()))?;
    let fitted = pipeline::fit_scenarios(&scenarios, window, &smoothing, req.transform)
        .map_err(|e| ApiError::invalid("dates", e.to_string()))?;
    let excluded = (0..rates.len()).filter(|r| !fitted.kept.contains(r)).map(|r| rates[r]).collect();
    let Some((curves, diagnostics)) = fitted.fit else {
        return Err(ApiError::invalid("dates", "no rate has three or more observed days in the window"));
    };
    Ok(CachedFit { fit_id: fit_id(req), window, curves, diagnostics, excluded })
}

async fn fit(State(st): State<Arc<AppState>>, body: Result<Json<FitRequest>, JsonRejection>) -> ApiResult<CachedFit> {
    let Json(req) = body?;
    let id = fit_id(&req);
    if let Some(hit) = st.cached(&id) {
        return Ok(Json((*hit).clone()));
    }
    let st2 = st.clone();
    let entry = tokio::task::spawn_blocking(move || run_fit(&st2.history, st2.backtest.forecast_window(), &req))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    st.fits.lock().expect("fit cache poisoned").insert(id, Arc::new(entry.clone()));
    Ok(Json(entry))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OptimizeRequest {
    fit_id: String,
    #[serde(default)]
    capacity: Option<u32>,
    #[serde(default)]
    subdivisions: Option<u32>,
}

#[derive(Debug, Serialize)]
struct OptimizeResponse {
    fit_id: String,
    capacity: u32,
    expected_revenue: f64,
    policy: RatePolicy,
}

pub fn arrival_rates(fit: &CachedFit, subdivisions: Option<u32>) -> Result<dp::ArrivalRates, ApiError> {
    let sub = subdivisions.unwrap_or(dp::DEFAULT_SUBDIVISIONS);
    if sub == 0 {
        return Err(ApiError::invalid("subdivisions", "must be at least 1"));
    }
    let daily = DailyRates::from_curves(&fit.curves, fit.window.0, fit.window.1).map_err(|e| ApiError::internal(e.to_string()))?;
    dp::refine_time_grid(&daily, sub).map_err(|e| ApiError::invalid("subdivisions", e.to_string()))
}

fn lookup(st: &AppState, id: &str) -> Result<Arc<CachedFit>, ApiError> {
    st.cached(id).ok_or_else(|| ApiError::not_found(format!("unknown fit_id `{id}`")))
}

async fn optimize(State(st): State<Arc<AppState>>, body: Result<Json<OptimizeRequest>, JsonRejection>) -> ApiResult<OptimizeResponse> {
    let Json(req) = body?;
    let fit = lookup(&st, &req.fit_id)?;
    let capacity = req.capacity.unwrap_or(st.property.capacity);
    let rates = arrival_rates(&fit, req.subdivisions)?;
    let sol = tokio::task::spawn_blocking(move || dp::solve_dp(&rates, capacity))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(Json(OptimizeResponse { fit_id: req.fit_id, capacity, expected_revenue: sol.expected_revenue(), policy: sol.policy }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WhatIfRequest {
    fit_id: String,
    #[serde(default)]
    capacity: Option<u32>,
    /// Horizon day to rate in major units.
    overrides: BTreeMap<u32, f64>,
}

async fn whatif(State(st): State<Arc<AppState>>, body: Result<Json<WhatIfRequest>, JsonRejection>) -> ApiResult<WhatIf> {
    let Json(req) = body?;
    let fit = lookup(&st, &req.fit_id)?;
    let capacity = req.capacity.unwrap_or(st.property.capacity);
    let rates = arrival_rates(&fit, None)?;
    let overrides: BTreeMap<u32, Money> = req.overrides.iter().map(|(&d, &r)| (d, Money::from_major_f64(r))).collect();
    tokio::task::spawn_blocking(move || dp::evaluate_overrides(&rates, capacity, &overrides))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
        .map(Json)
        .map_err(|e| ApiError::invalid("overrides", e.to_string()))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BacktestRequest {
    from: NaiveDate,
    to: NaiveDate,
    #[serde(default)]
    config: Option<BacktestConfig>,
}

async fn backtest(State(st): State<Arc<AppState>>, body: Result<Json<BacktestRequest>, JsonRejection>) -> ApiResult<BacktestReport> {
    let Json(req) = body?;
    if req.from > req.to {
        return Err(ApiError::invalid("to", "must not be before `from`"));
    }
    let config = req.config.unwrap_or_else(|| st.backtest.clone());
    config.validate().map_err(|e| ApiError::invalid("config", e.to_string()))?;
    let targets: Vec<NaiveDate> = st
        .history
        .scenarios()
        .iter()
        .map(|s| s.checkin_date)
        .filter(|d| (req.from..=req.to).contains(d))
        .collect();
    let st2 = st.clone();
    tokio::task::spawn_blocking(move || pipeline::run_backtest(&st2.history, &targets, &config))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
        .map(Json)
        .map_err(|e| ApiError::invalid("config", e.to_string()))
}
