use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use chrono::{NaiveDate, Weekday};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rmcurve::config::{AppConfig, PropertyConfig};
use rmcurve::export;
use rmcurve::ingest::{self, Grouping};
use rmcurve::service::{self, AppState, CachedFit, FitRequest};
use rmcurve::store::ScenarioStore;
use rmcurve_core::domain::{BookingHorizon, Money};
use rmcurve_core::dp;
use rmcurve_core::pipeline;
use rmcurve_core::sim::{self, HistorySpec};
use rmcurve_core::spline::Transform;

type BoxError = Box<dyn std::error::Error + Send + Sync>;

#[derive(Parser)]
#[command(name = "rmcurve", version, about = "Demand-curve fitting and dynamic pricing for hotel rooms")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, short, global = true, env = "RMCURVE_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a scenario store from reservation and nightly-rate exports.
    Ingest {
        #[arg(long)]
        reservations: PathBuf,
        #[arg(long)]
        rates: PathBuf,
        /// Property TOML; overrides `--config`.
        #[arg(long)]
        property: Option<PathBuf>,
        #[arg(long, visible_alias = "out")]
        store: PathBuf,
        #[command(flatten)]
        range: DateRange,
        /// Keep only check-in dates on this weekday (mon, tue, ...).
        #[arg(long)]
        weekday: Option<Weekday>,
    },
    /// ADR, RevPAR and occupancy from reservation exports.
    Kpis {
        #[arg(long)]
        reservations: PathBuf,
        #[arg(long)]
        rates: PathBuf,
        #[arg(long, value_enum, default_value = "month")]
        group: Grouping,
        #[arg(long)]
        from: NaiveDate,
        #[arg(long)]
        to: NaiveDate,
    },
    /// Write a synthetic booking history to a new store.
    Synth {
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value_t = 196)]
        dates: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Controlled-environment study: true curves, fits and out-of-sample error.
    Simulate {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Expected revenue against the number of input scenarios.
    Sensitivity {
        #[arg(long)]
        repetitions: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-date backtest over a store.
    Backtest {
        #[arg(long)]
        store: PathBuf,
        /// Inclusive check-in range `FIRST..LAST` (either end may be empty).
        #[arg(long, value_parser = parse_range)]
        targets: Option<(Option<NaiveDate>, Option<NaiveDate>)>,
        /// `report.json` for the full report; `report.csv` for the
        /// revenue-change table, with `report.rates.csv` (per-rate WAPE) and
        /// `report.targets.csv` (per-date rows) next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Summary of a store.
    Properties {
        #[arg(long)]
        store: PathBuf,
    },
    /// One stored scenario as JSON.
    Scenario {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        date: NaiveDate,
    },
    /// Fit demand curves to stored scenarios.
    Fit {
        #[arg(long)]
        store: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        dates: Vec<NaiveDate>,
        #[arg(long, default_value_t = 0.4)]
        g_low: f64,
        #[arg(long, default_value_t = 0.7)]
        g_high: f64,
        #[arg(long, value_enum, default_value = "none")]
        transform: TransformArg,
        /// Inclusive horizon-day window, e.g. `73-100`.
        #[arg(long, value_parser = parse_window)]
        window: Option<(u32, u32)>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Optimal pricing policy for a saved fit.
    Optimize {
        #[command(flatten)]
        dp: DpArgs,
        /// Policy CSV (interval, day, capacity, rate).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Expected revenue when some days post a fixed rate.
    Whatif {
        #[command(flatten)]
        dp: DpArgs,
        /// `day=rate`, repeatable.
        #[arg(long = "set", value_parser = parse_override, required = true)]
        overrides: Vec<(u32, f64)>,
    },
    /// Serve the HTTP/JSON API over a store.
    Serve {
        #[arg(long)]
        store: PathBuf,
        #[arg(long, env = "RMCURVE_BIND")]
        bind: Option<String>,
    },
}

#[derive(Args)]
struct DateRange {
    #[arg(long)]
    from: Option<NaiveDate>,
    #[arg(long)]
    to: Option<NaiveDate>,
}

#[derive(Args)]
struct DpArgs {
    /// JSON written by `fit`.
    #[arg(long)]
    fit: PathBuf,
    #[arg(long)]
    capacity: Option<u32>,
    #[arg(long, default_value_t = dp::DEFAULT_SUBDIVISIONS)]
    subdivisions: u32,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransformArg {
    None,
    Anscombe,
}

fn parse_window(s: &str) -> Result<(u32, u32), String> {
    let (a, b) = s.split_once('-').ok_or("expected FIRST-LAST")?;
    Ok((a.trim().parse().map_err(|e| format!("{e}"))?, b.trim().parse().map_err(|e| format!("{e}"))?))
}

fn parse_range(s: &str) -> Result<(Option<NaiveDate>, Option<NaiveDate>), String> {
    let (a, b) = s.split_once("..").ok_or("expected FIRST..LAST")?;
    let date = |x: &str| -> Result<Option<NaiveDate>, String> {
        let x = x.trim();
        if x.is_empty() {
            Ok(None)
        } else {
            x.parse().map(Some).map_err(|e| format!("`{x}`: {e}"))
        }
    };
    Ok((date(a)?, date(b)?))
}

fn parse_override(s: &str) -> Result<(u32, f64), String> {
    let (d, r) = s.split_once('=').ok_or("expected DAY=RATE")?;
    Ok((d.trim().parse().map_err(|e| format!("{e}"))?, r.trim().parse().map_err(|e| format!("{e}"))?))
}

fn load_config(path: Option<&Path>) -> Result<AppConfig, BoxError> {
    Ok(match path {
        Some(p) => AppConfig::load(p)?,
        None => AppConfig::default(),
    })
}

fn require_property(cfg: &AppConfig) -> Result<&PropertyConfig, BoxError> {
    cfg.property.as_ref().ok_or_else(|| "this command needs a [property] section in --config".into())
}

fn emit_json<T: serde::Serialize>(value: &T, out: Option<&Path>) -> Result<(), BoxError> {
    match out {
        Some(p) => export::write_json(p, value)?,
        None => {
            let mut stdout = io::stdout().lock();
            serde_json::to_writer_pretty(&mut stdout, value)?;
            writeln!(stdout)?;
        }
    }
    Ok(())
}

fn dated_targets(store: &ScenarioStore, from: Option<NaiveDate>, to: Option<NaiveDate>) -> Vec<NaiveDate> {
    store.dates().iter().copied().filter(|d| from.is_none_or(|f| *d >= f) && to.is_none_or(|t| *d <= t)).collect()
}

fn read_exports(reservations: &Path, rates: &Path) -> Result<(Vec<ingest::StayNight>, ingest::DropReport), BoxError> {
    let mut cleaned = ingest::parse_and_clean(File::open(reservations)?, File::open(rates)?)?;
    for e in &cleaned.row_errors {
        eprintln!("skipped {} row {} ({}): {}", e.file, e.row, e.column, e.message);
    }
    let nights = ingest::explode_stay_nights(&cleaned.reservations, &cleaned.rates, &mut cleaned.drops)?;
    Ok((nights, cleaned.drops))
}

fn load_fit(args: &DpArgs) -> Result<(CachedFit, dp::ArrivalRates), BoxError> {
    let fit: CachedFit = serde_json::from_reader(File::open(&args.fit)?)?;
    let daily = dp::DailyRates::from_curves(&fit.curves, fit.window.0, fit.window.1)?;
    let rates = dp::refine_time_grid(&daily, args.subdivisions)?;
    Ok((fit, rates))
}

fn dp_capacity(args: &DpArgs, cfg: &AppConfig) -> Result<u32, BoxError> {
    args.capacity
        .or(cfg.property.as_ref().map(|p| p.capacity))
        .ok_or_else(|| "give --capacity or a [property] section".into())
}

fn run(cli: Cli) -> Result<(), BoxError> {
    let cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Ingest { reservations, rates, property, store, range, weekday } => {
            let cfg = match property {
                Some(p) => AppConfig::load(&p)?,
                None => cfg,
            };
            let prop = require_property(&cfg)?;
            let (nights, drops) = read_exports(&reservations, &rates)?;
            let dates = match (range.from, range.to) {
                (Some(a), Some(b)) => Some((a, b)),
                (None, None) => None,
                _ => return Err("give both --from and --to, or neither".into()),
            };
            let ladder = prop.ladder()?;
            let built = ingest::build_demand_scenarios(&nights, &ladder, prop.horizon()?, weekday, dates)?;
            let mut st = if store.join("manifest.json").exists() {
                ScenarioStore::open(&store)?
            } else {
                ScenarioStore::create(&store, &prop.name, ladder, prop.horizon()?)?
            };
            for s in &built.scenarios {
                st.put(s)?;
            }
            emit_json(&serde_json::json!({ "scenarios": built.scenarios.len(), "drops": drops, "warnings": built.warnings }), None)?;
        }
        Command::Kpis { reservations, rates, group, from, to } => {
            let prop = require_property(&cfg)?;
            let (nights, _) = read_exports(&reservations, &rates)?;
            let rows = ingest::compute_kpis(&nights, prop.capacity, group, (from, to))?;
            let mut w = csv::Writer::from_writer(io::stdout().lock());
            w.write_record(["period", "days", "occupied", "revenue", "adr", "revpar", "occupancy"])?;
            for r in rows {
                w.write_record([
                    r.key.to_string(),
                    r.days.to_string(),
                    r.occupied.to_string(),
                    r.revenue.to_string(),
                    r.adr.map_or_else(|| "-".into(), |m| m.to_string()),
                    r.revpar.to_string(),
                    format!("{:.4}", r.occupancy),
                ])?;
            }
            w.flush()?;
        }
        Command::Synth { store, dates, seed } => {
            let spec = HistorySpec { dates, seed, ..HistorySpec::default() };
            let scenarios = sim::synthetic_history(&spec)?;
            let ladder = rmcurve_core::domain::RateLadder::new(
                spec.prices[0],
                *spec.prices.last().expect("nonempty"),
                Money(spec.prices[1].0 - spec.prices[0].0),
            )?;
            let mut st = ScenarioStore::create(&store, "synthetic", ladder, BookingHorizon::new(spec.horizon)?)?;
            for s in &scenarios {
                st.put(s)?;
            }
            eprintln!("wrote {} scenarios to {}", scenarios.len(), store.display());
        }
        Command::Simulate { seed, out } => {
            let mut sc = cfg.simulation.clone();
            if let Some(s) = seed {
                sc.seed = s;
            }
            let report = sim::run_simulation_study(&sc)?;
            eprintln!("true-curve expected revenue: {:.0}", report.true_revenue);
            for arm in &report.arms {
                eprintln!(
                    "smoothing {:?}: expected revenue {:.0}, out-of-sample WAPE {:.3} (true curves {:.3})",
                    arm.smoothing, arm.expected_revenue, arm.pooled_fit_mean, arm.pooled_true_mean
                );
            }
            emit_json(&report, out.as_deref())?;
        }
        Command::Sensitivity { repetitions, out } => {
            let mut sc = cfg.sensitivity.clone();
            if let Some(r) = repetitions {
                sc.repetitions = r;
            }
            let report = sim::run_sensitivity(&sc, |done, total| {
                if done % 50 == 0 || done == total {
                    eprintln!("{done}/{total}");
                }
            })?;
            for arm in &report.arms {
                eprintln!(
                    "smoothing {:?}: {} runs, mean steady across counts: {:?}",
                    arm.smoothing,
                    arm.runs,
                    arm.mean_is_steady()
                );
            }
            emit_json(&report, out.as_deref())?;
        }
        Command::Backtest { store, targets, out } => {
            let st = ScenarioStore::open(&store)?;
            let (from, to) = targets.unwrap_or((None, None));
            let report = pipeline::run_backtest(&st.history()?, &dated_targets(&st, from, to), &cfg.backtest)?;
            match out.extension().and_then(|e| e.to_str()) {
                Some("json") => export::write_json(&out, &report)?,
                Some("csv") => {
                    export::change_csv(&report.change, File::create(&out)?)?;
                    export::rate_wape_csv(&report.rate_wape, File::create(out.with_extension("rates.csv"))?)?;
                    export::targets_csv(&report, File::create(out.with_extension("targets.csv"))?)?;
                }
                _ => return Err("--out must end in .json or .csv".into()),
            }
            if let Some(all) = report.change.last() {
                eprintln!("{} targets priced, mean revenue change {:?}%", all.count, all.mean);
            }
        }
        Command::Properties { store } => {
            let st = ScenarioStore::open(&store)?;
            let m = st.manifest();
            emit_json(
                &serde_json::json!({
                    "name": m.property,
                    "horizon": m.horizon,
                    "rates": m.ladder.rates(),
                    "dates": m.dates.len(),
                    "first_date": m.dates.first(),
                    "last_date": m.dates.last(),
                }),
                None,
            )?;
        }
        Command::Scenario { store, date } => {
            emit_json(&ScenarioStore::open(&store)?.get(date)?, None)?;
        }
        Command::Fit { store, dates, g_low, g_high, transform, window, out } => {
            let st = ScenarioStore::open(&store)?;
            let transform = match transform {
                TransformArg::None => Transform::None,
                TransformArg::Anscombe => Transform::Anscombe,
            };
            let req = FitRequest { dates, g_low, g_high, transform, window };
            let fit = service::run_fit(&st.history()?, cfg.backtest.forecast_window(), &req)?;
            eprintln!("objective {:.6}, {} excluded rates", fit.diagnostics.objective, fit.excluded.len());
            export::write_json(&out, &fit)?;
        }
        Command::Optimize { dp: args, out } => {
            let capacity = dp_capacity(&args, &cfg)?;
            let (_, rates) = load_fit(&args)?;
            let sol = dp::solve_dp(&rates, capacity);
            eprintln!("expected revenue {:.2}", sol.expected_revenue());
            match out {
                Some(p) => export::policy_csv(&sol.policy, File::create(p)?)?,
                None => export::policy_csv(&sol.policy, io::stdout().lock())?,
            }
        }
        Command::Whatif { dp: args, overrides } => {
            let capacity = dp_capacity(&args, &cfg)?;
            let (_, rates) = load_fit(&args)?;
            let overrides: BTreeMap<u32, Money> = overrides.into_iter().map(|(d, r)| (d, Money::from_major_f64(r))).collect();
            emit_json(&dp::evaluate_overrides(&rates, capacity, &overrides)?, None)?;
        }
        Command::Serve { store, bind } => {
            let st = ScenarioStore::open(&store)?;
            let property = match cfg.property.clone() {
                Some(p) => p,
                None => PropertyConfig {
                    name: st.manifest().property.clone(),
                    capacity: 100,
                    horizon: st.manifest().horizon,
                    ladder: Some(st.manifest().ladder.spec()),
                    reference: None,
                },
            };
            let state = Arc::new(AppState::new(property, st.history()?, cfg.backtest.clone()));
            let bind = bind.unwrap_or_else(|| cfg.service.bind.clone());
            tokio::runtime::Builder::new_multi_thread().enable_all().build()?.block_on(service::serve(state, &bind))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
