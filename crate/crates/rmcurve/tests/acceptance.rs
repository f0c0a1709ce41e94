//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;
#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::BTreeSet;
use std::time::Instant;

use chrono::Datelike;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rmcurve::export;
use rmcurve::store::ScenarioStore;
use rmcurve_core::domain::{cumulate_choice_sets, BookingHorizon, DemandScenario, Money, RateLadder};
use rmcurve_core::dp::{solve_dp, ArrivalRates};
use rmcurve_core::lp::{self, LpStatus, Tolerances};
use rmcurve_core::metrics::{self, MetricsError};
use rmcurve_core::pipeline::{self, BacktestConfig};
use rmcurve_core::sim::{self, HistorySpec, SensitivityConfig, SimConfig, StudyReport};
use rmcurve_core::spline::{self, Transform};

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn lp_core() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2021);
    let (mut worst, mut counts) = (0.0f64, [0usize; 3]);
    for case in 0..200 {
        let lp = support::random_lp(&mut rng);
        let (problem, _) = support::to_problem(&lp);
        let got = lp::solve(&problem, &Tolerances::default()).map_err(|e| format!("case {case}: solver error {e}"))?;
        match oracles::lp::solve(&lp) {
            oracles::lp::Outcome::Optimal(v) => {
                counts[0] += 1;
                if got.status != LpStatus::Optimal {
                    return Err(format!("case {case}: expected optimal, got {:?}", got.status));
                }
                worst = worst.max((got.objective - v).abs());
            }
            oracles::lp::Outcome::Infeasible if got.status != LpStatus::Infeasible => {
                return Err(format!("case {case}: expected infeasible, got {:?}", got.status));
            }
            oracles::lp::Outcome::Unbounded if got.status != LpStatus::Unbounded => {
                return Err(format!("case {case}: expected unbounded, got {:?}", got.status));
            }
            oracles::lp::Outcome::Infeasible => counts[1] += 1,
            oracles::lp::Outcome::Unbounded => counts[2] += 1,
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(
        worst <= 1e-6 && secs < 10.0,
        format!(
            "200 LPs ({} optimal, {} infeasible, {} unbounded), max objective gap {worst:.1e}, {secs:.2} s",
            counts[0], counts[1], counts[2]
        ),
    )
}

fn single_rate(values: &[u32]) -> DemandScenario {
    let raw = DemandScenario::with_availability(
        support::day0(),
        vec![Money::from_major(100)],
        vec![values.to_vec()],
        vec![vec![true; values.len()]],
    )
    .expect("consistent shapes");
    cumulate_choice_sets(&raw).expect("raw scenario")
}

fn spline_exactness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (mut residual, mut second) = (0.0f64, 0.0f64);
    for n in [5usize, 10, 28] {
        let ys: Vec<u32> = (0..n).map(|_| rng.random_range(0..25)).collect();
        let s = [single_rate(&ys)];
        let (c, _) = spline::fit(&s, &[0.0], Transform::None, None).map_err(|e| e.to_string())?;
        let k = c.curves[0].knot_values();
        residual = k.iter().zip(&ys).map(|(k, &y)| (k - f64::from(y)).abs()).fold(residual, f64::max);
        let (c, _) = spline::fit(&s, &[1.0], Transform::None, None).map_err(|e| e.to_string())?;
        let k = c.curves[0].knot_values();
        second = k.windows(3).map(|w| (w[0] - 2.0 * w[1] + w[2]).abs()).fold(second, f64::max);
    }
    ensure(
        residual <= 1e-6 && second <= 1e-6,
        format!("n in {{5, 10, 28}}: g=0 max residual {residual:.1e}, g=1 max second difference {second:.1e}"),
    )
}

fn variable_count() -> Check {
    let n = spline::count_decision_vars(28, 1).map_err(|e| e.to_string())?;
    ensure(n == 324, format!("count_decision_vars(28, 1) = {n}"))
}

fn spline_invariants() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let (mut cont, mut neg, mut order, mut obj) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for case in 0..50 {
        let classes = rng.random_range(2..=4);
        let horizon = rng.random_range(8..=28);
        let count = rng.random_range(6..=20);
        let raw = support::random_scenarios(&mut rng, classes, horizon, count);
        let cum: Vec<_> = raw.iter().map(|s| cumulate_choice_sets(s).expect("raw")).collect();
        let g: Vec<f64> = (0..classes).map(|_| rng.random_range(0.0..1.0)).collect();
        let (curves, diag) = spline::fit(&cum, &g, Transform::None, None).map_err(|e| format!("case {case}: {e}"))?;
        // continuity_defect covers C0/C1/C2 at interior knots and both end slopes
        cont = cont.max(curves.continuity_defect());
        let knots: Vec<Vec<f64>> = curves.curves.iter().map(|c| c.knot_values()).collect();
        for (r, k) in knots.iter().enumerate() {
            neg = k.iter().fold(neg, |m, &v| m.max(-v));
            if let Some(next) = knots.get(r + 1) {
                order = k.iter().zip(next).fold(order, |m, (a, b)| m.max(b - a));
            }
        }
        obj = obj.max((diag.recomputed_objective() - diag.objective).abs());
    }
    ensure(
        cont <= 1e-6 && neg <= 1e-7 && order <= 1e-7 && obj <= 1e-6,
        format!(
            "50 fits: continuity/end-slope defect {cont:.1e}, most negative knot {:.1e}, ordering violation {:.1e}, objective gap {obj:.1e}",
            -neg, order.max(0.0)
        ),
    )
}

fn dp_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let (mut worst, mut by_policy, mut by_tree, mut shape_ok) = (0.0f64, 0, 0, true);
    for _ in 0..100 {
        let r = rng.random_range(1..=3usize);
        let t = rng.random_range(1..=6usize);
        let x = rng.random_range(1..=3u32);
        let (prices, lambda) = support::random_lambda(&mut rng, r, t);
        let sol = solve_dp(&ArrivalRates::new(prices.clone(), lambda.clone(), 1, 1).map_err(|e| e.to_string())?, x);
        let p: Vec<f64> = prices.iter().map(|m| m.as_major()).collect();
        let reference = match oracles::dp::best_policy(&p, &lambda, x) {
            Some(v) => {
                by_policy += 1;
                v
            }
            None => {
                by_tree += 1;
                oracles::dp::expectimax(&p, &lambda, 0, x)
            }
        };
        worst = worst.max((sol.expected_revenue() - reference).abs());
        for tt in 0..=t {
            for xx in 0..=x {
                worst = worst.max((sol.values.value(tt, xx) - oracles::dp::expectimax(&p, &lambda, tt, xx)).abs());
                if xx >= 1 {
                    shape_ok &= sol.values.value(tt, xx) >= sol.values.value(tt, xx - 1) - 1e-12;
                }
                if xx >= 1 && xx < x {
                    let d1 = sol.values.value(tt, xx) - sol.values.value(tt, xx - 1);
                    let d2 = sol.values.value(tt, xx + 1) - sol.values.value(tt, xx);
                    shape_ok &= d2 <= d1 + 1e-12;
                }
            }
        }
    }
    ensure(
        worst <= 1e-9 && shape_ok,
        format!(
            "100 tables ({by_policy} by enumerating every policy, {by_tree} by full outcome-tree search), max |dV| {worst:.1e}, monotone and concave: {shape_ok}"
        ),
    )
}

fn simulation_revenue(studies: &[StudyReport], secs: f64) -> Check {
    let base = &studies[0];
    let true_rev = base.true_revenue;
    let true_ok = (true_rev / 17_327.0 - 1.0).abs() <= 0.05;
    let mut parts = vec![format!(
        "true-curve DP {true_rev:.0} ({:+.1}% vs 17327; literal clamped sine {:.0})",
        100.0 * (true_rev / 17_327.0 - 1.0),
        base.alternate_form_revenue
    )];
    let mut ok = true_ok;
    for (arm, target) in [16_819.0, 17_020.0].into_iter().enumerate() {
        let revs: Vec<f64> = studies.iter().map(|s| s.arms[arm].expected_revenue).collect();
        let m = median(revs.clone());
        let (lo, hi) = revs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        ok &= (m / target - 1.0).abs() <= 0.10;
        parts.push(format!(
            "g={:?}: 10-seed median {m:.0} ({:+.1}% vs {target:.0}, range {lo:.0}..{hi:.0})",
            base.arms[arm].smoothing,
            100.0 * (m / target - 1.0)
        ));
    }
    ok &= secs < 120.0;
    parts.push(format!("{secs:.1} s"));
    ensure(ok, parts.join("; "))
}

fn out_of_sample(studies: &[StudyReport]) -> Check {
    let base = &studies[0];
    let mut ok = true;
    let mut parts = Vec::new();
    for arm in &base.arms {
        let rel = arm.pooled_fit_mean / arm.pooled_true_mean - 1.0;
        ok &= rel.abs() <= 0.20;
        let across: Vec<f64> = studies
            .iter()
            .flat_map(|s| s.arms.iter().filter(|a| a.smoothing == arm.smoothing))
            .map(|a| a.pooled_fit_mean / a.pooled_true_mean - 1.0)
            .collect();
        parts.push(format!(
            "g={:?}: fitted {:.3} vs true {:.3} ({:+.1}%; other seeds {:+.0}%..{:+.0}%)",
            arm.smoothing,
            arm.pooled_fit_mean,
            arm.pooled_true_mean,
            100.0 * rel,
            100.0 * across.iter().cloned().fold(f64::INFINITY, f64::min),
            100.0 * across.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        ));
    }
    ensure(ok, format!("100 fresh scenarios, default seed; {}", parts.join("; ")))
}

fn sensitivity() -> Check {
    let start = Instant::now();
    let report = sim::run_sensitivity(&SensitivityConfig::default(), |_, _| {}).map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut parts = Vec::new();
    for arm in &report.arms {
        let steady = arm.mean_is_steady();
        ok &= arm.runs == 410 && steady == Some(true);
        parts.push(format!(
            "g={:?}: {} runs, between-count sd {:.0} vs within-count sd {:.0}",
            arm.smoothing,
            arm.runs,
            arm.between_count_sd.unwrap_or(f64::NAN),
            arm.within_count_sd.unwrap_or(f64::NAN)
        ));
    }
    parts.push(format!("{:.1} s", start.elapsed().as_secs_f64()));
    ensure(ok, parts.join("; "))
}

fn backtest() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    // One class is almost never opened, so some targets must drop it.
    let spec = HistorySpec { open_weights: vec![0.2475, 0.2475, 0.2475, 0.2475, 0.01], ..HistorySpec::default() };
    let ladder = RateLadder::new(spec.prices[0], spec.prices[4], Money(spec.prices[1].0 - spec.prices[0].0)).map_err(|e| e.to_string())?;
    let mut store = ScenarioStore::create(dir.path(), "synthetic", ladder, BookingHorizon::new(spec.horizon).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    for s in sim::synthetic_history(&spec).map_err(|e| e.to_string())? {
        store.put(&s).map_err(|e| e.to_string())?;
    }
    let store = ScenarioStore::open(dir.path()).map_err(|e| e.to_string())?;
    let history = store.history().map_err(|e| e.to_string())?;
    let config = BacktestConfig::default();
    let report = pipeline::run_backtest(&history, store.dates(), &config).map_err(|e| format!("backtest failed: {e}"))?;

    let mut change_csv = Vec::new();
    export::change_csv(&report.change, &mut change_csv).map_err(|e| e.to_string())?;
    let mut rate_csv = Vec::new();
    export::rate_wape_csv(&report.rate_wape, &mut rate_csv).map_err(|e| e.to_string())?;
    let change_rows = String::from_utf8_lossy(&change_csv).lines().count();
    let rate_lines: Vec<String> = String::from_utf8_lossy(&rate_csv).lines().map(String::from).collect();
    let shapes_ok = change_rows == 1 + 8 && rate_lines.len() == 1 + 5 && rate_lines.iter().all(|l| l.split(',').count() == 8);

    // Independent hygiene and exclusion recount.
    let (first, last) = config.forecast_window();
    let (mut hygiene_ok, mut flags_ok, mut excluded, mut kept) = (true, true, 0, 0);
    for t in &report.targets {
        for p in &t.selected {
            hygiene_ok &= p.date < t.date && p.date.weekday() == t.date.weekday();
        }
        for (r, rw) in t.rates.iter().enumerate() {
            let days: BTreeSet<u32> = t
                .selected
                .iter()
                .map(|p| history.get(p.date).expect("selected date exists"))
                .flat_map(|s| (first..=last).filter(move |&d| s.is_observed(r, d)))
                .collect();
            if t.selected.is_empty() {
                continue;
            }
            flags_ok &= rw.excluded == (days.len() < 3);
            if rw.excluded {
                excluded += 1;
            } else {
                kept += 1;
            }
        }
    }
    let overall = report.change.last().expect("overall row");
    let mean = overall.mean.unwrap_or(f64::NAN);
    ensure(
        shapes_ok && hygiene_ok && report.hygiene_checks > 0 && flags_ok && excluded > 0 && kept > 0 && mean > 0.0,
        format!(
            "{} targets ({} priced), report shapes ok: {shapes_ok}, {} hygiene checks clean: {hygiene_ok}, exclusion flags match recount: {flags_ok} ({excluded} excluded, {kept} fitted), mean revenue change {mean:+.2}%",
            report.targets.len(),
            overall.count,
            report.hygiene_checks
        ),
    )
}

fn metrics_properties() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut ok = true;
    for _ in 0..500 {
        let n = rng.random_range(1..20);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..30.0)).collect();
        let f: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..30.0)).collect();
        let c = rng.random_range(0.01..100.0);
        if a.iter().sum::<f64>() > 0.0 {
            ok &= metrics::wape(&a, &a).map(|w| w.value) == Ok(0.0);
            let base = metrics::wape(&a, &f).map_err(|e| e.to_string())?.value;
            let ca: Vec<f64> = a.iter().map(|x| c * x).collect();
            let cf: Vec<f64> = f.iter().map(|x| c * x).collect();
            ok &= (metrics::wape(&ca, &cf).map_err(|e| e.to_string())?.value - base).abs() <= 1e-9 * (1.0 + base);
        }
        ok &= metrics::wape(&vec![0.0; n], &f).map(|w| w.value) == Err(MetricsError::ZeroActuals);
    }
    let mut raw = Vec::new();
    let mut root = Vec::new();
    for lambda in [1.0, 4.0, 16.0] {
        let d = Poisson::new(lambda).map_err(|e| e.to_string())?;
        let ys: Vec<f64> = (0..40_000).map(|_| d.sample(&mut rng)).collect();
        let var = |xs: &[f64]| {
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
        };
        raw.push(var(&ys));
        root.push(var(&ys.iter().map(|&y| Transform::Anscombe.apply(y)).collect::<Vec<_>>()));
    }
    let raw_ratio = raw[2] / raw[0];
    let root_ratio = root.iter().cloned().fold(0.0, f64::max) / root.iter().cloned().fold(f64::INFINITY, f64::min);
    ok &= (raw_ratio - 16.0).abs() < 1.6 && root_ratio < 2.0;
    ensure(
        ok,
        format!(
            "WAPE identity, scale invariance and zero-denominator error on 500 draws; Poisson variance ratio 16:1 raw {raw_ratio:.1}, after square root {root_ratio:.2} (variances {:.3}, {:.3}, {:.3})",
            root[0], root[1], root[2]
        ),
    )
}

fn main() {
    let mut failed = 0;
    let mut report = |name: &str, result: Check| {
        match result {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    };

    report("lp core", lp_core());
    report("spline exactness", spline_exactness());
    report("variable count", variable_count());
    report("spline invariants", spline_invariants());
    report("dp oracle", dp_oracle());

    let start = Instant::now();
    let studies: Result<Vec<StudyReport>, String> =
        (0..10).map(|i| sim::run_simulation_study(&SimConfig { seed: 2021 + i, ..SimConfig::default() }).map_err(|e| e.to_string())).collect();
    let secs = start.elapsed().as_secs_f64();
    match studies {
        Ok(studies) => {
            report("simulation revenue", simulation_revenue(&studies, secs));
            report("out-of-sample wape", out_of_sample(&studies));
        }
        Err(e) => {
            report("simulation revenue", Err(e.clone()));
            report("out-of-sample wape", Err(e));
        }
    }
    report("sensitivity sweep", sensitivity());
    report("synthetic backtest", backtest());
    report("metrics", metrics_properties());

    println!("{} criteria failed", failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
