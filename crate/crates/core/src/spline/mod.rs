//! Cubic smoothing splines posed as linear programs.
//!
//! For every rate class the demand curve is a piecewise cubic over the
//! distinct observed horizon days (the knots). The program minimises, per
//! class `r`,
//!
//! ```text
//! (1 - g_r) · Σ w · |e|  +  g_r · Σ_{k≥3} |S(x_{k-2}) - 2 S(x_{k-1}) + S(x_k)|
//! ```
//!
//! where each `e` is the absolute deviation between the curve at a knot and
//! one distinct observed value there. Absolute values are linearised with
//! paired `≥` rows. The pieces are tied together by C0/C1/C2 continuity at
//! interior knots, zero slope at both ends, nonnegative knot values and, across
//! classes, `S_r(x_k) ≥ S_{r+1}(x_k)` (cheaper class, larger choice set).
//!
//! Pieces are stored in local coordinates `u = x - start` so that programs
//! over late horizon days (e.g. days 73..100) stay well conditioned.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{DemandScenario, Money};
use crate::lp::{self, LpError, LpProblem, LpStatus, Relation, Sign, Tolerances, VarId};

/// Continuity tolerance, relative to the largest knot value (floored at 1).
pub const CONTINUITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SplineError {
    #[error("at least 3 knots are required, got {0}")]
    TooFewKnots(usize),
    #[error("rate {rate} has observations on only {days} distinct days (need 3)")]
    DegenerateRate { rate: Money, days: usize },
    #[error("fitting needs choice-set (cumulated) scenarios")]
    NotCumulated,
    #[error("smoothing parameter {value} for rate {rate} is outside [0, 1]")]
    SmoothingOutOfRange { rate: Money, value: f64 },
    #[error("expected {expected} smoothing parameters, got {got}")]
    SmoothingCount { expected: usize, got: usize },
    #[error("no scenarios to fit")]
    NoScenarios,
    #[error("scenarios disagree on rate classes or horizon")]
    InconsistentScenarios,
    #[error("window {first}..={last} is outside the horizon 1..={horizon}")]
    BadWindow { first: u32, last: u32, horizon: u32 },
    #[error("x = {x} is outside the fitted range [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },
    #[error("unknown rate class {0}")]
    UnknownClass(usize),
    #[error("fitting program reported {0:?}; the zero curve is always feasible, so this is a bug")]
    Internal(LpStatus),
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    #[default]
    None,
    /// Fit on `sqrt(y)` and square on read-back.
    Anscombe,
}

impl Transform {
    pub fn apply(self, y: f64) -> f64 {
        match self {
            Transform::None => y,
            Transform::Anscombe => libm::sqrt(y),
        }
    }

    /// Inverse of [`Transform::apply`] on the nonnegative part of `v`.
    pub fn invert(self, v: f64) -> f64 {
        let v = v.max(0.0);
        match self {
            Transform::None => v,
            Transform::Anscombe => v * v,
        }
    }
}

/// Number of decision variables of the fitting program when every variable
/// is paired with a companion column (the usual count for LP codes that split
/// unrestricted and absolute-value variables): `(4(n-1) + n + (n-2)) · 2 · R`.
pub fn count_decision_vars(knots: usize, classes: usize) -> Result<usize, SplineError> {
    if knots < 3 {
        return Err(SplineError::TooFewKnots(knots));
    }
    Ok((4 * (knots - 1) + knots + (knots - 2)) * 2 * classes)
}

/// One cubic `a + b·u + c·u² + d·u³` with `u = x - start`, valid on `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicPiece {
    pub start: f64,
    pub end: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl CubicPiece {
    pub fn value(&self, x: f64) -> f64 {
        let u = x - self.start;
        self.a + u * (self.b + u * (self.c + u * self.d))
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let u = x - self.start;
        self.b + u * (2.0 * self.c + 3.0 * u * self.d)
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        let u = x - self.start;
        2.0 * self.c + 6.0 * self.d * u
    }

    /// Coefficients in plain powers of `x`: `[k0, k1, k2, k3]` with
    /// value `k0 + k1·x + k2·x² + k3·x³`.
    pub fn global_coefficients(&self) -> [f64; 4] {
        let s = self.start;
        let (a, b, c, d) = (self.a, self.b, self.c, self.d);
        [
            a - b * s + c * s * s - d * s * s * s,
            b - 2.0 * c * s + 3.0 * d * s * s,
            c - 3.0 * d * s,
            d,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCurve {
    pub rate: Money,
    pub smoothing: f64,
    pub pieces: Vec<CubicPiece>,
}

impl RateCurve {
    fn piece_at(&self, knots: &[f64], x: f64) -> &CubicPiece {
        // knots.len() == pieces.len() + 1
        let i = knots.partition_point(|&k| k <= x).saturating_sub(1);
        &self.pieces[i.min(self.pieces.len() - 1)]
    }

    /// Knot values on the fitting scale (before any inverse transform).
    pub fn knot_values(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.pieces.iter().map(|p| p.a).collect();
        if let Some(last) = self.pieces.last() {
            out.push(last.value(last.end));
        }
        out
    }
}

/// Fitted demand curves, one per rate class in ascending price order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCurveSet {
    pub knots: Vec<f64>,
    pub curves: Vec<RateCurve>,
    pub transform: Transform,
}

impl RateCurveSet {
    pub fn classes(&self) -> usize {
        self.curves.len()
    }

    pub fn rates(&self) -> Vec<Money> {
        self.curves.iter().map(|c| c.rate).collect()
    }

    pub fn first_knot(&self) -> f64 {
        self.knots[0]
    }

    pub fn last_knot(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    /// Curve value on the fitting scale, without clamping or inverse transform.
    pub fn evaluate_raw(&self, class: usize, x: f64) -> Result<f64, SplineError> {
        let curve = self.curves.get(class).ok_or(SplineError::UnknownClass(class))?;
        let (lo, hi) = (self.first_knot(), self.last_knot());
        if !(x >= lo - 1e-9 && x <= hi + 1e-9) {
            return Err(SplineError::OutOfRange { x, lo, hi });
        }
        Ok(curve.piece_at(&self.knots, x).value(x))
    }

    /// Largest C0/C1/C2 mismatch at interior knots and the largest end slope,
    /// divided by `max(1, largest |knot value|)`.
    pub fn continuity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for curve in &self.curves {
            let scale = curve.knot_values().iter().fold(1.0_f64, |m, v| m.max(v.abs()));
            for w in curve.pieces.windows(2) {
                let x = w[1].start;
                let defects = [
                    (w[0].value(x) - w[1].value(x)).abs(),
                    (w[0].derivative(x) - w[1].derivative(x)).abs(),
                    (w[0].second_derivative(x) - w[1].second_derivative(x)).abs(),
                ];
                worst = defects.iter().fold(worst, |m, &d| m.max(d / scale));
            }
            let first = curve.pieces[0];
            let last = curve.pieces[curve.pieces.len() - 1];
            worst = worst.max(first.derivative(first.start).abs() / scale);
            worst = worst.max(last.derivative(last.end).abs() / scale);
        }
        worst
    }
}

/// Demand rate of `class` at horizon position `x`, on the original count
/// scale and never negative. Extrapolation outside the knots is refused.
pub fn evaluate_curve(curves: &RateCurveSet, class: usize, x: f64) -> Result<f64, SplineError> {
    Ok(curves.transform.invert(curves.evaluate_raw(class, x)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateDiagnostics {
    pub rate: Money,
    pub smoothing: f64,
    /// Σ w·|S(x_k) - y| recomputed from the returned curve, on the fitting scale.
    pub weighted_error: f64,
    /// Σ |second difference of knot values|.
    pub curvature: f64,
    pub observations: usize,
    pub observed_days: usize,
    /// Largest amount by which the next dearer class exceeds this one between
    /// knots (ordering is only enforced at knots). Zero for the dearest class.
    pub ordering_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub objective: f64,
    pub per_rate: Vec<RateDiagnostics>,
    /// Columns declared in the program.
    pub variables: usize,
    /// Declared columns counted with their companion columns.
    pub paired_variables: usize,
    pub constraints: usize,
    pub iterations: usize,
}

impl FitDiagnostics {
    /// Σ_r (1-g_r)·error_r + g_r·curvature_r.
    pub fn recomputed_objective(&self) -> f64 {
        self.per_rate
            .iter()
            .map(|d| (1.0 - d.smoothing) * d.weighted_error + d.smoothing * d.curvature)
            .sum()
    }
}

/// Observations per class, keyed by horizon day, on the raw count scale.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FitData {
    pub rates: Vec<Money>,
    pub observations: Vec<BTreeMap<u32, Vec<f64>>>,
}

impl FitData {
    /// Collects the observed cells of cumulated scenarios inside the
    /// inclusive day window (the whole horizon when `None`).
    pub fn from_scenarios(scenarios: &[DemandScenario], window: Option<(u32, u32)>) -> Result<Self, SplineError> {
        let first = scenarios.first().ok_or(SplineError::NoScenarios)?;
        let horizon = first.horizon();
        if scenarios.iter().any(|s| s.rates != first.rates || s.horizon() != horizon) {
            return Err(SplineError::InconsistentScenarios);
        }
        if scenarios.iter().any(|s| !s.is_cumulated()) {
            return Err(SplineError::NotCumulated);
        }
        let (lo, hi) = window.unwrap_or((1, horizon));
        if lo == 0 || hi > horizon || lo > hi {
            return Err(SplineError::BadWindow { first: lo, last: hi, horizon });
        }
        let mut observations = vec![BTreeMap::new(); first.classes()];
        for s in scenarios {
            for (r, obs) in observations.iter_mut().enumerate() {
                for day in lo..=hi {
                    if s.is_observed(r, day) {
                        obs.entry(day).or_insert_with(Vec::new).push(f64::from(s.count(r, day)));
                    }
                }
            }
        }
        Ok(FitData { rates: first.rates.clone(), observations })
    }

    pub fn observed_days(&self, class: usize) -> usize {
        self.observations[class].len()
    }

    /// Classes with fewer than three distinct observed days.
    pub fn degenerate_classes(&self) -> Vec<usize> {
        (0..self.rates.len()).filter(|&r| self.observed_days(r) < 3).collect()
    }

    /// Keeps only the listed classes (ascending order is preserved).
    pub fn retain_classes(&self, keep: &[usize]) -> FitData {
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        FitData {
            rates: keep.iter().map(|&r| self.rates[r]).collect(),
            observations: keep.iter().map(|&r| self.observations[r].clone()).collect(),
        }
    }
}

/// Column handles of one class inside the fitting program.
#[derive(Debug, Clone)]
struct ClassVars {
    /// `[a, b, c, d]` per piece.
    coefs: Vec<[VarId; 4]>,
    /// `(knot index, value on fitting scale, weight)` per distinct observation.
    errors: Vec<(usize, f64, f64)>,
}

/// A built fitting program, ready for [`fit_curves`].
#[derive(Debug, Clone)]
pub struct FitProgram {
    pub problem: LpProblem,
    pub knots: Vec<f64>,
    pub rates: Vec<Money>,
    pub smoothing: Vec<f64>,
    pub transform: Transform,
    observations: Vec<usize>,
    observed_days: Vec<usize>,
    classes: Vec<ClassVars>,
}

fn knot_expr(coefs: &[[VarId; 4]], knots: &[f64], k: usize) -> Vec<(VarId, f64)> {
    if k < coefs.len() {
        vec![(coefs[k][0], 1.0)]
    } else {
        let i = coefs.len() - 1;
        let h = knots[i + 1] - knots[i];
        vec![(coefs[i][0], 1.0), (coefs[i][1], h), (coefs[i][2], h * h), (coefs[i][3], h * h * h)]
    }
}

fn combine(parts: &[(&[(VarId, f64)], f64)]) -> Vec<(VarId, f64)> {
    let mut acc: BTreeMap<VarId, f64> = BTreeMap::new();
    for (terms, scale) in parts {
        for &(v, a) in terms.iter() {
            *acc.entry(v).or_insert(0.0) += a * scale;
        }
    }
    acc.into_iter().filter(|&(_, a)| a != 0.0).collect()
}

/// Builds the fitting program from cumulated scenarios.
pub fn build_fit_program(
    scenarios: &[DemandScenario],
    smoothing: &[f64],
    transform: Transform,
    window: Option<(u32, u32)>,
) -> Result<FitProgram, SplineError> {
    let data = FitData::from_scenarios(scenarios, window)?;
    build_program(&data, smoothing, transform)
}

/// Builds the fitting program from already-collected observations.
pub fn build_program(data: &FitData, smoothing: &[f64], transform: Transform) -> Result<FitProgram, SplineError> {
    let classes = data.rates.len();
    if smoothing.len() != classes {
        return Err(SplineError::SmoothingCount { expected: classes, got: smoothing.len() });
    }
    for (&rate, &g) in data.rates.iter().zip(smoothing) {
        if !(0.0..=1.0).contains(&g) {
            return Err(SplineError::SmoothingOutOfRange { rate, value: g });
        }
    }
    for r in 0..classes {
        let days = data.observed_days(r);
        if days < 3 {
            return Err(SplineError::DegenerateRate { rate: data.rates[r], days });
        }
    }
    let days: alloc::collections::BTreeSet<u32> = data.observations.iter().flat_map(|o| o.keys().copied()).collect();
    let knots: Vec<f64> = days.iter().map(|&d| f64::from(d)).collect();
    let n = knots.len();
    if n < 3 {
        return Err(SplineError::TooFewKnots(n));
    }
    let knot_index: BTreeMap<u32, usize> = days.iter().enumerate().map(|(i, &d)| (d, i)).collect();

    let mut p = LpProblem::new("cubic-smoothing-spline");
    let mut class_vars = Vec::with_capacity(classes);
    let mut observation_counts = Vec::with_capacity(classes);
    for (r, &g) in smoothing.iter().enumerate() {
        let coefs: Vec<[VarId; 4]> = (0..n - 1)
            .map(|i| {
                ["a", "b", "c", "d"].map(|c| p.add_var(format!("{c}_r{r}_{i}"), Sign::Free))
            })
            .collect();

        // data fit
        let obs = &data.observations[r];
        let observed_knots = obs.len() as f64;
        let mut errors = Vec::new();
        for (&day, ys) in obs {
            let k = knot_index[&day];
            let mut values: Vec<f64> = ys.iter().map(|&y| transform.apply(y)).collect();
            values.sort_by(f64::total_cmp);
            let total = values.len() as f64;
            let s = knot_expr(&coefs, &knots, k);
            let mut i = 0;
            while i < values.len() {
                let y = values[i];
                let mult = values[i..].iter().take_while(|&&v| v == y).count();
                i += mult;
                let w = mult as f64 / (total * observed_knots);
                let e = p.add_var(format!("e_r{r}_k{k}_{}", errors.len()), Sign::NonNegative);
                if g < 1.0 {
                    p.add_objective(e, (1.0 - g) * w);
                }
                let mut above = vec![(e, 1.0)];
                above.extend(s.iter().map(|&(v, a)| (v, -a)));
                p.add_constraint(format!("err_hi_r{r}_{}", errors.len()), above, Relation::Ge, -y);
                let mut below = vec![(e, 1.0)];
                below.extend(s.iter().copied());
                p.add_constraint(format!("err_lo_r{r}_{}", errors.len()), below, Relation::Ge, y);
                errors.push((k, y, w));
            }
        }
        observation_counts.push(obs.values().map(Vec::len).sum());

        // curvature
        for k in 2..n {
            let d2 = p.add_var(format!("d2_r{r}_{k}"), Sign::NonNegative);
            if g > 0.0 {
                p.add_objective(d2, g);
            }
            let s0 = knot_expr(&coefs, &knots, k - 2);
            let s1 = knot_expr(&coefs, &knots, k - 1);
            let s2 = knot_expr(&coefs, &knots, k);
            let diff = combine(&[(&s0, 1.0), (&s1, -2.0), (&s2, 1.0)]);
            let mut hi = vec![(d2, 1.0)];
            hi.extend(diff.iter().map(|&(v, a)| (v, -a)));
            p.add_constraint(format!("curv_hi_r{r}_{k}"), hi, Relation::Ge, 0.0);
            let mut lo = vec![(d2, 1.0)];
            lo.extend(diff.iter().copied());
            p.add_constraint(format!("curv_lo_r{r}_{k}"), lo, Relation::Ge, 0.0);
        }

        // smoothness at interior knots
        for i in 0..n - 2 {
            let h = knots[i + 1] - knots[i];
            let [a0, b0, c0, d0] = coefs[i];
            let [a1, b1, c1, _] = coefs[i + 1];
            p.add_constraint(
                format!("c0_r{r}_{i}"),
                vec![(a0, 1.0), (b0, h), (c0, h * h), (d0, h * h * h), (a1, -1.0)],
                Relation::Eq,
                0.0,
            );
            p.add_constraint(
                format!("c1_r{r}_{i}"),
                vec![(b0, 1.0), (c0, 2.0 * h), (d0, 3.0 * h * h), (b1, -1.0)],
                Relation::Eq,
                0.0,
            );
            p.add_constraint(
                format!("c2_r{r}_{i}"),
                vec![(c0, 2.0), (d0, 6.0 * h), (c1, -2.0)],
                Relation::Eq,
                0.0,
            );
        }
        // zero slope at both ends
        p.add_constraint(format!("slope_first_r{r}"), vec![(coefs[0][1], 1.0)], Relation::Eq, 0.0);
        let last = n - 2;
        let h = knots[n - 1] - knots[n - 2];
        let [_, bl, cl, dl] = coefs[last];
        p.add_constraint(
            format!("slope_last_r{r}"),
            vec![(bl, 1.0), (cl, 2.0 * h), (dl, 3.0 * h * h)],
            Relation::Eq,
            0.0,
        );
        // nonnegative demand at knots
        for k in 0..n {
            p.add_constraint(format!("nonneg_r{r}_{k}"), knot_expr(&coefs, &knots, k), Relation::Ge, 0.0);
        }
        class_vars.push(ClassVars { coefs, errors });
    }

    // cheaper class dominates dearer class at every knot
    for r in 0..classes.saturating_sub(1) {
        for k in 0..n {
            let lo = knot_expr(&class_vars[r].coefs, &knots, k);
            let hi = knot_expr(&class_vars[r + 1].coefs, &knots, k);
            p.add_constraint(format!("order_r{r}_{k}"), combine(&[(&lo, 1.0), (&hi, -1.0)]), Relation::Ge, 0.0);
        }
    }

    Ok(FitProgram {
        problem: p,
        knots,
        rates: data.rates.clone(),
        smoothing: smoothing.to_vec(),
        transform,
        observations: observation_counts,
        observed_days: (0..classes).map(|r| data.observed_days(r)).collect(),
        classes: class_vars,
    })
}

/// Solves a fitting program and reads back the curves.
pub fn fit_curves(program: &FitProgram, tol: &Tolerances) -> Result<(RateCurveSet, FitDiagnostics), SplineError> {
    let sol = lp::solve(&program.problem, tol)?;
    if sol.status != LpStatus::Optimal {
        return Err(SplineError::Internal(sol.status));
    }
    let knots = &program.knots;
    let curves: Vec<RateCurve> = program
        .classes
        .iter()
        .enumerate()
        .map(|(r, cv)| RateCurve {
            rate: program.rates[r],
            smoothing: program.smoothing[r],
            pieces: cv
                .coefs
                .iter()
                .enumerate()
                .map(|(i, [a, b, c, d])| CubicPiece {
                    start: knots[i],
                    end: knots[i + 1],
                    a: sol.value(*a),
                    b: sol.value(*b),
                    c: sol.value(*c),
                    d: sol.value(*d),
                })
                .collect(),
        })
        .collect();
    let set = RateCurveSet { knots: knots.clone(), curves, transform: program.transform };

    let per_rate = (0..program.rates.len())
        .map(|r| {
            let values = set.curves[r].knot_values();
            let weighted_error = program.classes[r].errors.iter().map(|&(k, y, w)| w * (values[k] - y).abs()).sum();
            let curvature = values.windows(3).map(|w| (w[0] - 2.0 * w[1] + w[2]).abs()).sum();
            let ordering_gap = if r + 1 < program.rates.len() { between_knot_gap(&set, r) } else { 0.0 };
            RateDiagnostics {
                rate: program.rates[r],
                smoothing: program.smoothing[r],
                weighted_error,
                curvature,
                observations: program.observations[r],
                observed_days: program.observed_days[r],
                ordering_gap,
            }
        })
        .collect();
    let variables = program.problem.num_vars();
    let diagnostics = FitDiagnostics {
        objective: sol.objective,
        per_rate,
        variables,
        paired_variables: 2 * variables,
        constraints: program.problem.num_constraints(),
        iterations: sol.iterations,
    };
    Ok((set, diagnostics))
}

/// Builds and solves in one step with default tolerances.
pub fn fit(
    scenarios: &[DemandScenario],
    smoothing: &[f64],
    transform: Transform,
    window: Option<(u32, u32)>,
) -> Result<(RateCurveSet, FitDiagnostics), SplineError> {
    let program = build_fit_program(scenarios, smoothing, transform, window)?;
    fit_curves(&program, &Tolerances::default())
}

const GAP_SAMPLES: usize = 8;

fn between_knot_gap(set: &RateCurveSet, r: usize) -> f64 {
    let lo = &set.curves[r];
    let hi = &set.curves[r + 1];
    let mut gap: f64 = 0.0;
    for (pl, ph) in lo.pieces.iter().zip(&hi.pieces) {
        for s in 1..GAP_SAMPLES {
            let x = pl.start + (pl.end - pl.start) * s as f64 / GAP_SAMPLES as f64;
            gap = gap.max(ph.value(x) - pl.value(x));
        }
    }
    gap
}
