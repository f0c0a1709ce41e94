//! Random instance generators shared by the integration tests.

#![allow(dead_code)]

use chrono::NaiveDate;
use rand::{Rng, RngCore};
use rmcurve_core::domain::{DemandScenario, Money};
use rmcurve_core::lp::{LpProblem, Relation, Sign, VarId};

use crate::oracles::lp::{Lp, Rel};

/// Integer data, up to 6 variables and 8 rows. About half the instances are
/// boxed (nonnegative variables, each with an upper-bound row counted among
/// the 8); the rest may have up to two free variables.
pub fn random_lp(rng: &mut impl RngCore) -> Lp {
    let n = rng.random_range(1..=6usize);
    let boxed = rng.random_bool(0.5);
    let mut free = vec![false; n];
    if !boxed {
        for _ in 0..rng.random_range(0..=2) {
            free[rng.random_range(0..n)] = true;
        }
    }
    let coef = |rng: &mut dyn RngCore| if rng.random_bool(0.25) { 0.0 } else { f64::from(rng.random_range(-5i32..=5)) };
    let c: Vec<f64> = (0..n).map(|_| coef(rng)).collect();
    let mut rows = Vec::new();
    if boxed {
        for i in 0..n {
            let mut a = vec![0.0; n];
            a[i] = 1.0;
            rows.push((a, Rel::Le, f64::from(rng.random_range(1..=10))));
        }
    }
    let extra = rng.random_range(0..=8 - rows.len());
    for _ in 0..extra {
        let a: Vec<f64> = (0..n).map(|_| coef(rng)).collect();
        let rel = match rng.random_range(0..5) {
            0 | 1 => Rel::Le,
            2 | 3 => Rel::Ge,
            _ => Rel::Eq,
        };
        rows.push((a, rel, f64::from(rng.random_range(-10i32..=10))));
    }
    Lp { c, rows, free }
}

pub fn to_problem(lp: &Lp) -> (LpProblem, Vec<VarId>) {
    let mut p = LpProblem::new("random");
    let vars: Vec<VarId> = lp
        .free
        .iter()
        .enumerate()
        .map(|(i, &f)| p.add_var(format!("x{i}"), if f { Sign::Free } else { Sign::NonNegative }))
        .collect();
    for (v, &c) in vars.iter().zip(&lp.c) {
        if c != 0.0 {
            p.add_objective(*v, c);
        }
    }
    for (k, (a, rel, b)) in lp.rows.iter().enumerate() {
        let terms = vars.iter().zip(a).filter(|(_, &x)| x != 0.0).map(|(v, &x)| (*v, x)).collect();
        let rel = match rel {
            Rel::Le => Relation::Le,
            Rel::Ge => Relation::Ge,
            Rel::Eq => Relation::Eq,
        };
        p.add_constraint(format!("r{k}"), terms, rel, *b);
    }
    (p, vars)
}

/// Random per-interval probabilities for `classes` prices, descending.
pub fn random_lambda(rng: &mut impl RngCore, classes: usize, intervals: usize) -> (Vec<Money>, Vec<Vec<f64>>) {
    let mut prices: Vec<i64> = Vec::new();
    while prices.len() < classes {
        let p = rng.random_range(50..=400);
        if !prices.contains(&p) {
            prices.push(p);
        }
    }
    prices.sort_unstable_by(|a, b| b.cmp(a));
    let lambda = (0..classes).map(|_| (0..intervals).map(|_| rng.random_range(0.0..0.95)).collect()).collect();
    (prices.into_iter().map(Money::from_major).collect(), lambda)
}

pub fn day0() -> NaiveDate {
    NaiveDate::from_ymd_opt(2020, 1, 6).expect("valid date")
}

/// Raw scenarios over `horizon` days for `classes` ascending prices, with a
/// random availability mask and Poisson-like counts.
pub fn random_scenarios(rng: &mut impl RngCore, classes: usize, horizon: u32, count: usize) -> Vec<DemandScenario> {
    let rates: Vec<Money> = (0..classes).map(|i| Money::from_major(100 + 50 * i as i64)).collect();
    (0..count)
        .map(|i| {
            let mut counts = vec![vec![0u32; horizon as usize]; classes];
            let mut open = vec![vec![false; horizon as usize]; classes];
            for t in 0..horizon as usize {
                let r = rng.random_range(0..classes);
                open[r][t] = true;
                let mean = 0.5 + 3.0 * (t as f64 / f64::from(horizon)) * (classes - r) as f64 / classes as f64;
                counts[r][t] = (0..8).filter(|_| rng.random_bool((mean / 8.0).min(1.0))).count() as u32;
            }
            DemandScenario::with_availability(day0() + chrono::Duration::days(7 * i as i64), rates.clone(), counts, open)
                .expect("consistent shapes")
        })
        .collect()
}
