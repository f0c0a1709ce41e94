//! Bounded-variable simplex on a dense condensed tableau.
//!
//! Every row `i` gets a slack `s_i = a_i·x` whose bounds encode the relation,
//! so the whole problem becomes `[A | -I] z = 0` with simple bounds on `z`.
//! The tableau stores each basic variable as a linear combination of the
//! nonbasic ones (`m × n`, slack columns are never materialised).
//!
//! Strategy:
//! * If the all-slack start is dual feasible (true for every fitting program,
//!   whose costs are nonnegative on bounded columns and zero on free ones),
//!   run the dual simplex straight to optimality.
//! * Otherwise run the dual simplex with zero costs to reach a primal feasible
//!   basis, then the primal simplex with the real costs.
//!
//! Pricing is Dantzig-style with a Harris ratio test. After a run of
//! degenerate pivots both methods fall back to Bland's smallest-index rule,
//! which rules out cycling.

use alloc::vec;
use alloc::vec::Vec;

use super::{LpError, LpProblem, LpSolution, LpStatus, Relation, Sign, Tolerances};

const PIVOT_TOL: f64 = 1e-7;
const DUAL_TOL: f64 = 1e-9;
const PRIMAL_TOL: f64 = 1e-9;
/// Slack allowed by the first pass of the Harris ratio tests.
const HARRIS_TOL: f64 = 1e-7;
/// Rebuilds from the current basis allowed when a solve ends inaccurate.
const MAX_REBUILDS: usize = 3;
const STALL_LIMIT: usize = 64;
const REFRESH_EVERY: usize = 100;

/// Solves `problem`. Infeasible and unbounded problems are reported through
/// [`LpSolution::status`]; errors are reserved for malformed input and
/// numerical failure.
pub fn solve(problem: &LpProblem, tol: &Tolerances) -> Result<LpSolution, LpError> {
    problem.validate()?;
    let mut t = Tableau::new(problem);
    let mut status = t.run()?;
    t.refresh_values();
    let mut rebuilds = 0;
    loop {
        let values: Vec<f64> = t.value[..t.n].to_vec();
        let violation = problem.max_violation(&values);
        if status != Outcome::Optimal || violation <= tol.feasibility {
            let status = match status {
                Outcome::Optimal => LpStatus::Optimal,
                Outcome::Infeasible => LpStatus::Infeasible,
                Outcome::Unbounded => LpStatus::Unbounded,
            };
            return Ok(LpSolution { status, objective: problem.objective_value(&values), values, iterations: t.iterations });
        }
        // the updated tableau has drifted; refactor the basis and carry on
        if rebuilds == MAX_REBUILDS || !t.rebuild(problem) {
            return Err(LpError::NumericalTrouble(violation));
        }
        rebuilds += 1;
        status = t.run()?;
        t.refresh_values();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Optimal,
    Infeasible,
    Unbounded,
}

struct Tableau {
    m: usize,
    n: usize,
    /// Row-major `m × n`: basic var of row `i` = Σ_j alpha[i][j] · nonbasic var of column `j`.
    alpha: Vec<f64>,
    /// Reduced cost of each nonbasic column.
    d: Vec<f64>,
    basis: Vec<usize>,
    nonbasic: Vec<usize>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    value: Vec<f64>,
    cost: Vec<f64>,
    iterations: usize,
    limit: usize,
    bland: bool,
}

impl Tableau {
    fn new(p: &LpProblem) -> Self {
        let n = p.num_vars();
        let m = p.num_constraints();
        let mut alpha = vec![0.0; m * n];
        let mut lower = vec![0.0; n + m];
        let mut upper = vec![f64::INFINITY; n + m];
        let mut cost = vec![0.0; n + m];
        for (j, v) in p.variables().iter().enumerate() {
            if v.sign == Sign::Free {
                lower[j] = f64::NEG_INFINITY;
            }
        }
        for (i, c) in p.constraints().iter().enumerate() {
            for &(v, a) in &c.terms {
                alpha[i * n + v.0] += a;
            }
            let (lo, hi) = match c.relation {
                Relation::Le => (f64::NEG_INFINITY, c.rhs),
                Relation::Ge => (c.rhs, f64::INFINITY),
                Relation::Eq => (c.rhs, c.rhs),
            };
            lower[n + i] = lo;
            upper[n + i] = hi;
        }
        for &(v, c) in p.objective_terms() {
            cost[v.0] += c;
        }
        Tableau {
            m,
            n,
            alpha,
            d: cost[..n].to_vec(),
            basis: (n..n + m).collect(),
            nonbasic: (0..n).collect(),
            lower,
            upper,
            value: vec![0.0; n + m],
            cost,
            iterations: 0,
            limit: 50 * (m + n) + 10_000,
            bland: false,
        }
    }

    fn run(&mut self) -> Result<Outcome, LpError> {
        if self.is_dual_feasible() {
            return self.dual_simplex(true);
        }
        match self.dual_simplex(false)? {
            Outcome::Infeasible => Ok(Outcome::Infeasible),
            _ => {
                self.compute_reduced_costs();
                self.primal_simplex()
            }
        }
    }

    /// Recomputes the tableau `alpha = -B⁻¹N` from the original rows for the
    /// current basis, then the basic values and reduced costs. Returns false
    /// if the basis matrix is numerically singular.
    fn rebuild(&mut self, p: &LpProblem) -> bool {
        let (m, n) = (self.m, self.n);
        let mut a = vec![0.0; m * n];
        for (i, c) in p.constraints().iter().enumerate() {
            for &(v, coef) in &c.terms {
                a[i * n + v.0] += coef;
            }
        }
        // column k of [A | -I]
        let column = |k: usize, out: &mut [f64]| {
            if k < n {
                for i in 0..m {
                    out[i] = a[i * n + k];
                }
            } else {
                out.iter_mut().for_each(|x| *x = 0.0);
                out[k - n] = -1.0;
            }
        };
        // B (m x m) and RHS = N (m x n), both row-major
        let mut b = vec![0.0; m * m];
        let mut rhs = vec![0.0; m * n];
        let mut col = vec![0.0; m];
        for (j, &k) in self.basis.iter().enumerate() {
            column(k, &mut col);
            for i in 0..m {
                b[i * m + j] = col[i];
            }
        }
        for (j, &k) in self.nonbasic.iter().enumerate() {
            column(k, &mut col);
            for i in 0..m {
                rhs[i * n + j] = -col[i];
            }
        }
        // Gaussian elimination with partial pivoting on [B | RHS]
        for c in 0..m {
            let piv = (c..m).max_by(|&x, &y| b[x * m + c].abs().total_cmp(&b[y * m + c].abs())).unwrap_or(c);
            if b[piv * m + c].abs() < 1e-12 {
                return false;
            }
            if piv != c {
                for j in 0..m {
                    b.swap(c * m + j, piv * m + j);
                }
                for j in 0..n {
                    rhs.swap(c * n + j, piv * n + j);
                }
            }
            let inv = 1.0 / b[c * m + c];
            for r in (0..m).filter(|&r| r != c) {
                let f = b[r * m + c] * inv;
                if f == 0.0 {
                    continue;
                }
                for j in c..m {
                    b[r * m + j] -= f * b[c * m + j];
                }
                for j in 0..n {
                    rhs[r * n + j] -= f * rhs[c * n + j];
                }
            }
        }
        for r in 0..m {
            let inv = 1.0 / b[r * m + r];
            for x in &mut rhs[r * n..(r + 1) * n] {
                *x *= inv;
            }
        }
        self.alpha = rhs;
        self.refresh_values();
        self.compute_reduced_costs();
        true
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.alpha[i * self.n..(i + 1) * self.n]
    }

    #[inline]
    fn can_increase(&self, var: usize) -> bool {
        self.value[var] < self.upper[var]
    }

    #[inline]
    fn can_decrease(&self, var: usize) -> bool {
        self.value[var] > self.lower[var]
    }

    fn is_dual_feasible(&self) -> bool {
        self.nonbasic.iter().zip(&self.d).all(|(&k, &dj)| {
            (dj >= -DUAL_TOL || !self.can_increase(k)) && (dj <= DUAL_TOL || !self.can_decrease(k))
        })
    }

    fn compute_reduced_costs(&mut self) {
        let n = self.n;
        let mut d: Vec<f64> = self.nonbasic.iter().map(|&k| self.cost[k]).collect();
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb != 0.0 {
                for (dj, a) in d.iter_mut().zip(&self.alpha[i * n..(i + 1) * n]) {
                    *dj += cb * a;
                }
            }
        }
        self.d = d;
    }

    /// Recomputes basic values from the nonbasic ones to shed drift.
    fn refresh_values(&mut self) {
        let active: Vec<(usize, f64)> = self
            .nonbasic
            .iter()
            .enumerate()
            .filter_map(|(j, &k)| (self.value[k] != 0.0).then_some((j, self.value[k])))
            .collect();
        for i in 0..self.m {
            let row = self.row(i);
            let v: f64 = active.iter().map(|&(j, x)| row[j] * x).sum();
            let b = self.basis[i];
            self.value[b] = v;
        }
    }

    /// Signed primal infeasibility of basic row `i`: positive when the value
    /// must rise to its lower bound, negative when it must fall to its upper.
    #[inline]
    fn infeasibility(&self, i: usize) -> f64 {
        let b = self.basis[i];
        let v = self.value[b];
        if v < self.lower[b] - PRIMAL_TOL {
            self.lower[b] - v
        } else if v > self.upper[b] + PRIMAL_TOL {
            self.upper[b] - v
        } else {
            0.0
        }
    }

    fn total_infeasibility(&self) -> f64 {
        (0..self.m).map(|i| self.infeasibility(i).abs()).sum()
    }

    /// Moves nonbasic column `q` by `delta`, carrying the basic values along.
    fn shift(&mut self, q: usize, delta: f64) {
        let n = self.n;
        let k = self.nonbasic[q];
        self.value[k] += delta;
        for i in 0..self.m {
            let a = self.alpha[i * n + q];
            if a != 0.0 {
                let b = self.basis[i];
                self.value[b] += a * delta;
            }
        }
    }

    /// Exchanges basic row `p` with nonbasic column `q`.
    fn pivot(&mut self, p: usize, q: usize, update_costs: bool) {
        let n = self.n;
        let piv = self.alpha[p * n + q];
        let inv = 1.0 / piv;
        {
            let rp = &mut self.alpha[p * n..(p + 1) * n];
            for a in rp.iter_mut() {
                *a *= -inv;
            }
            rp[q] = inv;
        }
        let (head, tail) = self.alpha.split_at_mut(p * n);
        let (rp, tail) = tail.split_at_mut(n);
        let update = |row: &mut [f64]| {
            let f = row[q];
            if f != 0.0 {
                row[q] = 0.0;
                for (a, &b) in row.iter_mut().zip(rp.iter()) {
                    *a += f * b;
                }
            }
        };
        head.chunks_exact_mut(n).for_each(update);
        tail.chunks_exact_mut(n).for_each(update);
        if update_costs {
            let f = self.d[q];
            if f != 0.0 {
                self.d[q] = 0.0;
                for (a, &b) in self.d.iter_mut().zip(rp.iter()) {
                    *a += f * b;
                }
            }
        }
        core::mem::swap(&mut self.basis[p], &mut self.nonbasic[q]);
    }

    fn tick(&mut self) -> Result<(), LpError> {
        self.iterations += 1;
        if self.iterations > self.limit {
            return Err(LpError::IterationLimit(self.limit));
        }
        if self.iterations.is_multiple_of(REFRESH_EVERY) {
            self.refresh_values();
        }
        Ok(())
    }

    /// Dual simplex. With `use_costs == false` every reduced cost is treated
    /// as zero, which turns it into a pure feasibility search.
    fn dual_simplex(&mut self, use_costs: bool) -> Result<Outcome, LpError> {
        self.bland = false;
        let mut stall = 0usize;
        let mut best_infeasibility = f64::INFINITY;
        loop {
            // leaving row
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let inf = self.infeasibility(i);
                if inf == 0.0 {
                    continue;
                }
                leave = match leave {
                    None => Some((i, inf)),
                    Some((pi, pinf)) => {
                        let better = if self.bland {
                            self.basis[i] < self.basis[pi]
                        } else {
                            inf.abs() > pinf.abs()
                        };
                        if better { Some((i, inf)) } else { Some((pi, pinf)) }
                    }
                };
            }
            let Some((p, inf)) = leave else {
                return Ok(Outcome::Optimal);
            };
            let sigma = inf.signum();

            // entering column: Harris two-pass ratio test
            let row = self.row(p);
            let mut bound = f64::INFINITY;
            for (j, &a) in row.iter().enumerate() {
                if let Some(r) = self.dual_ratio(j, a, sigma, use_costs, HARRIS_TOL) {
                    bound = bound.min(r);
                }
            }
            if bound == f64::INFINITY {
                return Ok(Outcome::Infeasible);
            }
            let mut enter: Option<(usize, f64)> = None;
            for (j, &a) in row.iter().enumerate() {
                let Some(r) = self.dual_ratio(j, a, sigma, use_costs, 0.0) else { continue };
                if r > bound {
                    continue;
                }
                let better = match enter {
                    None => true,
                    Some((qj, qr)) => {
                        if self.bland {
                            r < qr || (r == qr && self.nonbasic[j] < self.nonbasic[qj])
                        } else {
                            a.abs() > row[qj].abs()
                        }
                    }
                };
                if better {
                    enter = Some((j, r));
                }
            }
            let (q, ratio) = enter.expect("ratio bound implies a candidate");

            let apq = self.alpha[p * self.n + q];
            let leaving = self.basis[p];
            let target = if sigma > 0.0 { self.lower[leaving] } else { self.upper[leaving] };
            let delta = (target - self.value[leaving]) / apq;
            self.shift(q, delta);
            self.value[leaving] = target;
            self.pivot(p, q, use_costs);

            let progress = if use_costs {
                ratio * inf.abs()
            } else {
                let total = self.total_infeasibility();
                let gain = best_infeasibility - total;
                best_infeasibility = best_infeasibility.min(total);
                gain
            };
            if progress > 1e-12 {
                stall = 0;
            } else {
                stall += 1;
                if stall > STALL_LIMIT {
                    self.bland = true;
                }
            }
            self.tick()?;
        }
    }

    /// Dual ratio for column `j` when the leaving row must move in direction
    /// `sigma`, or `None` when the column cannot enter.
    #[inline]
    fn dual_ratio(&self, j: usize, a: f64, sigma: f64, use_costs: bool, slack: f64) -> Option<f64> {
        if a.abs() < PIVOT_TOL {
            return None;
        }
        let k = self.nonbasic[j];
        let dir = if sigma * a > 0.0 { 1.0 } else { -1.0 };
        let movable = if dir > 0.0 { self.can_increase(k) } else { self.can_decrease(k) };
        if !movable {
            return None;
        }
        if !use_costs {
            return Some(slack / a.abs());
        }
        Some(((self.d[j] * dir).max(0.0) + slack) / a.abs())
    }

    fn primal_simplex(&mut self) -> Result<Outcome, LpError> {
        self.bland = false;
        let mut stall = 0usize;
        loop {
            // entering column
            let mut enter: Option<usize> = None;
            for j in 0..self.n {
                let k = self.nonbasic[j];
                let dj = self.d[j];
                let eligible = (dj < -DUAL_TOL && self.can_increase(k)) || (dj > DUAL_TOL && self.can_decrease(k));
                if !eligible {
                    continue;
                }
                enter = match enter {
                    None => Some(j),
                    Some(qj) => {
                        let better = if self.bland { k < self.nonbasic[qj] } else { dj.abs() > self.d[qj].abs() };
                        Some(if better { j } else { qj })
                    }
                };
            }
            let Some(q) = enter else {
                return Ok(Outcome::Optimal);
            };
            let dir = if self.d[q] < 0.0 { 1.0 } else { -1.0 };
            let kq = self.nonbasic[q];
            let flip = self.upper[kq] - self.lower[kq];

            // Harris ratio test over basic rows
            let n = self.n;
            let mut bound = f64::INFINITY;
            for i in 0..self.m {
                if let Some(lim) = self.primal_limit(i, self.alpha[i * n + q] * dir, HARRIS_TOL) {
                    bound = bound.min(lim);
                }
            }
            let mut leave: Option<(usize, f64)> = None;
            if bound < f64::INFINITY {
                for i in 0..self.m {
                    let r = self.alpha[i * n + q] * dir;
                    let Some(lim) = self.primal_limit(i, r, 0.0) else { continue };
                    if lim > bound {
                        continue;
                    }
                    let better = match leave {
                        None => true,
                        Some((pi, plim)) => {
                            if self.bland {
                                lim < plim || (lim == plim && self.basis[i] < self.basis[pi])
                            } else {
                                r.abs() > self.alpha[pi * n + q].abs()
                            }
                        }
                    };
                    if better {
                        leave = Some((i, lim));
                    }
                }
            }

            let step = match leave {
                Some((_, lim)) => lim.max(0.0),
                None => f64::INFINITY,
            };
            if flip <= step {
                if flip == f64::INFINITY {
                    return Ok(Outcome::Unbounded);
                }
                self.shift(q, dir * flip);
                self.value[kq] = if dir > 0.0 { self.upper[kq] } else { self.lower[kq] };
            } else {
                let (p, _) = leave.expect("finite step has a leaving row");
                let leaving = self.basis[p];
                let r = self.alpha[p * n + q] * dir;
                let target = if r > 0.0 { self.upper[leaving] } else { self.lower[leaving] };
                self.shift(q, dir * step);
                self.value[leaving] = target;
                self.pivot(p, q, true);
            }

            if step.min(flip) > 1e-12 {
                stall = 0;
            } else {
                stall += 1;
                if stall > STALL_LIMIT {
                    self.bland = true;
                }
            }
            self.tick()?;
        }
    }

    /// Step length at which basic row `i` hits a bound when it changes at
    /// rate `r` per unit of the entering variable.
    #[inline]
    fn primal_limit(&self, i: usize, r: f64, slack: f64) -> Option<f64> {
        let b = self.basis[i];
        if r > PIVOT_TOL && self.upper[b].is_finite() {
            Some((self.upper[b] - self.value[b] + slack) / r)
        } else if r < -PIVOT_TOL && self.lower[b].is_finite() {
            Some((self.value[b] - self.lower[b] + slack) / -r)
        } else {
            None
        }
    }
}
