//! Vertex enumeration for small linear programs.
//!
//! Problems are `minimize c·x` subject to rows `a·x (≤|≥|=) b`, with each
//! variable either nonnegative or free. Free variables are split into two
//! nonnegative parts, so every feasible region is pointed and is nonempty
//! exactly when it has a vertex. Unboundedness is decided by looking for a
//! vertex of `{d ≥ 0, rows(d) ≤/≥/= 0, c·d = -1}`.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rel {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Lp {
    pub c: Vec<f64>,
    pub rows: Vec<Row>,
    pub free: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Optimal(f64),
    Infeasible,
    Unbounded,
}

const EPS: f64 = 1e-9;

type Row = (Vec<f64>, Rel, f64);

/// Solves the square system in place; `None` when singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for k in col..n {
                        a[r][k] -= f * a[col][k];
                    }
                    b[r] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// All rows over nonnegative variables as `(coefs, rel, rhs)`, including
/// the sign rows `x_i ≥ 0`.
fn lifted(lp: &Lp) -> (Vec<f64>, Vec<Row>) {
    let lift = |row: &[f64]| -> Vec<f64> {
        let mut out = Vec::new();
        for (i, &a) in row.iter().enumerate() {
            out.push(a);
            if lp.free[i] {
                out.push(-a);
            }
        }
        out
    };
    let c = lift(&lp.c);
    let n = c.len();
    let mut rows: Vec<_> = lp.rows.iter().map(|(a, r, b)| (lift(a), *r, *b)).collect();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        rows.push((e, Rel::Ge, 0.0));
    }
    (c, rows)
}

fn satisfied(row: &Row, x: &[f64]) -> bool {
    let lhs: f64 = row.0.iter().zip(x).map(|(a, v)| a * v).sum();
    let tol = EPS * (1.0 + row.2.abs() + row.0.iter().map(|a| a.abs()).sum::<f64>());
    match row.1 {
        Rel::Le => lhs <= row.2 + tol,
        Rel::Ge => lhs >= row.2 - tol,
        Rel::Eq => (lhs - row.2).abs() <= tol,
    }
}

/// Every feasible basic solution of a polyhedron in `n` nonnegative
/// variables (sign rows included in `rows`).
fn vertices(n: usize, rows: &[Row]) -> Vec<Vec<f64>> {
    let all: Vec<usize> = (0..rows.len()).collect();
    let mut out = Vec::new();
    combos(&all, n, 0, &mut Vec::new(), &mut |active| {
        let a: Vec<Vec<f64>> = active.iter().map(|&i| rows[i].0.clone()).collect();
        let b: Vec<f64> = active.iter().map(|&i| rows[i].2).collect();
        if let Some(x) = solve_square(a, b) {
            if rows.iter().all(|r| satisfied(r, &x)) {
                out.push(x);
            }
        }
    });
    out
}

fn combos(pool: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if cur.len() == k {
        f(cur);
        return;
    }
    for i in start..pool.len() {
        if pool.len() - i < k - cur.len() {
            break;
        }
        cur.push(pool[i]);
        combos(pool, k, i + 1, cur, f);
        cur.pop();
    }
}

pub fn solve(lp: &Lp) -> Outcome {
    let (c, rows) = lifted(lp);
    let n = c.len();
    let verts = vertices(n, &rows);
    if verts.is_empty() {
        return Outcome::Infeasible;
    }
    let mut ray_rows: Vec<_> = rows.iter().map(|(a, r, _)| (a.clone(), *r, 0.0)).collect();
    ray_rows.push((c.clone(), Rel::Eq, -1.0));
    if !vertices(n, &ray_rows).is_empty() {
        return Outcome::Unbounded;
    }
    let best = verts.iter().map(|x| c.iter().zip(x).map(|(a, v)| a * v).sum::<f64>()).fold(f64::INFINITY, f64::min);
    Outcome::Optimal(best)
}
