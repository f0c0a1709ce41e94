//! Exhaustive references for the capacity-control recursion.
//!
//! In each of `T'` intervals one price is posted; class `j` sells one unit
//! with probability `lambda[j][t]` at `prices[j]`. Selling stops at zero
//! capacity.

/// Largest number of policies [`best_policy`] will enumerate.
pub const POLICY_LIMIT: u64 = 200_000;

/// States `(t, x)` with `x ≥ 1` that can be reached from `(0, capacity)`.
fn decision_states(intervals: usize, capacity: u32) -> Vec<(usize, u32)> {
    let mut out = Vec::new();
    for t in 0..intervals {
        let low = capacity.saturating_sub(t as u32).max(1);
        for x in low..=capacity {
            out.push((t, x));
        }
    }
    out
}

pub fn policy_count(classes: usize, intervals: usize, capacity: u32) -> Option<u64> {
    let states = decision_states(intervals, capacity).len() as u32;
    (classes as u64).checked_pow(states)
}

/// Expected revenue of a deterministic Markov policy, by pushing the
/// capacity distribution forward through time.
fn evaluate(prices: &[f64], lambda: &[Vec<f64>], capacity: u32, choice: impl Fn(usize, u32) -> usize) -> f64 {
    let intervals = lambda[0].len();
    let mut dist = vec![0.0; capacity as usize + 1];
    dist[capacity as usize] = 1.0;
    let mut revenue = 0.0;
    for t in 0..intervals {
        let mut next = vec![0.0; dist.len()];
        next[0] += dist[0];
        for x in 1..=capacity {
            let p = dist[x as usize];
            if p == 0.0 {
                continue;
            }
            let j = choice(t, x);
            let l = lambda[j][t];
            revenue += p * l * prices[j];
            next[x as usize - 1] += p * l;
            next[x as usize] += p * (1.0 - l);
        }
        dist = next;
    }
    revenue
}

/// Best expected revenue over every deterministic Markov policy on the
/// reachable states. `None` when there are more than [`POLICY_LIMIT`].
pub fn best_policy(prices: &[f64], lambda: &[Vec<f64>], capacity: u32) -> Option<f64> {
    let intervals = lambda[0].len();
    let r = prices.len();
    let count = policy_count(r, intervals, capacity)?;
    if count > POLICY_LIMIT {
        return None;
    }
    let states = decision_states(intervals, capacity);
    let index = |t: usize, x: u32| states.iter().position(|&s| s == (t, x)).expect("reachable state");
    let mut digits = vec![0usize; states.len()];
    let mut best = f64::NEG_INFINITY;
    for _ in 0..count {
        let v = evaluate(prices, lambda, capacity, |t, x| digits[index(t, x)]);
        best = best.max(v);
        for d in digits.iter_mut() {
            *d += 1;
            if *d < r {
                break;
            }
            *d = 0;
        }
    }
    Some(best)
}

/// Expectimax over explicit outcome histories: at every node the posted
/// price is chosen with full knowledge of what has sold so far. No values
/// are shared between nodes.
pub fn expectimax(prices: &[f64], lambda: &[Vec<f64>], t: usize, remaining: u32) -> f64 {
    if t == lambda[0].len() || remaining == 0 {
        return 0.0;
    }
    let sell = expectimax(prices, lambda, t + 1, remaining - 1);
    let stay = expectimax(prices, lambda, t + 1, remaining);
    (0..prices.len())
        .map(|j| lambda[j][t] * (prices[j] + sell) + (1.0 - lambda[j][t]) * stay)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Best revenue of a price sequence fixed in advance, over all `R^T'`
/// sequences. Equals the adaptive optimum when capacity never binds.
pub fn best_fixed_sequence(prices: &[f64], lambda: &[Vec<f64>], capacity: u32) -> f64 {
    let intervals = lambda[0].len();
    let r = prices.len();
    let mut seq = vec![0usize; intervals];
    let mut best = f64::NEG_INFINITY;
    for _ in 0..r.pow(intervals as u32) {
        best = best.max(evaluate(prices, lambda, capacity, |t, _| seq[t]));
        for d in seq.iter_mut() {
            *d += 1;
            if *d < r {
                break;
            }
            *d = 0;
        }
    }
    best
}
