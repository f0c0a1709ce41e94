mod oracles;
mod support;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rmcurve_core::domain::{cumulate_choice_sets, DemandScenario, Money};
use rmcurve_core::spline::{count_decision_vars, fit, Transform};

fn single_observation(values: &[u32]) -> DemandScenario {
    let n = values.len();
    let raw = DemandScenario::with_availability(support::day0(), vec![Money::from_major(100)], vec![values.to_vec()], vec![vec![true; n]])
        .unwrap();
    cumulate_choice_sets(&raw).unwrap()
}

#[test]
fn exact_interpolation_and_straight_lines() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [5usize, 10, 28] {
        for _ in 0..5 {
            let ys: Vec<u32> = (0..n).map(|_| rng.random_range(0..20)).collect();
            let s = [single_observation(&ys)];

            let (curves, _) = fit(&s, &[0.0], Transform::None, None).unwrap();
            let knots = curves.curves[0].knot_values();
            let residual = knots.iter().zip(&ys).map(|(k, &y)| (k - f64::from(y)).abs()).fold(0.0, f64::max);
            assert!(residual <= 1e-6, "n={n}: residual {residual}");

            let (curves, _) = fit(&s, &[1.0], Transform::None, None).unwrap();
            let k = curves.curves[0].knot_values();
            let second = k.windows(3).map(|w| (w[0] - 2.0 * w[1] + w[2]).abs()).fold(0.0, f64::max);
            assert!(second <= 1e-6, "n={n}: second difference {second}");
        }
    }
    assert_eq!(count_decision_vars(28, 1), Ok(324));
}

#[test]
fn random_multi_rate_fits_keep_their_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for case in 0..50 {
        let classes = rng.random_range(2..=4);
        let horizon = rng.random_range(8..=28);
        let count = rng.random_range(6..=20);
        let raw = support::random_scenarios(&mut rng, classes, horizon, count);
        let cum: Vec<_> = raw.iter().map(|s| cumulate_choice_sets(s).unwrap()).collect();
        let g: Vec<f64> = (0..classes).map(|_| rng.random_range(0.0..1.0)).collect();
        let transform = if case % 3 == 0 { Transform::Anscombe } else { Transform::None };
        let (curves, diag) = match fit(&cum, &g, transform, None) {
            Ok(f) => f,
            Err(e) => panic!("case {case}: {e}"),
        };

        assert!(curves.continuity_defect() <= 1e-6, "case {case}: {}", curves.continuity_defect());
        let knots: Vec<Vec<f64>> = curves.curves.iter().map(|c| c.knot_values()).collect();
        for (r, k) in knots.iter().enumerate() {
            assert!(k.iter().all(|&v| v >= -1e-7), "case {case}: negative knot in class {r}");
            if r + 1 < knots.len() {
                for (a, b) in k.iter().zip(&knots[r + 1]) {
                    assert!(a + 1e-7 >= *b, "case {case}: class {r} below class {}", r + 1);
                }
            }
        }
        for c in &curves.curves {
            let (first, last) = (c.pieces.first().unwrap(), c.pieces.last().unwrap());
            assert!(first.derivative(first.start).abs() <= 1e-6);
            assert!(last.derivative(last.end).abs() <= 1e-6);
        }
        let gap = (diag.recomputed_objective() - diag.objective).abs();
        assert!(gap <= 1e-6, "case {case}: objective gap {gap}");
    }
}
