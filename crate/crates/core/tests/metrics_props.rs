use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rmcurve_core::metrics::{wape, MetricsError};
use rmcurve_core::spline::Transform;

fn pairs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..30).prop_flat_map(|n| (prop::collection::vec(0.0f64..50.0, n), prop::collection::vec(0.0f64..50.0, n)))
}

proptest! {
    #[test]
    fn perfect_forecast_scores_zero(a in prop::collection::vec(0.1f64..50.0, 1..30)) {
        prop_assert_eq!(wape(&a, &a).unwrap().value, 0.0);
    }

    #[test]
    fn scaling_both_series_changes_nothing((a, f) in pairs(), c in 0.01f64..100.0) {
        prop_assume!(a.iter().sum::<f64>() > 1e-6);
        let base = wape(&a, &f).unwrap().value;
        let ca: Vec<f64> = a.iter().map(|x| c * x).collect();
        let cf: Vec<f64> = f.iter().map(|x| c * x).collect();
        let scaled = wape(&ca, &cf).unwrap().value;
        prop_assert!((base - scaled).abs() <= 1e-9 * (1.0 + base));
    }

    #[test]
    fn zero_actuals_are_an_error(f in prop::collection::vec(0.0f64..50.0, 1..30)) {
        let a = vec![0.0; f.len()];
        prop_assert_eq!(wape(&a, &f).unwrap_err(), MetricsError::ZeroActuals);
    }
}

fn variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)
}

/// Variance of the square root of Poisson counts hardly moves with the mean,
/// while the raw variance grows with it.
#[test]
fn square_root_stabilises_poisson_variance() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut raw = Vec::new();
    let mut root = Vec::new();
    for lambda in [1.0, 4.0, 16.0] {
        let d = Poisson::new(lambda).unwrap();
        let ys: Vec<f64> = (0..40_000).map(|_| d.sample(&mut rng)).collect();
        raw.push(variance(&ys));
        root.push(variance(&ys.iter().map(|&y| Transform::Anscombe.apply(y)).collect::<Vec<_>>()));
    }
    let raw_ratio = raw[2] / raw[0];
    let root_ratio = root.iter().cloned().fold(0.0, f64::max) / root.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!((raw_ratio - 16.0).abs() < 1.6, "raw ratio {raw_ratio}");
    assert!(root_ratio < 2.0, "transformed ratio {root_ratio}: {root:?}");
}
