use proptest::collection::vec;
use proptest::prelude::*;

use inhomo::dataset::{standardize, Dataset};
use inhomo::evaluation::{compatibility, rmse, PredictionSet};
use inhomo::gp::{corr_matrix, points, sqe_corr, GpPosterior, JitterLadder, SqeKernel};
use inhomo::inference::hpd_interval;
use inhomo::inhomogeneity::{
    brute_force_incompatible, incompatible_set, inhomogeneity_of, CorrEstimatorConfig, LSeries, Tolerance,
};

fn lvalues() -> impl Strategy<Value = Vec<f64>> {
    vec(0.0f64..3.0, 2..300)
}

fn series() -> impl Strategy<Value = Vec<f64>> {
    vec(-5.0f64..5.0, 15..120)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sweep_matches_brute_force(values in lvalues(), delta in 0.0f64..0.2, grid in any::<bool>()) {
        let values: Vec<f64> = if grid {
            values.iter().map(|v| (v * 10.0).round() / 10.0).collect()
        } else {
            values
        };
        let ls = LSeries::from_values(values, Tolerance::Constant(delta)).unwrap();
        prop_assert_eq!(incompatible_set(&ls).unwrap(), brute_force_incompatible(&ls).unwrap());
    }

    #[test]
    fn translation_leaves_the_set_alone(values in vec(0.0f64..3.0, 2..300), shift in 0.0f64..10.0, delta in 0.0f64..0.2) {
        // on a dyadic grid the shifted band ends are exact
        let q = |v: f64| (v * 64.0).round() / 64.0;
        let values: Vec<f64> = values.into_iter().map(q).collect();
        let delta = q(delta);
        let shift = q(shift);
        let moved: Vec<f64> = values.iter().map(|v| v + shift).collect();
        let a = incompatible_set(&LSeries::from_values(values, Tolerance::Constant(delta)).unwrap()).unwrap();
        let b = incompatible_set(&LSeries::from_values(moved, Tolerance::Constant(delta)).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn wider_bands_never_add_incompatible_indices(values in lvalues(), d1 in 0.0f64..0.2, extra in 0.0f64..0.2) {
        let narrow = incompatible_set(&LSeries::from_values(values.clone(), Tolerance::Constant(d1)).unwrap()).unwrap();
        let wide = incompatible_set(&LSeries::from_values(values, Tolerance::Constant(d1 + extra)).unwrap()).unwrap();
        prop_assert!(wide.iter().all(|i| narrow.contains(i)), "{:?} not within {:?}", wide, narrow);
    }

    #[test]
    fn p_d_lies_in_unit_interval(y in series()) {
        let ds = Dataset::series(y).unwrap();
        if let Ok((ls, r)) = inhomogeneity_of(&ds, &CorrEstimatorConfig::default(), Tolerance::Constant(0.05)) {
            prop_assert!((0.0..=1.0).contains(&r.p));
            prop_assert_eq!(r.p, r.m as f64 / (r.n - 1) as f64);
            prop_assert!(ls.values.iter().all(|l| l.is_finite() && *l >= 0.0));
            prop_assert!(ls.corr_values.iter().all(|c| (1e-12..=1.0).contains(c)));
        }
    }

    #[test]
    fn p_d_ignores_output_scale(y in series(), k in -4i32..4) {
        let scale = 2f64.powi(k);
        let a = Dataset::series(y.clone()).unwrap();
        let b = Dataset::series(y.iter().map(|v| v * scale).collect()).unwrap();
        let est = CorrEstimatorConfig::default();
        let ra = inhomogeneity_of(&a, &est, Tolerance::Constant(0.05)).map(|r| r.1.incompatible_indices);
        let rb = inhomogeneity_of(&b, &est, Tolerance::Constant(0.05)).map(|r| r.1.incompatible_indices);
        prop_assert_eq!(ra.ok(), rb.ok());
    }

    #[test]
    fn standardize_round_trips(y in series()) {
        let ds = Dataset::series(y.clone()).unwrap();
        if let Ok(so) = standardize(&ds) {
            let z = so.column(0);
            let n = z.len() as f64;
            let mean = z.iter().sum::<f64>() / n;
            let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            prop_assert!(mean.abs() < 1e-12);
            prop_assert!((var - 1.0).abs() < 1e-12);
            for (orig, zi) in y.iter().zip(&z) {
                prop_assert!((so.unstandardize(*zi, 0) - orig).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn corr_matrix_is_a_correlation(xs in vec(vec(-3.0f64..3.0, 2), 1..20), l1 in 0.01f64..5.0, l2 in 0.01f64..5.0) {
        let k = SqeKernel::new(vec![l1, l2]).unwrap();
        let m = corr_matrix(&points(&xs), &k, 0.0).unwrap().entries;
        for i in 0..xs.len() {
            prop_assert_eq!(m[(i, i)], 1.0);
            for j in 0..xs.len() {
                prop_assert_eq!(m[(i, j)], m[(j, i)]);
                prop_assert!((0.0..=1.0).contains(&m[(i, j)]));
                prop_assert!((m[(i, j)] - sqe_corr(&xs[i], &xs[j], &k).unwrap()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn predictive_variance_is_bounded(
        xs in vec(-3.0f64..3.0, 1..15),
        ys in vec(-2.0f64..2.0, 15),
        ell in 0.01f64..3.0,
        t in -4.0f64..4.0,
    ) {
        let rows: Vec<Vec<f64>> = xs.iter().map(|x| vec![*x]).collect();
        let y = &ys[..xs.len()];
        let post = GpPosterior::fit(&points(&rows), y, SqeKernel::new(vec![ell]).unwrap(), &JitterLadder::default()).unwrap();
        let p = post.predict(&[t]).unwrap();
        prop_assert!(p.variance >= 0.0 && p.variance <= 1.0 + post.jitter());
        prop_assert!(p.mean.is_finite());
    }

    #[test]
    fn rmse_and_c_invariants(
        truth in vec(-10.0f64..10.0, 1..60),
        err in vec(-3.0f64..3.0, 60),
        sd in vec(0.0f64..2.0, 60),
        shift in -100.0f64..100.0,
    ) {
        let n = truth.len();
        let mean: Vec<f64> = truth.iter().zip(&err).map(|(t, e)| t + e).collect();
        let ps = PredictionSet::from_columns(&truth, &mean, &sd[..n]).unwrap();
        let r = rmse(&ps).unwrap();
        let c = compatibility(&ps).unwrap();
        prop_assert!(r >= 0.0);
        prop_assert!((0.0..=1.0).contains(&c));
        let max_err = err[..n].iter().fold(0.0f64, |a, e| a.max(e.abs()));
        prop_assert!(r <= max_err + 1e-12);

        // shifting truths and means together keeps the RMSE
        let t2: Vec<f64> = truth.iter().map(|t| t + shift).collect();
        let m2: Vec<f64> = mean.iter().map(|m| m + shift).collect();
        let shifted = PredictionSet::from_columns(&t2, &m2, &sd[..n]).unwrap();
        prop_assert!((rmse(&shifted).unwrap() - r).abs() < 1e-9);

        // wider bands never lower C
        let wide: Vec<f64> = sd[..n].iter().map(|s| s * 2.0 + 0.1).collect();
        let ps_wide = PredictionSet::from_columns(&truth, &mean, &wide).unwrap();
        prop_assert!(compatibility(&ps_wide).unwrap() >= c);
    }

    #[test]
    fn hpd_holds_its_mass(xs in vec(-50.0f64..50.0, 50..400), mass in 0.5f64..0.99) {
        let iv = hpd_interval(&xs, mass).unwrap();
        let inside = xs.iter().filter(|x| iv.contains(**x)).count();
        prop_assert!(inside as f64 >= mass * xs.len() as f64 - 1e-9);
        prop_assert!(iv.lo <= iv.hi);
    }
}
