//! Property checks through the public API.

use elm_uq::elm::{fit_ensemble, fit_member, ElmConfig};
use elm_uq::metrics::{coverage, se_e_re};
use elm_uq::numerics::{rng_from_seed, Mat, Vector};
use proptest::prelude::*;
use rand::Rng;

fn data(n: usize, d: usize, seed: u64) -> (Mat, Vector) {
    let mut rng = rng_from_seed(seed);
    let x = Mat::from_fn(d, n, |_, _| rng.random_range(-2.0..2.0));
    let y = Vector::from_fn(n, |i, _| x.column(i).sum().sin() + 0.2 * rng.random_range(-1.0..1.0));
    (x, y)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ensemble_prediction_is_the_member_mean(seed in 0u64..1000, m in 1usize..6, neurons in 1usize..8) {
        let (x, y) = data(30, 2, seed);
        let ens = fit_ensemble(&ElmConfig::new(neurons, 1e-3), m, &x, &y, seed).unwrap();
        let (q, _) = data(7, 2, seed + 1);
        let pred = ens.predict_values(&q).unwrap();
        let mut mean = Vector::zeros(7);
        for member in &ens.members {
            mean += member.predict(&q).unwrap();
        }
        mean /= m as f64;
        prop_assert!((pred - mean).amax() < 1e-12);
    }

    #[test]
    fn unregularized_leverage_is_a_projection_diagonal(seed in 0u64..1000, neurons in 1usize..8) {
        let (x, y) = data(40, 2, seed);
        let member = fit_member(&ElmConfig::new(neurons, 0.0), &x, &y, seed).unwrap();
        prop_assert!(member.leverage.iter().all(|&p| (-1e-12..=1.0 + 1e-12).contains(&p)));
        prop_assert!((member.leverage.sum() - neurons as f64).abs() < 1e-8);
    }

    #[test]
    fn ridge_shrinks_the_readout(seed in 0u64..1000, neurons in 1usize..10, a in 1e-6f64..1.0, factor in 1.01f64..100.0) {
        let (x, y) = data(25, 3, seed);
        let small = fit_member(&ElmConfig::new(neurons, a), &x, &y, seed).unwrap();
        let large = fit_member(&ElmConfig::new(neurons, a * factor), &x, &y, seed).unwrap();
        prop_assert_eq!(&small.weights, &large.weights);
        prop_assert!(small.beta.norm() >= large.beta.norm() * (1.0 - 1e-12));
    }

    #[test]
    fn coverage_grows_with_the_width(
        reps in prop::collection::vec((prop::collection::vec(-2.0f64..2.0, 5), prop::collection::vec(0.0f64..1.0, 5)), 2..20),
        z in 0.0f64..3.0,
        dz in 0.0f64..2.0,
    ) {
        let f = vec![0.1, -0.3, 0.0, 0.7, 1.2];
        let (pred, sd): (Vec<Vec<f64>>, Vec<Vec<f64>>) = reps.into_iter().unzip();
        let narrow = coverage(&f, &pred, &sd, z, "x").unwrap();
        let wide = coverage(&f, &pred, &sd, z + dz, "x").unwrap();
        prop_assert!(narrow.coverage.iter().zip(&wide.coverage).all(|(a, b)| a <= b));

        // Reordering repetitions leaves coverage unchanged.
        let (rp, rs): (Vec<_>, Vec<_>) = (pred.iter().rev().cloned().collect(), sd.iter().rev().cloned().collect());
        prop_assert_eq!(coverage(&f, &rp, &rs, z, "x").unwrap().coverage, narrow.coverage);
    }

    #[test]
    fn scores_match_a_sorting_oracle(pairs in prop::collection::vec((0.01f64..3.0, 0.01f64..3.0), 1..40), shift in 0usize..40) {
        let (est, truth): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
        let median = |mut v: Vec<f64>| {
            v.sort_by(f64::total_cmp);
            let n = v.len();
            if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) }
        };
        let s = se_e_re(&est, &truth).unwrap();
        prop_assert_eq!(s.se, median(est.clone()));
        prop_assert_eq!(s.e, median(est.iter().zip(&truth).map(|(a, b)| (a - b).abs()).collect()));
        prop_assert_eq!(s.re, median(est.iter().zip(&truth).map(|(a, b)| (a - b).abs() / b).collect()));

        // Rotating the points leaves every median unchanged.
        let k = shift % est.len();
        let (mut e2, mut t2) = (est.clone(), truth.clone());
        e2.rotate_left(k);
        t2.rotate_left(k);
        prop_assert_eq!(se_e_re(&e2, &t2).unwrap(), s);
    }
}
