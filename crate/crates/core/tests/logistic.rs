use proptest::prelude::*;
use refimpact_core::regress::{fit_logistic, log_likelihood, score, Design, FitOptions};
use refimpact_core::rng::Stream;
use refimpact_core::Error;

/// Log-likelihood written out directly, independent of the library.
fn oracle_ll(x: &[f64], y: &[f64], b0: f64, b1: f64) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let eta = b0 + b1 * xi;
            let p = 1.0 / (1.0 + (-eta).exp());
            yi * p.ln() + (1.0 - yi) * (1.0 - p).ln()
        })
        .sum()
}

/// Maximizes by repeated grid refinement around the best point.
fn grid_mle(x: &[f64], y: &[f64]) -> (f64, f64) {
    let (mut c0, mut c1, mut half) = (0.0, 0.0, 8.0);
    const STEPS: i32 = 40;
    while half > 1e-7 {
        let step = 2.0 * half / STEPS as f64;
        let mut best = (f64::NEG_INFINITY, c0, c1);
        for i in 0..=STEPS {
            for j in 0..=STEPS {
                let b0 = c0 - half + i as f64 * step;
                let b1 = c1 - half + j as f64 * step;
                let ll = oracle_ll(x, y, b0, b1);
                if ll > best.0 {
                    best = (ll, b0, b1);
                }
            }
        }
        (c0, c1) = (best.1, best.2);
        half = 4.0 * step;
    }
    (c0, c1)
}

fn instance(seed: u64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut s = Stream::new(seed, 7);
    let b0 = 2.0 * s.uniform() - 1.0;
    let b1 = 3.0 * s.uniform() - 1.5;
    let x: Vec<f64> = (0..n).map(|_| 4.0 * s.uniform() - 2.0).collect();
    let y = x
        .iter()
        .map(|xi| {
            let p = 1.0 / (1.0 + (-(b0 + b1 * xi)).exp());
            if s.bernoulli(p) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    (x, y)
}

/// One covariate separates when the classes do not overlap.
fn separated(x: &[f64], y: &[f64]) -> bool {
    let range = |class: f64| {
        x.iter()
            .zip(y)
            .filter(|(_, &v)| v == class)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (&xi, _)| {
                (lo.min(xi), hi.max(xi))
            })
    };
    let (lo0, hi0) = range(0.0);
    let (lo1, hi1) = range(1.0);
    !lo0.is_finite() || !lo1.is_finite() || hi0 <= lo1 || hi1 <= lo0
}

#[test]
fn two_by_two_closed_form() {
    // x = 0: 2 successes, 3 failures (odds 2/3); x = 1: 1 success, 3 failures (odds 1/3).
    let x = [0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0];
    let y = vec![1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
    let d = Design::new(vec!["x".into()], &x, y, None).unwrap();
    let fit = fit_logistic(&d, &FitOptions::default()).unwrap();
    assert!((fit.beta[0] - (2.0f64 / 3.0).ln()).abs() < 1e-8);
    assert!((fit.beta[1] - 0.5f64.ln()).abs() < 1e-8);
    // closed-form information inverse: var(b0) = 1/(5 * 2/5 * 3/5), var(b1) = sum of group inverses
    let v0 = 1.0 / (5.0 * 0.4 * 0.6);
    let v1 = v0 + 1.0 / (4.0 * 0.25 * 0.75);
    assert!((fit.naive_cov[0] - v0).abs() < 1e-8);
    assert!((fit.naive_cov[3] - v1).abs() < 1e-8);
    assert!((fit.naive_cov[1] + v0).abs() < 1e-8);
}

#[test]
fn matches_grid_search_on_random_instances() {
    let mut checked = 0;
    let mut seed = 0;
    while checked < 20 {
        seed += 1;
        let n = 20 + (seed as usize % 4) * 10;
        let (x, y) = instance(seed, n);
        if separated(&x, &y) {
            continue;
        }
        let d = Design::new(vec!["x".into()], &x, y.clone(), None).unwrap();
        let fit = fit_logistic(&d, &FitOptions::default()).unwrap();
        let (g0, g1) = grid_mle(&x, &y);
        assert!(
            (fit.beta[0] - g0).abs() < 1e-4 && (fit.beta[1] - g1).abs() < 1e-4,
            "seed {seed}: fit {:?} vs grid ({g0}, {g1})",
            fit.beta
        );
        assert!((fit.log_likelihood - oracle_ll(&x, &y, g0, g1)).abs() < 1e-8);
        checked += 1;
    }
}

#[test]
fn separated_instance_is_reported() {
    let x = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0];
    let y = vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
    let d = Design::new(vec!["x".into()], &x, y, None).unwrap();
    match fit_logistic(&d, &FitOptions::default()) {
        Err(Error::SeparationDetected { name, .. }) => assert_eq!(name, "x"),
        other => panic!("expected separation, got {other:?}"),
    }
}

proptest! {
    #[test]
    fn score_matches_finite_differences(
        seed in 0u64..10_000,
        b0 in -2.0f64..2.0,
        b1 in -2.0f64..2.0,
        b2 in -2.0f64..2.0,
    ) {
        let mut s = Stream::new(seed, 3);
        let n = 30;
        let cov: Vec<f64> = (0..2 * n).map(|_| 2.0 * s.uniform() - 1.0).collect();
        let y: Vec<f64> = (0..n).map(|_| if s.bernoulli(0.4) { 1.0 } else { 0.0 }).collect();
        let d = Design::new(vec!["u".into(), "v".into()], &cov, y, None).unwrap();
        let beta = [b0, b1, b2];
        let g = score(&d, &beta);
        let h = 1e-5;
        for k in 0..3 {
            let mut up = beta;
            let mut down = beta;
            up[k] += h;
            down[k] -= h;
            let fd = (log_likelihood(&d, &up) - log_likelihood(&d, &down)) / (2.0 * h);
            prop_assert!((fd - g[k]).abs() <= 1e-4 * g[k].abs().max(1.0), "k={} fd={} score={}", k, fd, g[k]);
        }
    }

    #[test]
    fn score_vanishes_at_the_fit(seed in 0u64..10_000) {
        let (x, y) = instance(seed, 60);
        prop_assume!(!separated(&x, &y));
        let d = Design::new(vec!["x".into()], &x, y, None).unwrap();
        let fit = fit_logistic(&d, &FitOptions::default()).unwrap();
        prop_assert!(score(&d, &fit.beta).iter().all(|g| g.abs() < 1e-6));
        prop_assert!(fit.converged);
    }
}
