use proptest::prelude::*;
use refimpact_core::regress::{
    factor_change, factor_ratio, fit_logistic, normal_two_sided_p, odds_table, pct_change,
    student_t_quantile, with_robust, Design, FitOptions, OddsOptions, Reference, RobustOptions,
    Z_95,
};

#[test]
fn table_rows_reproduce_by_hand() {
    assert!((pct_change(1.519f64.ln(), 1.0) - 51.9).abs() < 1e-9);
    assert!((pct_change(0.889f64.ln(), 1.0) + 11.1).abs() < 1e-9);
    assert!((factor_ratio(51.9, 24.1).unwrap() - 2.153_526_970_954_357).abs() < 1e-12);
    assert_eq!(factor_ratio(1.8, -1.6), None);
    assert_eq!(factor_ratio(0.0, 3.0), None);
    assert!((pct_change(0.5, 10.0) - 100.0 * (5f64.exp() - 1.0)).abs() < 1e-9);
}

#[test]
fn critical_values() {
    assert!((normal_two_sided_p(Z_95) - 0.05).abs() < 1e-6);
    // Student t, 10 degrees of freedom, 97.5% quantile
    assert!((student_t_quantile(0.975, 10.0) - 2.228_138_851_986_274).abs() < 1e-8);
}

fn fitted(seed: u64) -> refimpact_core::regress::FitResult {
    let mut s = refimpact_core::rng::Stream::new(seed, 5);
    let n = 400;
    let cov: Vec<f64> = (0..2 * n)
        .map(|_| if s.bernoulli(0.5) { 1.0 } else { 0.0 })
        .collect();
    let y = (0..n)
        .map(|i| {
            let eta = -1.0 + 0.4 * cov[2 * i] - 0.3 * cov[2 * i + 1];
            if s.bernoulli(1.0 / (1.0 + (-eta).exp())) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let clusters = (0..n as u32).map(|i| i / 4).collect();
    let d = Design::new(vec!["a".into(), "b".into()], &cov, y, Some(clusters)).unwrap();
    let fit = fit_logistic(&d, &FitOptions::default()).unwrap();
    with_robust(fit, &d, &RobustOptions::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn odds_rows_obey_the_transforms(seed in 0u64..100_000) {
        let fit = fitted(seed);
        let table = odds_table(&fit, &OddsOptions::default()).unwrap();
        let se = fit.robust_se().unwrap();
        prop_assert_eq!(table.rows.len(), 2);
        for (k, row) in table.rows.iter().enumerate() {
            // libm and the platform exp may differ in the last place
            prop_assert!((row.odds_ratio - row.beta.exp()).abs() <= 4.0 * f64::EPSILON * row.odds_ratio);
            prop_assert_eq!(row.pct_change, 100.0 * (row.odds_ratio - 1.0));
            prop_assert_eq!(row.se, se[k + 1]);
            prop_assert!((row.ci_low - (row.beta - Z_95 * row.se).exp()).abs() < 1e-12);
            prop_assert!((row.ci_high - (row.beta + Z_95 * row.se).exp()).abs() < 1e-12);
            prop_assert!((row.ci_low * row.ci_high - row.odds_ratio.powi(2)).abs() < 1e-9);
            let z = row.beta / row.se;
            prop_assert_eq!(row.stars.is_empty(), z.abs() < Z_95 - 1e-6 || row.p_value >= 0.05);
        }
        let t = odds_table(&fit, &OddsOptions { delta: 1.0, reference: Reference::T }).unwrap();
        prop_assert!(t.critical > Z_95);
        for (a, b) in t.rows.iter().zip(&table.rows) {
            prop_assert!(a.ci_low <= b.ci_low && a.ci_high >= b.ci_high);
        }
    }
}

#[test]
fn factor_column_against_itself_is_one() {
    let fit = fitted(1);
    let t = odds_table(&fit, &OddsOptions::default()).unwrap();
    for row in factor_change(&t, &t).unwrap() {
        assert_eq!(row.factor, Some(1.0));
    }
}
