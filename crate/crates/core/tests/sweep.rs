use refimpact_core::cohort::CohortSpec;
use refimpact_core::normalize::hazen_percentiles;
use refimpact_core::regress::{robustness_sweep, sign_disagreements, SWEEP_LABELS};
use refimpact_core::synth::{generate_corpus, SynthConfig};
use refimpact_core::Error;

fn spec() -> CohortSpec {
    CohortSpec::new("DE", &[])
}

#[test]
fn draws_are_seeded_and_recorded() {
    let cfg = SynthConfig {
        n_citing: 20_000,
        ..SynthConfig::reference()
    };
    let corpus = generate_corpus(&cfg, 3).unwrap();
    let table = hazen_percentiles(&corpus);
    let a = robustness_sweep(&corpus, &spec(), &table, 42).unwrap();
    let b = robustness_sweep(&corpus, &spec(), &table, 42).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.configs.len(), 3);
    for (c, label) in a.configs.iter().zip(SWEEP_LABELS) {
        assert_eq!(c.label, label);
    }
    let sizes: Vec<usize> = a.configs.iter().map(|c| c.countries.len()).collect();
    assert_eq!(sizes, [5, 15, 20]);
    let ranks: Vec<&str> = a.ranking.iter().map(|(c, _)| c.as_str()).collect();
    for c in &a.configs {
        assert!(c.drawn.iter().all(|d| ranks[10..40].contains(&d.as_str())));
        assert_eq!(
            &c.countries[c.countries.len() - c.drawn.len()..],
            &c.drawn[..]
        );
    }
    let other = robustness_sweep(&corpus, &spec(), &table, 43).unwrap();
    assert_ne!(a.configs[2].drawn, other.configs[2].drawn);
    // every name reported must exist in all three configurations
    for d in sign_disagreements(&a) {
        let name = d.split_once(": ").unwrap().1;
        assert!(a.configs.iter().all(|c| c.model_b.index_of(name).is_some()));
    }
}

#[test]
fn too_few_countries() {
    let cfg = SynthConfig {
        n_citing: 500,
        countries: SynthConfig::reference().countries[..12].to_vec(),
        ..SynthConfig::reference()
    };
    let corpus = generate_corpus(&cfg, 1).unwrap();
    let table = hazen_percentiles(&corpus);
    match robustness_sweep(&corpus, &spec(), &table, 1) {
        Err(Error::InsufficientCountries { needed: 40, found }) => assert!(found < 40),
        other => panic!("expected InsufficientCountries, got {other:?}"),
    }
}
