//! Country-set robustness checks.
//!
//! Three refits of models A and B that differ only in the country flags:
//! the five most referenced countries; the top ten plus five drawn from
//! ranks 11 to 40; the top ten plus ten drawn from the same ranks. Draws are
//! uniform without replacement from a seeded stream and are recorded.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{
    fit_rows, odds_table, FitOptions, FitResult, ModelSpec, OddsOptions, OddsTable, RobustOptions,
};
use crate::cohort::{
    extract_window_refs, rows_from_pairs, select_citing, top_referenced_countries, CohortSpec,
};
use crate::corpus::Corpus;
use crate::normalize::PercentileTable;
use crate::rng::{self, Stream};
use crate::{Error, Result};

pub const SWEEP_LABELS: [&str; 3] = [
    "five (most frequently referenced)",
    "15 (five randomly selected)",
    "20 (ten randomly selected)",
];

/// Ranks (1-based, inclusive) the random countries are drawn from.
pub const SWEEP_CANDIDATE_RANKS: (usize, usize) = (11, 40);

const SWEEP_STREAM: u64 = 0x5357_4545_5000_0000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub label: String,
    /// Country flags in the order they enter the models.
    pub countries: Vec<String>,
    /// The randomly drawn part of `countries`, in draw order.
    pub drawn: Vec<String>,
    pub n_rows: usize,
    pub dropped_rows: usize,
    pub model_a: FitResult,
    pub model_b: FitResult,
    pub table_a: OddsTable,
    pub table_b: OddsTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub seed: u64,
    pub rng: String,
    pub ranking: Vec<(String, f64)>,
    pub configs: Vec<SweepConfig>,
}

fn draw(stream: &mut Stream, candidates: &[String], k: usize) -> Vec<String> {
    let mut pool: Vec<String> = candidates.to_vec();
    stream.partial_shuffle(&mut pool, k).to_vec()
}

pub fn robustness_sweep(
    corpus: &Corpus,
    spec: &CohortSpec,
    table: &PercentileTable,
    seed: u64,
) -> Result<SweepReport> {
    spec.validate_selection()?;
    let (lo, hi) = SWEEP_CANDIDATE_RANKS;
    let citing = select_citing(corpus, spec);
    let pairs = extract_window_refs(corpus, &citing, spec);
    let ranking = if pairs.is_empty() {
        Vec::new()
    } else {
        top_referenced_countries(corpus, &pairs, spec, hi)?
    };
    if ranking.len() < hi {
        return Err(Error::InsufficientCountries {
            needed: hi,
            found: ranking.len(),
        });
    }
    let names: Vec<String> = ranking.iter().map(|(c, _)| c.clone()).collect();
    let candidates = &names[lo - 1..hi];

    let mut stream = Stream::new(seed, SWEEP_STREAM);
    let draws = [
        Vec::new(),
        draw(&mut stream, candidates, 5),
        draw(&mut stream, candidates, 10),
    ];
    let bases = [&names[..5], &names[..10], &names[..10]];

    let fit_opts = FitOptions::default();
    let robust_opts = RobustOptions::default();
    let odds_opts = OddsOptions::default();
    let mut configs = Vec::with_capacity(3);
    for ((label, base), drawn) in SWEEP_LABELS.iter().zip(bases).zip(draws) {
        let mut countries = base.to_vec();
        countries.extend(drawn.iter().cloned());
        let mut s = spec.clone();
        s.country_set = countries.clone();
        let rows = rows_from_pairs(corpus, &pairs, &s, table);
        let model_a = fit_rows(&rows.rows, &s, ModelSpec::A, &fit_opts, &robust_opts)?;
        let model_b = fit_rows(&rows.rows, &s, ModelSpec::B, &fit_opts, &robust_opts)?;
        configs.push(SweepConfig {
            label: String::from(*label),
            countries,
            drawn,
            n_rows: rows.rows.len(),
            dropped_rows: rows.dropped,
            table_a: odds_table(&model_a, &odds_opts)?,
            table_b: odds_table(&model_b, &odds_opts)?,
            model_a,
            model_b,
        });
    }
    Ok(SweepReport {
        seed,
        rng: String::from(rng::ALGORITHM),
        ranking,
        configs,
    })
}

/// Covariates present in every configuration whose coefficient sign is not
/// the same across configurations, as `"A: name"` / `"B: name"`.
pub fn sign_disagreements(report: &SweepReport) -> Vec<String> {
    let mut out = Vec::new();
    for (label, pick) in [("A", 0usize), ("B", 1)] {
        let fits: Vec<&FitResult> = report
            .configs
            .iter()
            .map(|c| if pick == 0 { &c.model_a } else { &c.model_b })
            .collect();
        let Some(first) = fits.first() else { continue };
        for name in first.names.iter().skip(1) {
            let signs: Option<Vec<bool>> = fits
                .iter()
                .map(|f| f.coefficient(name).map(|b| b > 0.0))
                .collect();
            match signs {
                Some(s) if s.iter().any(|&x| x != s[0]) => out.push(format!("{label}: {name}")),
                _ => {}
            }
        }
    }
    out
}
