//! Cited-reference datasets for a focal country.
//!
//! A citing article is a journal article published in one of the citing
//! years with at least one affiliation in the focal country. Its kept
//! references are articles published 1 to `window_years` years earlier.
//! Each kept (citing, cited) pair becomes one [`ObservationRow`], clustered
//! by the citing article.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, PaperRecord};
use crate::normalize::{fractional_country_counts, PercentileTable};
use crate::{Error, Result};

/// Which paper's language sets the `english_paper` covariate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LanguageSource {
    #[default]
    Cited,
    Citing,
}

pub const ENGLISH: &str = "en";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortSpec {
    pub focal_country: String,
    #[serde(default = "default_citing_years")]
    pub citing_years: Vec<i32>,
    #[serde(default = "default_window")]
    pub window_years: u32,
    /// Countries entered as cited-reference flags, in table order.
    #[serde(default)]
    pub country_set: Vec<String>,
    #[serde(default)]
    pub english_source: LanguageSource,
}

fn default_citing_years() -> Vec<i32> {
    alloc::vec![2004, 2009, 2014]
}

fn default_window() -> u32 {
    3
}

impl CohortSpec {
    pub fn new(focal_country: &str, country_set: &[&str]) -> Self {
        CohortSpec {
            focal_country: focal_country.to_uppercase(),
            citing_years: default_citing_years(),
            window_years: default_window(),
            country_set: country_set.iter().map(|c| c.to_uppercase()).collect(),
            english_source: LanguageSource::Cited,
        }
    }

    /// Uppercases country codes in place.
    pub fn normalize(&mut self) {
        self.focal_country = self.focal_country.to_uppercase();
        for c in &mut self.country_set {
            *c = c.to_uppercase();
        }
    }

    /// Checks everything except the country set, which may still be chosen
    /// from the reference ranking.
    pub fn validate_selection(&self) -> Result<()> {
        if self.focal_country.is_empty() {
            return Err(Error::InvalidArgument("focal country is empty".into()));
        }
        if self.window_years < 1 {
            return Err(Error::InvalidArgument("window_years must be >= 1".into()));
        }
        if self.citing_years.is_empty() {
            return Err(Error::InvalidArgument("citing_years is empty".into()));
        }
        if self.citing_years.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "citing_years must be strictly increasing".into(),
            ));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_selection()?;
        if self.country_set.is_empty() {
            return Err(Error::InvalidArgument("country_set is empty".into()));
        }
        let distinct: BTreeSet<&str> = self.country_set.iter().map(String::as_str).collect();
        if distinct.len() != self.country_set.len() {
            return Err(Error::InvalidArgument(
                "country_set contains duplicates".into(),
            ));
        }
        Ok(())
    }

    /// Citing years with a dummy; the first listed year is the baseline.
    pub fn dummy_years(&self) -> &[i32] {
        &self.citing_years[1..]
    }

    /// Years-back values with a dummy; one year back is the baseline.
    pub fn dummy_years_back(&self) -> impl Iterator<Item = u32> {
        2..=self.window_years
    }

    /// Covariate names in table order (no intercept).
    pub fn covariate_names(&self, include_percentile: bool) -> Vec<String> {
        let mut names: Vec<String> = self
            .dummy_years()
            .iter()
            .map(|y| format!("citing_year_{y}"))
            .collect();
        names.push("citing_num_countries".into());
        names.extend(self.country_set.iter().map(|c| format!("country_{c}")));
        names.extend(self.dummy_years_back().map(|d| format!("years_back_{d}")));
        names.push("cited_num_countries".into());
        names.push("english_paper".into());
        if include_percentile {
            names.push("cited_percentile".into());
        }
        names
    }

    /// Name of the flag for `country` as it appears in design matrices.
    pub fn country_covariate(country: &str) -> String {
        format!("country_{}", country.to_uppercase())
    }
}

/// One cited reference inside one citing article.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationRow {
    pub cluster_id: String,
    pub cited_id: String,
    /// The citing article is highly cited.
    pub y: bool,
    /// Aligned with [`CohortSpec::dummy_years`].
    pub citing_year_flags: Vec<bool>,
    pub citing_num_countries: u32,
    /// Aligned with [`CohortSpec::country_set`].
    pub country_flags: Vec<bool>,
    /// Aligned with [`CohortSpec::dummy_years_back`].
    pub years_back_flags: Vec<bool>,
    pub cited_num_countries: u32,
    pub english_paper: bool,
    pub cited_percentile: f64,
}

fn b(x: bool) -> f64 {
    if x {
        1.0
    } else {
        0.0
    }
}

impl ObservationRow {
    /// Appends the covariates in [`CohortSpec::covariate_names`] order.
    pub fn push_covariates(&self, include_percentile: bool, out: &mut Vec<f64>) {
        out.extend(self.citing_year_flags.iter().map(|&f| b(f)));
        out.push(self.citing_num_countries as f64);
        out.extend(self.country_flags.iter().map(|&f| b(f)));
        out.extend(self.years_back_flags.iter().map(|&f| b(f)));
        out.push(self.cited_num_countries as f64);
        out.push(b(self.english_paper));
        if include_percentile {
            out.push(self.cited_percentile);
        }
    }

    pub fn covariates(&self, include_percentile: bool) -> Vec<f64> {
        let mut v = Vec::new();
        self.push_covariates(include_percentile, &mut v);
        v
    }
}

/// A kept (citing, cited) reference as corpus indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RefPair {
    pub citing: usize,
    pub cited: usize,
}

/// Indices of focal-country articles published in a citing year, ascending.
pub fn select_citing(corpus: &Corpus, spec: &CohortSpec) -> Vec<usize> {
    corpus
        .papers()
        .iter()
        .enumerate()
        .filter(|(_, p)| {
            p.is_article()
                && spec.citing_years.contains(&p.pub_year)
                && p.has_country(&spec.focal_country)
        })
        .map(|(i, _)| i)
        .collect()
}

/// Years between citing and cited publication if the reference is kept.
fn window_gap(citing: &PaperRecord, cited: &PaperRecord, window: u32) -> Option<u32> {
    let gap = citing.pub_year as i64 - cited.pub_year as i64;
    (cited.is_article() && gap >= 1 && gap <= window as i64).then_some(gap as u32)
}

/// References of the given citing papers that are articles published within
/// the window before the citing year. Output is sorted by (citing, cited).
pub fn extract_window_refs(corpus: &Corpus, citing: &[usize], spec: &CohortSpec) -> Vec<RefPair> {
    let mut out = Vec::new();
    for &c in citing {
        let citing_paper = corpus.paper_at(c);
        for r in corpus.references_of(c) {
            if window_gap(citing_paper, corpus.paper_at(r), spec.window_years).is_some() {
                out.push(RefPair {
                    citing: c,
                    cited: r,
                });
            }
        }
    }
    out.sort_unstable();
    out
}

/// Countries ranked by fractional count over the cited papers of `pairs`,
/// one contribution per pair, divided by the number of citing years.
/// Ties are broken by country code.
pub fn top_referenced_countries(
    corpus: &Corpus,
    pairs: &[RefPair],
    spec: &CohortSpec,
    k: usize,
) -> Result<Vec<(String, f64)>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("no cited references".into()));
    }
    let counts = fractional_country_counts(pairs.iter().map(|p| corpus.paper_at(p.cited)));
    let years = spec.citing_years.len().max(1) as f64;
    let mut ranked: Vec<(String, f64)> = counts
        .totals
        .into_iter()
        .map(|(c, t)| (c, t / years))
        .collect();
    // BTreeMap order is by code, so a stable sort on the value keeps ties lexicographic.
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    ranked.truncate(k);
    Ok(ranked)
}

/// Rows plus the number of pairs dropped for a missing covariate.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RowSet {
    pub rows: Vec<ObservationRow>,
    pub dropped: usize,
}

/// One row per kept reference pair, sorted by (cluster id, cited id).
pub fn build_rows(corpus: &Corpus, spec: &CohortSpec, table: &PercentileTable) -> Result<RowSet> {
    spec.validate()?;
    let citing = select_citing(corpus, spec);
    let pairs = extract_window_refs(corpus, &citing, spec);
    Ok(rows_from_pairs(corpus, &pairs, spec, table))
}

/// Builds rows for already extracted pairs (which must come from
/// [`extract_window_refs`] with the same spec).
pub fn rows_from_pairs(
    corpus: &Corpus,
    pairs: &[RefPair],
    spec: &CohortSpec,
    table: &PercentileTable,
) -> RowSet {
    let mut out = RowSet {
        rows: Vec::with_capacity(pairs.len()),
        dropped: 0,
    };
    for pair in pairs {
        let citing = corpus.paper_at(pair.citing);
        let cited = corpus.paper_at(pair.cited);
        let (Some(citing_entry), Some(cited_entry), Some(gap)) = (
            table.get(&citing.paper_id),
            table.get(&cited.paper_id),
            window_gap(citing, cited, spec.window_years),
        ) else {
            out.dropped += 1;
            continue;
        };
        let language = match spec.english_source {
            LanguageSource::Cited => &cited.language,
            LanguageSource::Citing => &citing.language,
        };
        out.rows.push(ObservationRow {
            cluster_id: citing.paper_id.clone(),
            cited_id: cited.paper_id.clone(),
            y: citing_entry.highly_cited,
            citing_year_flags: spec
                .dummy_years()
                .iter()
                .map(|&y| citing.pub_year == y)
                .collect(),
            citing_num_countries: citing.num_countries() as u32,
            country_flags: spec
                .country_set
                .iter()
                .map(|c| cited.has_country(c))
                .collect(),
            years_back_flags: spec.dummy_years_back().map(|d| gap == d).collect(),
            cited_num_countries: cited.num_countries() as u32,
            english_paper: language == ENGLISH,
            cited_percentile: cited_entry.percentile,
        });
    }
    // Pairs arrive sorted by index, and index order is id order.
    out
}

/// One line of the descriptive statistics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStat {
    pub variable: String,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

pub const DEPENDENT_NAME: &str = "highly_cited";

/// Mean, sample standard deviation (n - 1), min and max for the dependent
/// variable followed by every covariate, percentile included.
pub fn summary_stats(rows: &[ObservationRow], spec: &CohortSpec) -> Result<Vec<SummaryStat>> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("summary of zero rows".into()));
    }
    let mut names = alloc::vec![DEPENDENT_NAME.to_owned()];
    names.extend(spec.covariate_names(true));
    let k = names.len();
    let n = rows.len() as f64;

    let mut sum = alloc::vec![0.0; k];
    let mut min = alloc::vec![f64::INFINITY; k];
    let mut max = alloc::vec![f64::NEG_INFINITY; k];
    let mut values = Vec::with_capacity(k);
    let each = |row: &ObservationRow, values: &mut Vec<f64>| {
        values.clear();
        values.push(b(row.y));
        row.push_covariates(true, values);
    };
    for row in rows {
        each(row, &mut values);
        if values.len() != k {
            return Err(Error::SpecMismatch(format!(
                "row `{}` has {} values, spec expects {k}",
                row.cluster_id,
                values.len()
            )));
        }
        for (j, &v) in values.iter().enumerate() {
            sum[j] += v;
            min[j] = min[j].min(v);
            max[j] = max[j].max(v);
        }
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let mut ss = alloc::vec![0.0; k];
    for row in rows {
        each(row, &mut values);
        for (j, &v) in values.iter().enumerate() {
            let d = v - mean[j];
            ss[j] += d * d;
        }
    }
    Ok(names
        .into_iter()
        .enumerate()
        .map(|(j, variable)| SummaryStat {
            variable,
            mean: mean[j],
            sd: if rows.len() > 1 {
                libm::sqrt(ss[j] / (n - 1.0))
            } else {
                0.0
            },
            min: min[j],
            max: max[j],
        })
        .collect())
}

/// Rows per cluster, in cluster-id order.
pub fn cluster_sizes(rows: &[ObservationRow]) -> Vec<(String, usize)> {
    let mut out: Vec<(String, usize)> = Vec::new();
    for row in rows {
        match out.last_mut() {
            Some((id, n)) if *id == row.cluster_id => *n += 1,
            _ => out.push((row.cluster_id.to_string(), 1)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::DocType;
    use crate::normalize::hazen_percentiles;
    use alloc::vec;

    fn paper(id: &str, year: i32, countries: &[&str], doc: DocType) -> PaperRecord {
        PaperRecord::new(id, year, "f", countries.iter(), "en", doc, 0).unwrap()
    }

    fn spec() -> CohortSpec {
        CohortSpec::new("DE", &["US", "DE", "GB"])
    }

    #[test]
    fn spec_validation() {
        let mut s = spec();
        assert!(s.validate().is_ok());
        s.window_years = 0;
        assert!(s.validate().is_err());
        let mut s = spec();
        s.citing_years = vec![2009, 2004];
        assert!(s.validate().is_err());
        let mut s = spec();
        s.country_set.push("US".into());
        assert!(s.validate().is_err());
        let mut s = spec();
        s.country_set.clear();
        assert!(s.validate().is_err());
        assert!(s.validate_selection().is_ok());
    }

    #[test]
    fn covariate_names_follow_table_order() {
        let names = spec().covariate_names(true);
        assert_eq!(
            names,
            vec![
                "citing_year_2009",
                "citing_year_2014",
                "citing_num_countries",
                "country_US",
                "country_DE",
                "country_GB",
                "years_back_2",
                "years_back_3",
                "cited_num_countries",
                "english_paper",
                "cited_percentile",
            ]
        );
        assert_eq!(spec().covariate_names(false).len(), names.len() - 1);
    }

    #[test]
    fn citing_selection() {
        let corpus = Corpus::from_records(
            vec![
                paper("a", 2009, &["DE", "US"], DocType::Article),
                paper("b", 2009, &["US"], DocType::Article),
                paper("c", 2009, &["DE"], DocType::Other),
                paper("d", 2010, &["DE"], DocType::Article),
            ],
            [],
        )
        .unwrap();
        assert_eq!(select_citing(&corpus, &spec()), vec![0]);
    }

    #[test]
    fn window_bounds() {
        let corpus = Corpus::from_records(
            vec![
                paper("c04", 2004, &["DE"], DocType::Article),
                paper("c14", 2014, &["DE"], DocType::Article),
                paper("r01", 2001, &["US"], DocType::Article),
                paper("r04", 2004, &["US"], DocType::Article),
                paper("r10", 2010, &["US"], DocType::Article),
                paper("r11", 2011, &["US"], DocType::Article),
                paper("r12", 2012, &["US"], DocType::Other),
            ],
            [
                ("c04", "r01"),
                ("c04", "r04"),
                ("c14", "r10"),
                ("c14", "r11"),
                ("c14", "r12"),
            ],
        )
        .unwrap();
        let s = spec();
        let citing = select_citing(&corpus, &s);
        let pairs = extract_window_refs(&corpus, &citing, &s);
        let ids: Vec<(&str, &str)> = pairs
            .iter()
            .map(|p| {
                (
                    corpus.paper_at(p.citing).paper_id.as_str(),
                    corpus.paper_at(p.cited).paper_id.as_str(),
                )
            })
            .collect();
        assert_eq!(ids, vec![("c04", "r01"), ("c14", "r11")]);
    }

    #[test]
    fn ranking_counts_per_pair() {
        let corpus = Corpus::from_records(
            vec![
                paper("a", 2009, &["DE"], DocType::Article),
                paper("b", 2009, &["DE"], DocType::Article),
                paper("u", 2008, &["US"], DocType::Article),
                paper("n", 2008, &["DE", "NL"], DocType::Article),
            ],
            [("a", "u"), ("b", "u")],
        )
        .unwrap();
        let mut s = spec();
        s.citing_years = vec![2009];
        let citing = select_citing(&corpus, &s);
        let pairs = extract_window_refs(&corpus, &citing, &s);
        let ranked = top_referenced_countries(&corpus, &pairs, &s, 5).unwrap();
        assert_eq!(ranked, vec![("US".to_string(), 2.0)]);

        let one = [RefPair {
            citing: 0,
            cited: 2,
        }];
        let ranked = top_referenced_countries(&corpus, &one, &s, 5).unwrap();
        assert_eq!(
            ranked,
            vec![("DE".to_string(), 0.5), ("NL".to_string(), 0.5)]
        );
        assert!(top_referenced_countries(&corpus, &one, &s, 0).is_err());
    }

    /// Citing (2009, {DE, US}) tops a 100-paper stratum (percentile 99.5);
    /// cited (2007, {US, GB}, en) tops a 10-paper stratum (percentile 95.0).
    fn worked_example() -> (Corpus, CohortSpec) {
        let mut papers = vec![
            PaperRecord::new("c", 2009, "f", ["DE", "US"], "en", DocType::Article, 1000).unwrap(),
            PaperRecord::new("r", 2007, "g", ["US", "GB"], "en", DocType::Article, 1000).unwrap(),
        ];
        for i in 0..99 {
            papers.push(
                PaperRecord::new(
                    format!("x{i:02}"),
                    2009,
                    "f",
                    ["FR"],
                    "en",
                    DocType::Other,
                    i,
                )
                .unwrap(),
            );
        }
        for i in 0..9 {
            papers.push(
                PaperRecord::new(format!("z{i}"), 2007, "g", ["FR"], "en", DocType::Other, i)
                    .unwrap(),
            );
        }
        let corpus = Corpus::from_records(papers, [("c", "r")]).unwrap();
        (corpus, spec())
    }

    #[test]
    fn row_from_definitions() {
        let (corpus, s) = worked_example();
        let table = hazen_percentiles(&corpus);
        let rows = build_rows(&corpus, &s, &table).unwrap();
        assert_eq!(rows.dropped, 0);
        assert_eq!(rows.rows.len(), 1);
        let row = &rows.rows[0];
        assert_eq!(row.cluster_id, "c");
        assert!(row.y);
        assert_eq!(row.citing_year_flags, vec![true, false]);
        assert_eq!(row.citing_num_countries, 2);
        // country set [US, DE, GB]
        assert_eq!(row.country_flags, vec![true, false, true]);
        assert_eq!(row.years_back_flags, vec![true, false]);
        assert_eq!(row.cited_num_countries, 2);
        assert!(row.english_paper);
        assert_eq!(row.cited_percentile, 95.0);
    }

    #[test]
    fn missing_percentile_drops_row() {
        let (corpus, s) = worked_example();
        let mut table = hazen_percentiles(&corpus);
        table.remove("r");
        let rows = build_rows(&corpus, &s, &table).unwrap();
        assert!(rows.rows.is_empty());
        assert_eq!(rows.dropped, 1);
    }

    #[test]
    fn language_switch() {
        let citing = PaperRecord::new("c", 2009, "f", ["DE"], "de", DocType::Article, 0).unwrap();
        let cited = PaperRecord::new("r", 2008, "g", ["US"], "en", DocType::Article, 0).unwrap();
        let corpus = Corpus::from_records(vec![citing, cited], [("c", "r")]).unwrap();
        let table = hazen_percentiles(&corpus);
        let mut s = spec();
        assert!(build_rows(&corpus, &s, &table).unwrap().rows[0].english_paper);
        s.english_source = LanguageSource::Citing;
        assert!(!build_rows(&corpus, &s, &table).unwrap().rows[0].english_paper);
    }

    fn row_with(y: bool, pct: f64) -> ObservationRow {
        ObservationRow {
            cluster_id: "c".into(),
            cited_id: "r".into(),
            y,
            citing_year_flags: vec![false, false],
            citing_num_countries: 1,
            country_flags: vec![false, false, false],
            years_back_flags: vec![false, false],
            cited_num_countries: 1,
            english_paper: true,
            cited_percentile: pct,
        }
    }

    #[test]
    fn summary_examples() {
        let s = spec();
        let stats = summary_stats(&[row_with(false, 80.0), row_with(false, 82.0)], &s).unwrap();
        assert_eq!(stats[0].variable, DEPENDENT_NAME);
        assert_eq!((stats[0].mean, stats[0].sd), (0.0, 0.0));
        let pct = stats.last().unwrap();
        assert_eq!(pct.variable, "cited_percentile");
        assert_eq!(pct.mean, 81.0);
        assert!((pct.sd - libm::sqrt(2.0)).abs() < 1e-12);
        assert_eq!((pct.min, pct.max), (80.0, 82.0));
        assert!(matches!(
            summary_stats(&[], &s),
            Err(Error::InvalidArgument(_))
        ));
    }
}
