//! Seeded synthetic corpora with known coefficients.
//!
//! One plan drives both outputs. [`generate_rows`] turns the plan straight
//! into observation rows; [`generate_corpus`] turns it into papers and
//! citation edges shaped so that the real pipeline (percentiles, cohort
//! selection, window extraction, row building) gives back exactly the same
//! rows.
//!
//! Cited papers live in pool strata of `pool_stratum_size` papers per
//! (field, year) with citation counts `rank - 1`, so a paper's percentile is
//! fixed by its rank. Rank `r` holds a citable paper with probability
//! `((r - 0.5) / N)^k`, the other ranks hold uncited fillers, and `k` is
//! solved so the expected percentile of a citable paper is
//! `percentile_mean`.
//!
//! Citing articles are placed in strata of 50: a highly cited article takes
//! the top rank (Hazen percentile exactly 99) and the rest of its stratum is
//! filled with articles that are not highly cited and then with fillers.
//! Remaining articles go in strata of at most 49, where no rank reaches 99.
//!
//! In singleton mode every article has one reference and
//! `y ~ Bernoulli(logistic(βᵀx))` per row. In clustered mode an article has
//! `1 + Poisson(refs_per_citing - 1)` distinct references, leans towards or
//! away from domestic references, and one `y` drawn from the mean of its
//! rows' covariates is shared by all of them.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::cohort::{CohortSpec, LanguageSource, ObservationRow, ENGLISH};
use crate::corpus::{Corpus, CorpusBuilder, DocType, PaperRecord};
use crate::normalize::{hazen, HIGHLY_CITED_THRESHOLD};
use crate::regress::{logistic, ModelSpec, INTERCEPT};
use crate::rng::{self, Stream};
use crate::{Error, Result};

const POOL_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;
const ARTICLE_STREAM: u64 = 1 << 32;

/// Attempts at drawing a reference not already in the article's list.
const DISTINCT_TRIES: usize = 64;

const NON_ENGLISH: [&str; 5] = ["de", "fr", "es", "ja", "zh"];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthMode {
    #[default]
    Singleton,
    Clustered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountryWeight {
    pub code: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coefficient {
    pub name: String,
    pub value: f64,
}

/// Generator settings. Missing JSON fields take the [`SynthConfig::reference`]
/// values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_citing: usize,
    pub mode: SynthMode,
    /// Mean references per citing article in clustered mode (at least 1).
    pub refs_per_citing: f64,
    pub focal_country: String,
    pub citing_years: Vec<i32>,
    pub citing_year_weights: Vec<f64>,
    pub window_years: u32,
    /// Weights of 1, 2, ... `window_years` years back.
    pub years_back_weights: Vec<f64>,
    /// Country pool with citation-share weights.
    pub countries: Vec<CountryWeight>,
    /// Countries entered as cited-reference flags.
    pub country_set: Vec<String>,
    /// Poisson mean of countries beyond the focal one on citing articles.
    pub citing_extra_countries: f64,
    /// Poisson mean of countries beyond the first on cited papers.
    pub cited_extra_countries: f64,
    pub english_share: f64,
    /// Target mean percentile of cited papers.
    pub percentile_mean: f64,
    pub pool_stratum_size: usize,
    /// Expected citations received per cited paper.
    pub refs_per_pool_paper: f64,
    /// Decoy papers and edges the cohort filters must discard, per citing article.
    pub noise_share: f64,
    pub census_year: i32,
    /// Whether the cited percentile enters the true model.
    pub include_percentile: bool,
    /// Coefficients in design order, intercept first.
    pub true_beta: Vec<Coefficient>,
}

const REFERENCE_TOP: [(&str, f64); 10] = [
    ("US", 0.25),
    ("DE", 0.25),
    ("GB", 0.07),
    ("FR", 0.054),
    ("JP", 0.038),
    ("CN", 0.032),
    ("IT", 0.032),
    ("CA", 0.027),
    ("CH", 0.032),
    ("NL", 0.027),
];

const REFERENCE_TAIL: [&str; 35] = [
    "ES", "AU", "SE", "BE", "AT", "DK", "KR", "IN", "RU", "PL", "BR", "IL", "FI", "NO", "TW", "CZ",
    "IE", "NZ", "PT", "GR", "HU", "ZA", "MX", "SG", "AR", "TR", "CL", "HR", "SI", "SK", "EE", "IR",
    "EG", "TH", "MY",
];

/// Reference truth in log odds, close to the German model B odds ratios.
const REFERENCE_BETA: [(&str, f64); 19] = [
    ("intercept", -5.35),
    ("citing_year_2009", 0.131),
    ("citing_year_2014", 0.358),
    ("citing_num_countries", 0.113),
    ("country_US", 0.215),
    ("country_DE", -0.116_533_816_255_951_5),
    ("country_GB", 0.207),
    ("country_FR", 0.104),
    ("country_JP", 0.049),
    ("country_CN", 0.157),
    ("country_IT", 0.140),
    ("country_CA", 0.231),
    ("country_CH", -0.094),
    ("country_NL", 0.095),
    ("years_back_2", -0.094),
    ("years_back_3", -0.274),
    ("cited_num_countries", -0.0726),
    ("english_paper", -0.151),
    ("cited_percentile", 0.0392),
];

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig::reference()
    }
}

impl SynthConfig {
    /// German-cohort shaped defaults: 50,000 single-reference articles, a
    /// 45-country pool and a domestic flag with odds ratio 0.89.
    pub fn reference() -> Self {
        let mut countries: Vec<CountryWeight> = REFERENCE_TOP
            .iter()
            .map(|&(code, weight)| CountryWeight {
                code: code.into(),
                weight,
            })
            .collect();
        let mut w = 0.012;
        for code in REFERENCE_TAIL {
            countries.push(CountryWeight {
                code: code.into(),
                weight: w,
            });
            w *= 0.9487;
        }
        SynthConfig {
            n_citing: 50_000,
            mode: SynthMode::Singleton,
            refs_per_citing: 7.5,
            focal_country: "DE".into(),
            citing_years: vec![2004, 2009, 2014],
            citing_year_weights: vec![0.23, 0.31, 0.46],
            window_years: 3,
            years_back_weights: vec![0.31, 0.36, 0.33],
            countries,
            country_set: REFERENCE_TOP.iter().map(|&(c, _)| c.into()).collect(),
            citing_extra_countries: 1.41,
            cited_extra_countries: 0.86,
            english_share: 0.9975,
            percentile_mean: 80.3,
            pool_stratum_size: 40,
            refs_per_pool_paper: 5.0,
            noise_share: 0.05,
            census_year: 2017,
            include_percentile: true,
            true_beta: REFERENCE_BETA
                .iter()
                .map(|&(name, value)| Coefficient {
                    name: name.into(),
                    value,
                })
                .collect(),
        }
    }

    /// Reference settings with the coefficients of every covariate set to
    /// zero except the intercept.
    pub fn null_model(mut self) -> Self {
        for c in &mut self.true_beta {
            if c.name != INTERCEPT {
                c.value = 0.0;
            }
        }
        self
    }

    pub fn cohort_spec(&self) -> CohortSpec {
        let mut spec = CohortSpec {
            focal_country: self.focal_country.clone(),
            citing_years: self.citing_years.clone(),
            window_years: self.window_years,
            country_set: self.country_set.clone(),
            english_source: LanguageSource::Cited,
        };
        spec.normalize();
        spec
    }

    pub fn model(&self) -> ModelSpec {
        ModelSpec {
            include_percentile: self.include_percentile,
        }
    }

    /// Names of the true coefficients: the intercept then the covariates.
    pub fn design_names(&self) -> Vec<String> {
        let mut names = vec![String::from(INTERCEPT)];
        names.extend(self.cohort_spec().covariate_names(self.include_percentile));
        names
    }

    /// True coefficients in design order.
    pub fn true_beta_vector(&self) -> Vec<f64> {
        self.true_beta.iter().map(|c| c.value).collect()
    }

    /// Sets one true coefficient by name.
    pub fn set_beta(&mut self, name: &str, value: f64) -> Result<()> {
        let c = self
            .true_beta
            .iter_mut()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::KeyNotFound(format!("coefficient `{name}`")))?;
        c.value = value;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        self.cohort_spec().validate()?;
        if !(self.refs_per_citing.is_finite() && self.refs_per_citing >= 1.0) {
            return bad(format!(
                "refs_per_citing must be >= 1, got {}",
                self.refs_per_citing
            ));
        }
        check_weights(
            "citing_year_weights",
            &self.citing_year_weights,
            self.citing_years.len(),
        )?;
        check_weights(
            "years_back_weights",
            &self.years_back_weights,
            self.window_years as usize,
        )?;
        let weights: Vec<f64> = self.countries.iter().map(|c| c.weight).collect();
        check_weights("country weights", &weights, self.countries.len())?;
        let mut codes: Vec<String> = self
            .countries
            .iter()
            .map(|c| c.code.to_uppercase())
            .collect();
        if codes.iter().any(|c| c.is_empty()) {
            return bad("empty country code in pool".into());
        }
        codes.sort_unstable();
        if codes.windows(2).any(|w| w[0] == w[1]) {
            return bad("country pool contains duplicates".into());
        }
        let focal = self.focal_country.to_uppercase();
        if !self
            .countries
            .iter()
            .any(|c| c.weight > 0.0 && c.code.to_uppercase() != focal)
        {
            return bad("country pool needs a weighted country besides the focal one".into());
        }
        for (name, v) in [
            ("citing_extra_countries", self.citing_extra_countries),
            ("cited_extra_countries", self.cited_extra_countries),
        ] {
            if !(v.is_finite() && (0.0..=30.0).contains(&v)) {
                return bad(format!("{name} must be in [0, 30], got {v}"));
            }
        }
        for (name, v) in [
            ("english_share", self.english_share),
            ("noise_share", self.noise_share),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must be in [0, 1], got {v}"));
            }
        }
        if !(2..=9999).contains(&self.pool_stratum_size) {
            return bad("pool_stratum_size must be in [2, 9999]".into());
        }
        if !(self.refs_per_pool_paper.is_finite() && self.refs_per_pool_paper > 0.0) {
            return bad("refs_per_pool_paper must be positive".into());
        }
        inclusion_exponent(self.percentile_mean, self.pool_stratum_size)?;
        let names = self.design_names();
        let given: Vec<&str> = self.true_beta.iter().map(|c| c.name.as_str()).collect();
        if given != names.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(Error::SpecMismatch(format!(
                "true_beta must name [{}] in this order",
                names.join(", ")
            )));
        }
        if self.true_beta.iter().any(|c| !c.value.is_finite()) {
            return bad("true_beta values must be finite".into());
        }
        Ok(())
    }
}

fn check_weights(name: &str, w: &[f64], len: usize) -> Result<()> {
    if w.len() != len {
        return Err(Error::InvalidArgument(format!(
            "{name}: expected {len} weights, got {}",
            w.len()
        )));
    }
    if w.iter().any(|&x| !(x.is_finite() && x >= 0.0)) || w.iter().sum::<f64>() <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "{name}: weights must be nonnegative with a positive sum"
        )));
    }
    Ok(())
}

fn rank_position(r: usize, n: usize) -> f64 {
    (r as f64 - 0.5) / n as f64
}

/// Expected percentile of a citable paper for inclusion exponent `k`.
fn expected_percentile(k: f64, n: usize) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for r in 1..=n {
        let q = libm::pow(rank_position(r, n), k);
        num += q * hazen(r as f64, n);
        den += q;
    }
    num / den
}

const MAX_EXPONENT: f64 = 500.0;

/// Solves `expected_percentile(k) = target` by bisection.
fn inclusion_exponent(target: f64, n: usize) -> Result<f64> {
    let (lo_mean, hi_mean) = (
        expected_percentile(0.0, n),
        expected_percentile(MAX_EXPONENT, n),
    );
    if !(target >= lo_mean && target <= hi_mean) {
        return Err(Error::InvalidArgument(format!(
            "percentile_mean must be in [{lo_mean:.3}, {hi_mean:.3}] for strata of {n}, got {target}"
        )));
    }
    let (mut lo, mut hi) = (0.0, MAX_EXPONENT);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if expected_percentile(mid, n) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Smallest stratum whose top rank alone reaches the highly-cited threshold.
fn citing_block_size() -> usize {
    (1..)
        .find(|&n| hazen(n as f64, n) >= HIGHLY_CITED_THRESHOLD)
        .unwrap()
}

/// Draws `count` distinct indices with probability proportional to `weights`.
fn draw_distinct(s: &mut Stream, weights: &[f64], count: usize, out: &mut Vec<u16>) {
    let mut w = weights.to_vec();
    let available = w.iter().filter(|&&x| x > 0.0).count();
    for _ in 0..count.min(available) {
        let i = s.categorical(&w);
        w[i] = 0.0;
        out.push(i as u16);
    }
    out.sort_unstable();
}

struct PoolPaper {
    year: i32,
    stratum: usize,
    rank: usize,
    /// Indices into the sorted country pool.
    countries: Vec<u16>,
    language: &'static str,
}

struct PoolStratum {
    year: i32,
    /// Citable ranks, ascending.
    ranks: Vec<usize>,
}

struct Article {
    year: i32,
    extras: Vec<u16>,
    /// Pool indices, ascending (id order).
    refs: Vec<u32>,
    y: bool,
}

/// Everything both outputs are derived from.
struct Plan {
    codes: Vec<String>,
    focal: String,
    stratum_size: usize,
    pool: Vec<PoolPaper>,
    strata: Vec<PoolStratum>,
    articles: Vec<Article>,
}

fn pool_id(p: &PoolPaper) -> String {
    format!("R{:04}-{:05}-{:04}", p.year, p.stratum, p.rank)
}

fn article_id(i: usize) -> String {
    format!("A{i:08}")
}

fn pool_field(year: i32, stratum: usize) -> String {
    format!("P{year:04}-{stratum:05}")
}

impl Plan {
    fn build(config: &SynthConfig, seed: u64) -> Result<Plan> {
        config.validate()?;
        let spec = config.cohort_spec();
        let mut pool_countries: Vec<(String, f64)> = config
            .countries
            .iter()
            .map(|c| (c.code.to_uppercase(), c.weight))
            .collect();
        pool_countries.sort_by(|a, b| a.0.cmp(&b.0));
        let codes: Vec<String> = pool_countries.iter().map(|c| c.0.clone()).collect();
        let weights: Vec<f64> = pool_countries.iter().map(|c| c.1).collect();
        let non_focal: Vec<f64> = pool_countries
            .iter()
            .map(|(c, w)| if *c == spec.focal_country { 0.0 } else { *w })
            .collect();
        let mut plan = Plan {
            codes,
            focal: spec.focal_country.clone(),
            stratum_size: config.pool_stratum_size,
            pool: Vec::new(),
            strata: Vec::new(),
            articles: Vec::new(),
        };
        if config.n_citing == 0 {
            return Ok(plan);
        }

        let n = config.pool_stratum_size;
        let k = inclusion_exponent(config.percentile_mean, n)?;
        let inclusion: Vec<f64> = (1..=n).map(|r| libm::pow(rank_position(r, n), k)).collect();
        let per_stratum: f64 = inclusion.iter().sum();
        let refs_mean = match config.mode {
            SynthMode::Singleton => 1.0,
            SynthMode::Clustered => config.refs_per_citing,
        };
        let year_w_sum: f64 = config.citing_year_weights.iter().sum();
        let back_w_sum: f64 = config.years_back_weights.iter().sum();
        let window = config.window_years as i32;
        let mut pool_years: Vec<i32> = config
            .citing_years
            .iter()
            .flat_map(|&c| (1..=window).map(move |d| c - d))
            .collect();
        pool_years.sort_unstable();
        pool_years.dedup();

        // Pool: strata sized so each citable paper is cited about
        // `refs_per_pool_paper` times.
        let mut s = Stream::new(seed, POOL_STREAM);
        let mut year_index: Vec<(i32, usize, usize)> = Vec::new();
        for &year in &pool_years {
            let expected_refs: f64 = config
                .citing_years
                .iter()
                .zip(&config.citing_year_weights)
                .filter_map(|(&c, &w)| {
                    let d = c - year;
                    (1..=window).contains(&d).then(|| {
                        w / year_w_sum * config.years_back_weights[(d - 1) as usize] / back_w_sum
                    })
                })
                .sum::<f64>()
                * config.n_citing as f64
                * refs_mean;
            let strata = libm::ceil(expected_refs / config.refs_per_pool_paper / per_stratum)
                .max(1.0) as usize;
            let start = plan.pool.len();
            for st in 0..strata {
                let mut ranks = Vec::new();
                for (r, &q) in (1..=n).zip(&inclusion) {
                    if s.bernoulli(q) {
                        ranks.push(r);
                    }
                }
                if st + 1 == strata && plan.pool.len() == start && ranks.is_empty() {
                    ranks.push(n);
                }
                for &r in &ranks {
                    let mut countries = Vec::new();
                    let extra = s.poisson(config.cited_extra_countries) as usize;
                    draw_distinct(&mut s, &weights, 1 + extra, &mut countries);
                    let language = if s.bernoulli(config.english_share) {
                        ENGLISH
                    } else {
                        NON_ENGLISH[s.below(NON_ENGLISH.len())]
                    };
                    plan.pool.push(PoolPaper {
                        year,
                        stratum: st,
                        rank: r,
                        countries,
                        language,
                    });
                }
                plan.strata.push(PoolStratum { year, ranks });
            }
            year_index.push((year, start, plan.pool.len()));
        }
        let pool_range = |year: i32| {
            let i = year_index.binary_search_by_key(&year, |e| e.0).unwrap();
            (year_index[i].1, year_index[i].2)
        };

        let focal_pool = plan.codes.iter().position(|c| *c == plan.focal);
        let is_domestic =
            |p: &PoolPaper| focal_pool.is_some_and(|f| p.countries.contains(&(f as u16)));
        let beta = config.true_beta_vector();
        let set_index: Vec<Option<u16>> = spec
            .country_set
            .iter()
            .map(|c| plan.codes.iter().position(|x| x == c).map(|i| i as u16))
            .collect();

        let mut x = Vec::with_capacity(beta.len());
        let mut mean_x = vec![0.0; beta.len()];
        for i in 0..config.n_citing {
            let mut s = Stream::new(seed, ARTICLE_STREAM + i as u64);
            let year = config.citing_years[s.categorical(&config.citing_year_weights)];
            let mut extras = Vec::new();
            let extra = s.poisson(config.citing_extra_countries) as usize;
            draw_distinct(&mut s, &non_focal, extra, &mut extras);
            let m = match config.mode {
                SynthMode::Singleton => 1,
                SynthMode::Clustered => 1 + s.poisson(config.refs_per_citing - 1.0) as usize,
            };
            let lean = match config.mode {
                SynthMode::Singleton => None,
                SynthMode::Clustered => Some(s.uniform()),
            };
            let mut refs: Vec<u32> = Vec::with_capacity(m);
            for _ in 0..m {
                for _ in 0..DISTINCT_TRIES {
                    let d = 1 + s.categorical(&config.years_back_weights) as i32;
                    let (lo, hi) = pool_range(year - d);
                    let mut pick = lo + s.below(hi - lo);
                    if let Some(lean) = lean {
                        if s.bernoulli(lean) != is_domestic(&plan.pool[pick]) {
                            pick = lo + s.below(hi - lo);
                        }
                    }
                    if !refs.contains(&(pick as u32)) {
                        refs.push(pick as u32);
                        break;
                    }
                }
            }
            refs.sort_unstable();

            let citing_countries = extras.len() + 1;
            mean_x.iter_mut().for_each(|v| *v = 0.0);
            let mut eta_rows = Vec::with_capacity(refs.len());
            for &r in &refs {
                let row = plan.row_values(
                    &spec,
                    &set_index,
                    year,
                    citing_countries,
                    &plan.pool[r as usize],
                );
                x.clear();
                x.push(1.0);
                row.push_covariates(config.include_percentile, &mut x);
                for (acc, v) in mean_x.iter_mut().zip(&x) {
                    *acc += v;
                }
                eta_rows.push(dot(&beta, &x));
            }
            let eta = match config.mode {
                SynthMode::Singleton => eta_rows[0],
                SynthMode::Clustered => {
                    let m = refs.len() as f64;
                    mean_x.iter_mut().for_each(|v| *v /= m);
                    dot(&beta, &mean_x)
                }
            };
            let y = s.bernoulli(logistic(eta));
            plan.articles.push(Article {
                year,
                extras,
                refs,
                y,
            });
        }
        Ok(plan)
    }

    fn citing_countries(&self, a: &Article) -> Vec<String> {
        let mut out = vec![self.focal.clone()];
        out.extend(a.extras.iter().map(|&i| self.codes[i as usize].clone()));
        out.sort_unstable();
        out
    }

    fn row_values(
        &self,
        spec: &CohortSpec,
        set_index: &[Option<u16>],
        citing_year: i32,
        citing_countries: usize,
        cited: &PoolPaper,
    ) -> ObservationRow {
        let gap = (citing_year - cited.year) as u32;
        ObservationRow {
            cluster_id: String::new(),
            cited_id: String::new(),
            y: false,
            citing_year_flags: spec
                .dummy_years()
                .iter()
                .map(|&y| y == citing_year)
                .collect(),
            citing_num_countries: citing_countries as u32,
            country_flags: set_index
                .iter()
                .map(|i| i.is_some_and(|i| cited.countries.contains(&i)))
                .collect(),
            years_back_flags: spec.dummy_years_back().map(|d| d == gap).collect(),
            cited_num_countries: cited.countries.len() as u32,
            english_paper: cited.language == ENGLISH,
            cited_percentile: hazen(cited.rank as f64, self.stratum_size),
        }
    }

    fn rows(&self, config: &SynthConfig) -> Vec<ObservationRow> {
        let spec = config.cohort_spec();
        let set_index: Vec<Option<u16>> = spec
            .country_set
            .iter()
            .map(|c| self.codes.iter().position(|x| x == c).map(|i| i as u16))
            .collect();
        let mut rows = Vec::new();
        for (i, a) in self.articles.iter().enumerate() {
            let cluster_id = article_id(i);
            for &r in &a.refs {
                let cited = &self.pool[r as usize];
                let mut row = self.row_values(&spec, &set_index, a.year, a.extras.len() + 1, cited);
                row.cluster_id = cluster_id.clone();
                row.cited_id = pool_id(cited);
                row.y = a.y;
                rows.push(row);
            }
        }
        rows.sort_by(|a, b| (&a.cluster_id, &a.cited_id).cmp(&(&b.cluster_id, &b.cited_id)));
        rows
    }

    fn corpus(&self, config: &SynthConfig, seed: u64) -> Result<Corpus> {
        if self.articles.is_empty() {
            return Ok(Corpus::empty(config.census_year));
        }
        let filler_country = self
            .codes
            .iter()
            .zip(&config.countries_sorted_weights())
            .find(|(c, &w)| **c != self.focal && w > 0.0)
            .map(|(c, _)| c.clone())
            .unwrap();
        // Generated fields are already normalized, so records are built
        // directly; the builder still checks every one.
        let record = |paper_id: String,
                      pub_year: i32,
                      field: String,
                      countries: Vec<String>,
                      language: &str,
                      doc_type: DocType,
                      cites: usize| PaperRecord {
            paper_id,
            pub_year,
            field,
            countries,
            language: String::from(language),
            doc_type,
            citation_count: cites as u64,
        };
        // Kept apart by id prefix so the concatenation is already in id order.
        let mut papers = Vec::with_capacity(self.articles.len());
        let highly_cited = self.articles.iter().filter(|a| a.y).count();
        let mut fillers = Vec::with_capacity(citing_block_size() * highly_cited);
        let mut noise = Vec::new();
        let mut pool_fillers = Vec::with_capacity(self.strata.len() * self.stratum_size);
        let mut cited = Vec::with_capacity(self.pool.len());
        let mut edges: Vec<(String, String)> = Vec::new();

        // Citing articles in strata of `block`, each highly cited one on top.
        let block = citing_block_size();
        let mut filler = 0usize;
        let mut citing_field: Vec<(String, usize)> = vec![(String::new(), 0); self.articles.len()];
        for &year in &config.citing_years {
            let (ones, zeros): (Vec<usize>, Vec<usize>) = (0..self.articles.len())
                .filter(|&i| self.articles[i].year == year)
                .partition(|&i| self.articles[i].y);
            let mut zeros = zeros.into_iter();
            let mut stratum = 0usize;
            let mut place =
                |members: Vec<usize>, size: usize, papers: &mut Vec<PaperRecord>| -> Result<()> {
                    let field = format!("C{year:04}-{stratum:06}");
                    stratum += 1;
                    // members are listed from the top rank down
                    for (pos, &i) in members.iter().enumerate() {
                        citing_field[i] = (field.clone(), size - 1 - pos);
                    }
                    for rank in 1..=size - members.len() {
                        papers.push(record(
                            format!("F{filler:09}"),
                            year,
                            field.clone(),
                            vec![filler_country.clone()],
                            ENGLISH,
                            DocType::Article,
                            rank - 1,
                        ));
                        filler += 1;
                    }
                    Ok(())
                };
            for &one in &ones {
                let mut members = vec![one];
                members.extend(zeros.by_ref().take(block - 1));
                place(members, block, &mut fillers)?;
            }
            let rest: Vec<usize> = zeros.collect();
            for chunk in rest.chunks(block - 1) {
                place(chunk.to_vec(), chunk.len(), &mut fillers)?;
            }
        }
        for (i, a) in self.articles.iter().enumerate() {
            let (field, cites) = core::mem::take(&mut citing_field[i]);
            let id = article_id(i);
            for &r in &a.refs {
                edges.push((id.clone(), pool_id(&self.pool[r as usize])));
            }
            papers.push(record(
                id,
                a.year,
                field,
                self.citing_countries(a),
                ENGLISH,
                DocType::Article,
                cites,
            ));
        }

        // Pool strata: citable papers at their ranks, fillers elsewhere.
        let mut cursor = 0;
        let mut per_year_stratum = (i32::MIN, 0usize);
        for stratum in &self.strata {
            if per_year_stratum.0 != stratum.year {
                per_year_stratum = (stratum.year, 0);
            }
            let st = per_year_stratum.1;
            per_year_stratum.1 += 1;
            let field = pool_field(stratum.year, st);
            let mut ranks = stratum.ranks.iter().peekable();
            for rank in 1..=self.stratum_size {
                if ranks.peek() == Some(&&rank) {
                    ranks.next();
                    let p = &self.pool[cursor];
                    cursor += 1;
                    cited.push(record(
                        pool_id(p),
                        p.year,
                        field.clone(),
                        p.countries
                            .iter()
                            .map(|&c| self.codes[c as usize].clone())
                            .collect(),
                        p.language,
                        DocType::Article,
                        rank - 1,
                    ));
                } else {
                    // Uncited fillers; every other one is not an article.
                    let doc = if rank % 2 == 0 {
                        DocType::Other
                    } else {
                        DocType::Article
                    };
                    pool_fillers.push(record(
                        format!("Q{:04}-{st:05}-{rank:04}", stratum.year),
                        stratum.year,
                        field.clone(),
                        vec![filler_country.clone()],
                        ENGLISH,
                        doc,
                        rank - 1,
                    ));
                }
            }
        }

        self.noise(config, seed, &filler_country, &mut noise, &mut edges)?;
        let total = papers.len() + fillers.len() + noise.len() + pool_fillers.len() + cited.len();
        let mut builder = CorpusBuilder::with_capacity(total);
        for p in papers
            .into_iter()
            .chain(fillers)
            .chain(noise)
            .chain(pool_fillers)
            .chain(cited)
        {
            builder
                .add_paper(p)
                .map_err(|e| Error::InvalidArgument(format!("generated paper: {e}")))?;
        }
        let mut draft = builder.finish_papers()?;
        for (citing, cited) in &edges {
            draft.add_citation(citing, cited)?;
        }
        draft.set_census_year(config.census_year);
        draft.validate()
    }

    /// Decoys the cohort filters must drop: non-focal or non-article citing
    /// papers, and references outside the window or to non-articles.
    fn noise(
        &self,
        config: &SynthConfig,
        seed: u64,
        other_country: &str,
        papers: &mut Vec<PaperRecord>,
        edges: &mut Vec<(String, String)>,
    ) -> Result<()> {
        let count = libm::round(config.noise_share * self.articles.len() as f64) as usize;
        let mut s = Stream::new(seed, NOISE_STREAM);
        let window = config.window_years as i32;
        for j in 0..count {
            let id = format!("N{j:08}");
            let a = s.below(self.articles.len());
            let article = &self.articles[a];
            let year = article.year;
            let (paper, edge) = match j % 4 {
                // focal non-article citing a pool paper
                0 => (
                    (year, vec![self.focal.clone()], DocType::Other),
                    (id.clone(), pool_id(&self.pool[article.refs[0] as usize])),
                ),
                // non-focal article citing a pool paper
                1 => (
                    (year, vec![String::from(other_country)], DocType::Article),
                    (id.clone(), pool_id(&self.pool[article.refs[0] as usize])),
                ),
                // article cited from outside the window
                2 => {
                    let cited_year = if s.bernoulli(0.5) {
                        year
                    } else {
                        year - window - 1
                    };
                    (
                        (
                            cited_year,
                            vec![String::from(other_country)],
                            DocType::Article,
                        ),
                        (article_id(a), id.clone()),
                    )
                }
                // non-article cited inside the window
                _ => {
                    let d = 1 + s.below(window as usize) as i32;
                    (
                        (year - d, vec![String::from(other_country)], DocType::Other),
                        (article_id(a), id.clone()),
                    )
                }
            };
            let (y, countries, doc) = paper;
            papers.push(
                PaperRecord::new(id, y, "N", countries, ENGLISH, doc, s.below(100) as u64)
                    .map_err(|e| Error::InvalidArgument(format!("generated paper: {e}")))?,
            );
            edges.push(edge);
        }
        Ok(())
    }
}

impl SynthConfig {
    fn countries_sorted_weights(&self) -> Vec<f64> {
        let mut c: Vec<(String, f64)> = self
            .countries
            .iter()
            .map(|c| (c.code.to_uppercase(), c.weight))
            .collect();
        c.sort_by(|a, b| a.0.cmp(&b.0));
        c.into_iter().map(|c| c.1).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Observation rows drawn from the true model, sorted by (cluster id, cited
/// id), and the true coefficients in design order.
pub fn generate_rows(config: &SynthConfig, seed: u64) -> Result<(Vec<ObservationRow>, Vec<f64>)> {
    let plan = Plan::build(config, seed)?;
    Ok((plan.rows(config), config.true_beta_vector()))
}

/// A corpus whose pipeline rows equal [`generate_rows`] for the same inputs.
pub fn generate_corpus(config: &SynthConfig, seed: u64) -> Result<Corpus> {
    let plan = Plan::build(config, seed)?;
    plan.corpus(config, seed)
}

/// Ground truth echoed next to a generated corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub rng: String,
    pub mode: SynthMode,
    pub model: String,
    pub coefficients: Vec<Coefficient>,
    /// Exponent of the rank inclusion law of cited papers.
    pub inclusion_exponent: f64,
    pub n_citing: usize,
    pub n_rows: usize,
    pub highly_cited_articles: usize,
}

/// Generates the corpus together with its ground truth.
pub fn generate(config: &SynthConfig, seed: u64) -> Result<(Corpus, GroundTruth)> {
    let plan = Plan::build(config, seed)?;
    let corpus = plan.corpus(config, seed)?;
    let truth = GroundTruth {
        seed,
        rng: String::from(rng::ALGORITHM),
        mode: config.mode,
        model: String::from(config.model().label()),
        coefficients: config.true_beta.clone(),
        inclusion_exponent: inclusion_exponent(config.percentile_mean, config.pool_stratum_size)?,
        n_citing: plan.articles.len(),
        n_rows: plan.articles.iter().map(|a| a.refs.len()).sum(),
        highly_cited_articles: plan.articles.iter().filter(|a| a.y).count(),
    };
    Ok((corpus, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::{build_rows, cluster_sizes};
    use crate::normalize::hazen_percentiles;

    fn small(n: usize, mode: SynthMode) -> SynthConfig {
        let mut c = SynthConfig::reference();
        c.n_citing = n;
        c.mode = mode;
        c
    }

    fn pipeline_rows(config: &SynthConfig, seed: u64) -> Vec<ObservationRow> {
        let corpus = generate_corpus(config, seed).unwrap();
        corpus.validate().unwrap();
        let table = hazen_percentiles(&corpus);
        let set = build_rows(&corpus, &config.cohort_spec(), &table).unwrap();
        assert_eq!(set.dropped, 0);
        set.rows
    }

    #[test]
    fn reference_config_is_valid() {
        let c = SynthConfig::reference();
        c.validate().unwrap();
        assert_eq!(c.countries.len(), 45);
        assert_eq!(c.design_names().len(), c.true_beta.len());
        assert_eq!(
            libm::exp(
                c.true_beta[c
                    .design_names()
                    .iter()
                    .position(|n| n == "country_DE")
                    .unwrap()]
                .value
            ),
            0.89
        );
    }

    #[test]
    fn pipeline_reproduces_generated_rows() {
        for mode in [SynthMode::Singleton, SynthMode::Clustered] {
            let config = small(1500, mode);
            let (rows, beta) = generate_rows(&config, 11).unwrap();
            assert_eq!(beta, config.true_beta_vector());
            assert!(rows.iter().any(|r| r.y));
            assert_eq!(pipeline_rows(&config, 11), rows);
        }
    }

    #[test]
    fn noise_is_present_and_filtered() {
        let config = small(800, SynthMode::Singleton);
        let corpus = generate_corpus(&config, 3).unwrap();
        let noise = corpus
            .papers()
            .iter()
            .filter(|p| p.paper_id.starts_with('N'))
            .count();
        assert_eq!(noise, 40);
        assert_eq!(corpus.edge_count(), 800 + noise);
        let spec = config.cohort_spec();
        let citing = crate::cohort::select_citing(&corpus, &spec);
        assert!(citing
            .iter()
            .all(|&i| corpus.paper_at(i).paper_id.starts_with('A')));
    }

    #[test]
    fn empty_config_gives_empty_corpus() {
        let config = small(0, SynthMode::Singleton);
        let corpus = generate_corpus(&config, 1).unwrap();
        assert!(corpus.is_empty());
        assert_eq!(corpus.validate().unwrap().edges, 0);
        assert!(generate_rows(&config, 1).unwrap().0.is_empty());
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let config = small(40, SynthMode::Clustered);
        assert_eq!(
            generate_rows(&config, 5).unwrap(),
            generate_rows(&config, 5).unwrap()
        );
        assert_eq!(
            generate_corpus(&config, 5).unwrap(),
            generate_corpus(&config, 5).unwrap()
        );
        let outputs: Vec<Vec<ObservationRow>> = (0..100)
            .map(|s| generate_rows(&config, s).unwrap().0)
            .collect();
        for i in 0..outputs.len() {
            for j in i + 1..outputs.len() {
                assert_ne!(outputs[i], outputs[j], "seeds {i} and {j} collide");
            }
        }
    }

    #[test]
    fn citing_strata_flag_exactly_the_drawn_outcomes() {
        assert_eq!(citing_block_size(), 50);
        assert_eq!(hazen(50.0, 50), 99.0);
        assert!(hazen(49.0, 49) < HIGHLY_CITED_THRESHOLD);
        let config = small(3000, SynthMode::Singleton);
        let corpus = generate_corpus(&config, 8).unwrap();
        let table = hazen_percentiles(&corpus);
        let (rows, _) = generate_rows(&config, 8).unwrap();
        let flagged = table
            .iter()
            .filter(|(id, e)| id.starts_with('A') && e.highly_cited)
            .count();
        assert_eq!(flagged, rows.iter().filter(|r| r.y).count());
    }

    #[test]
    fn inclusion_exponent_hits_target() {
        for (target, n) in [(80.3, 40), (50.0, 10), (90.0, 200)] {
            let k = inclusion_exponent(target, n).unwrap();
            assert!((expected_percentile(k, n) - target).abs() < 1e-9);
        }
        // uniform inclusion has the stratum mean
        assert!((expected_percentile(0.0, 40) - 50.0).abs() < 1e-12);
        assert!(inclusion_exponent(40.0, 40).is_err());
        assert!(inclusion_exponent(99.5, 40).is_err());
    }

    fn within(value: f64, target: f64, sigma: f64) -> bool {
        (value - target).abs() <= 3.0 * sigma
    }

    #[test]
    fn marginals_hit_configured_targets() {
        let config = small(20_000, SynthMode::Singleton);
        let (rows, _) = generate_rows(&config, 2).unwrap();
        let n = rows.len() as f64;
        let mean = |f: &dyn Fn(&ObservationRow) -> f64| rows.iter().map(f).sum::<f64>() / n;

        let pct = mean(&|r| r.cited_percentile);
        assert!((pct - config.percentile_mean).abs() <= 2.0, "{pct}");

        let wsum: f64 = config.citing_year_weights.iter().sum();
        for (j, w) in config.citing_year_weights[1..].iter().enumerate() {
            let p = w / wsum;
            let share = mean(&|r| f64::from(u8::from(r.citing_year_flags[j])));
            assert!(
                within(share, p, libm::sqrt(p * (1.0 - p) / n)),
                "{share} vs {p}"
            );
        }
        let lambda = config.citing_extra_countries;
        let citing = mean(&|r| r.citing_num_countries as f64);
        assert!(
            within(citing, 1.0 + lambda, libm::sqrt(lambda / n)),
            "{citing}"
        );

        // cited papers are shared between rows, so check them per paper
        let corpus = generate_corpus(&config, 2).unwrap();
        let pool: Vec<&PaperRecord> = corpus
            .papers()
            .iter()
            .filter(|p| p.paper_id.starts_with('R'))
            .collect();
        let m = pool.len() as f64;
        let english = pool.iter().filter(|p| p.language == ENGLISH).count() as f64 / m;
        let s = config.english_share;
        assert!(
            within(english, s, libm::sqrt(s * (1.0 - s) / m)),
            "{english}"
        );
        let lambda = config.cited_extra_countries;
        let cited = pool.iter().map(|p| p.countries.len() as f64).sum::<f64>() / m;
        assert!(
            within(cited, 1.0 + lambda, libm::sqrt(lambda / m)),
            "{cited}"
        );
    }

    #[test]
    fn null_model_has_even_odds() {
        let mut config = small(100_000, SynthMode::Singleton).null_model();
        config.set_beta(INTERCEPT, 0.0).unwrap();
        let (rows, _) = generate_rows(&config, 4).unwrap();
        let share = rows.iter().filter(|r| r.y).count() as f64 / rows.len() as f64;
        assert!((share - 0.5).abs() < 0.01, "{share}");
    }

    #[test]
    fn clustered_rows_share_one_outcome() {
        let mut config = small(600, SynthMode::Clustered);
        config.refs_per_citing = 10.0;
        let (rows, _) = generate_rows(&config, 9).unwrap();
        let sizes = cluster_sizes(&rows);
        assert_eq!(sizes.len(), 600);
        let mean = rows.len() as f64 / sizes.len() as f64;
        assert!((mean - 10.0).abs() < 0.5, "{mean}");
        let mut start = 0;
        for (_, size) in sizes {
            let group = &rows[start..start + size];
            assert!(group.iter().all(|r| r.y == group[0].y));
            assert!(group.windows(2).all(|w| w[0].cited_id < w[1].cited_id));
            start += size;
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut c = SynthConfig::reference();
        c.refs_per_citing = 0.5;
        assert!(matches!(
            generate_rows(&c, 0),
            Err(Error::InvalidArgument(_))
        ));
        let mut c = SynthConfig::reference();
        c.true_beta.pop();
        assert!(matches!(c.validate(), Err(Error::SpecMismatch(_))));
        let mut c = SynthConfig::reference();
        c.years_back_weights.push(0.1);
        assert!(c.validate().is_err());
        let mut c = SynthConfig::reference();
        c.english_share = 1.5;
        assert!(c.validate().is_err());
        let mut c = SynthConfig::reference();
        c.countries.retain(|w| w.code == "DE");
        assert!(c.validate().is_err());
        assert!(matches!(
            SynthConfig::reference().set_beta("nope", 1.0),
            Err(Error::KeyNotFound(_))
        ));
    }
}
