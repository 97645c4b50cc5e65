//! Hazen citation percentiles, the top-1% flag and fractional country counts.
//!
//! Within a (field, publication year) stratum of `n` papers, papers are
//! ranked by ascending citation count so the most cited paper gets rank `n`.
//! Tied counts share the mean of the ranks they occupy. The percentile is
//! `100 * (rank - 0.5) / n`, so every percentile lies in (0, 100) and the
//! stratum mean is exactly 50. A paper is highly cited when its percentile
//! is at least 99.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, PaperRecord};
use crate::{Error, Result};

pub const HIGHLY_CITED_THRESHOLD: f64 = 99.0;

/// Hazen percentile of a (possibly averaged) 1-based rank in a stratum of `n`.
pub fn hazen(rank: f64, n: usize) -> f64 {
    100.0 * (rank - 0.5) / n as f64
}

pub fn is_highly_cited(percentile: f64) -> bool {
    percentile >= HIGHLY_CITED_THRESHOLD
}

/// Percentiles for one stratum, returned in input order.
pub fn stratum_percentiles(counts: &[u64]) -> Vec<f64> {
    let n = counts.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by_key(|&i| counts[i]);
    let mut out = alloc::vec![0.0; n];
    let mut lo = 0;
    while lo < n {
        let mut hi = lo + 1;
        while hi < n && counts[order[hi]] == counts[order[lo]] {
            hi += 1;
        }
        // ranks lo+1 ..= hi
        let rank = (lo + 1 + hi) as f64 / 2.0;
        let pct = hazen(rank, n);
        for &i in &order[lo..hi] {
            out[i] = pct;
        }
        lo = hi;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PercentileEntry {
    pub percentile: f64,
    pub highly_cited: bool,
}

/// Percentile and flag per paper, plus the size of every stratum.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PercentileTable {
    // sorted by id
    ids: Vec<String>,
    entries: Vec<PercentileEntry>,
    strata: BTreeMap<(String, i32), usize>,
}

impl PercentileTable {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, paper_id: &str) -> Option<&PercentileEntry> {
        self.ids
            .binary_search_by(|id| id.as_str().cmp(paper_id))
            .ok()
            .map(|i| &self.entries[i])
    }

    pub fn percentile(&self, paper_id: &str) -> Result<f64> {
        self.get(paper_id)
            .map(|e| e.percentile)
            .ok_or_else(|| Error::KeyNotFound(format!("paper `{paper_id}`")))
    }

    /// The stored top-1% flag of a paper.
    pub fn classify_highly_cited(&self, paper_id: &str) -> Result<bool> {
        self.get(paper_id)
            .map(|e| e.highly_cited)
            .ok_or_else(|| Error::KeyNotFound(format!("paper `{paper_id}`")))
    }

    pub fn stratum_size(&self, field: &str, year: i32) -> Result<usize> {
        // BTreeMap<(String, i32), _> cannot be queried with (&str, i32).
        self.strata
            .range((String::from(field), year)..=(String::from(field), year))
            .next()
            .map(|(_, &n)| n)
            .ok_or_else(|| Error::KeyNotFound(format!("stratum ({field}, {year})")))
    }

    pub fn strata(&self) -> impl Iterator<Item = (&str, i32, usize)> + '_ {
        self.strata.iter().map(|((f, y), &n)| (f.as_str(), *y, n))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &PercentileEntry)> + '_ {
        self.ids.iter().map(String::as_str).zip(self.entries.iter())
    }

    /// Drops a paper from the table (for callers supplying partial coverage).
    pub fn remove(&mut self, paper_id: &str) -> Option<PercentileEntry> {
        let i = self
            .ids
            .binary_search_by(|id| id.as_str().cmp(paper_id))
            .ok()?;
        self.ids.remove(i);
        Some(self.entries.remove(i))
    }
}

/// Hazen percentiles for every paper of the corpus, per (field, year) stratum.
pub fn hazen_percentiles(corpus: &Corpus) -> PercentileTable {
    let papers = corpus.papers();
    let n = papers.len();
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_unstable_by(|&a, &b| {
        let (pa, pb) = (&papers[a as usize], &papers[b as usize]);
        (pa.field.as_str(), pa.pub_year, pa.citation_count).cmp(&(
            pb.field.as_str(),
            pb.pub_year,
            pb.citation_count,
        ))
    });

    let mut entries = alloc::vec![
        PercentileEntry {
            percentile: 0.0,
            highly_cited: false
        };
        n
    ];
    let mut strata = BTreeMap::new();
    let same_stratum =
        |a: &PaperRecord, b: &PaperRecord| a.field == b.field && a.pub_year == b.pub_year;

    let mut start = 0;
    while start < n {
        let first = &papers[order[start] as usize];
        let mut end = start + 1;
        while end < n && same_stratum(first, &papers[order[end] as usize]) {
            end += 1;
        }
        let size = end - start;
        let mut lo = start;
        while lo < end {
            let count = papers[order[lo] as usize].citation_count;
            let mut hi = lo + 1;
            while hi < end && papers[order[hi] as usize].citation_count == count {
                hi += 1;
            }
            let rank = ((lo - start + 1) + (hi - start)) as f64 / 2.0;
            let percentile = hazen(rank, size);
            for &i in &order[lo..hi] {
                entries[i as usize] = PercentileEntry {
                    percentile,
                    highly_cited: is_highly_cited(percentile),
                };
            }
            lo = hi;
        }
        strata.insert((first.field.clone(), first.pub_year), size);
        start = end;
    }

    PercentileTable {
        ids: papers.iter().map(|p| p.paper_id.clone()).collect(),
        entries,
        strata,
    }
}

/// Per-country credit where each paper splits one unit equally across its
/// distinct countries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FractionalCounts {
    pub totals: BTreeMap<String, f64>,
    pub papers: usize,
}

impl FractionalCounts {
    pub fn get(&self, country: &str) -> f64 {
        self.totals.get(country).copied().unwrap_or(0.0)
    }

    pub fn sum(&self) -> f64 {
        self.totals.values().sum()
    }
}

/// Each paper adds `1 / |countries|` to each of its countries. A paper passed
/// twice counts twice.
pub fn fractional_country_counts<'a>(
    papers: impl IntoIterator<Item = &'a PaperRecord>,
) -> FractionalCounts {
    let mut out = FractionalCounts::default();
    for p in papers {
        let share = 1.0 / p.countries.len() as f64;
        for c in &p.countries {
            match out.totals.get_mut(c.as_str()) {
                Some(t) => *t += share,
                None => {
                    out.totals.insert(c.clone(), share);
                }
            }
        }
        out.papers += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::DocType;
    use alloc::vec;

    fn p(id: &str, field: &str, year: i32, cites: u64, countries: &[&str]) -> PaperRecord {
        PaperRecord::new(
            id,
            year,
            field,
            countries.iter(),
            "en",
            DocType::Article,
            cites,
        )
        .unwrap()
    }

    #[test]
    fn single_paper_stratum_is_fifty() {
        assert_eq!(stratum_percentiles(&[17]), vec![50.0]);
    }

    #[test]
    fn tie_gets_average_rank() {
        assert_eq!(
            stratum_percentiles(&[3, 7, 7, 10]),
            vec![12.5, 50.0, 50.0, 87.5]
        );
    }

    #[test]
    fn two_hundred_distinct_counts() {
        let counts: Vec<u64> = (0..200).collect();
        let pct = stratum_percentiles(&counts);
        assert_eq!(pct[199], 99.75);
        assert_eq!(pct[198], 99.25);
        assert_eq!(pct[197], 98.75);
        let flagged = pct.iter().filter(|&&x| is_highly_cited(x)).count();
        assert_eq!(flagged, 2);
    }

    #[test]
    fn threshold_is_closed_at_99() {
        assert!(is_highly_cited(99.5));
        assert!(is_highly_cited(99.0));
        assert!(!is_highly_cited(98.999));
    }

    #[test]
    fn tie_straddling_the_threshold_moves_as_a_unit() {
        // 100 papers, top two tied: rank 99.5 -> 99.0, both in.
        let mut counts: Vec<u64> = (0..98).collect();
        counts.extend([500, 500]);
        let pct = stratum_percentiles(&counts);
        assert_eq!(pct[98], pct[99]);
        assert!(is_highly_cited(pct[98]) && is_highly_cited(pct[99]));
        // 60 papers, top two tied: ranks 59, 60 -> 59.5 -> 98.33, both out,
        // although rank 60 alone would be 99.17.
        let mut counts: Vec<u64> = (0..58).collect();
        counts.extend([500, 500]);
        let pct = stratum_percentiles(&counts);
        assert_eq!(pct[58], pct[59]);
        assert!(!is_highly_cited(pct[58]) && !is_highly_cited(pct[59]));
    }

    #[test]
    fn corpus_table_by_stratum() {
        let corpus = Corpus::from_records(
            vec![
                p("a", "bio", 2009, 3, &["DE"]),
                p("b", "bio", 2009, 7, &["DE"]),
                p("c", "bio", 2009, 7, &["DE"]),
                p("d", "bio", 2009, 10, &["DE"]),
                p("e", "bio", 2010, 0, &["DE"]),
                p("f", "chem", 2009, 1, &["DE"]),
            ],
            [],
        )
        .unwrap();
        let t = hazen_percentiles(&corpus);
        assert_eq!(t.percentile("a").unwrap(), 12.5);
        assert_eq!(t.percentile("c").unwrap(), 50.0);
        assert_eq!(t.percentile("d").unwrap(), 87.5);
        assert_eq!(t.percentile("e").unwrap(), 50.0);
        assert_eq!(t.percentile("f").unwrap(), 50.0);
        assert_eq!(t.stratum_size("bio", 2009).unwrap(), 4);
        assert!(matches!(
            t.stratum_size("bio", 1999),
            Err(Error::KeyNotFound(_))
        ));
        assert!(matches!(
            t.classify_highly_cited("zz"),
            Err(Error::KeyNotFound(_))
        ));
        assert!(!t.classify_highly_cited("d").unwrap());
    }

    #[test]
    fn fractional_examples() {
        let a = p("a", "f", 2009, 0, &["DE", "FR", "US"]);
        let c = fractional_country_counts([&a]);
        for k in ["DE", "FR", "US"] {
            assert_eq!(c.get(k), 1.0 / 3.0);
        }
        let b = p("b", "f", 2009, 0, &["DE"]);
        assert_eq!(fractional_country_counts([&b]).get("DE"), 1.0);
        let du = p("c", "f", 2009, 0, &["DE", "US"]);
        let c = fractional_country_counts([&du, &b]);
        assert_eq!(c.get("DE"), 1.5);
        assert_eq!(c.get("US"), 0.5);
        assert_eq!(c.sum(), 2.0);
        assert_eq!(c.papers, 2);
    }
}
