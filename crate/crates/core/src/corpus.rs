//! Papers, citation edges and the sealed [`Corpus`].
//!
//! Building happens in two phases. Papers go into a [`CorpusBuilder`];
//! [`CorpusBuilder::finish_papers`] sorts them by id and rejects duplicates.
//! Edges are then added to the resulting [`CorpusDraft`], which drops edges
//! pointing outside the corpus. [`CorpusDraft::validate`] deduplicates edges,
//! checks every invariant and returns the immutable [`Corpus`].

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocType {
    Article,
    Other,
}

impl DocType {
    pub fn as_str(self) -> &'static str {
        match self {
            DocType::Article => "article",
            DocType::Other => "other",
        }
    }
}

impl core::str::FromStr for DocType {
    type Err = RecordError;

    fn from_str(s: &str) -> core::result::Result<Self, RecordError> {
        match s {
            "article" => Ok(DocType::Article),
            "other" => Ok(DocType::Other),
            _ => Err(RecordError::UnknownDocType(s.to_string())),
        }
    }
}

/// One publication.
///
/// Country codes are stored uppercased and sorted; the list is a set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperRecord {
    pub paper_id: String,
    pub pub_year: i32,
    pub field: String,
    pub countries: Vec<String>,
    pub language: String,
    pub doc_type: DocType,
    pub citation_count: u64,
}

/// Why a single record was rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RecordError {
    EmptyId,
    EmptyField,
    EmptyCountries,
    EmptyCountryCode,
    DuplicateCountry(String),
    UnknownDocType(String),
}

impl fmt::Display for RecordError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RecordError::EmptyId => f.write_str("id must be nonempty"),
            RecordError::EmptyField => f.write_str("field must be nonempty"),
            RecordError::EmptyCountries => f.write_str("countries nonempty"),
            RecordError::EmptyCountryCode => f.write_str("country codes must be nonempty"),
            RecordError::DuplicateCountry(c) => write!(f, "countries distinct (`{c}` repeated)"),
            RecordError::UnknownDocType(t) => {
                write!(f, "type must be `article` or `other`, got `{t}`")
            }
        }
    }
}

impl PaperRecord {
    /// Builds a record, uppercasing and sorting the country codes.
    pub fn new(
        paper_id: impl Into<String>,
        pub_year: i32,
        field: impl Into<String>,
        countries: impl IntoIterator<Item = impl AsRef<str>>,
        language: impl Into<String>,
        doc_type: DocType,
        citation_count: u64,
    ) -> core::result::Result<Self, RecordError> {
        let mut record = PaperRecord {
            paper_id: paper_id.into(),
            pub_year,
            field: field.into(),
            countries: countries
                .into_iter()
                .map(|c| c.as_ref().to_uppercase())
                .collect(),
            language: language.into(),
            doc_type,
            citation_count,
        };
        record.countries.sort_unstable();
        record.check()?;
        Ok(record)
    }

    /// Checks the record invariants. Countries must already be normalized.
    pub fn check(&self) -> core::result::Result<(), RecordError> {
        if self.paper_id.is_empty() {
            return Err(RecordError::EmptyId);
        }
        if self.field.is_empty() {
            return Err(RecordError::EmptyField);
        }
        if self.countries.is_empty() {
            return Err(RecordError::EmptyCountries);
        }
        if self.countries.iter().any(|c| c.is_empty()) {
            return Err(RecordError::EmptyCountryCode);
        }
        if self.countries.windows(2).all(|w| w[0] < w[1]) {
            return Ok(());
        }
        let mut sorted = self.countries.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(RecordError::DuplicateCountry(w[0].clone()));
        }
        Ok(())
    }

    pub fn normalize_countries(&mut self) {
        for c in &mut self.countries {
            if c.bytes().any(|b| b.is_ascii_lowercase()) || !c.is_ascii() {
                *c = c.to_uppercase();
            }
        }
        self.countries.sort_unstable();
    }

    pub fn num_countries(&self) -> usize {
        self.countries.len()
    }

    pub fn has_country(&self, code: &str) -> bool {
        self.countries.iter().any(|c| c == code)
    }

    pub fn is_article(&self) -> bool {
        self.doc_type == DocType::Article
    }
}

/// A citation between two corpus papers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CitationEdge<'a> {
    pub citing_id: &'a str,
    pub cited_id: &'a str,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub papers: usize,
    pub edges: usize,
    pub uncovered_refs: usize,
    pub duplicate_edges: usize,
}

/// Collects papers before the id index is frozen.
#[derive(Debug, Default)]
pub struct CorpusBuilder {
    papers: Vec<PaperRecord>,
}

impl CorpusBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        CorpusBuilder {
            papers: Vec::with_capacity(n),
        }
    }

    /// Adds a paper after uppercasing and sorting its country codes.
    pub fn add_paper(&mut self, mut record: PaperRecord) -> core::result::Result<(), RecordError> {
        record.normalize_countries();
        record.check()?;
        self.papers.push(record);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.papers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.papers.is_empty()
    }

    /// Freezes the paper set. A repeated id is a hard error.
    pub fn finish_papers(mut self) -> Result<CorpusDraft> {
        self.papers
            .sort_unstable_by(|a, b| a.paper_id.cmp(&b.paper_id));
        if let Some(w) = self
            .papers
            .windows(2)
            .find(|w| w[0].paper_id == w[1].paper_id)
        {
            return Err(Error::DuplicateId(w[0].paper_id.clone()));
        }
        Ok(CorpusDraft {
            papers: self.papers,
            edges: Vec::new(),
            uncovered_refs: 0,
            census_year: None,
        })
    }
}

/// Whether an edge offered to [`CorpusDraft::add_citation`] was kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeStatus {
    Accepted,
    Uncovered,
}

/// Papers are frozen; edges are still being collected.
#[derive(Debug)]
pub struct CorpusDraft {
    papers: Vec<PaperRecord>,
    edges: Vec<(u32, u32)>,
    uncovered_refs: usize,
    census_year: Option<i32>,
}

fn find_sorted(papers: &[PaperRecord], id: &str) -> Option<usize> {
    papers
        .binary_search_by(|p| p.paper_id.as_str().cmp(id))
        .ok()
}

impl CorpusDraft {
    /// Records a citation. Edges to papers outside the corpus are counted and
    /// dropped; an unknown citing paper is a hard error.
    pub fn add_citation(&mut self, citing_id: &str, cited_id: &str) -> Result<EdgeStatus> {
        let citing = find_sorted(&self.papers, citing_id)
            .ok_or_else(|| Error::UnknownCiting(citing_id.to_string()))?;
        match find_sorted(&self.papers, cited_id) {
            Some(cited) => {
                self.edges.push((citing as u32, cited as u32));
                Ok(EdgeStatus::Accepted)
            }
            None => {
                self.uncovered_refs += 1;
                Ok(EdgeStatus::Uncovered)
            }
        }
    }

    /// Latest year in which citations were counted. Defaults to the latest
    /// publication year when never set.
    pub fn set_census_year(&mut self, year: i32) {
        self.census_year = Some(year);
    }

    pub fn papers(&self) -> &[PaperRecord] {
        &self.papers
    }

    /// Deduplicates edges, checks all invariants and seals the corpus.
    pub fn validate(mut self) -> Result<Corpus> {
        let offered = self.edges.len();
        self.edges.sort_unstable();
        self.edges.dedup();
        let duplicate_edges = offered - self.edges.len();

        let census_year = self
            .census_year
            .unwrap_or_else(|| self.papers.iter().map(|p| p.pub_year).max().unwrap_or(0));
        let corpus = Corpus {
            papers: self.papers,
            edges: self.edges,
            census_year,
            uncovered_refs: self.uncovered_refs,
            duplicate_edges,
        };
        let problems = corpus.problems();
        if problems.is_empty() {
            Ok(corpus)
        } else {
            Err(Error::ValidationFailed(problems))
        }
    }
}

/// A validated, immutable corpus.
///
/// Papers are sorted by id and edges by (citing id, cited id), so paper
/// indices follow id order.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    papers: Vec<PaperRecord>,
    edges: Vec<(u32, u32)>,
    census_year: i32,
    uncovered_refs: usize,
    duplicate_edges: usize,
}

impl Corpus {
    pub fn empty(census_year: i32) -> Self {
        Corpus {
            papers: Vec::new(),
            edges: Vec::new(),
            census_year,
            uncovered_refs: 0,
            duplicate_edges: 0,
        }
    }

    /// Convenience for in-memory construction: every paper must be valid and
    /// every citing id known.
    pub fn from_records<'a>(
        papers: impl IntoIterator<Item = PaperRecord>,
        edges: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Corpus> {
        let mut builder = CorpusBuilder::new();
        for p in papers {
            let id = p.paper_id.clone();
            builder
                .add_paper(p)
                .map_err(|e| Error::ValidationFailed(alloc::vec![format!("paper `{id}`: {e}")]))?;
        }
        let mut draft = builder.finish_papers()?;
        for (citing, cited) in edges {
            draft.add_citation(citing, cited)?;
        }
        draft.validate()
    }

    fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (i, p) in self.papers.iter().enumerate() {
            if let Err(e) = p.check() {
                out.push(format!("paper `{}`: {e}", p.paper_id));
            }
            if i > 0 && self.papers[i - 1].paper_id >= p.paper_id {
                out.push(format!("paper `{}`: duplicate or unsorted id", p.paper_id));
            }
        }
        let n = self.papers.len() as u32;
        for (i, &(citing, cited)) in self.edges.iter().enumerate() {
            if citing >= n || cited >= n {
                out.push(format!("edge #{i}: dangling endpoint"));
                continue;
            }
            if citing == cited {
                out.push(format!(
                    "self-citation `{}` -> `{}`",
                    self.papers[citing as usize].paper_id, self.papers[cited as usize].paper_id
                ));
            }
            if i > 0 && self.edges[i - 1] >= (citing, cited) {
                let e = self.edge_at(i);
                out.push(format!(
                    "duplicate edge `{}` -> `{}`",
                    e.citing_id, e.cited_id
                ));
            }
        }
        out
    }

    /// Re-checks every invariant. Always succeeds on a sealed corpus and
    /// returns the same report each time.
    pub fn validate(&self) -> Result<ValidationReport> {
        let problems = self.problems();
        if !problems.is_empty() {
            return Err(Error::ValidationFailed(problems));
        }
        Ok(self.report())
    }

    pub fn report(&self) -> ValidationReport {
        ValidationReport {
            papers: self.papers.len(),
            edges: self.edges.len(),
            uncovered_refs: self.uncovered_refs,
            duplicate_edges: self.duplicate_edges,
        }
    }

    pub fn census_year(&self) -> i32 {
        self.census_year
    }

    pub fn papers(&self) -> &[PaperRecord] {
        &self.papers
    }

    pub fn len(&self) -> usize {
        self.papers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.papers.is_empty()
    }

    pub fn index_of(&self, paper_id: &str) -> Option<usize> {
        find_sorted(&self.papers, paper_id)
    }

    pub fn paper(&self, paper_id: &str) -> Option<&PaperRecord> {
        self.index_of(paper_id).map(|i| &self.papers[i])
    }

    pub fn paper_at(&self, index: usize) -> &PaperRecord {
        &self.papers[index]
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    fn edge_at(&self, i: usize) -> CitationEdge<'_> {
        let (citing, cited) = self.edges[i];
        CitationEdge {
            citing_id: &self.papers[citing as usize].paper_id,
            cited_id: &self.papers[cited as usize].paper_id,
        }
    }

    /// Edges in canonical (citing, cited) order.
    pub fn edges(&self) -> impl Iterator<Item = CitationEdge<'_>> + '_ {
        (0..self.edges.len()).map(move |i| self.edge_at(i))
    }

    /// Edges as (citing index, cited index) pairs, canonical order.
    pub fn edge_indices(&self) -> &[(u32, u32)] {
        &self.edges
    }

    /// Indices of the papers cited by the paper at `citing`, ascending.
    pub fn references_of(&self, citing: usize) -> impl Iterator<Item = usize> + '_ {
        let c = citing as u32;
        let lo = self.edges.partition_point(|&(a, _)| a < c);
        let hi = self.edges.partition_point(|&(a, _)| a <= c);
        self.edges[lo..hi].iter().map(|&(_, b)| b as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn paper(id: &str, countries: &[&str]) -> PaperRecord {
        PaperRecord::new(
            id,
            2009,
            "phys",
            countries.iter(),
            "en",
            DocType::Article,
            3,
        )
        .unwrap()
    }

    #[test]
    fn three_valid_papers() {
        let c = Corpus::from_records(
            vec![
                paper("a", &["DE"]),
                paper("b", &["US"]),
                paper("c", &["FR"]),
            ],
            [],
        )
        .unwrap();
        assert_eq!(c.report().papers, 3);
        assert_eq!(c.report().edges, 0);
    }

    #[test]
    fn empty_countries_rejected() {
        let err = PaperRecord::new("x", 2009, "phys", [""; 0].iter(), "en", DocType::Article, 0)
            .unwrap_err();
        assert_eq!(err, RecordError::EmptyCountries);
        assert!(err.to_string().contains("countries nonempty"));
    }

    #[test]
    fn countries_are_uppercased_and_deduplication_is_an_error() {
        let p = paper("a", &["us", "de"]);
        assert_eq!(p.countries, vec!["DE", "US"]);
        let err =
            PaperRecord::new("b", 2009, "f", ["de", "DE"], "en", DocType::Article, 0).unwrap_err();
        assert_eq!(err, RecordError::DuplicateCountry("DE".into()));
    }

    #[test]
    fn duplicate_id_is_hard_error() {
        let mut b = CorpusBuilder::new();
        b.add_paper(paper("a", &["DE"])).unwrap();
        b.add_paper(paper("a", &["US"])).unwrap();
        assert!(matches!(b.finish_papers(), Err(Error::DuplicateId(id)) if id == "a"));
    }

    #[test]
    fn edge_rules() {
        let mut b = CorpusBuilder::new();
        for id in ["A", "B"] {
            b.add_paper(paper(id, &["DE"])).unwrap();
        }
        let mut d = b.finish_papers().unwrap();
        assert_eq!(d.add_citation("A", "B").unwrap(), EdgeStatus::Accepted);
        assert_eq!(d.add_citation("A", "X").unwrap(), EdgeStatus::Uncovered);
        assert_eq!(d.add_citation("A", "B").unwrap(), EdgeStatus::Accepted);
        assert!(matches!(d.add_citation("Z", "A"), Err(Error::UnknownCiting(id)) if id == "Z"));
        let c = d.validate().unwrap();
        let r = c.report();
        assert_eq!((r.edges, r.uncovered_refs, r.duplicate_edges), (1, 1, 1));
        // stored + uncovered + duplicates = edge records offered
        assert_eq!(r.edges + r.uncovered_refs + r.duplicate_edges, 3);
        assert_eq!(c.validate().unwrap(), r);
        assert_eq!(c.validate().unwrap(), c.validate().unwrap());
    }

    #[test]
    fn self_edge_fails_validation() {
        let err = Corpus::from_records(vec![paper("A", &["DE"])], [("A", "A")]).unwrap_err();
        match err {
            Error::ValidationFailed(p) => assert!(p[0].contains("`A` -> `A`")),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn empty_corpus_is_valid() {
        let c = Corpus::from_records(Vec::new(), []).unwrap();
        assert_eq!(c.validate().unwrap(), ValidationReport::default());
    }

    #[test]
    fn references_of_uses_sorted_edges() {
        let c = Corpus::from_records(
            vec![
                paper("a", &["DE"]),
                paper("b", &["US"]),
                paper("c", &["FR"]),
            ],
            [("b", "c"), ("a", "c"), ("a", "b")],
        )
        .unwrap();
        let refs: Vec<_> = c.references_of(0).collect();
        assert_eq!(refs, vec![1, 2]);
        assert_eq!(c.references_of(2).count(), 0);
        let edges: Vec<_> = c.edges().map(|e| (e.citing_id, e.cited_id)).collect();
        assert_eq!(edges, vec![("a", "b"), ("a", "c"), ("b", "c")]);
    }
}
