//! JSON-lines corpus files and the corpus directory.
//!
//! `papers.jsonl` holds one object per line with exactly the keys `id`,
//! `year`, `field`, `countries`, `lang`, `type` (`article` | `other`) and
//! `cites`. `edges.jsonl` holds `{"citing": .., "cited": ..}` lines.
//! Malformed lines are skipped and reported with their line number; a
//! repeated paper id or an edge from an unknown citing paper is fatal.
//!
//! A corpus directory holds the two files in canonical form (papers sorted
//! by id, edges by (citing, cited), country codes uppercased and sorted)
//! plus `corpus.json` with counts and content hashes.

use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use refimpact_core::corpus::{Corpus, CorpusBuilder, DocType, PaperRecord, ValidationReport};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const PAPERS_FILE: &str = "papers.jsonl";
pub const EDGES_FILE: &str = "edges.jsonl";
pub const CORPUS_FILE: &str = "corpus.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaperLine {
    pub id: String,
    pub year: i32,
    pub field: String,
    pub countries: Vec<String>,
    pub lang: String,
    #[serde(rename = "type")]
    pub doc_type: DocType,
    pub cites: u64,
}

impl From<&PaperRecord> for PaperLine {
    fn from(p: &PaperRecord) -> Self {
        PaperLine {
            id: p.paper_id.clone(),
            year: p.pub_year,
            field: p.field.clone(),
            countries: p.countries.clone(),
            lang: p.language.clone(),
            doc_type: p.doc_type,
            cites: p.citation_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeLine {
    pub citing: String,
    pub cited: String,
}

/// A skipped input line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineIssue {
    pub file: String,
    pub line: usize,
    pub message: String,
}

impl fmt::Display for LineIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.file, self.line, self.message)
    }
}

fn open(path: &Path) -> Result<BufReader<fs::File>, CliError> {
    fs::File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::io(path, e))
}

/// Parses every nonblank line as `T`, collecting failures.
fn read_lines<T>(
    path: &Path,
    mut parse: impl FnMut(&str) -> Result<T, String>,
) -> Result<(Vec<T>, Vec<LineIssue>), CliError> {
    let mut items = Vec::new();
    let mut issues = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match parse(&line) {
            Ok(item) => items.push(item),
            Err(message) => issues.push(LineIssue {
                file: path.display().to_string(),
                line: i + 1,
                message,
            }),
        }
    }
    Ok((items, issues))
}

pub fn read_papers(path: &Path) -> Result<(Vec<PaperRecord>, Vec<LineIssue>), CliError> {
    read_lines(path, |line| {
        let p: PaperLine = serde_json::from_str(line).map_err(|e| e.to_string())?;
        PaperRecord::new(
            p.id,
            p.year,
            p.field,
            p.countries,
            p.lang,
            p.doc_type,
            p.cites,
        )
        .map_err(|e| e.to_string())
    })
}

pub fn read_edges(path: &Path) -> Result<(Vec<EdgeLine>, Vec<LineIssue>), CliError> {
    read_lines(path, |line| {
        serde_json::from_str(line).map_err(|e| e.to_string())
    })
}

/// What ingestion kept, skipped and dropped.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IngestReport {
    pub issues: Vec<LineIssue>,
    pub validation: ValidationReport,
}

impl fmt::Display for IngestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for issue in &self.issues {
            writeln!(f, "skipped {issue}")?;
        }
        let v = &self.validation;
        write!(
            f,
            "papers: {}, edges: {}, uncovered references: {}, duplicate edges: {}, skipped lines: {}",
            v.papers,
            v.edges,
            v.uncovered_refs,
            v.duplicate_edges,
            self.issues.len()
        )
    }
}

/// Builds and validates a corpus from paper and edge files.
pub fn ingest(
    papers_path: &Path,
    edges_path: &Path,
    census_year: Option<i32>,
) -> Result<(Corpus, IngestReport), CliError> {
    let (papers, mut issues) = read_papers(papers_path)?;
    let (edges, edge_issues) = read_edges(edges_path)?;
    issues.extend(edge_issues);

    let mut builder = CorpusBuilder::with_capacity(papers.len());
    for p in papers {
        // records from read_papers are already checked
        builder
            .add_paper(p)
            .map_err(|e| CliError::Input(e.to_string()))?;
    }
    let mut draft = builder.finish_papers()?;
    for e in &edges {
        draft.add_citation(&e.citing, &e.cited)?;
    }
    if let Some(year) = census_year {
        draft.set_census_year(year);
    }
    let corpus = draft.validate()?;
    let validation = corpus.report();
    Ok((corpus, IngestReport { issues, validation }))
}

/// Canonical `papers.jsonl` content.
pub fn papers_jsonl(corpus: &Corpus) -> String {
    let mut out = String::new();
    for p in corpus.papers() {
        out.push_str(&serde_json::to_string(&PaperLine::from(p)).expect("paper serializes"));
        out.push('\n');
    }
    out
}

/// Canonical `edges.jsonl` content.
pub fn edges_jsonl(corpus: &Corpus) -> String {
    let mut out = String::new();
    for e in corpus.edges() {
        let line = EdgeLine {
            citing: e.citing_id.to_string(),
            cited: e.cited_id.to_string(),
        };
        out.push_str(&serde_json::to_string(&line).expect("edge serializes"));
        out.push('\n');
    }
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of the canonical papers file followed by the canonical edges file.
pub fn corpus_hash(corpus: &Corpus) -> String {
    let mut h = Sha256::new();
    h.update(papers_jsonl(corpus).as_bytes());
    h.update(edges_jsonl(corpus).as_bytes());
    hex::encode(h.finalize())
}

/// Contents of `corpus.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusInfo {
    pub census_year: i32,
    pub papers: usize,
    pub edges: usize,
    pub uncovered_refs: usize,
    pub duplicate_edges: usize,
    pub papers_sha256: String,
    pub edges_sha256: String,
    pub corpus_sha256: String,
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let mut f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(contents).map_err(|e| CliError::io(path, e))
}

pub fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    s
}

/// Writes the canonical corpus directory and returns the written paths.
pub fn write_corpus(dir: &Path, corpus: &Corpus) -> Result<Vec<PathBuf>, CliError> {
    create_dir(dir)?;
    let papers = papers_jsonl(corpus);
    let edges = edges_jsonl(corpus);
    let report = corpus.report();
    let info = CorpusInfo {
        census_year: corpus.census_year(),
        papers: report.papers,
        edges: report.edges,
        uncovered_refs: report.uncovered_refs,
        duplicate_edges: report.duplicate_edges,
        papers_sha256: sha256_hex(papers.as_bytes()),
        edges_sha256: sha256_hex(edges.as_bytes()),
        corpus_sha256: corpus_hash(corpus),
    };
    let paths = [PAPERS_FILE, EDGES_FILE, CORPUS_FILE].map(|f| dir.join(f));
    write_file(&paths[0], papers.as_bytes())?;
    write_file(&paths[1], edges.as_bytes())?;
    write_file(&paths[2], to_json_pretty(&info).as_bytes())?;
    Ok(paths.to_vec())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Json {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Reads a corpus directory. Stored files must be clean: any skipped line
/// is an error.
pub fn read_corpus(dir: &Path) -> Result<Corpus, CliError> {
    let info: CorpusInfo = read_json(&dir.join(CORPUS_FILE))?;
    let (corpus, report) = ingest(
        &dir.join(PAPERS_FILE),
        &dir.join(EDGES_FILE),
        Some(info.census_year),
    )?;
    if !report.issues.is_empty() {
        return Err(CliError::Input(format!(
            "corpus directory {} has malformed lines: {}",
            dir.display(),
            report
                .issues
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join("; ")
        )));
    }
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn malformed_lines_are_reported_with_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let papers = write(
            dir.path(),
            "p.jsonl",
            concat!(
                r#"{"id":"a","year":2009,"field":"f","countries":["de","us"],"lang":"en","type":"article","cites":3}"#,
                "\n\n",
                r#"{"id":"b","year":2009,"field":"f","countries":[],"lang":"en","type":"article","cites":3}"#,
                "\n",
                r#"{"id":"c","year":2009,"field":"f","countries":["DE"],"lang":"en","type":"review","cites":3}"#,
                "\n",
                r#"{"id":"d","year":2009,"field":"f","countries":["DE"],"lang":"en","type":"article","cites":3,"extra":1}"#,
                "\n",
                "not json\n",
            ),
        );
        let (records, issues) = read_papers(&papers).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].countries, vec!["DE", "US"]);
        let lines: Vec<usize> = issues.iter().map(|i| i.line).collect();
        assert_eq!(lines, vec![3, 4, 5, 6]);
        assert!(issues[0].message.contains("countries nonempty"));
    }

    #[test]
    fn duplicate_ids_and_unknown_citing_are_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let line = r#"{"id":"a","year":2009,"field":"f","countries":["DE"],"lang":"en","type":"article","cites":3}"#;
        let papers = write(dir.path(), "p.jsonl", &format!("{line}\n{line}\n"));
        let edges = write(dir.path(), "e.jsonl", "");
        assert!(matches!(
            ingest(&papers, &edges, None),
            Err(CliError::Domain(refimpact_core::Error::DuplicateId(id))) if id == "a"
        ));
        let papers = write(dir.path(), "p.jsonl", &format!("{line}\n"));
        let edges = write(
            dir.path(),
            "e.jsonl",
            "{\"citing\":\"zz\",\"cited\":\"a\"}\n",
        );
        assert!(matches!(
            ingest(&papers, &edges, None),
            Err(CliError::Domain(refimpact_core::Error::UnknownCiting(id))) if id == "zz"
        ));
    }

    #[test]
    fn corpus_directory_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let papers = write(
            dir.path(),
            "p.jsonl",
            concat!(
                r#"{"id":"b","year":2009,"field":"f","countries":["us","de"],"lang":"en","type":"article","cites":3}"#,
                "\n",
                r#"{"id":"a","year":2007,"field":"f","countries":["US"],"lang":"en","type":"other","cites":1}"#,
                "\n",
            ),
        );
        let edges = write(
            dir.path(),
            "e.jsonl",
            "{\"citing\":\"b\",\"cited\":\"a\"}\n{\"citing\":\"b\",\"cited\":\"gone\"}\n{\"citing\":\"b\",\"cited\":\"a\"}\n",
        );
        let (corpus, report) = ingest(&papers, &edges, None).unwrap();
        assert_eq!(report.validation.uncovered_refs, 1);
        assert_eq!(report.validation.duplicate_edges, 1);
        assert_eq!(corpus.census_year(), 2009);

        let out = dir.path().join("corpus");
        write_corpus(&out, &corpus).unwrap();
        let text = fs::read_to_string(out.join(PAPERS_FILE)).unwrap();
        assert!(text.starts_with(r#"{"id":"a","year":2007"#));
        assert!(text.contains(r#""countries":["DE","US"]"#));
        let again = read_corpus(&out).unwrap();
        assert_eq!(corpus_hash(&again), corpus_hash(&corpus));
        assert_eq!(again.census_year(), 2009);
    }
}
