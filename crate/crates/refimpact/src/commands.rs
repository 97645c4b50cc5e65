//! The four commands: ingest, analyze, robustness and synth.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use refimpact_core::cohort::{
    extract_window_refs, rows_from_pairs, select_citing, summary_stats, top_referenced_countries,
    CohortSpec, RowSet, SummaryStat,
};
use refimpact_core::corpus::Corpus;
use refimpact_core::normalize::hazen_percentiles;
use refimpact_core::regress::{
    factor_change, fit_rows, odds_table, prediction_curve, robustness_sweep, sign_disagreements,
    CurvePoint, FactorRow, FitOptions, FitResult, ModelSpec, OddsOptions, OddsTable, RobustOptions,
    SweepReport,
};
use refimpact_core::rng;
use refimpact_core::synth::{generate, GroundTruth, SynthConfig};
use serde::Serialize;

use crate::error::CliError;
use crate::io::{self, create_dir, read_json, to_json_pretty, write_corpus, write_file};
use crate::manifest::RunManifest;
use crate::tables;

pub const COUNTRIES_FILE: &str = "countries.tsv";
pub const SUMMARY_FILE: &str = "summary.tsv";
pub const ODDS_FILE: &str = "odds.tsv";
pub const ODDS_MARKDOWN_FILE: &str = "odds.md";
pub const CURVE_FILE: &str = "curve.tsv";
pub const RESULTS_FILE: &str = "results.json";
pub const ROWS_FILE: &str = "rows.tsv";
pub const TRUTH_FILE: &str = "truth.json";
pub const DRAWS_FILE: &str = "draws.tsv";
pub const RANKING_FILE: &str = "ranking.tsv";
pub const ROBUSTNESS_FILE: &str = "robustness.json";
pub const ROBUSTNESS_MARKDOWN_FILE: &str = "robustness.md";

/// Default length of the country ranking table.
pub const DEFAULT_COUNTRIES_TOP: usize = 10;

/// Which of the paired models to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Models {
    A,
    B,
    #[default]
    Both,
}

impl Models {
    pub fn specs(self) -> &'static [ModelSpec] {
        match self {
            Models::A => &[ModelSpec::A],
            Models::B => &[ModelSpec::B],
            Models::Both => &[ModelSpec::A, ModelSpec::B],
        }
    }
}

/// Where a command reads its corpus from.
#[derive(Debug, Clone)]
pub enum CorpusSource {
    Dir(PathBuf),
    Files { papers: PathBuf, edges: PathBuf },
}

impl CorpusSource {
    pub fn load(&self, manifest: &mut RunManifest) -> Result<Corpus, CliError> {
        match self {
            CorpusSource::Dir(dir) => {
                for f in [io::PAPERS_FILE, io::EDGES_FILE, io::CORPUS_FILE] {
                    manifest.add_input(&dir.join(f))?;
                }
                io::read_corpus(dir)
            }
            CorpusSource::Files { papers, edges } => {
                manifest.add_input(papers)?;
                manifest.add_input(edges)?;
                let (corpus, report) = io::ingest(papers, edges, None)?;
                for issue in &report.issues {
                    eprintln!("warning: skipped {issue}");
                }
                Ok(corpus)
            }
        }
    }
}

/// Cohort options from a config file plus flag overrides.
#[derive(Debug, Clone, Default)]
pub struct CohortArgs {
    pub config: Option<PathBuf>,
    pub focal: Option<String>,
    pub years: Option<Vec<i32>>,
    pub window: Option<u32>,
}

impl CohortArgs {
    pub fn resolve(&self, manifest: &mut RunManifest) -> Result<CohortSpec, CliError> {
        let mut spec = match (&self.config, &self.focal) {
            (Some(path), _) => {
                manifest.add_input(path)?;
                manifest.config = Some(path.display().to_string());
                read_json::<CohortSpec>(path)?
            }
            (None, Some(focal)) => CohortSpec::new(focal, &[]),
            (None, None) => {
                return Err(CliError::Usage(
                    "a focal country is required: pass --focal or --config".into(),
                ))
            }
        };
        if let Some(f) = &self.focal {
            spec.focal_country = f.clone();
        }
        if let Some(y) = &self.years {
            spec.citing_years = y.clone();
        }
        if let Some(w) = self.window {
            spec.window_years = w;
        }
        spec.normalize();
        spec.validate_selection()?;
        Ok(spec)
    }
}

pub fn ingest(
    papers: &Path,
    edges: &Path,
    census_year: Option<i32>,
    out: &Path,
) -> Result<(), CliError> {
    let mut manifest = RunManifest::new("ingest")?;
    manifest.add_input(papers)?;
    manifest.add_input(edges)?;
    let (corpus, report) = io::ingest(papers, edges, census_year)?;
    println!("{report}");
    write_corpus(out, &corpus)?;
    manifest.parameters = serde_json::json!({ "census_year": corpus.census_year() });
    manifest.finish(out, &[io::PAPERS_FILE, io::EDGES_FILE, io::CORPUS_FILE])
}

/// Everything `analyze` computes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Analysis {
    pub spec: CohortSpec,
    pub n_citing: usize,
    pub n_pairs: usize,
    pub n_rows: usize,
    pub dropped_rows: usize,
    pub ranking: Vec<(String, f64)>,
    pub summary: Vec<SummaryStat>,
    pub models: BTreeMap<String, ModelOutput>,
    pub factor: Option<Vec<FactorRow>>,
    pub curve: Option<Curve>,
    #[serde(skip)]
    pub rows: RowSet,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelOutput {
    pub fit: FitResult,
    pub odds: OddsTable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curve {
    pub model: String,
    pub flag: String,
    pub points: Vec<CurvePoint>,
}

/// Runs percentiles, cohort selection, fits and tables. An empty country
/// set in `spec` is filled with the `countries_top` most referenced countries.
pub fn analyze(
    corpus: &Corpus,
    mut spec: CohortSpec,
    models: Models,
    countries_top: usize,
) -> Result<Analysis, CliError> {
    spec.validate_selection()?;
    let table = hazen_percentiles(corpus);
    let citing = select_citing(corpus, &spec);
    if citing.is_empty() {
        return Err(CliError::Input(format!(
            "cohort is empty: no article with a {} address published in {:?}",
            spec.focal_country, spec.citing_years
        )));
    }
    let pairs = extract_window_refs(corpus, &citing, &spec);
    if pairs.is_empty() {
        return Err(CliError::Input(format!(
            "cohort is empty: {} citing articles but no cited article from the {} years before",
            citing.len(),
            spec.window_years
        )));
    }
    let ranking = top_referenced_countries(corpus, &pairs, &spec, countries_top)?;
    if spec.country_set.is_empty() {
        spec.country_set = ranking.iter().map(|(c, _)| c.clone()).collect();
    }
    spec.validate()?;
    let rows = rows_from_pairs(corpus, &pairs, &spec, &table);
    if rows.rows.is_empty() {
        return Err(CliError::Input(format!(
            "cohort is empty: all {} reference pairs were dropped",
            pairs.len()
        )));
    }
    let summary = summary_stats(&rows.rows, &spec)?;

    let mut out = BTreeMap::new();
    for &model in models.specs() {
        let fit = fit_rows(
            &rows.rows,
            &spec,
            model,
            &FitOptions::default(),
            &RobustOptions::default(),
        )?;
        let odds = odds_table(&fit, &OddsOptions::default())?;
        out.insert(model.label().to_owned(), ModelOutput { fit, odds });
    }
    let factor = match (out.get("A"), out.get("B")) {
        (Some(a), Some(b)) => Some(factor_change(&a.odds, &b.odds)?),
        _ => None,
    };
    let flag = CohortSpec::country_covariate(&spec.focal_country);
    let curve = out
        .iter()
        .next()
        .filter(|(_, m)| m.fit.index_of(&flag).is_some())
        .map(|(label, m)| {
            Ok::<_, CliError>(Curve {
                model: label.clone(),
                points: prediction_curve(&m.fit, &spec.citing_years, &flag)?,
                flag: flag.clone(),
            })
        })
        .transpose()?;

    Ok(Analysis {
        n_citing: citing.len(),
        n_pairs: pairs.len(),
        n_rows: rows.rows.len(),
        dropped_rows: rows.dropped,
        ranking,
        summary,
        models: out,
        factor,
        curve,
        rows,
        spec,
    })
}

/// Writes the analysis tables into `out` and returns their file names.
pub fn write_analysis(
    analysis: &Analysis,
    out: &Path,
    dump_rows: bool,
) -> Result<Vec<&'static str>, CliError> {
    create_dir(out)?;
    let a = analysis.models.get("A").map(|m| &m.odds);
    let b = analysis.models.get("B").map(|m| &m.odds);
    let curve = analysis
        .curve
        .as_ref()
        .map_or_else(|| tables::curve_tsv(&[]), |c| tables::curve_tsv(&c.points));
    let title = format!(
        "Odds ratios with 95% confidence intervals, focal country {}",
        analysis.spec.focal_country
    );
    let mut files = vec![
        (COUNTRIES_FILE, tables::countries_tsv(&analysis.ranking)),
        (SUMMARY_FILE, tables::summary_tsv(&analysis.summary)),
        (ODDS_FILE, tables::odds_tsv(a, b)?),
        (ODDS_MARKDOWN_FILE, tables::odds_markdown(&title, a, b)?),
        (CURVE_FILE, curve),
        (RESULTS_FILE, to_json_pretty(analysis)),
    ];
    if dump_rows {
        let names = analysis.spec.covariate_names(true);
        files.push((ROWS_FILE, tables::rows_tsv(&analysis.rows.rows, &names)));
    }
    for (name, text) in &files {
        write_file(&out.join(name), text.as_bytes())?;
    }
    Ok(files.into_iter().map(|(n, _)| n).collect())
}

pub struct AnalyzeArgs {
    pub source: CorpusSource,
    pub cohort: CohortArgs,
    pub models: Models,
    pub countries_top: usize,
    pub dump_rows: bool,
    pub out: PathBuf,
}

pub fn run_analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::new("analyze")?;
    let spec = args.cohort.resolve(&mut manifest)?;
    let corpus = args.source.load(&mut manifest)?;
    let analysis = analyze(&corpus, spec, args.models, args.countries_top)?;
    if analysis.curve.is_none() {
        eprintln!(
            "warning: `{}` is not in the country set; {CURVE_FILE} has no rows",
            CohortSpec::country_covariate(&analysis.spec.focal_country)
        );
    }
    let files = write_analysis(&analysis, &args.out, args.dump_rows)?;
    manifest.parameters = serde_json::json!({
        "cohort": analysis.spec,
        "model": args.models.specs().iter().map(|m| m.label()).collect::<Vec<_>>(),
        "countries_top": args.countries_top,
        "dump_rows": args.dump_rows,
    });
    manifest.finish(&args.out, &files)?;
    println!(
        "{} citing articles, {} rows ({} dropped), written to {}",
        analysis.n_citing,
        analysis.n_rows,
        analysis.dropped_rows,
        args.out.display()
    );
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct RobustnessOutput<'a> {
    #[serde(flatten)]
    report: &'a SweepReport,
    sign_disagreements: Vec<String>,
}

fn draws_tsv(report: &SweepReport) -> String {
    let mut out = String::from("config\tlabel\tcountries\tdrawn\n");
    for (i, c) in report.configs.iter().enumerate() {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            i + 1,
            c.label,
            c.countries.join(","),
            c.drawn.join(",")
        ));
    }
    out
}

pub fn config_odds_file(k: usize) -> String {
    format!("config{k}_odds.tsv")
}

pub fn run_robustness(
    source: &CorpusSource,
    cohort: &CohortArgs,
    seed: u64,
    out: &Path,
) -> Result<(), CliError> {
    let mut manifest = RunManifest::new("robustness")?;
    manifest.seed = Some(seed);
    manifest.rng = Some(rng::ALGORITHM.to_owned());
    let spec = cohort.resolve(&mut manifest)?;
    let corpus = source.load(&mut manifest)?;
    let table = hazen_percentiles(&corpus);
    let report = robustness_sweep(&corpus, &spec, &table, seed)?;
    let disagreements = sign_disagreements(&report);

    create_dir(out)?;
    let mut files: Vec<(String, String)> = vec![
        (RANKING_FILE.into(), tables::countries_tsv(&report.ranking)),
        (DRAWS_FILE.into(), draws_tsv(&report)),
    ];
    let mut markdown = String::new();
    for (i, c) in report.configs.iter().enumerate() {
        files.push((
            config_odds_file(i + 1),
            tables::odds_tsv(Some(&c.table_a), Some(&c.table_b))?,
        ));
        let title = format!("Configuration {}: {} countries", i + 1, c.label);
        markdown.push_str(&tables::odds_markdown(
            &title,
            Some(&c.table_a),
            Some(&c.table_b),
        )?);
        markdown.push('\n');
    }
    files.push((ROBUSTNESS_MARKDOWN_FILE.into(), markdown));
    files.push((
        ROBUSTNESS_FILE.into(),
        to_json_pretty(&RobustnessOutput {
            report: &report,
            sign_disagreements: disagreements.clone(),
        }),
    ));
    for (name, text) in &files {
        write_file(&out.join(name), text.as_bytes())?;
    }
    manifest.parameters = serde_json::json!({ "cohort": spec });
    let names: Vec<&str> = files.iter().map(|(n, _)| n.as_str()).collect();
    manifest.finish(out, &names)?;
    if disagreements.is_empty() {
        println!("coefficient signs agree across all three configurations");
    } else {
        println!("sign disagreements: {}", disagreements.join(", "));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct TruthFile<'a> {
    #[serde(flatten)]
    truth: &'a GroundTruth,
    config: &'a SynthConfig,
}

pub fn run_synth(config: Option<&Path>, seed: u64, out: &Path) -> Result<(), CliError> {
    let mut manifest = RunManifest::new("synth")?;
    manifest.seed = Some(seed);
    manifest.rng = Some(rng::ALGORITHM.to_owned());
    let cfg = match config {
        Some(path) => {
            manifest.add_input(path)?;
            manifest.config = Some(path.display().to_string());
            read_json::<SynthConfig>(path)?
        }
        None => SynthConfig::reference(),
    };
    let (corpus, truth) = generate(&cfg, seed)?;
    write_corpus(out, &corpus)?;
    write_file(
        &out.join(TRUTH_FILE),
        to_json_pretty(&TruthFile {
            truth: &truth,
            config: &cfg,
        })
        .as_bytes(),
    )?;
    manifest.parameters = serde_json::to_value(&cfg).expect("config serializes");
    manifest.finish(
        out,
        &[io::PAPERS_FILE, io::EDGES_FILE, io::CORPUS_FILE, TRUTH_FILE],
    )?;
    println!(
        "{} papers, {} citing articles, {} rows, written to {}",
        corpus.len(),
        truth.n_citing,
        truth.n_rows,
        out.display()
    );
    Ok(())
}
