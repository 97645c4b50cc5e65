//! Argument parsing and dispatch.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands::{self, AnalyzeArgs, CohortArgs, CorpusSource, Models, DEFAULT_COUNTRIES_TOP};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "refimpact",
    version,
    about = "Impact of cited references on citing-article impact"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate JSON-lines paper and edge files and store a canonical corpus.
    Ingest {
        #[arg(long)]
        papers: PathBuf,
        #[arg(long)]
        edges: PathBuf,
        /// Year citation counts were taken (default: latest publication year).
        #[arg(long)]
        census_year: Option<i32>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Country ranking, summary statistics, odds tables and prediction curve.
    Analyze {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        cohort: CohortFlags,
        #[arg(long, value_enum, default_value = "both", ignore_case = true)]
        model: ModelArg,
        /// Length of the country ranking; also the country set when none is configured.
        #[arg(long, default_value_t = DEFAULT_COUNTRIES_TOP)]
        countries_top: usize,
        /// Also write the observation rows.
        #[arg(long)]
        dump_rows: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Refit with five, 15 and 20 country flags.
    Robustness {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        cohort: CohortFlags,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic corpus with known coefficients.
    Synth {
        /// Generator config (JSON); the reference config when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Corpus directory written by `ingest` or `synth`.
    #[arg(long, conflicts_with_all = ["papers", "edges"], required_unless_present_all = ["papers", "edges"])]
    corpus: Option<PathBuf>,
    #[arg(long, requires = "edges")]
    papers: Option<PathBuf>,
    #[arg(long, requires = "papers")]
    edges: Option<PathBuf>,
}

impl InputArgs {
    fn source(&self) -> Result<CorpusSource, CliError> {
        match (&self.corpus, &self.papers, &self.edges) {
            (Some(dir), None, None) => Ok(CorpusSource::Dir(dir.clone())),
            (None, Some(p), Some(e)) => Ok(CorpusSource::Files {
                papers: p.clone(),
                edges: e.clone(),
            }),
            _ => Err(CliError::Usage(
                "pass either --corpus or both --papers and --edges".into(),
            )),
        }
    }
}

#[derive(Debug, Args)]
pub struct CohortFlags {
    /// Cohort config (JSON with the cohort fields).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Focal country code.
    #[arg(long)]
    focal: Option<String>,
    /// Citing publication years, comma separated.
    #[arg(long, value_delimiter = ',')]
    years: Option<Vec<i32>>,
    /// Citation window in years.
    #[arg(long)]
    window: Option<u32>,
}

impl From<&CohortFlags> for CohortArgs {
    fn from(f: &CohortFlags) -> Self {
        CohortArgs {
            config: f.config.clone(),
            focal: f.focal.clone(),
            years: f.years.clone(),
            window: f.window,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    #[value(name = "A")]
    A,
    #[value(name = "B")]
    B,
    Both,
}

impl From<ModelArg> for Models {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::A => Models::A,
            ModelArg::B => Models::B,
            ModelArg::Both => Models::Both,
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest {
            papers,
            edges,
            census_year,
            out,
        } => commands::ingest(&papers, &edges, census_year, &out),
        Command::Analyze {
            input,
            cohort,
            model,
            countries_top,
            dump_rows,
            out,
        } => {
            if countries_top == 0 {
                return Err(CliError::Usage("--countries-top must be positive".into()));
            }
            commands::run_analyze(&AnalyzeArgs {
                source: input.source()?,
                cohort: (&cohort).into(),
                models: model.into(),
                countries_top,
                dump_rows,
                out,
            })
        }
        Command::Robustness {
            input,
            cohort,
            seed,
            out,
        } => commands::run_robustness(&input.source()?, &(&cohort).into(), seed, &out),
        Command::Synth { config, seed, out } => commands::run_synth(config.as_deref(), seed, &out),
    }
}
