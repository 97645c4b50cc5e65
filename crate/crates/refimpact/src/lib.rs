//! File formats and the command-line front end for `refimpact-core`.
//!
//! - [`io`]: JSON-lines papers and edges, the canonical corpus directory.
//! - [`tables`]: country ranking, summary, odds and curve tables.
//! - [`schema`]: structural checks for those tables.
//! - [`manifest`]: the per-run `manifest.json`.
//! - [`commands`] and [`cli`]: ingest, analyze, robustness and synth.

pub mod cli;
pub mod commands;
pub mod error;
pub mod io;
pub mod manifest;
pub mod schema;
pub mod tables;

pub use error::CliError;
