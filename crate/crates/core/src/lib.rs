//! Field-normalized citation percentiles, cited-reference cohorts and
//! cluster-robust logistic models of citing-article impact.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, hashing and the
//! command-line front end live in the `refimpact` companion crate.
//!
//! Pipeline:
//!
//! 1. [`corpus`]: papers and in-corpus citation edges, sealed after validation.
//! 2. [`normalize`]: Hazen percentiles per (field, year) stratum, top-1% flags,
//!    fractional country counts.
//! 3. [`cohort`]: focal-country citing articles, windowed cited references,
//!    one [`cohort::ObservationRow`] per reference.
//! 4. [`regress`]: Newton/IRLS logistic fits, cluster sandwich covariance,
//!    odds tables, predictions and the country-set robustness sweep.
//! 5. [`synth`]: seeded corpora with known coefficients, used to check the
//!    whole chain end to end.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod cohort;
pub mod corpus;
mod error;
pub mod linalg;
pub mod normalize;
pub mod regress;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
