use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{dot, logistic, FitResult};
use crate::{Error, Result};

/// Fitted probability for one covariate profile (intercept implied).
pub fn predict_probability(fit: &FitResult, covariates: &[f64]) -> Result<f64> {
    if covariates.len() + 1 != fit.n_params() {
        return Err(Error::SpecMismatch(format!(
            "expected {} covariates, got {}",
            fit.n_params() - 1,
            covariates.len()
        )));
    }
    Ok(logistic(fit.beta[0] + dot(&fit.beta[1..], covariates)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub citing_year: i32,
    pub flag: bool,
    pub probability: f64,
}

/// Probabilities for every citing year x {flag off, flag on}, all other
/// covariates at their sample means.
///
/// `year_levels` are the citing years of the cohort; the first is the
/// baseline without a dummy.
pub fn prediction_curve(
    fit: &FitResult,
    year_levels: &[i32],
    flag_covariate: &str,
) -> Result<Vec<CurvePoint>> {
    let flag = fit
        .index_of(flag_covariate)
        .filter(|&i| i > 0)
        .ok_or_else(|| Error::SpecMismatch(format!("no covariate `{flag_covariate}` in fit")))?;
    let dummies = year_levels
        .iter()
        .skip(1)
        .map(|y| {
            let name = format!("citing_year_{y}");
            fit.index_of(&name)
                .ok_or_else(|| Error::SpecMismatch(format!("no covariate `{name}` in fit")))
        })
        .collect::<Result<Vec<usize>>>()?;

    let mut out = Vec::with_capacity(year_levels.len() * 2);
    let mut x = fit.means.clone();
    for (level, &year) in year_levels.iter().enumerate() {
        for &d in &dummies {
            x[d] = 0.0;
        }
        if level > 0 {
            x[dummies[level - 1]] = 1.0;
        }
        for on in [false, true] {
            x[flag] = if on { 1.0 } else { 0.0 };
            out.push(CurvePoint {
                citing_year: year,
                flag: on,
                probability: predict_probability(fit, &x[1..])?,
            });
        }
    }
    Ok(out)
}
