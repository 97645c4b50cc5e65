//! Odds ratios, Wald intervals, percentage change in odds and the A/B
//! factor-change column.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{FitResult, INTERCEPT};
use crate::{Error, Result};

/// Two-sided 95% normal critical value.
pub const Z_95: f64 = 1.959964;

/// Reference distribution for Wald tests and intervals.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reference {
    #[default]
    Normal,
    /// Student t with `G - 1` degrees of freedom for `G` clusters.
    T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OddsOptions {
    /// Covariate increase for the percentage change.
    pub delta: f64,
    pub reference: Reference,
}

impl Default for OddsOptions {
    fn default() -> Self {
        OddsOptions {
            delta: 1.0,
            reference: Reference::Normal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OddsRow {
    pub variable: String,
    pub beta: f64,
    pub se: f64,
    pub odds_ratio: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub pct_change: f64,
    pub p_value: f64,
    pub stars: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OddsTable {
    pub rows: Vec<OddsRow>,
    pub n_obs: usize,
    pub n_clusters: usize,
    /// Critical value used for the intervals.
    pub critical: f64,
}

impl OddsTable {
    pub fn row(&self, variable: &str) -> Option<&OddsRow> {
        self.rows.iter().find(|r| r.variable == variable)
    }
}

/// `100 * (exp(delta * beta) - 1)`.
pub fn pct_change(beta: f64, delta: f64) -> f64 {
    100.0 * (libm::exp(delta * beta) - 1.0)
}

pub fn stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

pub fn normal_two_sided_p(z: f64) -> f64 {
    libm::erfc(libm::fabs(z) / core::f64::consts::SQRT_2)
}

/// Regularized incomplete beta `I_x(a, b)` by Lentz's continued fraction.
fn incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = libm::lgamma(a + b) - libm::lgamma(a) - libm::lgamma(b)
        + a * libm::log(x)
        + b * libm::log1p(-x);
    let front = libm::exp(ln_front);
    if x > (a + 1.0) / (a + b + 2.0) {
        return 1.0 - incomplete_beta(1.0 - x, b, a);
    }
    const TINY: f64 = 1e-300;
    let mut c = 1.0;
    let mut d = 1.0 - (a + b) * x / (a + 1.0);
    if libm::fabs(d) < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..500 {
        let m = m as f64;
        let num = m * (b - m) * x / ((a + 2.0 * m - 1.0) * (a + 2.0 * m));
        d = 1.0 + num * d;
        if libm::fabs(d) < TINY {
            d = TINY;
        }
        c = 1.0 + num / c;
        if libm::fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let num = -(a + m) * (a + b + m) * x / ((a + 2.0 * m) * (a + 2.0 * m + 1.0));
        d = 1.0 + num * d;
        if libm::fabs(d) < TINY {
            d = TINY;
        }
        c = 1.0 + num / c;
        if libm::fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let step = d * c;
        h *= step;
        if libm::fabs(step - 1.0) < 1e-15 {
            break;
        }
    }
    front * h / a
}

pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    let x = df / (df + t * t);
    let tail = 0.5 * incomplete_beta(x, 0.5 * df, 0.5);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Quantile of Student's t by bisection on the cdf.
pub fn student_t_quantile(prob: f64, df: f64) -> f64 {
    let (mut lo, mut hi) = (-1e3, 1e3);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if student_t_cdf(mid, df) < prob {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Odds table from the robust covariance of a fit (intercept omitted).
pub fn odds_table(fit: &FitResult, opts: &OddsOptions) -> Result<OddsTable> {
    let se = fit
        .robust_se()
        .ok_or_else(|| Error::InvalidArgument("robust covariance not computed".into()))?;
    let df = fit.n_clusters.saturating_sub(1) as f64;
    let critical = match opts.reference {
        Reference::Normal => Z_95,
        Reference::T => {
            if df < 1.0 {
                return Err(Error::TooFewClusters(fit.n_clusters));
            }
            student_t_quantile(0.975, df)
        }
    };
    let rows = fit
        .names
        .iter()
        .zip(&fit.beta)
        .zip(&se)
        .filter(|((name, _), _)| name.as_str() != INTERCEPT)
        .map(|((name, &beta), &se)| {
            let stat = beta / se;
            let p_value = match opts.reference {
                Reference::Normal => normal_two_sided_p(stat),
                Reference::T => 2.0 * (1.0 - student_t_cdf(libm::fabs(stat), df)),
            };
            OddsRow {
                variable: name.clone(),
                beta,
                se,
                odds_ratio: libm::exp(beta),
                ci_low: libm::exp(beta - critical * se),
                ci_high: libm::exp(beta + critical * se),
                pct_change: pct_change(beta, opts.delta),
                p_value,
                stars: stars(p_value).into(),
            }
        })
        .collect();
    Ok(OddsTable {
        rows,
        n_obs: fit.n_obs,
        n_clusters: fit.n_clusters,
        critical,
    })
}

/// `pct_a / pct_b` when both are nonzero with the same sign, else `None`.
pub fn factor_ratio(pct_a: f64, pct_b: f64) -> Option<f64> {
    const EPS: f64 = 1e-9;
    if libm::fabs(pct_a) < EPS || libm::fabs(pct_b) < EPS {
        return None;
    }
    if (pct_a > 0.0) != (pct_b > 0.0) {
        return None;
    }
    Some(pct_a / pct_b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorRow {
    pub variable: String,
    pub pct_a: Option<f64>,
    pub pct_b: Option<f64>,
    pub factor: Option<f64>,
}

/// Factor-change column for a model A / model B pair, in model B order.
/// Every covariate of A must appear in B in the same relative order.
pub fn factor_change(a: &OddsTable, b: &OddsTable) -> Result<Vec<FactorRow>> {
    let mut next_a = 0;
    let mut out = Vec::with_capacity(b.rows.len());
    for rb in &b.rows {
        let pct_a = match a.rows.get(next_a) {
            Some(ra) if ra.variable == rb.variable => {
                next_a += 1;
                Some(ra.pct_change)
            }
            _ => None,
        };
        out.push(FactorRow {
            variable: rb.variable.clone(),
            pct_a,
            pct_b: Some(rb.pct_change),
            factor: pct_a.and_then(|pa| factor_ratio(pa, rb.pct_change)),
        });
    }
    if next_a != a.rows.len() {
        return Err(Error::SpecMismatch(format!(
            "covariate `{}` of model A is missing from model B",
            a.rows[next_a].variable
        )));
    }
    Ok(out)
}
