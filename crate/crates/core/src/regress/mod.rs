//! Binary logistic regression with cluster-robust inference.
//!
//! The latent-variable model `y* = xᵀβ + ε` with logistic `ε` and
//! `y = 1{y* > 0}` gives `P(y = 1 | x) = 1 / (1 + exp(-xᵀβ))`. Coefficients
//! are fitted by Newton-Raphson on the log-likelihood, which for the logit
//! link is the same iteration as IRLS.

mod odds;
mod predict;
mod robust;
mod sweep;

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::cohort::{CohortSpec, ObservationRow};
use crate::linalg;
use crate::{Error, Result};

pub use odds::{
    factor_change, factor_ratio, normal_two_sided_p, odds_table, pct_change, stars, student_t_cdf,
    student_t_quantile, FactorRow, OddsOptions, OddsRow, OddsTable, Reference, Z_95,
};
pub use predict::{predict_probability, prediction_curve, CurvePoint};
pub use robust::{cluster_robust_covariance, hc0_covariance, with_robust, RobustOptions};
pub use sweep::{
    robustness_sweep, sign_disagreements, SweepConfig, SweepReport, SWEEP_CANDIDATE_RANKS,
    SWEEP_LABELS,
};

pub const INTERCEPT: &str = "intercept";

/// Model A leaves the cited paper's percentile out, model B includes it.
/// Covariate order is [`CohortSpec::covariate_names`] in both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub include_percentile: bool,
}

impl ModelSpec {
    pub const A: ModelSpec = ModelSpec {
        include_percentile: false,
    };
    pub const B: ModelSpec = ModelSpec {
        include_percentile: true,
    };

    pub fn label(&self) -> &'static str {
        if self.include_percentile {
            "B"
        } else {
            "A"
        }
    }
}

/// Row-major design matrix with an intercept column first.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    names: Vec<String>,
    n: usize,
    p: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    clusters: Vec<u32>,
    n_clusters: usize,
}

impl Design {
    /// `covariates` is row-major `n x names.len()` without the intercept.
    /// Without cluster labels every row is its own cluster.
    pub fn new(
        covariate_names: Vec<String>,
        covariates: &[f64],
        y: Vec<f64>,
        clusters: Option<Vec<u32>>,
    ) -> Result<Design> {
        let k = covariate_names.len();
        let n = y.len();
        if covariates.len() != n * k {
            return Err(Error::SpecMismatch(format!(
                "{} covariate values for {n} rows x {k} columns",
                covariates.len()
            )));
        }
        if y.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::InvalidArgument("responses must be 0 or 1".into()));
        }
        let p = k + 1;
        let mut x = Vec::with_capacity(n * p);
        for row in covariates.chunks(k.max(1)).take(n) {
            x.push(1.0);
            x.extend_from_slice(&row[..k]);
        }
        if k == 0 {
            x.resize(n, 1.0);
        }
        let mut names = vec![String::from(INTERCEPT)];
        names.extend(covariate_names);
        let (clusters, n_clusters) = match clusters {
            Some(c) => {
                if c.len() != n {
                    return Err(Error::SpecMismatch("cluster labels length".into()));
                }
                let mut distinct = c.clone();
                distinct.sort_unstable();
                distinct.dedup();
                // relabel densely
                let c = c
                    .iter()
                    .map(|v| distinct.binary_search(v).unwrap() as u32)
                    .collect();
                (c, distinct.len())
            }
            None => ((0..n as u32).collect(), n),
        };
        Ok(Design {
            names,
            n,
            p,
            x,
            y,
            clusters,
            n_clusters,
        })
    }

    /// Design for a model on observation rows; rows cluster by citing paper.
    pub fn from_rows(
        rows: &[ObservationRow],
        spec: &CohortSpec,
        model: ModelSpec,
    ) -> Result<Design> {
        let names = spec.covariate_names(model.include_percentile);
        let k = names.len();
        let mut cov = Vec::with_capacity(rows.len() * k);
        let mut ids: BTreeMap<&str, u32> = BTreeMap::new();
        let mut clusters = Vec::with_capacity(rows.len());
        for row in rows {
            let before = cov.len();
            row.push_covariates(model.include_percentile, &mut cov);
            if cov.len() - before != k {
                return Err(Error::SpecMismatch(format!(
                    "row `{}` does not match the cohort spec",
                    row.cluster_id
                )));
            }
            let next = ids.len() as u32;
            clusters.push(*ids.entry(row.cluster_id.as_str()).or_insert(next));
        }
        let y = rows.iter().map(|r| if r.y { 1.0 } else { 0.0 }).collect();
        Design::new(names, &cov, y, Some(clusters))
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_obs(&self) -> usize {
        self.n
    }

    pub fn n_params(&self) -> usize {
        self.p
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    pub fn response(&self) -> &[f64] {
        &self.y
    }

    pub fn cluster_of(&self, i: usize) -> usize {
        self.clusters[i] as usize
    }

    /// Column means, intercept included.
    pub fn means(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.p];
        for i in 0..self.n {
            for (acc, v) in m.iter_mut().zip(self.row(i)) {
                *acc += v;
            }
        }
        let n = self.n.max(1) as f64;
        m.iter_mut().for_each(|v| *v /= n);
        m
    }

    fn gram(&self) -> Vec<f64> {
        let p = self.p;
        let mut g = vec![0.0; p * p];
        for i in 0..self.n {
            let r = self.row(i);
            for a in 0..p {
                let ra = r[a];
                if ra == 0.0 {
                    continue;
                }
                for b in a..p {
                    g[a * p + b] += ra * r[b];
                }
            }
        }
        mirror_upper(&mut g, p);
        g
    }
}

fn mirror_upper(a: &mut [f64], p: usize) {
    for i in 0..p {
        for j in 0..i {
            a[i * p + j] = a[j * p + i];
        }
    }
}

/// `1 / (1 + exp(-eta))` without overflow.
pub fn logistic(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + libm::exp(-eta))
    } else {
        let e = libm::exp(eta);
        e / (1.0 + e)
    }
}

/// `ln(1 + exp(eta))` without overflow.
fn softplus(eta: f64) -> f64 {
    eta.max(0.0) + libm::log1p(libm::exp(-libm::fabs(eta)))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn log_likelihood(design: &Design, beta: &[f64]) -> f64 {
    (0..design.n)
        .map(|i| {
            let eta = dot(design.row(i), beta);
            design.y[i] * eta - softplus(eta)
        })
        .sum()
}

/// Gradient of the log-likelihood, `Xᵀ(y - p)`.
pub fn score(design: &Design, beta: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; design.p];
    for i in 0..design.n {
        let r = design.row(i);
        let resid = design.y[i] - logistic(dot(r, beta));
        for (acc, v) in g.iter_mut().zip(r) {
            *acc += v * resid;
        }
    }
    g
}

struct Evaluation {
    log_likelihood: f64,
    score: Vec<f64>,
    information: Vec<f64>,
}

fn evaluate(design: &Design, beta: &[f64]) -> Evaluation {
    let p = design.p;
    let mut ll = 0.0;
    let mut g = vec![0.0; p];
    let mut h = vec![0.0; p * p];
    for i in 0..design.n {
        let r = design.row(i);
        let eta = dot(r, beta);
        let mu = logistic(eta);
        let w = mu * (1.0 - mu);
        let resid = design.y[i] - mu;
        ll += design.y[i] * eta - softplus(eta);
        for a in 0..p {
            let ra = r[a];
            if ra == 0.0 {
                continue;
            }
            g[a] += ra * resid;
            let wa = w * ra;
            for b in a..p {
                h[a * p + b] += wa * r[b];
            }
        }
    }
    mirror_upper(&mut h, p);
    Evaluation {
        log_likelihood: ll,
        score: g,
        information: h,
    }
}

const SETTLED_STEP: f64 = 1e-4;

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(libm::fabs(*x)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Stop when the largest coefficient change or score component falls below this.
    pub tol: f64,
    /// A coefficient beyond this magnitude while the likelihood still rises
    /// is treated as separation.
    pub separation_bound: f64,
    /// Relative residual below which a design column counts as collinear.
    pub rank_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iter: 100,
            tol: 1e-8,
            separation_bound: 30.0,
            rank_tol: 1e-9,
        }
    }
}

/// A fitted model. Matrices are row-major `p x p`, intercept first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub names: Vec<String>,
    pub beta: Vec<f64>,
    /// Inverse of the observed information at the estimate.
    pub naive_cov: Vec<f64>,
    /// Cluster sandwich covariance, once computed.
    pub robust_cov: Option<Vec<f64>>,
    pub n_obs: usize,
    pub n_clusters: usize,
    pub iterations: usize,
    pub converged: bool,
    pub log_likelihood: f64,
    /// Largest absolute score component at `beta`.
    pub max_abs_score: f64,
    /// Design column means, intercept included.
    pub means: Vec<f64>,
}

impl FitResult {
    pub fn n_params(&self) -> usize {
        self.beta.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.index_of(name).map(|i| self.beta[i])
    }

    fn se_from(cov: &[f64], p: usize) -> Vec<f64> {
        (0..p)
            .map(|i| libm::sqrt(cov[i * p + i].max(0.0)))
            .collect()
    }

    pub fn naive_se(&self) -> Vec<f64> {
        Self::se_from(&self.naive_cov, self.n_params())
    }

    pub fn robust_se(&self) -> Option<Vec<f64>> {
        self.robust_cov
            .as_deref()
            .map(|c| Self::se_from(c, self.n_params()))
    }
}

fn check_rank(design: &Design, tol: f64) -> Result<()> {
    if let Some(dep) = linalg::first_dependency(&design.gram(), design.p, tol) {
        let mut cols: Vec<String> = dep
            .partners
            .iter()
            .map(|&j| design.names[j].clone())
            .collect();
        cols.push(design.names[dep.column].clone());
        return Err(Error::SingularDesign(cols));
    }
    Ok(())
}

fn separation_error(design: &Design, beta: &[f64]) -> Error {
    // Name the largest slope; the intercept only drifts along with it.
    let skip = usize::from(beta.len() > 1);
    let (i, v) = beta
        .iter()
        .enumerate()
        .skip(skip)
        .fold((0, 0.0f64), |(bi, bv), (i, &v)| {
            if libm::fabs(v) > libm::fabs(bv) {
                (i, v)
            } else {
                (bi, bv)
            }
        });
    Error::SeparationDetected {
        name: design.names[i].clone(),
        value: v,
    }
}

/// Maximum-likelihood logistic fit by Newton steps with step halving.
pub fn fit_logistic(design: &Design, opts: &FitOptions) -> Result<FitResult> {
    if design.n < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 rows, got {}",
            design.n
        )));
    }
    check_rank(design, opts.rank_tol)?;

    let p = design.p;
    let mut beta = vec![0.0; p];
    let mut eval = evaluate(design, &beta);
    let mut steps = 0;
    let mut converged = max_abs(&eval.score) < opts.tol;

    while !converged && steps < opts.max_iter {
        let Some(chol) = linalg::cholesky(&eval.information, p) else {
            // Weights collapsed to zero: fitted probabilities are at 0 or 1.
            return Err(separation_error(design, &beta));
        };
        let mut delta = eval.score.clone();
        linalg::cholesky_solve(&chol, p, &mut delta);

        let mut scale = 1.0;
        let (next_beta, next_eval) = loop {
            let candidate: Vec<f64> = beta
                .iter()
                .zip(&delta)
                .map(|(b, d)| b + scale * d)
                .collect();
            let e = evaluate(design, &candidate);
            let tolerance = 1e-12 * libm::fabs(eval.log_likelihood).max(1.0);
            if e.log_likelihood >= eval.log_likelihood - tolerance || scale < 1e-6 {
                break (candidate, e);
            }
            scale *= 0.5;
        };
        steps += 1;
        let improving = next_eval.log_likelihood > eval.log_likelihood;
        let change = max_abs(&delta) * scale;
        beta = next_beta;
        eval = next_eval;

        if improving && max_abs(&beta) > opts.separation_bound {
            return Err(separation_error(design, &beta));
        }
        // A vanishing score with a large step is a drifting separated fit,
        // not an optimum, so the score test also asks for a settled step.
        converged = change < opts.tol || (max_abs(&eval.score) < opts.tol && change < SETTLED_STEP);
    }

    let naive_cov =
        linalg::spd_inverse(&eval.information, p).ok_or_else(|| separation_error(design, &beta))?;
    let fit = FitResult {
        names: design.names.clone(),
        beta,
        naive_cov,
        robust_cov: None,
        n_obs: design.n,
        n_clusters: design.n_clusters,
        iterations: steps,
        converged,
        log_likelihood: eval.log_likelihood,
        max_abs_score: max_abs(&eval.score),
        means: design.means(),
    };
    if converged {
        Ok(fit)
    } else {
        Err(Error::NotConverged(Box::new(fit)))
    }
}

/// Fits a model on observation rows and attaches the cluster-robust covariance.
pub fn fit_rows(
    rows: &[ObservationRow],
    spec: &CohortSpec,
    model: ModelSpec,
    fit_opts: &FitOptions,
    robust_opts: &RobustOptions,
) -> Result<FitResult> {
    let design = Design::from_rows(rows, spec, model)?;
    let fit = fit_logistic(&design, fit_opts)?;
    with_robust(fit, &design, robust_opts)
}
