//! Cluster sandwich covariance.
//!
//! `V = c * A⁻¹ (Σ_g s_g s_gᵀ) A⁻¹`, where `A` is the observed information at
//! the estimate, `s_g` the summed score contributions `x_i (y_i - p_i)` of
//! cluster `g`, and `c = G / (G - 1)` for `G` clusters when the small-sample
//! correction is on. The point estimate is not touched.

use alloc::vec;
use alloc::vec::Vec;

use super::{dot, logistic, Design, FitResult};
use crate::linalg;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RobustOptions {
    /// Multiply by `G / (G - 1)`.
    pub small_sample: bool,
}

impl Default for RobustOptions {
    fn default() -> Self {
        RobustOptions { small_sample: true }
    }
}

fn check(fit: &FitResult, design: &Design) -> Result<()> {
    if !fit.converged {
        return Err(Error::InvalidArgument("fit did not converge".into()));
    }
    if fit.n_params() != design.n_params() || fit.n_obs != design.n_obs() {
        return Err(Error::SpecMismatch(
            "fit and design disagree in shape".into(),
        ));
    }
    Ok(())
}

fn meat(
    fit: &FitResult,
    design: &Design,
    group: impl Fn(usize) -> usize,
    groups: usize,
) -> Vec<f64> {
    let p = design.n_params();
    let mut sums = vec![0.0; groups * p];
    for i in 0..design.n_obs() {
        let r = design.row(i);
        let resid = design.response()[i] - logistic(dot(r, &fit.beta));
        let s = &mut sums[group(i) * p..(group(i) + 1) * p];
        for (acc, v) in s.iter_mut().zip(r) {
            *acc += v * resid;
        }
    }
    let mut m = vec![0.0; p * p];
    for s in sums.chunks(p) {
        for a in 0..p {
            if s[a] == 0.0 {
                continue;
            }
            for b in a..p {
                m[a * p + b] += s[a] * s[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            m[a * p + b] = m[b * p + a];
        }
    }
    m
}

/// Cluster-robust covariance of a converged fit.
pub fn cluster_robust_covariance(
    fit: &FitResult,
    design: &Design,
    opts: &RobustOptions,
) -> Result<Vec<f64>> {
    check(fit, design)?;
    let g = design.n_clusters();
    if g < 2 {
        return Err(Error::TooFewClusters(g));
    }
    let p = design.n_params();
    let meat = meat(fit, design, |i| design.cluster_of(i), g);
    let mut v = linalg::sandwich(&fit.naive_cov, &meat, p);
    if opts.small_sample {
        let c = g as f64 / (g as f64 - 1.0);
        v.iter_mut().for_each(|x| *x *= c);
    }
    Ok(v)
}

/// White's HC0 sandwich: every row its own cluster, no correction.
pub fn hc0_covariance(fit: &FitResult, design: &Design) -> Result<Vec<f64>> {
    check(fit, design)?;
    let p = design.n_params();
    let meat = meat(fit, design, |i| i, design.n_obs());
    Ok(linalg::sandwich(&fit.naive_cov, &meat, p))
}

/// Returns the fit with `robust_cov` filled in.
pub fn with_robust(mut fit: FitResult, design: &Design, opts: &RobustOptions) -> Result<FitResult> {
    let v = cluster_robust_covariance(&fit, design, opts)?;
    fit.robust_cov = Some(v);
    Ok(fit)
}
