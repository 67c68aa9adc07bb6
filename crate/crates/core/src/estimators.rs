//! Point estimators: classical, prediction average, lambda-indexed PPI,
//! power-tuned PT, the PAS shrinkage assembly, and the two baseline
//! shrinkage estimators.
//!
//! Estimate vectors are plain `Vec<f64>`, index-aligned with problem order.

use crate::data::{AggregatedStats, SecondMoments};
use crate::error::Error;
use crate::numeric::mean;
use crate::Result;

/// Per-problem quantities derived from power tuning:
/// the optimal tuning weight `lambda_star`, the variance `sigma_tilde2` of
/// the tuned estimator, and its covariance `gamma_tilde` with the unlabeled
/// prediction mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PTContext {
    pub lambda_star: f64,
    pub sigma_tilde2: f64,
    pub gamma_tilde: f64,
}

/// Floor applied to plug-in variances so shrinkage weights stay well-defined
/// when sample noise drives the plug-in negative.
pub(crate) fn variance_floor(sigma2_over_n: f64) -> f64 {
    1e-12 * sigma2_over_n.max(1.0)
}

/// Sample mean of the labeled outcomes.
pub fn classical(stats: &AggregatedStats) -> f64 {
    stats.y_bar
}

/// Mean prediction on the unlabeled data.
pub fn prediction_avg(stats: &AggregatedStats) -> f64 {
    stats.z_tilde
}

/// The lambda-indexed family `y_bar + lambda (z_tilde - z_bar)`.
/// `lambda = 0` is the classical estimator, `lambda = 1` the vanilla
/// prediction-powered estimator.
pub fn ppi_lambda(stats: &AggregatedStats, lambda: f64) -> f64 {
    stats.y_bar + lambda * (stats.z_tilde - stats.z_bar)
}

/// Variance of `ppi_lambda` at a given lambda:
/// `sigma2/n + (n+N)/(nN) lambda^2 tau2 - 2 lambda gamma / n`.
pub fn ppi_variance(mom: &SecondMoments, n: usize, big_n: usize, lambda: f64) -> f64 {
    let (n, big_n) = (n as f64, big_n as f64);
    mom.sigma2 / n + (n + big_n) / (n * big_n) * lambda * lambda * mom.tau2
        - 2.0 / n * lambda * mom.gamma
}

/// Power-tuning context for one problem.
///
/// With `tau2 > 0`:
/// `lambda_star = (N/(n+N)) gamma / tau2`,
/// `sigma_tilde2 = sigma2/n - (N/(n(n+N))) gamma^2 / tau2` (floored),
/// `gamma_tilde = gamma / (n+N)`.
/// A constant predictor (`tau2 = 0`) carries no signal, so tuning is
/// switched off: `lambda_star = 0`, `sigma_tilde2 = sigma2/n`,
/// `gamma_tilde = 0`.
pub fn pt_context(stats: &AggregatedStats, mom: &SecondMoments) -> PTContext {
    let n = stats.n as f64;
    let big_n = stats.big_n as f64;
    if mom.tau2 > 0.0 {
        let lambda_star = big_n / (n + big_n) * mom.gamma / mom.tau2;
        let raw = mom.sigma2 / n - big_n / (n * (n + big_n)) * mom.gamma * mom.gamma / mom.tau2;
        PTContext {
            lambda_star,
            sigma_tilde2: raw.max(variance_floor(mom.sigma2 / n)),
            gamma_tilde: mom.gamma / (n + big_n),
        }
    } else {
        PTContext {
            lambda_star: 0.0,
            sigma_tilde2: mom.sigma2 / n,
            gamma_tilde: 0.0,
        }
    }
}

/// The power-tuned estimator: `ppi_lambda` at `lambda_star`.
pub fn pt(stats: &AggregatedStats, ctx: &PTContext) -> f64 {
    ppi_lambda(stats, ctx.lambda_star)
}

/// Global shrinkage level `omega` and the per-problem weights it induces,
/// `omega_j = omega / (omega + sigma_tilde2_j)`. `omega = 0` zeroes every
/// weight; `f64::INFINITY` is the exact full-recovery sentinel (weight 1).
#[derive(Debug, Clone, PartialEq)]
pub struct ShrinkageWeights {
    pub omega: f64,
    pub per_problem: Vec<f64>,
}

impl ShrinkageWeights {
    pub fn new(omega: f64, sigma_tilde2s: &[f64]) -> Result<Self> {
        if omega.is_nan() || omega < 0.0 {
            return Err(Error::InvalidParam {
                name: "omega",
                reason: format!("must be >= 0 or the infinity sentinel, got {omega}"),
            });
        }
        Ok(Self {
            omega,
            per_problem: sigma_tilde2s
                .iter()
                .map(|&s2| shrink_weight(omega, s2))
                .collect(),
        })
    }
}

/// One shrinkage weight. The endpoints are exact by construction rather than
/// by floating arithmetic.
pub fn shrink_weight(omega: f64, sigma_tilde2: f64) -> f64 {
    if omega == 0.0 {
        0.0
    } else if omega.is_infinite() {
        1.0
    } else {
        omega / (omega + sigma_tilde2)
    }
}

fn check_len(what: &'static str, left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::LengthMismatch { what, left, right });
    }
    Ok(())
}

/// Final assembly: `omega_j pt_j + (1 - omega_j) z_tilde_j` with
/// `omega_j = omega_hat / (omega_hat + sigma_tilde2_j)`.
/// `omega_hat = 0` returns the prediction means exactly; the infinity
/// sentinel returns the PT estimates exactly.
pub fn pas_assemble(
    pt_vals: &[f64],
    z_tildes: &[f64],
    ctxs: &[PTContext],
    omega_hat: f64,
) -> Result<Vec<f64>> {
    check_len("pas_assemble inputs", pt_vals.len(), z_tildes.len())?;
    check_len("pas_assemble contexts", pt_vals.len(), ctxs.len())?;
    let weights = ShrinkageWeights::new(
        omega_hat,
        &ctxs.iter().map(|c| c.sigma_tilde2).collect::<Vec<_>>(),
    )?;
    Ok(combine(pt_vals, z_tildes, &weights.per_problem))
}

pub(crate) fn combine(source: &[f64], target: &[f64], weights: &[f64]) -> Vec<f64> {
    source
        .iter()
        .zip(target)
        .zip(weights)
        .map(|((&s, &t), &w)| {
            if w == 0.0 {
                t
            } else if w == 1.0 {
                s
            } else {
                w * s + (1.0 - w) * t
            }
        })
        .collect()
}

/// Shrink the classical estimator straight toward the prediction mean,
/// skipping power tuning: weights use `sigma2_j / n_j`.
pub fn shrink_classical(
    stats: &[AggregatedStats],
    moms: &[SecondMoments],
    omega_hat: f64,
) -> Result<Vec<f64>> {
    check_len("shrink_classical inputs", stats.len(), moms.len())?;
    let s2: Vec<f64> = stats
        .iter()
        .zip(moms)
        .map(|(s, m)| m.sigma2 / s.n as f64)
        .collect();
    let weights = ShrinkageWeights::new(omega_hat, &s2)?;
    let y_bars: Vec<f64> = stats.iter().map(classical).collect();
    let z_tildes: Vec<f64> = stats.iter().map(prediction_avg).collect();
    Ok(combine(&y_bars, &z_tildes, &weights.per_problem))
}

/// Shrink each PT estimate toward the PT group mean.
pub fn shrink_average(pt_vals: &[f64], ctxs: &[PTContext], omega_hat: f64) -> Result<Vec<f64>> {
    check_len("shrink_average inputs", pt_vals.len(), ctxs.len())?;
    if pt_vals.len() < 2 {
        return Err(Error::TooFewProblems {
            what: "shrink_average",
            need: 2,
            have: pt_vals.len(),
        });
    }
    let group_mean = mean(pt_vals);
    let weights = ShrinkageWeights::new(
        omega_hat,
        &ctxs.iter().map(|c| c.sigma_tilde2).collect::<Vec<_>>(),
    )?;
    let targets = vec![group_mean; pt_vals.len()];
    Ok(combine(pt_vals, &targets, &weights.per_problem))
}
