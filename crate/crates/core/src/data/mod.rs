//! Domain types, dataset ingestion, aggregated statistics, and sample-based
//! second-moment estimators.
//!
//! The unit of input is a (outcome, prediction) pair plus predictions on
//! unlabeled data; raw covariates are never stored. Predictor application
//! happens upstream of this crate.

mod csv_io;

pub use csv_io::{
    ingest_csv, read_moments_csv, read_tables, write_problems_csv, write_tables_csv, DataRow,
    ProblemTable, Split,
};

use crate::error::Error;
use crate::numeric::{kahan_sum, mean};
use crate::Result;

/// One gold-standard observation: outcome `y` and the model's prediction `z`
/// on the same unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledPair {
    pub y: f64,
    pub z: f64,
}

/// One estimation problem: `n` labeled pairs plus `N` predictions on
/// unlabeled units.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemData {
    pub id: String,
    pub labeled: Vec<LabeledPair>,
    pub unlabeled_preds: Vec<f64>,
}

impl ProblemData {
    pub fn n(&self) -> usize {
        self.labeled.len()
    }

    pub fn big_n(&self) -> usize {
        self.unlabeled_preds.len()
    }
}

/// The three means a problem reduces to, plus the sample sizes they came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregatedStats {
    /// Mean outcome on labeled data.
    pub y_bar: f64,
    /// Mean prediction on labeled data.
    pub z_bar: f64,
    /// Mean prediction on unlabeled data.
    pub z_tilde: f64,
    pub n: usize,
    pub big_n: usize,
}

/// Where a [`SecondMoments`] triple came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentSource {
    /// Supplied externally (closed form or sidecar file); Cauchy-Schwarz holds.
    Known,
    /// Estimated from the data; sampling noise may violate Cauchy-Schwarz.
    Sample,
}

/// Per-problem second moments of the (prediction, outcome) pair:
/// `sigma2` = Var(Y), `tau2` = Var(f(X)), `gamma` = Cov(f(X), Y).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondMoments {
    pub sigma2: f64,
    pub tau2: f64,
    pub gamma: f64,
    pub source: MomentSource,
}

impl SecondMoments {
    /// Externally supplied moments. Enforces `sigma2, tau2 >= 0` and the
    /// Cauchy-Schwarz bound `gamma^2 <= sigma2 * tau2` (with a 1e-12 relative
    /// guard so closed-form values that sit exactly on the boundary are not
    /// rejected by rounding).
    pub fn known(sigma2: f64, tau2: f64, gamma: f64) -> Result<Self> {
        if sigma2 < 0.0 || !sigma2.is_finite() {
            return Err(Error::InvalidParam {
                name: "sigma2",
                reason: format!("must be finite and >= 0, got {sigma2}"),
            });
        }
        if tau2 < 0.0 || !tau2.is_finite() {
            return Err(Error::InvalidParam {
                name: "tau2",
                reason: format!("must be finite and >= 0, got {tau2}"),
            });
        }
        if !gamma.is_finite() {
            return Err(Error::InvalidParam {
                name: "gamma",
                reason: format!("must be finite, got {gamma}"),
            });
        }
        let bound = sigma2 * tau2;
        if gamma * gamma > bound * (1.0 + 1e-12) + f64::MIN_POSITIVE {
            return Err(Error::InvalidParam {
                name: "gamma",
                reason: format!("gamma^2 = {} exceeds sigma2*tau2 = {bound}", gamma * gamma),
            });
        }
        Ok(Self {
            sigma2,
            tau2,
            gamma,
            source: MomentSource::Known,
        })
    }
}

/// Aggregated statistics of one problem. Means use compensated summation.
pub fn get_means(p: &ProblemData) -> Result<AggregatedStats> {
    if p.labeled.is_empty() {
        return Err(Error::EmptyProblemSide {
            problem: p.id.clone(),
            kind: "labeled",
        });
    }
    if p.unlabeled_preds.is_empty() {
        return Err(Error::EmptyProblemSide {
            problem: p.id.clone(),
            kind: "unlabeled",
        });
    }
    let n = p.n() as f64;
    Ok(AggregatedStats {
        y_bar: kahan_sum(p.labeled.iter().map(|l| l.y)) / n,
        z_bar: kahan_sum(p.labeled.iter().map(|l| l.z)) / n,
        z_tilde: mean(&p.unlabeled_preds),
        n: p.n(),
        big_n: p.big_n(),
    })
}

/// Unbiased sample second moments.
///
/// * `sigma2` is the usual sample variance of the labeled outcomes
///   (divisor n-1).
/// * `tau2` pools labeled and unlabeled predictions, centered at the pooled
///   mean, divisor n+N-1.
/// * `gamma` centers outcomes at their labeled mean but predictions at the
///   pooled mean, divisor n-1. The asymmetric centering changes nothing:
///   sum_i (y_i - y_bar) * a vanishes for any common shift a, so this equals
///   the textbook sample covariance and stays exactly unbiased.
pub fn sample_moments(p: &ProblemData) -> Result<SecondMoments> {
    let n = p.n();
    let big_n = p.big_n();
    if n < 2 {
        return Err(Error::TooFewLabeled {
            problem: p.id.clone(),
            need: 2,
            have: n,
        });
    }
    let stats = get_means(p)?;

    let sigma2 = kahan_sum(p.labeled.iter().map(|l| {
        let d = l.y - stats.y_bar;
        d * d
    })) / (n as f64 - 1.0);

    let pooled_mean = kahan_sum(
        p.labeled
            .iter()
            .map(|l| l.z)
            .chain(p.unlabeled_preds.iter().copied()),
    ) / (n + big_n) as f64;

    let tau2 = kahan_sum(
        p.labeled
            .iter()
            .map(|l| l.z)
            .chain(p.unlabeled_preds.iter().copied())
            .map(|z| {
                let d = z - pooled_mean;
                d * d
            }),
    ) / ((n + big_n) as f64 - 1.0);

    let gamma = kahan_sum(
        p.labeled
            .iter()
            .map(|l| (l.y - stats.y_bar) * (l.z - pooled_mean)),
    ) / (n as f64 - 1.0);

    Ok(SecondMoments {
        sigma2,
        tau2,
        gamma,
        source: MomentSource::Sample,
    })
}
