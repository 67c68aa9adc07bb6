//! Synthetic data laboratory.
//!
//! The generative model, per problem: a location `eta` drawn uniformly from
//! [-1, 1], covariates `X ~ N(eta, psi^2)`, outcomes
//! `Y | X ~ N(2 eta X - eta^2, c)`, so the problem mean is `theta = eta^2`.
//! Predictions come from one of two fixed predictors, `f(x) = |x|` or
//! `f(x) = x^2`, applied to fresh covariate draws. Every first and second
//! moment of `(f(X), Y)` has a closed form, which makes the model a moment
//! oracle for everything else in the crate.

use crate::data::{
    DataRow, LabeledPair, MomentSource, ProblemData, ProblemTable, SecondMoments, Split,
};
use crate::rng::{substream, uniform, NormalSampler};

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_2_SQRT_PI, PI};

/// The two bundled predictors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Predictor {
    Abs,
    Square,
}

impl Predictor {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Predictor::Abs => x.abs(),
            Predictor::Square => x * x,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Predictor::Abs => "abs",
            Predictor::Square => "square",
        }
    }
}

impl std::str::FromStr for Predictor {
    type Err = crate::Error;
    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "abs" => Ok(Predictor::Abs),
            "square" => Ok(Predictor::Square),
            other => Err(crate::Error::InvalidParam {
                name: "predictor",
                reason: format!("expected abs|square, got {other:?}"),
            }),
        }
    }
}

/// Generator configuration. The default noise constants are `psi = 0.1` and
/// `c = 0.05`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub m: usize,
    pub n: usize,
    pub big_n: usize,
    pub psi: f64,
    pub c: f64,
    pub predictor: Predictor,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            m: 200,
            n: 20,
            big_n: 80,
            psi: 0.1,
            c: 0.05,
            predictor: Predictor::Square,
            seed: 0,
        }
    }
}

/// Ground truth for one problem: the latent location, the estimand, and the
/// closed-form moments of `(f(X), Y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthTruth {
    pub eta: f64,
    pub theta: f64,
    pub mu: f64,
    pub sigma2: f64,
    pub tau2: f64,
    pub gamma: f64,
}

impl SynthTruth {
    /// The moment triple as externally known moments. Cauchy-Schwarz holds
    /// analytically for both predictor branches, so no validation round-trip
    /// is needed.
    pub fn moments(&self) -> SecondMoments {
        SecondMoments {
            sigma2: self.sigma2,
            tau2: self.tau2,
            gamma: self.gamma,
            source: MomentSource::Known,
        }
    }
}

/// Standard normal CDF, absolute error below 1e-12.
///
/// Built from the error function: a Maclaurin series for |x| <= 2 and the
/// classical continued fraction for the upper tail (evaluated with modified
/// Lentz). Both pieces are plain arithmetic on derived quantities; no fitted
/// coefficient tables.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Complementary error function on the whole line.
pub fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        2.0 - erfc(-x)
    } else if x <= 2.0 {
        1.0 - erf_series(x)
    } else {
        erfc_tail(x)
    }
}

/// erf via its Maclaurin series, for 0 <= x <= 2:
/// `erf(x) = (2/sqrt(pi)) sum_k (-1)^k x^(2k+1) / (k! (2k+1))`.
/// Terms at x = 2 peak near 2.4, so the alternating sum costs at most a few
/// ulps; truncation below 1e-18 leaves ~1e-14 absolute error.
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut power = x; // (-1)^k x^(2k+1) / k!
    let mut sum = x;
    for k in 1..200 {
        power *= -x2 / k as f64;
        let add = power / (2.0 * k as f64 + 1.0);
        sum += add;
        if add.abs() < 1e-18 {
            break;
        }
    }
    FRAC_2_SQRT_PI * sum
}

/// erfc for x > 2 via the continued fraction
/// `sqrt(pi) e^(x^2) erfc(x) = 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))`,
/// evaluated bottom-up with modified Lentz.
fn erfc_tail(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = TINY;
    let mut c = f;
    let mut d = 0.0;
    for n in 1..400 {
        let a = if n == 1 { 1.0 } else { (n as f64 - 1.0) / 2.0 };
        d = x + a * d;
        if d == 0.0 {
            d = TINY;
        }
        c = x + a / c;
        if c == 0.0 {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-17 {
            break;
        }
    }
    (-x * x).exp() / PI.sqrt() * f
}

/// Closed-form model parameters at a given `eta`.
///
/// Both branches share `theta = eta^2` and `sigma2 = 4 eta^2 psi^2 + c`.
///
/// Square branch (`E[X^2] = eta^2 + psi^2` etc. from normal moments):
/// `gamma = 4 eta^2 psi^2`, `mu = eta^2 + psi^2`,
/// `tau2 = 2 psi^4 + 4 eta^2 psi^2`.
///
/// Abs branch: `mu` is the folded-normal mean
/// `psi sqrt(2/pi) exp(-eta^2/(2 psi^2)) + eta (2 Phi(eta/psi) - 1)` and
/// `tau2 = eta^2 + psi^2 - mu^2` since `|X|^2 = X^2`. For the covariance,
/// `E[Y|X] = 2 eta X - eta^2` gives `gamma = 2 eta Cov(|X|, X)`, and for
/// `X ~ N(eta, psi^2)` the cross moment reduces to
/// `Cov(|X|, X) = psi^2 (2 Phi(eta/psi) - 1)` (the half-normal pieces of
/// `E[X|X|]` cancel against `eta * mu`). Hence
/// `gamma = 2 eta psi^2 (2 Phi(eta/psi) - 1)`. See the tests for a
/// simulation contrast against two plausible mis-transcriptions of these
/// displays (an unsquared exponent in `mu`, and the exp form of `gamma`).
pub fn synth_params(eta: f64, cfg: &SynthConfig) -> SynthTruth {
    let psi2 = cfg.psi * cfg.psi;
    let theta = eta * eta;
    let sigma2 = 4.0 * eta * eta * psi2 + cfg.c;
    match cfg.predictor {
        Predictor::Square => SynthTruth {
            eta,
            theta,
            mu: eta * eta + psi2,
            sigma2,
            tau2: 2.0 * psi2 * psi2 + 4.0 * eta * eta * psi2,
            gamma: 4.0 * eta * eta * psi2,
        },
        Predictor::Abs => {
            let reflected = 2.0 * norm_cdf(eta / cfg.psi) - 1.0;
            let gauss_part = cfg.psi * (2.0 / PI).sqrt() * (-eta * eta / (2.0 * psi2)).exp();
            let mu = gauss_part + eta * reflected;
            SynthTruth {
                eta,
                theta,
                mu,
                sigma2,
                tau2: eta * eta + psi2 - mu * mu,
                gamma: 2.0 * eta * psi2 * reflected,
            }
        }
    }
}

/// |Cov(X, Y)| / Var(Y) = 2|eta| psi^2 / (4 eta^2 psi^2 + c): how much of the
/// outcome variance the covariate can explain, independent of the predictor.
/// Minimal at eta = 0 and increasing in |eta| on [0, 1] for the default
/// constants.
pub fn predictability_ratio(eta: f64, cfg: &SynthConfig) -> f64 {
    let psi2 = cfg.psi * cfg.psi;
    2.0 * eta.abs() * psi2 / (4.0 * eta * eta * psi2 + cfg.c)
}

/// Draw one dataset (replicate 0 of the substream layout).
pub fn synth_draw(cfg: &SynthConfig) -> (Vec<ProblemData>, Vec<SynthTruth>) {
    synth_draw_replicate(cfg, 0)
}

/// Draw replicate `k`. Problem `j` consumes only the `(k, j)` substream, in
/// the fixed order: eta, then n interleaved (X, Y) pairs, then N unlabeled
/// covariates. Identical output for any parallel schedule.
pub fn synth_draw_replicate(cfg: &SynthConfig, k: u32) -> (Vec<ProblemData>, Vec<SynthTruth>) {
    let mut problems = Vec::with_capacity(cfg.m);
    let mut truths = Vec::with_capacity(cfg.m);
    for j in 0..cfg.m {
        let mut rng = substream(cfg.seed, k, j as u32);
        let mut normals = NormalSampler::new();
        let eta = uniform(&mut rng, -1.0, 1.0);
        let truth = synth_params(eta, cfg);
        let sqrt_c = cfg.c.sqrt();

        let labeled = (0..cfg.n)
            .map(|_| {
                let x = eta + cfg.psi * normals.sample(&mut rng);
                let y = 2.0 * eta * x - eta * eta + sqrt_c * normals.sample(&mut rng);
                LabeledPair {
                    y,
                    z: cfg.predictor.apply(x),
                }
            })
            .collect();
        let unlabeled_preds = (0..cfg.big_n)
            .map(|_| {
                cfg.predictor
                    .apply(eta + cfg.psi * normals.sample(&mut rng))
            })
            .collect();

        problems.push(ProblemData {
            id: format!("synth-{j}"),
            labeled,
            unlabeled_preds,
        });
        truths.push(truth);
    }
    (problems, truths)
}

/// Draw fully labeled tables: every row keeps its outcome, the first `n`
/// rows per problem are tagged labeled and the remaining `big_n` unlabeled.
/// This is the shape benchmark inputs take (outcomes everywhere so pseudo
/// truths exist), and the source of the committed test fixture.
pub fn synth_tables(cfg: &SynthConfig) -> (Vec<ProblemTable>, Vec<SynthTruth>) {
    let mut tables = Vec::with_capacity(cfg.m);
    let mut truths = Vec::with_capacity(cfg.m);
    for j in 0..cfg.m {
        let mut rng = substream(cfg.seed, 0, j as u32);
        let mut normals = NormalSampler::new();
        let eta = uniform(&mut rng, -1.0, 1.0);
        truths.push(synth_params(eta, cfg));
        let sqrt_c = cfg.c.sqrt();
        let rows = (0..cfg.n + cfg.big_n)
            .map(|i| {
                let x = eta + cfg.psi * normals.sample(&mut rng);
                let y = 2.0 * eta * x - eta * eta + sqrt_c * normals.sample(&mut rng);
                DataRow {
                    split: if i < cfg.n {
                        Split::Labeled
                    } else {
                        Split::Unlabeled
                    },
                    y: Some(y),
                    f: cfg.predictor.apply(x),
                }
            })
            .collect();
        tables.push(ProblemTable {
            id: format!("synth-{j}"),
            rows,
            first_row: 0,
        });
    }
    (tables, truths)
}
