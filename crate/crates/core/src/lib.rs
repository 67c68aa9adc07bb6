//! Compound mean estimation with black-box predictions.
//!
//! Many parallel problems each come with a small labeled sample of
//! (outcome, prediction) pairs and a large pool of predictions on unlabeled
//! data. This crate estimates every problem mean at once:
//!
//! * per-problem power tuning turns the predictions into a variance-reduction
//!   device (`estimators::pt`),
//! * adaptive shrinkage then reuses the unlabeled prediction means as a
//!   shrinkage target, with the global shrinkage level chosen by minimizing a
//!   correlation-aware unbiased risk estimate (`risk`),
//! * `uni` provides the fully sample-based variants that need no known
//!   second moments,
//! * `synth` generates data from a two-parameter Gaussian toy model with
//!   closed-form moment oracles,
//! * `bench` is a seeded Monte-Carlo harness that scores every estimator
//!   against ground truth (or split-based pseudo truth) and emits
//!   machine-readable reports.

pub mod bench;
pub mod data;
pub mod error;
pub mod estimators;
pub(crate) mod numeric;
pub mod risk;
pub mod rng;
pub mod synth;
pub mod uni;

pub use error::Error;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
