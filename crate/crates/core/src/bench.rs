//! Monte-Carlo benchmark harness: replicate splitting, pseudo truths,
//! metrics, and the runners behind the command-line surface.
//!
//! Replicates execute in parallel (rayon) but all randomness is tied to
//! (replicate, problem) substreams and results are reduced in replicate
//! order, so a report depends only on its configuration and seed, never on
//! the thread count.

use std::io::Write;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde_json::json;

use crate::data::{
    get_means, sample_moments, AggregatedStats, LabeledPair, ProblemData, ProblemTable,
    SecondMoments,
};
use crate::error::Error;
use crate::estimators::{
    classical, pas_assemble, ppi_lambda, prediction_avg, pt, pt_context, shrink_average,
    shrink_classical, PTContext,
};
use crate::numeric::{mean, sample_sd};
use crate::risk::{
    cure_compound, cure_shrink_classical, median_scale, minimize_omega, minimize_omega_on_grid,
    sure_grand_mean, RiskCurve, DEFAULT_GRID_POINTS,
};
use crate::rng::{permutation, substream};
use crate::synth::{synth_draw_replicate, SynthConfig};
use crate::uni::{lambda_hat_clip, uni_plugins, unipas, unipt};
use crate::Result;

/// Where the second moments for the moment-based estimators come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentsMode {
    Known,
    Sample,
}

impl std::str::FromStr for MomentsMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "known" => Ok(MomentsMode::Known),
            "sample" => Ok(MomentsMode::Sample),
            other => Err(Error::InvalidParam {
                name: "moments",
                reason: format!("expected known|sample, got {other:?}"),
            }),
        }
    }
}

/// Every estimator the harness can score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    Classical,
    PredictionAvg,
    Ppi,
    Pt,
    ShrinkClassical,
    ShrinkAvg,
    Pas,
    UniPt,
    UniPas,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 9] = [
        EstimatorKind::Classical,
        EstimatorKind::PredictionAvg,
        EstimatorKind::Ppi,
        EstimatorKind::Pt,
        EstimatorKind::ShrinkClassical,
        EstimatorKind::ShrinkAvg,
        EstimatorKind::Pas,
        EstimatorKind::UniPt,
        EstimatorKind::UniPas,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Classical => "classical",
            EstimatorKind::PredictionAvg => "prediction-avg",
            EstimatorKind::Ppi => "ppi",
            EstimatorKind::Pt => "pt",
            EstimatorKind::ShrinkClassical => "shrink-classical",
            EstimatorKind::ShrinkAvg => "shrink-avg",
            EstimatorKind::Pas => "pas",
            EstimatorKind::UniPt => "unipt",
            EstimatorKind::UniPas => "unipas",
        }
    }

    fn needs_moments(self) -> bool {
        matches!(
            self,
            EstimatorKind::Pt
                | EstimatorKind::ShrinkClassical
                | EstimatorKind::ShrinkAvg
                | EstimatorKind::Pas
        )
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        EstimatorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParam {
                name: "estimators",
                reason: format!(
                    "unknown estimator {s:?}; valid: {}",
                    EstimatorKind::ALL.map(|k| k.name()).join(", ")
                ),
            })
    }
}

/// Parse a comma-separated estimator list; `all` selects every estimator.
/// Output is in canonical order with duplicates removed.
pub fn parse_estimators(list: &str) -> Result<Vec<EstimatorKind>> {
    if list.trim() == "all" {
        return Ok(EstimatorKind::ALL.to_vec());
    }
    let mut requested = Vec::new();
    for part in list.split(',') {
        requested.push(part.trim().parse::<EstimatorKind>()?);
    }
    Ok(EstimatorKind::ALL
        .into_iter()
        .filter(|k| requested.contains(k))
        .collect())
}

/// Split configuration for the real-data benchmark: the unlabeled fraction
/// `ratio`, the replicate count, and the run seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitPlan {
    pub ratio: f64,
    pub replicates: usize,
    pub seed: u64,
}

impl SplitPlan {
    /// Per-problem sizes: `N = floor(ratio * T)`, `n = T - N`, requiring
    /// `n >= 2` and `N >= 1`.
    pub fn sizes(&self, total: usize) -> Result<(usize, usize)> {
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::InvalidParam {
                name: "ratio",
                reason: format!("must lie in (0, 1), got {}", self.ratio),
            });
        }
        let big_n = (self.ratio * total as f64).floor() as usize;
        let n = total - big_n;
        if n < 2 {
            return Err(Error::InvalidParam {
                name: "ratio",
                reason: format!("leaves n = {n} < 2 labeled rows of {total}"),
            });
        }
        if big_n < 1 {
            return Err(Error::InvalidParam {
                name: "ratio",
                reason: format!("leaves no unlabeled rows of {total}"),
            });
        }
        Ok((n, big_n))
    }
}

/// Mean outcome over all rows of each problem, the split-based stand-in for
/// the unknown problem mean. Every row must carry an outcome.
pub fn pseudo_truth(tables: &[ProblemTable]) -> Result<Vec<f64>> {
    tables
        .iter()
        .map(|t| Ok(mean(&t.all_outcomes("pseudo-truth")?)))
        .collect()
}

/// Replicate `k`'s split of problem `j`: permute the rows with the
/// (k, j) substream, take the first `n` as labeled pairs and hide the
/// outcomes of the rest.
pub fn split_replicate(
    table: &ProblemTable,
    problem_index: u32,
    plan: &SplitPlan,
    k: u32,
) -> Result<ProblemData> {
    let (n, _) = plan.sizes(table.rows.len())?;
    let mut rng = substream(plan.seed, k, problem_index);
    let perm = permutation(&mut rng, table.rows.len());
    let mut labeled = Vec::with_capacity(n);
    let mut unlabeled_preds = Vec::with_capacity(table.rows.len() - n);
    for (rank, &idx) in perm.iter().enumerate() {
        let row = &table.rows[idx];
        if rank < n {
            labeled.push(LabeledPair {
                y: row.y.ok_or_else(|| Error::MissingOutcomeForTruth {
                    problem: table.id.clone(),
                    what: "benchmark splitting",
                })?,
                z: row.f,
            });
        } else {
            unlabeled_preds.push(row.f);
        }
    }
    Ok(ProblemData {
        id: table.id.clone(),
        labeled,
        unlabeled_preds,
    })
}

/// Metric triple for one estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSummary {
    pub mse: f64,
    pub se: f64,
    pub improved_pct: f64,
    pub improved_se: f64,
}

fn compound_loss(estimates: &[f64], truths: &[f64]) -> f64 {
    mean(
        &estimates
            .iter()
            .zip(truths)
            .map(|(&e, &t)| (e - t) * (e - t))
            .collect::<Vec<_>>(),
    )
}

fn improved_fraction(estimates: &[f64], classical: &[f64], truths: &[f64]) -> f64 {
    let hits = estimates
        .iter()
        .zip(classical)
        .zip(truths)
        .filter(|((&e, &c), &t)| (e - t) * (e - t) < (c - t) * (c - t))
        .count();
    hits as f64 / estimates.len() as f64
}

fn summarize(losses: &[f64], improved: &[f64]) -> Result<MetricSummary> {
    let k = losses.len();
    if k < 2 {
        return Err(Error::TooFewProblems {
            what: "metrics (standard errors)",
            need: 2,
            have: k,
        });
    }
    let root_k = (k as f64).sqrt();
    Ok(MetricSummary {
        mse: mean(losses),
        se: sample_sd(losses) / root_k,
        improved_pct: 100.0 * mean(improved),
        improved_se: 100.0 * sample_sd(improved) / root_k,
    })
}

/// Score one estimator against fixed truths: MSE is the mean over replicates
/// of the per-replicate compound loss, SE its sample standard deviation over
/// sqrt(K), and improved% counts strict per-problem wins over the classical
/// estimator from the same replicate.
pub fn metrics(
    estimates_per_replicate: &[Vec<f64>],
    classical_per_replicate: &[Vec<f64>],
    truths: &[f64],
) -> Result<MetricSummary> {
    if estimates_per_replicate.len() != classical_per_replicate.len() {
        return Err(Error::LengthMismatch {
            what: "metrics replicates",
            left: estimates_per_replicate.len(),
            right: classical_per_replicate.len(),
        });
    }
    let mut losses = Vec::with_capacity(estimates_per_replicate.len());
    let mut improved = Vec::with_capacity(estimates_per_replicate.len());
    for (est, cls) in estimates_per_replicate.iter().zip(classical_per_replicate) {
        if est.len() != truths.len() || cls.len() != truths.len() {
            return Err(Error::LengthMismatch {
                what: "metrics problems",
                left: est.len(),
                right: truths.len(),
            });
        }
        losses.push(compound_loss(est, truths));
        improved.push(improved_fraction(est, cls, truths));
    }
    summarize(&losses, &improved)
}

/// One report row. `improved` is `None` on the classical baseline row.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub estimator: EstimatorKind,
    pub mse: f64,
    pub se: f64,
    pub improved: Option<(f64, f64)>,
}

/// A finished benchmark: one row per requested estimator plus the
/// configuration echo. Wall time is informational only and never serialized,
/// so report bytes depend only on (config, seed).
#[derive(Debug, Clone)]
pub struct BenchReport {
    pub rows: Vec<ReportRow>,
    pub config: serde_json::Value,
    pub seed: u64,
    pub wall_time: Duration,
}

impl BenchReport {
    pub fn row(&self, kind: EstimatorKind) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.estimator == kind)
    }

    /// Columns `estimator,mse,se,improved_pct,improved_se`; the classical
    /// baseline writes the literal `baseline` and an empty SE cell.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["estimator", "mse", "se", "improved_pct", "improved_se"])?;
        for row in &self.rows {
            let (ip, ise) = match row.improved {
                Some((p, s)) => (p.to_string(), s.to_string()),
                None => ("baseline".to_string(), String::new()),
            };
            w.write_record([
                row.estimator.name().to_string(),
                row.mse.to_string(),
                row.se.to_string(),
                ip,
                ise,
            ])?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<writer>".into(),
            source: e,
        })?;
        Ok(())
    }

    /// The CSV fields plus the configuration echo and seed.
    pub fn write_json(&self, mut out: impl Write) -> Result<()> {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| {
                let (ip, ise) = match row.improved {
                    Some((p, s)) => (json!(p), json!(s)),
                    None => (json!("baseline"), serde_json::Value::Null),
                };
                json!({
                    "estimator": row.estimator.name(),
                    "mse": row.mse,
                    "se": row.se,
                    "improved_pct": ip,
                    "improved_se": ise,
                })
            })
            .collect();
        let doc = json!({
            "config": self.config,
            "seed": self.seed,
            "estimators": rows,
        });
        serde_json::to_writer_pretty(&mut out, &doc).map_err(|e| Error::Numeric(e.to_string()))?;
        out.write_all(b"\n").map_err(|e| Error::Io {
            path: "<writer>".into(),
            source: e,
        })?;
        Ok(())
    }

    pub fn csv_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(buf)
    }

    pub fn json_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_json(&mut buf)?;
        Ok(buf)
    }
}

/// All estimates needed by one replicate, in canonical estimator order;
/// index 0 always holds the classical estimates (the improved% baseline).
fn replicate_estimates(
    problems: &[ProblemData],
    known: Option<&[SecondMoments]>,
    moments_mode: MomentsMode,
    kinds: &[EstimatorKind],
) -> Result<Vec<Vec<f64>>> {
    let stats: Vec<AggregatedStats> = problems.iter().map(get_means).collect::<Result<_>>()?;
    let z_tildes: Vec<f64> = stats.iter().map(prediction_avg).collect();
    let y_bars: Vec<f64> = stats.iter().map(classical).collect();

    let needs_moments = kinds.iter().any(|k| k.needs_moments());
    let moms: Option<Vec<SecondMoments>> = if needs_moments {
        Some(match moments_mode {
            MomentsMode::Known => known
                .ok_or_else(|| Error::InvalidParam {
                    name: "moments",
                    reason: "known moments requested but none supplied".into(),
                })?
                .to_vec(),
            MomentsMode::Sample => problems
                .iter()
                .map(sample_moments)
                .collect::<Result<Vec<_>>>()?,
        })
    } else {
        None
    };
    let ctxs: Option<Vec<PTContext>> = moms.as_ref().map(|moms| {
        stats
            .iter()
            .zip(moms)
            .map(|(s, m)| pt_context(s, m))
            .collect()
    });
    let pt_vals: Option<Vec<f64>> = ctxs
        .as_ref()
        .map(|ctxs| stats.iter().zip(ctxs).map(|(s, c)| pt(s, c)).collect());

    let needs_uni = kinds
        .iter()
        .any(|k| matches!(k, EstimatorKind::UniPt | EstimatorKind::UniPas));
    let uni_inputs = if needs_uni {
        let sample: Vec<SecondMoments> = problems
            .iter()
            .map(sample_moments)
            .collect::<Result<Vec<_>>>()?;
        let sizes: Vec<(usize, usize)> = stats.iter().map(|s| (s.n, s.big_n)).collect();
        Some((sample, sizes))
    } else {
        None
    };

    let mut out = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let estimates = match kind {
            EstimatorKind::Classical => y_bars.clone(),
            EstimatorKind::PredictionAvg => z_tildes.clone(),
            EstimatorKind::Ppi => stats.iter().map(|s| ppi_lambda(s, 1.0)).collect(),
            EstimatorKind::Pt => pt_vals.clone().expect("moments prepared"),
            EstimatorKind::ShrinkClassical => {
                let moms = moms.as_ref().expect("moments prepared");
                let s2: Vec<f64> = stats
                    .iter()
                    .zip(moms)
                    .map(|(s, m)| m.sigma2 / s.n as f64)
                    .collect();
                let curve = minimize_omega(
                    |omega| cure_shrink_classical(&stats, moms, omega),
                    median_scale(&s2),
                )?;
                shrink_classical(&stats, moms, curve.argmin_omega())?
            }
            EstimatorKind::ShrinkAvg => {
                let ctxs = ctxs.as_ref().expect("moments prepared");
                let pt_vals = pt_vals.as_ref().expect("moments prepared");
                let scale = median_scale(&ctxs.iter().map(|c| c.sigma_tilde2).collect::<Vec<_>>());
                let curve = minimize_omega(|omega| sure_grand_mean(pt_vals, ctxs, omega), scale)?;
                shrink_average(pt_vals, ctxs, curve.argmin_omega())?
            }
            EstimatorKind::Pas => {
                let ctxs = ctxs.as_ref().expect("moments prepared");
                let pt_vals = pt_vals.as_ref().expect("moments prepared");
                let scale = median_scale(&ctxs.iter().map(|c| c.sigma_tilde2).collect::<Vec<_>>());
                let curve = minimize_omega(
                    |omega| cure_compound(pt_vals, &z_tildes, ctxs, omega),
                    scale,
                )?;
                pas_assemble(pt_vals, &z_tildes, ctxs, curve.argmin_omega())?
            }
            EstimatorKind::UniPt => {
                let (sample, sizes) = uni_inputs.as_ref().expect("uni inputs prepared");
                let lambda = lambda_hat_clip(sample, sizes)?;
                let ctx = uni_plugins(sample, sizes, lambda)?;
                unipt(&stats, &ctx)
            }
            EstimatorKind::UniPas => unipas(problems)?.estimates,
        };
        out.push(estimates);
    }
    Ok(out)
}

fn assemble_report(
    kinds_with_classical: &[EstimatorKind],
    requested: &[EstimatorKind],
    losses: Vec<Vec<f64>>,
    improved: Vec<Vec<f64>>,
    config: serde_json::Value,
    seed: u64,
    started: Instant,
) -> Result<BenchReport> {
    let mut rows = Vec::with_capacity(requested.len());
    for (i, &kind) in kinds_with_classical.iter().enumerate() {
        if !requested.contains(&kind) {
            continue;
        }
        let summary = summarize(&losses[i], &improved[i])?;
        rows.push(ReportRow {
            estimator: kind,
            mse: summary.mse,
            se: summary.se,
            improved: (kind != EstimatorKind::Classical)
                .then_some((summary.improved_pct, summary.improved_se)),
        });
    }
    Ok(BenchReport {
        rows,
        config,
        seed,
        wall_time: started.elapsed(),
    })
}

/// Estimator list to compute: the classical baseline first (always needed
/// for improved%), then everything requested.
fn with_classical(requested: &[EstimatorKind]) -> Vec<EstimatorKind> {
    let mut kinds = vec![EstimatorKind::Classical];
    kinds.extend(
        requested
            .iter()
            .copied()
            .filter(|&k| k != EstimatorKind::Classical),
    );
    kinds
}

/// Synthetic benchmark: each replicate draws fresh problem locations and
/// data (so the reported MSE estimates the Bayes risk), scores every
/// requested estimator against the true means, and aggregates.
pub fn run_synth_bench(
    cfg: &SynthConfig,
    replicates: usize,
    moments_mode: MomentsMode,
    requested: &[EstimatorKind],
) -> Result<BenchReport> {
    let started = Instant::now();
    let kinds = with_classical(requested);

    let per_replicate: Vec<(Vec<f64>, Vec<f64>)> = (0..replicates as u32)
        .into_par_iter()
        .map(|k| -> Result<(Vec<f64>, Vec<f64>)> {
            let (problems, truths) = synth_draw_replicate(cfg, k);
            let theta: Vec<f64> = truths.iter().map(|t| t.theta).collect();
            let known: Vec<SecondMoments> = truths.iter().map(|t| t.moments()).collect();
            let estimates = replicate_estimates(&problems, Some(&known), moments_mode, &kinds)?;
            let losses: Vec<f64> = estimates
                .iter()
                .map(|est| compound_loss(est, &theta))
                .collect();
            let improved: Vec<f64> = estimates
                .iter()
                .map(|est| improved_fraction(est, &estimates[0], &theta))
                .collect();
            Ok((losses, improved))
        })
        .collect::<Result<_>>()?;

    // transpose to per-estimator series, replicate order preserved
    let mut losses = vec![Vec::with_capacity(replicates); kinds.len()];
    let mut improved = vec![Vec::with_capacity(replicates); kinds.len()];
    for (l, i) in per_replicate {
        for (slot, v) in losses.iter_mut().zip(l) {
            slot.push(v);
        }
        for (slot, v) in improved.iter_mut().zip(i) {
            slot.push(v);
        }
    }

    let config = json!({
        "mode": "synth",
        "m": cfg.m,
        "n": cfg.n,
        "big_n": cfg.big_n,
        "psi": cfg.psi,
        "c": cfg.c,
        "predictor": cfg.predictor.name(),
        "replicates": replicates,
        "moments": match moments_mode { MomentsMode::Known => "known", MomentsMode::Sample => "sample" },
        "estimators": requested.iter().map(|k| k.name()).collect::<Vec<_>>(),
    });
    assemble_report(
        &kinds, requested, losses, improved, config, cfg.seed, started,
    )
}

/// Real-data benchmark: pseudo truths once from the full tables, then K
/// random splits, all estimators seeing identical splits per replicate.
/// Second moments are always sample based here (there is nowhere to know
/// them from).
pub fn run_real_bench(
    tables: &[ProblemTable],
    plan: &SplitPlan,
    moments_mode: MomentsMode,
    requested: &[EstimatorKind],
) -> Result<BenchReport> {
    let started = Instant::now();
    if moments_mode == MomentsMode::Known {
        return Err(Error::InvalidParam {
            name: "moments",
            reason: "file-based benchmarks have no known-moments source; use sample".into(),
        });
    }
    if tables.is_empty() {
        return Err(Error::TooFewProblems {
            what: "run_real_bench",
            need: 1,
            have: 0,
        });
    }
    let truths = pseudo_truth(tables)?;
    for t in tables {
        plan.sizes(t.rows.len())?;
    }
    let kinds = with_classical(requested);

    let per_replicate: Vec<(Vec<f64>, Vec<f64>)> = (0..plan.replicates as u32)
        .into_par_iter()
        .map(|k| -> Result<(Vec<f64>, Vec<f64>)> {
            let problems: Vec<ProblemData> = tables
                .iter()
                .enumerate()
                .map(|(j, t)| split_replicate(t, j as u32, plan, k))
                .collect::<Result<_>>()?;
            let estimates = replicate_estimates(&problems, None, MomentsMode::Sample, &kinds)?;
            let losses: Vec<f64> = estimates
                .iter()
                .map(|est| compound_loss(est, &truths))
                .collect();
            let improved: Vec<f64> = estimates
                .iter()
                .map(|est| improved_fraction(est, &estimates[0], &truths))
                .collect();
            Ok((losses, improved))
        })
        .collect::<Result<_>>()?;

    let mut losses = vec![Vec::with_capacity(plan.replicates); kinds.len()];
    let mut improved = vec![Vec::with_capacity(plan.replicates); kinds.len()];
    for (l, i) in per_replicate {
        for (slot, v) in losses.iter_mut().zip(l) {
            slot.push(v);
        }
        for (slot, v) in improved.iter_mut().zip(i) {
            slot.push(v);
        }
    }

    let config = json!({
        "mode": "bench",
        "problems": tables.len(),
        "ratio": plan.ratio,
        "replicates": plan.replicates,
        "moments": "sample",
        "estimators": requested.iter().map(|k| k.name()).collect::<Vec<_>>(),
    });
    assemble_report(
        &kinds, requested, losses, improved, config, plan.seed, started,
    )
}

/// One report per ratio, sharing the plan's seed and replicate count.
pub fn run_ratio_sweep(
    tables: &[ProblemTable],
    ratios: &[f64],
    plan: &SplitPlan,
    moments_mode: MomentsMode,
    requested: &[EstimatorKind],
) -> Result<Vec<BenchReport>> {
    ratios
        .iter()
        .map(|&ratio| {
            run_real_bench(
                tables,
                &SplitPlan { ratio, ..*plan },
                moments_mode,
                requested,
            )
        })
        .collect()
}

/// One-shot estimation for the CLI: run a single estimator over ingested
/// problems, using supplied known moments when given, sample moments
/// otherwise. The sample-based global estimators refuse known moments.
pub fn single_shot(
    problems: &[ProblemData],
    kind: EstimatorKind,
    known: Option<&[SecondMoments]>,
) -> Result<Vec<f64>> {
    if known.is_some() && matches!(kind, EstimatorKind::UniPt | EstimatorKind::UniPas) {
        return Err(Error::InvalidParam {
            name: "moments-file",
            reason: format!(
                "{} is sample-moment based; omit the moments file",
                kind.name()
            ),
        });
    }
    let mode = if known.is_some() {
        MomentsMode::Known
    } else {
        MomentsMode::Sample
    };
    let kinds = [kind];
    let mut estimates = replicate_estimates(problems, known, mode, &kinds)?;
    Ok(estimates.remove(0))
}

/// Scan the adaptive-shrinkage risk objective over the omega grid for the
/// given problems, with known moments when supplied.
pub fn cure_scan(
    problems: &[ProblemData],
    known: Option<&[SecondMoments]>,
    grid_points: Option<usize>,
) -> Result<RiskCurve> {
    let stats: Vec<AggregatedStats> = problems.iter().map(get_means).collect::<Result<_>>()?;
    let moms: Vec<SecondMoments> = match known {
        Some(k) => k.to_vec(),
        None => problems
            .iter()
            .map(sample_moments)
            .collect::<Result<Vec<_>>>()?,
    };
    if stats.len() != moms.len() {
        return Err(Error::LengthMismatch {
            what: "cure_scan moments",
            left: stats.len(),
            right: moms.len(),
        });
    }
    let ctxs: Vec<PTContext> = stats
        .iter()
        .zip(&moms)
        .map(|(s, m)| pt_context(s, m))
        .collect();
    let pt_vals: Vec<f64> = stats.iter().zip(&ctxs).map(|(s, c)| pt(s, c)).collect();
    let z_tildes: Vec<f64> = stats.iter().map(prediction_avg).collect();
    let scale = median_scale(&ctxs.iter().map(|c| c.sigma_tilde2).collect::<Vec<_>>());
    minimize_omega_on_grid(
        |omega| cure_compound(&pt_vals, &z_tildes, &ctxs, omega),
        scale,
        grid_points.unwrap_or(DEFAULT_GRID_POINTS),
    )
}
