//! Fully sample-based variants: one global tuning parameter shared by every
//! problem (UniPT) and adaptive shrinkage on top of it (UniPAS). Nothing
//! here needs known second moments, and the per-problem sample sizes may
//! stay small: accuracy comes from the number of problems.

use crate::data::{get_means, sample_moments, AggregatedStats, ProblemData, SecondMoments};
use crate::error::Error;
use crate::estimators::{
    combine, ppi_lambda, ppi_variance, shrink_weight, variance_floor, ShrinkageWeights,
};
use crate::numeric::{kahan_sum, mean};
use crate::risk::{cure_single, median_scale, minimize_omega, RiskCurve};
use crate::Result;

/// Plug-in quantities for the sample-based pipeline.
///
/// Per problem: `sigma_dot2` estimates the tuned estimator's variance from
/// that problem's own sample moments, `gamma_dot` its covariance with the
/// unlabeled prediction mean, and `sigma_check2` repeats the variance
/// formula with the moments averaged across all problems (floored, since it
/// feeds shrinkage weights). The group means are kept for inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct UniContext {
    pub lambda_hat_clip: f64,
    pub sigma_dot2: Vec<f64>,
    pub gamma_dot: Vec<f64>,
    pub sigma_check2: Vec<f64>,
    pub sigma_bar2: f64,
    pub tau_bar2: f64,
    pub gamma_bar: f64,
}

fn check_len(what: &'static str, left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::LengthMismatch { what, left, right });
    }
    Ok(())
}

/// The shared tuning parameter:
/// `(sum_j gamma_j / n_j) / (sum_j ((n_j+N_j)/(n_j N_j)) tau2_j)`, clipped
/// to [0, 1].
///
/// Fed with sample moments this is the production estimate; fed with known
/// moments it yields the oracle counterpart the consistency tests compare
/// against (never used in the production path).
///
/// A zero denominator means every problem had constant predictions; tuning
/// is then off (0) and a warning is logged.
pub fn lambda_hat_clip(moms: &[SecondMoments], sizes: &[(usize, usize)]) -> Result<f64> {
    check_len("lambda_hat_clip inputs", moms.len(), sizes.len())?;
    if moms.is_empty() {
        return Err(Error::TooFewProblems {
            what: "lambda_hat_clip",
            need: 1,
            have: 0,
        });
    }
    let numerator = kahan_sum(
        moms.iter()
            .zip(sizes)
            .map(|(m, &(n, _))| m.gamma / n as f64),
    );
    let denominator = kahan_sum(moms.iter().zip(sizes).map(|(m, &(n, big_n))| {
        let (n, big_n) = (n as f64, big_n as f64);
        (n + big_n) / (n * big_n) * m.tau2
    }));
    if denominator == 0.0 {
        log::warn!(
            "global tuning disabled: every problem has zero prediction variance (denominator = 0)"
        );
        return Ok(0.0);
    }
    Ok((numerator / denominator).clamp(0.0, 1.0))
}

/// One tuned estimate per problem, all sharing `lambda_hat_clip`:
/// `y_bar_j + lambda (z_tilde_j - z_bar_j)`.
pub fn unipt(stats: &[AggregatedStats], uni: &UniContext) -> Vec<f64> {
    stats
        .iter()
        .map(|s| ppi_lambda(s, uni.lambda_hat_clip))
        .collect()
}

/// Build the plug-in context for a given clipped lambda.
pub fn uni_plugins(
    moms: &[SecondMoments],
    sizes: &[(usize, usize)],
    lambda_hat_clip: f64,
) -> Result<UniContext> {
    check_len("uni_plugins inputs", moms.len(), sizes.len())?;
    if moms.is_empty() {
        return Err(Error::TooFewProblems {
            what: "uni_plugins",
            need: 1,
            have: 0,
        });
    }
    let sigma_bar2 = mean(&moms.iter().map(|m| m.sigma2).collect::<Vec<_>>());
    let tau_bar2 = mean(&moms.iter().map(|m| m.tau2).collect::<Vec<_>>());
    let gamma_bar = mean(&moms.iter().map(|m| m.gamma).collect::<Vec<_>>());
    let averaged = SecondMoments {
        sigma2: sigma_bar2,
        tau2: tau_bar2,
        gamma: gamma_bar,
        source: moms[0].source,
    };

    let mut sigma_dot2 = Vec::with_capacity(moms.len());
    let mut gamma_dot = Vec::with_capacity(moms.len());
    let mut sigma_check2 = Vec::with_capacity(moms.len());
    for (m, &(n, big_n)) in moms.iter().zip(sizes) {
        sigma_dot2.push(ppi_variance(m, n, big_n, lambda_hat_clip));
        gamma_dot.push(lambda_hat_clip * m.tau2 / big_n as f64);
        let check = ppi_variance(&averaged, n, big_n, lambda_hat_clip);
        sigma_check2.push(check.max(variance_floor(sigma_bar2 / n as f64)));
    }
    Ok(UniContext {
        lambda_hat_clip,
        sigma_dot2,
        gamma_dot,
        sigma_check2,
        sigma_bar2,
        tau_bar2,
        gamma_bar,
    })
}

/// Risk estimate for the sample-based shrinkage family at a global `omega`:
/// weights come from `sigma_check2`, risk terms from `sigma_dot2` and
/// `gamma_dot`. The infinity sentinel evaluates to the mean of `sigma_dot2`.
pub fn cure_hat(upt_vals: &[f64], z_tildes: &[f64], uni: &UniContext, omega: f64) -> Result<f64> {
    check_len("cure_hat inputs", upt_vals.len(), z_tildes.len())?;
    check_len("cure_hat context", upt_vals.len(), uni.sigma_dot2.len())?;
    let total = kahan_sum(
        upt_vals
            .iter()
            .zip(z_tildes)
            .enumerate()
            .map(|(j, (&x, &y))| {
                let w = shrink_weight(omega, uni.sigma_check2[j]);
                cure_single(x, y, w, uni.sigma_dot2[j], uni.gamma_dot[j])
            })
            .collect::<Result<Vec<f64>>>()?,
    );
    Ok(total / upt_vals.len() as f64)
}

/// The full sample-based fit, kept around for inspection.
#[derive(Debug, Clone)]
pub struct UniPasFit {
    pub estimates: Vec<f64>,
    pub upt: Vec<f64>,
    pub z_tildes: Vec<f64>,
    pub omega_hat: f64,
    pub context: UniContext,
    pub curve: RiskCurve,
}

/// End-to-end pipeline on raw problems: sample moments, shared tuning,
/// plug-ins, risk scan, shrinkage. Every problem needs at least two labeled
/// rows. Each final estimate lies between its tuned estimate and the
/// unlabeled prediction mean.
pub fn unipas(problems: &[ProblemData]) -> Result<UniPasFit> {
    let stats: Vec<AggregatedStats> = problems.iter().map(get_means).collect::<Result<_>>()?;
    let moms: Vec<SecondMoments> = problems.iter().map(sample_moments).collect::<Result<_>>()?;
    let sizes: Vec<(usize, usize)> = stats.iter().map(|s| (s.n, s.big_n)).collect();

    let lambda = lambda_hat_clip(&moms, &sizes)?;
    let context = uni_plugins(&moms, &sizes, lambda)?;
    let upt = unipt(&stats, &context);
    let z_tildes: Vec<f64> = stats.iter().map(|s| s.z_tilde).collect();

    let scale = median_scale(&context.sigma_check2);
    let curve = minimize_omega(|omega| cure_hat(&upt, &z_tildes, &context, omega), scale)?;
    let omega_hat = curve.argmin_omega();

    let weights = ShrinkageWeights::new(omega_hat, &context.sigma_check2)?;
    let estimates = combine(&upt, &z_tildes, &weights.per_problem);
    Ok(UniPasFit {
        estimates,
        upt,
        z_tildes,
        omega_hat,
        context,
        curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{LabeledPair, MomentSource};
    use crate::risk::cure_shrink_classical;

    fn sample_mom(sigma2: f64, tau2: f64, gamma: f64) -> SecondMoments {
        SecondMoments {
            sigma2,
            tau2,
            gamma,
            source: MomentSource::Sample,
        }
    }

    #[test]
    fn lambda_hand_value() {
        // m=1, n=10, N=40, gamma=2, tau2=4 -> 0.2/0.5 = 0.4
        let l = lambda_hat_clip(&[sample_mom(1.0, 4.0, 2.0)], &[(10, 40)]).unwrap();
        assert!((l - 0.4).abs() < 1e-15);
    }

    #[test]
    fn lambda_clips_both_ends() {
        let low = lambda_hat_clip(
            &[sample_mom(1.0, 4.0, -2.0), sample_mom(1.0, 1.0, -0.1)],
            &[(10, 40), (10, 40)],
        )
        .unwrap();
        assert_eq!(low, 0.0);
        let high = lambda_hat_clip(&[sample_mom(1.0, 0.01, 5.0)], &[(10, 40)]).unwrap();
        assert_eq!(high, 1.0);
    }

    proptest::proptest! {
        // The clip holds over arbitrary sample moments, including
        // Cauchy-Schwarz violations that only sampling noise can produce.
        #[test]
        fn lambda_always_lands_in_unit_interval(
            moments in proptest::collection::vec(
                (1e-9f64..5.0, 0.0f64..5.0, -10.0f64..10.0, 2usize..50, 1usize..200),
                1..12,
            ),
        ) {
            let moms: Vec<SecondMoments> = moments
                .iter()
                .map(|&(s2, t2, g, _, _)| sample_mom(s2, t2, g))
                .collect();
            let sizes: Vec<(usize, usize)> =
                moments.iter().map(|&(_, _, _, n, big_n)| (n, big_n)).collect();
            let lambda = lambda_hat_clip(&moms, &sizes).unwrap();
            proptest::prop_assert!((0.0..=1.0).contains(&lambda));
        }
    }

    #[test]
    fn lambda_zero_denominator_is_zero() {
        let l = lambda_hat_clip(
            &[sample_mom(1.0, 0.0, 0.0), sample_mom(2.0, 0.0, 0.0)],
            &[(10, 40), (5, 20)],
        )
        .unwrap();
        assert_eq!(l, 0.0);
    }

    fn stats(y_bar: f64, z_bar: f64, z_tilde: f64) -> AggregatedStats {
        AggregatedStats {
            y_bar,
            z_bar,
            z_tilde,
            n: 10,
            big_n: 40,
        }
    }

    fn ctx_with_lambda(lambda: f64) -> UniContext {
        UniContext {
            lambda_hat_clip: lambda,
            sigma_dot2: vec![],
            gamma_dot: vec![],
            sigma_check2: vec![],
            sigma_bar2: 0.0,
            tau_bar2: 0.0,
            gamma_bar: 0.0,
        }
    }

    #[test]
    fn unipt_reductions_and_hand_value() {
        let s = [stats(2.0, 3.0, 6.0)];
        assert_eq!(unipt(&s, &ctx_with_lambda(0.0))[0], 2.0);
        assert_eq!(unipt(&s, &ctx_with_lambda(1.0))[0], 5.0);
        assert!((unipt(&s, &ctx_with_lambda(0.4))[0] - 3.2).abs() < 1e-15);
    }

    #[test]
    fn plugins_zero_lambda_reduction() {
        let moms = [sample_mom(1.0, 4.0, 2.0), sample_mom(0.5, 1.0, -0.3)];
        let ctx = uni_plugins(&moms, &[(10, 40), (5, 20)], 0.0).unwrap();
        assert_eq!(ctx.sigma_dot2, vec![0.1, 0.1]);
        assert_eq!(ctx.gamma_dot, vec![0.0, 0.0]);
        assert!((ctx.sigma_check2[0] - 0.075).abs() < 1e-15); // sigma_bar2/10
        assert!((ctx.sigma_check2[1] - 0.15).abs() < 1e-15); // sigma_bar2/5
    }

    #[test]
    fn plugins_hand_example() {
        // n=10, N=40, lambda=0.5, sigma2=1, tau2=4, gamma=2
        let ctx = uni_plugins(&[sample_mom(1.0, 4.0, 2.0)], &[(10, 40)], 0.5).unwrap();
        assert!((ctx.sigma_dot2[0] - 0.025).abs() < 1e-15);
        assert!((ctx.gamma_dot[0] - 0.05).abs() < 1e-15);
        // m=1: group means coincide with the problem's own moments
        assert!((ctx.sigma_check2[0] - 0.025).abs() < 1e-15);
    }

    #[test]
    fn check_variance_is_mean_of_dot_variances_at_equal_sizes() {
        // ppi_variance is linear in the moment triple, so averaging moments
        // commutes with the variance formula when every (n, N) is equal.
        let moms = [
            sample_mom(1.0, 4.0, 2.0),
            sample_mom(0.2, 0.8, -0.1),
            sample_mom(3.0, 2.0, 1.0),
        ];
        let sizes = [(10, 40); 3];
        let ctx = uni_plugins(&moms, &sizes, 0.37).unwrap();
        let dot_mean = mean(&ctx.sigma_dot2);
        for &check in &ctx.sigma_check2 {
            assert!((check - dot_mean).abs() < 1e-15);
        }
    }

    #[test]
    fn cure_hat_sentinel_and_hand_value() {
        let uni = UniContext {
            lambda_hat_clip: 0.5,
            sigma_dot2: vec![0.025],
            gamma_dot: vec![0.05],
            sigma_check2: vec![0.025],
            sigma_bar2: 1.0,
            tau_bar2: 4.0,
            gamma_bar: 2.0,
        };
        // sentinel: mean sigma_dot2
        assert_eq!(
            cure_hat(&[3.0], &[1.0], &uni, f64::INFINITY).unwrap(),
            0.025
        );
        // omega = sigma_check2 -> weight 1/2; (upt - z)^2 = 4:
        // 0 + 0.05 + 0.25 * 4 = 1.05
        let v = cure_hat(&[3.0], &[1.0], &uni, 0.025).unwrap();
        assert!((v - 1.05).abs() < 1e-15);
    }

    #[test]
    fn cure_hat_at_zero_lambda_matches_shrink_classical_risk() {
        // Single problem: group means equal own moments, so the weights
        // agree and the two risk estimates coincide on the whole grid.
        let mom = sample_mom(0.9, 1.7, 0.4);
        let ctx = uni_plugins(&[mom], &[(10, 40)], 0.0).unwrap();
        let st = [AggregatedStats {
            y_bar: 2.0,
            z_bar: 0.5,
            z_tilde: 6.0,
            n: 10,
            big_n: 40,
        }];
        for omega in [0.0, 0.01, 0.09, 2.0, f64::INFINITY] {
            let a = cure_hat(&[2.0], &[6.0], &ctx, omega).unwrap();
            let b = cure_shrink_classical(&st, &[mom], omega).unwrap();
            assert!((a - b).abs() < 1e-15, "omega = {omega}");
        }
    }

    fn problem(id: &str, labeled: &[(f64, f64)], unlabeled: &[f64]) -> ProblemData {
        ProblemData {
            id: id.into(),
            labeled: labeled.iter().map(|&(y, z)| LabeledPair { y, z }).collect(),
            unlabeled_preds: unlabeled.to_vec(),
        }
    }

    #[test]
    fn unipas_negative_gamma_reduces_to_shrink_classical_pipeline() {
        // Identical outcomes across problems make the sample sigma2 (and so
        // the averaged weights) equal per problem; negative sample
        // covariances clip lambda to 0, and the whole pipeline collapses to
        // shrinking the classical estimator with sample moments.
        use crate::estimators::shrink_classical;
        use crate::risk::minimize_omega as scan;

        let ys = [0.0, 1.0, 2.0, 3.0];
        let mk = |zs: [f64; 4], unlabeled: [f64; 3], id: &str| {
            problem(
                id,
                &ys.iter().copied().zip(zs).collect::<Vec<_>>(),
                &unlabeled,
            )
        };
        // predictions decrease in y -> gamma_hat < 0
        let problems = [
            mk([4.0, 3.0, 2.0, 1.0], [2.0, 2.5, 3.0], "a"),
            mk([8.0, 6.0, 4.0, 2.0], [5.0, 5.5, 4.0], "b"),
            mk([1.0, 0.5, 0.0, -0.5], [0.5, 0.2, 0.1], "c"),
        ];
        let fit = unipas(&problems).unwrap();
        assert_eq!(fit.context.lambda_hat_clip, 0.0);

        let stats: Vec<AggregatedStats> = problems.iter().map(|p| get_means(p).unwrap()).collect();
        let moms: Vec<SecondMoments> = problems
            .iter()
            .map(|p| sample_moments(p).unwrap())
            .collect();
        let s2: Vec<f64> = stats
            .iter()
            .zip(&moms)
            .map(|(s, m)| m.sigma2 / s.n as f64)
            .collect();
        let curve = scan(
            |omega| cure_shrink_classical(&stats, &moms, omega),
            median_scale(&s2),
        )
        .unwrap();
        let reference = shrink_classical(&stats, &moms, curve.argmin_omega()).unwrap();
        assert_eq!(fit.estimates, reference);
    }

    #[test]
    fn unipas_collapses_toward_targets_on_perfect_predictions() {
        // Predictions equal outcomes on labeled rows and the unlabeled
        // predictions average exactly to the per-problem center: strong
        // shrinkage is optimal.
        let spreads = [
            [-0.4, -0.1, 0.2, 0.4, 0.1],
            [-0.3, -0.2, 0.2, 0.3, 0.1],
            [-0.5, 0.0, 0.1, 0.4, 0.2],
            [-0.2, -0.1, 0.0, 0.1, 0.3],
        ];
        let centers = [1.0, -0.5, 0.25, 2.0];
        let problems: Vec<ProblemData> = centers
            .iter()
            .zip(&spreads)
            .enumerate()
            .map(|(i, (&c, sp))| {
                let labeled: Vec<(f64, f64)> = sp.iter().map(|&d| (c + d, c + d)).collect();
                // zero-sum spread, wide enough that the clipped global
                // tuning parameter stays interior: the unlabeled mean is
                // exactly c
                let unlabeled: Vec<f64> =
                    (0..20).map(|t| c + 0.3 * ((t % 5) as f64 - 2.0)).collect();
                problem(&format!("p{i}"), &labeled, &unlabeled)
            })
            .collect();
        let fit = unipas(&problems).unwrap();
        let lambda = fit.context.lambda_hat_clip;
        assert!(lambda > 0.0 && lambda < 1.0, "clip saturated: {lambda}");

        // every component sits between its tuned estimate and the target
        for ((&est, &u), &z) in fit.estimates.iter().zip(&fit.upt).zip(&fit.z_tildes) {
            let (lo, hi) = if u <= z { (u, z) } else { (z, u) };
            assert!(est >= lo - 1e-12 && est <= hi + 1e-12);
        }

        // the scan's choice matches a 100x denser sweep to within one cell
        let dense = crate::risk::minimize_omega_on_grid(
            |omega| cure_hat(&fit.upt, &fit.z_tildes, &fit.context, omega),
            median_scale(&fit.context.sigma_check2),
            51_101,
        )
        .unwrap();
        let coarse = &fit.curve;
        let i = coarse.argmin_index;
        let lo = if i == 0 { 0.0 } else { coarse.omegas[i - 1] };
        let hi = coarse.omegas.get(i + 1).copied().unwrap_or(f64::INFINITY);
        let dense_pick = dense.argmin_omega();
        assert!(
            dense_pick >= lo && dense_pick <= hi,
            "dense {dense_pick} outside [{lo}, {hi}]"
        );

        // and the estimates moved at least three quarters of the way in
        let gap_est: f64 = fit
            .estimates
            .iter()
            .zip(&fit.z_tildes)
            .map(|(&e, &z)| (e - z).abs())
            .sum();
        let gap_upt: f64 = fit
            .upt
            .iter()
            .zip(&fit.z_tildes)
            .map(|(&u, &z)| (u - z).abs())
            .sum();
        assert!(gap_est < 0.25 * gap_upt, "{gap_est} vs {gap_upt}");
    }
}
