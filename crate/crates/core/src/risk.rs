//! Unbiased risk estimates for the shrinkage families and the
//! one-dimensional grid minimizer that selects the global shrinkage level.
//!
//! All scans share one grid: `{0}`, 512 log-spaced points spanning twelve
//! decades around a data-driven scale, and the exact `f64::INFINITY`
//! sentinel. The weights depend on omega only through
//! `omega / (omega + sigma_tilde2)`, so log coverage of the variance scale
//! is what matters, and the endpoints realize full shrinkage and full
//! recovery exactly.

use std::io::Write;

use crate::data::{AggregatedStats, SecondMoments};
use crate::error::Error;
use crate::estimators::{shrink_weight, PTContext};
use crate::numeric::{kahan_sum, mean, median};
use crate::Result;

/// Default number of log-spaced interior grid points.
pub const DEFAULT_GRID_POINTS: usize = 512;

/// A scanned risk objective: `omegas` (ending with the infinity sentinel),
/// the estimated risk at each, and the argmin with ties broken toward
/// smaller omega.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskCurve {
    pub omegas: Vec<f64>,
    pub risks: Vec<f64>,
    pub argmin_index: usize,
}

impl RiskCurve {
    pub fn argmin_omega(&self) -> f64 {
        self.omegas[self.argmin_index]
    }

    pub fn min_risk(&self) -> f64 {
        self.risks[self.argmin_index]
    }

    /// Two columns `omega,risk`; the sentinel is written as the literal
    /// `inf`.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["omega", "risk"])?;
        for (&omega, &risk) in self.omegas.iter().zip(&self.risks) {
            let omega_text = if omega.is_infinite() {
                "inf".to_string()
            } else {
                omega.to_string()
            };
            w.write_record([omega_text, risk.to_string()])?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<writer>".into(),
            source: e,
        })?;
        Ok(())
    }
}

/// Unbiased risk estimate for the scalar shrinkage `c x + (1-c) y` of a
/// source `x` with variance `sigma2` toward a target `y` with covariance
/// `gamma`: `(2c-1) sigma2 + 2(1-c) gamma + ((1-c)(x-y))^2`.
pub fn cure_single(x: f64, y: f64, c: f64, sigma2: f64, gamma: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::InvalidParam {
            name: "c",
            reason: format!("shrinkage weight must lie in [0, 1], got {c}"),
        });
    }
    let d = (1.0 - c) * (x - y);
    Ok((2.0 * c - 1.0) * sigma2 + 2.0 * (1.0 - c) * gamma + d * d)
}

fn check_len(what: &'static str, left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::LengthMismatch { what, left, right });
    }
    Ok(())
}

/// Compound risk estimate for the PAS family at a global `omega`
/// (`f64::INFINITY` allowed): the mean of `cure_single` over problems with
/// `omega_j = omega/(omega + sigma_tilde2_j)`. At the sentinel this is the
/// mean of the PT variances.
pub fn cure_compound(
    pt_vals: &[f64],
    z_tildes: &[f64],
    ctxs: &[PTContext],
    omega: f64,
) -> Result<f64> {
    check_len("cure_compound inputs", pt_vals.len(), z_tildes.len())?;
    check_len("cure_compound contexts", pt_vals.len(), ctxs.len())?;
    let total = kahan_sum(
        pt_vals
            .iter()
            .zip(z_tildes)
            .zip(ctxs)
            .map(|((&x, &y), c)| {
                let w = shrink_weight(omega, c.sigma_tilde2);
                cure_single(x, y, w, c.sigma_tilde2, c.gamma_tilde)
            })
            .collect::<Result<Vec<f64>>>()?,
    );
    Ok(total / pt_vals.len() as f64)
}

/// Risk estimate for shrinking the classical estimator toward the prediction
/// mean: independence makes the covariance term vanish and the variance is
/// `sigma2_j / n_j`.
pub fn cure_shrink_classical(
    stats: &[AggregatedStats],
    moms: &[SecondMoments],
    omega: f64,
) -> Result<f64> {
    check_len("cure_shrink_classical inputs", stats.len(), moms.len())?;
    let total = kahan_sum(
        stats
            .iter()
            .zip(moms)
            .map(|(s, m)| {
                let s2 = m.sigma2 / s.n as f64;
                let w = shrink_weight(omega, s2);
                cure_single(s.y_bar, s.z_tilde, w, s2, 0.0)
            })
            .collect::<Result<Vec<f64>>>()?,
    );
    Ok(total / stats.len() as f64)
}

/// Risk estimate for shrinking the PT estimates toward their group mean:
/// `[(1-omega_j)(pt_j - group_mean)]^2 + (1-omega_j)(omega + (2/m - 1)
/// sigma_tilde2_j)`, averaged over problems.
///
/// As omega grows, `(1 - omega_j) * omega` tends to `sigma_tilde2_j`, so the
/// sentinel value is the mean PT variance (the same full-recovery endpoint
/// as `cure_compound`), not zero.
pub fn sure_grand_mean(pt_vals: &[f64], ctxs: &[PTContext], omega: f64) -> Result<f64> {
    check_len("sure_grand_mean inputs", pt_vals.len(), ctxs.len())?;
    let m = pt_vals.len();
    if m < 2 {
        return Err(Error::TooFewProblems {
            what: "sure_grand_mean",
            need: 2,
            have: m,
        });
    }
    if omega.is_infinite() {
        return Ok(mean(
            &ctxs.iter().map(|c| c.sigma_tilde2).collect::<Vec<_>>(),
        ));
    }
    if omega.is_nan() || omega < 0.0 {
        return Err(Error::InvalidParam {
            name: "omega",
            reason: format!("must be >= 0 or the infinity sentinel, got {omega}"),
        });
    }
    let group_mean = mean(pt_vals);
    let two_over_m = 2.0 / m as f64;
    let total = kahan_sum(pt_vals.iter().zip(ctxs).map(|(&x, c)| {
        let w = shrink_weight(omega, c.sigma_tilde2);
        let d = (1.0 - w) * (x - group_mean);
        d * d + (1.0 - w) * (omega + (two_over_m - 1.0) * c.sigma_tilde2)
    }));
    Ok(total / m as f64)
}

/// Median of the per-problem variances, used as the grid scale; falls back
/// to 1 when every variance is zero (or the list is empty).
pub fn median_scale(sigma_tilde2s: &[f64]) -> f64 {
    if sigma_tilde2s.is_empty() {
        return 1.0;
    }
    let med = median(sigma_tilde2s);
    if med > 0.0 {
        med
    } else {
        1.0
    }
}

/// The scan grid: `{0}`, `points` log-spaced values covering
/// `scale * 10^-6 ..= scale * 10^6`, then the sentinel.
pub fn omega_grid(scale: f64, points: usize) -> Vec<f64> {
    let mut grid = Vec::with_capacity(points + 2);
    grid.push(0.0);
    if points == 1 {
        grid.push(scale);
    } else {
        for k in 0..points {
            let exponent = -6.0 + 12.0 * k as f64 / (points as f64 - 1.0);
            grid.push(scale * 10f64.powf(exponent));
        }
    }
    grid.push(f64::INFINITY);
    grid
}

/// Scan `objective` over the default grid and return the full curve.
/// Ties break toward smaller omega (the sentinel counts as largest), and
/// values are compared with exact float ordering. Errors if the objective is
/// non-finite anywhere on the grid.
pub fn minimize_omega(objective: impl Fn(f64) -> Result<f64>, scale: f64) -> Result<RiskCurve> {
    minimize_omega_on_grid(objective, scale, DEFAULT_GRID_POINTS)
}

/// As [`minimize_omega`] with a custom interior grid size.
pub fn minimize_omega_on_grid(
    objective: impl Fn(f64) -> Result<f64>,
    scale: f64,
    points: usize,
) -> Result<RiskCurve> {
    if scale <= 0.0 || !scale.is_finite() {
        return Err(Error::InvalidParam {
            name: "scale",
            reason: format!("must be finite and > 0, got {scale}"),
        });
    }
    if points == 0 {
        return Err(Error::InvalidParam {
            name: "grid-size",
            reason: "need at least one interior grid point".into(),
        });
    }
    let omegas = omega_grid(scale, points);
    let mut risks = Vec::with_capacity(omegas.len());
    let mut argmin_index = 0usize;
    let mut best = f64::INFINITY;
    for (i, &omega) in omegas.iter().enumerate() {
        let risk = objective(omega)?;
        if !risk.is_finite() {
            return Err(Error::NonFiniteObjective { omega });
        }
        // strict comparison: ties keep the earlier (smaller) omega
        if risk < best {
            best = risk;
            argmin_index = i;
        }
        risks.push(risk);
    }
    Ok(RiskCurve {
        omegas,
        risks,
        argmin_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(sigma_tilde2: f64, gamma_tilde: f64) -> PTContext {
        PTContext {
            lambda_star: 0.0,
            sigma_tilde2,
            gamma_tilde,
        }
    }

    #[test]
    fn cure_single_hand_values() {
        assert_eq!(cure_single(9.0, -3.0, 1.0, 0.02, 5.0).unwrap(), 0.02);
        // c=0, sigma2=1, gamma=0.2, (x-y)^2=4
        assert!((cure_single(2.0, 0.0, 0.0, 1.0, 0.2).unwrap() - 3.4).abs() < 1e-15);
        // c=0.5 -> 0 + 0.2 + 1.0
        assert!((cure_single(2.0, 0.0, 0.5, 1.0, 0.2).unwrap() - 1.2).abs() < 1e-15);
    }

    #[test]
    fn cure_single_rejects_bad_weight() {
        assert!(cure_single(0.0, 0.0, -0.1, 1.0, 0.0).is_err());
        assert!(cure_single(0.0, 0.0, 1.1, 1.0, 0.0).is_err());
    }

    #[test]
    fn cure_compound_endpoints_and_hand_value() {
        let ctxs = [ctx(0.02, 0.04), ctx(0.08, 0.0)];
        let pt_vals = [3.2, 1.0];
        let z_tildes = [6.0, 0.5];

        let at_inf = cure_compound(&pt_vals, &z_tildes, &ctxs, f64::INFINITY).unwrap();
        assert_eq!(at_inf, (0.02 + 0.08) / 2.0);

        let at_zero = cure_compound(&pt_vals, &z_tildes, &ctxs, 0.0).unwrap();
        let expect = ((-0.02 + 2.0 * 0.04 + 2.8 * 2.8) + (-0.08 + 0.25)) / 2.0;
        assert!((at_zero - expect).abs() < 1e-12);

        // m=1, omega = sigma_tilde2 -> weight 1/2 -> 0 + 0.04 + 0.25*7.84 = 2
        let one = cure_compound(&[3.2], &[6.0], &[ctx(0.02, 0.04)], 0.02).unwrap();
        assert!((one - 2.0).abs() < 1e-12);
    }

    #[test]
    fn cure_compound_continuous_at_large_omega() {
        let ctxs = [ctx(0.02, 0.04), ctx(0.5, -0.1), ctx(0.003, 0.0)];
        let pt_vals = [3.2, -1.0, 0.7];
        let z_tildes = [6.0, 4.0, 0.9];
        let scale = median_scale(&[0.02, 0.5, 0.003]);
        let near = cure_compound(&pt_vals, &z_tildes, &ctxs, 1e8 * scale).unwrap();
        let at = cure_compound(&pt_vals, &z_tildes, &ctxs, f64::INFINITY).unwrap();
        assert!((near - at).abs() <= 1e-6 * at.abs());
    }

    #[test]
    fn cure_shrink_classical_hand_values() {
        let stats = [AggregatedStats {
            y_bar: 2.0,
            z_bar: 0.0,
            z_tilde: 6.0,
            n: 10,
            big_n: 40,
        }];
        let moms = [SecondMoments::known(1.0, 0.0, 0.0).unwrap()];
        // omega = inf -> sigma2/n
        assert_eq!(
            cure_shrink_classical(&stats, &moms, f64::INFINITY).unwrap(),
            0.1
        );
        // omega = 0 -> -0.1 + (2-6)^2 = 15.9
        assert!((cure_shrink_classical(&stats, &moms, 0.0).unwrap() - 15.9).abs() < 1e-12);
    }

    #[test]
    fn cure_shrink_classical_is_cure_compound_with_zero_gamma() {
        let stats = [
            AggregatedStats {
                y_bar: 2.0,
                z_bar: 0.0,
                z_tilde: 6.0,
                n: 10,
                big_n: 40,
            },
            AggregatedStats {
                y_bar: -1.0,
                z_bar: 0.0,
                z_tilde: 0.5,
                n: 5,
                big_n: 20,
            },
        ];
        let moms = [
            SecondMoments::known(1.0, 0.0, 0.0).unwrap(),
            SecondMoments::known(0.25, 0.0, 0.0).unwrap(),
        ];
        let ctxs: Vec<PTContext> = stats
            .iter()
            .zip(&moms)
            .map(|(s, m)| ctx(m.sigma2 / s.n as f64, 0.0))
            .collect();
        let y_bars: Vec<f64> = stats.iter().map(|s| s.y_bar).collect();
        let z_tildes: Vec<f64> = stats.iter().map(|s| s.z_tilde).collect();
        for omega in [0.0, 0.01, 0.3, 7.0, f64::INFINITY] {
            let a = cure_shrink_classical(&stats, &moms, omega).unwrap();
            let b = cure_compound(&y_bars, &z_tildes, &ctxs, omega).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn sure_grand_mean_hand_values() {
        let ctxs = [ctx(1.0, 0.0), ctx(1.0, 0.0)];
        // m=2, pt=(1,3), omega=1: weights 1/2, mean 2 -> 0.75 per term
        let v = sure_grand_mean(&[1.0, 3.0], &ctxs, 1.0).unwrap();
        assert!((v - 0.75).abs() < 1e-15);

        // sentinel: limit value = mean sigma_tilde2 (full PT recovery)
        let v_inf = sure_grand_mean(&[1.0, 3.0], &ctxs, f64::INFINITY).unwrap();
        assert_eq!(v_inf, 1.0);

        // all pt equal, omega=0: mean of (2/m - 1) sigma_tilde2; at m=4 the
        // factor is -1/2, so the value is -0.375 for these variances.
        let ctxs2 = [ctx(0.4, 0.0), ctx(1.2, 0.0), ctx(0.8, 0.0), ctx(0.6, 0.0)];
        let v0 = sure_grand_mean(&[2.0; 4], &ctxs2, 0.0).unwrap();
        assert!((v0 - -0.375).abs() < 1e-15);
    }

    #[test]
    fn sure_grand_mean_needs_two_problems() {
        assert!(sure_grand_mean(&[1.0], &[ctx(1.0, 0.0)], 1.0).is_err());
    }

    #[test]
    fn minimizer_tie_breaks_toward_zero() {
        let curve = minimize_omega(|_| Ok(1.0), 1.0).unwrap();
        assert_eq!(curve.argmin_omega(), 0.0);
        assert_eq!(curve.argmin_index, 0);
    }

    #[test]
    fn minimizer_finds_interior_quadratic_minimum() {
        // Strictly convex quadratic with interior minimum; the sentinel gets
        // a large finite value so the objective is total on the grid.
        let scale = 0.37;
        let target = 5.1 * scale;
        let objective = |omega: f64| -> Result<f64> {
            if omega.is_infinite() {
                return Ok(1e300);
            }
            Ok((omega - target) * (omega - target))
        };
        let curve = minimize_omega(objective, scale).unwrap();
        let i = curve.argmin_index;
        assert!(i > 0 && i + 1 < curve.omegas.len() - 1);
        // within one grid cell of the analytic minimizer
        assert!(curve.omegas[i - 1] <= target && target <= curve.omegas[i + 1]);
        // argmin is no worse than either endpoint
        assert!(curve.min_risk() <= curve.risks[0]);
        assert!(curve.min_risk() <= *curve.risks.last().unwrap());
    }

    #[test]
    fn minimizer_prefers_sentinel_when_pt_dominates() {
        // Large gaps between source and target relative to the variances
        // push the argmin to full recovery.
        let ctxs = [ctx(1e-6, 0.0), ctx(2e-6, 0.0)];
        let pt_vals = [10.0, -10.0];
        let z_tildes = [-10.0, 10.0];
        let scale = median_scale(&[1e-6, 2e-6]);
        let curve = minimize_omega(
            |omega| cure_compound(&pt_vals, &z_tildes, &ctxs, omega),
            scale,
        )
        .unwrap();
        assert!(curve.argmin_omega().is_infinite());
    }

    #[test]
    fn minimizer_reports_nonfinite_objective() {
        let err =
            minimize_omega(|omega| Ok(if omega == 0.0 { f64::NAN } else { 1.0 }), 1.0).unwrap_err();
        assert!(matches!(err, Error::NonFiniteObjective { .. }));
        assert!(!err.is_input_error());
    }

    #[test]
    fn grid_shape() {
        let g = omega_grid(2.0, 512);
        assert_eq!(g.len(), 514);
        assert_eq!(g[0], 0.0);
        assert!((g[1] - 2e-6).abs() < 1e-18);
        assert!((g[512] - 2e6).abs() < 1e-6);
        assert!(g[513].is_infinite());
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn median_scale_fallback() {
        assert_eq!(median_scale(&[0.0, 0.0]), 1.0);
        assert_eq!(median_scale(&[]), 1.0);
        assert_eq!(median_scale(&[3.0, 1.0, 2.0]), 2.0);
    }

    #[test]
    fn curve_csv_writes_inf_literal() {
        let curve = RiskCurve {
            omegas: vec![0.0, 0.5, f64::INFINITY],
            risks: vec![1.0, 0.25, 2.0],
            argmin_index: 1,
        };
        let mut buf = Vec::new();
        curve.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "omega,risk\n0,1\n0.5,0.25\ninf,2\n");
    }
}
