//! Small numeric helpers: compensated summation and order statistics.

/// Neumaier-compensated sum. Benchmarks push m*n past 10^6 terms, where naive
/// accumulation visibly drifts.
pub(crate) fn kahan_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    kahan_sum(values.iter().copied()) / values.len() as f64
}

/// Median of a copy of `values`. Even lengths average the two middle entries.
pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("median of non-NaN values"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Sample standard deviation (divisor n-1).
pub(crate) fn sample_sd(values: &[f64]) -> f64 {
    let m = mean(values);
    let ss = kahan_sum(values.iter().map(|v| (v - m) * (v - m)));
    (ss / (values.len() as f64 - 1.0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_recovers_cancellation() {
        // 1 + 1e-16 repeated: naive sum loses the small terms entirely.
        let n = 1_000_000usize;
        let vals: Vec<f64> = std::iter::once(1.0)
            .chain(std::iter::repeat_n(1e-16, n))
            .collect();
        let s = kahan_sum(vals.iter().copied());
        assert!((s - (1.0 + n as f64 * 1e-16)).abs() < 1e-12);
    }

    #[test]
    fn median_odd_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn sd_matches_hand_value() {
        // {0.1, 0.3}: mean 0.2, sd = sqrt(0.02)
        let sd = sample_sd(&[0.1, 0.3]);
        assert!((sd - 0.02f64.sqrt()).abs() < 1e-15);
    }
}
