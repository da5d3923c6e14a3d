//! Small helpers for flat node fields.

use alloc::vec;
use alloc::vec::Vec;

/// Compensated (Kahan) summation; the quadrature invariants are tighter than
/// naive accumulation error at fine grids.
pub fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

pub fn max_abs(f: &[f64]) -> f64 {
    f.iter().fold(0.0_f64, |m, &v| m.max(v.abs()))
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(0.0_f64, |m, (&x, &y)| m.max((x - y).abs()))
}

/// Index of the largest value (first occurrence on ties).
pub fn argmax(f: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in f.iter().enumerate() {
        if v > f[best] {
            best = k;
        }
    }
    best
}

pub fn min_max(f: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in f {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

pub fn zeros(len: usize) -> Vec<f64> {
    vec![0.0; len]
}

/// Observed convergence order from errors at resolutions doubling each step.
pub fn observed_order(err_coarse: f64, err_fine: f64) -> f64 {
    libm::log2(err_coarse / err_fine)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_beats_naive_on_adversarial_sum() {
        // 1 followed by 1e16 copies of eps-sized terms in chunks; compare to
        // the analytically known total.
        let n = 1_000_000;
        let tiny = 1e-16;
        let s = kahan_sum(core::iter::once(1.0).chain((0..n).map(|_| tiny)));
        let expected = 1.0 + n as f64 * tiny;
        assert!((s - expected).abs() < 1e-15);
    }

    #[test]
    fn argmax_picks_first_of_ties() {
        assert_eq!(argmax(&[0.0, 3.0, 3.0, 1.0]), 1);
    }

    #[test]
    fn order_of_a_fourth_order_pair() {
        assert!((observed_order(16.0, 1.0) - 4.0).abs() < 1e-12);
    }
}
