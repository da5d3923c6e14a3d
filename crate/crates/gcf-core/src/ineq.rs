//! Scalar inequality laboratory: the coefficient functions steering the
//! maximum-principle argument, their closed forms and sign structure, and
//! wide-range scans certifying the algebra numerically.
//!
//! Everything here is pure arithmetic in the parameters (n, α, θ); no
//! geometry is touched. θ stands for a principal radius normalized by the
//! speed, so only θ > 0 is admissible. The physically realized range at a
//! w̄-maximum is θ ≥ 1, but the algebra holds for all θ > 0 and is scanned
//! down to the grid's smallest positive θ; reports carry a note to that
//! effect.

use alloc::vec::Vec;

use crate::error::{GcfError, Result};
use crate::field::kahan_sum;

/// β = (nα − 1)/(nα), the self-similar normalization weight.
pub fn beta(n: usize, alpha: f64) -> f64 {
    let na = n as f64 * alpha;
    (na - 1.0) / na
}

/// I₁ = β + 1 − α, the leading reaction coefficient. Positive between
/// α = 1/n and the critical exponent, negative beyond it.
pub fn i1(n: usize, alpha: f64) -> f64 {
    beta(n, alpha) + 1.0 - alpha
}

/// The positive root of I₁: α* = 1 + √((n−1)/n). At n = 1 this degenerates
/// to a double zero at α = 1 and I₁ ≤ 0 everywhere.
pub fn i1_zero(n: usize) -> f64 {
    1.0 + libm::sqrt((n as f64 - 1.0) / n as f64)
}

/// Locate the sign change of I₁ on [1, 3] by bisection (n ≥ 2; at n = 1
/// there is no sign change, I₁ only touches zero).
pub fn i1_zero_bisect(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(GcfError::BadParameter { what: "bisection needs n >= 2" });
    }
    let (mut lo, mut hi) = (1.0_f64, 3.0_f64);
    // I₁ is strictly decreasing here: dI₁/dα = 1/(nα²) − 1 < 0 for nα² > 1.
    debug_assert!(i1(n, lo) > 0.0 && i1(n, hi) < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if i1(n, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Guard for the radius parameter.
fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta.is_finite() {
        Ok(())
    } else {
        Err(GcfError::BadParameter { what: "theta must be positive and finite" })
    }
}

/// J in its defining form: 2α(β−θ) + α(θ⁻² + 2θ⁻¹)(β−θ)² + β.
pub fn j_def(n: usize, alpha: f64, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    let b = beta(n, alpha);
    let d = b - theta;
    Ok(2.0 * alpha * d + alpha * (1.0 / (theta * theta) + 2.0 / theta) * d * d + b)
}

/// J as the completed square: β(1−α) + 1/n + α(βθ⁻¹ − 1/(nα))² − 1/(n²α).
pub fn j_closed(n: usize, alpha: f64, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    let b = beta(n, alpha);
    let nf = n as f64;
    let s = b / theta - 1.0 / (nf * alpha);
    Ok(b * (1.0 - alpha) + 1.0 / nf + alpha * s * s - 1.0 / (nf * nf * alpha))
}

/// Lower bound β(1−α+1/n), attained exactly at θ = nα − 1 where the square
/// term of the closed form vanishes.
pub fn j_lower_bound(n: usize, alpha: f64) -> f64 {
    beta(n, alpha) * (1.0 - alpha + 1.0 / n as f64)
}

/// Relative disagreement of the two J forms, with the term list summed under
/// compensation: near the square's zero both forms cancel to a small value
/// and naive left-to-right rounding would spend the entire 1e−11 budget.
pub fn j_form_discrepancy(n: usize, alpha: f64, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    let b = beta(n, alpha);
    let nf = n as f64;
    let d = b - theta;
    let s = b / theta - 1.0 / (nf * alpha);
    let diff = kahan_sum([
        2.0 * alpha * d,
        alpha * (d / theta) * (d / theta),
        2.0 * alpha * d * d / theta,
        b,
        -(b * (1.0 - alpha)),
        -(1.0 / nf),
        -(alpha * s * s),
        1.0 / (nf * nf * alpha),
    ]);
    let scale = j_closed(n, alpha, theta)?.abs().max(1.0);
    Ok(diff.abs() / scale)
}

/// y(α) = −(2n+3)α² + 5(n+1)α − 5, the discriminant-style polynomial whose
/// nonnegativity on [1/n, 1+1/n] closes the gradient-term estimate. Concave
/// in α, so endpoint nonnegativity certifies the whole interval.
pub fn y_poly(n: usize, alpha: f64) -> f64 {
    -((2 * n + 3) as f64) * alpha * alpha + (5 * (n + 1)) as f64 * alpha - 5.0
}

/// Exact rational q = num/den in lowest terms over i128.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Frac {
    pub num: i128,
    pub den: i128,
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Frac {
    pub fn new(num: i128, den: i128) -> Self {
        assert!(den != 0, "zero denominator");
        let sign = if den < 0 { -1 } else { 1 };
        let g = gcd(num, den).max(1);
        Frac { num: sign * num / g, den: sign * den / g }
    }
}

/// y evaluated exactly at the rational α = p/q: (−(2n+3)p² + 5(n+1)pq − 5q²)/q².
pub fn y_poly_exact(n: usize, p: i128, q: i128) -> Frac {
    let n = n as i128;
    Frac::new(-(2 * n + 3) * p * p + 5 * (n + 1) * p * q - 5 * q * q, q * q)
}

/// Closed forms at the interval endpoints: y(1/n) = 3(n−1)/n² and
/// y(1+1/n) = (3n³ − 2n² − 3n − 3)/n². Both hold for every n ≥ 1; the
/// right endpoint is negative only at n = 1 (value −5).
pub fn y_endpoint_closed_forms(n: usize) -> (Frac, Frac) {
    let ni = n as i128;
    (
        Frac::new(3 * (ni - 1), ni * ni),
        Frac::new(3 * ni * ni * ni - 2 * ni * ni - 3 * ni - 3, ni * ni),
    )
}

/// Scan configuration mirroring the CLI flags.
#[derive(Debug, Clone, Copy)]
pub struct ScanConfig {
    pub n_max: usize,
    pub alpha_samples: usize,
    pub theta_samples: usize,
    pub theta_max: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig { n_max: 10, alpha_samples: 1000, theta_samples: 1000, theta_max: 10.0 }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_max == 0 {
            return Err(GcfError::BadParameter { what: "n_max must be >= 1" });
        }
        if self.alpha_samples == 0 || self.theta_samples == 0 {
            return Err(GcfError::BadParameter { what: "sample counts must be >= 1" });
        }
        if !(self.theta_max > 0.0) || !self.theta_max.is_finite() {
            return Err(GcfError::BadParameter { what: "theta_max must be positive" });
        }
        Ok(())
    }
}

/// Per-(n, α) aggregate over the θ sweep; one CSV row of the scan dump.
#[derive(Debug, Clone, Copy)]
pub struct ScanRow {
    pub n: usize,
    pub alpha: f64,
    pub i1: f64,
    /// min over θ of J − β(1−α+1/n).
    pub min_margin: f64,
    /// θ attaining the minimum margin.
    pub theta_at_min: f64,
    /// max over θ of the relative form disagreement.
    pub max_discrepancy: f64,
}

/// Scan outcome; `i1_zero_location[k]` belongs to n = k+2 (bisected zeros
/// exist only for n ≥ 2).
#[derive(Debug, Clone)]
pub struct ScanSummary {
    pub min_j_margin: f64,
    pub max_form_discrepancy: f64,
    pub i1_zero_location: Vec<f64>,
    pub rows_scanned: usize,
}

/// Sweep J over n ∈ {1..n_max}, α midpoints of (1/n, 1+1/n), θ midpoints of
/// (0, θ_max], feeding one aggregate row per (n, α) to the sink.
pub fn scan_with<F: FnMut(&ScanRow)>(cfg: &ScanConfig, mut sink: F) -> Result<ScanSummary> {
    cfg.validate()?;
    let mut summary = ScanSummary {
        min_j_margin: f64::INFINITY,
        max_form_discrepancy: 0.0,
        i1_zero_location: Vec::new(),
        rows_scanned: 0,
    };
    for n in 1..=cfg.n_max {
        let lo = 1.0 / n as f64;
        let width = 1.0;
        for ia in 0..cfg.alpha_samples {
            let alpha = lo + width * (ia as f64 + 0.5) / cfg.alpha_samples as f64;
            let bound = j_lower_bound(n, alpha);
            let mut row = ScanRow {
                n,
                alpha,
                i1: i1(n, alpha),
                min_margin: f64::INFINITY,
                theta_at_min: 0.0,
                max_discrepancy: 0.0,
            };
            for it in 0..cfg.theta_samples {
                let theta = cfg.theta_max * (it as f64 + 1.0) / cfg.theta_samples as f64;
                let j = j_def(n, alpha, theta)?;
                let margin = j - bound;
                if margin < row.min_margin {
                    row.min_margin = margin;
                    row.theta_at_min = theta;
                }
                let disc = j_form_discrepancy(n, alpha, theta)?;
                row.max_discrepancy = row.max_discrepancy.max(disc);
            }
            summary.min_j_margin = summary.min_j_margin.min(row.min_margin);
            summary.max_form_discrepancy = summary.max_form_discrepancy.max(row.max_discrepancy);
            summary.rows_scanned += 1;
            sink(&row);
        }
        if n >= 2 {
            summary.i1_zero_location.push(i1_zero_bisect(n)?);
        }
    }
    Ok(summary)
}

/// Scan without collecting rows.
pub fn scan(cfg: &ScanConfig) -> Result<ScanSummary> {
    scan_with(cfg, |_| {})
}
