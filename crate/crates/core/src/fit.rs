//! Least-squares fits on logarithmic data.
//!
//! Every asymptotic statement checked by the laboratory has the shape
//! `|q(ρ)| ≤ C ρ^{−τ}` or `q(ρ) ∼ a ρ^p`; both are fitted by ordinary least
//! squares on (ln ρ, ln |q|) and reported with the coefficient of
//! determination so that poor fits can be rejected instead of over-read.

use crate::error::{invalid, Result};

/// Minimum coefficient of determination for a power-law fit to be trusted.
pub const MIN_R_SQUARED: f64 = 0.95;

/// Result of an ordinary least-squares line fit y ≈ intercept + slope·x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    /// Fitted slope.
    pub slope: f64,
    /// Fitted intercept.
    pub intercept: f64,
    /// Coefficient of determination (1 for a perfect or degenerate-flat fit).
    pub r_squared: f64,
    /// Number of points used.
    pub points: usize,
}

/// Ordinary least-squares line through `(x, y)`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() {
        return invalid("fit_line: x and y lengths differ");
    }
    if x.len() < 2 {
        return invalid("fit_line: need at least two points");
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx <= 0.0 {
        return invalid("fit_line: abscissae are all equal");
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r_squared = if syy <= f64::MIN_POSITIVE { 1.0 } else { (1.0 - ss_res / syy).clamp(0.0, 1.0) };
    Ok(LineFit { slope, intercept, r_squared, points: x.len() })
}

/// A decay fit |q(ρ)| ≈ C ρ^{−τ}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// Fitted prefactor C (0 when the quantity vanishes identically).
    pub c: f64,
    /// Fitted decay rate τ (infinite when the quantity vanishes identically).
    pub tau: f64,
    /// Coefficient of determination of the log–log regression.
    pub r_squared: f64,
    /// True when the quantity vanished to working precision (see [`fit_decay`]).
    pub exact: bool,
}

impl DecayFit {
    /// Whether the fit is trustworthy: exact, or R² ≥ [`MIN_R_SQUARED`].
    pub fn accepted(&self) -> bool {
        self.exact || self.r_squared >= MIN_R_SQUARED
    }

    /// Accepted and decaying at a positive rate.
    pub fn decays(&self) -> bool {
        self.accepted() && self.tau > 0.0
    }

    /// Accepted and decaying at rate at least `rate`.
    pub fn decays_at_least(&self, rate: f64) -> bool {
        self.accepted() && self.tau >= rate
    }

    /// Short textual form used in reports.
    pub fn describe(&self) -> String {
        if self.exact {
            "exact".to_string()
        } else {
            format!("C={:.4e} tau={:.4} R2={:.4}", self.c, self.tau, self.r_squared)
        }
    }
}

/// Fit |q| ≈ C ρ^{−τ}.
///
/// When every |q| is at most `floor`, or when the sequence ends below the floor
/// with fewer than three samples above it, the quantity is reported as
/// vanishing to working precision (τ = ∞). Samples below the floor are
/// otherwise dropped, since their logarithm only measures round-off.
pub fn fit_decay(rho: &[f64], q: &[f64], floor: f64) -> Result<DecayFit> {
    if rho.len() != q.len() {
        return invalid("fit_decay: length mismatch");
    }
    if q.iter().all(|v| v.abs() <= floor) {
        return Ok(DecayFit { c: 0.0, tau: f64::INFINITY, r_squared: 1.0, exact: true });
    }
    let (x, y): (Vec<f64>, Vec<f64>) = rho
        .iter()
        .zip(q)
        .filter(|(_, v)| v.abs() > floor)
        .map(|(r, v)| (r.ln(), v.abs().ln()))
        .unzip();
    if x.len() < 3 {
        // A sequence that drops into round-off before a regression is possible
        // has vanished to working precision.
        if q.last().is_some_and(|v| v.abs() <= floor) {
            return Ok(DecayFit { c: 0.0, tau: f64::INFINITY, r_squared: 1.0, exact: true });
        }
        return invalid("fit_decay: fewer than three samples above the floor");
    }
    let line = fit_line(&x, &y)?;
    Ok(DecayFit { c: line.intercept.exp(), tau: -line.slope, r_squared: line.r_squared, exact: false })
}

/// Geometric ladder from `start` to at least `stop` with the given number of
/// points per decade; the last point is exactly `stop`.
pub fn geometric_ladder(start: f64, stop: f64, per_decade: usize) -> Vec<f64> {
    assert!(start > 0.0 && stop >= start && per_decade > 0, "invalid geometric ladder");
    let steps = ((stop / start).log10() * per_decade as f64 - 1e-9).ceil().max(0.0) as usize;
    if steps == 0 {
        return vec![start];
    }
    let ratio = (stop / start).powf(1.0 / steps as f64);
    let mut out: Vec<f64> = (0..steps).map(|j| start * ratio.powi(j as i32)).collect();
    out.push(stop);
    out
}

/// Dyadic ladder 2^lo, …, 2^hi.
pub fn dyadic_ladder(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|i| 2f64.powi(i)).collect()
}
