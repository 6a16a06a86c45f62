//! The separated radial equation R″ + A1 R′ − (λ/ψ²) R = 0.
//!
//! Solutions regular at the vertex are launched at r_cone from the exact
//! Euler data r^α of the cone plateau and shot outward with an adaptive
//! Dormand–Prince integrator. Outward shooting is self-correcting: the
//! competing branch decays like e^{−r} and is suppressed.

use std::fmt::Write as _;

use crate::error::{invalid, Error, Result};
use crate::fit::{fit_line, geometric_ladder};
use crate::geometry::APProfile;
use crate::ode::DormandPrince;

/// Relative tolerance of radial shooting.
pub const RADIAL_RTOL: f64 = 1e-10;
/// Output grid density (points per decade).
pub const RADIAL_POINTS_PER_DECADE: usize = 64;
/// Maximum disagreement between the regression exponent and U(r_max).
pub const GROWTH_CROSSCHECK_TOL: f64 = 5e-3;
/// |R| beyond which the state is rescaled by 2^{−RESCALE_BITS}.
const RESCALE_BITS: i32 = 600;

/// Nonnegative root of α(α + n − 2) = λ.
pub fn indicial_root(n: usize, lambda: f64) -> f64 {
    let m = n as f64 - 2.0;
    if lambda == 0.0 {
        return 0.0;
    }
    // Rationalised form avoids cancellation for small λ.
    2.0 * lambda / (m + (m * m + 4.0 * lambda).sqrt())
}

/// Vertex exponent of the separated solution for g_X-eigenvalue λ: the cone
/// carries the round metric, whose eigenvalue is scale·λ.
pub fn vertex_exponent(p: &APProfile, lambda: f64) -> f64 {
    indicial_root(p.n(), p.scale() * lambda)
}

/// Sampled solution of the radial equation regular at the vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSolution {
    /// Eigenvalue λ of −Δ_{g_X}.
    pub lambda: f64,
    /// Ambient dimension.
    pub n: usize,
    /// Output grid (geometric, starting at r_cone).
    pub grid: Vec<f64>,
    mant: Vec<f64>,
    mant_prime: Vec<f64>,
    exp2: Vec<i32>,
    /// Vertex exponent α.
    pub alpha: f64,
    /// Log–log regression slope of R over the top decade.
    pub growth_exponent: f64,
    /// ln a, where a = R(r_max)/r_max^{growth_exponent}.
    pub log_normalization: f64,
    /// r R′/R at r_max.
    pub final_frequency: f64,
    /// True when regression and final frequency disagree by more than the cross-check tolerance.
    pub flagged: bool,
    profile: APProfile,
}

impl RadialSolution {
    /// R(r_j); may overflow to infinity for extreme growth, see [`Self::ln_value`].
    pub fn value(&self, j: usize) -> f64 {
        self.mant[j] * 2f64.powi(self.exp2[j])
    }
    /// R′(r_j).
    pub fn derivative(&self, j: usize) -> f64 {
        self.mant_prime[j] * 2f64.powi(self.exp2[j])
    }
    /// ln R(r_j), free of overflow.
    pub fn ln_value(&self, j: usize) -> f64 {
        self.mant[j].ln() + self.exp2[j] as f64 * std::f64::consts::LN_2
    }
    /// U(r_j) = r R′/R.
    pub fn frequency(&self, j: usize) -> f64 {
        if self.lambda == 0.0 {
            return 0.0;
        }
        self.grid[j] * self.mant_prime[j] / self.mant[j]
    }
    /// Binary exponent applied to the stored mantissas at r_j.
    pub fn scale_exponent(&self, j: usize) -> i32 {
        self.exp2[j]
    }
    /// Normalization a with R/a ∼ r^{growth_exponent}.
    pub fn normalization(&self) -> f64 {
        self.log_normalization.exp()
    }
    /// Profile the solution was computed on.
    pub fn profile(&self) -> &APProfile {
        &self.profile
    }

    /// CSV (r, R, R′, U) preceded by `#` header lines with λ, n, α and the growth exponent.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# lambda={:.17e}", self.lambda);
        let _ = writeln!(out, "# n={}", self.n);
        let _ = writeln!(out, "# alpha={:.17e}", self.alpha);
        let _ = writeln!(out, "# growth_exponent={:.17e}", self.growth_exponent);
        out.push_str("r,R,Rprime,U\n");
        for j in 0..self.grid.len() {
            let _ = writeln!(
                out,
                "{:.17e},{:.17e},{:.17e},{:.17e}",
                self.grid[j],
                self.value(j),
                self.derivative(j),
                self.frequency(j)
            );
        }
        out
    }
}

/// Values (R, R′) at ascending points, with a shared binary exponent per point.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotValues {
    /// Mantissa of R.
    pub r: Vec<f64>,
    /// Mantissa of R′.
    pub rp: Vec<f64>,
    /// Binary exponents.
    pub exp2: Vec<i32>,
}

/// Shoot the vertex-regular solution R = r^α (on the cone) to the given
/// ascending points, starting from `initial` = (R, R′) at r_cone.
pub fn shoot(p: &APProfile, lambda: f64, points: &[f64], initial: [f64; 2]) -> Result<ShotValues> {
    if !(lambda >= 0.0) {
        return invalid(format!("eigenvalue must be nonnegative, got {lambda}"));
    }
    if points.windows(2).any(|w| w[1] < w[0]) {
        return invalid("shooting points must be ascending");
    }
    let r0 = p.r_cone();
    let alpha = vertex_exponent(p, lambda);
    let rhs = |r: f64, y: &[f64; 2]| [y[1], -p.a1_raw(r) * y[1] + lambda * p.inv_psi_sq(r) * y[0]];
    let mut dp = DormandPrince::new(rhs, r0, initial, RADIAL_RTOL, 1e-300);
    let mut exp = 0i32;
    let mut out = ShotValues { r: Vec::new(), rp: Vec::new(), exp2: Vec::new() };
    for &r in points {
        if r <= r0 {
            // Exact Euler solution on the cone, continued from the launch data.
            let scale = initial[0] / r0.powf(alpha);
            out.r.push(scale * r.powf(alpha));
            out.rp.push(scale * alpha * r.powf(alpha - 1.0));
            out.exp2.push(0);
            continue;
        }
        dp.advance_to(r)?;
        let mut y = dp.state();
        if !y[0].is_finite() || !y[1].is_finite() {
            return Err(Error::SolverFailure(format!("non-finite radial state at r = {r}")));
        }
        if y[0].abs() > 2f64.powi(RESCALE_BITS) {
            let f = 2f64.powi(-RESCALE_BITS);
            y = [y[0] * f, y[1] * f];
            exp += RESCALE_BITS;
            dp.set_state(y);
        }
        out.r.push(y[0]);
        out.rp.push(y[1]);
        out.exp2.push(exp);
    }
    Ok(out)
}

/// Exact Euler launch data (r_cone^α, α r_cone^{α−1}).
pub fn launch_data(p: &APProfile, lambda: f64) -> [f64; 2] {
    let a = vertex_exponent(p, lambda);
    let r0 = p.r_cone();
    [r0.powf(a), a * r0.powf(a - 1.0)]
}

/// Solve the radial equation from r_cone to r_max (≥ 100 r_asym).
pub fn solve_radial(p: &APProfile, lambda: f64, r_max: f64) -> Result<RadialSolution> {
    solve_radial_from(p, lambda, r_max, launch_data(p, lambda))
}

/// As [`solve_radial`] but with explicit launch data at r_cone.
pub fn solve_radial_from(p: &APProfile, lambda: f64, r_max: f64, initial: [f64; 2]) -> Result<RadialSolution> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return invalid(format!("eigenvalue must be nonnegative, got {lambda}"));
    }
    if !(r_max >= 100.0 * p.r_asym()) {
        return invalid(format!("r_max = {r_max} must be at least 100 r_asym = {}", 100.0 * p.r_asym()));
    }
    let grid = geometric_ladder(p.r_cone(), r_max, RADIAL_POINTS_PER_DECADE);
    let alpha = vertex_exponent(p, lambda);
    if lambda == 0.0 {
        let m = grid.len();
        return Ok(RadialSolution {
            lambda,
            n: p.n(),
            mant: vec![1.0; m],
            mant_prime: vec![0.0; m],
            exp2: vec![0; m],
            grid,
            alpha: 0.0,
            growth_exponent: 0.0,
            log_normalization: 0.0,
            final_frequency: 0.0,
            flagged: false,
            profile: p.clone(),
        });
    }
    let shot = shoot(p, lambda, &grid, initial)?;
    let mut sol = RadialSolution {
        lambda,
        n: p.n(),
        mant: shot.r,
        mant_prime: shot.rp,
        exp2: shot.exp2,
        grid,
        alpha,
        growth_exponent: 0.0,
        log_normalization: 0.0,
        final_frequency: 0.0,
        flagged: false,
        profile: p.clone(),
    };
    let last = sol.grid.len() - 1;
    let idx: Vec<usize> = (0..=last).filter(|&j| sol.grid[j] >= r_max / 10.0 * (1.0 - 1e-12)).collect();
    let x: Vec<f64> = idx.iter().map(|&j| sol.grid[j].ln()).collect();
    let y: Vec<f64> = idx.iter().map(|&j| sol.ln_value(j)).collect();
    let line = fit_line(&x, &y)?;
    sol.growth_exponent = line.slope;
    sol.log_normalization = sol.ln_value(last) - line.slope * r_max.ln();
    sol.final_frequency = sol.frequency(last);
    sol.flagged = (sol.final_frequency - sol.growth_exponent).abs() > GROWTH_CROSSCHECK_TOL;
    Ok(sol)
}

/// Liouville–Green residual pair at r ≥ r_asym:
/// (q^{1/2} − ½A1 − λ/r, −q^{1/2} − ½A1 + 1 + (n−1+2λ)/(2r)).
/// Both components are O(r^{−2}).
pub fn lg_exponent_check(p: &APProfile, lambda: f64, r: f64) -> Result<(f64, f64)> {
    if !(lambda >= 0.0) {
        return invalid(format!("eigenvalue must be nonnegative, got {lambda}"));
    }
    if !(r >= p.r_asym()) {
        return invalid(format!("Liouville-Green check needs r >= r_asym, got {r}"));
    }
    let a1 = p.a1_raw(r);
    let a1p = p.a1_prime_raw(r);
    let a0 = -lambda * p.inv_psi_sq(r);
    let q = 0.25 * a1 * a1 + 0.5 * a1p - a0;
    if !(q >= 0.0) {
        return invalid(format!("Liouville-Green potential is negative ({q:.3e}) at r = {r}"));
    }
    let sq = q.sqrt();
    // q^{1/2} − ½A1 = (q − ¼A1²)/(q^{1/2} + ½A1), free of cancellation.
    let growth = (0.5 * a1p - a0) / (sq + 0.5 * a1);
    let first = growth - lambda / r;
    let n = p.n() as f64;
    let second = 1.0 - (sq + 0.5 * a1) + (n - 1.0 + 2.0 * lambda) / (2.0 * r);
    Ok((first, second))
}

/// True iff R > 0 and R′ > 0 at every grid point (λ > 0 only).
pub fn monotonicity_check(sol: &RadialSolution) -> Result<bool> {
    if !(sol.lambda > 0.0) {
        return invalid("monotonicity check applies to positive eigenvalues only");
    }
    Ok(sol.mant.iter().zip(&sol.mant_prime).all(|(r, rp)| *r > 0.0 && *rp > 0.0))
}
