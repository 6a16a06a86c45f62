//! Randomised experiment batteries on Dirichlet solutions.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::operator::{BoundaryData, OperatorSpec};
use super::solver::DirichletSolver;
use crate::cross_section::Spectrum;
use crate::error::{invalid, Error, Result};
use crate::fit::dyadic_ladder;
use crate::frequency::{level_inner, mean_value_ratio, separation_defect, trace, ModeField};
use crate::geometry::APProfile;

/// Default ball radius of the batteries.
pub const BATTERY_BALL_RADIUS: f64 = 1024.0;
/// Decades spanned by the log-uniform per-level amplitudes of random data.
pub const RANDOM_AMPLITUDE_DECADES: f64 = 3.0;

/// Deterministic generator for trial `trial` of a battery seeded with `seed`.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Random boundary data: Gaussian within each level, with a log-uniform
/// amplitude per level so that every level gets to dominate in some trials.
pub fn random_boundary(spectrum: &Spectrum, rho: f64, rng: &mut impl Rng) -> Result<BoundaryData> {
    let mut coeffs = vec![0.0; spectrum.mode_count()];
    for level in 0..spectrum.level_count() {
        let amp = 10f64.powf(-RANDOM_AMPLITUDE_DECADES * rng.random::<f64>());
        let range = spectrum.level_range(level);
        let scale = amp / (range.len() as f64).sqrt();
        for c in &mut coeffs[range] {
            let x: f64 = StandardNormal.sample(rng);
            *c = scale * x;
        }
    }
    BoundaryData::new(rho, coeffs)
}

/// Relative slack of the model three-circles comparisons (absorbs round-off
/// in the equality cases).
pub const MODEL_THREE_CIRCLES_SLACK: f64 = 1e-12;

/// Evaluate the two model three-circles conditions for the coefficient vector
/// `a` over the flat modes of `spec` (a[0] is the constant mode):
///
/// * Σ_{k≥2} a_k² (1 − 2^{2d−2λ_k}) ≤ a_1² (2^{2d} − 1),
/// * Σ_{k≥2} 2^{−2λ_k} a_k² (1 − 2^{2d−2λ_k}) ≤ a_1² (2^{2d} − 1).
///
/// The first is the doubling condition between the outer pair of circles,
/// the second the same condition one step inward.
pub fn model_three_circles(a: &[f64], d: f64, spec: &Spectrum) -> Result<(bool, bool)> {
    if !(d > 0.0) {
        return invalid(format!("d must be positive, got {d}"));
    }
    if a.len() > spec.mode_count() {
        return invalid(format!("{} coefficients for {} retained modes", a.len(), spec.mode_count()));
    }
    let lam = spec.mode_eigenvalues();
    let rhs = a.first().map_or(0.0, |c| c * c) * (4f64.powf(d) - 1.0);
    let (mut first, mut second, mut mag) = (0.0, 0.0, rhs.abs());
    for k in 1..a.len() {
        let t = a[k] * a[k] * (1.0 - 4f64.powf(d - lam[k]));
        first += t;
        second += 4f64.powf(-lam[k]) * t;
        mag += t.abs();
    }
    let slack = MODEL_THREE_CIRCLES_SLACK * mag;
    Ok((first <= rhs + slack, second <= rhs + slack))
}

/// Outcome of a three-circles battery.
#[derive(Debug, Clone, PartialEq)]
pub struct ViolationReport {
    /// Doubling exponent d.
    pub d: f64,
    /// Ball radius of the solves.
    pub ball: f64,
    /// Outer radii ρ of the circle triples (ρ/4, ρ/2, ρ).
    pub ladder: Vec<f64>,
    /// Trials in which I(ρ) ≤ 2^{2d} I(ρ/2) held, per radius.
    pub premise_held: Vec<usize>,
    /// Trials in which the premise held but I(ρ/2) ≤ 2^{2d} I(ρ/4) failed, per radius.
    pub violations: Vec<usize>,
    /// Number of trials.
    pub trials: usize,
}

impl ViolationReport {
    /// Smallest ladder radius from which on no violations occur.
    pub fn clean_from(&self) -> Option<f64> {
        let mut best = None;
        for j in (0..self.ladder.len()).rev() {
            if self.violations[j] > 0 {
                break;
            }
            best = Some(self.ladder[j]);
        }
        best
    }

    /// Total number of violations at ladder radii ≥ `rho`.
    pub fn violations_from(&self, rho: f64) -> usize {
        self.ladder.iter().zip(&self.violations).filter(|(r, _)| **r >= rho).map(|(_, v)| *v).sum()
    }

    /// CSV with columns rho, trials, premise_held, violations.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rho,trials,premise_held,violations\n");
        for j in 0..self.ladder.len() {
            let _ = writeln!(out, "{:e},{},{},{}", self.ladder[j], self.trials, self.premise_held[j], self.violations[j]);
        }
        out
    }
}

/// Level-set norm I(ρ) of a field.
fn level_norm(u: &ModeField, rho: f64) -> Result<f64> {
    level_inner(u, u, rho)
}

/// Three-circles battery: random Dirichlet data on the ball of radius
/// [`BATTERY_BALL_RADIUS`], counting violations of
/// I(ρ) ≤ 2^{2d} I(ρ/2) ⟹ I(ρ/2) ≤ 2^{2d} I(ρ/4) along `rho_ladder`.
pub fn three_circles_battery(op: &OperatorSpec, d: f64, rho_ladder: &[f64], trials: usize, seed: u64) -> Result<ViolationReport> {
    three_circles_battery_on(op, d, rho_ladder, trials, seed, BATTERY_BALL_RADIUS)
}

/// As [`three_circles_battery`] with an explicit ball radius.
pub fn three_circles_battery_on(
    op: &OperatorSpec,
    d: f64,
    rho_ladder: &[f64],
    trials: usize,
    seed: u64,
    ball: f64,
) -> Result<ViolationReport> {
    if !(d > 0.0) {
        return invalid(format!("d must be positive, got {d}"));
    }
    let spec = op.spectrum();
    if spec.eigenvalues().iter().any(|l| (l - d).abs() <= 1e-9) {
        return invalid(format!("d = {d} coincides with an eigenvalue"));
    }
    let r0 = op.profile().r_cone();
    if rho_ladder.iter().any(|&r| r > ball * (1.0 + 1e-12) || r / 4.0 < r0) {
        return invalid(format!("ladder radii must lie in [4 r_cone, {ball}]"));
    }
    let solver = DirichletSolver::new(op, ball)?;
    let q = 4f64.powf(d);
    let outcomes: Vec<Result<Vec<(bool, bool)>>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let data = random_boundary(spec, ball, &mut rng)?;
            let u = solver.solve(&data)?;
            rho_ladder
                .iter()
                .map(|&rho| {
                    let (i1, i2, i4) = (level_norm(&u, rho)?, level_norm(&u, rho / 2.0)?, level_norm(&u, rho / 4.0)?);
                    let premise = i1 <= q * i2;
                    Ok((premise, premise && i2 > q * i4))
                })
                .collect()
        })
        .collect();
    let mut report = ViolationReport {
        d,
        ball,
        ladder: rho_ladder.to_vec(),
        premise_held: vec![0; rho_ladder.len()],
        violations: vec![0; rho_ladder.len()],
        trials,
    };
    for o in outcomes {
        for (j, (premise, violated)) in o?.into_iter().enumerate() {
            report.premise_held[j] += premise as usize;
            report.violations[j] += violated as usize;
        }
    }
    Ok(report)
}

/// Outcome of a Liouville battery.
#[derive(Debug, Clone, PartialEq)]
pub struct LiouvilleReport {
    /// Smallest nonzero eigenvalue λ_2.
    pub lambda_2: f64,
    /// Far ladder on which U of the deflated remainder is measured.
    pub ladder: Vec<f64>,
    /// min U over the ladder per trial (None for vacuous trials).
    pub min_u: Vec<Option<f64>>,
}

/// Allowed shortfall of the deflated frequency below λ_2.
pub const LIOUVILLE_TOLERANCE: f64 = 0.05;

impl LiouvilleReport {
    /// Minimum over non-vacuous trials.
    pub fn overall_min(&self) -> Option<f64> {
        self.min_u.iter().flatten().cloned().reduce(f64::min)
    }
    /// Number of vacuous trials (remainder identically zero).
    pub fn vacuous(&self) -> usize {
        self.min_u.iter().filter(|m| m.is_none()).count()
    }
    /// Every non-vacuous trial has min U ≥ λ_2 − [`LIOUVILLE_TOLERANCE`].
    pub fn passed(&self) -> bool {
        self.min_u.iter().flatten().all(|m| *m >= self.lambda_2 - LIOUVILLE_TOLERANCE)
    }
    /// CSV with columns trial, min_U (empty when vacuous).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial,min_U\n");
        for (t, m) in self.min_u.iter().enumerate() {
            match m {
                Some(v) => {
                    let _ = writeln!(out, "{t},{v:.17e}");
                }
                None => {
                    let _ = writeln!(out, "{t},");
                }
            }
        }
        out
    }
}

/// Subtract from u the constant equal to its mode-0 level average at ρ.
pub fn deflate_constant(u: &ModeField, rho: f64) -> Result<ModeField> {
    let c = u.sample(rho)?.u[0] / u.spectrum().volume().sqrt();
    Ok(u.minus_constant(c))
}

/// Liouville battery on the default far ladder 2^6, …, 2^10 (ball 2^10).
pub fn liouville_battery(op: &OperatorSpec, trials: usize, seed: u64) -> Result<LiouvilleReport> {
    liouville_battery_on(op, trials, seed, &dyadic_ladder(6, 10), BATTERY_BALL_RADIUS, |s, r, rng| random_boundary(s, r, rng))
}

/// Liouville battery with explicit ladder, ball and data generator.
pub fn liouville_battery_on(
    op: &OperatorSpec,
    trials: usize,
    seed: u64,
    ladder: &[f64],
    ball: f64,
    data: impl Fn(&Spectrum, f64, &mut ChaCha8Rng) -> Result<BoundaryData> + Sync,
) -> Result<LiouvilleReport> {
    if trials == 0 {
        return invalid("Liouville battery needs at least one trial");
    }
    let spec = op.spectrum();
    if spec.level_count() < 2 {
        return invalid("Liouville battery needs a nonzero eigenvalue");
    }
    let far = *ladder.last().ok_or_else(|| Error::InvalidArgument("empty ladder".into()))?;
    let solver = DirichletSolver::new(op, ball)?;
    let p = op.profile();
    let min_u: Vec<Result<Option<f64>>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let u = solver.solve(&data(spec, ball, &mut rng)?)?;
            let rem = deflate_constant(&u, far)?;
            let scale = level_norm(&u, far)?;
            if level_norm(&rem, far)? <= 1e-24 * scale {
                return Ok(None);
            }
            let tr = trace(&rem, p, ladder)?;
            Ok(Some(tr.u.iter().cloned().fold(f64::INFINITY, f64::min)))
        })
        .collect();
    Ok(LiouvilleReport {
        lambda_2: spec.eigenvalues()[1],
        ladder: ladder.to_vec(),
        min_u: min_u.into_iter().collect::<Result<_>>()?,
    })
}

/// Measured sides of the preservation-of-orthogonality estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreservationMeasure {
    /// Drift of the normalised inner product with the I-ratio transport factor.
    pub lhs: f64,
    /// Separation defect δ of v on [ρ1, ρ2].
    pub delta: f64,
    /// d = max U_v on [ρ1, ρ2].
    pub d: f64,
    /// δ (ρ2/ρ1)^{4d+1}.
    pub shape: f64,
}

impl PreservationMeasure {
    /// lhs / shape (the constant this pair requires).
    pub fn required_constant(&self) -> f64 {
        if self.lhs == 0.0 {
            0.0
        } else {
            self.lhs / self.shape
        }
    }
}

/// Left side |⟨u,v⟩₂/(‖u‖₂‖v‖₂) − √(I_u(ρ1)/I_u(ρ2))√(I_v(ρ2)/I_v(ρ1))·⟨u,v⟩₁/(‖u‖₁‖v‖₁)|
/// of the preservation estimate, together with δ and d of v on [ρ1, ρ2].
pub fn preservation_experiment(u: &ModeField, v: &ModeField, p: &APProfile, rho1: f64, rho2: f64) -> Result<PreservationMeasure> {
    if !(rho1 > 0.0 && rho2 > rho1) {
        return invalid(format!("need 0 < rho1 < rho2, got {rho1}, {rho2}"));
    }
    let (iu1, iu2) = (level_norm(u, rho1)?, level_norm(u, rho2)?);
    let (iv1, iv2) = (level_norm(v, rho1)?, level_norm(v, rho2)?);
    for (i, rho) in [(iu1, rho1), (iu2, rho2), (iv1, rho1), (iv2, rho2)] {
        if !(i > 0.0) {
            return Err(Error::DegenerateLevel { rho });
        }
    }
    let j1 = level_inner(u, v, rho1)?;
    let j2 = level_inner(u, v, rho2)?;
    let lhs = (j2 / (iu2 * iv2).sqrt() - (iu1 / iu2).sqrt() * (iv2 / iv1).sqrt() * j1 / (iu1 * iv1).sqrt()).abs();
    let delta = separation_defect(v, p, rho1, rho2)?.max(0.0).sqrt();
    let ladder = crate::frequency::ladder_with_ratio(rho1, rho2, 1.02);
    let d = trace(v, p, &ladder)?.u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let shape = delta * (rho2 / rho1).powf(4.0 * d + 1.0);
    Ok(PreservationMeasure { lhs, delta, d, shape })
}

/// Mean-value ratios of `u` at the given radii (τ fixed).
pub fn mean_value_sweep(u: &ModeField, p: &APProfile, radii: &[f64], tau: f64) -> Result<Vec<f64>> {
    radii.iter().map(|&r| mean_value_ratio(u, p, r, tau)).collect()
}
