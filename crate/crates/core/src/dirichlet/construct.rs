//! Exhaustion construction of drift-harmonic functions with prescribed growth
//! and of asymptotically orthogonal bases.
//!
//! For a level ℓ the construction solves Dirichlet problems on dyadic balls
//! {r ≤ 2^i} with eigenfunction data Θ_i from the λ_ℓ-eigenspace, removes the
//! value at the vertex p_0, projects off the previously built non-constant
//! fields in ⟨·,·⟩_ρ̄, normalises by √I(ρ̄₁) and stops once consecutive iterates
//! agree on a fixed compact window.

use std::fmt::Write as _;
use std::ops::RangeInclusive;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::operator::{BoundaryData, OperatorSpec};
use super::solver::DirichletSolver;
use crate::error::{invalid, Error, Result};
use crate::fit::{dyadic_ladder, fit_decay, DecayFit};
use crate::frequency::{level_inner, orthogonality_angle, ModeField, Provenance};
use crate::geometry::APProfile;

/// Parameters of the construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstructionConfig {
    /// Orthogonalisation radius ρ̄.
    pub rho_bar: f64,
    /// Normalisation radius ρ̄₁.
    pub rho_bar1: f64,
    /// Exponents i of the ball radii 2^i.
    pub i_range: RangeInclusive<i32>,
    /// Sup-norm threshold between consecutive normalised iterates.
    pub tolerance: f64,
    /// Upper end of the compact convergence window [r_cone, window_end].
    pub window_end: f64,
    /// Radius of the far Gram matrix.
    pub far_radius: f64,
    /// Ladder for asymptotic limits and orthogonality fits.
    pub fit_ladder: Vec<f64>,
    /// Seed breaking ties inside degenerate eigenspaces.
    pub seed: u64,
}

/// Floor below which inner-product drifts and angles count as round-off.
pub const ANGLE_FLOOR: f64 = 1e-12;

impl ConstructionConfig {
    /// Defaults: ρ̄ = 8 r_asym, ρ̄₁ = 2ρ̄, balls 2^9..2^11, tolerance 1e−5,
    /// window [r_cone, 8ρ̄₁], far radius 2^10, fit ladder 2^4..2^10.
    pub fn for_profile(p: &APProfile) -> ConstructionConfig {
        let rho_bar = 8.0 * p.r_asym();
        ConstructionConfig {
            rho_bar,
            rho_bar1: 2.0 * rho_bar,
            i_range: 9..=11,
            tolerance: 1e-5,
            window_end: 16.0 * rho_bar,
            far_radius: 1024.0,
            fit_ladder: dyadic_ladder(4, 10),
            seed: 0,
        }
    }

    fn validate(&self, p: &APProfile) -> Result<()> {
        if !(self.rho_bar > p.r_cone() && self.rho_bar1 >= self.rho_bar) {
            return invalid("need r_cone < rho_bar <= rho_bar1");
        }
        if self.i_range.is_empty() || self.i_range.clone().count() < 2 {
            return invalid("construction needs at least two ball radii");
        }
        let smallest = 2f64.powi(*self.i_range.start());
        if self.window_end > smallest || self.rho_bar1 > smallest {
            return invalid("normalisation radius and convergence window must lie inside the smallest ball");
        }
        if !(self.tolerance > 0.0) {
            return invalid("construction tolerance must be positive");
        }
        let largest = 2f64.powi(*self.i_range.end());
        if self.far_radius > largest || self.fit_ladder.iter().any(|&r| r > largest || r < p.r_cone()) {
            return invalid("far radius and fit ladder must lie inside the largest ball");
        }
        if self.fit_ladder.len() < 3 {
            return invalid("fit ladder needs at least three radii");
        }
        Ok(())
    }
}

/// Factorised solvers for the balls 2^i of a construction.
pub struct SolverCache {
    solvers: Vec<(i32, DirichletSolver)>,
}

impl SolverCache {
    /// Factorise `op` on every ball 2^i, i ∈ `i_range` (in parallel).
    pub fn new(op: &OperatorSpec, i_range: RangeInclusive<i32>) -> Result<SolverCache> {
        let solvers: Vec<Result<(i32, DirichletSolver)>> =
            i_range.collect::<Vec<_>>().into_par_iter().map(|i| Ok((i, DirichletSolver::new(op, 2f64.powi(i))?))).collect();
        Ok(SolverCache { solvers: solvers.into_iter().collect::<Result<_>>()? })
    }

    /// Solver of ball 2^i.
    pub fn get(&self, i: i32) -> Result<&DirichletSolver> {
        self.solvers
            .iter()
            .find(|(j, _)| *j == i)
            .map(|(_, s)| s)
            .ok_or_else(|| Error::InvalidArgument(format!("no factorised solver for ball 2^{i}")))
    }
}

/// Constructed fields with their levels and diagnostics.
#[derive(Debug, Clone)]
pub struct HarmonicBasis {
    /// Constructed fields.
    pub fields: Vec<ModeField>,
    /// Level index per field.
    pub levels: Vec<usize>,
    /// λ_ℓ per field.
    pub target_levels: Vec<f64>,
    /// Orthogonality angles at the far radius.
    pub gram_far: Vec<Vec<f64>>,
    /// Far radius of `gram_far`.
    pub far_radius: f64,
    /// Decay fits of the angle along the fit ladder, per pair (i < j).
    pub fits: Vec<(usize, usize, DecayFit)>,
    /// Value at the vertex p_0 per field.
    pub base_point_values: Vec<f64>,
    /// Consecutive-iterate sup differences of each construction.
    pub cauchy: Vec<Vec<f64>>,
    /// Asymptotic projection coefficients removed from each field.
    pub limits: Vec<Vec<f64>>,
}

impl HarmonicBasis {
    /// Empty basis.
    pub fn new() -> HarmonicBasis {
        HarmonicBasis {
            fields: Vec::new(),
            levels: Vec::new(),
            target_levels: Vec::new(),
            gram_far: Vec::new(),
            far_radius: 0.0,
            fits: Vec::new(),
            base_point_values: Vec::new(),
            cauchy: Vec::new(),
            limits: Vec::new(),
        }
    }

    /// Number of fields.
    pub fn len(&self) -> usize {
        self.fields.len()
    }
    /// True without fields.
    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }
    /// Number of fields at a level.
    pub fn count_at(&self, level: usize) -> usize {
        self.levels.iter().filter(|l| **l == level).count()
    }

    fn push(&mut self, field: ModeField, level: usize, lambda: f64, cauchy: Vec<f64>, limits: Vec<f64>) {
        self.base_point_values.push(field.vertex_value());
        self.fields.push(field);
        self.levels.push(level);
        self.target_levels.push(lambda);
        self.cauchy.push(cauchy);
        self.limits.push(limits);
    }

    /// Recompute the far Gram matrix and the pairwise decay fits.
    pub fn refresh_diagnostics(&mut self, far_radius: f64, ladder: &[f64]) -> Result<()> {
        let n = self.fields.len();
        let mut gram = vec![vec![0.0; n]; n];
        let mut fits = Vec::new();
        for a in 0..n {
            gram[a][a] = 1.0;
            for b in (a + 1)..n {
                let g = orthogonality_angle(&self.fields[a], &self.fields[b], far_radius)?;
                gram[a][b] = g;
                gram[b][a] = g;
                let angles: Vec<f64> = ladder
                    .iter()
                    .map(|&r| orthogonality_angle(&self.fields[a], &self.fields[b], r))
                    .collect::<Result<_>>()?;
                fits.push((a, b, fit_decay(ladder, &angles, ANGLE_FLOOR)?));
            }
        }
        self.gram_far = gram;
        self.fits = fits;
        self.far_radius = far_radius;
        Ok(())
    }

    /// Largest off-diagonal far angle.
    pub fn max_far_angle(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (a, row) in self.gram_far.iter().enumerate() {
            for (b, g) in row.iter().enumerate() {
                if a != b {
                    worst = worst.max(*g);
                }
            }
        }
        worst
    }

    /// CSV summary: one row per field, then one row per pair.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("field,level,lambda,base_point_value,last_cauchy_difference\n");
        for i in 0..self.fields.len() {
            let last = self.cauchy[i].last().map_or(String::new(), |v| format!("{v:.6e}"));
            let _ = writeln!(out, "{i},{},{:.17e},{:.6e},{last}", self.levels[i], self.target_levels[i], self.base_point_values[i]);
        }
        out.push_str("pair_a,pair_b,far_angle,fit\n");
        for (a, b, f) in &self.fits {
            let _ = writeln!(out, "{a},{b},{:.6e},{}", self.gram_far[*a][*b], f.describe());
        }
        out
    }
}

impl Default for HarmonicBasis {
    fn default() -> Self {
        HarmonicBasis::new()
    }
}

/// The constant function 1 on `grid`.
pub fn constant_field(op: &OperatorSpec, grid: Arc<Vec<f64>>) -> Result<ModeField> {
    let k = op.mode_cut();
    let mut values = vec![0.0; grid.len() * k];
    let root = op.spectrum().volume().sqrt();
    for j in 0..grid.len() {
        values[j * k] = root;
    }
    let derivs = vec![0.0; values.len()];
    ModeField::new(op.spectrum().clone(), op.profile().clone(), grid, values, derivs, Provenance::ConstructedLimit)
}

/// Unit vector in the eigenspace of `level` minimising the projections of the
/// given (prior) fields' restrictions to r = ρ: the eigenvector of the
/// smallest eigenvalue of Σ p_v p_vᵀ, where p_v are the normalised level
/// coefficients. Degenerate minimisers are resolved by projecting `tiebreak`
/// onto the minimising eigenspace. The sign is fixed by ⟨Θ, tiebreak⟩ ≥ 0.
fn select_boundary(prior: &[&ModeField], level: std::ops::Range<usize>, rho: f64, tiebreak: &DVector<f64>) -> Result<DVector<f64>> {
    let m = level.len();
    let mut gram = DMatrix::<f64>::zeros(m, m);
    for v in prior {
        let s = v.sample(rho)?;
        let norm = s.u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::DegenerateLevel { rho });
        }
        let p = DVector::from_iterator(m, s.u[level.clone()].iter().map(|x| x / norm));
        gram += &p * p.transpose();
    }
    let eig = SymmetricEigen::new(gram);
    let min = eig.eigenvalues.min();
    let mut theta = DVector::<f64>::zeros(m);
    for (idx, &ev) in eig.eigenvalues.iter().enumerate() {
        if ev <= min + 1e-8 {
            let e = eig.eigenvectors.column(idx);
            theta += e * e.dot(tiebreak);
        }
    }
    let norm = theta.norm();
    if !(norm > 1e-8) {
        // The tie-break vector is orthogonal to the minimising space; take its first vector.
        let idx = eig.eigenvalues.imin();
        theta = eig.eigenvectors.column(idx).into_owned();
    } else {
        theta /= norm;
    }
    if theta.dot(tiebreak) < 0.0 {
        theta = -theta;
    }
    Ok(theta)
}

/// Largest |u_k − v_k| over the common nodes r ≤ `hi` of two fields whose
/// grids share a prefix.
fn window_difference(a: &ModeField, b: &ModeField, hi: f64) -> Result<f64> {
    let (short, long) = if a.grid().len() <= b.grid().len() { (a, b) } else { (b, a) };
    let long = long.restricted_to(short.grid())?;
    short.sup_difference(&long, 0.0, hi)
}

/// Project `w` off `fields` in ⟨·,·⟩_ρ (least squares through the Gram matrix).
fn project_off(w: &ModeField, fields: &[ModeField], rho: f64) -> Result<ModeField> {
    if fields.is_empty() {
        return Ok(w.clone());
    }
    let n = fields.len();
    let gram = DMatrix::from_fn(n, n, |a, b| level_inner(&fields[a], &fields[b], rho).unwrap_or(f64::NAN));
    let rhs = DVector::from_fn(n, |a, _| level_inner(w, &fields[a], rho).unwrap_or(f64::NAN));
    if gram.iter().chain(rhs.iter()).any(|v| !v.is_finite()) {
        return invalid("orthogonalisation radius outside a prior field");
    }
    let coef = gram
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::ConstructionFailure(format!("prior fields are linearly dependent at radius {rho}")))?;
    let mut refs: Vec<&ModeField> = vec![w];
    let mut weights = vec![1.0];
    for (f, c) in fields.iter().zip(coef.iter()) {
        refs.push(f);
        weights.push(-c);
    }
    crate::frequency::add(&refs, &weights)
}

/// Construct a drift-harmonic function with growth rate λ_ℓ (see the module docs).
pub fn construct_harmonic(op: &OperatorSpec, level: usize, prior: &HarmonicBasis, cfg: &ConstructionConfig) -> Result<ModeField> {
    let cache = SolverCache::new(op, cfg.i_range.clone())?;
    construct_with(op, &cache, level, prior, cfg).map(|(f, _)| f)
}

/// As [`construct_harmonic`] with pre-factorised solvers; also returns the
/// consecutive-iterate differences.
pub fn construct_with(
    op: &OperatorSpec,
    cache: &SolverCache,
    level: usize,
    prior: &HarmonicBasis,
    cfg: &ConstructionConfig,
) -> Result<(ModeField, Vec<f64>)> {
    let p = op.profile();
    cfg.validate(p)?;
    let spec = op.spectrum();
    if level >= spec.level_count() {
        return invalid(format!("level {level} is not retained"));
    }
    let last_i = *cfg.i_range.end();
    if level == 0 {
        return Ok((constant_field(op, cache.get(last_i)?.grid().clone())?, Vec::new()));
    }
    let range = spec.level_range(level);
    let same: Vec<&ModeField> = prior.fields.iter().zip(&prior.levels).filter(|(_, l)| **l == level).map(|(f, _)| f).collect();
    if same.len() >= range.len() {
        return invalid(format!("level {level} already has all {} members", range.len()));
    }
    // One tie-break vector per (level, member), shared by all ball radii.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(((level as u64) << 32) | same.len() as u64);
    let tiebreak = DVector::from_fn(range.len(), |_, _| StandardNormal.sample(&mut rng));
    let mut previous: Option<ModeField> = None;
    let mut diffs = Vec::new();
    for i in cfg.i_range.clone() {
        let rho_i = 2f64.powi(i);
        let solver = cache.get(i)?;
        let theta = select_boundary(&same, range.clone(), rho_i, &tiebreak)?;
        let data = BoundaryData::level(spec, rho_i, level, theta.as_slice())?;
        let u = solver.solve(&data)?;
        let w = u.minus_constant(u.vertex_value());
        let earlier: Vec<ModeField> = prior
            .fields
            .iter()
            .zip(&prior.levels)
            .filter(|(_, l)| **l > 0)
            .map(|(f, _)| f.restricted_to(solver.grid()))
            .collect::<Result<_>>()?;
        let w = project_off(&w, &earlier, cfg.rho_bar)?;
        let norm = level_inner(&w, &w, cfg.rho_bar1)?.sqrt();
        if !(norm > 0.0) {
            return Err(Error::ConstructionFailure(format!("iterate on ball 2^{i} vanishes at the normalisation radius")));
        }
        let w = w.scaled(1.0 / norm);
        if let Some(prev) = &previous {
            diffs.push(window_difference(prev, &w, cfg.window_end)?);
        }
        previous = Some(w);
    }
    let last = diffs.last().cloned().unwrap_or(f64::INFINITY);
    if !(last < cfg.tolerance) {
        let trace: Vec<String> = diffs.iter().map(|d| format!("{d:.3e}")).collect();
        return Err(Error::ConstructionFailure(format!(
            "level {level}: consecutive iterates differ by [{}] on [r_cone, {}], threshold {:e}",
            trace.join(", "),
            cfg.window_end,
            cfg.tolerance
        )));
    }
    let field = previous.expect("at least two iterates").with_provenance(Provenance::ConstructedLimit);
    Ok((field, diffs))
}

/// Subtract from `w` its asymptotic projection onto `u`: L is the far-ladder
/// limit of ⟨w,u⟩_ρ/‖u‖_ρ², accepted when the consecutive differences along
/// the ladder decay at a fitted positive rate (or vanish to round-off).
pub fn asymptotic_orthogonalize(w: &ModeField, u: &ModeField, p: &APProfile, ladder: &[f64]) -> Result<(ModeField, f64)> {
    if ladder.len() < 4 || ladder.iter().any(|&r| r < p.r_cone()) {
        return invalid("asymptotic orthogonalisation needs at least four ladder radii beyond r_cone");
    }
    let u_on = u.restricted_to(w.grid())?;
    let q: Vec<f64> = ladder
        .iter()
        .map(|&r| {
            let uu = level_inner(&u_on, &u_on, r)?;
            if !(uu > 0.0) {
                return Err(Error::DegenerateLevel { rho: r });
            }
            Ok(level_inner(w, &u_on, r)? / uu)
        })
        .collect::<Result<_>>()?;
    let l = *q.last().expect("nonempty");
    let steps: Vec<f64> = q.windows(2).map(|s| s[1] - s[0]).collect();
    let fit = fit_decay(&ladder[1..], &steps, ANGLE_FLOOR * l.abs().max(1.0))?;
    if !fit.decays() {
        return Err(Error::NoLimit(format!(
            "inner-product ratio does not settle along the ladder ({}); last value {l:.6e}",
            fit.describe()
        )));
    }
    Ok((crate::frequency::add(&[w, &u_on], &[1.0, -l])?.with_provenance(w.provenance()), l))
}

/// Build fields for every level with λ_ℓ ≤ d: constants, then per level the
/// members one by one, each asymptotically orthogonalised against the earlier
/// members of its level and renormalised.
pub fn build_basis(op: &OperatorSpec, d: f64, cfg: &ConstructionConfig) -> Result<HarmonicBasis> {
    let spec = op.spectrum();
    let top = *spec.eigenvalues().last().expect("spectrum is nonempty");
    if d >= top {
        return Err(Error::OutOfRange(format!("d = {d} reaches the spectrum truncation at {top}")));
    }
    let p = op.profile();
    cfg.validate(p)?;
    let cache = SolverCache::new(op, cfg.i_range.clone())?;
    let mut basis = HarmonicBasis::new();
    for level in 0..spec.level_count() {
        let lambda = spec.eigenvalues()[level];
        if lambda > d + 1e-9 {
            break;
        }
        for _ in 0..spec.multiplicities()[level] {
            let (mut field, diffs) = construct_with(op, &cache, level, &basis, cfg)?;
            let mut limits = Vec::new();
            if level > 0 {
                let same: Vec<ModeField> =
                    basis.fields.iter().zip(&basis.levels).filter(|(_, l)| **l == level).map(|(f, _)| f.clone()).collect();
                for u in &same {
                    let (next, l) = asymptotic_orthogonalize(&field, u, p, &cfg.fit_ladder)?;
                    field = next;
                    limits.push(l);
                }
                let norm = level_inner(&field, &field, cfg.rho_bar1)?.sqrt();
                field = field.scaled(1.0 / norm);
            }
            basis.push(field, level, lambda, diffs, limits);
        }
    }
    basis.refresh_diagnostics(cfg.far_radius, &cfg.fit_ladder)?;
    Ok(basis)
}
