//! Mode fields and the frequency functionals D, I, U, G, Q.
//!
//! A [`ModeField`] stores u(r, θ) = Σ_k u_k(r) Θ_k(θ) by its radial
//! coefficient curves and their derivatives on a shared radial grid. Because
//! the Θ_k are orthonormal in L²(g_X) and the level set {r = ρ} carries the
//! metric ψ(ρ)² g_X, every level-set integral reduces by Parseval to a finite
//! sum; with the area weight w(ρ) = ρ^{(1−n)/2} ψ(ρ)^{n−1}:
//!
//! * I(ρ) = w Σ u_k², D(ρ) = ρ w Σ u_k u_k′, U = D/I,
//! * G(ρ) = ρ Σ u_k′² / Σ u_k², Q(ρ) = (ρ/ψ²) Σ λ_k u_k² / Σ u_k².
//!
//! On the outer plateau w ≡ 1 and ρ/ψ² ≡ 1.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::cross_section::Spectrum;
use crate::error::{invalid, Error, Result};
use crate::fit::{fit_decay, geometric_ladder, DecayFit};
use crate::geometry::APProfile;
use crate::radial::{launch_data, shoot, vertex_exponent, RadialSolution};

/// How a field was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// A radial solution times one eigenfunction, or a sum of such.
    Separable,
    /// Solution of a Dirichlet problem on a ball.
    DirichletSolve,
    /// Limit of normalised Dirichlet solutions on exhausting balls.
    ConstructedLimit,
    /// Linear combination of other fields.
    Combination,
}

impl Provenance {
    /// Lower-case tag used in reports.
    pub fn tag(&self) -> &'static str {
        match self {
            Provenance::Separable => "separable",
            Provenance::DirichletSolve => "dirichlet-solve",
            Provenance::ConstructedLimit => "constructed-limit",
            Provenance::Combination => "combination",
        }
    }
}

/// A function on the manifold stored by its cross-section mode coefficients.
#[derive(Debug, Clone)]
pub struct ModeField {
    spectrum: Arc<Spectrum>,
    profile: Arc<APProfile>,
    grid: Arc<Vec<f64>>,
    values: Vec<f64>,
    derivs: Vec<f64>,
    provenance: Provenance,
}

/// Coefficients of a field and of its radial derivative at one radius.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSample {
    /// u_k(ρ).
    pub u: Vec<f64>,
    /// u_k′(ρ).
    pub du: Vec<f64>,
}

impl ModeField {
    /// Assemble a field from node-major coefficient arrays (`values[j*K + k]`).
    pub fn new(
        spectrum: Arc<Spectrum>,
        profile: Arc<APProfile>,
        grid: Arc<Vec<f64>>,
        values: Vec<f64>,
        derivs: Vec<f64>,
        provenance: Provenance,
    ) -> Result<ModeField> {
        let k = spectrum.mode_count();
        if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) || !(grid[0] > 0.0) {
            return invalid("field grid must be positive, strictly increasing, with at least two nodes");
        }
        if values.len() != grid.len() * k || derivs.len() != grid.len() * k {
            return invalid(format!(
                "coefficient arrays must hold {} x {} entries, got {} and {}",
                grid.len(),
                k,
                values.len(),
                derivs.len()
            ));
        }
        if values.iter().chain(derivs.iter()).any(|v| !v.is_finite()) {
            return invalid("field coefficients must be finite");
        }
        Ok(ModeField { spectrum, profile, grid, values, derivs, provenance })
    }

    /// Spectrum providing the mode indexing.
    pub fn spectrum(&self) -> &Arc<Spectrum> {
        &self.spectrum
    }
    /// Profile of the underlying manifold.
    pub fn profile(&self) -> &Arc<APProfile> {
        &self.profile
    }
    /// Radial grid.
    pub fn grid(&self) -> &Arc<Vec<f64>> {
        &self.grid
    }
    /// Provenance tag.
    pub fn provenance(&self) -> Provenance {
        self.provenance
    }
    /// Override the provenance tag.
    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }
    /// Number of modes K.
    pub fn mode_count(&self) -> usize {
        self.spectrum.mode_count()
    }
    /// Largest radius on the grid.
    pub fn outer_radius(&self) -> f64 {
        *self.grid.last().expect("grid is nonempty")
    }
    /// Coefficients u_k at grid node j.
    pub fn node_values(&self, j: usize) -> &[f64] {
        let k = self.mode_count();
        &self.values[j * k..(j + 1) * k]
    }
    /// Derivatives u_k′ at grid node j.
    pub fn node_derivs(&self, j: usize) -> &[f64] {
        let k = self.mode_count();
        &self.derivs[j * k..(j + 1) * k]
    }
    /// Radial curve u_k over the grid.
    pub fn curve(&self, mode: usize) -> Vec<f64> {
        let k = self.mode_count();
        (0..self.grid.len()).map(|j| self.values[j * k + mode]).collect()
    }

    fn check_compatible(&self, other: &ModeField) -> Result<()> {
        if !Arc::ptr_eq(&self.grid, &other.grid) && self.grid != other.grid {
            return invalid("fields live on different radial grids");
        }
        if !Arc::ptr_eq(&self.spectrum, &other.spectrum) && self.spectrum != other.spectrum {
            return invalid("fields use different spectra");
        }
        Ok(())
    }

    /// Coefficients and derivatives at radius ρ.
    ///
    /// Grid nodes are returned exactly; between nodes the cubic Hermite
    /// interpolant of (u_k, u_k′) is used. Below the first node, when that node
    /// lies on the cone plateau, each mode is continued by its exact cone
    /// behaviour (ρ/r_0)^{α_k}.
    pub fn sample(&self, rho: f64) -> Result<LevelSample> {
        let g = &self.grid;
        let k = self.mode_count();
        let last = g.len() - 1;
        if !(rho > 0.0) || rho > g[last] * (1.0 + 1e-12) {
            return Err(Error::OutOfRange(format!("radius {rho} outside field grid [.., {}]", g[last])));
        }
        if rho < g[0] {
            if g[0] > self.profile.r_cone() * (1.0 + 1e-12) {
                return Err(Error::OutOfRange(format!("radius {rho} below field grid start {}", g[0])));
            }
            let levels = self.spectrum.mode_levels();
            let eig = self.spectrum.eigenvalues();
            let base = self.node_values(0);
            let mut u = vec![0.0; k];
            let mut du = vec![0.0; k];
            for m in 0..k {
                let a = vertex_exponent(&self.profile, eig[levels[m]]);
                let f = (rho / g[0]).powf(a);
                u[m] = base[m] * f;
                du[m] = if a == 0.0 { 0.0 } else { base[m] * a * f / rho };
            }
            return Ok(LevelSample { u, du });
        }
        let j = match g.binary_search_by(|x| x.total_cmp(&rho)) {
            Ok(j) => {
                return Ok(LevelSample { u: self.node_values(j).to_vec(), du: self.node_derivs(j).to_vec() });
            }
            Err(j) => j.min(last),
        };
        if rho >= g[last] {
            return Ok(LevelSample { u: self.node_values(last).to_vec(), du: self.node_derivs(last).to_vec() });
        }
        let (x0, x1) = (g[j - 1], g[j]);
        let h = x1 - x0;
        let s = (rho - x0) / h;
        let (s2, s3) = (s * s, s * s * s);
        let (h00, h10, h01, h11) = (2.0 * s3 - 3.0 * s2 + 1.0, s3 - 2.0 * s2 + s, -2.0 * s3 + 3.0 * s2, s3 - s2);
        let (d00, d10, d01, d11) = (6.0 * s2 - 6.0 * s, 3.0 * s2 - 4.0 * s + 1.0, -6.0 * s2 + 6.0 * s, 3.0 * s2 - 2.0 * s);
        let (y0, y1) = (self.node_values(j - 1), self.node_values(j));
        let (m0, m1) = (self.node_derivs(j - 1), self.node_derivs(j));
        let u = (0..k).map(|m| h00 * y0[m] + h10 * h * m0[m] + h01 * y1[m] + h11 * h * m1[m]).collect();
        let du = (0..k).map(|m| (d00 * y0[m] + d10 * h * m0[m] + d01 * y1[m] + d11 * h * m1[m]) / h).collect();
        Ok(LevelSample { u, du })
    }

    /// Multiply by a scalar.
    pub fn scaled(&self, c: f64) -> ModeField {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out.derivs.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// Copy keeping only the modes for which `keep(mode)` holds.
    pub fn filtered(&self, keep: impl Fn(usize) -> bool) -> ModeField {
        let k = self.mode_count();
        let mut out = self.clone();
        for j in 0..self.grid.len() {
            for m in 0..k {
                if !keep(m) {
                    out.values[j * k + m] = 0.0;
                    out.derivs[j * k + m] = 0.0;
                }
            }
        }
        out
    }

    /// Subtract a constant function c (mode-0 coefficient c·√vol).
    pub fn minus_constant(&self, c: f64) -> ModeField {
        let k = self.mode_count();
        let coef = c * self.spectrum.volume().sqrt();
        let mut out = self.clone();
        for j in 0..self.grid.len() {
            out.values[j * k] -= coef;
        }
        out
    }

    /// Value of the constant component at the vertex (mode 0 continued to r = 0),
    /// expressed as a function value (coefficient / √vol).
    pub fn vertex_value(&self) -> f64 {
        self.node_values(0)[0] / self.spectrum.volume().sqrt()
    }

    /// The same field on another grid inside this one's range: nodes that
    /// coincide (to 1e−12 relative) are copied, others are interpolated.
    pub fn restricted_to(&self, grid: &Arc<Vec<f64>>) -> Result<ModeField> {
        if Arc::ptr_eq(grid, &self.grid) {
            return Ok(self.clone());
        }
        let k = self.mode_count();
        let mut values = Vec::with_capacity(grid.len() * k);
        let mut derivs = Vec::with_capacity(grid.len() * k);
        let mut cursor = 0;
        for &r in grid.iter() {
            while cursor + 1 < self.grid.len() && self.grid[cursor] < r * (1.0 - 1e-12) {
                cursor += 1;
            }
            if (self.grid[cursor] - r).abs() <= 1e-12 * r {
                values.extend_from_slice(self.node_values(cursor));
                derivs.extend_from_slice(self.node_derivs(cursor));
            } else {
                let s = self.sample(r)?;
                values.extend(s.u);
                derivs.extend(s.du);
            }
        }
        ModeField::new(self.spectrum.clone(), self.profile.clone(), grid.clone(), values, derivs, self.provenance)
    }

    /// Largest |u_k − v_k| over grid nodes in [lo, hi] and all modes.
    pub fn sup_difference(&self, other: &ModeField, lo: f64, hi: f64) -> Result<f64> {
        self.check_compatible(other)?;
        let mut worst: f64 = 0.0;
        for j in 0..self.grid.len() {
            if self.grid[j] < lo || self.grid[j] > hi {
                continue;
            }
            for (a, b) in self.node_values(j).iter().zip(other.node_values(j)) {
                worst = worst.max((a - b).abs());
            }
        }
        Ok(worst)
    }
}

fn check_mode_lambda(spectrum: &Spectrum, mode: usize, lambda: f64) -> Result<()> {
    let id = spectrum.mode(mode)?;
    let l = spectrum.eigenvalues()[id.level];
    if (l - lambda).abs() > 1e-12 * (1.0 + lambda.abs()) {
        return invalid(format!("mode {mode} has eigenvalue {l}, radial solution has {lambda}"));
    }
    Ok(())
}

/// Single-mode field R_λ(r) Θ_mode on the radial solution's grid.
pub fn separable_field(sol: &RadialSolution, spectrum: Arc<Spectrum>, mode: usize) -> Result<ModeField> {
    check_mode_lambda(&spectrum, mode, sol.lambda)?;
    let k = spectrum.mode_count();
    let n = sol.grid.len();
    let mut values = vec![0.0; n * k];
    let mut derivs = vec![0.0; n * k];
    for j in 0..n {
        values[j * k + mode] = sol.value(j);
        derivs[j * k + mode] = sol.derivative(j);
    }
    ModeField::new(
        spectrum,
        Arc::new(sol.profile().clone()),
        Arc::new(sol.grid.clone()),
        values,
        derivs,
        Provenance::Separable,
    )
}

/// Separable mixture Σ_k w_k R_{λ_k}(r) Θ_k shot directly onto `grid`
/// (each R normalised by its vertex launch data r^α on the cone).
pub fn separable_mixture(
    profile: Arc<APProfile>,
    spectrum: Arc<Spectrum>,
    weights: &[f64],
    grid: Arc<Vec<f64>>,
) -> Result<ModeField> {
    let k = spectrum.mode_count();
    if weights.len() != k {
        return invalid(format!("need {k} mode weights, got {}", weights.len()));
    }
    let n = grid.len();
    let mut values = vec![0.0; n * k];
    let mut derivs = vec![0.0; n * k];
    for level in 0..spectrum.level_count() {
        let range = spectrum.level_range(level);
        if weights[range.clone()].iter().all(|w| *w == 0.0) {
            continue;
        }
        let lambda = spectrum.eigenvalues()[level];
        let (r, rp) = if lambda == 0.0 {
            (vec![1.0; n], vec![0.0; n])
        } else {
            let shot = shoot(&profile, lambda, &grid, launch_data(&profile, lambda))?;
            if shot.exp2.iter().any(|e| *e != 0) {
                return invalid("separable mixture overflows f64 on this grid");
            }
            (shot.r, shot.rp)
        };
        for m in range {
            for j in 0..n {
                values[j * k + m] = weights[m] * r[j];
                derivs[j * k + m] = weights[m] * rp[j];
            }
        }
    }
    ModeField::new(spectrum, profile, grid, values, derivs, Provenance::Separable)
}

/// Coefficient-wise weighted sum Σ w_i f_i of fields on a shared grid.
pub fn add(fields: &[&ModeField], weights: &[f64]) -> Result<ModeField> {
    if fields.is_empty() || fields.len() != weights.len() {
        return invalid("add needs equally many (nonzero count) fields and weights");
    }
    for f in &fields[1..] {
        fields[0].check_compatible(f)?;
    }
    let mut out = fields[0].scaled(weights[0]);
    for (f, w) in fields[1..].iter().zip(&weights[1..]) {
        out.values.iter_mut().zip(&f.values).for_each(|(a, b)| *a += w * b);
        out.derivs.iter_mut().zip(&f.derivs).for_each(|(a, b)| *a += w * b);
    }
    if fields.len() > 1 {
        out.provenance = Provenance::Combination;
    }
    Ok(out)
}

/// Frequency functionals sampled along a ladder of radii.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTrace {
    /// Ladder radii.
    pub rho: Vec<f64>,
    /// D(ρ).
    pub d: Vec<f64>,
    /// I(ρ).
    pub i: Vec<f64>,
    /// U(ρ) = D/I.
    pub u: Vec<f64>,
    /// G(ρ).
    pub g: Vec<f64>,
    /// Q(ρ).
    pub q: Vec<f64>,
    /// G − U²/ρ, evaluated through Lagrange's identity (never negative).
    pub cs_gap: Vec<f64>,
    /// Ambient dimension.
    pub n: usize,
    profile: APProfile,
}

/// Per-radius functionals at one level set.
fn level_functionals(field: &ModeField, p: &APProfile, rho: f64) -> Result<[f64; 6]> {
    let s = field.sample(rho)?;
    let lam = field.spectrum.mode_eigenvalues();
    let sum_uu: f64 = s.u.iter().map(|x| x * x).sum();
    if !(sum_uu > 0.0) || !sum_uu.is_finite() {
        return Err(Error::DegenerateLevel { rho });
    }
    let sum_udu: f64 = s.u.iter().zip(&s.du).map(|(a, b)| a * b).sum();
    let sum_dudu: f64 = s.du.iter().map(|x| x * x).sum();
    let sum_lam: f64 = s.u.iter().zip(&lam).map(|(a, l)| l * a * a).sum();
    let w = p.area_weight(rho);
    let i = w * sum_uu;
    let d = rho * w * sum_udu;
    let u = rho * sum_udu / sum_uu;
    let g = rho * sum_dudu / sum_uu;
    let q = rho * p.inv_psi_sq(rho) * sum_lam / sum_uu;
    let k = s.u.len();
    let mut lagrange = 0.0;
    for a in 0..k {
        for b in (a + 1)..k {
            let c = s.u[a] * s.du[b] - s.u[b] * s.du[a];
            lagrange += c * c;
        }
    }
    let gap = rho * lagrange / (sum_uu * sum_uu);
    Ok([d, i, u, g, q, gap])
}

/// Evaluate D, I, U, G, Q along a ladder.
pub fn trace(u: &ModeField, p: &APProfile, ladder: &[f64]) -> Result<FrequencyTrace> {
    if ladder.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid("trace ladder must be strictly increasing");
    }
    let mut t = FrequencyTrace {
        rho: ladder.to_vec(),
        d: Vec::new(),
        i: Vec::new(),
        u: Vec::new(),
        g: Vec::new(),
        q: Vec::new(),
        cs_gap: Vec::new(),
        n: p.n(),
        profile: p.clone(),
    };
    for &rho in ladder {
        let [d, i, uu, g, q, gap] = level_functionals(u, p, rho)?;
        t.d.push(d);
        t.i.push(i);
        t.u.push(uu);
        t.g.push(g);
        t.q.push(q);
        t.cs_gap.push(gap);
    }
    Ok(t)
}

/// Largest admissible ratio between consecutive ladder radii for differencing.
pub const MAX_LADDER_RATIO: f64 = 1.05;

/// Residual values at the interior ladder points.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderResiduals {
    /// Interior radii.
    pub rho: Vec<f64>,
    /// Residuals.
    pub values: Vec<f64>,
}

impl LadderResiduals {
    /// Largest absolute residual.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

fn check_spacing(rho: &[f64]) -> Result<()> {
    if rho.len() < 3 {
        return invalid("differencing needs at least three ladder points");
    }
    if let Some(w) = rho.windows(2).find(|w| w[1] / w[0] > MAX_LADDER_RATIO * (1.0 + 1e-12)) {
        return invalid(format!(
            "ladder too coarse for centred differences: ratio {} between {} and {}",
            w[1] / w[0],
            w[0],
            w[1]
        ));
    }
    Ok(())
}

/// U′ (centred difference) minus the right-hand side of the frequency ODE
/// U′ = ((3−n)/(2ρ) + f′)U − 2U²/ρ + G + Q − (n−1)η/(2ρ)·U.
///
/// The η term vanishes identically on the outer plateau.
pub fn frequency_ode_residual(t: &FrequencyTrace, p: &APProfile) -> Result<LadderResiduals> {
    check_spacing(&t.rho)?;
    let n = p.n() as f64;
    let mut out = LadderResiduals { rho: Vec::new(), values: Vec::new() };
    for j in 1..t.rho.len() - 1 {
        let rho = t.rho[j];
        let du = (t.u[j + 1] - t.u[j - 1]) / (t.rho[j + 1] - t.rho[j - 1]);
        let u = t.u[j];
        let rhs = ((3.0 - n) / (2.0 * rho) + p.f_prime(rho)) * u - 2.0 * u * u / rho + t.g[j] + t.q[j]
            - (n - 1.0) * p.eta(rho) / (2.0 * rho) * u;
        out.rho.push(rho);
        out.values.push(du - rhs);
    }
    Ok(out)
}

/// (ln I)′ (centred difference) minus 2U/ρ + (n−1)η/(2ρ).
pub fn i_log_derivative_check(t: &FrequencyTrace) -> Result<LadderResiduals> {
    check_spacing(&t.rho)?;
    let n = t.n as f64;
    let mut out = LadderResiduals { rho: Vec::new(), values: Vec::new() };
    for j in 1..t.rho.len() - 1 {
        let rho = t.rho[j];
        let dl = (t.i[j + 1].ln() - t.i[j - 1].ln()) / (t.rho[j + 1] - t.rho[j - 1]);
        let expected = 2.0 * t.u[j] / rho + (n - 1.0) * t.profile.eta(rho) / (2.0 * rho);
        out.rho.push(rho);
        out.values.push(dl - expected);
    }
    Ok(out)
}

impl FrequencyTrace {
    /// Profile the trace was computed on.
    pub fn profile(&self) -> &APProfile {
        &self.profile
    }

    /// CSV with columns rho, D, I, U, G, Q, cs_gap, ode_residual, ilog_residual.
    /// Residual columns are empty at the ladder ends or when the ladder is too coarse.
    pub fn to_csv(&self) -> String {
        let ode = frequency_ode_residual(self, &self.profile).ok();
        let ilog = i_log_derivative_check(self).ok();
        let mut out = String::from("rho,D,I,U,G,Q,cs_gap,ode_residual,ilog_residual\n");
        for j in 0..self.rho.len() {
            let pick = |r: &Option<LadderResiduals>| match r {
                Some(r) if j >= 1 && j + 1 < self.rho.len() => format!("{:.17e}", r.values[j - 1]),
                _ => String::new(),
            };
            let _ = writeln!(
                out,
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{},{}",
                self.rho[j],
                self.d[j],
                self.i[j],
                self.u[j],
                self.g[j],
                self.q[j],
                self.cs_gap[j],
                pick(&ode),
                pick(&ilog)
            );
        }
        out
    }
}

/// Normalised level-set inner product ⟨u, v⟩_ρ = w(ρ) Σ_k u_k(ρ) v_k(ρ).
pub fn level_inner(u: &ModeField, v: &ModeField, rho: f64) -> Result<f64> {
    u.check_compatible(v)?;
    let a = u.sample(rho)?;
    let b = v.sample(rho)?;
    Ok(u.profile.area_weight(rho) * a.u.iter().zip(&b.u).map(|(x, y)| x * y).sum::<f64>())
}

/// |⟨u, v⟩_ρ| / (‖u‖_ρ ‖v‖_ρ), in [0, 1].
pub fn orthogonality_angle(u: &ModeField, v: &ModeField, rho: f64) -> Result<f64> {
    Ok(signed_angle(u, v, rho)?.abs().min(1.0))
}

/// ⟨u, v⟩_ρ / (‖u‖_ρ ‖v‖_ρ) with its sign.
pub fn signed_angle(u: &ModeField, v: &ModeField, rho: f64) -> Result<f64> {
    let uv = level_inner(u, v, rho)?;
    let uu = level_inner(u, u, rho)?;
    let vv = level_inner(v, v, rho)?;
    if !(uu > 0.0) || !(vv > 0.0) {
        return Err(Error::DegenerateLevel { rho });
    }
    Ok(uv / (uu.sqrt() * vv.sqrt()))
}

/// Wronskian-type quantity w(ρ) Σ_k (u_k v_k′ − v_k u_k′)(ρ).
pub fn level_wronskian(u: &ModeField, v: &ModeField, rho: f64) -> Result<f64> {
    u.check_compatible(v)?;
    let a = u.sample(rho)?;
    let b = v.sample(rho)?;
    let s: f64 = (0..a.u.len()).map(|k| a.u[k] * b.du[k] - b.u[k] * a.du[k]).sum();
    Ok(u.profile.area_weight(rho) * s)
}

/// Sub-ladder used for integrals over [ρ1, ρ2] (ratio ≤ 1.005 between nodes).
fn integration_ladder(rho1: f64, rho2: f64) -> Vec<f64> {
    let steps = (((rho2 / rho1).ln() / 1.005f64.ln()).ceil() as usize).max(16);
    let ratio = (rho2 / rho1).powf(1.0 / steps as f64);
    let mut l: Vec<f64> = (0..steps).map(|j| rho1 * ratio.powi(j as i32)).collect();
    l.push(rho2);
    l
}

/// ∫_{ρ1}^{ρ2} (G/U − U/ρ) D dρ / I(ρ2), evaluated as ∫ (G − U²/ρ) I dρ / I(ρ2).
fn defect_unchecked(u: &ModeField, p: &APProfile, rho1: f64, rho2: f64) -> Result<(f64, f64)> {
    let ladder = integration_ladder(rho1, rho2);
    let t = trace(u, p, &ladder)?;
    let mut acc = 0.0;
    for j in 1..ladder.len() {
        let a = t.cs_gap[j - 1] * t.i[j - 1];
        let b = t.cs_gap[j] * t.i[j];
        acc += 0.5 * (a + b) * (ladder[j] - ladder[j - 1]);
    }
    let min_u = t.u.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((acc / t.i[ladder.len() - 1], min_u))
}

/// Squared separation defect δ² of u on the annulus [ρ1, ρ2].
pub fn separation_defect(u: &ModeField, p: &APProfile, rho1: f64, rho2: f64) -> Result<f64> {
    if !(rho1 > 0.0) || !(rho2 > rho1) {
        return invalid(format!("need 0 < rho1 < rho2, got {rho1}, {rho2}"));
    }
    let (defect, min_u) = defect_unchecked(u, p, rho1, rho2)?;
    if !(min_u > 1e-14) {
        return Err(Error::UndefinedRatio(format!(
            "frequency vanishes inside [{rho1}, {rho2}]; deflate the constant component first"
        )));
    }
    Ok(defect)
}

/// Pinching diagnostics of a field against a target eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct PinchReport {
    /// Target eigenvalue λ_ℓ.
    pub lambda: f64,
    /// Level index of λ_ℓ.
    pub level: usize,
    /// Trace on the pinching ladder.
    pub trace: FrequencyTrace,
    /// ‖P_ℓ u‖_ρ / ‖u‖_ρ along the ladder.
    pub projection_ratio: Vec<f64>,
    /// Separation defect δ² on [ρ, 2ρ] for the ladder radii with 2ρ in range.
    pub separation: Vec<(f64, f64)>,
    /// Fit of |U − λ|.
    pub u_fit: DecayFit,
    /// Fit of |Q − λ|.
    pub q_fit: DecayFit,
    /// Fit of |U − Q|.
    pub uq_fit: DecayFit,
    /// Fit of the separation defect.
    pub separation_fit: DecayFit,
    /// Fit of 1 − projection ratio.
    pub projection_fit: DecayFit,
}

/// Floor below which pinching quantities count as vanishing identically.
pub const PINCH_FLOOR: f64 = 1e-12;

impl PinchReport {
    /// Separation, U-pinching, Q-pinching and projection dominance all decay.
    pub fn all_conditions(&self) -> bool {
        self.separation_fit.decays() && self.u_fit.decays() && self.q_fit.decays() && self.projection_fit.decays()
    }

    /// |U − Q| decays at rate at least 1/3.
    pub fn uq_rate_ok(&self) -> bool {
        self.uq_fit.decays_at_least(1.0 / 3.0)
    }

    /// CSV of the per-radius data.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rho,U,Q,abs_U_minus_lambda,abs_Q_minus_lambda,abs_U_minus_Q,projection_ratio\n");
        for j in 0..self.trace.rho.len() {
            let (u, q) = (self.trace.u[j], self.trace.q[j]);
            let _ = writeln!(
                out,
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                self.trace.rho[j],
                u,
                q,
                (u - self.lambda).abs(),
                (q - self.lambda).abs(),
                (u - q).abs(),
                self.projection_ratio[j]
            );
        }
        out
    }
}

/// Fit pinching rates of u against λ_target along `ladder`.
pub fn pinching_report(u: &ModeField, p: &APProfile, lambda_target: f64, ladder: &[f64]) -> Result<PinchReport> {
    let spec = u.spectrum();
    let level = spec
        .level_of(lambda_target, 1e-9 * (1.0 + lambda_target.abs()))
        .ok_or_else(|| Error::InvalidArgument(format!("{lambda_target} is not a retained eigenvalue")))?;
    let t = trace(u, p, ladder)?;
    let range = spec.level_range(level);
    let mut projection_ratio = Vec::new();
    for &rho in ladder {
        let s = u.sample(rho)?;
        let all: f64 = s.u.iter().map(|x| x * x).sum();
        let part: f64 = s.u[range.clone()].iter().map(|x| x * x).sum();
        projection_ratio.push((part / all).sqrt());
    }
    let floor = PINCH_FLOOR * (1.0 + lambda_target);
    let du: Vec<f64> = t.u.iter().map(|x| x - lambda_target).collect();
    let dq: Vec<f64> = t.q.iter().map(|x| x - lambda_target).collect();
    let duq: Vec<f64> = t.u.iter().zip(&t.q).map(|(a, b)| a - b).collect();
    let dp: Vec<f64> = projection_ratio.iter().map(|x| 1.0 - x).collect();
    let top = u.outer_radius();
    let mut separation = Vec::new();
    for &rho in ladder {
        if 2.0 * rho <= top * (1.0 + 1e-12) {
            separation.push((rho, defect_unchecked(u, p, rho, 2.0 * rho)?.0));
        }
    }
    let (sr, sv): (Vec<f64>, Vec<f64>) = separation.iter().cloned().unzip();
    Ok(PinchReport {
        lambda: lambda_target,
        level,
        u_fit: fit_decay(ladder, &du, floor)?,
        q_fit: fit_decay(ladder, &dq, floor)?,
        uq_fit: fit_decay(ladder, &duq, floor)?,
        separation_fit: fit_decay(&sr, &sv, PINCH_FLOOR)?,
        projection_fit: fit_decay(ladder, &dp, PINCH_FLOOR)?,
        separation,
        projection_ratio,
        trace: t,
    })
}

/// Upper bound for sup_θ |u(ρ, θ)| from the level norms via the addition
/// theorem: on a homogeneous cross-section Σ_j Θ_{ℓj}² ≡ m_ℓ/vol, so
/// |P_ℓ u| ≤ ‖P_ℓ u‖ √(m_ℓ/vol), with equality for zonal data.
pub fn sup_bound_on_level(spectrum: &Spectrum, coeffs: &[f64]) -> f64 {
    let vol = spectrum.volume();
    (0..spectrum.level_count())
        .map(|l| {
            let norm: f64 = coeffs[spectrum.level_range(l)].iter().map(|x| x * x).sum::<f64>().sqrt();
            norm * (spectrum.multiplicities()[l] as f64 / vol).sqrt()
        })
        .sum()
}

/// sup_{r ≤ (1−τ)ρ} u² divided by ρ^{−(n+1)/2} ∫_{ρ/32}^{ρ} s^{(n−1)/2} I(s) ds.
///
/// The supremum over each level set is bounded through
/// [`sup_bound_on_level`]; radii below the field grid are covered by the cone
/// continuation, on which every mode is monotone in r.
pub fn mean_value_ratio(u: &ModeField, p: &APProfile, rho: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0 && tau < 0.5) {
        return invalid(format!("tau must lie in (0, 1/2), got {tau}"));
    }
    if !(rho > 0.0) || rho > u.outer_radius() * (1.0 + 1e-12) {
        return invalid(format!("radius {rho} outside the field"));
    }
    let spec = u.spectrum();
    let inner = (1.0 - tau) * rho;
    let mut sup: f64 = 0.0;
    let grid = u.grid();
    for j in 0..grid.len() {
        if grid[j] > inner {
            break;
        }
        sup = sup.max(sup_bound_on_level(spec, u.node_values(j)));
    }
    if inner >= grid[0] {
        sup = sup.max(sup_bound_on_level(spec, &u.sample(inner)?.u));
    }
    let n = p.n() as f64;
    // Simpson's rule in t = ln s on a uniform mesh.
    let (a, b) = ((rho / 32.0).ln(), rho.ln());
    let m = 512;
    let h = (b - a) / m as f64;
    let mut acc = 0.0;
    for j in 0..=m {
        let s = (a + j as f64 * h).exp();
        let smp = u.sample(s)?;
        let i = p.area_weight(s) * smp.u.iter().map(|x| x * x).sum::<f64>();
        let w = if j == 0 || j == m { 1.0 } else if j % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * s.powf((n - 1.0) / 2.0) * i * s;
    }
    let integral = acc * h / 3.0;
    let denom = rho.powf(-(n + 1.0) / 2.0) * integral;
    if !(denom > 0.0) {
        return Err(Error::DegenerateLevel { rho });
    }
    Ok(sup * sup / denom)
}

/// ∫ min((ln U)′, 0) dρ along a trace (a nonpositive number; 0 for monotone U).
pub fn almost_monotonicity_deficit(t: &FrequencyTrace) -> f64 {
    let mut acc = 0.0;
    for j in 1..t.rho.len() {
        if t.u[j] > 0.0 && t.u[j - 1] > 0.0 {
            let dl = t.u[j].ln() - t.u[j - 1].ln();
            acc += dl.min(0.0);
        }
    }
    acc
}

/// Geometric ladder with ratio at most `ratio` between ρ1 and ρ2 (both included).
pub fn ladder_with_ratio(rho1: f64, rho2: f64, ratio: f64) -> Vec<f64> {
    let per_decade = (1.0 / ratio.log10()).ceil() as usize;
    geometric_ladder(rho1, rho2, per_decade)
}
