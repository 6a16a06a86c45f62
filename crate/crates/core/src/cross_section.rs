//! Spectral data of the asymptotic cross-section.
//!
//! A [`Spectrum`] lists the distinct eigenvalues of −Δ on a closed manifold
//! (Σ, g_X) together with their multiplicities, and fixes a flat indexing of an
//! orthonormal eigenbasis: modes are numbered level by level, so the modes of
//! level `k` occupy the contiguous flat range `offset(k)..offset(k) + m_k`.
//!
//! Two closed-form families are provided: scaled round spheres and flat tori.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{invalid, Error, Result};

/// Which closed manifold the spectrum belongs to.
#[derive(Debug, Clone, PartialEq)]
pub enum CrossSectionKind {
    /// Round sphere S^d carrying `scale` times the unit round metric.
    Sphere,
    /// Flat torus R^d / ⊕ L_i Z.
    Torus {
        /// Side lengths L_i.
        lengths: Vec<f64>,
    },
}

/// A flat mode id resolved into (level, index within level), both 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeId {
    /// Index of the distinct eigenvalue (level 0 is the constants).
    pub level: usize,
    /// Index inside the level's eigenspace, `0..m_level`.
    pub index: usize,
}

/// Truncated spectrum of −Δ_{g_X} with an orthonormal mode indexing.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    kind: CrossSectionKind,
    sigma_dim: usize,
    scale: f64,
    eigenvalues: Vec<f64>,
    multiplicities: Vec<usize>,
    offsets: Vec<usize>,
    volume: f64,
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Number of independent degree-ℓ spherical harmonics on S^d.
pub fn sphere_multiplicity(sphere_dim: usize, degree: usize) -> usize {
    let d = sphere_dim;
    if degree == 0 {
        return 1;
    }
    let top = binomial(degree + d, d);
    let low = if degree >= 2 { binomial(degree + d - 2, d) } else { 0 };
    top - low
}

/// Volume of the unit round sphere S^d.
fn unit_sphere_volume(d: usize) -> f64 {
    // |S^0| = 2, |S^1| = 2π, |S^d| = 2π/(d−1) |S^{d−2}|.
    let mut vols = vec![2.0, 2.0 * PI];
    for k in 2..=d {
        let next = 2.0 * PI / (k as f64 - 1.0) * vols[k - 2];
        vols.push(next);
    }
    vols[d]
}

/// First `count` distinct eigenvalues of the sphere S^{sphere_dim} carrying the
/// metric `scale · g_round`: λ_ℓ = ℓ(ℓ + sphere_dim − 1)/scale.
pub fn sphere_spectrum(sphere_dim: usize, scale: f64, count: usize) -> Result<Spectrum> {
    if sphere_dim < 1 {
        return invalid("sphere dimension must be at least 1");
    }
    if !(scale > 0.0) || !scale.is_finite() {
        return invalid(format!("sphere scale must be positive, got {scale}"));
    }
    if count < 1 {
        return invalid("spectrum count must be at least 1");
    }
    let d = sphere_dim as f64;
    let eigenvalues = (0..count)
        .map(|l| {
            let l = l as f64;
            l * (l + d - 1.0) / scale
        })
        .collect();
    let multiplicities = (0..count).map(|l| sphere_multiplicity(sphere_dim, l)).collect();
    let volume = scale.powf(d / 2.0) * unit_sphere_volume(sphere_dim);
    Ok(Spectrum::assemble(
        CrossSectionKind::Sphere,
        sphere_dim,
        scale,
        eigenvalues,
        multiplicities,
        volume,
    ))
}

/// First `count` distinct eigenvalues Σ_i (2π k_i / L_i)² of the flat torus
/// with side lengths `lengths`, with lattice-count multiplicities.
pub fn torus_spectrum(lengths: &[f64], count: usize) -> Result<Spectrum> {
    if lengths.is_empty() {
        return invalid("torus needs at least one side length");
    }
    if let Some(bad) = lengths.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
        return invalid(format!("torus side lengths must be positive, got {bad}"));
    }
    if count < 1 {
        return invalid("spectrum count must be at least 1");
    }
    let freqs: Vec<f64> = lengths.iter().map(|l| (2.0 * PI / l).powi(2)).collect();
    // Grow the enumeration bound until `count` distinct values lie below it;
    // every lattice vector with eigenvalue ≤ bound is then enumerated exactly.
    let mut bound = freqs.iter().cloned().fold(f64::INFINITY, f64::min) * count as f64;
    loop {
        let values = lattice_values(&freqs, bound);
        let groups = group_distinct(values);
        if groups.len() >= count {
            let groups = &groups[..count];
            let eigenvalues = groups.iter().map(|g| g.0).collect();
            let multiplicities = groups.iter().map(|g| g.1).collect();
            let volume = lengths.iter().product();
            return Ok(Spectrum::assemble(
                CrossSectionKind::Torus { lengths: lengths.to_vec() },
                lengths.len(),
                1.0,
                eigenvalues,
                multiplicities,
                volume,
            ));
        }
        bound *= 2.0;
    }
}

/// All values Σ_i c_i k_i² ≤ bound over integer vectors k.
fn lattice_values(freqs: &[f64], bound: f64) -> Vec<f64> {
    let ranges: Vec<i64> = freqs.iter().map(|c| (bound / c).sqrt().floor() as i64).collect();
    let mut out = Vec::new();
    let mut k: Vec<i64> = ranges.iter().map(|r| -r).collect();
    loop {
        let v: f64 = k.iter().zip(freqs).map(|(ki, c)| c * (ki * ki) as f64).sum();
        if v <= bound * (1.0 + 1e-12) {
            out.push(v);
        }
        let mut axis = 0;
        loop {
            if axis == k.len() {
                return out;
            }
            if k[axis] < ranges[axis] {
                k[axis] += 1;
                break;
            }
            k[axis] = -ranges[axis];
            axis += 1;
        }
    }
}

fn group_distinct(mut values: Vec<f64>) -> Vec<(f64, usize)> {
    values.sort_by(|a, b| a.total_cmp(b));
    let mut groups: Vec<(f64, usize)> = Vec::new();
    for v in values {
        match groups.last_mut() {
            Some((g, m)) if (v - *g).abs() <= 1e-10 * (1.0 + g.abs()) => *m += 1,
            _ => groups.push((v, 1)),
        }
    }
    groups
}

impl Spectrum {
    fn assemble(
        kind: CrossSectionKind,
        sigma_dim: usize,
        scale: f64,
        eigenvalues: Vec<f64>,
        multiplicities: Vec<usize>,
        volume: f64,
    ) -> Spectrum {
        let mut offsets = Vec::with_capacity(multiplicities.len() + 1);
        let mut acc = 0;
        for m in &multiplicities {
            offsets.push(acc);
            acc += m;
        }
        offsets.push(acc);
        Spectrum { kind, sigma_dim, scale, eigenvalues, multiplicities, offsets, volume }
    }

    /// Which closed manifold this spectrum describes.
    pub fn kind(&self) -> &CrossSectionKind {
        &self.kind
    }

    /// Dimension of Σ (equals n − 1 for the ambient manifold).
    pub fn sigma_dim(&self) -> usize {
        self.sigma_dim
    }

    /// Metric scale factor relative to the reference metric.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Distinct eigenvalues λ_1 = 0 < λ_2 < … (0-based in this API).
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Multiplicities m_k of the distinct eigenvalues.
    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    /// Number of retained distinct eigenvalues.
    pub fn level_count(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Total number of retained flat modes, Σ m_k.
    pub fn mode_count(&self) -> usize {
        *self.offsets.last().expect("offsets always hold a terminator")
    }

    /// Riemannian volume of (Σ, g_X).
    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Flat range of mode ids belonging to `level`.
    pub fn level_range(&self, level: usize) -> std::ops::Range<usize> {
        self.offsets[level]..self.offsets[level + 1]
    }

    /// Resolve a flat mode id into (level, index).
    pub fn mode(&self, flat: usize) -> Result<ModeId> {
        if flat >= self.mode_count() {
            return Err(Error::OutOfRange(format!(
                "mode {flat} outside the {} retained modes",
                self.mode_count()
            )));
        }
        let level = self.offsets.partition_point(|&o| o <= flat) - 1;
        Ok(ModeId { level, index: flat - self.offsets[level] })
    }

    /// Flat id of (level, index).
    pub fn flat(&self, id: ModeId) -> Result<usize> {
        if id.level >= self.level_count() || id.index >= self.multiplicities[id.level] {
            return Err(Error::OutOfRange(format!("mode {id:?} not retained")));
        }
        Ok(self.offsets[id.level] + id.index)
    }

    /// Eigenvalue of every flat mode, in flat order.
    pub fn mode_eigenvalues(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .zip(&self.multiplicities)
            .flat_map(|(l, m)| std::iter::repeat_n(*l, *m))
            .collect()
    }

    /// Level of every flat mode, in flat order.
    pub fn mode_levels(&self) -> Vec<usize> {
        self.multiplicities
            .iter()
            .enumerate()
            .flat_map(|(k, m)| std::iter::repeat_n(k, *m))
            .collect()
    }

    /// Index of the level whose eigenvalue equals `lambda` within `tol`.
    pub fn level_of(&self, lambda: f64, tol: f64) -> Option<usize> {
        self.eigenvalues.iter().position(|l| (l - lambda).abs() <= tol)
    }

    /// Plain-text table `k,lambda,multiplicity` (k is 1-based).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,lambda,multiplicity\n");
        for (k, (l, m)) in self.eigenvalues.iter().zip(&self.multiplicities).enumerate() {
            let _ = writeln!(out, "{},{:.17e},{}", k + 1, l, m);
        }
        out
    }
}

/// Number of independent modes with eigenvalue at most `d`: Σ_{λ_k ≤ d} m_k.
///
/// Returns 0 for negative `d`. Fails with [`Error::OutOfRange`] when `d`
/// exceeds the largest retained eigenvalue, since the truncated spectrum
/// cannot vouch for the count there.
pub fn dimension_count(spec: &Spectrum, d: f64) -> Result<usize> {
    if d.is_nan() {
        return invalid("growth degree is NaN");
    }
    if d < 0.0 {
        return Ok(0);
    }
    let top = *spec.eigenvalues.last().expect("spectra are never empty");
    if d > top {
        return Err(Error::OutOfRange(format!(
            "degree {d} exceeds the largest retained eigenvalue {top}"
        )));
    }
    Ok(spec
        .eigenvalues
        .iter()
        .zip(&spec.multiplicities)
        .filter(|(l, _)| **l <= d)
        .map(|(_, m)| m)
        .sum())
}
