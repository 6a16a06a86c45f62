//! Drift-Laplace operators in mode coordinates, with optional compactly
//! supported couplings between cross-section modes.

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::cross_section::Spectrum;
use crate::error::{invalid, Result};
use crate::geometry::APProfile;

/// Default radial grid density of Dirichlet solves (nodes per octave).
pub const DEFAULT_POINTS_PER_OCTAVE: usize = 2048;
/// Smallest admissible grid density; 48 per decade is about 14.5 per octave.
pub const MIN_POINTS_PER_OCTAVE: usize = 16;

/// A compactly supported mode coupling e(r)·W.
///
/// Inside the support the operator in t = ln r reads
/// (M u_t)_t + (rA1 − 1) M u_t − (r²/ψ²) S u = 0 with
/// M = I + eW and S = Λ^{1/2}(I + eW)Λ^{1/2}, where Λ holds the mode
/// eigenvalues. Both matrices are symmetric positive definite for
/// amplitude < 1 because W is normalised to unit spectral norm. Constants stay
/// in the kernel since S annihilates mode 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    /// Support start s1.
    pub s1: f64,
    /// Support end s2.
    pub s2: f64,
    /// Envelope amplitude.
    pub amplitude: f64,
    /// Symmetric K×K matrix with unit spectral norm.
    pub matrix: DMatrix<f64>,
    /// Seed the matrix was drawn from, if random.
    pub seed: Option<u64>,
}

impl Coupling {
    /// Coupling with the given symmetric matrix, rescaled to unit spectral norm.
    pub fn new(s1: f64, s2: f64, amplitude: f64, matrix: DMatrix<f64>) -> Result<Coupling> {
        if !(s1 > 0.0 && s2 > s1 && s2.is_finite()) {
            return invalid(format!("coupling support [{s1}, {s2}] must satisfy 0 < s1 < s2 < inf"));
        }
        if !(amplitude >= 0.0 && amplitude < 1.0) {
            return invalid(format!("coupling amplitude must lie in [0, 1), got {amplitude}"));
        }
        if !matrix.is_square() || matrix.nrows() == 0 {
            return invalid("coupling matrix must be square and nonempty");
        }
        if (&matrix - matrix.transpose()).abs().max() > 1e-12 * matrix.abs().max().max(1.0) {
            return invalid("coupling matrix must be symmetric");
        }
        let norm = SymmetricEigen::new(matrix.clone()).eigenvalues.abs().max();
        if !(norm > 0.0) {
            return invalid("coupling matrix must be nonzero");
        }
        Ok(Coupling { s1, s2, amplitude, matrix: matrix / norm, seed: None })
    }

    /// Random symmetric Gaussian coupling on `modes` modes, drawn from `seed`.
    pub fn random(modes: usize, s1: f64, s2: f64, amplitude: f64, seed: u64) -> Result<Coupling> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = DMatrix::<f64>::zeros(modes, modes);
        for i in 0..modes {
            for j in 0..=i {
                let x: f64 = StandardNormal.sample(&mut rng);
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
        }
        let mut c = Coupling::new(s1, s2, amplitude, m)?;
        c.seed = Some(seed);
        Ok(c)
    }

    /// Envelope e(r) = amplitude·(4x(1−x))³ with x = (r − s1)/(s2 − s1), and e′(r).
    /// It is C² and vanishes outside [s1, s2].
    pub fn envelope(&self, r: f64) -> (f64, f64) {
        if r <= self.s1 || r >= self.s2 {
            return (0.0, 0.0);
        }
        let w = self.s2 - self.s1;
        let x = (r - self.s1) / w;
        let b = 4.0 * x * (1.0 - x);
        let db = 4.0 - 8.0 * x;
        (self.amplitude * b * b * b, self.amplitude * 3.0 * b * b * db / w)
    }
}

/// The operator L_f on the warped manifold in mode coordinates, possibly
/// perturbed by compactly supported couplings.
#[derive(Debug, Clone)]
pub struct OperatorSpec {
    profile: Arc<APProfile>,
    spectrum: Arc<Spectrum>,
    couplings: Vec<Coupling>,
    points_per_octave: usize,
}

impl OperatorSpec {
    /// The separable operator on all retained modes of `spectrum`.
    pub fn separable(profile: Arc<APProfile>, spectrum: Arc<Spectrum>) -> Result<OperatorSpec> {
        if profile.n() != spectrum.sigma_dim() + 1 {
            return invalid(format!(
                "profile dimension {} does not match cross-section dimension {}",
                profile.n(),
                spectrum.sigma_dim()
            ));
        }
        Ok(OperatorSpec { profile, spectrum, couplings: Vec::new(), points_per_octave: DEFAULT_POINTS_PER_OCTAVE })
    }

    /// Add a coupling; its support must lie beyond the cone plateau.
    pub fn with_coupling(mut self, c: Coupling) -> Result<OperatorSpec> {
        if c.matrix.nrows() != self.mode_cut() {
            return invalid(format!("coupling matrix is {}x{}, operator has {} modes", c.matrix.nrows(), c.matrix.ncols(), self.mode_cut()));
        }
        if c.s1 <= self.profile.r_cone() {
            return invalid(format!("coupling support must start beyond r_cone = {}", self.profile.r_cone()));
        }
        self.couplings.push(c);
        Ok(self)
    }

    /// Change the radial grid density.
    pub fn with_points_per_octave(mut self, ppo: usize) -> Result<OperatorSpec> {
        if ppo < MIN_POINTS_PER_OCTAVE {
            return invalid(format!("grid density must be at least {MIN_POINTS_PER_OCTAVE} points per octave"));
        }
        self.points_per_octave = ppo;
        Ok(self)
    }

    /// Profile.
    pub fn profile(&self) -> &Arc<APProfile> {
        &self.profile
    }
    /// Spectrum.
    pub fn spectrum(&self) -> &Arc<Spectrum> {
        &self.spectrum
    }
    /// Couplings.
    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }
    /// Number of retained modes K.
    pub fn mode_cut(&self) -> usize {
        self.spectrum.mode_count()
    }
    /// Grid density in nodes per octave.
    pub fn points_per_octave(&self) -> usize {
        self.points_per_octave
    }
    /// True without couplings.
    pub fn is_separable(&self) -> bool {
        self.couplings.iter().all(|c| c.amplitude == 0.0)
    }
    /// Largest radius touched by a coupling (0 when separable).
    pub fn support_end(&self) -> f64 {
        self.couplings.iter().map(|c| c.s2).fold(0.0, f64::max)
    }
    /// Smallest admissible Dirichlet radius: beyond all supports plus one blend width.
    pub fn min_boundary_radius(&self) -> f64 {
        if self.couplings.is_empty() {
            self.profile.r_cone()
        } else {
            self.support_end() + (self.profile.r_asym() - self.profile.r_cone())
        }
    }

    /// Sum of coupling envelopes times their matrices at r, with the r-derivative.
    pub(crate) fn coupling_at(&self, r: f64) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        let mut active = self.couplings.iter().filter(|c| r > c.s1 && r < c.s2 && c.amplitude > 0.0).peekable();
        active.peek()?;
        let k = self.mode_cut();
        let mut e = DMatrix::zeros(k, k);
        let mut de = DMatrix::zeros(k, k);
        for c in active {
            let (v, dv) = c.envelope(r);
            e += &c.matrix * v;
            de += &c.matrix * dv;
        }
        Some((e, de))
    }

    /// Canonical text description (used for manifests and hashing).
    pub fn describe(&self) -> String {
        let p = &self.profile;
        let mut out = String::new();
        let _ = writeln!(out, "n={}", p.n());
        let _ = writeln!(out, "scale={:e}", p.scale());
        let _ = writeln!(out, "r_cone={:e}", p.r_cone());
        let _ = writeln!(out, "r_asym={:e}", p.r_asym());
        let _ = writeln!(out, "tail={:?}", p.tail());
        let _ = writeln!(out, "mu={:e}", p.mu());
        let _ = writeln!(out, "cross_section={:?}", self.spectrum.kind());
        let _ = writeln!(out, "levels={}", self.spectrum.level_count());
        let _ = writeln!(out, "points_per_octave={}", self.points_per_octave);
        for (i, c) in self.couplings.iter().enumerate() {
            let _ = writeln!(out, "coupling{i}.support=[{:e},{:e}]", c.s1, c.s2);
            let _ = writeln!(out, "coupling{i}.amplitude={:e}", c.amplitude);
            let _ = writeln!(out, "coupling{i}.seed={:?}", c.seed);
            let entries: Vec<String> = c.matrix.iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(out, "coupling{i}.matrix={}", entries.join(" "));
        }
        out
    }
}

/// Where boundary data came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataSource {
    /// An eigenfunction (combination) within one level.
    Level(usize),
    /// Arbitrary mode coefficients.
    Random,
}

/// Dirichlet data Θ on the sphere {r = ρ}, in mode coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    /// Boundary radius.
    pub rho: f64,
    /// Mode coefficients of Θ.
    pub coeffs: Vec<f64>,
    /// Provenance.
    pub source: DataSource,
}

impl BoundaryData {
    /// General data.
    pub fn new(rho: f64, coeffs: Vec<f64>) -> Result<BoundaryData> {
        if !(rho > 0.0) || coeffs.iter().any(|c| !c.is_finite()) {
            return invalid("boundary data needs a positive radius and finite coefficients");
        }
        Ok(BoundaryData { rho, coeffs, source: DataSource::Random })
    }

    /// Eigenfunction data: `within` holds the coefficients inside level `level`.
    pub fn level(spectrum: &Spectrum, rho: f64, level: usize, within: &[f64]) -> Result<BoundaryData> {
        if level >= spectrum.level_count() {
            return invalid(format!("level {level} is not retained"));
        }
        let range = spectrum.level_range(level);
        if within.len() != range.len() {
            return invalid(format!("level {level} has {} modes, got {} coefficients", range.len(), within.len()));
        }
        let mut coeffs = vec![0.0; spectrum.mode_count()];
        coeffs[range].copy_from_slice(within);
        let mut d = BoundaryData::new(rho, coeffs)?;
        d.source = DataSource::Level(level);
        Ok(d)
    }
}
