//! Run configuration: a TOML file with one section per subcommand.
//!
//! Every field has a default, so an empty file (or no file at all) selects
//! the standard configuration: n = 3, a sphere cross-section of scale 2 with
//! four eigenvalue levels, r_cone = 0.5, r_asym = 2, and one random coupling
//! on [4, 8] with amplitude 0.3.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use aplab::cross_section::{sphere_spectrum, torus_spectrum, Spectrum};
use aplab::dirichlet::{Coupling, OperatorSpec, MIN_POINTS_PER_OCTAVE};
use aplab::geometry::{model_profile, APProfile, Tail};
use serde::{Deserialize, Serialize};

/// Complete configuration of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Base seed of every randomised battery.
    pub seed: u64,
    /// Directory receiving CSVs and the manifest.
    pub output_dir: String,
    /// Warped-product profile.
    pub profile: ProfileConfig,
    /// Cross-section spectrum.
    pub spectrum: SpectrumConfig,
    /// Dirichlet operator.
    pub operator: OperatorConfig,
    /// `radial` subcommand.
    pub radial: RadialConfig,
    /// `freq` subcommand.
    pub freq: FreqConfig,
    /// `threecircles` subcommand.
    pub threecircles: ThreeCirclesConfig,
    /// `liouville` subcommand.
    pub liouville: LiouvilleConfig,
    /// `basis` subcommand.
    pub basis: BasisConfig,
    /// `verify` subcommand.
    pub verify: VerifyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            output_dir: "aplab-out".into(),
            profile: ProfileConfig::default(),
            spectrum: SpectrumConfig::default(),
            operator: OperatorConfig::default(),
            radial: RadialConfig::default(),
            freq: FreqConfig::default(),
            threecircles: ThreeCirclesConfig::default(),
            liouville: LiouvilleConfig::default(),
            basis: BasisConfig::default(),
            verify: VerifyConfig::default(),
        }
    }
}

/// Perturbation of f′ beyond r_asym.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailKind {
    /// f′ ≡ −1 on the outer plateau.
    Exact,
    /// f′ = −1 − c/r.
    InverseLinear,
    /// f′ = −1 − (c + ε sin r)/r.
    Oscillating,
}

/// Profile parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileConfig {
    /// Ambient dimension.
    pub n: usize,
    /// Cross-section scale: g_X = scale · g_round.
    pub scale: f64,
    /// End of the exact cone.
    pub r_cone: f64,
    /// Start of the exact paraboloid.
    pub r_asym: f64,
    /// Tail of f′.
    pub tail: TailKind,
    /// Tail coefficient c.
    pub tail_c: f64,
    /// Oscillation amplitude ε.
    pub tail_epsilon: f64,
    /// Required decay exponent of the metric deviation.
    pub mu: f64,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            n: 3,
            scale: 2.0,
            r_cone: 0.5,
            r_asym: 2.0,
            tail: TailKind::Exact,
            tail_c: 0.0,
            tail_epsilon: 0.0,
            mu: 1.0,
        }
    }
}

/// Which cross-section to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossSection {
    /// Round sphere of dimension n − 1 carrying the profile scale.
    Sphere,
    /// Flat torus with the given side lengths.
    Torus,
}

/// Spectrum choice and truncation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    /// Cross-section.
    pub kind: CrossSection,
    /// Number of retained distinct eigenvalues.
    pub levels: usize,
    /// Torus side lengths (ignored for spheres).
    pub lengths: Vec<f64>,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig { kind: CrossSection::Sphere, levels: 4, lengths: Vec::new() }
    }
}

/// Dirichlet operator: grid density and an optional random coupling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OperatorConfig {
    /// Radial nodes per octave of the Dirichlet grid.
    pub points_per_octave: usize,
    /// Coupling amplitude (0 selects the separable operator).
    pub coupling_amplitude: f64,
    /// Coupling support [s1, s2].
    pub coupling_support: [f64; 2],
    /// Seed of the random coupling matrix.
    pub coupling_seed: u64,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        OperatorConfig { points_per_octave: 2048, coupling_amplitude: 0.3, coupling_support: [4.0, 8.0], coupling_seed: 7 }
    }
}

/// `radial`: growth table per eigenvalue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadialConfig {
    /// Eigenvalues to solve for (default: every retained eigenvalue).
    pub lambdas: Option<Vec<f64>>,
    /// Outer radius of the shooting.
    pub r_max: f64,
    /// Allowed |growth exponent − λ|.
    pub growth_tol: f64,
}

impl Default for RadialConfig {
    fn default() -> Self {
        RadialConfig { lambdas: None, r_max: 1e5, growth_tol: 5e-3 }
    }
}

/// `freq`: traces and residuals of separable fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FreqConfig {
    /// Fields as lists of (flat mode index, weight).
    pub fields: Vec<Vec<(usize, f64)>>,
    /// Ladder range [ρ_start, ρ_end].
    pub ladder: [f64; 2],
    /// Coarse ladder density (the fine ladder doubles it).
    pub per_decade: usize,
    /// Density of the field grid.
    pub grid_per_decade: usize,
    /// Admissible band of the residual halving ratio.
    pub ratio_band: [f64; 2],
    /// Allowed negative Cauchy–Schwarz gap.
    pub cs_tol: f64,
}

impl Default for FreqConfig {
    fn default() -> Self {
        FreqConfig {
            fields: vec![vec![(1, 1.0)], vec![(1, 1.0), (4, 1.0)]],
            ladder: [16.0, 1024.0],
            per_decade: 64,
            grid_per_decade: 2048,
            ratio_band: [3.5, 4.5],
            cs_tol: 1e-10,
        }
    }
}

/// `threecircles`: violation counts of random Dirichlet solutions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThreeCirclesConfig {
    /// Doubling exponents d.
    pub d: Vec<f64>,
    /// Trials per exponent.
    pub trials: usize,
    /// Ladder 2^lo, …, 2^hi of outer circle radii.
    pub ladder_exponents: [i32; 2],
    /// Radius from which no violation is allowed (default 2^6 separable, 2^8 coupled).
    pub clean_from: Option<f64>,
    /// Dirichlet ball radius.
    pub ball: f64,
}

impl Default for ThreeCirclesConfig {
    fn default() -> Self {
        ThreeCirclesConfig { d: vec![0.5, 2.0, 4.5], trials: 200, ladder_exponents: [3, 10], clean_from: None, ball: 1024.0 }
    }
}

/// `liouville`: frequency of constant-deflated random solutions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LiouvilleConfig {
    /// Number of trials.
    pub trials: usize,
    /// Allowed shortfall below λ_2.
    pub tolerance: f64,
}

impl Default for LiouvilleConfig {
    fn default() -> Self {
        LiouvilleConfig { trials: 100, tolerance: 0.05 }
    }
}

/// `basis`: exhaustion construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasisConfig {
    /// Growth cap d.
    pub d: f64,
    /// Largest admissible far-Gram off-diagonal angle.
    pub far_angle_tol: f64,
}

impl Default for BasisConfig {
    fn default() -> Self {
        BasisConfig { d: 3.0, far_angle_tol: 0.01 }
    }
}

/// `verify`: sizes of the acceptance batteries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Random mixtures for the Cauchy–Schwarz gap.
    pub cs_mixtures: usize,
    /// Samples of the model three-circles implication.
    pub model_samples: usize,
    /// Trials per exponent of the three-circles batteries.
    pub battery_trials: usize,
    /// Growth caps of the basis builds.
    pub basis_d: Vec<f64>,
    /// Trials of the Liouville battery.
    pub liouville_trials: usize,
    /// Pairs of the preservation battery.
    pub preservation_pairs: usize,
    /// Solutions of the mean-value battery.
    pub mean_value_solutions: usize,
    /// Largest admissible log–log slope of the mean-value ratios.
    pub mean_value_slope: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            cs_mixtures: 1000,
            model_samples: 100_000,
            battery_trials: 200,
            basis_d: vec![0.5, 1.0, 3.0],
            liouville_trials: 100,
            preservation_pairs: 50,
            mean_value_solutions: 20,
            mean_value_slope: 0.05,
        }
    }
}

/// A configuration problem, located in the source text when possible.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// File the configuration came from.
    pub file: String,
    /// 1-based line of the offending entry, if it appears in the file.
    pub line: Option<usize>,
    /// Dotted key, if the problem concerns one entry.
    pub key: Option<String>,
    /// What is wrong.
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.file)?;
        if let Some(line) = self.line {
            write!(f, ":{line}")?;
        }
        if let Some(key) = &self.key {
            write!(f, ": {key}")?;
        }
        write!(f, ": {}", self.message)
    }
}

/// Line of `key` (dotted, e.g. `threecircles.trials`) in TOML source `text`.
fn locate(text: &str, key: &str) -> Option<usize> {
    let (section, name) = match key.rsplit_once('.') {
        Some((s, n)) => (s, n),
        None => ("", key),
    };
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(header) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = header.trim().to_string();
            continue;
        }
        if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == name {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

impl RunConfig {
    /// Parse and validate TOML text; `file` names the source in diagnostics.
    pub fn from_toml(text: &str, file: &str) -> Result<RunConfig, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError {
            file: file.to_string(),
            line: e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1),
            key: None,
            message: e.message().to_string(),
        })?;
        cfg.validate().map_err(|(key, message)| ConfigError {
            file: file.to_string(),
            line: locate(text, key),
            key: Some(key.to_string()),
            message,
        })?;
        Ok(cfg)
    }

    /// Read, parse and validate a configuration file.
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let file = path.display().to_string();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError { file: file.clone(), line: None, key: None, message: format!("cannot read: {e}") })?;
        RunConfig::from_toml(&text, &file)
    }

    /// Semantic checks; on failure returns the dotted key and a message.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        fn need(ok: bool, key: &'static str, msg: impl Into<String>) -> Result<(), (&'static str, String)> {
            if ok {
                Ok(())
            } else {
                Err((key, msg.into()))
            }
        }
        let p = &self.profile;
        need(p.n >= 2, "profile.n", format!("dimension must be at least 2, got {}", p.n))?;
        need(p.scale > 0.0 && p.scale.is_finite(), "profile.scale", "scale must be positive")?;
        need(p.r_cone > 0.0, "profile.r_cone", "r_cone must be positive")?;
        need(p.r_asym > p.r_cone && p.r_asym.is_finite(), "profile.r_asym", "r_asym must exceed r_cone")?;
        need(p.mu > 0.0, "profile.mu", "mu must be positive")?;
        need(p.tail_c.is_finite(), "profile.tail_c", "tail coefficient must be finite")?;
        need(p.tail_epsilon.is_finite(), "profile.tail_epsilon", "oscillation amplitude must be finite")?;
        let s = &self.spectrum;
        need(s.levels >= 2, "spectrum.levels", "at least two eigenvalue levels are needed")?;
        if s.kind == CrossSection::Torus {
            need(
                s.lengths.len() + 1 == p.n && s.lengths.iter().all(|l| *l > 0.0),
                "spectrum.lengths",
                format!("a torus cross-section needs n − 1 = {} positive side lengths", p.n.saturating_sub(1)),
            )?;
        }
        let o = &self.operator;
        need(
            o.points_per_octave >= MIN_POINTS_PER_OCTAVE,
            "operator.points_per_octave",
            format!("must be at least {MIN_POINTS_PER_OCTAVE}"),
        )?;
        need((0.0..1.0).contains(&o.coupling_amplitude), "operator.coupling_amplitude", "amplitude must lie in [0, 1)")?;
        let [s1, s2] = o.coupling_support;
        need(s1 > p.r_cone && s2 > s1 && s2.is_finite(), "operator.coupling_support", "support must satisfy r_cone < s1 < s2")?;
        let r = &self.radial;
        need(r.r_max >= 10.0 * p.r_asym && r.r_max.is_finite(), "radial.r_max", "r_max must be at least 10 r_asym")?;
        need(r.growth_tol > 0.0, "radial.growth_tol", "tolerance must be positive")?;
        if let Some(l) = &r.lambdas {
            need(!l.is_empty() && l.iter().all(|x| *x >= 0.0 && x.is_finite()), "radial.lambdas", "eigenvalues must be nonnegative")?;
        }
        let f = &self.freq;
        let [lo, hi] = f.ladder;
        need(lo >= p.r_cone && hi > lo && hi.is_finite(), "freq.ladder", "ladder must satisfy r_cone <= start < end")?;
        need(f.per_decade >= 48, "freq.per_decade", "ladder density must be at least 48 per decade")?;
        need(f.grid_per_decade >= 2 * f.per_decade, "freq.grid_per_decade", "grid must be at least twice as dense as the ladder")?;
        need(f.ratio_band[0] > 0.0 && f.ratio_band[1] > f.ratio_band[0], "freq.ratio_band", "band must be positive and increasing")?;
        need(f.cs_tol > 0.0, "freq.cs_tol", "tolerance must be positive")?;
        need(!f.fields.is_empty(), "freq.fields", "at least one field is needed")?;
        let t = &self.threecircles;
        need(!t.d.is_empty() && t.d.iter().all(|d| *d > 0.0), "threecircles.d", "exponents must be positive")?;
        need(t.trials > 0, "threecircles.trials", "must be positive")?;
        let [a, b] = t.ladder_exponents;
        need(
            a <= b && 2f64.powi(a) / 4.0 >= p.r_cone && 2f64.powi(b) <= t.ball,
            "threecircles.ladder_exponents",
            "ladder radii must lie in [4 r_cone, ball]",
        )?;
        need(t.ball > 2.0 * p.r_cone && t.ball.is_finite(), "threecircles.ball", "ball radius must exceed 2 r_cone")?;
        if let Some(c) = t.clean_from {
            need(c > 0.0, "threecircles.clean_from", "must be positive")?;
        }
        need(self.liouville.trials > 0, "liouville.trials", "must be positive")?;
        need(self.liouville.tolerance > 0.0, "liouville.tolerance", "tolerance must be positive")?;
        need(self.basis.d > 0.0, "basis.d", "growth cap must be positive")?;
        need(self.basis.far_angle_tol > 0.0, "basis.far_angle_tol", "tolerance must be positive")?;
        let v = &self.verify;
        need(v.cs_mixtures > 0, "verify.cs_mixtures", "must be positive")?;
        need(v.model_samples > 0, "verify.model_samples", "must be positive")?;
        need(v.battery_trials > 0, "verify.battery_trials", "must be positive")?;
        need(!v.basis_d.is_empty() && v.basis_d.iter().all(|d| *d > 0.0), "verify.basis_d", "growth caps must be positive")?;
        need(v.liouville_trials > 0, "verify.liouville_trials", "must be positive")?;
        need(v.preservation_pairs > 0, "verify.preservation_pairs", "must be positive")?;
        need(v.mean_value_solutions > 0, "verify.mean_value_solutions", "must be positive")?;
        need(v.mean_value_slope > 0.0, "verify.mean_value_slope", "tolerance must be positive")?;
        Ok(())
    }

    /// The profile described by the configuration.
    pub fn build_profile(&self) -> aplab::Result<Arc<APProfile>> {
        let p = &self.profile;
        let tail = match p.tail {
            TailKind::Exact => Tail::Exact,
            TailKind::InverseLinear => Tail::InverseLinear { c: p.tail_c },
            TailKind::Oscillating => Tail::Oscillating { c: p.tail_c, epsilon: p.tail_epsilon },
        };
        Ok(Arc::new(model_profile(p.n, p.scale, p.r_cone, p.r_asym)?.with_tail(tail, p.mu)))
    }

    /// The spectrum described by the configuration.
    pub fn build_spectrum(&self) -> aplab::Result<Arc<Spectrum>> {
        let s = &self.spectrum;
        Ok(Arc::new(match s.kind {
            CrossSection::Sphere => sphere_spectrum(self.profile.n - 1, self.profile.scale, s.levels)?,
            CrossSection::Torus => torus_spectrum(&s.lengths, s.levels)?,
        }))
    }

    /// The separable operator.
    pub fn separable_operator(&self) -> aplab::Result<OperatorSpec> {
        OperatorSpec::separable(self.build_profile()?, self.build_spectrum()?)?
            .with_points_per_octave(self.operator.points_per_octave)
    }

    /// The configured operator: separable, or coupled when the amplitude is positive.
    pub fn operator(&self) -> aplab::Result<OperatorSpec> {
        let op = self.separable_operator()?;
        let o = &self.operator;
        if o.coupling_amplitude == 0.0 {
            return Ok(op);
        }
        let [s1, s2] = o.coupling_support;
        let c = Coupling::random(op.mode_cut(), s1, s2, o.coupling_amplitude, o.coupling_seed)?;
        op.with_coupling(c)
    }
}
