//! Warped-product profiles and their separated drift-Laplace coefficients.
//!
//! The manifold is (0, ∞) × Σ with metric dr² + φ(r)² g_round, where the
//! asymptotic cross-section metric is g_X = scale · g_round. Writing
//! ψ = φ/√scale the same metric reads dr² + ψ(r)² g_X, and on the outer
//! plateau ψ = √r, i.e. the metric is exactly the paraboloid dr² + r g_X.
//!
//! Profiles have exact plateaus: a flat cone φ = r, f′ = 0 on (0, r_cone],
//! the paraboloid φ = √(scale·r), f′ = −1 on [r_asym, ∞), and quintic Hermite
//! C² blends of φ and f′ in between. Synthetic tails (used to exercise the
//! decay certificate) perturb f′ beyond r_asym.

use std::fmt::Write as _;

use crate::error::{invalid, Error, Result};
use crate::fit::{fit_line, geometric_ladder};
use crate::ode::DormandPrince;

/// Quintic polynomial on [0, 1] stored by monomial coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Quintic([f64; 6]);

impl Quintic {
    /// Hermite quintic matching value, first and second derivative at 0 and 1.
    fn hermite(left: [f64; 3], right: [f64; 3]) -> Quintic {
        let [p0, d0, s0] = left;
        let [p1, d1, s1] = right;
        Quintic([
            p0,
            d0,
            0.5 * s0,
            -10.0 * p0 - 6.0 * d0 - 1.5 * s0 + 10.0 * p1 - 4.0 * d1 + 0.5 * s1,
            15.0 * p0 + 8.0 * d0 + 1.5 * s0 - 15.0 * p1 + 7.0 * d1 - s1,
            -6.0 * p0 - 3.0 * d0 - 0.5 * s0 + 6.0 * p1 - 3.0 * d1 + 0.5 * s1,
        ])
    }

    /// Value and first three derivatives at x.
    fn eval(&self, x: f64) -> [f64; 4] {
        let c = &self.0;
        let v = c[0] + x * (c[1] + x * (c[2] + x * (c[3] + x * (c[4] + x * c[5]))));
        let d1 = c[1] + x * (2.0 * c[2] + x * (3.0 * c[3] + x * (4.0 * c[4] + x * 5.0 * c[5])));
        let d2 = 2.0 * c[2] + x * (6.0 * c[3] + x * (12.0 * c[4] + x * 20.0 * c[5]));
        let d3 = 6.0 * c[3] + x * (24.0 * c[4] + x * 60.0 * c[5]);
        [v, d1, d2, d3]
    }

    /// Antiderivative vanishing at 0.
    fn integral(&self, x: f64) -> f64 {
        let c = &self.0;
        (0..6).rev().fold(0.0, |acc, k| acc * x + c[k] / (k as f64 + 1.0)) * x
    }
}

/// Perturbation of f′ beyond r_asym, switched on smoothly over [r_asym, 2 r_asym].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tail {
    /// No perturbation: f′ ≡ −1 on the outer plateau.
    Exact,
    /// f′ = −1 − c/r (the leading correction of a Bryant-type soliton).
    InverseLinear {
        /// Coefficient of the 1/r correction.
        c: f64,
    },
    /// f′ = −1 − (c + ε sin r)/r: f′ + 1 decays like 1/r but f″ only like 1/r.
    Oscillating {
        /// Mean coefficient of the 1/r correction.
        c: f64,
        /// Amplitude of the oscillating part.
        epsilon: f64,
    },
}

impl Tail {
    /// g, g′, g″ of the additive f′ perturbation g(r).
    fn eval(&self, r: f64) -> [f64; 3] {
        match *self {
            Tail::Exact => [0.0; 3],
            Tail::InverseLinear { c } => [-c / r, c / (r * r), -2.0 * c / (r * r * r)],
            Tail::Oscillating { c, epsilon } => {
                let (s, co) = r.sin_cos();
                let h = c + epsilon * s;
                let h1 = epsilon * co;
                let h2 = -epsilon * s;
                // g = −h/r.
                let g = -h / r;
                let g1 = -h1 / r + h / (r * r);
                let g2 = -h2 / r + 2.0 * h1 / (r * r) - 2.0 * h / (r * r * r);
                [g, g1, g2]
            }
        }
    }
}

/// Warped-product profile (φ, f) with exact cone and paraboloid plateaus.
#[derive(Debug, Clone, PartialEq)]
pub struct APProfile {
    n: usize,
    scale: f64,
    r_cone: f64,
    r_asym: f64,
    mu: f64,
    phi_blend: Quintic,
    tail: Tail,
}

/// Smoothstep quintic 10x³ − 15x⁴ + 6x⁵: 0 → 1 with vanishing first and second derivatives.
const SMOOTHSTEP: Quintic = Quintic([0.0, 0.0, 0.0, 10.0, -15.0, 6.0]);

/// Build the model profile: exact cone on (0, r_cone], exact paraboloid
/// φ = √(scale·r), f′ = −1 on [r_asym, ∞), quintic C² blends in between.
pub fn model_profile(n: usize, scale: f64, r_cone: f64, r_asym: f64) -> Result<APProfile> {
    if n < 3 {
        return invalid(format!("dimension n must be at least 3, got {n}"));
    }
    if !(scale > 0.0) || !scale.is_finite() {
        return invalid(format!("scale must be positive, got {scale}"));
    }
    if !(r_cone > 0.0) || !(r_asym > r_cone) || !r_asym.is_finite() {
        return invalid(format!("need 0 < r_cone < r_asym, got {r_cone}, {r_asym}"));
    }
    let h = r_asym - r_cone;
    let sa = (scale * r_asym).sqrt();
    let left = [r_cone, h, 0.0];
    let right = [sa, h * 0.5 * sa / r_asym, -h * h * 0.25 * sa / (r_asym * r_asym)];
    let profile = APProfile {
        n,
        scale,
        r_cone,
        r_asym,
        mu: 1.0,
        phi_blend: Quintic::hermite(left, right),
        tail: Tail::Exact,
    };
    // The blend is a polynomial of degree five; dense sampling certifies
    // positivity and monotonicity.
    let samples = 4096;
    for k in 0..=samples {
        let x = k as f64 / samples as f64;
        let [v, d, _, _] = profile.phi_blend.eval(x);
        if !(v > 0.0) {
            return Err(Error::ConstructionFailure(format!(
                "blended warping function is nonpositive ({v:.3e}) at r = {}",
                r_cone + x * h
            )));
        }
        if !(d > 0.0) {
            return Err(Error::ConstructionFailure(format!(
                "blended warping function is not increasing at r = {} (phi' = {:.3e})",
                r_cone + x * h,
                d / h
            )));
        }
    }
    Ok(profile)
}

/// Region of the radial axis a point falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// (0, r_cone]: flat cone.
    Cone,
    /// (r_cone, r_asym): blend.
    Blend,
    /// [r_asym, ∞): paraboloid.
    Paraboloid,
}

impl APProfile {
    /// Replace the tail perturbation of f′ and the nominal decay rate μ.
    pub fn with_tail(mut self, tail: Tail, mu: f64) -> Self {
        self.tail = tail;
        self.mu = mu;
        self
    }

    /// Ambient dimension n.
    pub fn n(&self) -> usize {
        self.n
    }
    /// Cross-section scale (g_X = scale · g_round).
    pub fn scale(&self) -> f64 {
        self.scale
    }
    /// Outer radius of the cone plateau.
    pub fn r_cone(&self) -> f64 {
        self.r_cone
    }
    /// Inner radius of the paraboloid plateau.
    pub fn r_asym(&self) -> f64 {
        self.r_asym
    }
    /// Nominal decay rate μ of the AP conditions.
    pub fn mu(&self) -> f64 {
        self.mu
    }
    /// Tail perturbation of f′.
    pub fn tail(&self) -> Tail {
        self.tail
    }

    /// Region containing r.
    pub fn region(&self, r: f64) -> Region {
        if r <= self.r_cone {
            Region::Cone
        } else if r < self.r_asym {
            Region::Blend
        } else {
            Region::Paraboloid
        }
    }

    fn blend_x(&self, r: f64) -> (f64, f64) {
        let h = self.r_asym - self.r_cone;
        ((r - self.r_cone) / h, h)
    }

    /// φ, φ′, φ″ at r > 0.
    pub fn phi_derivs(&self, r: f64) -> [f64; 3] {
        match self.region(r) {
            Region::Cone => [r, 1.0, 0.0],
            Region::Blend => {
                let (x, h) = self.blend_x(r);
                let [v, d1, d2, _] = self.phi_blend.eval(x);
                [v, d1 / h, d2 / (h * h)]
            }
            Region::Paraboloid => {
                let v = (self.scale * r).sqrt();
                [v, 0.5 * v / r, -0.25 * v / (r * r)]
            }
        }
    }

    /// Warping function φ(r).
    pub fn phi(&self, r: f64) -> f64 {
        self.phi_derivs(r)[0]
    }

    /// Warping against g_X: ψ = φ/√scale (ψ = √r on the outer plateau).
    pub fn psi(&self, r: f64) -> f64 {
        match self.region(r) {
            Region::Paraboloid => r.sqrt(),
            _ => self.phi(r) / self.scale.sqrt(),
        }
    }

    /// Logarithmic derivative φ′/φ (= ψ′/ψ).
    pub fn log_phi_prime(&self, r: f64) -> f64 {
        match self.region(r) {
            Region::Cone => 1.0 / r,
            Region::Paraboloid => 0.5 / r,
            Region::Blend => {
                let [v, d, _] = self.phi_derivs(r);
                d / v
            }
        }
    }

    fn switch(&self, r: f64) -> [f64; 3] {
        let a = self.r_asym;
        if r <= a {
            [0.0; 3]
        } else if r >= 2.0 * a {
            [1.0, 0.0, 0.0]
        } else {
            let [v, d1, d2, _] = SMOOTHSTEP.eval((r - a) / a);
            [v, d1 / a, d2 / (a * a)]
        }
    }

    /// f′, f″, f‴ at r > 0.
    pub fn f_derivs(&self, r: f64) -> [f64; 3] {
        let base = match self.region(r) {
            Region::Cone => [0.0; 3],
            Region::Paraboloid => [-1.0, 0.0, 0.0],
            Region::Blend => {
                let (x, h) = self.blend_x(r);
                let [s0, s1, s2, _] = SMOOTHSTEP.eval(x);
                [-s0, -s1 / h, -s2 / (h * h)]
            }
        };
        if self.tail == Tail::Exact || r <= self.r_asym {
            return base;
        }
        let [g0, g1, g2] = self.tail.eval(r);
        let [w0, w1, w2] = self.switch(r);
        [base[0] + w0 * g0, base[1] + w1 * g0 + w0 * g1, base[2] + w2 * g0 + 2.0 * w1 * g1 + w0 * g2]
    }

    /// f′(r).
    pub fn f_prime(&self, r: f64) -> f64 {
        self.f_derivs(r)[0]
    }

    /// Potential f(r), normalised by f = 0 on the cone.
    pub fn f(&self, r: f64) -> f64 {
        let h = self.r_asym - self.r_cone;
        let blend_total = -h * SMOOTHSTEP.integral(1.0);
        match self.region(r) {
            Region::Cone => 0.0,
            Region::Blend => -h * SMOOTHSTEP.integral((r - self.r_cone) / h),
            Region::Paraboloid => {
                let mut f = blend_total - (r - self.r_asym);
                if self.tail != Tail::Exact {
                    f += self.tail_integral(r);
                }
                f
            }
        }
    }

    /// ∫_{r_asym}^{r} (switch · g) by composite Simpson quadrature.
    fn tail_integral(&self, r: f64) -> f64 {
        let a = self.r_asym;
        let steps = (((r - a) * 8.0).ceil() as usize).clamp(16, 2_000_000) & !1;
        let h = (r - a) / steps as f64;
        let g = |s: f64| self.switch(s)[0] * self.tail.eval(s)[0];
        let mut acc = g(a) + g(r);
        for k in 1..steps {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * g(a + k as f64 * h);
        }
        acc * h / 3.0
    }

    /// Scalar η multiplying g − dr² in the AP expansion: 2rφ′/φ − 1.
    pub fn eta(&self, r: f64) -> f64 {
        match self.region(r) {
            Region::Cone => 1.0,
            Region::Paraboloid => 0.0,
            Region::Blend => 2.0 * r * self.log_phi_prime(r) - 1.0,
        }
    }

    /// A1(r) = (n−1)φ′/φ − f′ (without domain check).
    pub(crate) fn a1_raw(&self, r: f64) -> f64 {
        (self.n as f64 - 1.0) * self.log_phi_prime(r) - self.f_prime(r)
    }

    /// A1′(r) in closed form (without domain check).
    pub(crate) fn a1_prime_raw(&self, r: f64) -> f64 {
        let [v, d1, d2] = self.phi_derivs(r);
        let l = d1 / v;
        (self.n as f64 - 1.0) * (d2 / v - l * l) - self.f_derivs(r)[1]
    }

    /// 1/ψ(r)² = scale/φ(r)².
    pub(crate) fn inv_psi_sq(&self, r: f64) -> f64 {
        match self.region(r) {
            Region::Paraboloid => 1.0 / r,
            _ => {
                let p = self.phi(r);
                self.scale / (p * p)
            }
        }
    }

    /// ln(ρ^{(1−n)/2} ψ(ρ)^{n−1}): the level-set area density relative to g_X,
    /// normalised so that it vanishes on the outer plateau.
    pub(crate) fn log_area_weight(&self, rho: f64) -> f64 {
        match self.region(rho) {
            Region::Paraboloid => 0.0,
            _ => (self.n as f64 - 1.0) * (self.psi(rho).ln() - 0.5 * rho.ln()),
        }
    }

    /// ρ^{(1−n)/2} ψ(ρ)^{n−1}.
    pub fn area_weight(&self, rho: f64) -> f64 {
        self.log_area_weight(rho).exp()
    }
}

fn check_positive(r: f64) -> Result<()> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("radius must be positive and finite, got {r}")));
    }
    Ok(())
}

/// Coefficients of the separated radial equation R″ + A1 R′ + A0 R = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialODECoefficients {
    profile: APProfile,
    lambda: f64,
}

/// Separated coefficients for eigenvalue λ of −Δ_{g_X}:
/// A1 = (n−1)φ′/φ − f′, A0 = −λ/ψ², q = ¼A1² + ½A1′ − A0.
pub fn drift_coefficients(p: &APProfile, lambda: f64) -> Result<RadialODECoefficients> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return invalid(format!("eigenvalue must be nonnegative, got {lambda}"));
    }
    Ok(RadialODECoefficients { profile: p.clone(), lambda })
}

impl RadialODECoefficients {
    /// Eigenvalue λ these coefficients belong to.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    /// First-order coefficient A1(r).
    pub fn a1(&self, r: f64) -> Result<f64> {
        check_positive(r)?;
        Ok(self.profile.a1_raw(r))
    }
    /// Closed-form derivative A1′(r).
    pub fn a1_prime(&self, r: f64) -> Result<f64> {
        check_positive(r)?;
        Ok(self.profile.a1_prime_raw(r))
    }
    /// Zeroth-order coefficient A0(r) = −λ/ψ².
    pub fn a0(&self, r: f64) -> Result<f64> {
        check_positive(r)?;
        Ok(-self.lambda * self.profile.inv_psi_sq(r))
    }
    /// Liouville–Green potential q = ¼A1² + ½A1′ − A0.
    pub fn q(&self, r: f64) -> Result<f64> {
        let a1 = self.a1(r)?;
        Ok(0.25 * a1 * a1 + 0.5 * self.a1_prime(r)? - self.a0(r)?)
    }
}

/// Mean curvature of the level set {r = ρ}: (n−1)φ′(ρ)/φ(ρ).
pub fn mean_curvature(p: &APProfile, rho: f64) -> Result<f64> {
    check_positive(rho)?;
    Ok((p.n as f64 - 1.0) * p.log_phi_prime(rho))
}

/// η(r) = 2rφ′/φ − 1, the coefficient of g − dr² in the AP expansion.
pub fn eta_coefficient(p: &APProfile, r: f64) -> Result<f64> {
    check_positive(r)?;
    Ok(p.eta(r))
}

/// Slack allowed between a fitted exponent and its requirement.
pub const CERTIFICATE_FIT_SLACK: f64 = 0.05;

/// One line of a decay certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateLine {
    /// Short identifier, e.g. `f''`.
    pub quantity: &'static str,
    /// Which family of conditions the line belongs to.
    pub condition: &'static str,
    /// Fitted decay exponent (∞ when exact).
    pub exponent: f64,
    /// Required exponent.
    pub required: f64,
    /// Fit quality (1 when exact).
    pub r_squared: f64,
    /// True when the quantity vanishes identically on the ladder.
    pub exact: bool,
    /// Verdict.
    pub pass: bool,
}

/// Decay certificate of a profile.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    /// Ladder on which the quantities were sampled.
    pub ladder: Vec<f64>,
    /// Lines in fixed order: η, f′+1, f″, f‴.
    pub lines: Vec<CertificateLine>,
}

impl CertificateReport {
    /// True iff every line passes.
    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.pass)
    }

    /// First failing line, if any.
    pub fn first_failure(&self) -> Option<&CertificateLine> {
        self.lines.iter().find(|l| !l.pass)
    }

    /// CSV with columns quantity, condition, exponent, required, r_squared, pass.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("quantity,condition,fitted_exponent,required_exponent,r_squared,pass\n");
        for l in &self.lines {
            let e = if l.exact { "exact".to_string() } else { format!("{:.6}", l.exponent) };
            let _ = writeln!(
                out,
                "{},{},{},{:.3},{:.6},{}",
                l.quantity,
                l.condition,
                e,
                l.required,
                l.r_squared,
                if l.pass { "pass" } else { "fail" }
            );
        }
        out
    }

    /// Human-readable block.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let lo = self.ladder.first().copied().unwrap_or(0.0);
        let hi = self.ladder.last().copied().unwrap_or(0.0);
        let _ = writeln!(out, "decay certificate on r in [{lo:.4e}, {hi:.4e}] ({} points)", self.ladder.len());
        for l in &self.lines {
            let e = if l.exact { "exact".to_string() } else { format!("{:.4} (R2 {:.4})", l.exponent, l.r_squared) };
            let _ = writeln!(
                out,
                "  {:<6} [{}] exponent {} required >= {:.2}: {}",
                l.quantity,
                l.condition,
                e,
                l.required,
                if l.pass { "PASS" } else { "FAIL" }
            );
        }
        let _ = writeln!(out, "overall: {}", if self.passed() { "PASS" } else { "FAIL" });
        out
    }
}

/// Certificate on the default ladder: 64 points per decade on
/// [10 r_asym, 10⁴ r_asym], fitted over the top decade.
pub fn ap_certificate(p: &APProfile) -> Result<CertificateReport> {
    let ladder = geometric_ladder(10.0 * p.r_asym, 1e4 * p.r_asym, 64);
    ap_certificate_on(p, &ladder)
}

/// Certificate on an explicit ladder.
///
/// For each of |η|, |f′+1|, |f″|, |f‴| the monotone envelope
/// sup_{s ≥ r} |q(s)| (over the ladder) is fitted log–log over the top decade
/// of the ladder, and the decay exponent is compared with its requirement
/// (μ for η; 1, 3/2, 3/2 for the potential). Quantities vanishing identically
/// are reported as exact.
pub fn ap_certificate_on(p: &APProfile, ladder: &[f64]) -> Result<CertificateReport> {
    if ladder.windows(2).any(|w| !(w[1] > w[0])) || ladder.first().is_none_or(|r| !(*r > 0.0)) {
        return invalid("certificate ladder must be positive and strictly increasing");
    }
    let top = *ladder.last().expect("nonempty");
    let window: Vec<usize> = (0..ladder.len()).filter(|&j| ladder[j] >= top / 10.0 * (1.0 - 1e-12)).collect();
    if window.len() < 4 {
        return invalid(format!(
            "certificate needs at least 4 ladder points in its top decade, got {}",
            window.len()
        ));
    }
    type Sampler<'a> = Box<dyn Fn(f64) -> f64 + 'a>;
    let specs: [(&'static str, &'static str, f64, Sampler); 4] = [
        ("eta", "AP metric decay", p.mu, Box::new(|r| p.eta(r).abs())),
        ("f'+1", "potential decay", 1.0, Box::new(|r| (p.f_prime(r) + 1.0).abs())),
        ("f''", "potential decay", 1.5, Box::new(|r| p.f_derivs(r)[1].abs())),
        ("f'''", "potential decay", 1.5, Box::new(|r| p.f_derivs(r)[2].abs())),
    ];
    let mut lines = Vec::new();
    for (quantity, condition, required, sample) in specs {
        let values: Vec<f64> = ladder.iter().map(|r| sample(*r)).collect();
        let mut envelope = values.clone();
        for j in (0..envelope.len().saturating_sub(1)).rev() {
            envelope[j] = envelope[j].max(envelope[j + 1]);
        }
        let exact = window.iter().all(|&j| envelope[j] == 0.0);
        let (exponent, r_squared) = if exact {
            (f64::INFINITY, 1.0)
        } else if window.iter().any(|&j| envelope[j] == 0.0) {
            // A tail that vanishes beyond some radius decays faster than any power.
            (f64::INFINITY, 1.0)
        } else {
            let x: Vec<f64> = window.iter().map(|&j| ladder[j].ln()).collect();
            let y: Vec<f64> = window.iter().map(|&j| envelope[j].ln()).collect();
            let line = fit_line(&x, &y)?;
            (-line.slope, line.r_squared)
        };
        let pass = exponent >= required - CERTIFICATE_FIT_SLACK;
        lines.push(CertificateLine { quantity, condition, exponent, required, r_squared, exact, pass });
    }
    Ok(CertificateReport { ladder: ladder.to_vec(), lines })
}

/// Relative tolerance of the flow-map integration.
pub const FLOW_RTOL: f64 = 1e-10;

fn integrate_flow(p: &APProfile, r: f64, t: f64, rtol: f64) -> Result<f64> {
    check_positive(r)?;
    if !(t >= 0.0) || t > 0.9 * r {
        return invalid(format!("flow time must lie in [0, 0.9 r] = [0, {}], got {t}", 0.9 * r));
    }
    if t == 0.0 {
        return Ok(r);
    }
    let floor = 0.5 * p.r_cone;
    let mut dp = DormandPrince::new(|_s, y: &[f64; 1]| [p.f_prime(y[0].max(floor))], 0.0, [r], rtol, 1e-14);
    dp.advance_to(t)?;
    let v = dp.state()[0];
    if v <= floor {
        return Err(Error::OutOfWindow(format!(
            "flow trajectory from r = {r} reached {v} <= r_cone/2 before t = {t}"
        )));
    }
    Ok(v)
}

/// Flow of ∂_t φ_t = f′(φ_t), φ_0 = r, evaluated at time t ≤ 0.9 r.
pub fn flow_map(p: &APProfile, r: f64, t: f64) -> Result<f64> {
    integrate_flow(p, r, t, FLOW_RTOL)
}

/// |∂φ_t/∂r (central difference, step 10⁻⁴ r) − f′(φ_t(r))/f′(r)|.
///
/// The difference quotient is taken from flows integrated at relative
/// tolerance 10⁻¹³ so that integration error stays far below the 10⁻⁶
/// resolution the check is meant to certify.
pub fn flow_derivative_check(p: &APProfile, r: f64, t: f64) -> Result<f64> {
    check_positive(r)?;
    let fr = p.f_prime(r);
    if fr == 0.0 {
        return Err(Error::UndefinedRatio(format!("f'(r) vanishes at r = {r} (inner plateau)")));
    }
    let h = 1e-4 * r;
    if t > 0.9 * (r - h) {
        return invalid(format!("flow time {t} leaves the window at the difference stencil"));
    }
    let plus = integrate_flow(p, r + h, t, 1e-13)?;
    let minus = integrate_flow(p, r - h, t, 1e-13)?;
    let centre = integrate_flow(p, r, t, 1e-13)?;
    let fd = (plus - minus) / (2.0 * h);
    Ok((fd - p.f_prime(centre) / fr).abs())
}

/// Largest |φ_t(r) − (r − t)| over a sweep of radii and time fractions t = s·r.
pub fn flow_bound_sweep(p: &APProfile, radii: &[f64], time_fractions: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &r in radii {
        for &s in time_fractions {
            let t = s * r;
            worst = worst.max((flow_map(p, r, t)? - (r - t)).abs());
        }
    }
    Ok(worst)
}
