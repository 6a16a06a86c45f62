//! The single-experiment subcommands.

use std::sync::Arc;

use aplab::cross_section::dimension_count;
use aplab::dirichlet::{build_basis, liouville_battery, three_circles_battery_on, ConstructionConfig, OperatorSpec};
use aplab::fit::{dyadic_ladder, geometric_ladder, MIN_R_SQUARED};
use aplab::frequency::{frequency_ode_residual, i_log_derivative_check, pinching_report, separable_mixture, trace};
use aplab::geometry::{ap_certificate, flow_bound_sweep, flow_derivative_check};
use aplab::radial::solve_radial;
use aplab::{Error, Result};

use crate::config::RunConfig;
use crate::report::{Check, Report};

/// Largest admissible flow displacement constant.
const FLOW_BOUND: f64 = 5.0;
/// Largest admissible residual of the flow derivative identity.
const FLOW_DERIVATIVE_TOL: f64 = 1e-6;
/// Largest admissible vertex value of a constructed non-constant field.
const VERTEX_TOL: f64 = 1e-8;

/// Geometry certificate of the profile plus the flow-map bounds.
pub fn certify(cfg: &RunConfig, report: &mut Report) -> Result<()> {
    let p = cfg.build_profile()?;
    let cert = ap_certificate(&p)?;
    report.artifact("certificate.csv", cert.to_csv());
    for l in &cert.lines {
        let exponent = if l.exact { "exact".to_string() } else { format!("{:.4}", l.exponent) };
        report.check(
            Check::new(
                "ap-certificate",
                format!("{} {}", l.condition, l.quantity),
                l.pass,
                format!("fitted exponent {exponent}, required >= {:.2}, R2 {:.4}", l.required, l.r_squared),
            )
            .warn_if(!l.exact && l.r_squared < MIN_R_SQUARED),
        );
    }
    let radii = geometric_ladder(10.0, 1e3, 10);
    let fractions: Vec<f64> = (0..=18).map(|i| 0.05 * i as f64).collect();
    let c = flow_bound_sweep(&p, &radii, &fractions)?;
    report.check(Check::new("flow-map", "sup |phi_t(r) - (r - t)| over r in [10, 1e3], t <= 0.9 r", c <= FLOW_BOUND, format!("C = {c:.6}")));
    let mut worst: f64 = 0.0;
    for &r in &radii {
        for &s in &fractions {
            worst = worst.max(flow_derivative_check(&p, r, s.min(0.8999) * r)?);
        }
    }
    report.check(Check::new(
        "flow-map",
        "derivative identity d(phi_t)/dr = f'(phi_t)/f'(r)",
        worst < FLOW_DERIVATIVE_TOL,
        format!("max residual {worst:.3e}"),
    ));
    Ok(())
}

/// Radial solutions and growth exponents per eigenvalue.
pub fn radial(cfg: &RunConfig, report: &mut Report) -> Result<()> {
    let p = cfg.build_profile()?;
    let lambdas = match &cfg.radial.lambdas {
        Some(l) => l.clone(),
        None => cfg.build_spectrum()?.eigenvalues().to_vec(),
    };
    let mut summary = String::from("lambda,alpha,growth_exponent,final_frequency,flagged\n");
    let n = p.n() as f64;
    for (i, &lambda) in lambdas.iter().enumerate() {
        let sol = solve_radial(&p, lambda, cfg.radial.r_max)?;
        report.artifact(format!("radial_{i:02}.csv"), sol.to_csv());
        summary.push_str(&format!(
            "{lambda:.17e},{:.17e},{:.17e},{:.17e},{}\n",
            sol.alpha, sol.growth_exponent, sol.final_frequency, sol.flagged
        ));
        let err = (sol.growth_exponent - lambda).abs();
        report.check(
            Check::new(
                "radial-growth",
                format!("growth exponent of R for lambda = {lambda}"),
                err < cfg.radial.growth_tol,
                format!("exponent {:.6}, |exponent - lambda| = {err:.3e}, r U at r_max {:.6}", sol.growth_exponent, sol.final_frequency),
            )
            .warn_if(sol.flagged),
        );
        let a = sol.alpha;
        let residual = (a * (a + n - 2.0) - p.scale() * lambda).abs();
        report.check(Check::new(
            "indicial-root",
            format!("vertex exponent for lambda = {lambda}"),
            residual < 1e-12,
            format!("alpha {a:.12}, residual {residual:.3e}"),
        ));
    }
    report.artifact("radial.csv", summary);
    Ok(())
}

/// Frequency traces, residual convergence and Cauchy–Schwarz gaps.
pub fn freq(cfg: &RunConfig, report: &mut Report) -> Result<()> {
    let f = &cfg.freq;
    let p = cfg.build_profile()?;
    let spec = cfg.build_spectrum()?;
    let [lo, hi] = f.ladder;
    let grid = Arc::new(geometric_ladder(p.r_cone(), 2.0 * hi, f.grid_per_decade));
    let [band_lo, band_hi] = f.ratio_band;
    for (i, modes) in f.fields.iter().enumerate() {
        let mut w = vec![0.0; spec.mode_count()];
        for &(m, a) in modes {
            let slot = w
                .get_mut(m)
                .ok_or_else(|| Error::InvalidArgument(format!("freq.fields[{i}]: mode {m} is not retained")))?;
            *slot += a;
        }
        let u = separable_mixture(p.clone(), spec.clone(), &w, grid.clone())?;
        let coarse = trace(&u, &p, &geometric_ladder(lo, hi, f.per_decade))?;
        let fine = trace(&u, &p, &geometric_ladder(lo, hi, 2 * f.per_decade))?;
        report.artifact(format!("freq_{i:02}.csv"), coarse.to_csv());
        for (what, c, fn_) in [
            ("frequency ODE", frequency_ode_residual(&coarse, &p)?.max_abs(), frequency_ode_residual(&fine, &p)?.max_abs()),
            ("I log-derivative", i_log_derivative_check(&coarse)?.max_abs(), i_log_derivative_check(&fine)?.max_abs()),
        ] {
            let (ok, measured) = if c == 0.0 && fn_ == 0.0 {
                (true, "residual vanishes identically".to_string())
            } else {
                let ratio = c / fn_;
                ((band_lo..=band_hi).contains(&ratio), format!("halving ratio {ratio:.4} (coarse {c:.3e}, fine {fn_:.3e})"))
            };
            report.check(Check::new("frequency-identities", format!("field {i}: {what} residual is second order"), ok, measured));
        }
        let min_gap = coarse.cs_gap.iter().cloned().fold(f64::INFINITY, f64::min);
        report.check(Check::new(
            "cauchy-schwarz-gap",
            format!("field {i}: G - U^2/rho >= -{:e}", f.cs_tol),
            min_gap >= -f.cs_tol,
            format!("min gap {min_gap:.3e}"),
        ));
        let levels: std::collections::BTreeSet<usize> =
            modes.iter().filter(|(_, a)| *a != 0.0).map(|(m, _)| *m).collect();
        if levels.len() == 1 {
            let max_gap = coarse.cs_gap.iter().cloned().fold(0.0, f64::max);
            report.check(Check::new(
                "cauchy-schwarz-gap",
                format!("field {i}: single mode has vanishing gap"),
                max_gap < f.cs_tol,
                format!("max gap {max_gap:.3e}"),
            ));
        }
    }
    Ok(())
}

/// Radius from which the three-circles battery must be clean.
pub fn clean_from(cfg: &RunConfig, op: &OperatorSpec) -> f64 {
    cfg.threecircles.clean_from.unwrap_or(if op.is_separable() { 64.0 } else { 256.0 })
}

/// Three-circles batteries on the configured operator.
pub fn threecircles(cfg: &RunConfig, report: &mut Report) -> Result<()> {
    let t = &cfg.threecircles;
    let op = cfg.operator()?;
    let from = clean_from(cfg, &op);
    let ladder = dyadic_ladder(t.ladder_exponents[0], t.ladder_exponents[1]);
    for (i, &d) in t.d.iter().enumerate() {
        let rep = three_circles_battery_on(&op, d, &ladder, t.trials, cfg.seed, t.ball)?;
        report.artifact(format!("threecircles_{i:02}.csv"), rep.to_csv());
        let v = rep.violations_from(from);
        report.check(Check::new(
            "three-circles",
            format!("d = {d}: no violations at radii >= {from}"),
            v == 0,
            format!("{v} violations in {} trials; clean from {:?}", t.trials, rep.clean_from()),
        ));
    }
    Ok(())
}

/// Liouville battery on the configured operator.
pub fn liouville(cfg: &RunConfig, report: &mut Report) -> Result<()> {
    let op = cfg.operator()?;
    let rep = liouville_battery(&op, cfg.liouville.trials, cfg.seed)?;
    report.artifact("liouville.csv", rep.to_csv());
    let floor = rep.lambda_2 - cfg.liouville.tolerance;
    let min = rep.overall_min();
    report.check(Check::new(
        "liouville",
        format!("deflated remainders have far-ladder U >= lambda_2 - {}", cfg.liouville.tolerance),
        min.is_some_and(|m| m >= floor),
        format!("min U {}, floor {floor:.4}, {} vacuous trials", min.map_or("none".into(), |m| format!("{m:.6}")), rep.vacuous()),
    ));
    Ok(())
}

/// Basis build with cardinality, Gram and pinching checks.
pub fn basis(cfg: &RunConfig, report: &mut Report) -> Result<()> {
    let op = cfg.operator()?;
    basis_checks(cfg, &op, cfg.basis.d, "", report)
}

/// Build the basis of `op` for growth cap `d` and record its checks; `label`
/// prefixes check names and artifact files.
pub fn basis_checks(cfg: &RunConfig, op: &OperatorSpec, d: f64, label: &str, report: &mut Report) -> Result<()> {
    let p = op.profile();
    let mut construction = ConstructionConfig::for_profile(p);
    construction.seed = cfg.seed;
    let b = build_basis(op, d, &construction)?;
    report.artifact(format!("{label}basis.csv"), b.to_csv());
    let want = dimension_count(op.spectrum(), d)?;
    report.check(Check::new(
        "dimension-count",
        format!("{label}basis size for d = {d}"),
        b.len() == want,
        format!("{} fields, expected {want}", b.len()),
    ));
    let angle = b.max_far_angle();
    report.check(Check::new(
        "asymptotic-orthogonality",
        format!("{label}far Gram angles at rho = {}", b.far_radius),
        angle < cfg.basis.far_angle_tol,
        format!("max off-diagonal angle {angle:.3e}"),
    ));
    let bad: Vec<String> = b.fits.iter().filter(|(_, _, f)| !f.decays()).map(|(x, y, f)| format!("({x} {y}) {}", f.describe())).collect();
    report.check(Check::new(
        "asymptotic-orthogonality",
        format!("{label}pairwise angle fits decay with R2 >= {MIN_R_SQUARED}"),
        bad.is_empty(),
        if bad.is_empty() { format!("{} pairs", b.fits.len()) } else { bad.join("; ") },
    ));
    for (i, u) in b.fields.iter().enumerate() {
        if b.levels[i] == 0 {
            continue;
        }
        let rep = pinching_report(u, p, b.target_levels[i], &construction.fit_ladder)?;
        report.artifact(format!("{label}pinching_{i:02}.csv"), rep.to_csv());
        report.check(Check::new(
            "pinching",
            format!("{label}field {i} (lambda = {})", b.target_levels[i]),
            rep.all_conditions() && rep.uq_rate_ok(),
            format!(
                "U {}; Q {}; U-Q {}; separation {}; projection {}",
                rep.u_fit.describe(),
                rep.q_fit.describe(),
                rep.uq_fit.describe(),
                rep.separation_fit.describe(),
                rep.projection_fit.describe()
            ),
        ));
        let v = b.base_point_values[i];
        report.check(Check::new(
            "vertex-normalisation",
            format!("{label}field {i} vanishes at the vertex"),
            v.abs() < VERTEX_TOL,
            format!("value {v:.3e}"),
        ));
    }
    Ok(())
}
