//! The complete verification suite: every check of the laboratory on the
//! configured profile, with battery sizes taken from the `[verify]` section.

use std::sync::Arc;
use std::time::{Duration, Instant};

use aplab::cross_section::dimension_count;
use aplab::dirichlet::{
    build_basis, liouville_battery, mean_value_sweep, model_three_circles, preservation_experiment, random_boundary,
    three_circles_battery_on, trial_rng, BoundaryData, ConstructionConfig, DirichletSolver, HarmonicBasis, OperatorSpec,
};
use aplab::fit::{dyadic_ladder, fit_decay, fit_line, geometric_ladder};
use aplab::frequency::{add, frequency_ode_residual, i_log_derivative_check, pinching_report, separable_mixture, trace, ModeField};
use aplab::geometry::{flow_bound_sweep, flow_derivative_check};
use aplab::radial::{indicial_root, lg_exponent_check, solve_radial, vertex_exponent};
use aplab::Result;
use rand::Rng;

use crate::commands::clean_from;
use crate::config::RunConfig;
use crate::report::{Check, Report};

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, Duration)> {
    let start = Instant::now();
    let v = f()?;
    Ok((v, start.elapsed()))
}

/// Eigenvalues λ > 0 retained by the spectrum, at most three.
fn growth_lambdas(cfg: &RunConfig) -> Result<Vec<f64>> {
    Ok(cfg.build_spectrum()?.eigenvalues().iter().cloned().filter(|l| *l > 0.0).take(3).collect())
}

fn radial_growth(cfg: &RunConfig) -> Result<Check> {
    let p = cfg.build_profile()?;
    let tol = cfg.radial.growth_tol;
    let mut ok = true;
    let mut parts = Vec::new();
    for lambda in growth_lambdas(cfg)? {
        let (sol, took) = timed(|| solve_radial(&p, lambda, cfg.radial.r_max))?;
        let e = (sol.growth_exponent - lambda).abs();
        let agree = (sol.growth_exponent - sol.final_frequency).abs();
        ok &= e < tol && agree < tol && took < Duration::from_secs(1);
        parts.push(format!("lambda {lambda}: |fit-lambda| {e:.2e}, |fit-U(r_max)| {agree:.2e}, {:.3}s", took.as_secs_f64()));
    }
    Ok(Check::new("radial-growth", "criterion 1: growth exponents on [1e3, r_max]", ok, parts.join("; ")))
}

fn indicial_and_lg(cfg: &RunConfig) -> Result<Check> {
    let p = cfg.build_profile()?;
    let n = p.n();
    let mut worst: f64 = 0.0;
    for lambda in cfg.build_spectrum()?.eigenvalues() {
        let a = indicial_root(n, *lambda);
        worst = worst.max((a * (a + n as f64 - 2.0) - lambda).abs());
        let b = vertex_exponent(&p, *lambda);
        worst = worst.max((b * (b + n as f64 - 2.0) - p.scale() * lambda).abs());
    }
    let radii = geometric_ladder(1e3, 1e5, 16);
    let mut min_tau = f64::INFINITY;
    let mut accepted = true;
    for lambda in growth_lambdas(cfg)? {
        let pairs: Vec<(f64, f64)> = radii.iter().map(|&r| lg_exponent_check(&p, lambda, r)).collect::<Result<_>>()?;
        for v in [pairs.iter().map(|x| x.0).collect::<Vec<_>>(), pairs.iter().map(|x| x.1).collect()] {
            let fit = fit_decay(&radii, &v, 1e-300)?;
            accepted &= fit.accepted();
            if !fit.exact {
                min_tau = min_tau.min(fit.tau);
            }
        }
    }
    Ok(Check::new(
        "indicial-and-lg",
        "criterion 2: indicial residual < 1e-12, LG exponents >= 1.9",
        worst < 1e-12 && min_tau >= 1.9 && accepted,
        format!("max indicial residual {worst:.2e}; min LG exponent {min_tau:.4}; fits accepted {accepted}"),
    ))
}

fn frequency_identities(cfg: &RunConfig) -> Result<Check> {
    let p = cfg.build_profile()?;
    let spec = cfg.build_spectrum()?;
    let k = spec.mode_count();
    let unit = |m: usize| {
        let mut v = vec![0.0; k];
        v[m] = 1.0;
        v
    };
    let grid = Arc::new(geometric_ladder(p.r_cone(), 2048.0, 2048));
    let mut cases = vec![unit(1), unit(k / 3), unit(k - 5)];
    let mut mix = unit(1);
    mix[k / 4] = 1.0;
    cases.push(mix);
    let mut mix = unit(2);
    mix[0] = 0.3;
    mix[k - 4] = 0.05;
    cases.push(mix);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for w in &cases {
        let u = separable_mixture(p.clone(), spec.clone(), w, grid.clone())?;
        let coarse = trace(&u, &p, &geometric_ladder(16.0, 1024.0, 64))?;
        let fine = trace(&u, &p, &geometric_ladder(16.0, 1024.0, 128))?;
        for r in [
            frequency_ode_residual(&coarse, &p)?.max_abs() / frequency_ode_residual(&fine, &p)?.max_abs(),
            i_log_derivative_check(&coarse)?.max_abs() / i_log_derivative_check(&fine)?.max_abs(),
        ] {
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    let light = Arc::new(geometric_ladder(p.r_cone(), 1024.0, 256));
    let ladder = geometric_ladder(0.6, 1000.0, 16);
    let modes: Vec<ModeField> =
        (0..k).map(|m| separable_mixture(p.clone(), spec.clone(), &unit(m), light.clone())).collect::<Result<_>>()?;
    let mut single: f64 = 0.0;
    for u in &modes[1..] {
        single = single.max(trace(u, &p, &ladder)?.cs_gap.iter().cloned().fold(0.0, f64::max));
    }
    let refs: Vec<&ModeField> = modes.iter().collect();
    let mut rng = trial_rng(cfg.seed.wrapping_add(3), 0);
    let mut gap = f64::INFINITY;
    for _ in 0..cfg.verify.cs_mixtures {
        let w: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0) * 10f64.powf(rng.random_range(-3.0..0.0))).collect();
        let t = trace(&add(&refs, &w)?, &p, &ladder)?;
        for j in 0..t.rho.len() {
            gap = gap.min(t.cs_gap[j]).min((t.g[j] - t.u[j] * t.u[j] / t.rho[j]) / t.g[j].max(1e-300));
        }
    }
    let [a, b] = cfg.freq.ratio_band;
    let tol = cfg.freq.cs_tol;
    Ok(Check::new(
        "frequency-identities",
        "criterion 3: second-order residuals, Cauchy-Schwarz gap",
        lo >= a && hi <= b && gap >= -tol && single < tol,
        format!(
            "halving ratios in [{lo:.4}, {hi:.4}]; min gap over {} mixtures {gap:.2e}; max single-mode gap {single:.2e}",
            cfg.verify.cs_mixtures
        ),
    ))
}

fn model_three_circles_check(cfg: &RunConfig) -> Result<Check> {
    let spec = cfg.build_spectrum()?;
    let k = spec.mode_count();
    let top = *spec.eigenvalues().last().expect("nonempty spectrum");
    let ((counter, rigid), took) = timed(|| {
        let mut rng = trial_rng(cfg.seed.wrapping_add(4), 0);
        let mut counter = 0usize;
        for _ in 0..cfg.verify.model_samples {
            let a: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0) * 10f64.powf(rng.random_range(-3.0..0.0))).collect();
            let mut d = rng.random_range(0.05..top + 0.5);
            while spec.eigenvalues().iter().any(|l| (l - d).abs() < 1e-9) {
                d = rng.random_range(0.05..top + 0.5);
            }
            let (first, second) = model_three_circles(&a, d, &spec)?;
            counter += (first && !second) as usize;
        }
        let mut rigid = true;
        for level in 1..spec.level_count() {
            let mut a = vec![0.0; k];
            for m in spec.level_range(level) {
                a[m] = 0.3 + m as f64;
            }
            rigid &= model_three_circles(&a, spec.eigenvalues()[level], &spec)? == (true, true);
        }
        Ok((counter, rigid))
    })?;
    Ok(Check::new(
        "model-three-circles",
        "criterion 4: model implication and rigidity",
        counter == 0 && rigid && took < Duration::from_secs(5),
        format!("{counter} counterexamples in {} samples; rigidity {rigid}; {:.2}s", cfg.verify.model_samples, took.as_secs_f64()),
    ))
}

fn three_circles_check(cfg: &RunConfig, separable: &OperatorSpec, coupled: &OperatorSpec) -> Result<Check> {
    let t = &cfg.threecircles;
    let ladder = dyadic_ladder(t.ladder_exponents[0], t.ladder_exponents[1]);
    let (parts, took) = timed(|| {
        let mut parts = Vec::new();
        for op in [separable, coupled] {
            let from = clean_from(cfg, op);
            for &d in &t.d {
                let rep = three_circles_battery_on(op, d, &ladder, cfg.verify.battery_trials, cfg.seed.wrapping_add(5), t.ball)?;
                parts.push((op.is_separable(), d, from, rep.violations_from(from)));
            }
        }
        Ok(parts)
    })?;
    let ok = parts.iter().all(|x| x.3 == 0) && took < Duration::from_secs(120);
    let text: Vec<String> = parts
        .iter()
        .map(|(s, d, from, v)| format!("{} d={d}: {v} violations from {from}", if *s { "separable" } else { "coupled" }))
        .collect();
    Ok(Check::new(
        "three-circles",
        "criterion 5: three-circles batteries",
        ok,
        format!("{}; {:.1}s", text.join(", "), took.as_secs_f64()),
    ))
}

type Build = (bool, f64, HarmonicBasis, Duration, Arc<OperatorSpec>);

fn bases(cfg: &RunConfig, separable: &OperatorSpec, coupled: &OperatorSpec) -> Result<Vec<Build>> {
    let mut construction = ConstructionConfig::for_profile(separable.profile());
    construction.seed = cfg.seed;
    let mut out = Vec::new();
    for op in [separable, coupled] {
        let op = Arc::new(op.clone());
        for &d in &cfg.verify.basis_d {
            let (b, took) = timed(|| build_basis(&op, d, &construction))?;
            out.push((op.is_separable(), d, b, took, op.clone()));
        }
    }
    Ok(out)
}

fn basis_check(cfg: &RunConfig, builds: &[Build]) -> Result<Check> {
    let mut ok = true;
    let mut parts = Vec::new();
    for (sep, d, b, took, op) in builds {
        let want = dimension_count(op.spectrum(), *d)?;
        let angle = b.max_far_angle();
        let fits = b.fits.iter().all(|(_, _, f)| f.decays());
        ok &= b.len() == want && angle < cfg.basis.far_angle_tol && fits && *took < Duration::from_secs(300);
        parts.push(format!(
            "{} d={d}: {}/{want} fields, far angle {angle:.2e}, fits {fits}, {:.1}s",
            if *sep { "separable" } else { "coupled" },
            b.len(),
            took.as_secs_f64()
        ));
    }
    Ok(Check::new("dimension-count", "criterion 6: basis size, far Gram, angle fits", ok, parts.join("; ")))
}

fn pinching_check(builds: &[Build]) -> Result<Check> {
    let top = builds.iter().map(|b| b.1).fold(f64::NEG_INFINITY, f64::max);
    let (mut checked, mut failed) = (0usize, Vec::new());
    for (sep, d, b, _, op) in builds {
        if *d < top {
            continue;
        }
        let ladder = ConstructionConfig::for_profile(op.profile()).fit_ladder;
        for (i, u) in b.fields.iter().enumerate() {
            if b.levels[i] == 0 {
                continue;
            }
            let rep = pinching_report(u, op.profile(), b.target_levels[i], &ladder)?;
            checked += 1;
            if !(rep.all_conditions() && rep.uq_rate_ok()) {
                failed.push(format!("{}#{i}", if *sep { "separable" } else { "coupled" }));
            }
        }
    }
    Ok(Check::new(
        "pinching",
        "criterion 7: every constructed non-constant field is pinched",
        failed.is_empty() && checked > 0,
        format!("{checked} fields checked; failing: [{}]", failed.join(" ")),
    ))
}

fn liouville_check(cfg: &RunConfig, coupled: &OperatorSpec) -> Result<Check> {
    let rep = liouville_battery(coupled, cfg.verify.liouville_trials, cfg.seed.wrapping_add(8))?;
    let floor = rep.lambda_2 - cfg.liouville.tolerance;
    let min = rep.overall_min();
    Ok(Check::new(
        "liouville",
        "criterion 8: deflated remainders grow at least like lambda_2",
        min.is_some_and(|m| m >= floor),
        format!("min U {} vs floor {floor:.3}; {} vacuous", min.map_or("none".into(), |m| format!("{m:.6}")), rep.vacuous()),
    ))
}

fn flow_check(cfg: &RunConfig) -> Result<Check> {
    let p = cfg.build_profile()?;
    let radii = geometric_ladder(10.0, 1e3, 10);
    let fractions: Vec<f64> = (0..=18).map(|i| 0.05 * i as f64).collect();
    let c = flow_bound_sweep(&p, &radii, &fractions)?;
    let mut worst: f64 = 0.0;
    for &r in &radii {
        for &s in &fractions {
            worst = worst.max(flow_derivative_check(&p, r, s.min(0.8999) * r)?);
        }
    }
    Ok(Check::new(
        "flow-map",
        "criterion 9: uniform flow displacement, derivative identity",
        c <= 5.0 && worst < 1e-6,
        format!("C = {c:.4}; max derivative residual {worst:.2e}"),
    ))
}

fn preservation_check(cfg: &RunConfig, coupled: &OperatorSpec) -> Result<Check> {
    let p = coupled.profile().clone();
    let spec = coupled.spectrum();
    let ball = 1024.0;
    let solver = DirichletSolver::new(coupled, ball)?;
    let end = coupled.support_end().max(p.r_asym());
    let start = coupled.couplings().iter().map(|c| c.s1).fold(end, f64::min);
    let near = [(start / 2.0, 2.0 * end), (0.75 * start, 1.5 * end), (start, end)];
    let far = [(4.0 * end, 16.0 * end), (8.0 * end, 32.0 * end), (16.0 * end, 64.0 * end)];
    let mut constant: f64 = 0.0;
    let mut drift: f64 = 0.0;
    for pair in 0..cfg.verify.preservation_pairs {
        let mut rng = trial_rng(cfg.seed.wrapping_add(10), pair);
        let u = solver.solve(&random_boundary(spec, ball, &mut rng)?)?;
        let level = 1 + pair % (spec.level_count() - 1);
        let within: Vec<f64> = (0..spec.multiplicities()[level]).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v = solver.solve(&BoundaryData::level(spec, ball, level, &within)?)?;
        for (a, b) in near {
            constant = constant.max(preservation_experiment(&u, &v, &p, a, b)?.required_constant());
        }
        for (a, b) in far.iter().filter(|w| w.1 <= ball) {
            drift = drift.max(preservation_experiment(&u, &v, &p, *a, *b)?.lhs);
        }
    }
    Ok(Check::new(
        "preservation",
        "criterion 10: single fitted constant, no drift beyond the support",
        constant.is_finite() && drift < 1e-8,
        format!("fitted C = {constant:.3e} over {} pairs; far drift {drift:.2e}", cfg.verify.preservation_pairs),
    ))
}

fn mean_value_check(cfg: &RunConfig, coupled: &OperatorSpec) -> Result<Check> {
    let p = coupled.profile().clone();
    let solver = DirichletSolver::new(coupled, 1024.0)?;
    let radii = dyadic_ladder(6, 10);
    let x: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let mut worst = f64::NEG_INFINITY;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for trial in 0..cfg.verify.mean_value_solutions {
        let mut rng = trial_rng(cfg.seed.wrapping_add(11), trial);
        let u = solver.solve(&random_boundary(coupled.spectrum(), 1024.0, &mut rng)?)?;
        let ratios = mean_value_sweep(&u, &p, &radii, 0.25)?;
        lo = ratios.iter().cloned().fold(lo, f64::min);
        hi = ratios.iter().cloned().fold(hi, f64::max);
        let y: Vec<f64> = ratios.iter().map(|r| r.ln()).collect();
        worst = worst.max(fit_line(&x, &y)?.slope);
    }
    Ok(Check::new(
        "mean-value",
        format!("criterion 11: mean-value ratio slope <= {}", cfg.verify.mean_value_slope),
        worst <= cfg.verify.mean_value_slope,
        format!("max slope {worst:.4}; ratios within [{lo:.3}, {hi:.3}]"),
    ))
}

/// Run every criterion; an error inside one criterion fails that criterion only.
pub fn verify(cfg: &RunConfig, report: &mut Report) -> Result<()> {
    let separable = cfg.separable_operator()?;
    let coupled = cfg.operator()?;
    let failed = |tag: &'static str, name: &str, e: aplab::Error| Check::new(tag, name, false, format!("error: {e}"));
    let mut record = |tag: &'static str, name: &str, r: Result<Check>| report.check(r.unwrap_or_else(|e| failed(tag, name, e)));
    record("radial-growth", "criterion 1", radial_growth(cfg));
    record("indicial-and-lg", "criterion 2", indicial_and_lg(cfg));
    record("frequency-identities", "criterion 3", frequency_identities(cfg));
    record("model-three-circles", "criterion 4", model_three_circles_check(cfg));
    record("three-circles", "criterion 5", three_circles_check(cfg, &separable, &coupled));
    match bases(cfg, &separable, &coupled) {
        Ok(b) => {
            record("dimension-count", "criterion 6", basis_check(cfg, &b));
            record("pinching", "criterion 7", pinching_check(&b));
        }
        Err(e) => {
            record("dimension-count", "criterion 6", Err(e.clone()));
            record("pinching", "criterion 7", Err(e));
        }
    }
    record("liouville", "criterion 8", liouville_check(cfg, &coupled));
    record("flow-map", "criterion 9", flow_check(cfg));
    record("preservation", "criterion 10", preservation_check(cfg, &coupled));
    record("mean-value", "criterion 11", mean_value_check(cfg, &coupled));
    Ok(())
}
