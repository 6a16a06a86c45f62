//! Acceptance suite: one PASS/FAIL line per criterion, default configuration
//! (n = 3, sphere cross-section of scale 2 with λ = 0, 1, 3, 6, r_cone = 0.5,
//! r_asym = 2; coupled operator with one envelope on [4, 8], amplitude 0.3).
//!
//! Runs without the libtest harness so that criteria execute one after the
//! other and the measured runtimes are not distorted by concurrent tests.

mod common;

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use aplab::dirichlet::{
    build_basis, liouville_battery, mean_value_sweep, model_three_circles, preservation_experiment, random_boundary,
    three_circles_battery, trial_rng, BoundaryData, ConstructionConfig, DirichletSolver, HarmonicBasis, OperatorSpec,
};
use aplab::fit::{dyadic_ladder, fit_decay, fit_line, geometric_ladder};
use aplab::frequency::{add, frequency_ode_residual, i_log_derivative_check, pinching_report, separable_mixture, trace, ModeField};
use aplab::geometry::{flow_bound_sweep, flow_derivative_check};
use aplab::radial::{indicial_root, lg_exponent_check, solve_radial, vertex_exponent};
use aplab::Result;
use common::{coupled_op, profile, separable_op, spectrum};
use rand::Rng;

/// Seed of the coupling matrix of the coupled operator.
const COUPLING_SEED: u64 = 7;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

/// 1. Radial growth exponents for λ ∈ {1, 3, 6}.
fn radial_growth() -> Result<Outcome> {
    let p = profile();
    let mut pass = true;
    let mut parts = Vec::new();
    for lambda in [1.0, 3.0, 6.0] {
        let start = Instant::now();
        let sol = solve_radial(&p, lambda, 1e5)?;
        let took = start.elapsed();
        let fit_err = (sol.growth_exponent - lambda).abs();
        let agree = (sol.growth_exponent - sol.final_frequency).abs();
        pass &= fit_err < 5e-3 && agree < 5e-3 && took < Duration::from_secs(1);
        parts.push(format!("λ={lambda}: |fit−λ|={fit_err:.2e} |fit−U(r_max)|={agree:.2e} {:.3}s", secs(took)));
    }
    outcome(pass, parts.join("; "))
}

/// 2. Indicial residuals and Liouville–Green decay exponents.
fn indicial_and_lg() -> Result<Outcome> {
    let p = profile();
    let mut worst_indicial: f64 = 0.0;
    for lambda in [0.0, 1.0, 2.0, 3.0, 6.0, 12.0] {
        let a = indicial_root(3, lambda);
        worst_indicial = worst_indicial.max((a * (a + 1.0) - lambda).abs());
    }
    for lambda in [1.0, 3.0, 6.0] {
        let a = vertex_exponent(&p, lambda);
        worst_indicial = worst_indicial.max((a * (a + 1.0) - p.scale() * lambda).abs());
    }
    let radii = geometric_ladder(1e3, 1e5, 16);
    let mut min_tau = f64::INFINITY;
    let mut all_accepted = true;
    for lambda in [1.0, 3.0, 6.0] {
        let pairs: Vec<(f64, f64)> = radii.iter().map(|&r| lg_exponent_check(&p, lambda, r)).collect::<Result<_>>()?;
        for comp in [0, 1] {
            let v: Vec<f64> = pairs.iter().map(|(a, b)| if comp == 0 { *a } else { *b }).collect();
            let fit = fit_decay(&radii, &v, 1e-300)?;
            all_accepted &= fit.accepted();
            min_tau = min_tau.min(if fit.exact { f64::INFINITY } else { fit.tau });
        }
    }
    outcome(
        worst_indicial < 1e-12 && min_tau >= 1.9 && all_accepted,
        format!("max indicial residual {worst_indicial:.2e}; min LG exponent {min_tau:.3} (fits accepted: {all_accepted})"),
    )
}

/// 3. Second-order residual convergence and the Cauchy–Schwarz gap.
fn frequency_identities() -> Result<Outcome> {
    let p = profile();
    let spec = spectrum();
    let k = spec.mode_count();
    let grid = Arc::new(geometric_ladder(0.5, 2048.0, 2048));
    let field = |w: &[(usize, f64)]| {
        let mut v = vec![0.0; k];
        for (m, a) in w {
            v[*m] = *a;
        }
        separable_mixture(p.clone(), spec.clone(), &v, grid.clone())
    };
    let cases: Vec<Vec<(usize, f64)>> = vec![
        vec![(1, 1.0)],
        vec![(5, 1.0)],
        vec![(11, 1.0)],
        vec![(1, 1.0), (4, 1.0)],
        vec![(0, 0.3), (2, 1.0), (12, 0.05)],
    ];
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for w in &cases {
        let u = field(w)?;
        let coarse = trace(&u, &p, &geometric_ladder(16.0, 1024.0, 64))?;
        let fine = trace(&u, &p, &geometric_ladder(16.0, 1024.0, 128))?;
        for ratio in [
            frequency_ode_residual(&coarse, &p)?.max_abs() / frequency_ode_residual(&fine, &p)?.max_abs(),
            i_log_derivative_check(&coarse)?.max_abs() / i_log_derivative_check(&fine)?.max_abs(),
        ] {
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
    }
    // Single modes and random mixtures on a lighter grid.
    let light = Arc::new(geometric_ladder(0.5, 1024.0, 256));
    let ladder = geometric_ladder(0.6, 1000.0, 16);
    let modes: Vec<ModeField> = (0..k)
        .map(|m| {
            let mut v = vec![0.0; k];
            v[m] = 1.0;
            separable_mixture(p.clone(), spec.clone(), &v, light.clone())
        })
        .collect::<Result<_>>()?;
    let mut single_max: f64 = 0.0;
    for u in &modes[1..] {
        single_max = single_max.max(trace(u, &p, &ladder)?.cs_gap.iter().cloned().fold(0.0, f64::max));
    }
    let refs: Vec<&ModeField> = modes.iter().collect();
    let mut rng = trial_rng(3, 0);
    let mut mixed_min = f64::INFINITY;
    let mut direct_min = f64::INFINITY;
    for _ in 0..1000 {
        let w: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0) * 10f64.powf(rng.random_range(-3.0..0.0))).collect();
        let t = trace(&add(&refs, &w)?, &p, &ladder)?;
        for j in 0..t.rho.len() {
            mixed_min = mixed_min.min(t.cs_gap[j]);
            // The same gap without Lagrange's identity, relative to G.
            let direct = t.g[j] - t.u[j] * t.u[j] / t.rho[j];
            direct_min = direct_min.min(direct / t.g[j].max(1e-300));
        }
    }
    let ratios_ok = (3.5..=4.5).contains(&lo) && (3.5..=4.5).contains(&hi);
    outcome(
        ratios_ok && mixed_min >= -1e-10 && direct_min >= -1e-10 && single_max < 1e-10,
        format!(
            "halving ratios in [{lo:.3}, {hi:.3}]; min CS gap over 1000 mixtures {mixed_min:.2e} (direct, relative {direct_min:.2e}); max single-mode gap {single_max:.2e}"
        ),
    )
}

/// 4. Model three-circles implication and rigidity.
fn model_three_circles_criterion() -> Result<Outcome> {
    let spec = spectrum();
    let start = Instant::now();
    let mut rng = trial_rng(4, 0);
    let (mut counter, mut premises) = (0usize, 0usize);
    for _ in 0..100_000 {
        let a: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0) * 10f64.powf(rng.random_range(-3.0..0.0))).collect();
        let mut d = rng.random_range(0.05..6.5);
        while spec.eigenvalues().iter().any(|l| (l - d).abs() < 1e-9) {
            d = rng.random_range(0.05..6.5);
        }
        let (first, second) = model_three_circles(&a, d, &spec)?;
        premises += first as usize;
        counter += (first && !second) as usize;
    }
    let mut rigid = true;
    for (level, d) in [(1usize, 1.0), (2, 3.0), (3, 6.0)] {
        let mut a = vec![0.0; 16];
        for m in spec.level_range(level) {
            a[m] = 0.3 + m as f64;
        }
        rigid &= model_three_circles(&a, d, &spec)? == (true, true);
    }
    let took = start.elapsed();
    outcome(
        counter == 0 && rigid && took < Duration::from_secs(5),
        format!("{counter} counterexamples in 100000 samples ({premises} with premise); rigidity exact: {rigid}; {:.2}s", secs(took)),
    )
}

/// 5. Three-circles batteries on Dirichlet solutions.
fn three_circles_criterion() -> Result<Outcome> {
    let start = Instant::now();
    let ladder = dyadic_ladder(3, 10);
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, op, from) in [("separable", separable_op(), 64.0), ("coupled", coupled_op(COUPLING_SEED), 256.0)] {
        for d in [0.5, 2.0, 4.5] {
            let rep = three_circles_battery(&op, d, &ladder, 200, 5)?;
            let v = rep.violations_from(from);
            pass &= v == 0;
            parts.push(format!("{name} d={d}: {v} violations from {from}"));
        }
    }
    let took = start.elapsed();
    pass &= took < Duration::from_secs(120);
    outcome(pass, format!("{}; {:.1}s", parts.join(", "), secs(took)))
}

/// Bases for d = 0.5, 1, 3 on both operators, with their build times.
struct Bases {
    runs: Vec<(&'static str, f64, HarmonicBasis, Duration, Arc<OperatorSpec>)>,
}

fn build_all() -> Result<Bases> {
    let cfg = ConstructionConfig::for_profile(&profile());
    let mut runs = Vec::new();
    for (name, op) in [("separable", separable_op()), ("coupled", coupled_op(COUPLING_SEED))] {
        let op = Arc::new(op);
        for d in [0.5, 1.0, 3.0] {
            let start = Instant::now();
            let basis = build_basis(&op, d, &cfg)?;
            runs.push((name, d, basis, start.elapsed(), op.clone()));
        }
    }
    Ok(Bases { runs })
}

/// 6. Cardinalities, far Gram matrix and orthogonality fits.
fn basis_criterion(b: &Bases) -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, d, basis, took, _) in &b.runs {
        let want = match *d {
            x if x < 1.0 => 1,
            x if x < 3.0 => 4,
            _ => 9,
        };
        let angle = basis.max_far_angle();
        let fits_ok = basis.fits.iter().all(|(_, _, f)| f.decays());
        let ok = basis.len() == want && angle < 0.01 && fits_ok && *took < Duration::from_secs(300);
        pass &= ok;
        parts.push(format!(
            "{name} d={d}: {} fields, max far angle {angle:.2e}, fits ok {fits_ok}, {:.1}s",
            basis.len(),
            secs(*took)
        ));
    }
    outcome(pass, parts.join("; "))
}

/// 7. Pinching of every constructed non-constant field.
fn pinching_criterion(b: &Bases) -> Result<Outcome> {
    let cfg = ConstructionConfig::for_profile(&profile());
    let (mut checked, mut failed) = (0usize, Vec::new());
    let mut min_uq_rate = f64::INFINITY;
    for (name, d, basis, _, op) in &b.runs {
        if *d < 3.0 {
            continue;
        }
        for (i, u) in basis.fields.iter().enumerate() {
            if basis.levels[i] == 0 {
                continue;
            }
            let rep = pinching_report(u, op.profile(), basis.target_levels[i], &cfg.fit_ladder)?;
            checked += 1;
            if !rep.uq_fit.exact {
                min_uq_rate = min_uq_rate.min(rep.uq_fit.tau);
            }
            if !(rep.all_conditions() && rep.uq_rate_ok()) {
                failed.push(format!(
                    "{name}#{i} (U {}, Q {}, U−Q {}, sep {}, proj {})",
                    rep.u_fit.describe(),
                    rep.q_fit.describe(),
                    rep.uq_fit.describe(),
                    rep.separation_fit.describe(),
                    rep.projection_fit.describe()
                ));
            }
        }
    }
    outcome(
        failed.is_empty() && checked > 0,
        format!("{checked} fields checked, min fitted |U−Q| rate {min_uq_rate:.3}; failures: [{}]", failed.join(", ")),
    )
}

/// 8. Liouville battery on the coupled operator.
fn liouville_criterion() -> Result<Outcome> {
    let rep = liouville_battery(&coupled_op(COUPLING_SEED), 100, 8)?;
    let min = rep.overall_min().unwrap_or(f64::INFINITY);
    outcome(
        rep.passed() && rep.vacuous() < rep.min_u.len(),
        format!("min far-ladder U {min:.4} vs λ_2 − 0.05 = {:.2}; {} vacuous trials", rep.lambda_2 - 0.05, rep.vacuous()),
    )
}

/// 9. Flow of ∇f: uniform displacement bound and derivative identity.
fn flow_criterion() -> Result<Outcome> {
    let p = profile();
    let radii = geometric_ladder(10.0, 1e3, 10);
    let fractions: Vec<f64> = (0..=18).map(|i| 0.05 * i as f64).collect();
    let c = flow_bound_sweep(&p, &radii, &fractions)?;
    let mut worst: f64 = 0.0;
    for &r in &radii {
        for &s in &fractions {
            // The difference stencil needs t ≤ 0.9(r − 10⁻⁴ r).
            let t = s.min(0.8999) * r;
            worst = worst.max(flow_derivative_check(&p, r, t)?);
        }
    }
    outcome(c <= 5.0 && worst < 1e-6, format!("C = {c:.4}; max derivative residual {worst:.2e}"))
}

/// 10. Preservation of almost orthogonality along coupled solutions: u from
/// random data, v from eigenfunction data on a level ℓ ∈ {1, 2, 3}, so that v
/// is exactly separated beyond the coupling support.
fn preservation_criterion() -> Result<Outcome> {
    let op = coupled_op(COUPLING_SEED);
    let p = op.profile().clone();
    let spec = op.spectrum();
    let solver = DirichletSolver::new(&op, 1024.0)?;
    let near = [(2.0, 16.0), (3.0, 12.0), (4.0, 8.0)];
    let far = [(32.0, 128.0), (64.0, 256.0), (128.0, 512.0)];
    let mut constant: f64 = 0.0;
    let mut far_drift: f64 = 0.0;
    for pair in 0..50 {
        let mut rng = trial_rng(10, pair);
        let u = solver.solve(&random_boundary(spec, 1024.0, &mut rng)?)?;
        let level = 1 + pair % 3;
        let within: Vec<f64> = (0..spec.multiplicities()[level]).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v = solver.solve(&BoundaryData::level(spec, 1024.0, level, &within)?)?;
        for (r1, r2) in near {
            constant = constant.max(preservation_experiment(&u, &v, &p, r1, r2)?.required_constant());
        }
        for (r1, r2) in far {
            far_drift = far_drift.max(preservation_experiment(&u, &v, &p, r1, r2)?.lhs);
        }
    }
    outcome(
        constant.is_finite() && constant > 0.0 && far_drift < 1e-8,
        format!("fitted C = {constant:.3e} (single constant over 50 pairs × 3 windows across the support); max drift beyond the support {far_drift:.2e}"),
    )
}

/// 11. Mean-value ratios have no increasing trend.
fn mean_value_criterion() -> Result<Outcome> {
    let op = coupled_op(COUPLING_SEED);
    let p = op.profile().clone();
    let solver = DirichletSolver::new(&op, 1024.0)?;
    let radii = dyadic_ladder(6, 10);
    let x: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let mut worst = f64::NEG_INFINITY;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for trial in 0..20 {
        let mut rng = trial_rng(11, trial);
        let u = solver.solve(&random_boundary(op.spectrum(), 1024.0, &mut rng)?)?;
        let ratios = mean_value_sweep(&u, &p, &radii, 0.25)?;
        lo = ratios.iter().cloned().fold(lo, f64::min);
        hi = ratios.iter().cloned().fold(hi, f64::max);
        let y: Vec<f64> = ratios.iter().map(|r| r.ln()).collect();
        worst = worst.max(fit_line(&x, &y)?.slope);
    }
    outcome(worst <= 0.05, format!("max fitted log-log slope over 20 solutions {worst:.4}; all ratios within [{lo:.3}, {hi:.3}]"))
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut report = |index: usize, name: &str, result: Result<Outcome>| {
        let (pass, detail) = match result {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failures += !pass as usize;
        println!("criterion {index:>2} {name:<28} {} — {detail}", if pass { "PASS" } else { "FAIL" });
    };
    report(1, "radial growth", radial_growth());
    report(2, "indicial and LG structure", indicial_and_lg());
    report(3, "frequency identities", frequency_identities());
    report(4, "model three circles", model_three_circles_criterion());
    report(5, "three-circles battery", three_circles_criterion());
    match build_all() {
        Ok(bases) => {
            report(6, "dimension count and basis", basis_criterion(&bases));
            report(7, "pinching", pinching_criterion(&bases));
        }
        Err(e) => {
            report(6, "dimension count and basis", Err(e.clone()));
            report(7, "pinching", Err(e));
        }
    }
    report(8, "Liouville", liouville_criterion());
    report(9, "flow map", flow_criterion());
    report(10, "preservation of orthogonality", preservation_criterion());
    report(11, "mean-value ratio", mean_value_criterion());
    println!("acceptance: {} of 11 criteria passed", 11 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
