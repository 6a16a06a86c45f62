mod common;

use std::f64::consts::PI;

use aplab::dirichlet::{
    liouville_battery_on, model_three_circles, preservation_experiment, random_boundary, solve, three_circles_battery,
    trial_rng, BoundaryData, DirichletSolver,
};
use aplab::fit::dyadic_ladder;
use aplab::frequency::{level_wronskian, trace};
use aplab::radial::{launch_data, shoot};
use aplab::Error;
use common::{coupled_op, profile, reconstruct, separable_op, spectrum};
use proptest::prelude::*;
use rand::Rng;

/// Relative sup error of a separable solve against radial shooting.
fn shooting_error(op: &aplab::dirichlet::OperatorSpec, lambda: f64, rho: f64) -> f64 {
    let spec = op.spectrum();
    let level = spec.level_of(lambda, 1e-12).unwrap();
    let within: Vec<f64> = (0..spec.multiplicities()[level]).map(|j| 1.0 + j as f64).collect();
    let data = BoundaryData::level(spec, rho, level, &within).unwrap();
    let solver = DirichletSolver::new(op, rho).unwrap();
    let u = solver.solve(&data).unwrap();
    let grid = solver.grid();
    let p = op.profile();
    let shot = shoot(p, lambda, grid, launch_data(p, lambda)).unwrap();
    let r_of = |j: usize| shot.r[j] * 2f64.powi(shot.exp2[j]);
    let last = grid.len() - 1;
    let mut worst: f64 = 0.0;
    for (j, c) in spec.level_range(level).zip(&within) {
        let curve = u.curve(j);
        for i in 0..grid.len() {
            let want = c * r_of(i) / r_of(last);
            worst = worst.max((curve[i] - want).abs() / c);
        }
    }
    worst
}

#[test]
fn separable_solves_match_radial_shooting() {
    let op = separable_op();
    for lambda in [1.0, 3.0, 6.0] {
        let err = shooting_error(&op, lambda, 1024.0);
        assert!(err < 1e-6, "λ={lambda}: {err:e}");
    }
}

#[test]
fn solver_error_is_second_order_in_the_grid() {
    let coarse = separable_op().with_points_per_octave(256).unwrap();
    let fine = separable_op().with_points_per_octave(512).unwrap();
    for lambda in [1.0, 3.0] {
        let ratio = shooting_error(&coarse, lambda, 64.0) / shooting_error(&fine, lambda, 64.0);
        assert!((3.5..=4.5).contains(&ratio), "λ={lambda}: ratio {ratio}");
    }
}

#[test]
fn constant_data_gives_the_constant_solution() {
    for op in [separable_op(), coupled_op(3)] {
        let mut coeffs = vec![0.0; op.mode_cut()];
        coeffs[0] = 2.5;
        let u = solve(&op, &BoundaryData::new(64.0, coeffs).unwrap()).unwrap();
        for j in 0..u.grid().len() {
            let v = u.node_values(j);
            // Exact up to rounding accumulated along the elimination (about 1.4·10⁴ nodes,
            // dense LU blocks inside the coupling support).
            assert!((v[0] - 2.5).abs() < 1e-9, "{}", v[0] - 2.5);
            assert!(v[1..].iter().all(|x| x.abs() < 1e-9));
        }
    }
}

/// Maximum principle on θ-reconstructions: interior values on 64 sample
/// directions stay below the boundary supremum (sampled densely) + 1e−8.
fn check_maximum_principle(op: &aplab::dirichlet::OperatorSpec, seed: u64) {
    let spec = op.spectrum();
    let rho = 64.0;
    let mut rng = trial_rng(seed, 0);
    let data = random_boundary(spec, rho, &mut rng).unwrap();
    let u = solve(op, &data).unwrap();
    let dense = 96;
    let mut boundary: f64 = 0.0;
    for a in 0..dense {
        for b in 0..2 * dense {
            let (t, f) = ((a as f64 + 0.5) * PI / dense as f64, b as f64 * PI / dense as f64);
            boundary = boundary.max(reconstruct(spec, &data.coeffs, t, f).abs());
        }
    }
    let directions: Vec<(f64, f64)> =
        (0..8).flat_map(|a| (0..8).map(move |b| ((a as f64 + 0.5) * PI / 8.0, (b as f64 + 0.25) * PI / 4.0))).collect();
    let nodes = u.grid().len();
    for j in (0..nodes).step_by(97) {
        let c = u.node_values(j);
        for &(t, f) in &directions {
            let v = reconstruct(spec, c, t, f).abs();
            assert!(v <= boundary + 1e-8, "r={} value {v} above boundary sup {boundary}", u.grid()[j]);
        }
    }
}

#[test]
fn maximum_principle_holds() {
    for seed in 0..4 {
        check_maximum_principle(&separable_op(), seed);
        check_maximum_principle(&coupled_op(7), seed);
    }
}

#[test]
fn solver_rejects_bad_radii_and_coarse_grids() {
    let op = coupled_op(1);
    assert!(matches!(DirichletSolver::new(&op, 6.0), Err(Error::InvalidArgument(_))));
    assert!(matches!(DirichletSolver::new(&separable_op(), 0.9), Err(Error::InvalidArgument(_))));
    let coarse = separable_op().with_points_per_octave(16).unwrap();
    assert!(matches!(DirichletSolver::new(&coarse, 1024.0), Err(Error::InvalidArgument(_))));
    assert!(separable_op().with_points_per_octave(8).is_err());
    let solver = DirichletSolver::new(&separable_op(), 32.0).unwrap();
    assert!(solver.solve(&BoundaryData::new(64.0, vec![0.0; 16]).unwrap()).is_err());
    assert!(solver.sweep(&[1.0; 3]).is_err());
    assert!(BoundaryData::level(&spectrum(), 32.0, 1, &[1.0, 2.0]).is_err());
    assert!(BoundaryData::new(32.0, vec![f64::NAN; 16]).is_err());
}

#[test]
fn model_three_circles_examples() {
    let spec = spectrum();
    let mut a = vec![0.0; 16];
    a[0] = 1.0;
    assert_eq!(model_three_circles(&a, 2.0, &spec).unwrap(), (true, true));
    // Rigidity: data on the λ = d level with no constant term gives equality in both.
    for (level, d) in [(1usize, 1.0), (2, 3.0)] {
        let mut a = vec![0.0; 16];
        for k in spec.level_range(level) {
            a[k] = 0.3 + k as f64;
        }
        assert_eq!(model_three_circles(&a, d, &spec).unwrap(), (true, true));
    }
    assert!(model_three_circles(&a, 0.0, &spec).is_err());
    let mut rng = trial_rng(11, 0);
    let mut counterexamples = 0;
    for _ in 0..20_000 {
        let a: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0) * 10f64.powf(rng.random_range(-3.0..0.0))).collect();
        let d = rng.random_range(0.05..5.95);
        let (first, second) = model_three_circles(&a, d, &spec).unwrap();
        if first && !second {
            counterexamples += 1;
        }
    }
    assert_eq!(counterexamples, 0);
}

#[test]
fn three_circles_on_the_separable_operator() {
    let op = separable_op();
    for d in [1.05, 2.0] {
        let rep = three_circles_battery(&op, d, &dyadic_ladder(4, 10), 24, 5).unwrap();
        assert_eq!(rep.violations_from(64.0), 0, "{}", rep.to_csv());
        assert!(rep.premise_held.iter().all(|p| *p <= 24));
    }
    assert!(matches!(three_circles_battery(&op, 1.0, &dyadic_ladder(4, 10), 4, 0), Err(Error::InvalidArgument(_))));
    assert!(matches!(three_circles_battery(&op, 2.0, &[1.0], 4, 0), Err(Error::InvalidArgument(_))));
}

#[test]
fn liouville_examples() {
    let op = separable_op();
    let ladder = dyadic_ladder(6, 10);
    let rep = liouville_battery_on(&op, 12, 9, &ladder, 1024.0, |s, r, rng| random_boundary(s, r, rng)).unwrap();
    assert_eq!(rep.vacuous(), 0);
    assert!(rep.passed());
    let lambda2 = rep.lambda_2;
    // Far-radius value alone: lowest surviving mode dominates from below.
    let far = liouville_battery_on(&op, 12, 9, &[256.0, 512.0, 1024.0], 1024.0, |s, r, rng| random_boundary(s, r, rng)).unwrap();
    for m in far.min_u.iter().flatten() {
        assert!(*m >= lambda2 - lambda2 * lambda2 / 256.0 - 0.01);
    }
    let constant = liouville_battery_on(&op, 3, 0, &ladder, 1024.0, |s, r, _| {
        let mut c = vec![0.0; s.mode_count()];
        c[0] = 1.0;
        BoundaryData::new(r, c)
    })
    .unwrap();
    assert_eq!(constant.vacuous(), 3);
    assert!(constant.overall_min().is_none());
}

#[test]
fn preservation_examples() {
    let op = separable_op();
    let spec = op.spectrum();
    let mut a = vec![0.0; 16];
    a[1] = 1.0;
    let u = solve(&op, &BoundaryData::new(256.0, a).unwrap()).unwrap();
    let v = solve(&op, &BoundaryData::level(spec, 256.0, 2, &[1.0, 0.0, 0.0, 0.0, 0.0]).unwrap()).unwrap();
    let m = preservation_experiment(&u, &v, &profile(), 16.0, 64.0).unwrap();
    assert_eq!(m.lhs, 0.0);
    let coupled = coupled_op(4);
    for t in 0..5 {
        let mut rng = trial_rng(21, t);
        let u = solve(&coupled, &random_boundary(spec, 256.0, &mut rng).unwrap()).unwrap();
        let within: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v = solve(&coupled, &BoundaryData::level(spec, 256.0, 2, &within).unwrap()).unwrap();
        let far = preservation_experiment(&u, &v, &profile(), 32.0, 128.0).unwrap();
        assert!(far.lhs < 1e-8, "{far:?}");
        let near = preservation_experiment(&u, &v, &profile(), 2.0, 16.0).unwrap();
        assert!(near.lhs.is_finite() && near.shape > 0.0);
    }
}

#[test]
fn wronskian_vanishes_beyond_the_coupling_support() {
    let op = coupled_op(2);
    let spec = op.spectrum();
    let solver = DirichletSolver::new(&op, 512.0).unwrap();
    for t in 0..3 {
        let mut rng = trial_rng(8, t);
        let u = solver.solve(&random_boundary(spec, 512.0, &mut rng).unwrap()).unwrap();
        let v = solver.solve(&random_boundary(spec, 512.0, &mut rng).unwrap()).unwrap();
        for rho in [0.4, 1.0, 3.0, 12.0, 40.0, 200.0] {
            let w = level_wronskian(&u, &v, rho).unwrap();
            let (su, sv) = (u.sample(rho).unwrap(), v.sample(rho).unwrap());
            let scale: f64 = (0..su.u.len()).map(|k| (su.u[k] * sv.du[k]).abs() + (sv.u[k] * su.du[k]).abs()).sum::<f64>()
                * profile().area_weight(rho);
            // Floor: rounding in the centred derivative is about ε|u|/(hρ).
            let nu: f64 = su.u.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nv: f64 = sv.u.iter().map(|x| x * x).sum::<f64>().sqrt();
            let floor = 1e-12 * nu * nv / rho * profile().area_weight(rho);
            assert!(w.abs() <= 1e-6 * scale + floor, "rho {rho}: {w:e} vs {scale:e}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn dirichlet_solutions_have_nonnegative_frequency(seed in 0u64..1_000_000) {
        let op = coupled_op(seed % 5);
        let mut rng = trial_rng(seed, 0);
        let u = solve(&op, &random_boundary(op.spectrum(), 128.0, &mut rng).unwrap()).unwrap();
        let t = trace(&u, op.profile(), &aplab::fit::geometric_ladder(0.6, 128.0, 16)).unwrap();
        for j in 0..t.rho.len() {
            // Inside the coupling support the conormal flux Σ u·(M u′) replaces Σ u u′,
            // so the sign statement applies to level sets outside it.
            let outside = t.rho[j] <= 4.0 || t.rho[j] >= 8.0;
            prop_assert!(!outside || t.u[j] >= -1e-10, "U({}) = {}", t.rho[j], t.u[j]);
            prop_assert!(t.cs_gap[j] >= -1e-10);
        }
    }

    #[test]
    fn model_implication_holds(a in proptest::collection::vec(-1.0f64..1.0, 16), d in 0.01f64..5.99) {
        let (first, second) = model_three_circles(&a, d, &spectrum()).unwrap();
        prop_assert!(!first || second);
    }
}
