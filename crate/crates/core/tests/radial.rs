mod common;

use aplab::fit::{fit_decay, geometric_ladder};
use aplab::geometry::drift_coefficients;
use aplab::radial::{indicial_root, launch_data, lg_exponent_check, monotonicity_check, shoot, solve_radial, solve_radial_from};
use aplab::Error;
use common::profile;
use proptest::prelude::*;

#[test]
fn indicial_examples() {
    assert_eq!(indicial_root(3, 0.0), 0.0);
    assert_eq!(indicial_root(7, 0.0), 0.0);
    assert!((indicial_root(3, 2.0) - 1.0).abs() < 1e-15);
    let a = indicial_root(3, 1.0);
    assert!((a - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-15);
    assert!((a * (a + 1.0) - 1.0).abs() < 1e-12);
}

#[test]
fn constant_solution() {
    let p = profile();
    let sol = solve_radial(&p, 0.0, 1e4).unwrap();
    assert_eq!(sol.growth_exponent, 0.0);
    assert_eq!(sol.alpha, 0.0);
    for j in 0..sol.grid.len() {
        assert_eq!(sol.value(j), 1.0);
        assert_eq!(sol.derivative(j), 0.0);
    }
    assert!(matches!(monotonicity_check(&sol), Err(Error::InvalidArgument(_))));
}

#[test]
fn growth_exponents_match_eigenvalues() {
    let p = profile();
    let mut previous = -1.0;
    for lambda in [1.0, 3.0, 6.0] {
        let sol = solve_radial(&p, lambda, 1e5).unwrap();
        assert!((sol.growth_exponent - lambda).abs() <= 5e-3, "λ={lambda}: {}", sol.growth_exponent);
        assert!((sol.final_frequency - sol.growth_exponent).abs() <= 5e-3);
        assert!(!sol.flagged);
        assert!(monotonicity_check(&sol).unwrap());
        assert!(sol.growth_exponent > previous);
        previous = sol.growth_exponent;
    }
    let sol = solve_radial(&p, 3.0, 1e5).unwrap();
    assert!((2.99..=3.01).contains(&sol.growth_exponent));
}

#[test]
fn invalid_arguments() {
    let p = profile();
    assert!(matches!(solve_radial(&p, -1.0, 1e4), Err(Error::InvalidArgument(_))));
    assert!(matches!(solve_radial(&p, 1.0, 100.0), Err(Error::InvalidArgument(_))));
    assert!(matches!(lg_exponent_check(&p, 1.0, 1.0), Err(Error::InvalidArgument(_))));
}

#[test]
fn frequency_approaches_lambda_from_below() {
    let p = profile();
    for lambda in [1.0, 3.0, 6.0] {
        let sol = solve_radial(&p, lambda, 1e4).unwrap();
        for j in 0..sol.grid.len() {
            let r = sol.grid[j];
            if r >= 10.0 * lambda * lambda {
                let u = sol.frequency(j);
                assert!(u < lambda, "λ={lambda} r={r}: U={u}");
                // |U − λ| ≤ 2λ²/r up to the O(r^{−2}) remainder, absorbed by the 10λ² cutoff.
                assert!(lambda - u <= 2.0 * lambda * lambda / r, "λ={lambda} r={r}: U={u}");
            }
        }
    }
}

#[test]
fn liouville_green_structure() {
    let p = profile();
    assert!(lg_exponent_check(&p, 1.0, 1e4).unwrap().0.abs() < 1e-6);
    let radii = geometric_ladder(1e3, 1e5, 16);
    for lambda in [0.0, 1.0, 3.0, 6.0] {
        let (first, second): (Vec<f64>, Vec<f64>) = radii.iter().map(|&r| lg_exponent_check(&p, lambda, r).unwrap()).unzip();
        for comp in [first, second] {
            let fit = fit_decay(&radii, &comp, 1e-300).unwrap();
            assert!(fit.exact || (fit.tau >= 1.9 && fit.accepted()), "λ={lambda}: {}", fit.describe());
        }
    }
}

/// Max relative residual R″ + A1R′ + A0R with R″ from centred differences of R′.
fn ode_residual(lambda: f64, per_decade: usize) -> f64 {
    let p = profile();
    let coeffs = drift_coefficients(&p, lambda).unwrap();
    let points = geometric_ladder(3.0, 300.0, per_decade);
    let shot = shoot(&p, lambda, &points, launch_data(&p, lambda)).unwrap();
    let val = |j: usize| shot.r[j] * 2f64.powi(shot.exp2[j]);
    let der = |j: usize| shot.rp[j] * 2f64.powi(shot.exp2[j]);
    let mut worst: f64 = 0.0;
    for j in 1..points.len() - 1 {
        let r = points[j];
        let second = (der(j + 1) - der(j - 1)) / (points[j + 1] - points[j - 1]);
        let a0r = coeffs.a0(r).unwrap() * val(j);
        let res = second + coeffs.a1(r).unwrap() * der(j) + a0r;
        worst = worst.max(res.abs() / a0r.abs());
    }
    worst
}

#[test]
fn finite_difference_residual_is_second_order() {
    for lambda in [1.0, 3.0] {
        let coarse = ode_residual(lambda, 64);
        let fine = ode_residual(lambda, 128);
        let ratio = coarse / fine;
        assert!((3.5..=4.5).contains(&ratio), "λ={lambda}: ratio {ratio}");
    }
}

#[test]
fn vertex_perturbation_does_not_change_growth() {
    let p = profile();
    for lambda in [1.0, 3.0] {
        let base = solve_radial(&p, lambda, 1e5).unwrap();
        let [r0, r1] = launch_data(&p, lambda);
        let moved = solve_radial_from(&p, lambda, 1e5, [r0 * (1.0 + 1e-6), r1]).unwrap();
        assert!((moved.growth_exponent - base.growth_exponent).abs() < 1e-6);
    }
}

#[test]
fn csv_header_and_rows() {
    let sol = solve_radial(&profile(), 1.0, 1e3).unwrap();
    let csv = sol.to_csv();
    assert!(csv.starts_with("# lambda="));
    assert!(csv.contains("r,R,Rprime,U\n"));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), sol.grid.len() + 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn indicial_root_is_the_nonnegative_root(n in 3usize..9, lambda in 0.0f64..50.0) {
        let a = indicial_root(n, lambda);
        prop_assert!(a >= 0.0);
        prop_assert!((a * (a + n as f64 - 2.0) - lambda).abs() <= 1e-12 * lambda.max(1.0));
    }

    #[test]
    fn solutions_are_positive_and_increasing(lambda in 0.05f64..8.0) {
        let sol = solve_radial(&profile(), lambda, 400.0).unwrap();
        prop_assert!(monotonicity_check(&sol).unwrap());
    }
}
