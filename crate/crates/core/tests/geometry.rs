mod common;

use aplab::geometry::{
    ap_certificate, drift_coefficients, eta_coefficient, flow_bound_sweep, flow_derivative_check, flow_map,
    mean_curvature, model_profile, Region, Tail,
};
use aplab::Error;
use proptest::prelude::*;

#[test]
fn plateau_values() {
    let p = model_profile(3, 2.0, 0.5, 2.0).unwrap();
    assert_eq!(p.phi(0.25), 0.25);
    assert!((p.phi(8.0) - 4.0).abs() < 1e-15);
    assert_eq!(p.f_prime(8.0), -1.0);
    assert_eq!(p.f_prime(0.25), 0.0);
    let q = model_profile(4, 4.0, 0.5, 2.0).unwrap();
    assert!((q.phi(100.0) - 20.0).abs() < 1e-12);
    assert_eq!(p.region(0.3), Region::Cone);
    assert_eq!(p.region(1.0), Region::Blend);
    assert_eq!(p.region(3.0), Region::Paraboloid);
}

#[test]
fn invalid_profiles_are_rejected() {
    assert!(matches!(model_profile(2, 2.0, 0.5, 2.0), Err(Error::InvalidArgument(_))));
    assert!(matches!(model_profile(3, 0.0, 0.5, 2.0), Err(Error::InvalidArgument(_))));
    assert!(matches!(model_profile(3, 2.0, 2.0, 0.5), Err(Error::InvalidArgument(_))));
}

#[test]
fn drift_coefficients_on_the_plateaus() {
    let p = model_profile(3, 2.0, 0.5, 2.0).unwrap();
    let c0 = drift_coefficients(&p, 0.0).unwrap();
    let c1 = drift_coefficients(&p, 1.0).unwrap();
    for r in [2.0, 5.0, 1e3] {
        assert!((c0.a1(r).unwrap() - (1.0 / r + 1.0)).abs() < 1e-14);
        assert_eq!(c0.a0(r).unwrap(), 0.0);
        // A0 = −λ·scale/φ² = −λ/r with scale = 2 and φ² = 2r.
        assert!((c1.a0(r).unwrap() + 1.0 / r).abs() < 1e-15);
    }
    for r in [0.1, 0.3, 0.5] {
        assert!((c0.a1(r).unwrap() - 2.0 / r).abs() < 1e-13);
        assert_eq!(c0.a0(r).unwrap(), 0.0);
    }
    assert!(matches!(drift_coefficients(&p, -1.0), Err(Error::InvalidArgument(_))));
    assert!(matches!(c1.a1(0.0), Err(Error::Domain(_))));
}

#[test]
fn mean_curvature_and_eta() {
    let p = model_profile(3, 2.0, 0.5, 2.0).unwrap();
    for rho in [2.0, 7.5, 1e4] {
        // (n − 1)φ′/φ = 2 · 1/(2ρ).
        assert!((mean_curvature(&p, rho).unwrap() - 1.0 / rho).abs() < 1e-15);
        assert_eq!(eta_coefficient(&p, rho).unwrap(), 0.0);
    }
    for rho in [0.1, 0.5] {
        assert!((mean_curvature(&p, rho).unwrap() - 2.0 / rho).abs() < 1e-13);
        assert_eq!(eta_coefficient(&p, rho).unwrap(), 1.0);
    }
    // Continuity through the blend.
    let samples: Vec<f64> = (0..=3000).map(|j| 0.5 + 1.5 * j as f64 / 3000.0).collect();
    for w in samples.windows(2) {
        let (a, b) = (p.eta(w[0]), p.eta(w[1]));
        assert!(a.is_finite() && (a - b).abs() < 1e-2);
    }
}

#[test]
fn certificate_of_the_model_profile_is_exact() {
    let p = model_profile(3, 2.0, 0.5, 2.0).unwrap();
    let cert = ap_certificate(&p).unwrap();
    assert!(cert.passed());
    assert!(cert.lines.iter().all(|l| l.exact));
    assert!(cert.to_csv().contains("exact"));
}

#[test]
fn certificate_fits_an_inverse_linear_tail() {
    let p = model_profile(3, 2.0, 0.5, 2.0).unwrap().with_tail(Tail::InverseLinear { c: 0.7 }, 1.0);
    let cert = ap_certificate(&p).unwrap();
    let line = cert.lines.iter().find(|l| l.quantity == "f'+1").unwrap();
    assert!((line.exponent - 1.0).abs() < 0.05, "{}", cert.to_text());
    assert!(cert.passed(), "{}", cert.to_text());
}

#[test]
fn certificate_rejects_slow_second_derivative() {
    let p = model_profile(3, 2.0, 0.5, 2.0).unwrap().with_tail(Tail::Oscillating { c: 0.5, epsilon: 0.5 }, 1.0);
    let cert = ap_certificate(&p).unwrap();
    assert!(!cert.passed());
    let first = cert.first_failure().unwrap();
    assert_eq!(first.quantity, "f''");
    assert!((first.exponent - 1.0).abs() < 0.1, "{}", cert.to_text());
}

#[test]
fn flow_examples() {
    let p = model_profile(3, 2.0, 0.5, 2.0).unwrap();
    assert_eq!(flow_map(&p, 7.0, 0.0).unwrap(), 7.0);
    for (r, t) in [(10.0, 5.0), (100.0, 85.0), (1e3, 500.0)] {
        assert!((flow_map(&p, r, t).unwrap() - (r - t)).abs() < 1e-8 * r);
        assert!(flow_derivative_check(&p, r, t).unwrap() < 1e-8);
    }
    assert!(flow_derivative_check(&p, 10.0, 0.0).unwrap() < 1e-8);
    // Trajectories entering the blend.
    assert!(flow_derivative_check(&p, 10.0, 8.5).unwrap() < 1e-6);
    assert!(flow_derivative_check(&p, 5.0, 4.0).unwrap() < 1e-6);
    assert!(matches!(flow_map(&p, 10.0, 9.5), Err(Error::InvalidArgument(_))));
    assert!(matches!(flow_derivative_check(&p, 0.3, 0.1), Err(Error::UndefinedRatio(_))));
    let c = flow_bound_sweep(&p, &[10.0, 100.0, 1000.0], &[0.0, 0.5, 0.9]).unwrap();
    assert!(c <= 5.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn flow_map_is_monotone_in_r(r in 5.0f64..500.0, dr in 0.01f64..50.0, s in 0.0f64..0.85) {
        let p = model_profile(3, 2.0, 0.5, 2.0).unwrap();
        let t = s * r;
        let a = flow_map(&p, r, t).unwrap();
        let b = flow_map(&p, r + dr, t).unwrap();
        prop_assert!(b > a);
        prop_assert!(a <= r);
    }

    #[test]
    fn eta_and_curvature_vanish_beyond_the_blend(n in 3usize..7, scale in 0.5f64..8.0, r in 2.0f64..1e6) {
        let p = model_profile(n, scale, 0.5, 2.0).unwrap();
        prop_assert_eq!(eta_coefficient(&p, r).unwrap(), 0.0);
        let h = mean_curvature(&p, r).unwrap();
        prop_assert!((h - (n as f64 - 1.0) / (2.0 * r)).abs() <= 1e-14 * h);
    }
}
