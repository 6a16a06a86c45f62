mod common;

use std::f64::consts::PI;

use aplab::cross_section::{dimension_count, sphere_spectrum, torus_spectrum, ModeId};
use aplab::Error;
use common::{fd_sphere_eigenvalues, group};
use proptest::prelude::*;

fn assert_levels(spec: &aplab::cross_section::Spectrum, lambda: &[f64], mult: &[usize]) {
    assert_eq!(spec.eigenvalues().len(), lambda.len());
    for (a, b) in spec.eigenvalues().iter().zip(lambda) {
        assert!((a - b).abs() < 1e-12, "eigenvalues {:?} vs {:?}", spec.eigenvalues(), lambda);
    }
    assert_eq!(spec.multiplicities(), mult);
}

#[test]
fn sphere_matches_finite_volume_eigensolver() {
    let fd = fd_sphere_eigenvalues(400, 3, 4);
    let levels = group(&fd, 1e-3);
    let spec = sphere_spectrum(2, 1.0, 3).unwrap();
    for (k, (value, mult)) in levels.iter().take(3).enumerate() {
        let exact = spec.eigenvalues()[k];
        assert!((value - exact).abs() <= 1e-3 * exact.max(1.0), "level {k}: fd {value} vs {exact}");
        assert_eq!(*mult, spec.multiplicities()[k]);
    }
}

#[test]
fn scaled_sphere_divides_eigenvalues() {
    assert_levels(&sphere_spectrum(2, 1.0, 3).unwrap(), &[0.0, 2.0, 6.0], &[1, 3, 5]);
    assert_levels(&sphere_spectrum(2, 2.0, 4).unwrap(), &[0.0, 1.0, 3.0, 6.0], &[1, 3, 5, 7]);
    let fd = fd_sphere_eigenvalues(400, 3, 4);
    let halved: Vec<f64> = fd.iter().map(|v| v / 2.0).collect();
    let levels = group(&halved, 1e-3);
    for (k, want) in [0.0, 1.0, 3.0, 6.0].iter().enumerate() {
        assert!((levels[k].0 - want).abs() <= 1e-3 * want.max(1.0));
    }
}

#[test]
fn single_level_spectra_are_constants() {
    for (d, s) in [(1, 1.0), (2, 3.5), (4, 0.2)] {
        assert_levels(&sphere_spectrum(d, s, 1).unwrap(), &[0.0], &[1]);
    }
    assert_levels(&torus_spectrum(&[1.0, 2.0, 3.0], 1).unwrap(), &[0.0], &[1]);
}

/// Brute-force lattice enumeration |2πk/L|² over a box.
fn torus_brute_force(lengths: &[f64], count: usize) -> Vec<(f64, usize)> {
    let reach = 8i64;
    let mut values = Vec::new();
    let dims = lengths.len();
    let mut k = vec![-reach; dims];
    loop {
        values.push(k.iter().zip(lengths).map(|(ki, l)| (2.0 * PI * *ki as f64 / l).powi(2)).sum::<f64>());
        let mut axis = 0;
        while axis < dims && k[axis] == reach {
            k[axis] = -reach;
            axis += 1;
        }
        if axis == dims {
            break;
        }
        k[axis] += 1;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    group(&values, 1e-10).into_iter().take(count).collect()
}

#[test]
fn torus_matches_lattice_enumeration() {
    assert_levels(&torus_spectrum(&[2.0 * PI, 2.0 * PI], 3).unwrap(), &[0.0, 1.0, 2.0], &[1, 4, 4]);
    assert_levels(&torus_spectrum(&[2.0 * PI], 2).unwrap(), &[0.0, 1.0], &[1, 2]);
    for lengths in [vec![2.0 * PI, 2.0 * PI], vec![3.0, 5.0], vec![2.0, 2.5, 4.0]] {
        let spec = torus_spectrum(&lengths, 6).unwrap();
        let brute = torus_brute_force(&lengths, 6);
        for (k, (value, mult)) in brute.iter().enumerate() {
            assert!((spec.eigenvalues()[k] - value).abs() < 1e-9 * value.max(1.0));
            assert_eq!(spec.multiplicities()[k], *mult, "lengths {lengths:?}, level {k}");
        }
    }
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(matches!(sphere_spectrum(0, 1.0, 2), Err(Error::InvalidArgument(_))));
    assert!(matches!(sphere_spectrum(2, -1.0, 2), Err(Error::InvalidArgument(_))));
    assert!(matches!(sphere_spectrum(2, 1.0, 0), Err(Error::InvalidArgument(_))));
    assert!(matches!(torus_spectrum(&[1.0, 0.0], 2), Err(Error::InvalidArgument(_))));
    assert!(matches!(torus_spectrum(&[], 2), Err(Error::InvalidArgument(_))));
}

#[test]
fn dimension_count_examples() {
    let spec = sphere_spectrum(2, 2.0, 4).unwrap();
    assert_eq!(dimension_count(&spec, 1.0).unwrap(), 4);
    assert_eq!(dimension_count(&spec, 0.5).unwrap(), 1);
    assert_eq!(dimension_count(&spec, 3.0).unwrap(), 9);
    assert_eq!(dimension_count(&spec, 6.0).unwrap(), 16);
    assert_eq!(dimension_count(&spec, -0.1).unwrap(), 0);
    assert!(matches!(dimension_count(&spec, 6.5), Err(Error::OutOfRange(_))));
}

proptest! {
    #[test]
    fn dimension_count_is_a_monotone_step_function(a in 0.0f64..6.0, b in 0.0f64..6.0, scale in 0.5f64..4.0) {
        let spec = sphere_spectrum(2, scale, 5).unwrap();
        let top = *spec.eigenvalues().last().unwrap();
        let (lo, hi) = (a.min(b) * top / 6.0, a.max(b) * top / 6.0);
        let (cl, ch) = (dimension_count(&spec, lo).unwrap(), dimension_count(&spec, hi).unwrap());
        prop_assert!(cl <= ch);
        let jumps: usize = spec
            .eigenvalues()
            .iter()
            .zip(spec.multiplicities())
            .filter(|(l, _)| **l > lo && **l <= hi)
            .map(|(_, m)| *m)
            .sum();
        prop_assert_eq!(ch - cl, jumps);
    }

    #[test]
    fn sphere_scaling_divides_eigenvalues(d in 1usize..5, scale in 0.1f64..10.0) {
        let unit = sphere_spectrum(d, 1.0, 5).unwrap();
        let scaled = sphere_spectrum(d, scale, 5).unwrap();
        prop_assert_eq!(unit.multiplicities(), scaled.multiplicities());
        for (a, b) in unit.eigenvalues().iter().zip(scaled.eigenvalues()) {
            prop_assert!((a / scale - b).abs() <= 1e-12 * a.max(1.0));
        }
    }

    #[test]
    fn flat_mode_ids_round_trip(d in 1usize..4, count in 1usize..6, pick in 0.0f64..1.0) {
        let spec = sphere_spectrum(d, 1.0, count).unwrap();
        let k = ((spec.mode_count() as f64 * pick) as usize).min(spec.mode_count() - 1);
        let id = spec.mode(k).unwrap();
        prop_assert!(id.index < spec.multiplicities()[id.level]);
        prop_assert_eq!(spec.flat(id).unwrap(), k);
        let past = ModeId { level: id.level, index: spec.multiplicities()[id.level] };
        prop_assert!(spec.flat(past).is_err());
    }
}
