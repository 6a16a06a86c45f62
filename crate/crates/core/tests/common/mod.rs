//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use aplab::cross_section::{sphere_spectrum, Spectrum};
use aplab::dirichlet::{Coupling, OperatorSpec};
use aplab::geometry::{model_profile, APProfile};
use nalgebra::{DMatrix, SymmetricEigen};

/// n = 3, scale 2, r_cone = 0.5, r_asym = 2.
pub fn profile() -> Arc<APProfile> {
    Arc::new(model_profile(3, 2.0, 0.5, 2.0).unwrap())
}

/// λ = [0, 1, 3, 6], m = [1, 3, 5, 7].
pub fn spectrum() -> Arc<Spectrum> {
    Arc::new(sphere_spectrum(2, 2.0, 4).unwrap())
}

pub fn separable_op() -> OperatorSpec {
    OperatorSpec::separable(profile(), spectrum()).unwrap()
}

/// One random coupling on [4, 8] with amplitude 0.3.
pub fn coupled_op(seed: u64) -> OperatorSpec {
    let op = separable_op();
    let c = Coupling::random(op.mode_cut(), 4.0, 8.0, 0.3, seed).unwrap();
    op.with_coupling(c).unwrap()
}

/// Gauss–Legendre nodes and weights on [−1, 1] (Newton iteration on P_N).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                let mut q0 = 1.0;
                let mut q1 = z;
                for k in 2..=n {
                    let q2 = ((2 * k - 1) as f64 * z * q1 - (k - 1) as f64 * q0) / k as f64;
                    q0 = q1;
                    q1 = q2;
                }
                let dq = n as f64 * (z * q1 - q0) / (z * z - 1.0);
                x[i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * dq * dq);
                break;
            }
        }
    }
    (x, w)
}

/// Associated Legendre function P_l^m(x), m ≥ 0, without the Condon–Shortley phase.
fn assoc_legendre(l: usize, m: usize, x: f64) -> f64 {
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = 1.0;
    for k in 0..m {
        pmm *= (2 * k + 1) as f64 * s;
    }
    if l == m {
        return pmm;
    }
    let mut pm1 = x * (2 * m + 1) as f64 * pmm;
    if l == m + 1 {
        return pm1;
    }
    let mut out = 0.0;
    for ll in (m + 2)..=l {
        out = (x * (2 * ll - 1) as f64 * pm1 - (ll + m - 1) as f64 * pmm) / (ll - m) as f64;
        pmm = pm1;
        pm1 = out;
    }
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Real orthonormal spherical harmonic of degree l on the unit S², indexed
/// j = 0 → m = 0, j = 2k−1 → cos(kφ), j = 2k → sin(kφ).
pub fn real_harmonic(l: usize, j: usize, theta: f64, phi: f64) -> f64 {
    let m = (j + 1) / 2;
    let norm = ((2 * l + 1) as f64 / (4.0 * PI) * factorial(l - m) / factorial(l + m)).sqrt();
    let p = assoc_legendre(l, m, theta.cos());
    if m == 0 {
        norm * p
    } else if j % 2 == 1 {
        2f64.sqrt() * norm * p * (m as f64 * phi).cos()
    } else {
        2f64.sqrt() * norm * p * (m as f64 * phi).sin()
    }
}

/// Eigenfunction Θ_k of the flat mode k on the round 2-sphere of metric scale·g_round.
pub fn theta_mode(spec: &Spectrum, k: usize, theta: f64, phi: f64) -> f64 {
    let id = spec.mode(k).unwrap();
    real_harmonic(id.level, id.index, theta, phi) / spec.scale().sqrt()
}

/// Reconstruct Σ_k c_k Θ_k at a point.
pub fn reconstruct(spec: &Spectrum, coeffs: &[f64], theta: f64, phi: f64) -> f64 {
    coeffs.iter().enumerate().map(|(k, c)| c * theta_mode(spec, k, theta, phi)).sum()
}

/// ∫_Σ f dvol_{g_X} on the 2-sphere of metric scale·g_round by Gauss–Legendre × trapezoid.
pub fn sphere_integral(spec: &Spectrum, f: impl Fn(f64, f64) -> f64, n: usize) -> f64 {
    let (x, w) = gauss_legendre(n);
    let nphi = 2 * n;
    let mut acc = 0.0;
    for (xi, wi) in x.iter().zip(&w) {
        let theta = xi.acos();
        for j in 0..nphi {
            let phi = 2.0 * PI * j as f64 / nphi as f64;
            acc += wi * f(theta, phi);
        }
    }
    acc * 2.0 * PI / nphi as f64 * spec.scale()
}

/// Lowest eigenvalues of −Δ on the unit round S² from a finite-volume
/// discretisation of each azimuthal equation
/// −(sin θ y′)′/sin θ + m² y / sin² θ = λ y on a cell-centred θ-grid.
pub fn fd_sphere_eigenvalues(cells: usize, max_m: usize, per_m: usize) -> Vec<f64> {
    let h = PI / cells as f64;
    let centres: Vec<f64> = (0..cells).map(|i| (i as f64 + 0.5) * h).collect();
    let faces: Vec<f64> = (0..=cells).map(|i| (i as f64 * h).sin()).collect();
    let mut out = Vec::new();
    for m in 0..=max_m {
        // K y = λ W y with W = diag(sin θ_i); symmetrise as W^{-1/2} K W^{-1/2}.
        let mut k = DMatrix::<f64>::zeros(cells, cells);
        for i in 0..cells {
            let s = centres[i].sin();
            k[(i, i)] = (faces[i] + faces[i + 1]) / (h * h) + (m * m) as f64 / s;
            if i + 1 < cells {
                k[(i, i + 1)] = -faces[i + 1] / (h * h);
                k[(i + 1, i)] = -faces[i + 1] / (h * h);
            }
        }
        let scale: Vec<f64> = centres.iter().map(|t| 1.0 / t.sin().sqrt()).collect();
        let a = DMatrix::from_fn(cells, cells, |i, j| scale[i] * k[(i, j)] * scale[j]);
        let mut ev: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().cloned().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        let copies = if m == 0 { 1 } else { 2 };
        for v in ev.into_iter().take(per_m) {
            for _ in 0..copies {
                out.push(v);
            }
        }
    }
    out.sort_by(|a, b| a.total_cmp(b));
    out
}

/// Group sorted values that agree to a relative (or, near zero, absolute) tolerance.
pub fn group(values: &[f64], tol: f64) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    for &v in values {
        match out.last_mut() {
            Some((g, m)) if (v - *g).abs() <= tol * g.abs().max(1.0) => *m += 1,
            _ => out.push((v, 1)),
        }
    }
    out
}
