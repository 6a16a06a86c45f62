//! Finite-difference Dirichlet solves on balls {r ≤ ρ}.
//!
//! The unknowns are mode-coefficient vectors on a grid uniform in t = ln r
//! from r_cone to ρ. The equation is discretised in the non-conservative form
//! M u_tt + (M_t + (rA1 − 1)M) u_t − (r²/ψ²) S u = 0 with centred second-order
//! differences; the conservative flux form is avoided because the e^{r}
//! weight makes its midpoint averages lose accuracy at large r. The vertex is
//! closed by the exact Robin condition u_t = α_k u of the cone plateau,
//! imposed with a ghost node.
//!
//! The interior equations are homogeneous, so the block-tridiagonal system is
//! reduced once per (operator, ρ) to transfer maps u_j = T_j u_{j+1}, obtained
//! by forward elimination from the vertex. Each solve is then a single
//! backward sweep from the boundary data. Without couplings the T_j are
//! scalars per eigenvalue level.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::operator::{BoundaryData, OperatorSpec};
use crate::error::{invalid, Error, Result};
use crate::frequency::{ModeField, Provenance};
use crate::radial::vertex_exponent;

enum Transfer {
    /// Node-major scalars t[j * levels + level].
    Levels { t: Vec<f64>, levels: usize },
    /// One K×K matrix per node (column-major, as stored by nalgebra).
    Dense { t: Vec<DMatrix<f64>> },
}

/// A factorised Dirichlet problem on the ball of radius ρ.
pub struct DirichletSolver {
    op: OperatorSpec,
    rho: f64,
    h: f64,
    grid: Arc<Vec<f64>>,
    alpha: Vec<f64>,
    transfer: Transfer,
}

/// Uniform t-grid from r_cone to ρ with about `ppo` nodes per octave, ending exactly at ρ.
pub fn solver_grid(r_cone: f64, rho: f64, ppo: usize) -> (Vec<f64>, f64) {
    let span = (rho / r_cone).ln();
    let octaves = span / std::f64::consts::LN_2 * ppo as f64;
    let nodes = octaves.round().max(2.0) as usize;
    // When ρ/r_cone is a power of 2^{1/ppo} the step is exactly ln 2 / ppo, so
    // grids of different dyadic balls share their nodes bit for bit.
    let h = if (octaves - nodes as f64).abs() < 1e-9 * octaves.max(1.0) {
        std::f64::consts::LN_2 / ppo as f64
    } else {
        span / nodes as f64
    };
    let mut g: Vec<f64> = (0..nodes).map(|j| r_cone * (j as f64 * h).exp()).collect();
    g.push(rho);
    (g, h)
}

impl DirichletSolver {
    /// Factorise the Dirichlet problem of `op` on {r ≤ ρ}.
    pub fn new(op: &OperatorSpec, rho: f64) -> Result<DirichletSolver> {
        let p = op.profile().clone();
        if !(rho > 2.0 * p.r_cone()) {
            return invalid(format!("ball radius {rho} must exceed 2 r_cone"));
        }
        if rho < op.min_boundary_radius() {
            return invalid(format!(
                "boundary radius {rho} lies inside a coupling support (need at least {})",
                op.min_boundary_radius()
            ));
        }
        let (grid, h) = solver_grid(p.r_cone(), rho, op.points_per_octave());
        // Centred differences stay monotone while h·|rA1 − 1|/2 ≤ 1.
        let worst = grid.iter().map(|&r| 0.5 * h * (r * p.a1_raw(r) - 1.0).abs()).fold(0.0, f64::max);
        if worst > 1.0 {
            return invalid(format!(
                "grid too coarse for radius {rho}: cell Peclet number {worst:.3} exceeds 1; raise points_per_octave"
            ));
        }
        let spec = op.spectrum().clone();
        let alpha: Vec<f64> = spec.mode_eigenvalues().iter().map(|&l| vertex_exponent(&p, l)).collect();
        let nodes = grid.len() - 1;
        let transfer = if op.is_separable() {
            let levels = spec.level_count();
            let mut t = vec![0.0; nodes * levels];
            for level in 0..levels {
                let lambda = spec.eigenvalues()[level];
                let a0 = vertex_exponent(&p, lambda);
                let mut prev = 0.0;
                for j in 0..nodes {
                    let r = grid[j];
                    let b = r * p.a1_raw(r) - 1.0;
                    let c = r * r * p.inv_psi_sq(r) * lambda;
                    let (lo, di, up) = (1.0 - 0.5 * h * b, -2.0 - h * h * c, 1.0 + 0.5 * h * b);
                    let tj = if j == 0 { -(lo + up) / (di - 2.0 * h * a0 * lo) } else { -up / (lo * prev + di) };
                    if !tj.is_finite() {
                        return Err(Error::SolverFailure(format!("singular elimination pivot at r = {r}")));
                    }
                    t[j * levels + level] = tj;
                    prev = tj;
                }
            }
            Transfer::Levels { t, levels }
        } else {
            let k = spec.mode_count();
            let lam = DVector::from_vec(spec.mode_eigenvalues());
            let sqrt_lam = lam.map(f64::sqrt);
            let identity = DMatrix::<f64>::identity(k, k);
            let mut t: Vec<DMatrix<f64>> = Vec::with_capacity(nodes);
            for j in 0..nodes {
                let r = grid[j];
                let (m, mt) = match op.coupling_at(r) {
                    Some((e, de)) => (&identity + &e, de * r),
                    None => (identity.clone(), DMatrix::zeros(k, k)),
                };
                let b = &mt + &m * (r * p.a1_raw(r) - 1.0);
                let s = DMatrix::from_fn(k, k, |a, c| sqrt_lam[a] * m[(a, c)] * sqrt_lam[c]);
                let lo = &m - &b * (0.5 * h);
                let up = &m + &b * (0.5 * h);
                let di = &m * -2.0 - s * (h * h * r * r * p.inv_psi_sq(r));
                let tj = if j == 0 {
                    // The cone plateau is uncoupled, so the Robin closure acts per mode.
                    let ghost = DMatrix::from_fn(k, k, |a, c| 2.0 * h * alpha[c] * lo[(a, c)]);
                    let pivot = di - ghost;
                    pivot.lu().solve(&(-(&lo + &up)))
                } else {
                    let pivot = &lo * &t[j - 1] + di;
                    pivot.lu().solve(&(-&up))
                };
                match tj {
                    Some(m) if m.iter().all(|v| v.is_finite()) => t.push(m),
                    _ => return Err(Error::SolverFailure(format!("singular elimination block at r = {r}"))),
                }
            }
            Transfer::Dense { t }
        };
        Ok(DirichletSolver { op: op.clone(), rho, h, grid: Arc::new(grid), alpha, transfer })
    }

    /// Ball radius.
    pub fn rho(&self) -> f64 {
        self.rho
    }
    /// Radial grid (last node is ρ).
    pub fn grid(&self) -> &Arc<Vec<f64>> {
        &self.grid
    }
    /// Operator.
    pub fn operator(&self) -> &OperatorSpec {
        &self.op
    }

    /// Node-major mode values u[j*K + k] for boundary coefficients `g`.
    pub fn sweep(&self, g: &[f64]) -> Result<Vec<f64>> {
        let k = self.op.mode_cut();
        if g.len() != k {
            return invalid(format!("boundary data has {} coefficients, operator has {k} modes", g.len()));
        }
        let nodes = self.grid.len() - 1;
        let mut u = vec![0.0; (nodes + 1) * k];
        u[nodes * k..].copy_from_slice(g);
        match &self.transfer {
            Transfer::Levels { t, levels } => {
                let lv = self.op.spectrum().mode_levels();
                for j in (0..nodes).rev() {
                    for m in 0..k {
                        u[j * k + m] = t[j * levels + lv[m]] * u[(j + 1) * k + m];
                    }
                }
            }
            Transfer::Dense { t } => {
                for j in (0..nodes).rev() {
                    let (head, tail) = u.split_at_mut((j + 1) * k);
                    let next = &tail[..k];
                    let out = &mut head[j * k..];
                    let tj = &t[j];
                    for a in 0..k {
                        let mut acc = 0.0;
                        for c in 0..k {
                            acc += tj[(a, c)] * next[c];
                        }
                        out[a] = acc;
                    }
                }
            }
        }
        Ok(u)
    }

    /// r-derivatives from node values: exact Robin data at the vertex, centred
    /// differences inside, a one-sided second-order stencil at ρ.
    pub fn derivatives(&self, u: &[f64]) -> Vec<f64> {
        let k = self.op.mode_cut();
        let nodes = self.grid.len() - 1;
        let h = self.h;
        let mut du = vec![0.0; u.len()];
        for m in 0..k {
            du[m] = self.alpha[m] * u[m] / self.grid[0];
        }
        for j in 1..nodes {
            for m in 0..k {
                du[j * k + m] = (u[(j + 1) * k + m] - u[(j - 1) * k + m]) / (2.0 * h * self.grid[j]);
            }
        }
        for m in 0..k {
            let (a, b, c) = (u[nodes * k + m], u[(nodes - 1) * k + m], u[(nodes - 2) * k + m]);
            du[nodes * k + m] = (3.0 * a - 4.0 * b + c) / (2.0 * h * self.rho);
        }
        du
    }

    /// Solve with the given data.
    pub fn solve(&self, data: &BoundaryData) -> Result<ModeField> {
        if (data.rho - self.rho).abs() > 1e-12 * self.rho {
            return invalid(format!("data radius {} differs from solver radius {}", data.rho, self.rho));
        }
        let u = self.sweep(&data.coeffs)?;
        let du = self.derivatives(&u);
        ModeField::new(
            self.op.spectrum().clone(),
            self.op.profile().clone(),
            self.grid.clone(),
            u,
            du,
            Provenance::DirichletSolve,
        )
    }
}

/// Factorise and solve in one call.
pub fn solve(op: &OperatorSpec, data: &BoundaryData) -> Result<ModeField> {
    DirichletSolver::new(op, data.rho)?.solve(data)
}
