//! Adaptive Dormand–Prince 5(4) integrator for small fixed-size systems.
//!
//! The integrator is stateful so that callers can march to a sequence of
//! output abscissae, inspect or rescale the state between them, and continue
//! with the step size carried over. Steps are clipped so that every requested
//! output point is hit exactly rather than interpolated.

use crate::error::{Error, Result};

// Butcher tableau of the Dormand–Prince pair.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Differences between the 5th- and embedded 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Adaptive integrator for y′ = f(t, y) with y ∈ R^N.
pub struct DormandPrince<const N: usize, F>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    rhs: F,
    t: f64,
    y: [f64; N],
    h: f64,
    rtol: f64,
    atol: f64,
    max_steps: usize,
    steps: usize,
}

fn axpy<const N: usize>(y: &[f64; N], terms: &[(f64, &[f64; N])], h: f64) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

impl<const N: usize, F> DormandPrince<N, F>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    /// Start at (t0, y0) with relative and absolute tolerances.
    pub fn new(rhs: F, t0: f64, y0: [f64; N], rtol: f64, atol: f64) -> Self {
        DormandPrince { rhs, t: t0, y: y0, h: 0.0, rtol, atol, max_steps: 50_000_000, steps: 0 }
    }

    /// Current abscissa.
    pub fn t(&self) -> f64 {
        self.t
    }

    /// Current state.
    pub fn state(&self) -> [f64; N] {
        self.y
    }

    /// Replace the state at the current abscissa (used for rescaling).
    pub fn set_state(&mut self, y: [f64; N]) {
        self.y = y;
    }

    /// Accepted steps so far.
    pub fn steps(&self) -> usize {
        self.steps
    }

    fn initial_step(&self, direction: f64, span: f64) -> f64 {
        let f0 = (self.rhs)(self.t, &self.y);
        let scale = |i: usize| self.atol + self.rtol * self.y[i].abs();
        let d0 = (0..N).map(|i| (self.y[i] / scale(i)).powi(2)).sum::<f64>().sqrt();
        let d1 = (0..N).map(|i| (f0[i] / scale(i)).powi(2)).sum::<f64>().sqrt();
        let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        direction * h.min(span)
    }

    /// Integrate up to exactly `t_end`.
    pub fn advance_to(&mut self, t_end: f64) -> Result<()> {
        let span = t_end - self.t;
        if span == 0.0 {
            return Ok(());
        }
        let dir = span.signum();
        if self.h == 0.0 || self.h.signum() != dir {
            self.h = self.initial_step(dir, span.abs());
        }
        loop {
            let remaining = t_end - self.t;
            if remaining * dir <= 0.0 {
                self.t = t_end;
                return Ok(());
            }
            let last = self.h.abs() >= remaining.abs();
            let h = if last { remaining } else { self.h };
            let (y_new, err) = self.trial(h);
            if !err.is_finite() {
                return Err(Error::SolverFailure(format!("non-finite error estimate at t = {}", self.t)));
            }
            if err <= 1.0 {
                self.t = if last { t_end } else { self.t + h };
                self.y = y_new;
                self.steps += 1;
                if self.steps > self.max_steps {
                    return Err(Error::SolverFailure("step budget exhausted".into()));
                }
                let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last || grow < 1.0 {
                    self.h = h * grow;
                }
                if last {
                    return Ok(());
                }
            } else {
                self.h = h * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                if self.h.abs() < 1e-14 * self.t.abs().max(1.0) {
                    return Err(Error::SolverFailure(format!("step size underflow at t = {}", self.t)));
                }
            }
        }
    }

    fn trial(&self, h: f64) -> ([f64; N], f64) {
        let (t, y, f) = (self.t, &self.y, &self.rhs);
        let k1 = f(t, y);
        let k2 = f(t + C2 * h, &axpy(y, &[(A21, &k1)], h));
        let k3 = f(t + C3 * h, &axpy(y, &[(A31, &k1), (A32, &k2)], h));
        let k4 = f(t + C4 * h, &axpy(y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h));
        let k5 = f(t + C5 * h, &axpy(y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h));
        let k6 = f(t + h, &axpy(y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], h));
        let y_new = axpy(y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], h);
        let k7 = f(t + h, &y_new);
        let mut acc = 0.0;
        for i in 0..N {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
            acc += (e / sc).powi(2);
        }
        (y_new, (acc / N as f64).sqrt())
    }
}
