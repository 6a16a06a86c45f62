//! Numerical laboratory for polynomial-growth drift-harmonic functions on
//! asymptotically paraboloidal warped products.
//!
//! The manifold is (0, ∞) × Σ with metric dr² + φ(r)² g_round and potential
//! f(r); the drift Laplacian is L_f = Δ − ⟨∇f, ∇·⟩. Functions are represented
//! by their coefficients in an orthonormal eigenbasis of the asymptotic
//! cross-section (Σ, g_X), so every level-set integral is a finite sum.
//!
//! Modules, bottom-up:
//!
//! * [`cross_section`] — eigenvalues, multiplicities and mode indexing of (Σ, g_X).
//! * [`geometry`] — profiles (φ, f), separated coefficients, decay certificates, the ∇f flow.
//! * [`radial`] — shooting for the separated radial equation and its asymptotics.
//! * [`frequency`] — mode fields and the frequency functionals D, I, U, G, Q.
//! * [`dirichlet`] — Dirichlet solves on balls, three-circles and orthogonality
//!   batteries, and the exhaustion construction of asymptotically orthogonal bases.
//!
//! [`fit`] and [`ode`] hold the shared least-squares and integration utilities.

pub mod cross_section;
pub mod dirichlet;
pub mod error;
pub mod fit;
pub mod frequency;
pub mod geometry;
pub mod ode;
pub mod radial;

pub use error::{Error, Result};
