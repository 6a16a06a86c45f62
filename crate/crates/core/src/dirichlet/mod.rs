//! Dirichlet problems on balls, three-circles and orthogonality batteries,
//! and the exhaustion construction of asymptotically orthogonal bases.

mod battery;
mod construct;
mod operator;
mod solver;

pub use battery::*;
pub use construct::*;
pub use operator::*;
pub use solver::*;
