//! Reference solvers: exact Riemann solutions, a first-order Godunov scheme
//! and the gluing of two classical solutions along an admissible shock.

mod glue;
mod godunov;
mod riemann;

pub use glue::{glue_classical_pair, GlueResult};
pub use godunov::{godunov_solve, Boundary, GodunovRun};
pub use riemann::{godunov_flux, require_convex, riemann_exact, Burgers, ConvexFlux, NumericFlux};
