//! # charentropy
//!
//! Desk-scale machinery for first-order quasilinear scalar equations written
//! on a chart `(x, t, y)` of a one-dimensional fiber bundle over a
//! two-dimensional space-time:
//!
//! * weak Rankine-Hugoniot and Kruzhkov entropy residuals of piecewise
//!   smooth sections, per-jump admissibility and the Vol'pert surface/volume
//!   identity ([`entropy`]);
//! * curvature of the characteristic sub-bundle and the complete
//!   non-integrability test that decides whether entropy densities are
//!   distinguishable by their solutions ([`integrability`]);
//! * synthesis of conservation laws from characteristics by transport along
//!   foliation cuts ([`claws`]);
//! * closed-form criteria for entropy densities coming from oriented
//!   conservation laws ([`oriented`]);
//! * reference solvers producing admissible and inadmissible solutions
//!   ([`solver`]).
//!
//! Everything is validated on the flat projective (Burgers-type) model,
//! see [`model::FluxModel::flat_projective`].

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod geomkit;
pub mod model;
pub mod characteristics;
pub mod integrability;
pub mod entropy;
pub mod claws;
pub mod oriented;
pub mod solver;
pub mod io;
pub mod quadrature;

pub use error::{Error, Result};
pub use geomkit::{
    Aabb, DensitySpec, FormField, OrientationRole, OrientationSign, ScalarField, VectorField,
};
pub use model::{EntropyDensity, FluxModel, JumpData, Layer, PiecewiseSection};
