//! Flux models, entropy densities, layers and candidate sections.

mod flux;
mod poly;
mod section;

pub use flux::{EntropyDensity, Flux, FluxModel, InvFnRef, PolynomialFlux};
pub use poly::{Poly3, Term};
pub use section::{validate_section, Grid2, JumpCurve, JumpData, Layer, LayerReport, PiecewiseSection};
