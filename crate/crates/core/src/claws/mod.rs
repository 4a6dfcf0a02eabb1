//! Conservation laws built from characteristics: the flux/form dictionary,
//! foliation cuts, Lie transport along flow lines and the two-step
//! construction over a common cut.

mod alpha;
mod cut;
mod grid;
mod transport;

pub use alpha::{alpha_from_flux, classical_check_via_alpha, field_from_alpha, AlphaChecks};
pub use cut::{
    build_cut, wedge_domain, wedge_surface, CutDiagnostics, CutOptions, FoliationCut, Projection, Region, SurfacePatch,
};
pub use grid::GridField;
pub use transport::{
    build_conservation_law, halton_points, transport_solve, ClawResult, ClawValidation, SurfaceData, VolumeGrid,
    LINE_NODES,
};
