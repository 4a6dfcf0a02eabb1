//! Kruzhkov fluxes, weak Rankine–Hugoniot and entropy residuals, per-jump
//! admissibility and the surface/volume identity for sections with jumps.

mod jump;
mod residual;
mod test_fn;

pub use jump::{jump_admissibility, jump_quantity, kruzhkov_r, JumpReport, E_TOL, K_SCAN};
pub use residual::{
    entropy_residual, quadrature_points, s_operator, s_value, volpert_identity_check, weak_rh_residual, QPoint,
    VolpertReport, S_NODES,
};
pub use test_fn::{BaseTest, Bump, FiberTest, TotalTest};
