use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Flux, JumpData};

/// Number of interior samples in the entropy scan over `k`.
pub const K_SCAN: usize = 257;
/// Tolerance on the jump quantity `E(k)`.
pub const E_TOL: f64 = 1e-9;

/// Kruzhkov flux `sgn(u − y)·(Z(z, u) − Z(z, y))`.
pub fn kruzhkov_r(flux: &dyn Flux, z: &[f64; 2], u: f64, y: f64) -> [f64; 2] {
    if u == y {
        return [0.0; 2];
    }
    let (a, b) = (flux.flux(z, u), flux.flux(z, y));
    let s = (u - y).signum();
    [s * (a[0] - b[0]), s * (a[1] - b[1])]
}

#[derive(Debug, Clone, Serialize)]
pub struct JumpReport {
    /// `⟨ν, Z(u_l) − Z(u_r)⟩`.
    pub rh_residual: f64,
    pub entropic: bool,
    /// Scan value with the smallest jump quantity.
    pub worst_k: f64,
    /// `min_k E(k)`.
    pub margin: f64,
    /// Shock speed in the chart, when `ν_x ≠ 0`.
    pub speed: Option<f64>,
}

/// Jump quantity `E(k) = −⟨ν, R_k(u_r) − R_k(u_l)⟩`.
pub fn jump_quantity(flux: &dyn Flux, jump: &JumpData, k: f64) -> f64 {
    let z = &jump.point;
    let rr = kruzhkov_r(flux, z, jump.u_right, k);
    let rl = kruzhkov_r(flux, z, jump.u_left, k);
    -(jump.normal[0] * (rr[0] - rl[0]) + jump.normal[1] * (rr[1] - rl[1]))
}

/// RH residual and Kruzhkov jump inequality scanned over `k` between the
/// traces.
pub fn jump_admissibility(flux: &dyn Flux, jump: &JumpData) -> Result<JumpReport> {
    if jump.u_left == jump.u_right {
        return Err(Error::Degenerate {
            what: "jump with equal traces".into(),
            witness: vec![jump.point[0], jump.point[1], jump.u_left],
        });
    }
    let z = &jump.point;
    let (zl, zr) = (flux.flux(z, jump.u_left), flux.flux(z, jump.u_right));
    let rh_residual = jump.normal[0] * (zl[0] - zr[0]) + jump.normal[1] * (zl[1] - zr[1]);
    let lo = jump.u_left.min(jump.u_right);
    let hi = jump.u_left.max(jump.u_right);
    let n = K_SCAN + 1;
    let mut margin = f64::INFINITY;
    let mut worst_k = lo;
    for j in 0..=n {
        let k = if j == n { hi } else { lo + (hi - lo) * j as f64 / n as f64 };
        let e = jump_quantity(flux, jump, k);
        if e < margin {
            margin = e;
            worst_k = k;
        }
    }
    Ok(JumpReport {
        rh_residual,
        entropic: margin >= -E_TOL,
        worst_k,
        margin,
        speed: jump.speed().ok(),
    })
}
