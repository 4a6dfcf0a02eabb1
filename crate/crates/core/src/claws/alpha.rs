use serde::Serialize;

use crate::entropy::{quadrature_points, BaseTest};
use crate::error::{Error, Result};
use crate::geomkit::{contract, exterior_derivative, FormField, VectorField};
use crate::model::{Flux, FluxModel, PiecewiseSection};

#[derive(Debug, Clone, Serialize)]
pub struct AlphaChecks {
    /// `max |i_X dα|` on the sample lattice.
    pub ix_dalpha: f64,
    /// `min |i_Y dα|` on the sample lattice.
    pub iy_dalpha_min: f64,
    /// Lattice points where `i_Y dα` vanishes.
    pub degenerate_points: Vec<[f64; 3]>,
}

/// `α = Z^x dt − Z^t dx`, coefficients `[dx, dt, dy]`, with analytic jets
/// when the model has them.
pub fn alpha_from_flux(model: &FluxModel) -> Result<(FormField<3>, AlphaChecks)> {
    model.require_supported()?;
    let (m1, m2) = (model.clone(), model.clone());
    let mut alpha = FormField::new(1, model.domain, move |p| {
        let z = m1.flux(&[p[0], p[1]], p[2]);
        vec![-z[1], z[0], 0.0]
    })?
    .with_h_fd(model.h_fd);
    if model.has_jets() {
        alpha = alpha.with_jets(move |p| {
            let z = [p[0], p[1]];
            let dz = m2.flux_z(&z, p[2]);
            let dy = m2.flux_y(&z, p[2]);
            vec![[-dz[1][0], -dz[1][1], -dy[1]], [dz[0][0], dz[0][1], dy[0]], [0.0; 3]]
        });
    }
    let x = model.characteristic_field();
    let y = model.fiber_field();
    let lattice = model.domain.shrunk(0.8).lattice(5);
    let mut checks = AlphaChecks { ix_dalpha: 0.0, iy_dalpha_min: f64::INFINITY, degenerate_points: vec![] };
    for p in &lattice {
        let da = exterior_derivative(&alpha, p)?;
        let ix = contract(&x.eval(p), 2, &da);
        let iy = contract(&y.eval(p), 2, &da);
        checks.ix_dalpha = checks.ix_dalpha.max(ix.iter().fold(0.0f64, |m, c| m.max(c.abs())));
        let n = iy.iter().map(|c| c * c).sum::<f64>().sqrt();
        checks.iy_dalpha_min = checks.iy_dalpha_min.min(n);
        if n <= 1e-12 {
            checks.degenerate_points.push(*p);
        }
    }
    Ok((alpha, checks))
}

/// The field `X̃` with `i_X̃(c·dx∧dt∧dy) = dα`.
///
/// `dα` is checked for vanishing on a `5³` lattice of the form's domain.
pub fn field_from_alpha(alpha: &FormField<3>, volume_scale: f64) -> Result<VectorField<3>> {
    if alpha.degree() != 1 {
        return Err(Error::Degree("field_from_alpha needs a 1-form".into()));
    }
    if !(volume_scale > 0.0) {
        return Err(Error::Validation("volume form must be positive".into()));
    }
    for p in alpha.domain.shrunk(0.8).lattice(5) {
        let da = exterior_derivative(alpha, &p)?;
        if da.iter().all(|c| c.abs() <= 1e-12) {
            return Err(Error::Degenerate { what: "dα vanishes".into(), witness: p.to_vec() });
        }
    }
    let a = alpha.clone();
    Ok(VectorField::new(alpha.domain, move |p| {
        let da = exterior_derivative(&a, p).unwrap_or_else(|_| vec![f64::NAN; 3]);
        // i_X(c vol) = c·(X^y, −X^t, X^x) in the basis [dx∧dt, dx∧dy, dt∧dy]
        [da[2] / volume_scale, -da[1] / volume_scale, da[0] / volume_scale]
    })
    .with_h_fd(alpha.h_fd))
}

/// `∫ σ*α ∧ dφ` over the section, for 1-forms without a `dy` component.
pub fn classical_check_via_alpha(alpha: &FormField<3>, section: &PiecewiseSection, phi: &BaseTest) -> Result<f64> {
    if alpha.degree() != 1 {
        return Err(Error::Degree("pairing needs a 1-form".into()));
    }
    let pts = quadrature_points(section, &phi.support())?;
    let mut total = 0.0;
    for q in &pts {
        let (_, g) = phi.jet(&[q.x, q.t]);
        if g == [0.0; 2] {
            continue;
        }
        let c = alpha.eval(&[q.x, q.t, q.u]);
        if c[2].abs() > 1e-6 {
            return Err(Error::Validation(format!("form has a dy component {:.3e} at ({}, {})", c[2], q.x, q.t)));
        }
        // (a dx + b dt) ∧ (φ_x dx + φ_t dt) = (a φ_t − b φ_x) dx∧dt
        total += q.w * (c[0] * g[1] - c[1] * g[0]);
    }
    Ok(total)
}
