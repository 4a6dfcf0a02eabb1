//! Curvature of the characteristic sub-bundle, its identity with the fiber
//! derivative of `κ`, and the complete non-integrability test.

use rayon::prelude::*;
use serde::Serialize;

use crate::entropy::jump_admissibility;
use crate::error::{Error, Result};
use crate::geomkit::{lie_bracket, solve3, Aabb, ScalarField, VectorField};
use crate::model::{Flux, FluxModel, JumpData};
use crate::quadrature::GaussLegendre;

/// Default integrability threshold.
pub const EPS_INT: f64 = 1e-8;

const FRAME_EPS: f64 = 1e-12;

/// Coefficient of `[u, v]` along the complement direction after reducing
/// modulo `span{a, b}`. The complement is `∂x`, or `∂t` when `a, b, ∂x` are
/// dependent.
pub fn reduced_bracket(
    u: &VectorField<3>,
    v: &VectorField<3>,
    a: &[f64; 3],
    b: &[f64; 3],
    f: &[f64; 3],
) -> Result<f64> {
    let w = lie_bracket(u, v, f)?;
    for e in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]] {
        // columns a, b, e
        let m = [[a[0], b[0], e[0]], [a[1], b[1], e[1]], [a[2], b[2], e[2]]];
        if let Some(c) = solve3(&m, &w, FRAME_EPS) {
            return Ok(c[2]);
        }
    }
    Err(Error::Frame {
        witness: f.to_vec(),
        reason: "X and Y are parallel".into(),
    })
}

/// Curvature scalar of `D ⊕ T⁰F` at `f`: the reduced `[Y, X]`.
pub fn curvature(model: &FluxModel, f: &[f64; 3]) -> Result<f64> {
    model.require_supported()?;
    let x = model.characteristic_field();
    let y = model.fiber_field();
    reduced_bracket(&y, &x, &x.eval(f), &y.eval(f), f)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct KappaIdentity {
    /// Fiber finite difference of `κ`.
    pub lhs: f64,
    /// Bracket-based evaluation.
    pub rhs: f64,
    pub relative_error: f64,
}

/// Compares `∂κ/∂y` by fiber differences with the value obtained from the
/// projected bracket: with `v = TπX` and `w = Tπ[Y, X]` the derivative of
/// the affine coordinate `v_x / v_t` along `w` is `(w_x v_t − v_x w_t)/v_t²`.
pub fn verify_kappa_curvature_identity(model: &FluxModel, f: &[f64; 3], h_fd: f64) -> Result<KappaIdentity> {
    model.require_supported()?;
    let x = model.characteristic_field();
    let y = model.fiber_field();
    let v = x.eval(f);
    if v[0] == 0.0 && v[1] == 0.0 {
        return Err(Error::Degenerate {
            what: "projection of the characteristic field".into(),
            witness: f.to_vec(),
        });
    }
    if v[1] == 0.0 {
        return Err(Error::Canonicalization { witness: f.to_vec() });
    }
    let lhs = crate::characteristics::kappa_fiber_derivative_fd(&x, f, h_fd)?;
    let xf = x.clone().with_h_fd(h_fd);
    let w = lie_bracket(&y.with_h_fd(h_fd), &xf, f)?;
    let rhs = (w[0] * v[1] - v[0] * w[1]) / (v[1] * v[1]);
    Ok(KappaIdentity {
        lhs,
        rhs,
        relative_error: (lhs - rhs).abs() / lhs.abs().max(1.0),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FrameReport {
    pub min_det: f64,
    pub max_det: f64,
    pub completely_nonintegrable: bool,
    /// Lattice point attaining `min_det`.
    pub witness: [f64; 3],
    pub points: usize,
}

/// `|det(X, Y, [X, Y])|` over an `n³` lattice for arbitrary fields.
pub fn frame_condition_fields(
    x: &VectorField<3>,
    y: &VectorField<3>,
    region: &Aabb<3>,
    n: usize,
    eps: f64,
) -> Result<FrameReport> {
    let pts = region.lattice(n.max(1));
    let dets: Vec<Result<f64>> = pts
        .par_iter()
        .map(|p| {
            let w = lie_bracket(x, y, p)?;
            let (a, b) = (x.eval(p), y.eval(p));
            Ok(crate::geomkit::det3(&a, &b, &w).abs())
        })
        .collect();
    let mut min_det = f64::INFINITY;
    let mut max_det = 0.0f64;
    let mut witness = pts[0];
    for (d, p) in dets.into_iter().zip(&pts) {
        let d = d?;
        if d < min_det {
            min_det = d;
            witness = *p;
        }
        max_det = max_det.max(d);
    }
    Ok(FrameReport {
        min_det,
        max_det,
        completely_nonintegrable: min_det > eps,
        witness,
        points: pts.len(),
    })
}

pub fn check_frame_condition(model: &FluxModel, region: &Aabb<3>, n: usize) -> Result<FrameReport> {
    model.require_supported()?;
    frame_condition_fields(&model.characteristic_field(), &model.fiber_field(), region, n, EPS_INT)
}

/// RH residual of a shock for the reweighted density `m·ρ`:
/// `⟨ν, ∫_{u_r}^{u_l} m(z, y) ∂Z/∂y dy⟩`.
pub fn distinguishability_test(model: &FluxModel, weight: &ScalarField<3>, shock: &JumpData) -> Result<f64> {
    let base = jump_admissibility(model, shock)?;
    if base.rh_residual.abs() > 1e-9 || !base.entropic {
        return Err(Error::Validation(format!(
            "shock is not admissible for the unweighted density (rh residual {:.3e}, entropic {})",
            base.rh_residual, base.entropic
        )));
    }
    let z = shock.point;
    let gl = GaussLegendre::new(8);
    let panels = ((shock.u_left - shock.u_right).abs() / 0.25).ceil() as usize;
    let mut bad = None;
    let v = gl.integrate_vec(shock.u_right, shock.u_left, panels, |y| {
        let m = weight.eval(&[z[0], z[1], y]);
        if !(m > 0.0) {
            bad = Some(y);
        }
        let d = model.flux_y(&z, y);
        [m * d[0], m * d[1]]
    });
    if let Some(y) = bad {
        return Err(Error::Validation(format!("weight is not positive at y = {y}")));
    }
    Ok(shock.normal[0] * v[0] + shock.normal[1] * v[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Poly3, PolynomialFlux};

    fn cube() -> Aabb<3> {
        Aabb::new([-1.0; 3], [1.0; 3]).unwrap()
    }

    #[test]
    fn burgers_curvature_and_antisymmetry() {
        let m = FluxModel::flat_projective();
        let f = [0.2, 0.1, -0.4];
        assert!((curvature(&m, &f).unwrap() - 1.0).abs() < 1e-14);
        let (x, y) = (m.characteristic_field(), m.fiber_field());
        let r = reduced_bracket(&x, &y, &x.eval(&f), &y.eval(&f), &f).unwrap();
        assert_eq!(r, -1.0);
    }

    #[test]
    fn y_independent_models_are_flat() {
        let m = FluxModel::linear_advection(Poly3::new([(1.0, [1, 0, 0]), (0.3, [0, 1, 0])])).unwrap();
        for f in cube().lattice(4) {
            assert_eq!(curvature(&m, &f).unwrap(), 0.0);
        }
        let id = verify_kappa_curvature_identity(&m, &[0.1, 0.2, 0.3], 1e-5).unwrap();
        assert!(id.lhs.abs() < 1e-10 && id.rhs.abs() < 1e-12);
    }

    #[test]
    fn identity_on_burgers() {
        let m = FluxModel::flat_projective();
        let id = verify_kappa_curvature_identity(&m, &[0.3, 0.4, 0.7], 1e-5).unwrap();
        assert!((id.lhs - 1.0).abs() < 1e-6 && (id.rhs - 1.0).abs() < 1e-12);
        assert!(id.relative_error <= 1e-6);
    }

    #[test]
    fn frame_condition_examples() {
        let m = FluxModel::flat_projective();
        let r = check_frame_condition(&m, &cube(), 20).unwrap();
        assert!((r.min_det - 1.0).abs() < 1e-10 && (r.max_det - 1.0).abs() < 1e-10);
        assert!(r.completely_nonintegrable);
        let adv = FluxModel::linear_advection(Poly3::new([(0.5, [0, 0, 0])])).unwrap();
        let a = check_frame_condition(&adv, &cube(), 6).unwrap();
        assert!(a.min_det <= 1e-10 && !a.completely_nonintegrable);
        // Z = (y²/2 + x·y, y): X = (y + x, 1, −y), [X, Y] has ∂x-part −1
        let mixed = FluxModel::polynomial(
            "mixed",
            Aabb::new([-2.0; 3], [2.0; 3]).unwrap(),
            PolynomialFlux {
                flux_x: Poly3::new([(0.5, [0, 0, 2]), (1.0, [1, 0, 1])]),
                flux_t: Poly3::new([(1.0, [0, 0, 1])]),
                source: Poly3::zero(),
            },
        );
        let r = check_frame_condition(&mixed, &cube(), 9).unwrap();
        assert!((r.min_det - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distinguishability_examples() {
        let m = FluxModel::flat_projective();
        let shock = JumpData::new([0.0, 0.5], [1.0, 0.0], 1.0, -1.0).unwrap();
        let one = distinguishability_test(&m, &ScalarField::constant(1.0), &shock).unwrap();
        assert!(one.abs() < 1e-14);
        let w = ScalarField::new(|p: &[f64; 3]| 2.0 + p[2].sin());
        let r = distinguishability_test(&m, &w, &shock).unwrap();
        let oracle = 2.0 * (1f64.sin() - 1f64.cos());
        assert!((r - oracle).abs() < 1e-10, "{r} vs {oracle}");
        let wz = ScalarField::new(|p: &[f64; 3]| 1.5 + p[0] * p[0] + p[1]);
        assert!(distinguishability_test(&m, &wz, &shock).unwrap().abs() < 1e-14);
        let bad = JumpData::new([0.0, 0.5], [1.0, 0.0], -1.0, 1.0).unwrap();
        assert!(distinguishability_test(&m, &w, &bad).is_err());
    }
}
