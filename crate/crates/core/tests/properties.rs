use charentropy::characteristics::trace_characteristic;
use charentropy::entropy::{jump_admissibility, weak_rh_residual, Bump};
use charentropy::geomkit::{det3, exterior_derivative, lie_bracket};
use charentropy::integrability::frame_condition_fields;
use charentropy::model::{Grid2, JumpCurve, Poly3, PolynomialFlux};
use charentropy::oriented::{integral_identity_check, rho_from_tau, separability_test, OrientedLaw};
use charentropy::{Aabb, DensitySpec, FluxModel, FormField, JumpData, PiecewiseSection, ScalarField};
use proptest::prelude::*;

fn cube() -> Aabb<3> {
    Aabb::new([-1.0; 3], [1.0; 3]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn shock_speed_law(ul in -2.0f64..2.0, ur in -2.0f64..2.0, x in -1.0f64..1.0, t in 0.0f64..1.0, ds in 0.05f64..1.0) {
        prop_assume!((ul - ur).abs() > 1e-3);
        let m = FluxModel::flat_projective();
        let s = 0.5 * (ul + ur);
        let good = jump_admissibility(&m, &JumpData::with_speed([x, t], s, ul, ur).unwrap()).unwrap();
        prop_assert!(good.rh_residual.abs() < 1e-12);
        let bad = jump_admissibility(&m, &JumpData::with_speed([x, t], s + ds, ul, ur).unwrap()).unwrap();
        prop_assert!(bad.rh_residual.abs() > 1e-6);
    }

    #[test]
    fn kruzhkov_agrees_with_oleinik_for_burgers(ul in -2.0f64..2.0, ur in -2.0f64..2.0) {
        prop_assume!((ul - ur).abs() > 1e-3);
        let m = FluxModel::flat_projective();
        let r = jump_admissibility(&m, &JumpData::with_speed([0.0, 0.5], 0.5 * (ul + ur), ul, ur).unwrap()).unwrap();
        prop_assert_eq!(r.entropic, ul > ur);
    }

    #[test]
    fn weak_residual_is_linear_in_the_test_amplitude(a in 0.1f64..3.0, s in -0.5f64..0.5) {
        let m = FluxModel::flat_projective();
        let grid = Grid2::covering(-0.5, 0.5, 40, 0.0, 1.0, 40).unwrap();
        let j = JumpCurve::straight(0.0, 0.0, s, 1.0, 1.0, 0.0).unwrap();
        let sec = PiecewiseSection::sample(grid, vec![j], |x, t| if x < s * t { 1.0 } else { 0.0 }).unwrap();
        let p1 = Bump::new([0.0, 0.5], [0.3, 0.3], 1.0).unwrap();
        let pa = Bump::new([0.0, 0.5], [0.3, 0.3], a).unwrap();
        let r1 = weak_rh_residual(&m, &sec, &p1).unwrap();
        let ra = weak_rh_residual(&m, &sec, &pa).unwrap();
        prop_assert!((ra - a * r1).abs() <= 1e-12 * (1.0 + ra.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn frame_determinant_scales_with_the_square(c0 in 0.5f64..2.0, c1 in -0.3f64..0.3, c2 in -0.3f64..0.3,
                                                px in -0.8f64..0.8, pt in -0.8f64..0.8, py in -0.8f64..0.8) {
        let m = FluxModel::flat_projective();
        let x = m.characteristic_field();
        let y = m.fiber_field();
        let g = ScalarField::new(move |p| c0 + c1 * p[0] + c2 * p[2]).with_gradient(move |_| [c1, 0.0, c2]);
        let gx = x.scaled(&g);
        let p = [px, pt, py];
        let d = |a: &charentropy::VectorField<3>| det3(&a.eval(&p), &y.eval(&p), &lie_bracket(a, &y, &p).unwrap());
        let gv = g.eval(&p);
        prop_assert!((d(&gx) - gv * gv * d(&x)).abs() < 1e-12);
        let rep = frame_condition_fields(&gx, &y, &cube().shrunk(0.9), 4, 1e-8).unwrap();
        prop_assert!(rep.completely_nonintegrable);
    }

    #[test]
    fn invariants_are_conserved_along_characteristics(x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let m = FluxModel::flat_projective();
        let c = trace_characteristic(&m, [x, 0.0, y], 1.5, 0.05).unwrap();
        for (name, inv) in m.invariants() {
            let v0 = inv(&c.states[0]);
            for p in &c.states {
                prop_assert!((inv(p) - v0).abs() < 1e-10, "{} drifts", name);
            }
        }
    }

    #[test]
    fn rk4_refinement_has_fourth_order(x in -0.5f64..0.5, y in 0.1f64..0.6) {
        // Z = (y²/2 + x y, y): characteristics bend, x' = y + x, y' = −y.
        let dom = Aabb::new([-4.0, -1.0, -2.0], [4.0, 3.0, 2.0]).unwrap();
        let poly = PolynomialFlux {
            flux_x: Poly3::new([(0.5, [0, 0, 2]), (1.0, [1, 0, 1])]),
            flux_t: Poly3::new([(1.0, [0, 0, 1])]),
            source: Poly3::zero(),
        };
        let m = FluxModel::polynomial("bent", dom, poly);
        let end = |h: f64| *trace_characteristic(&m, [x, 0.0, y], 1.0, h).unwrap().states.last().unwrap();
        let (a, b, c) = (end(0.2), end(0.1), end(0.05));
        let e1 = (0..3).map(|i| (a[i] - c[i]).abs()).fold(0.0, f64::max);
        let e2 = (0..3).map(|i| (b[i] - c[i]).abs()).fold(0.0, f64::max);
        prop_assume!(e2 > 1e-13);
        // Against the h/4 run, exact fourth order gives e1/e2 = 16·(255/256)/(15/16) ≈ 17.
        prop_assert!(e1 / e2 > 12.0, "ratio {}", e1 / e2);
    }

    #[test]
    fn d_squared_vanishes(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0,
                          px in -0.5f64..0.5, pt in -0.5f64..0.5, py in -0.5f64..0.5) {
        let f = ScalarField::new(move |p| (a * p[0] + b * p[1]).sin() * (c * p[2]).exp() + p[0] * p[1] * p[2]);
        let form = FormField::from_scalar(f, cube()).with_h_fd(1e-4);
        let d1 = form.differential().unwrap().with_h_fd(1e-4);
        let dd = exterior_derivative(&d1, &[px, pt, py]).unwrap();
        let scale = 1.0 + a.abs() + b.abs() + c.abs();
        prop_assert!(dd.iter().all(|v| v.abs() < 1e-5 * scale.powi(3)), "{:?}", dd);
    }

    #[test]
    fn induced_density_times_mu_is_independent_of_mu(m0 in 0.5f64..2.0, m1 in -0.1f64..0.1, m2 in -0.1f64..0.1,
                                                    px in -0.9f64..0.9, pt in -0.9f64..0.9, py in -0.9f64..0.9) {
        let law = OrientedLaw::burgers();
        let mu = DensitySpec::new(ScalarField::new(move |z| m0 + m1 * z[0] + m2 * z[1]));
        let rho = rho_from_tau(&law, &mu).unwrap();
        let p = [px, pt, py];
        prop_assert!((rho.weight(&p) * mu.weight.eval(&[px, pt]) - 1.0).abs() < 1e-8);
        let r = integral_identity_check(&law, &mu, [px, pt], py, py + 0.5).unwrap();
        prop_assert!(r.difference < 1e-8);
    }

    #[test]
    fn separability_is_invariant_under_constant_factors(k in 0.1f64..10.0, a in -1.0f64..1.0, b in -1.0f64..1.0) {
        let m = FluxModel::flat_projective();
        let (x, y) = (m.characteristic_field(), m.fiber_field());
        let f = ScalarField::new(move |p| (1.5 + (p[0] - p[1] * p[2]).sin()) * (a * p[0] + b * p[1]).exp());
        let g = ScalarField::new(move |p| k * (1.5 + (p[0] - p[1] * p[2]).sin()) * (a * p[0] + b * p[1]).exp());
        let rf = separability_test(&f, &x, &y, &cube(), 5).unwrap();
        let rg = separability_test(&g, &x, &y, &cube(), 5).unwrap();
        prop_assert!(rf.separable && rg.separable);
        prop_assert!((rf.closedness_residual - rg.closedness_residual).abs() < 1e-4);
    }
}
