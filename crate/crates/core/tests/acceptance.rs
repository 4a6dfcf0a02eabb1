//! Acceptance suite: one PASS/FAIL line per criterion, with runtime budgets.
//! Run with `cargo test -p charentropy-core --test acceptance`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use charentropy::characteristics::model_kappa;
use charentropy::claws::{build_conservation_law, build_cut, wedge_domain, wedge_surface, CutOptions, FoliationCut, VolumeGrid};
use charentropy::entropy::{entropy_residual, jump_admissibility, volpert_identity_check, weak_rh_residual, Bump};
use charentropy::integrability::{check_frame_condition, distinguishability_test, verify_kappa_curvature_identity};
use charentropy::model::{Flux, Grid2, JumpCurve, Poly3, PolynomialFlux};
use charentropy::oriented::{oriented_existence_test, rh_via_pullback, OrientedLaw};
use charentropy::solver::{godunov_solve, Boundary, Burgers};
use charentropy::{Aabb, DensitySpec, EntropyDensity, FluxModel, JumpData, PiecewiseSection, ScalarField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: String) -> Outcome {
    if cond {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// Composite Simpson with bisection until two successive estimates agree.
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let est = |n: usize| {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
        }
        s * h / 3.0
    };
    let mut n = 16;
    let mut prev = est(n);
    loop {
        n *= 2;
        let cur = est(n);
        if (cur - prev).abs() < 1e-13 || n > 1 << 20 {
            return cur;
        }
        prev = cur;
    }
}

/// Oleinik chord condition for `f(u) = u²/2` at the chord speed.
fn oleinik(ul: f64, ur: f64) -> bool {
    let f = |u: f64| 0.5 * u * u;
    let s = (f(ul) - f(ur)) / (ul - ur);
    (1..200).all(|i| {
        let k = ul + (ur - ul) * i as f64 / 200.0;
        (f(k) - f(ul)) / (k - ul) >= s - 1e-12 && (f(k) - f(ur)) / (k - ur) <= s + 1e-12
    })
}

fn shock_section(cells: usize, ul: f64, ur: f64, x0: f64, speed: f64) -> PiecewiseSection {
    let grid = Grid2::covering(-0.5, 0.5, cells, 0.0, 1.0, cells).unwrap();
    let jump = JumpCurve::straight(x0, 0.0, speed, 1.0, ul, ur).unwrap();
    PiecewiseSection::sample(grid, vec![jump], |x, t| if x < x0 + speed * t { ul } else { ur }).unwrap()
}

fn c1() -> Outcome {
    let m = FluxModel::flat_projective();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut agree = 0;
    for _ in 0..1000 {
        let (ul, ur) = loop {
            let (a, b) = (rng.gen_range(-2.5..2.5), rng.gen_range(-2.5..2.5));
            if f64::abs(a - b) > 1e-6 {
                break (a, b);
            }
        };
        let jump = JumpData::with_speed([0.0, 0.5], 0.5 * (ul + ur), ul, ur).unwrap();
        let r = jump_admissibility(&m, &jump).unwrap();
        agree += usize::from(r.entropic == oleinik(ul, ur));
    }
    check(agree == 1000, format!("{agree}/1000 pairs agree"))
}

fn c2() -> Outcome {
    let m = FluxModel::flat_projective();
    let phi = Bump::new([0.05, 0.5], [0.3, 0.3], 1.0).unwrap();
    let th = Bump::new([0.1], [1.5], 1.0).unwrap();
    let diffs: Vec<f64> = [50, 100, 200, 1000]
        .iter()
        .map(|&n| volpert_identity_check(&m, &shock_section(n, 1.0, -1.0, 0.0, 0.0), &th, &phi).unwrap().difference.abs())
        .collect();
    let fine = volpert_identity_check(&m, &shock_section(1000, 1.0, -1.0, 0.0, 0.0), &th, &phi).unwrap();
    // Surface term: ∫φ(0,t)dt · ∫θ(k)(1 − k²)dk over the stationary (1, −1) shock.
    let oracle = simpson(&|t| phi.eval(&[0.0, t]), 0.2, 0.8) * simpson(&|k| th.eval(&[k]) * (1.0 - k * k), -1.0, 1.0);
    let orders: Vec<f64> = diffs.windows(2).take(2).map(|w| (w[0] / w[1]).log2()).collect();
    check(
        diffs[3] <= 1e-3 && orders.iter().all(|o| *o > 1.5) && (fine.rhs - oracle).abs() < 1e-6,
        format!("|lhs − rhs| at Δ=1e-3: {:.2e}; observed orders {:.2?}; surface vs oracle {:.1e}", diffs[3], orders, (fine.rhs - oracle).abs()),
    )
}

fn c3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let box1 = Aabb::new([-1.0; 3], [1.0; 3]).unwrap();
    let coef = |r: &mut ChaCha8Rng| r.gen_range(-0.5..0.5);
    let cubic = FluxModel::polynomial(
        "cubic",
        Aabb::new([-2.0; 3], [2.0; 3]).unwrap(),
        PolynomialFlux {
            flux_x: Poly3::new([
                (coef(&mut rng), [0, 0, 1]),
                (coef(&mut rng), [0, 0, 2]),
                (coef(&mut rng), [0, 0, 3]),
                (coef(&mut rng), [1, 0, 2]),
                (coef(&mut rng), [0, 1, 1]),
            ]),
            flux_t: Poly3::new([(1.0, [0, 0, 1]), (0.1 * coef(&mut rng), [0, 1, 2]), (0.1 * coef(&mut rng), [1, 0, 1])]),
            source: Poly3::zero(),
        },
    );
    let mut worst = 0.0f64;
    let mut oracle_gap = 0.0f64;
    for m in [FluxModel::flat_projective(), cubic] {
        for _ in 0..100 {
            let p = [rng.gen_range(box1.lo[0]..box1.hi[0]), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let id = verify_kappa_curvature_identity(&m, &p, 1e-4).unwrap();
            worst = worst.max(id.relative_error);
            // Independent fiber difference of κ = Z^x_y / Z^t_y.
            let k = |y: f64| {
                let d = m.flux_y(&[p[0], p[1]], y);
                d[0] / d[1]
            };
            let h = 1e-4;
            let fd = (k(p[2] + h) - k(p[2] - h)) / (2.0 * h);
            oracle_gap = oracle_gap.max((fd - id.rhs).abs() / id.rhs.abs().max(1e-3));
            assert!((model_kappa(&m, &p).unwrap() - k(p[2])).abs() < 1e-12);
        }
    }
    check(
        worst <= 1e-4 && oracle_gap <= 1e-4,
        format!("max relative error {worst:.2e}; against independent fiber difference {oracle_gap:.2e}"),
    )
}

fn c4() -> Outcome {
    let region = Aabb::new([-1.0; 3], [1.0; 3]).unwrap();
    let flat = check_frame_condition(&FluxModel::flat_projective(), &region, 20).unwrap();
    let dev = (flat.min_det - 1.0).abs().max((flat.max_det - 1.0).abs());
    let adv = FluxModel::linear_advection(Poly3::new([(0.5, [0, 0, 0]), (0.3, [1, 0, 0]), (-0.2, [0, 1, 0])])).unwrap();
    let degen = check_frame_condition(&adv, &region, 20).unwrap();
    check(
        dev <= 1e-10 && degen.max_det <= 1e-10 && flat.points == 8000,
        format!("flat: |det − 1| ≤ {dev:.1e} on {} points; y-independent speed: max det {:.1e}", flat.points, degen.max_det),
    )
}

fn c5() -> Outcome {
    let m = FluxModel::flat_projective();
    let shock = JumpData::new([0.0, 0.5], [1.0, 0.0], 1.0, -1.0).unwrap();
    let w = ScalarField::new(|p: &[f64; 3]| 2.0 + p[2].sin());
    let r = distinguishability_test(&m, &w, &shock).unwrap();
    let oracle = simpson(&|y| (2.0 + y.sin()) * y, -1.0, 1.0);
    let base_weights: [fn(&[f64; 3]) -> f64; 3] =
        [|p| 1.5 + p[0] * p[0] + p[1], |p| (p[0] - p[1]).exp(), |p| 3.0 + (4.0 * p[1]).cos()];
    let worst_z = base_weights
        .iter()
        .map(|f| {
            let f = *f;
            distinguishability_test(&m, &ScalarField::new(f), &shock).unwrap().abs()
        })
        .fold(0.0, f64::max);
    check(
        r.abs() >= 0.5 && (r - oracle).abs() < 1e-10 && worst_z <= 1e-10,
        format!("residual {r:.6} (oracle {oracle:.6}); base-only weights ≤ {worst_z:.1e}"),
    )
}

fn wedge_cuts(opts: CutOptions) -> (FoliationCut, FoliationCut) {
    let m = FluxModel::flat_projective();
    let (_, closed) = wedge_domain();
    let (a, _) = build_cut(m.characteristic_field(), wedge_surface(), closed.clone(), closed.bbox, opts).unwrap();
    let (b, _) = build_cut(m.fiber_field(), wedge_surface(), closed.clone(), closed.bbox, opts).unwrap();
    (a, b)
}

fn c6() -> Outcome {
    let (c1, c2) = wedge_cuts(CutOptions::default());
    let s = wedge_surface();
    let alpha_b = |p: &[f64; 3]| [-p[2], 0.5 * p[2] * p[2], 0.0];
    let gamma = move |q: &[f64; 2]| s.restrict(&alpha_b(&s.embed(q)), q);
    let bbox = Aabb::new([0.4, 0.05, -0.9], [0.7, 0.35, 0.9]).unwrap();
    let coarse = build_conservation_law(&c1, &c2, &gamma, VolumeGrid::with_spacing(bbox, 0.0375), 100).unwrap();
    let fine = build_conservation_law(&c1, &c2, &gamma, VolumeGrid::with_spacing(bbox, 0.01875), 100).unwrap();
    let (e0, e1) = (coarse.alpha.sup_error(alpha_b), fine.alpha.sup_error(alpha_b));
    let v = &coarse.validation;
    let resid = v.fiber_contraction.max(v.characteristic_contraction).max(v.boundary);
    check(
        e0 <= 1e-3 && e0 / e1 >= 3.0 && resid <= 1e-3 && v.points == 100 && coarse.nondegenerate,
        format!("sup error {e0:.2e} → {e1:.2e} (ratio {:.2}); residuals ≤ {resid:.2e} at {} points", e0 / e1, v.points),
    )
}

fn c7() -> Outcome {
    let (c1, c2) = wedge_cuts(CutOptions { surface_samples: 6, probes: 6, ..Default::default() });
    let (open, _) = wedge_domain();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut bad = [0usize; 2];
    for (k, cut) in [&c1, &c2].into_iter().enumerate() {
        let mut n = 0;
        while n < 400 {
            let p = [rng.gen_range(0.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            if !open.contains(&p) {
                continue;
            }
            n += 1;
            bad[k] += usize::from(cut.crossings(&p) != 1);
        }
    }
    check(bad == [0, 0], format!("leaves not crossing exactly once: characteristic {}, fiber {}", bad[0], bad[1]))
}

fn c8() -> Outcome {
    let law = OrientedLaw::burgers();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let (ul, ur) = loop {
            let (a, b) = (rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
            if f64::abs(a - b) > 1e-3 {
                break (a, b);
            }
        };
        let s = rng.gen_range(-0.3..0.3);
        let x0 = rng.gen_range(-0.1..0.1);
        let sec = shock_section(60, ul, ur, x0, s);
        let phi = Bump::new([rng.gen_range(-0.1..0.1), rng.gen_range(0.4..0.6)], [rng.gen_range(0.2..0.35), rng.gen_range(0.2..0.35)], 1.0).unwrap();
        let r = rh_via_pullback(&law, &sec, &phi).unwrap();
        let scale = r.pullback_residual.abs().max(r.weak_residual.abs());
        worst = worst.max(if scale > 1e-14 { r.difference / scale } else { 0.0 });
    }
    check(worst <= 1e-6, format!("max relative difference {worst:.2e} over 50 sections"))
}

fn c9() -> Outcome {
    let dom = Aabb::new([-1.0; 3], [1.0; 3]).unwrap();
    let corner = dom.shrunk(0.9).lo;
    let zs = [[0.0, 0.0], [0.5, -0.3], [-0.7, 0.8], [0.85, 0.85]];
    let b = oriented_existence_test(&EntropyDensity::from_model(FluxModel::flat_projective()), &DensitySpec::unit(), &dom, 6).unwrap();
    let unit_err = match &b.candidate {
        Some(c) => zs.iter().map(|z| (c.eval(*z).unwrap() - 1.0).abs()).fold(0.0, f64::max),
        None => f64::INFINITY,
    };
    let f0 = |z: [f64; 2]| (z[0] + z[1]).exp();
    let hidden = EntropyDensity::from_model(FluxModel::flat_projective())
        .with_weight(ScalarField::new(move |p| 1.0 / f0([p[0], p[1]])))
        .unwrap();
    let h = oriented_existence_test(&hidden, &DensitySpec::unit(), &dom, 6).unwrap();
    let rec_err = match &h.candidate {
        Some(c) => zs
            .iter()
            .map(|z| (c.eval(*z).unwrap() / (f0(*z) / f0([corner[0], corner[1]])) - 1.0).abs())
            .fold(0.0, f64::max),
        None => f64::INFINITY,
    };
    let scaled = EntropyDensity::from_model(FluxModel::flat_projective())
        .with_field_scale(ScalarField::new(|p| 1.0 + p[0] * p[0] + p[2] * p[2]))
        .unwrap();
    let s = oriented_existence_test(&scaled, &DensitySpec::unit(), &dom, 6).unwrap();
    check(
        b.closed && unit_err <= 1e-3 && h.closed && rec_err <= 1e-3 && !s.closed && s.closedness_residual >= 1e-2,
        format!("plain: f−1 ≤ {unit_err:.1e}; hidden exp(x+t): rel. error {rec_err:.1e}; rescaled field: residual {:.3}", s.closedness_residual),
    )
}

fn c10() -> Outcome {
    let nx = 400;
    let (x_lo, x_hi, t_final) = (-1.0, 1.0, 0.5);
    let dx = (x_hi - x_lo) / nx as f64;
    let run = godunov_solve(&Burgers, &|x| if x < 0.0 { 1.0 } else { 0.0 }, x_lo, x_hi, nx, t_final, 0.5, Boundary::Outflow).unwrap();
    let m = FluxModel::flat_projective();
    let g = run.section.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut rh, mut ent) = (0.0f64, f64::INFINITY);
    for _ in 0..20 {
        let r = [rng.gen_range(0.08..0.15), rng.gen_range(0.05..0.1)];
        let c = [rng.gen_range(-0.6..0.6), rng.gen_range(g.t0 + r[1] + 0.01..g.t_max() - r[1] - 0.01)];
        let phi = Bump::new(c, r, 1.0).unwrap();
        let theta = Bump::new([rng.gen_range(0.0..1.0)], [rng.gen_range(0.3..1.0)], 1.0).unwrap();
        rh = rh.max(weak_rh_residual(&m, &run.section, &phi).unwrap().abs());
        ent = ent.min(entropy_residual(&m, &run.section, &phi.times_fiber(&theta)).unwrap());
    }
    let expansion = JumpData::with_speed([0.0, 0.25], 0.5, 0.0, 1.0).unwrap();
    let margin = jump_admissibility(&m, &expansion).unwrap().margin;
    check(
        rh <= 10.0 * dx && ent >= -10.0 * dx && margin <= -0.1,
        format!("max |weak| {rh:.2e}, min entropy {ent:.2e} (bound {:.0e}); expansion-jump margin {margin:.3}", 10.0 * dx),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, u64); 10] = [
        ("jump admissibility vs chord condition", c1, 1),
        ("surface/volume identity on a straight shock", c2, 30),
        ("fiber derivative of kappa vs bracket projection", c3, 5),
        ("complete non-integrability of the frame", c4, 1),
        ("reweighted density separates admissible shocks", c5, 1),
        ("conservation law from surface data, roundtrip", c6, 60),
        ("common cut crosses every leaf once", c7, 5),
        ("pullback residual vs weak residual", c8, 10),
        ("oriented existence criterion", c9, 10),
        ("Godunov validation loop", c10, 30),
    ];
    let mut failed = 0;
    for (k, (name, f, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let el = start.elapsed();
        let in_time = el <= Duration::from_secs(*budget);
        let (ok, msg) = match out {
            Ok(m) => (in_time, m),
            Err(m) => (false, m),
        };
        failed += usize::from(!ok);
        println!(
            "criterion {:>2} {}: {} ({msg}; {:.2} s of {budget} s)",
            k + 1,
            if ok { "PASS" } else { "FAIL" },
            name,
            el.as_secs_f64()
        );
    }
    println!("acceptance: {}/10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
