//! Characteristic tracing, classical solutions by the method of
//! characteristics, the map `κ` and the transversality checks.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geomkit::VectorField;
use crate::model::{FluxModel, Grid2, PiecewiseSection};

/// Samples of an integral curve of the characteristic field.
#[derive(Debug, Clone, Serialize)]
pub struct CharacteristicCurve {
    pub s: Vec<f64>,
    pub states: Vec<[f64; 3]>,
    pub step: f64,
    /// True when integration stopped at the domain boundary.
    pub exited: bool,
}

pub fn rk4_step(f: &impl Fn(&[f64; 3]) -> [f64; 3], p: &[f64; 3], h: f64) -> [f64; 3] {
    let add = |a: &[f64; 3], b: &[f64; 3], c: f64| -> [f64; 3] { std::array::from_fn(|i| a[i] + c * b[i]) };
    let k1 = f(p);
    let k2 = f(&add(p, &k1, 0.5 * h));
    let k3 = f(&add(p, &k2, 0.5 * h));
    let k4 = f(&add(p, &k3, h));
    std::array::from_fn(|i| p[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// Integrates the characteristic field from `f0` over the signed parameter
/// span with classical RK4.
pub fn trace_characteristic(model: &FluxModel, f0: [f64; 3], span: f64, step: f64) -> Result<CharacteristicCurve> {
    model.require_supported()?;
    if !(step > 0.0) {
        return Err(Error::Input("step must be positive".into()));
    }
    if !model.domain.contains(&f0) {
        return Err(Error::domain(&f0, "starting point outside the model domain"));
    }
    let field = model.characteristic_field();
    let rhs = |p: &[f64; 3]| field.eval(p);
    let n = (span.abs() / step).ceil() as usize;
    let h = if n == 0 { 0.0 } else { span / n as f64 };
    let mut curve = CharacteristicCurve {
        s: vec![0.0],
        states: vec![f0],
        step: h.abs(),
        exited: false,
    };
    let mut p = f0;
    for k in 0..n {
        let next = rk4_step(&rhs, &p, h);
        if !model.domain.contains(&next) || next.iter().any(|v| !v.is_finite()) {
            curve.exited = true;
            break;
        }
        p = next;
        curve.s.push(h * (k + 1) as f64);
        curve.states.push(p);
    }
    if n > 0 && curve.states.len() == 1 {
        return Err(Error::Coverage("characteristic leaves the domain immediately".into()));
    }
    Ok(curve)
}

/// Options for [`classical_solve`].
#[derive(Debug, Clone, Copy)]
pub struct ClassicalOptions {
    /// Number of rays in the characteristic fan.
    pub rays: usize,
    /// RK4 substeps per grid time step.
    pub substeps: usize,
}

impl Default for ClassicalOptions {
    fn default() -> Self {
        Self { rays: 401, substeps: 4 }
    }
}

/// Method-of-characteristics solution sampled on a grid.
#[derive(Debug, Clone)]
pub struct ClassicalSolution {
    /// Section truncated to the time levels before the first crossing.
    pub section: PiecewiseSection,
    /// `min(T, crossing time)`.
    pub valid_until: f64,
    /// Estimated first crossing time, if one occurred before `T`.
    pub crossing_time: Option<f64>,
}

/// Solves the initial value problem `u(x, t0) = u0(x)` by characteristics
/// up to the first crossing, detected as a sign change of `∂x/∂x0`.
pub fn classical_solve(
    model: &FluxModel,
    u0: &dyn Fn(f64) -> f64,
    t_final: f64,
    grid: Grid2,
    opts: ClassicalOptions,
) -> Result<ClassicalSolution> {
    model.require_supported()?;
    let field = model.characteristic_field();
    let t0 = grid.t0;
    let levels = (0..grid.nt).take_while(|&n| grid.t(n) <= t_final + 1e-12).count();
    if levels < 2 {
        return Err(Error::Input("final time precedes the first grid line".into()));
    }
    let horizon = grid.t(levels - 1) - t0;
    let rhs = |p: &[f64; 3]| -> [f64; 3] {
        let v = field.eval(p);
        [v[0] / v[1], 1.0, v[2] / v[1]]
    };
    // widen the launch interval by the initial speed envelope
    let mut max_speed = 0.0f64;
    for i in 0..grid.nx {
        let x = grid.x(i);
        let v = field.eval(&[x, t0, u0(x)]);
        if v[1] == 0.0 {
            return Err(Error::Canonicalization { witness: vec![x, t0, u0(x)] });
        }
        max_speed = max_speed.max((v[0] / v[1]).abs());
    }
    let mut pad = 2.0 * max_speed * horizon + 2.0 * grid.dx;
    let mut last = None;
    for _ in 0..8 {
        match fan_attempt(&rhs, u0, &grid, levels, pad, opts)? {
            Some((values, kept, crossing)) => {
                let out_grid = Grid2 { nt: kept, ..grid };
                let valid_until = crossing.map_or(t_final, |c: f64| c.min(t_final));
                return Ok(ClassicalSolution {
                    section: PiecewiseSection::new(out_grid, values, vec![])?,
                    valid_until,
                    crossing_time: crossing,
                });
            }
            None => {
                last = Some(pad);
                pad *= 4.0;
            }
        }
    }
    Err(Error::Coverage(format!(
        "grid not covered by the characteristic fan (launch padding {:.3e})",
        last.unwrap_or(pad)
    )))
}

type FanOutcome = Option<(Vec<f64>, usize, Option<f64>)>;

fn fan_attempt(
    rhs: &impl Fn(&[f64; 3]) -> [f64; 3],
    u0: &dyn Fn(f64) -> f64,
    grid: &Grid2,
    levels: usize,
    pad: f64,
    opts: ClassicalOptions,
) -> Result<FanOutcome> {
    let t0 = grid.t0;
    let (xa, xb) = (grid.x0 - pad, grid.x_max() + pad);
    let rays = opts.rays.max(3);
    let launch: Vec<f64> = (0..rays).map(|k| xa + (xb - xa) * k as f64 / (rays - 1) as f64).collect();
    let mut states: Vec<[f64; 3]> = launch.iter().map(|&x| [x, t0, u0(x)]).collect();
    let gap0: Vec<f64> = launch.windows(2).map(|w| w[1] - w[0]).collect();

    let mut values = Vec::with_capacity(grid.nx * levels);
    let mut crossing = None;
    let mut prev_j = 1.0f64;
    let mut kept = 0;
    for n in 0..levels {
        if n > 0 {
            let h = grid.dt / opts.substeps as f64;
            for s in states.iter_mut() {
                let mut p = *s;
                for _ in 0..opts.substeps {
                    p = rk4_step(rhs, &p, h);
                }
                *s = p;
            }
        }
        let jmin = states
            .windows(2)
            .zip(&gap0)
            .map(|(w, g)| (w[1][0] - w[0][0]) / g)
            .fold(f64::INFINITY, f64::min);
        if jmin <= 1e-12 {
            let tp = grid.t(n - 1);
            let est = tp + grid.dt * prev_j / (prev_j - jmin);
            crossing = Some(est);
            if n == 1 {
                return Err(Error::EarlyCrossing { crossing_time: est });
            }
            break;
        }
        prev_j = jmin;
        for i in 0..grid.nx {
            let x = grid.x(i);
            let k = states.partition_point(|s| s[0] <= x);
            if k == 0 || k == states.len() {
                return Ok(None);
            }
            let (a, b) = (&states[k - 1], &states[k]);
            let w = (x - a[0]) / (b[0] - a[0]);
            values.push(a[2] + w * (b[2] - a[2]));
        }
        kept += 1;
    }
    Ok(Some((values, kept, crossing)))
}

/// Affine coordinate `X^x / X^t` of the projected characteristic direction.
pub fn kappa(field: &VectorField<3>, f: &[f64; 3]) -> Result<f64> {
    let v = field.eval(f);
    if v[1] == 0.0 || !v[1].is_finite() {
        return Err(Error::Canonicalization { witness: f.to_vec() });
    }
    Ok(v[0] / v[1])
}

pub fn model_kappa(model: &FluxModel, f: &[f64; 3]) -> Result<f64> {
    kappa(&model.characteristic_field(), f)
}

/// `∂κ/∂y` by central differences along the fiber.
pub fn kappa_fiber_derivative_fd(field: &VectorField<3>, f: &[f64; 3], h: f64) -> Result<f64> {
    let mut a = *f;
    let mut b = *f;
    a[2] += h;
    b[2] -= h;
    Ok((kappa(field, &a)? - kappa(field, &b)?) / (2.0 * h))
}

/// `∂κ/∂y`, from analytic jets when available.
pub fn kappa_fiber_derivative(field: &VectorField<3>, f: &[f64; 3]) -> Result<f64> {
    if !field.has_jets() {
        return kappa_fiber_derivative_fd(field, f, field.h_fd);
    }
    let v = field.eval(f);
    if v[1] == 0.0 {
        return Err(Error::Canonicalization { witness: f.to_vec() });
    }
    let j = field.jacobian(f);
    Ok((j[0][2] * v[1] - v[0] * j[1][2]) / (v[1] * v[1]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaRegime {
    /// `|∂κ/∂y| > ε` everywhere sampled: densities are distinguishable.
    Distinguishing,
    /// `∂κ/∂y = 0` everywhere sampled: all densities share their solutions.
    Degenerate,
    Mixed,
}

/// Classifies a region by the fiber derivative of `κ` on an `n³` lattice.
pub fn classify_kappa(model: &FluxModel, region: &crate::geomkit::Aabb<3>, n: usize, eps: f64) -> Result<KappaRegime> {
    let field = model.characteristic_field();
    let mut all_big = true;
    let mut all_zero = true;
    for p in region.lattice(n) {
        let d = kappa_fiber_derivative(&field, &p)?.abs();
        all_big &= d > eps;
        all_zero &= d <= eps;
    }
    Ok(match (all_big, all_zero) {
        (true, _) => KappaRegime::Distinguishing,
        (_, true) => KappaRegime::Degenerate,
        _ => KappaRegime::Mixed,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TransversalityReport {
    pub tp1: bool,
    pub tp2: bool,
    /// The line `H` used for the first test.
    pub h_direction: Option<[f64; 2]>,
    /// Fiber values where a test failed, tagged by test name.
    pub witnesses: Vec<(String, f64)>,
}

/// Tolerances for [`check_transversality`].
#[derive(Debug, Clone, Copy)]
pub struct TransversalityOptions {
    pub samples: usize,
    pub eps: f64,
}

impl Default for TransversalityOptions {
    fn default() -> Self {
        Self { samples: 65, eps: 1e-8 }
    }
}

/// Checks both transversality properties on the fiber interval over `z0`.
///
/// With a two-dimensional base the subspace `K` is `{0}`, so the second
/// property reduces to `∂κ/∂y ≠ 0` on the interval. When `h` is `None` the
/// first property is decided by searching 16 candidate directions.
pub fn check_transversality(
    model: &FluxModel,
    z0: [f64; 2],
    fiber_interval: (f64, f64),
    h: Option<[f64; 2]>,
    opts: TransversalityOptions,
) -> Result<TransversalityReport> {
    model.require_supported()?;
    if let Some(d) = h {
        if d[0] == 0.0 && d[1] == 0.0 {
            return Err(Error::Input("H must be a line (nonzero direction)".into()));
        }
    }
    let (a, b) = fiber_interval;
    let n = opts.samples.max(2);
    let ys: Vec<f64> = (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect();
    for &y in &ys {
        let p = [z0[0], z0[1], y];
        if !model.domain.contains(&p) {
            return Err(Error::domain(&p, "fiber interval leaves the model domain"));
        }
    }
    let field = model.characteristic_field();
    let tp1_fails = |d: [f64; 2]| -> Vec<f64> {
        ys.iter()
            .copied()
            .filter(|&y| {
                let v = field.eval(&[z0[0], z0[1], y]);
                (d[0] * v[1] - d[1] * v[0]).abs() <= opts.eps
            })
            .collect()
    };
    let mut witnesses = Vec::new();
    let (tp1, h_direction) = match h {
        Some(d) => {
            let f = tp1_fails(d);
            let ok = f.is_empty();
            witnesses.extend(f.into_iter().map(|y| ("tp1".to_string(), y)));
            (ok, Some(d))
        }
        None => {
            let found = (0..16)
                .map(|k| {
                    let th = std::f64::consts::PI * k as f64 / 16.0;
                    [th.cos(), th.sin()]
                })
                .find(|d| tp1_fails(*d).is_empty());
            (found.is_some(), found)
        }
    };
    let mut tp2 = true;
    for &y in &ys {
        let d = kappa_fiber_derivative(&field, &[z0[0], z0[1], y])?;
        if d.abs() <= opts.eps {
            tp2 = false;
            witnesses.push(("tp2".to_string(), y));
        }
    }
    Ok(TransversalityReport {
        tp1,
        tp2,
        h_direction,
        witnesses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Poly3;

    #[test]
    fn burgers_characteristic_is_a_line() {
        let m = FluxModel::flat_projective();
        let c = trace_characteristic(&m, [0.0, 0.0, 0.5], 1.0, 0.01).unwrap();
        let last = c.states.last().unwrap();
        assert!((last[0] - 0.5).abs() < 1e-10 && (last[1] - 1.0).abs() < 1e-10);
        assert_eq!(last[2], 0.5);
        let still = trace_characteristic(&m, [0.3, 0.0, 0.0], 1.0, 0.1).unwrap();
        assert!(still.states.iter().all(|s| s[0] == 0.3 && s[2] == 0.0));
        for s in &c.states {
            assert!((s[0] - s[1] * s[2]).abs() < 1e-12);
        }
    }

    #[test]
    fn trace_stops_at_the_boundary() {
        let m = FluxModel::flat_projective();
        let c = trace_characteristic(&m, [2.9, 0.0, 1.0], 1.0, 0.05).unwrap();
        assert!(c.exited);
        assert!(matches!(
            trace_characteristic(&m, [2.999, 0.0, 1.0], 1.0, 0.5),
            Err(Error::Coverage(_))
        ));
        assert!(trace_characteristic(&m, [5.0, 0.0, 0.0], 1.0, 0.5).is_err());
    }

    #[test]
    fn classical_solutions_and_crossings() {
        let m = FluxModel::flat_projective();
        let grid = Grid2::covering(-1.0, 1.0, 40, 0.0, 2.0, 20).unwrap();
        let sol = classical_solve(&m, &|x| -x, 2.0, grid, ClassicalOptions::default()).unwrap();
        let tc = sol.crossing_time.unwrap();
        assert!((tc - 1.0).abs() < 1e-6, "{tc}");
        assert!(sol.section.grid.t_max() < 1.0);
        // u(x, t) = −x / (1 − t)
        let g = sol.section.grid;
        for n in 0..g.nt {
            for i in 0..g.nx {
                let exact = -g.x(i) / (1.0 - g.t(n));
                assert!((sol.section.value(i, n) - exact).abs() < 1e-9);
            }
        }
        let c = classical_solve(&m, &|_| 0.3, 2.0, grid, ClassicalOptions::default()).unwrap();
        assert!(c.crossing_time.is_none() && c.section.values.iter().all(|v| (v - 0.3).abs() < 1e-14));
        let long = Grid2::covering(-1.0, 1.0, 20, 0.0, 10.0, 50).unwrap();
        let r = classical_solve(&m, &|x| x, 10.0, long, ClassicalOptions::default()).unwrap();
        assert!(r.crossing_time.is_none());
        assert_eq!(r.valid_until, 10.0);
    }

    #[test]
    fn early_crossing_is_an_error() {
        let m = FluxModel::flat_projective();
        let grid = Grid2::covering(-1.0, 1.0, 20, 0.0, 1.0, 2).unwrap();
        let err = classical_solve(&m, &|x| -10.0 * x, 1.0, grid, ClassicalOptions::default()).unwrap_err();
        match err {
            Error::EarlyCrossing { crossing_time } => assert!((crossing_time - 0.1).abs() < 0.05),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn kappa_examples() {
        let m = FluxModel::flat_projective();
        let x = m.characteristic_field();
        assert_eq!(kappa(&x, &[0.1, 0.2, 0.7]).unwrap(), 0.7);
        assert_eq!(kappa_fiber_derivative(&x, &[0.1, 0.2, 0.7]).unwrap(), 1.0);
        let adv = FluxModel::linear_advection(Poly3::new([(1.0, [1, 0, 0]), (0.5, [0, 0, 0])])).unwrap();
        let xa = adv.characteristic_field();
        assert_eq!(kappa(&xa, &[0.2, 0.0, 0.9]).unwrap(), 0.7);
        assert_eq!(kappa_fiber_derivative(&xa, &[0.2, 0.0, 0.9]).unwrap(), 0.0);
        let region = crate::geomkit::Aabb::new([-1.0; 3], [1.0; 3]).unwrap();
        assert_eq!(classify_kappa(&m, &region, 5, 1e-8).unwrap(), KappaRegime::Distinguishing);
        assert_eq!(classify_kappa(&adv, &region, 5, 1e-8).unwrap(), KappaRegime::Degenerate);
    }

    #[test]
    fn transversality_examples() {
        let m = FluxModel::flat_projective();
        let r = check_transversality(&m, [0.0, 0.0], (-1.0, 1.0), Some([1.0, 0.0]), Default::default()).unwrap();
        assert!(r.tp1 && r.tp2 && r.witnesses.is_empty());
        let adv = FluxModel::linear_advection(Poly3::new([(0.5, [0, 0, 0])])).unwrap();
        let ra = check_transversality(&adv, [0.0, 0.0], (-1.0, 1.0), None, Default::default()).unwrap();
        assert!(ra.tp1 && !ra.tp2);
        assert!(check_transversality(&m, [0.0, 0.0], (-1.0, 1.0), Some([0.0, 0.0]), Default::default()).is_err());
        // H along the projected direction at y = 0 fails
        let bad = check_transversality(&m, [0.0, 0.0], (-1.0, 1.0), Some([0.0, 1.0]), Default::default()).unwrap();
        assert!(!bad.tp1);
        assert!(bad.witnesses.iter().any(|(k, y)| k == "tp1" && *y == 0.0));
    }
}
