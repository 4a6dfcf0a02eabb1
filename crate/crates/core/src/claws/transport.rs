use serde::Serialize;

use super::cut::{require_same_surface, FoliationCut};
use super::grid::GridField;
use crate::error::{Error, Result};
use crate::geomkit::{contract, exterior_derivative, solve3, Aabb, FormField, VectorField};
use crate::quadrature::GaussLegendre;

/// Nodes per flow line for the transport ODE.
pub const LINE_NODES: usize = 101;

/// Volume lattice on which transported forms are stored.
#[derive(Debug, Clone, Copy)]
pub struct VolumeGrid {
    pub bbox: Aabb<3>,
    pub n: [usize; 3],
}

impl VolumeGrid {
    pub fn uniform(bbox: Aabb<3>, n: usize) -> Self {
        Self { bbox, n: [n; 3] }
    }

    /// Roughly equal spacing `h` on every axis.
    pub fn with_spacing(bbox: Aabb<3>, h: f64) -> Self {
        Self { bbox, n: std::array::from_fn(|a| (((bbox.hi[a] - bbox.lo[a]) / h).round() as usize).max(2) + 1) }
    }
}

/// Covector data on the cut surface in patch parameters.
pub type SurfaceData<'a> = &'a (dyn Fn(&[f64; 2]) -> [f64; 2] + Sync);

/// Solves `i_X dα = β`, `i_X α = γ`, `j*α = δ` for a 1-form `α` by
/// integrating `L_X α = β + dγ` along flow lines from the surface.
///
/// Along a flow line `dα_k/ds = (β + dγ)_k − α_j ∂_k X^j`; the starting
/// value solves `[e_a; e_b; X]·α = [δ_a, δ_b, γ]`.
pub fn transport_solve(
    cut: &FoliationCut,
    beta: &FormField<3>,
    gamma: &FormField<3>,
    delta: SurfaceData<'_>,
    grid: VolumeGrid,
) -> Result<GridField<3>> {
    check_degrees(beta, gamma)?;
    GridField::sample(grid.bbox, grid.n, |u| transport_point(cut, beta, gamma, delta, u))
}

fn check_degrees(beta: &FormField<3>, gamma: &FormField<3>) -> Result<()> {
    if beta.degree() != 1 || gamma.degree() != 0 {
        return Err(Error::Degree("transport needs a 1-form β and a 0-form γ".into()));
    }
    Ok(())
}

/// Transported value at a single point.
pub fn transport_point(
    cut: &FoliationCut,
    beta: &FormField<3>,
    gamma: &FormField<3>,
    delta: SurfaceData<'_>,
    u: &[f64; 3],
) -> Result<[f64; 3]> {
    let x = &cut.field;
    let foot = cut.project(u).map_err(|e| match e {
        Error::Coverage(m) | Error::Domain { reason: m, .. } => Error::Coverage(format!("{m} (from {u:?})")),
        e => e,
    })?;
    let s = foot.param;
    let e = cut.surface.tangents(&s);
    let p0 = foot.point;
    let xv = x.eval(&p0);
    let d = delta(&s);
    let g0 = gamma.eval(&p0)[0];
    let a0 = solve3(&[e[0], e[1], xv], &[d[0], d[1], g0], 1e-14).ok_or_else(|| Error::Transversality {
        witness: p0.to_vec(),
        reason: "surface tangent to the flow at the foot".into(),
    })?;
    let rhs = |q: &[f64; 6]| -> [f64; 6] {
        let p = [q[0], q[1], q[2]];
        let v = x.eval(&p);
        let j = x.jacobian(&p);
        let b = beta.eval(&p);
        let dg = gamma.jets(&p)[0];
        let mut out = [v[0], v[1], v[2], 0.0, 0.0, 0.0];
        for k in 0..3 {
            let mut acc = b[k] + dg[k];
            for jj in 0..3 {
                acc -= q[3 + jj] * j[jj][k];
            }
            out[3 + k] = acc;
        }
        out
    };
    let steps = LINE_NODES - 1;
    let h = -foot.time / steps as f64;
    let mut q = [p0[0], p0[1], p0[2], a0[0], a0[1], a0[2]];
    for _ in 0..steps {
        q = rk4_6(&rhs, &q, h);
    }
    Ok([q[3], q[4], q[5]])
}

fn rk4_6(f: &impl Fn(&[f64; 6]) -> [f64; 6], p: &[f64; 6], h: f64) -> [f64; 6] {
    let add = |a: &[f64; 6], b: &[f64; 6], c: f64| -> [f64; 6] { std::array::from_fn(|i| a[i] + c * b[i]) };
    let k1 = f(p);
    let k2 = f(&add(p, &k1, 0.5 * h));
    let k3 = f(&add(p, &k2, 0.5 * h));
    let k4 = f(&add(p, &k3, h));
    std::array::from_fn(|i| p[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// Residuals of a constructed conservation law at validation points.
#[derive(Debug, Clone, Serialize)]
pub struct ClawValidation {
    pub points: usize,
    /// `max |i_{X₂} α|`.
    pub fiber_contraction: f64,
    /// `max |i_{X₁} dα|`.
    pub characteristic_contraction: f64,
    /// `max |j*α − γ|` over surface samples.
    pub boundary: f64,
    /// `min |dα|`.
    pub min_dalpha: f64,
}

#[derive(Debug, Clone)]
pub struct ClawResult {
    pub alpha: GridField<3>,
    pub beta: GridField<3>,
    pub nondegenerate: bool,
    pub validation: ClawValidation,
}

/// Deterministic low-discrepancy points (Halton bases 2, 3, 5) in a box.
pub fn halton_points(bbox: &Aabb<3>, n: usize) -> Vec<[f64; 3]> {
    fn radical(mut i: usize, b: usize) -> f64 {
        let (mut f, mut r) = (1.0, 0.0);
        while i > 0 {
            f /= b as f64;
            r += f * (i % b) as f64;
            i /= b;
        }
        r
    }
    (1..=n)
        .map(|i| {
            let q = [radical(i, 2), radical(i, 3), radical(i, 5)];
            std::array::from_fn(|a| bbox.lo[a] + q[a] * (bbox.hi[a] - bbox.lo[a]))
        })
        .collect()
}

/// Axis `a` when the field is the coordinate field `∂_a` on a sample lattice.
fn coordinate_axis(x: &VectorField<3>, bbox: &Aabb<3>) -> Option<usize> {
    (0..3).find(|&a| {
        bbox.lattice(3).iter().all(|p| {
            let v = x.eval(p);
            (0..3).all(|k| v[k] == if k == a { 1.0 } else { 0.0 })
        })
    })
}

/// `φ = −∫ β_a` along grid columns parallel to axis `a`, starting from the
/// column's foot on the surface. `β` is evaluated exactly at 4 Gauss points
/// per node interval.
fn potential_by_columns(
    cut: &FoliationCut,
    beta: &(dyn Fn(&[f64; 3]) -> Result<[f64; 3]> + Sync),
    grid: VolumeGrid,
    axis: usize,
) -> Result<GridField<1>> {
    use rayon::prelude::*;
    let gl = GaussLegendre::new(4);
    let shape = GridField::<1> { bbox: grid.bbox, n: grid.n, data: vec![] };
    let others: Vec<usize> = (0..3).filter(|&a| a != axis).collect();
    let (na, nb, nc) = (grid.n[others[0]], grid.n[others[1]], grid.n[axis]);
    let columns: Result<Vec<Vec<f64>>> = (0..na * nb)
        .into_par_iter()
        .map(|m| {
            let mut idx = [0usize; 3];
            idx[others[0]] = m % na;
            idx[others[1]] = m / na;
            let node = |k: usize| {
                let mut q = idx;
                q[axis] = k;
                shape.node(q[0], q[1], q[2])
            };
            let foot = cut.project(&node(0))?;
            let coord = |p: &[f64; 3]| p[axis];
            let at = |c: f64| {
                let mut p = node(0);
                p[axis] = c;
                p
            };
            let mut err = None;
            let mut seg = |a: f64, b: f64| -> f64 {
                let panels = (((b - a).abs() / 0.05).ceil() as usize).max(1);
                gl.integrate(a, b, panels, |c| match beta(&at(c)) {
                    Ok(v) => v[axis],
                    Err(e) => {
                        err.get_or_insert(e);
                        0.0
                    }
                })
            };
            let c0 = coord(&node(0));
            let mut cum = vec![0.0; nc];
            for k in 1..nc {
                cum[k] = cum[k - 1] + seg(coord(&node(k - 1)), coord(&node(k)));
            }
            let cs = seg(c0, foot.point[axis]);
            if let Some(e) = err {
                return Err(e);
            }
            Ok(cum.into_iter().map(|c| -(c - cs)).collect())
        })
        .collect();
    let columns = columns?;
    let mut data = vec![[0.0]; grid.n[0] * grid.n[1] * grid.n[2]];
    for (m, col) in columns.iter().enumerate() {
        let mut idx = [0usize; 3];
        idx[others[0]] = m % na;
        idx[others[1]] = m / na;
        for (k, v) in col.iter().enumerate() {
            idx[axis] = k;
            data[shape.index(idx[0], idx[1], idx[2])] = [*v];
        }
    }
    Ok(GridField { bbox: grid.bbox, n: grid.n, data })
}

/// Two-step construction of a conservation law from surface data `γ`:
/// a flow-invariant extension `β` along the first foliation, then
/// `α = β + dφ` with `L_{X₂}φ = −i_{X₂}β` and `φ = 0` on the surface.
pub fn build_conservation_law(
    cut1: &FoliationCut,
    cut2: &FoliationCut,
    gamma: SurfaceData<'_>,
    grid: VolumeGrid,
    validation_points: usize,
) -> Result<ClawResult> {
    require_same_surface(cut1, cut2)?;
    let zero1 = FormField::zero(1, grid.bbox)?;
    let zero0 = FormField::zero(0, grid.bbox)?;
    let beta = transport_solve(cut1, &zero1, &zero0, gamma, grid)?;
    let x2 = &cut2.field;
    let delta = |s: &[f64; 2]| gamma(s);
    let exact_beta = |p: &[f64; 3]| transport_point(cut1, &zero1, &zero0, &delta, p);
    let phi = match coordinate_axis(x2, &grid.bbox) {
        Some(axis) => potential_by_columns(cut2, &exact_beta, grid, axis)?,
        None => {
            let gl = GaussLegendre::new(8);
            GridField::<1>::sample(grid.bbox, grid.n, |u| {
                let foot = cut2.project(u)?;
                let span = -foot.time;
                let panels = ((span.abs() / 0.1).ceil() as usize).max(1);
                let v = gl.integrate(0.0, span, panels, |s| {
                    let q = cut2.flow(&foot.point, s);
                    contract(&x2.eval(&q), 1, &beta.eval(&q))[0]
                });
                Ok([-v])
            })?
        }
    };
    let d = [phi.derivative(0), phi.derivative(1), phi.derivative(2)];
    let alpha = GridField::<3> {
        bbox: grid.bbox,
        n: grid.n,
        data: (0..beta.len())
            .map(|m| std::array::from_fn(|k| beta.data[m][k] + d[k].data[m][0]))
            .collect(),
    };
    let form = alpha.to_form(1)?;
    let interior = grid.bbox.shrunk(0.9);
    let pts = halton_points(&interior, validation_points);
    let x1 = &cut1.field;
    let mut v = ClawValidation {
        points: pts.len(),
        fiber_contraction: 0.0,
        characteristic_contraction: 0.0,
        boundary: 0.0,
        min_dalpha: f64::INFINITY,
    };
    for p in &pts {
        let a = form.eval(p);
        v.fiber_contraction = v.fiber_contraction.max(contract(&x2.eval(p), 1, &a)[0].abs());
        let da = exterior_derivative(&form, p)?;
        let ix = contract(&x1.eval(p), 2, &da);
        v.characteristic_contraction = v.characteristic_contraction.max(ix.iter().fold(0.0f64, |m, c| m.max(c.abs())));
        v.min_dalpha = v.min_dalpha.min(da.iter().map(|c| c * c).sum::<f64>().sqrt());
    }
    let ps = cut1.surface.params;
    for a in 0..10 {
        for b in 0..10 {
            let s = [
                ps.lo[0] + (ps.hi[0] - ps.lo[0]) * (a as f64 + 0.5) / 10.0,
                ps.lo[1] + (ps.hi[1] - ps.lo[1]) * (b as f64 + 0.5) / 10.0,
            ];
            let p = cut1.surface.embed(&s);
            if !interior.contains(&p) {
                continue;
            }
            let r = cut1.surface.restrict(&form.eval(&p), &s);
            let g = gamma(&s);
            v.boundary = v.boundary.max((r[0] - g[0]).abs().max((r[1] - g[1]).abs()));
        }
    }
    Ok(ClawResult { nondegenerate: v.min_dalpha > 1e-8, alpha, beta, validation: v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::claws::{build_cut, wedge_domain, wedge_surface, CutOptions};
    use crate::model::FluxModel;

    fn cuts() -> (FoliationCut, FoliationCut) {
        let m = FluxModel::flat_projective();
        let (_, closed) = wedge_domain();
        let opts = CutOptions { surface_samples: 6, probes: 6, ..Default::default() };
        let (c1, _) = build_cut(m.characteristic_field(), wedge_surface(), closed.clone(), closed.bbox, opts).unwrap();
        let (c2, _) = build_cut(m.fiber_field(), wedge_surface(), closed.clone(), closed.bbox, opts).unwrap();
        (c1, c2)
    }

    fn box_u() -> Aabb<3> {
        Aabb::new([0.4, 0.05, -0.9], [0.7, 0.35, 0.9]).unwrap()
    }

    fn burgers_alpha(p: &[f64; 3]) -> [f64; 3] {
        [-p[2], 0.5 * p[2] * p[2], 0.0]
    }

    #[test]
    fn roundtrip_recovers_the_burgers_form() {
        let (c1, c2) = cuts();
        let s = wedge_surface();
        let gamma = move |q: &[f64; 2]| s.restrict(&burgers_alpha(&s.embed(q)), q);
        let r = build_conservation_law(&c1, &c2, &gamma, VolumeGrid::with_spacing(box_u(), 0.075), 50).unwrap();
        assert!(r.alpha.sup_error(burgers_alpha) < 5e-3);
        assert!(r.nondegenerate);
        let v = &r.validation;
        assert!(v.fiber_contraction < 5e-3 && v.characteristic_contraction < 5e-3 && v.boundary < 5e-3, "{v:?}");
    }

    #[test]
    fn zero_data_gives_zero() {
        let (c1, c2) = cuts();
        let g = VolumeGrid::uniform(box_u(), 5);
        let r = build_conservation_law(&c1, &c2, &|_| [0.0, 0.0], g, 10).unwrap();
        assert!(r.alpha.data.iter().all(|a| a.iter().all(|c| c.abs() < 1e-14)));
        assert!(!r.nondegenerate);
        let z1 = FormField::zero(1, g.bbox).unwrap();
        let z0 = FormField::zero(0, g.bbox).unwrap();
        let t = transport_solve(&c1, &z1, &z0, &|_| [0.0, 0.0], g).unwrap();
        assert!(t.data.iter().all(|a| a == &[0.0; 3]));
    }

    #[test]
    fn transport_of_own_data_is_exact_at_nodes() {
        let (c1, _) = cuts();
        let m = FluxModel::flat_projective();
        let x = m.characteristic_field();
        let g = VolumeGrid::uniform(box_u(), 5);
        let z1 = FormField::zero(1, g.bbox).unwrap();
        let xg = x.clone();
        // γ = i_X α_B = −y²/2
        let gamma = FormField::new(0, g.bbox.shrunk(4.0), move |p| vec![contract(&xg.eval(p), 1, &burgers_alpha(p))[0]])
            .unwrap()
            .with_jets(|p| vec![[0.0, 0.0, -p[2]]]);
        let s = wedge_surface();
        let delta = move |q: &[f64; 2]| s.restrict(&burgers_alpha(&s.embed(q)), q);
        let t = transport_solve(&c1, &z1, &gamma, &delta, g).unwrap();
        assert!(t.sup_error(burgers_alpha) < 1e-10, "{}", t.sup_error(burgers_alpha));
        let e1 = t.sup_error(burgers_alpha);
        let fine = transport_solve(&c1, &z1, &gamma, &delta, VolumeGrid::uniform(box_u(), 9)).unwrap();
        assert!(fine.sup_error(burgers_alpha) < 1e-10 && e1 >= 0.0);
    }

    #[test]
    fn flow_invariant_data_is_a_pullback() {
        // source-free transport keeps α_x, α_t and shifts α_y by −s·α_x under X = (y, 1, 0)
        let (c1, _) = cuts();
        let g = VolumeGrid::uniform(box_u(), 4);
        let z1 = FormField::zero(1, g.bbox).unwrap();
        let z0 = FormField::zero(0, g.bbox).unwrap();
        let delta = |q: &[f64; 2]| [q[0], q[1] * q[1]];
        let t = transport_solve(&c1, &z1, &z0, &delta, g).unwrap();
        let s = wedge_surface();
        let x = FluxModel::flat_projective().characteristic_field();
        for k in 0..g.n[2] {
            for j in 0..g.n[1] {
                for i in 0..g.n[0] {
                    let u = t.node(i, j, k);
                    let foot = c1.project(&u).unwrap();
                    let e = s.tangents(&foot.param);
                    let d = delta(&foot.param);
                    let a0 = solve3(&[e[0], e[1], x.eval(&foot.point)], &[d[0], d[1], 0.0], 1e-14).unwrap();
                    // φ_s(p) = (p_x + s p_y, p_t + s, p_y): (φ_s)*α at u from α at the foot
                    let sgo = -foot.time;
                    let expect = [a0[0], a0[1], a0[2] - sgo * a0[0]];
                    let got = t.data[t.index(i, j, k)];
                    for c in 0..3 {
                        assert!((got[c] - expect[c]).abs() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn closed_surface_data_is_nondegenerate() {
        let (c1, c2) = cuts();
        // γ = a db has dγ ≠ 0 on the surface
        let r = build_conservation_law(&c1, &c2, &|q| [0.0, q[0]], VolumeGrid::uniform(box_u(), 7), 20).unwrap();
        assert!(r.nondegenerate);
    }
}
