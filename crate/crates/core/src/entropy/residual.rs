use rayon::prelude::*;
use serde::Serialize;

use super::jump::kruzhkov_r;
use super::test_fn::{BaseTest, FiberTest, TotalTest};
use crate::error::{Error, Result};
use crate::geomkit::Aabb;
use crate::model::{Flux, Layer, PiecewiseSection};
use crate::quadrature::{simpson_vec, GaussLegendre};

/// Fiber nodes per side of the kink in [`s_value`].
pub const S_NODES: usize = 129;

const G2: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];

/// Base quadrature node carrying the section value used there.
#[derive(Debug, Clone, Copy)]
pub struct QPoint {
    pub x: f64,
    pub t: f64,
    pub w: f64,
    pub u: f64,
}

/// Quadrature nodes over the grid cells meeting `support`.
///
/// Cells free of jumps use the midpoint rule with the bilinear value at the
/// centre. Cells crossed by a jump use two Gauss points in `t`; at each the
/// `x`-interval is cut at the jump positions and each piece gets two Gauss
/// points carrying the adjacent one-sided trace.
pub fn quadrature_points(section: &PiecewiseSection, support: &Aabb<2>) -> Result<Vec<QPoint>> {
    let g = &section.grid;
    let tol = 1e-12;
    if support.lo[0] < g.x0 - tol || support.hi[0] > g.x_max() + tol || support.lo[1] < g.t0 - tol || support.hi[1] > g.t_max() + tol {
        return Err(Error::Domain {
            point: vec![support.lo[0], support.lo[1], support.hi[0], support.hi[1]],
            reason: "test function support overlaps the grid boundary".into(),
        });
    }
    let cell = |v: f64, v0: f64, d: f64, cells: usize| (((v - v0) / d).floor().max(0.0) as usize).min(cells - 1);
    let (i0, i1) = (cell(support.lo[0], g.x0, g.dx, g.nx - 1), cell(support.hi[0], g.x0, g.dx, g.nx - 1));
    let (n0, n1) = (cell(support.lo[1], g.t0, g.dt, g.nt - 1), cell(support.hi[1], g.t0, g.dt, g.nt - 1));
    let rows: Vec<Vec<QPoint>> = (n0..=n1)
        .into_par_iter()
        .map(|n| {
            let mut out = Vec::with_capacity(2 * (i1 - i0 + 1));
            let (ta, tb) = (g.t(n), g.t(n + 1));
            let tg = G2.map(|s| 0.5 * (ta + tb) + 0.5 * (tb - ta) * s);
            // x-extent of each jump over this time strip
            let spans: Vec<(usize, f64, f64)> = section
                .jumps
                .iter()
                .enumerate()
                .filter_map(|(k, j)| {
                    let xs: Vec<f64> = [ta, tg[0], tg[1], tb].iter().filter_map(|&t| j.position(t)).collect();
                    if xs.is_empty() {
                        return None;
                    }
                    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
                    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    Some((k, lo, hi))
                })
                .collect();
            for i in i0..=i1 {
                let (xa, xb) = (g.x(i), g.x(i + 1));
                let crossed = spans.iter().any(|&(_, lo, hi)| hi >= xa && lo <= xb);
                if !crossed {
                    let u = 0.25 * (section.value(i, n) + section.value(i + 1, n) + section.value(i, n + 1) + section.value(i + 1, n + 1));
                    out.push(QPoint { x: 0.5 * (xa + xb), t: 0.5 * (ta + tb), w: g.dx * g.dt, u });
                    continue;
                }
                for &t in &tg {
                    split_row(section, &spans, xa, xb, t, i, n, 0.5 * g.dt, &mut out);
                }
            }
            out
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

#[allow(clippy::too_many_arguments)]
fn split_row(
    section: &PiecewiseSection,
    spans: &[(usize, f64, f64)],
    xa: f64,
    xb: f64,
    t: f64,
    i: usize,
    n: usize,
    wt: f64,
    out: &mut Vec<QPoint>,
) {
    // (position, u_left, u_right) of jumps active at t
    let mut cuts: Vec<(f64, f64, f64)> = spans
        .iter()
        .filter_map(|&(k, _, _)| {
            let j = &section.jumps[k];
            let x = j.position(t)?;
            let (ul, ur) = j.traces(t)?;
            Some((x, ul, ur))
        })
        .collect();
    cuts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let inside: Vec<(f64, f64, f64)> = cuts.iter().copied().filter(|c| c.0 > xa && c.0 < xb).collect();
    let side_value = |x: f64| -> f64 {
        // nearest active jump decides the side; otherwise interpolate nodes
        let near = cuts
            .iter()
            .min_by(|a, b| (a.0 - x).abs().total_cmp(&(b.0 - x).abs()));
        match near {
            Some(&(p, ul, ur)) if (p - x).abs() <= (xb - xa) * 1.5 => {
                if x < p {
                    ul
                } else {
                    ur
                }
            }
            _ => {
                let a = (x - xa) / (xb - xa);
                let b = (t - section.grid.t(n)) / section.grid.dt;
                (1.0 - a) * (1.0 - b) * section.value(i, n)
                    + a * (1.0 - b) * section.value(i + 1, n)
                    + (1.0 - a) * b * section.value(i, n + 1)
                    + a * b * section.value(i + 1, n + 1)
            }
        }
    };
    let mut edges = vec![xa];
    edges.extend(inside.iter().map(|c| c.0));
    edges.push(xb);
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let u = side_value(0.5 * (a + b));
        for s in G2 {
            out.push(QPoint {
                x: 0.5 * (a + b) + 0.5 * (b - a) * s,
                t,
                w: wt * 0.5 * (b - a),
                u,
            });
        }
    }
}

fn fixed_sum(v: Vec<f64>) -> f64 {
    v.into_iter().sum()
}

/// `−∫ {Z(z, u)·∇φ + s(z, u) φ} dz` with `s` the balance source.
pub fn weak_rh_residual(flux: &dyn Flux, section: &PiecewiseSection, phi: &BaseTest) -> Result<f64> {
    let pts = quadrature_points(section, &phi.support())?;
    let terms: Vec<f64> = pts
        .par_iter()
        .map(|q| {
            let z = [q.x, q.t];
            let (v, g) = phi.jet(&z);
            if v == 0.0 && g == [0.0; 2] {
                return 0.0;
            }
            let zz = flux.flux(&z, q.u);
            -q.w * (zz[0] * g[0] + zz[1] * g[1] + flux.source(&z, q.u) * v)
        })
        .collect();
    Ok(fixed_sum(terms))
}

/// Fiber integrand of the entropy residual at base point `z` with value `u`.
fn fiber_integral(flux: &dyn Flux, psi: &TotalTest, z: &[f64; 2], u: f64, gl: &GaussLegendre) -> f64 {
    let (ya, yb) = (psi.center[2] - psi.radii[2], psi.center[2] + psi.radii[2]);
    let zu = flux.flux(z, u);
    let su = flux.source(z, u);
    let f = |y: f64| -> f64 {
        let (v, g) = psi.jet(&[z[0], z[1], y]);
        if v == 0.0 {
            return 0.0;
        }
        let s = (u - y).signum();
        let zy = flux.flux(z, y);
        s * ((zu[0] - zy[0]) * g[0] + (zu[1] - zy[1]) * g[1] + (su - flux.flux_div(z, y)) * v)
    };
    let panels = |a: f64, b: f64| (((b - a) / psi.radii[2]) * 8.0).ceil().max(1.0) as usize;
    let mut total = 0.0;
    let mid = u.clamp(ya, yb);
    if mid > ya {
        total += gl.integrate(ya, mid, panels(ya, mid), f);
    }
    if yb > mid {
        total += gl.integrate(mid, yb, panels(mid, yb), f);
    }
    total
}

/// Quadrature of
/// `∬ sgn(u − y){(Z(u) − Z(y))·∇_z ψ + [s(z, u) − div_z Z(z, y)] ψ} dy dz`,
/// nonnegative for admissible sections.
pub fn entropy_residual(flux: &dyn Flux, section: &PiecewiseSection, psi: &TotalTest) -> Result<f64> {
    if !psi.is_nonnegative() {
        return Err(Error::Input("entropy test function must be nonnegative".into()));
    }
    let s = psi.support();
    let base = Aabb { lo: [s.lo[0], s.lo[1]], hi: [s.hi[0], s.hi[1]] };
    let pts = quadrature_points(section, &base)?;
    let gl = GaussLegendre::new(8);
    let terms: Vec<f64> = pts
        .par_iter()
        .map(|q| {
            let z = [q.x, q.t];
            if psi.eval(&[q.x, q.t, psi.center[2]]) == 0.0 {
                return 0.0;
            }
            q.w * fiber_integral(flux, psi, &z, q.u, &gl)
        })
        .collect();
    Ok(fixed_sum(terms))
}

/// `S(σ, θ)` at one base point: `∫ R(z, u, y) θ(y) dy`, Simpson on each
/// side of `y = u`.
pub fn s_value(flux: &dyn Flux, z: &[f64; 2], u: f64, theta: &FiberTest) -> [f64; 2] {
    let (ya, yb) = (theta.center[0] - theta.radii[0], theta.center[0] + theta.radii[0]);
    let f = |y: f64| -> [f64; 2] {
        let w = theta.eval(&[y]);
        let r = kruzhkov_r(flux, z, u, y);
        [w * r[0], w * r[1]]
    };
    let mid = u.clamp(ya, yb);
    let a = simpson_vec(ya, mid, S_NODES, f);
    let b = simpson_vec(mid, yb, S_NODES, f);
    [a[0] + b[0], a[1] + b[1]]
}

/// `S(σ, θ)` at every grid node, row-major like the section values.
pub fn s_operator(flux: &dyn Flux, section: &PiecewiseSection, theta: &FiberTest, layer: Option<&Layer>) -> Result<Vec<[f64; 2]>> {
    let g = section.grid;
    let layer = layer.cloned().unwrap_or_else(|| Layer::padded_hull(section));
    let (ya, yb) = (theta.center[0] - theta.radii[0], theta.center[0] + theta.radii[0]);
    for n in 0..g.nt {
        for i in 0..g.nx {
            let z = [g.x(i), g.t(n)];
            if !(layer.contains(&z, ya) && layer.contains(&z, yb)) {
                return Err(Error::Domain {
                    point: vec![z[0], z[1], ya, yb],
                    reason: "fiber test support exits the layer".into(),
                });
            }
        }
    }
    Ok((0..g.len())
        .into_par_iter()
        .map(|k| {
            let (i, n) = (k % g.nx, k / g.nx);
            s_value(flux, &[g.x(i), g.t(n)], section.values[k], theta)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct VolpertReport {
    pub lhs: f64,
    pub rhs: f64,
    pub difference: f64,
}

/// Compares the entropy residual with test `φ ⊗ θ` against the surface term
/// `−∫_Γ ⟨S(u_r) − S(u_l), ν⟩ φ dℓ` over the jump polylines.
pub fn volpert_identity_check(flux: &dyn Flux, section: &PiecewiseSection, theta: &FiberTest, phi: &BaseTest) -> Result<VolpertReport> {
    if !theta.is_nonnegative() || !phi.is_nonnegative() {
        return Err(Error::Input("test functions must be nonnegative".into()));
    }
    let lhs = entropy_residual(flux, section, &phi.times_fiber(theta))?;
    let gl = GaussLegendre::new(8);
    let mut rhs = 0.0;
    for j in &section.jumps {
        for k in 0..j.t.len() - 1 {
            let (ta, tb) = (j.t[k], j.t[k + 1]);
            let panels = (((tb - ta) / phi.radii[1]) * 16.0).ceil().max(1.0) as usize;
            // ν dℓ = (1, −x') dt for a curve x = x(t) oriented left to right
            rhs -= gl.integrate(ta, tb, panels, |t| {
                let x = j.position(t).unwrap();
                let v = phi.eval(&[x, t]);
                if v == 0.0 {
                    return 0.0;
                }
                let (ul, ur) = j.traces(t).unwrap();
                let slope = (j.x[k + 1] - j.x[k]) / (tb - ta);
                let sr = s_value(flux, &[x, t], ur, theta);
                let sl = s_value(flux, &[x, t], ul, theta);
                ((sr[0] - sl[0]) - slope * (sr[1] - sl[1])) * v
            });
        }
    }
    Ok(VolpertReport { lhs, rhs, difference: lhs - rhs })
}
