//! Oriented conservation laws: a 1-form `α` on the total space without `dy`
//! component, paired with an orientation `ω` of the total space.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::entropy::{quadrature_points, weak_rh_residual, BaseTest};
use crate::error::{Error, Result};
use crate::geomkit::{
    lie_bracket, orientation_compose, solve3, Aabb, CompositionMode, DensitySpec, FormField,
    OrientationRole, OrientationSign, ScalarField, VectorField,
};
use crate::model::{EntropyDensity, Flux, FluxModel, PiecewiseSection};
use crate::quadrature::GaussLegendre;

/// Closedness threshold when every jet is analytic.
pub const EPS_CLOSED_ANALYTIC: f64 = 1e-6;
/// Closedness threshold when some derivative comes from finite differences.
pub const EPS_CLOSED_FD: f64 = 1e-3;

const FRAME_EPS: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct OrientedLaw {
    pub alpha: FormField<3>,
    pub omega: OrientationSign,
    pub domain: Aabb<3>,
}

impl OrientedLaw {
    /// Checks that `α` is a 1-form with vanishing `dy` coefficient.
    pub fn new(alpha: FormField<3>, omega: OrientationSign, domain: Aabb<3>) -> Result<Self> {
        if alpha.degree() != 1 {
            return Err(Error::Degree(format!("expected a 1-form, got degree {}", alpha.degree())));
        }
        for p in domain.lattice(7) {
            let c = alpha.eval(&p);
            let scale = 1.0 + c[0].abs() + c[1].abs();
            if c[2].abs() > 1e-12 * scale {
                return Err(Error::Validation(format!(
                    "α has dy coefficient {} at {p:?}",
                    c[2]
                )));
            }
        }
        Ok(Self {
            alpha,
            omega: OrientationSign::new(omega.value(), OrientationRole::Total),
            domain,
        })
    }

    /// `α = −y dx + (y²/2) dt` with the negative total orientation, the
    /// oriented form of the inviscid Burgers law.
    pub fn burgers() -> Self {
        let domain = Aabb::new([-3.0; 3], [3.0; 3]).expect("static box");
        let alpha = FormField::new(1, domain, |p| vec![-p[2], 0.5 * p[2] * p[2], 0.0])
            .expect("degree 1")
            .with_jets(|p| vec![[0.0, 0.0, -1.0], [0.0, 0.0, p[2]], [0.0; 3]]);
        Self::new(alpha, OrientationSign::minus(OrientationRole::Total), domain).expect("valid law")
    }

    /// The oriented law of a source-free flux model: `α = ω(Z^t dx − Z^x dt)`.
    pub fn from_model(model: &FluxModel, omega: OrientationSign) -> Result<Self> {
        let w = omega.as_f64();
        let m = model.clone();
        let mut alpha = FormField::new(1, model.domain, move |p| {
            let z = m.flux(&[p[0], p[1]], p[2]);
            vec![w * z[1], -w * z[0], 0.0]
        })?;
        if model.has_jets() {
            let m = model.clone();
            let field = model.characteristic_field();
            alpha = alpha.with_jets(move |p| {
                let dz = m.flux_z(&[p[0], p[1]], p[2]);
                let x = field.eval(p);
                vec![
                    [w * dz[1][0], w * dz[1][1], w * x[1]],
                    [-w * dz[0][0], -w * dz[0][1], -w * x[0]],
                    [0.0; 3],
                ]
            });
        }
        Self::new(alpha, omega, model.domain)
    }

    /// The flux `Z = −ω(α_t, −α_x)` whose weak form is `−ω d(σ*α) = 0`.
    pub fn flux_model(&self) -> FluxModel {
        let w = self.omega.as_f64();
        let a = self.alpha.clone();
        FluxModel::from_fns(
            "oriented",
            self.domain,
            move |z, y| {
                let c = a.eval(&[z[0], z[1], y]);
                [-w * c[1], w * c[0]]
            },
            |_, _| 0.0,
        )
    }

    /// Base orientation `θ = ω / o` for fiber orientation `o`.
    pub fn base_orientation(&self, fiber: OrientationSign) -> OrientationSign {
        orientation_compose(fiber, self.omega, 1, 3, CompositionMode::Over)
    }
}

/// `ι(z, y) = (α_x, α_t)` at `(z, y)`, a covector at `z`.
pub fn iota(law: &OrientedLaw, f: &[f64; 3]) -> Result<[f64; 2]> {
    if !law.domain.contains(f) {
        return Err(Error::domain(f, "outside the law's domain"));
    }
    let c = law.alpha.eval(f);
    Ok([c[0], c[1]])
}

#[derive(Clone, Debug, Serialize)]
pub struct ImmersionReport {
    /// Smallest `|∂ι/∂y|` over the sample lattice.
    pub min_speed: f64,
    pub witness: [f64; 3],
    pub immersed: bool,
}

/// Checks that `y ↦ ι(z, y)` is an immersion on a lattice of `region`.
pub fn immersion_check(law: &OrientedLaw, region: &Aabb<3>, n: usize) -> Result<ImmersionReport> {
    let mut rep = ImmersionReport {
        min_speed: f64::INFINITY,
        witness: region.center(),
        immersed: true,
    };
    for p in region.lattice(n) {
        if !law.domain.contains(&p) {
            return Err(Error::domain(&p, "immersion lattice leaves the law's domain"));
        }
        let j = law.alpha.jets(&p);
        let s = j[0][2].hypot(j[1][2]);
        if s < rep.min_speed {
            rep.min_speed = s;
            rep.witness = p;
        }
    }
    rep.immersed = rep.min_speed > 1e-10;
    Ok(rep)
}

/// The entropy density `ρ` determined by `dα = ω·i_X(λ·μ·vol)`, in canonical
/// form `λ|dy| ⊗ (∂_t + …)`.
///
/// Fails when the induced weight is not positive, which happens when `ω`
/// disagrees with the orientation carried by `α`.
pub fn rho_from_tau(law: &OrientedLaw, mu: &DensitySpec<2>) -> Result<EntropyDensity> {
    let dom = law.domain;
    let base = Aabb::new([dom.lo[0], dom.lo[1]], [dom.hi[0], dom.hi[1]])?;
    mu.validate(&base, 7)?;
    let model = law.flux_model();
    let field = model.characteristic_field();
    for p in dom.lattice(7) {
        let lam = field.eval(&p)[1] / mu.weight.eval(&[p[0], p[1]]);
        if !(lam > 0.0) || !lam.is_finite() {
            return Err(Error::Validation(format!(
                "induced fiber weight {lam} is not positive at {p:?}"
            )));
        }
    }
    let m = mu.weight.clone();
    let density = EntropyDensity::from_model(model)
        .with_weight(ScalarField::new(move |p| 1.0 / m.eval(&[p[0], p[1]])))?;
    density.canonicalize(&dom)
}

#[derive(Clone, Debug, Serialize)]
pub struct PullbackReport {
    pub pullback_residual: f64,
    pub weak_residual: f64,
    pub difference: f64,
}

/// Compares `−ω ∫ σ*α ∧ dφ` with the weak residual of the induced density.
pub fn rh_via_pullback(law: &OrientedLaw, section: &PiecewiseSection, phi: &BaseTest) -> Result<PullbackReport> {
    let pts = quadrature_points(section, &phi.support())?;
    let w = law.omega.as_f64();
    let terms: Vec<f64> = pts
        .par_iter()
        .map(|q| {
            let (_, g) = phi.jet(&[q.x, q.t]);
            let c = law.alpha.eval(&[q.x, q.t, q.u]);
            q.w * (c[0] * g[1] - c[1] * g[0])
        })
        .collect();
    let pullback_residual = -w * terms.iter().sum::<f64>();
    let rho = rho_from_tau(law, &DensitySpec::unit())?;
    let weak_residual = weak_rh_residual(&rho, section, phi)?;
    Ok(PullbackReport {
        pullback_residual,
        weak_residual,
        difference: (pullback_residual - weak_residual).abs(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct IntegralIdentityReport {
    /// `i_w μ` with `w = ∫_{|a,b|} Tπ(ρ)`, as `[dx, dt]` coefficients.
    pub lhs: [f64; 2],
    /// Signed difference `ι(z, b) − ι(z, a)`.
    pub rhs: [f64; 2],
    pub difference: f64,
}

/// Fiber-integral identity at `z` for the fiber orientation `+∂y`.
pub fn integral_identity_check(
    law: &OrientedLaw,
    mu: &DensitySpec<2>,
    z: [f64; 2],
    a: f64,
    b: f64,
) -> Result<IntegralIdentityReport> {
    integral_identity_check_oriented(law, mu, z, a, b, OrientationSign::plus(OrientationRole::Fiber))
}

/// As [`integral_identity_check`], with an explicit fiber orientation `o`.
pub fn integral_identity_check_oriented(
    law: &OrientedLaw,
    mu: &DensitySpec<2>,
    z: [f64; 2],
    a: f64,
    b: f64,
    fiber: OrientationSign,
) -> Result<IntegralIdentityReport> {
    for y in [a, b] {
        if !law.domain.contains(&[z[0], z[1], y]) {
            return Err(Error::domain(&[z[0], z[1], y], "outside the law's domain"));
        }
    }
    let rho = rho_from_tau(law, mu)?;
    let field = rho.field();
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let panels = ((hi - lo) / 0.1).ceil().max(1.0) as usize;
    let w = GaussLegendre::new(8).integrate_vec(lo, hi, panels, |y| {
        let p = [z[0], z[1], y];
        let lam = rho.weight(&p);
        let v = field.eval(&p);
        [lam * v[0], lam * v[1]]
    });
    let m = mu.weight.eval(&z);
    let lhs = [-m * w[1], m * w[0]];
    let ia = iota(law, &[z[0], z[1], a])?;
    let ib = iota(law, &[z[0], z[1], b])?;
    // ⟨o, b − a⟩ times the sign of −θ, θ = ω / o.
    let dir = if b >= a { 1.0 } else { -1.0 } * fiber.as_f64();
    let sign = -dir * law.base_orientation(fiber).as_f64();
    let rhs = [sign * (ib[0] - ia[0]), sign * (ib[1] - ia[1])];
    let difference = (lhs[0] - rhs[0]).abs().max((lhs[1] - rhs[1]).abs());
    Ok(IntegralIdentityReport { lhs, rhs, difference })
}

type Covector = Arc<dyn Fn(&[f64; 3]) -> Result<[f64; 3]> + Send + Sync>;

/// Largest coefficient of `dξ` over a lattice of `region`, by central
/// differences with step `h`.
fn closedness(xi: &Covector, region: &Aabb<3>, n: usize, h: f64) -> Result<(f64, [f64; 3])> {
    let pts = region.lattice(n);
    let vals: Vec<Result<(f64, [f64; 3])>> = pts
        .par_iter()
        .map(|p| {
            // d[k][j] = ∂ξ_k/∂x_j
            let mut d = [[0.0; 3]; 3];
            for j in 0..3 {
                let mut a = *p;
                let mut b = *p;
                a[j] += h;
                b[j] -= h;
                let (fa, fb) = (xi(&a)?, xi(&b)?);
                for k in 0..3 {
                    d[k][j] = (fa[k] - fb[k]) / (2.0 * h);
                }
            }
            let r = [d[1][0] - d[0][1], d[2][0] - d[0][2], d[2][1] - d[1][2]];
            Ok((r.iter().fold(0.0f64, |m, v| m.max(v.abs())), *p))
        })
        .collect();
    let mut worst = (0.0, region.center());
    for v in vals {
        let v = v?;
        if v.0 > worst.0 || !v.0.is_finite() {
            worst = v;
        }
    }
    Ok(worst)
}

/// Solves `ξ(X) = a, ξ(Y) = b, ξ([Y, X]) = c` at `p`.
fn frame_solve(x: &VectorField<3>, y: &VectorField<3>, p: &[f64; 3], r: [f64; 3]) -> Result<[f64; 3]> {
    let rows = [x.eval(p), y.eval(p), lie_bracket(y, x, p)?];
    solve3(&rows, &r, FRAME_EPS).ok_or_else(|| Error::Frame {
        witness: p.to_vec(),
        reason: "X, Y, [Y, X] are linearly dependent".into(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SeparabilityReport {
    pub separable: bool,
    pub closedness_residual: f64,
    pub witness: [f64; 3],
    pub tolerance: f64,
    pub analytic: bool,
}

/// Decides whether `f = G·H` locally with `L_X G = 0` and `L_Y H = 0`.
///
/// The candidate `d log H` is the 1-form `α` with `α(X) = L_X log f`,
/// `α(Y) = 0` and `α([Y, X]) = L_Y L_X log f`; separability holds iff it is
/// closed.
pub fn separability_test(
    f: &ScalarField<3>,
    x: &VectorField<3>,
    y: &VectorField<3>,
    domain: &Aabb<3>,
    n: usize,
) -> Result<SeparabilityReport> {
    for p in domain.lattice(n.max(2)) {
        let v = f.eval(&p);
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Validation(format!("f = {v} is not positive at {p:?}")));
        }
    }
    let analytic = f.has_hessian() && x.has_jets() && y.has_jets();
    let (tolerance, h) = if analytic {
        (EPS_CLOSED_ANALYTIC, 1e-4)
    } else {
        (EPS_CLOSED_FD, 2e-3)
    };
    let (f, x, y) = (f.clone(), x.clone(), y.clone());
    let alpha: Covector = Arc::new(move |p: &[f64; 3]| {
        let v = f.eval(p);
        let df = f.gradient(p);
        let hf = f.hessian(p);
        let g: [f64; 3] = std::array::from_fn(|i| df[i] / v);
        let hg: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| hf[i][j] / v - g[i] * g[j]));
        let xv = x.eval(p);
        let jx = if analytic { x.jacobian(p) } else { x.fd_jacobian(p) };
        let yv = y.eval(p);
        let lx: f64 = (0..3).map(|i| xv[i] * g[i]).sum();
        // ∂_j (X·∇g) = Σ_i ∂_j X^i g_i + X^i g_ij
        let grad_lx: [f64; 3] = std::array::from_fn(|j| (0..3).map(|i| jx[i][j] * g[i] + xv[i] * hg[i][j]).sum());
        let lylx: f64 = (0..3).map(|j| yv[j] * grad_lx[j]).sum();
        frame_solve(&x, &y, p, [lx, 0.0, lylx])
    });
    let (res, witness) = closedness(&alpha, &domain.shrunk(0.9), n, h)?;
    Ok(SeparabilityReport {
        separable: res <= tolerance,
        closedness_residual: res,
        witness,
        tolerance,
        analytic,
    })
}

/// `div_ν X` for the volume `ν = w·dx∧dt∧dy`.
pub fn div_nu(x: &VectorField<3>, w: &ScalarField<3>, p: &[f64; 3]) -> f64 {
    let v = x.eval(p);
    let dw = w.gradient(p);
    let wv = w.eval(p);
    x.coordinate_divergence(p) + (0..3).map(|i| v[i] * dw[i]).sum::<f64>() / wv
}

/// A candidate base factor `f` with `log f = −∫ ξ` along axis-ordered paths
/// from a corner of the box.
#[derive(Clone)]
pub struct CandidateFactor {
    xi: Covector,
    corner: [f64; 3],
}

impl std::fmt::Debug for CandidateFactor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CandidateFactor").field("corner", &self.corner).finish()
    }
}

impl CandidateFactor {
    /// `log f(z)`, normalized so that `f = 1` at the corner.
    pub fn log_f(&self, z: [f64; 2]) -> Result<f64> {
        let [x0, t0, y0] = self.corner;
        let gl = GaussLegendre::new(8);
        let mut err = None;
        let mut leg = |a: f64, b: f64, at: &dyn Fn(f64) -> [f64; 3], k: usize| {
            let panels = ((b - a).abs() / 0.25).ceil().max(1.0) as usize;
            gl.integrate(a, b, panels, |s| match (self.xi)(&at(s)) {
                Ok(v) => v[k],
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            })
        };
        let ix = leg(x0, z[0], &|s| [s, t0, y0], 0);
        let it = leg(t0, z[1], &|s| [z[0], s, y0], 1);
        match err {
            Some(e) => Err(e),
            None => Ok(-(ix + it)),
        }
    }

    pub fn eval(&self, z: [f64; 2]) -> Result<f64> {
        self.log_f(z).map(f64::exp)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExistenceReport {
    pub closed: bool,
    pub closedness_residual: f64,
    pub witness: [f64; 3],
    pub tolerance: f64,
    /// Largest `|ξ_y|` seen; nonzero values mean the frame system is inconsistent.
    pub fiber_component: f64,
    /// `sup |X·∇log f + div_ν X|` for the candidate, relative to `max(1, sup|div_ν X|)`.
    pub verification_residual: Option<f64>,
    #[serde(skip)]
    pub candidate: Option<CandidateFactor>,
}

/// Searches for a positive base function `f` making `f·ρ ⋉ μ` closed.
///
/// With `D = div_ν X`, `ν = λ·μ·vol`, the obstruction is the 1-form `ξ` with
/// `ξ(X) = D`, `ξ(Y) = 0`, `ξ([Y, X]) = L_Y D`; a factor exists iff `dξ = 0`.
pub fn oriented_existence_test(
    rho: &EntropyDensity,
    mu: &DensitySpec<2>,
    domain: &Aabb<3>,
    n: usize,
) -> Result<ExistenceReport> {
    let base = Aabb::new([domain.lo[0], domain.lo[1]], [domain.hi[0], domain.hi[1]])?;
    mu.validate(&base, n.max(2))?;
    let x = rho.field();
    let y = rho.model.fiber_field();
    let (r, m) = (rho.clone(), mu.weight.clone());
    let w = ScalarField::new(move |p| r.weight(p) * m.eval(&[p[0], p[1]]));
    let d: Arc<dyn Fn(&[f64; 3]) -> f64 + Send + Sync> = {
        let x = x.clone();
        Arc::new(move |p| div_nu(&x, &w, p))
    };
    let h = 2e-3;
    let xi: Covector = {
        let (x, y, d) = (x.clone(), y.clone(), d.clone());
        Arc::new(move |p: &[f64; 3]| {
            let yv = y.eval(p);
            let a: [f64; 3] = std::array::from_fn(|i| p[i] + h * yv[i]);
            let b: [f64; 3] = std::array::from_fn(|i| p[i] - h * yv[i]);
            let ly_d = (d(&a) - d(&b)) / (2.0 * h);
            frame_solve(&x, &y, p, [d(p), 0.0, ly_d])
        })
    };
    let inner = domain.shrunk(0.9);
    let tolerance = EPS_CLOSED_FD;
    let (res, witness) = closedness(&xi, &inner, n, h)?;
    let mut fiber_component = 0.0f64;
    for p in inner.lattice(n) {
        fiber_component = fiber_component.max(xi(&p)?[2].abs());
    }
    let closed = res <= tolerance;
    let mut report = ExistenceReport {
        closed,
        closedness_residual: res,
        witness,
        tolerance,
        fiber_component,
        verification_residual: None,
        candidate: None,
    };
    if !closed {
        return Ok(report);
    }
    let cand = CandidateFactor {
        xi,
        corner: inner.lo,
    };
    let hv = 1e-4;
    let pts = inner.lattice(n);
    let checks: Vec<Result<(f64, f64)>> = pts
        .par_iter()
        .map(|p| {
            let z = [p[0], p[1]];
            let gx = (cand.log_f([z[0] + hv, z[1]])? - cand.log_f([z[0] - hv, z[1]])?) / (2.0 * hv);
            let gt = (cand.log_f([z[0], z[1] + hv])? - cand.log_f([z[0], z[1] - hv])?) / (2.0 * hv);
            let v = x.eval(p);
            let dv = d(p);
            Ok(((v[0] * gx + v[1] * gt + dv).abs(), dv.abs()))
        })
        .collect();
    let (mut worst, mut scale) = (0.0f64, 1.0f64);
    for c in checks {
        let (r, s) = c?;
        worst = worst.max(r);
        scale = scale.max(s);
    }
    let rel = worst / scale;
    report.verification_residual = Some(rel);
    if rel <= tolerance {
        report.candidate = Some(cand);
    } else {
        report.closed = false;
    }
    Ok(report)
}
