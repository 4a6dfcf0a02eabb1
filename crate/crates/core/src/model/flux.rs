use std::fmt;
use std::sync::Arc;

use super::poly::Poly3;
use crate::error::{Error, Result};
use crate::geomkit::{Aabb, ScalarField, VectorField, DEFAULT_H_FD};
use crate::quadrature::GaussLegendre;

/// Chart-level flux interface shared by flux models and weighted entropy
/// densities. Base points are `z = (x, t)`.
pub trait Flux: Send + Sync {
    /// `Z(z, y) = (Z^x, Z^t)`.
    fn flux(&self, z: &[f64; 2], y: f64) -> [f64; 2];
    /// `∂Z/∂y`, the projected characteristic direction.
    fn flux_y(&self, z: &[f64; 2], y: f64) -> [f64; 2];
    /// `Σ ∂Z^i/∂z_i` at fixed `y`.
    fn flux_div(&self, z: &[f64; 2], y: f64) -> f64;
    /// Fiber component `X^{m+1}` of the characteristic field.
    fn drift(&self, z: &[f64; 2], y: f64) -> f64;
    /// Right-hand side `X^{m+1} + Σ ∂Z^i/∂z_i` of the divergence form
    /// `Σ ∂_i [Z^i(z, u)] = source(z, u)`.
    fn source(&self, z: &[f64; 2], y: f64) -> f64 {
        self.drift(z, y) + self.flux_div(z, y)
    }
}

type ZFn = Arc<dyn Fn(&[f64; 2], f64) -> [f64; 2] + Send + Sync>;
type SFn = Arc<dyn Fn(&[f64; 2], f64) -> f64 + Send + Sync>;
type InvFn = Arc<dyn Fn(&[f64; 3]) -> f64 + Send + Sync>;

/// Polynomial description, kept for exact jets and for serialization.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialFlux {
    pub flux_x: Poly3,
    pub flux_t: Poly3,
    pub source: Poly3,
}

#[derive(Clone)]
struct Jets {
    zy: [Poly3; 2],
    zyy: [Poly3; 2],
    zz: [[Poly3; 2]; 2],
    zyz: [[Poly3; 2]; 2],
    zzz_trace: [Poly3; 3],
    source: Poly3,
    source_grad: [Poly3; 3],
}

/// A conservation or balance law `Σ ∂_i [Z^i(z, u)] = s(z, u)` on the chart
/// `(x, t, y)`, with characteristic field
/// `X = ∂_y Z^x ∂_x + ∂_y Z^t ∂_t + (s − Σ ∂_i Z^i) ∂_y`.
#[derive(Clone)]
pub struct FluxModel {
    pub name: String,
    /// Base dimension `m`. Numerical operations require `m = 2`.
    pub base_dim: usize,
    pub domain: Aabb<3>,
    pub h_fd: f64,
    flux: ZFn,
    source: SFn,
    jets: Option<Arc<Jets>>,
    polynomial: Option<PolynomialFlux>,
    invariants: Vec<(String, InvFn)>,
}

impl fmt::Debug for FluxModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FluxModel")
            .field("name", &self.name)
            .field("base_dim", &self.base_dim)
            .field("domain", &self.domain)
            .field("analytic_jets", &self.jets.is_some())
            .finish()
    }
}

impl FluxModel {
    /// A model from closures; derivatives come from central differences.
    pub fn from_fns(
        name: impl Into<String>,
        domain: Aabb<3>,
        flux: impl Fn(&[f64; 2], f64) -> [f64; 2] + Send + Sync + 'static,
        source: impl Fn(&[f64; 2], f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            base_dim: 2,
            domain,
            h_fd: DEFAULT_H_FD,
            flux: Arc::new(flux),
            source: Arc::new(source),
            jets: None,
            polynomial: None,
            invariants: Vec::new(),
        }
    }

    /// A polynomial model with exact jets.
    pub fn polynomial(name: impl Into<String>, domain: Aabb<3>, poly: PolynomialFlux) -> Self {
        let zs = [poly.flux_x.clone(), poly.flux_t.clone()];
        let d = |p: &Poly3, k: usize| p.derivative(k);
        let jets = Jets {
            zy: [d(&zs[0], 2), d(&zs[1], 2)],
            zyy: [d(&d(&zs[0], 2), 2), d(&d(&zs[1], 2), 2)],
            zz: [[d(&zs[0], 0), d(&zs[0], 1)], [d(&zs[1], 0), d(&zs[1], 1)]],
            zyz: [
                [d(&d(&zs[0], 2), 0), d(&d(&zs[0], 2), 1)],
                [d(&d(&zs[1], 2), 0), d(&d(&zs[1], 2), 1)],
            ],
            zzz_trace: std::array::from_fn(|k| {
                let mut terms = d(&d(&zs[0], 0), k).terms;
                terms.extend(d(&d(&zs[1], 1), k).terms);
                Poly3 { terms }
            }),
            source: poly.source.clone(),
            source_grad: std::array::from_fn(|k| d(&poly.source, k)),
        };
        let (fx, ft, src) = (poly.flux_x.clone(), poly.flux_t.clone(), poly.source.clone());
        Self {
            name: name.into(),
            base_dim: 2,
            domain,
            h_fd: DEFAULT_H_FD,
            flux: Arc::new(move |z, y| {
                let p = [z[0], z[1], y];
                [fx.eval(&p), ft.eval(&p)]
            }),
            source: Arc::new(move |z, y| src.eval(&[z[0], z[1], y])),
            jets: Some(Arc::new(jets)),
            polynomial: Some(poly),
            invariants: Vec::new(),
        }
    }

    /// The flat projective structure model: `Z = (y²/2, y)`, no source, so
    /// `∂_t u + ∂_x(u²/2) = 0` with characteristic field `∂_t + y ∂_x`.
    ///
    /// Characteristics preserve `y` and `x − t y`.
    pub fn flat_projective() -> Self {
        let domain = Aabb::new([-3.0; 3], [3.0; 3]).expect("static box");
        let poly = PolynomialFlux {
            flux_x: Poly3::new([(0.5, [0, 0, 2])]),
            flux_t: Poly3::new([(1.0, [0, 0, 1])]),
            source: Poly3::zero(),
        };
        Self::polynomial("flat_projective", domain, poly)
            .with_invariant("y", |p| p[2])
            .with_invariant("x - t*y", |p| p[0] - p[1] * p[2])
    }

    /// Linear advection `Z = (c(x, t)·y, y)`, whose projected characteristic
    /// directions do not depend on the fiber coordinate.
    pub fn linear_advection(speed: Poly3) -> Result<Self> {
        if speed.terms.iter().any(|t| t.powers[2] != 0) {
            return Err(Error::Input("advection speed must not depend on y".into()));
        }
        let flux_x = Poly3 {
            terms: speed
                .terms
                .iter()
                .map(|t| super::poly::Term {
                    coef: t.coef,
                    powers: [t.powers[0], t.powers[1], 1],
                })
                .collect(),
        };
        let domain = Aabb::new([-3.0; 3], [3.0; 3]).expect("static box");
        Ok(Self::polynomial(
            "linear_advection",
            domain,
            PolynomialFlux {
                flux_x,
                flux_t: Poly3::new([(1.0, [0, 0, 1])]),
                source: Poly3::zero(),
            },
        ))
    }

    pub fn with_invariant(
        mut self,
        name: impl Into<String>,
        f: impl Fn(&[f64; 3]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.invariants.push((name.into(), Arc::new(f)));
        self
    }

    pub fn with_domain(mut self, domain: Aabb<3>) -> Self {
        self.domain = domain;
        self
    }

    /// Drops exact jets (finite-difference fallback everywhere).
    pub fn without_jets(mut self) -> Self {
        self.jets = None;
        self
    }

    pub fn has_jets(&self) -> bool {
        self.jets.is_some()
    }

    pub fn polynomial_form(&self) -> Option<&PolynomialFlux> {
        self.polynomial.as_ref()
    }

    /// Named first integrals of the characteristic flow, if known.
    pub fn invariants(&self) -> impl Iterator<Item = (&str, &InvFnRef)> {
        self.invariants.iter().map(|(n, f)| (n.as_str(), &**f))
    }

    pub fn require_supported(&self) -> Result<()> {
        if self.base_dim != 2 {
            return Err(Error::UnsupportedDimension(format!(
                "base dimension {} (only m = 2 is supported)",
                self.base_dim
            )));
        }
        Ok(())
    }

    /// Balance-law source `s(z, y)`.
    pub fn balance_source(&self, z: &[f64; 2], y: f64) -> f64 {
        (self.source)(z, y)
    }

    fn fd_y(&self, z: &[f64; 2], y: f64) -> [f64; 2] {
        let h = self.h_fd;
        let a = (self.flux)(z, y + h);
        let b = (self.flux)(z, y - h);
        [(a[0] - b[0]) / (2.0 * h), (a[1] - b[1]) / (2.0 * h)]
    }

    fn fd_z(&self, z: &[f64; 2], y: f64) -> [[f64; 2]; 2] {
        let h = self.h_fd;
        let mut out = [[0.0; 2]; 2];
        for k in 0..2 {
            let mut a = *z;
            let mut b = *z;
            a[k] += h;
            b[k] -= h;
            let fa = (self.flux)(&a, y);
            let fb = (self.flux)(&b, y);
            for i in 0..2 {
                out[i][k] = (fa[i] - fb[i]) / (2.0 * h);
            }
        }
        out
    }

    /// `∂Z^i/∂z_j` as `[i][j]`.
    pub fn flux_z(&self, z: &[f64; 2], y: f64) -> [[f64; 2]; 2] {
        match &self.jets {
            Some(j) => {
                let p = [z[0], z[1], y];
                std::array::from_fn(|i| std::array::from_fn(|k| j.zz[i][k].eval(&p)))
            }
            None => self.fd_z(z, y),
        }
    }

    /// The characteristic vector field on the total space.
    pub fn characteristic_field(&self) -> VectorField<3> {
        let me = self.clone();
        let mut field = VectorField::new(self.domain, move |p| {
            let z = [p[0], p[1]];
            let zy = me.flux_y(&z, p[2]);
            [zy[0], zy[1], me.drift(&z, p[2])]
        })
        .with_h_fd(self.h_fd);
        if let Some(j) = self.jets.clone() {
            field = field.with_jacobian(move |p| {
                let row = |i: usize| [j.zyz[i][0].eval(p), j.zyz[i][1].eval(p), j.zyy[i].eval(p)];
                // drift = s − Σ ∂_i Z^i
                let drift: [f64; 3] =
                    std::array::from_fn(|k| j.source_grad[k].eval(p) - j.zzz_trace[k].eval(p));
                [row(0), row(1), drift]
            });
        }
        field
    }

    /// The constant fiber field `Y = ∂_y`.
    pub fn fiber_field(&self) -> VectorField<3> {
        VectorField::coordinate(self.domain, 2).with_h_fd(self.h_fd)
    }
}

/// Borrowed form of an invariant function.
pub type InvFnRef = dyn Fn(&[f64; 3]) -> f64 + Send + Sync;

impl Flux for FluxModel {
    fn flux(&self, z: &[f64; 2], y: f64) -> [f64; 2] {
        (self.flux)(z, y)
    }

    fn flux_y(&self, z: &[f64; 2], y: f64) -> [f64; 2] {
        match &self.jets {
            Some(j) => {
                let p = [z[0], z[1], y];
                [j.zy[0].eval(&p), j.zy[1].eval(&p)]
            }
            None => self.fd_y(z, y),
        }
    }

    fn flux_div(&self, z: &[f64; 2], y: f64) -> f64 {
        let d = self.flux_z(z, y);
        d[0][0] + d[1][1]
    }

    fn drift(&self, z: &[f64; 2], y: f64) -> f64 {
        match &self.jets {
            Some(j) => j.source.eval(&[z[0], z[1], y]) - self.flux_div(z, y),
            None => (self.source)(z, y) - self.flux_div(z, y),
        }
    }

    fn source(&self, z: &[f64; 2], y: f64) -> f64 {
        (self.source)(z, y)
    }
}

/// An entropy density `ρ = λ |dy| ⊗ (c·X)` built on a flux model, with fiber
/// weight `λ > 0` and optional field rescaling `c`.
#[derive(Clone, Debug)]
pub struct EntropyDensity {
    pub model: FluxModel,
    weight: Option<ScalarField<3>>,
    scale: Option<ScalarField<3>>,
    canonical: bool,
    /// Reference fiber value for the effective flux primitive.
    pub y_ref: f64,
}

impl EntropyDensity {
    /// `ρ = |dy| ⊗ X` for the model's own characteristic field.
    pub fn from_model(model: FluxModel) -> Self {
        Self {
            y_ref: 0.5 * (model.domain.lo[2] + model.domain.hi[2]),
            model,
            weight: None,
            scale: None,
            canonical: false,
        }
    }

    pub fn with_weight(mut self, weight: ScalarField<3>) -> Result<Self> {
        validate_positive(&weight, &self.model.domain, "fiber weight")?;
        self.weight = Some(weight);
        self.canonical = false;
        Ok(self)
    }

    pub fn with_field_scale(mut self, scale: ScalarField<3>) -> Result<Self> {
        validate_positive(&scale, &self.model.domain, "field scale")?;
        self.scale = Some(scale);
        self.canonical = false;
        Ok(self)
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical
    }

    /// True when `ρ` coincides with the model's own density.
    pub fn is_plain(&self) -> bool {
        self.weight.is_none() && self.scale.is_none()
    }

    pub fn weight(&self, p: &[f64; 3]) -> f64 {
        self.weight.as_ref().map_or(1.0, |w| w.eval(p))
    }

    pub fn scale(&self, p: &[f64; 3]) -> f64 {
        self.scale.as_ref().map_or(1.0, |w| w.eval(p))
    }

    pub fn weight_field(&self) -> ScalarField<3> {
        self.weight.clone().unwrap_or_else(|| ScalarField::constant(1.0))
    }

    /// `λ·c`, the multiplier of `∂Z/∂y` in the effective flux.
    pub fn factor(&self, p: &[f64; 3]) -> f64 {
        self.weight(p) * self.scale(p)
    }

    /// The characteristic field `c·X` carried by the density.
    pub fn field(&self) -> VectorField<3> {
        let base = self.model.characteristic_field();
        match &self.scale {
            None => base,
            Some(c) => base.scaled(c),
        }
    }

    /// Rescales to unit `t`-component, absorbing the factor into the weight.
    pub fn canonicalize(&self, region: &Aabb<3>) -> Result<EntropyDensity> {
        if self.canonical {
            return Ok(self.clone());
        }
        let field = self.field();
        for p in region.lattice(9) {
            let v = field.eval(&p);
            if v[1] == 0.0 || !v[1].is_finite() {
                return Err(Error::Canonicalization { witness: p.to_vec() });
            }
        }
        let model_field = self.model.characteristic_field();
        let mf = model_field.clone();
        let scale = ScalarField::new(move |p| 1.0 / mf.eval(p)[1]);
        let me = self.clone();
        let weight = ScalarField::new(move |p| me.weight(p) * me.scale(p) * model_field.eval(p)[1]);
        let mut out = self.clone();
        // Models whose t-component is already 1 stay plain.
        let needs_scale = region
            .lattice(9)
            .iter()
            .any(|p| self.model.characteristic_field().eval(p)[1] != 1.0);
        if needs_scale || self.scale.is_some() {
            out.scale = Some(scale);
            out.weight = Some(weight);
        }
        out.canonical = true;
        Ok(out)
    }
}

fn validate_positive(f: &ScalarField<3>, domain: &Aabb<3>, what: &str) -> Result<()> {
    for p in domain.lattice(7) {
        let v = f.eval(&p);
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Validation(format!("{what} {v} is not positive at {p:?}")));
        }
    }
    Ok(())
}

impl Flux for EntropyDensity {
    fn flux(&self, z: &[f64; 2], y: f64) -> [f64; 2] {
        if self.is_plain() {
            return self.model.flux(z, y);
        }
        let gl = GaussLegendre::new(8);
        let panels = ((y - self.y_ref).abs() / 0.25).ceil().max(1.0) as usize;
        gl.integrate_vec(self.y_ref, y, panels, |s| self.flux_y(z, s))
    }

    fn flux_y(&self, z: &[f64; 2], y: f64) -> [f64; 2] {
        let w = self.factor(&[z[0], z[1], y]);
        self.model.flux_y(z, y).map(|v| w * v)
    }

    fn flux_div(&self, z: &[f64; 2], y: f64) -> f64 {
        if self.is_plain() {
            return self.model.flux_div(z, y);
        }
        let h = 1e-4;
        let fx = |x: f64| self.flux(&[x, z[1]], y)[0];
        let ft = |t: f64| self.flux(&[z[0], t], y)[1];
        (fx(z[0] + h) - fx(z[0] - h)) / (2.0 * h) + (ft(z[1] + h) - ft(z[1] - h)) / (2.0 * h)
    }

    fn drift(&self, z: &[f64; 2], y: f64) -> f64 {
        self.factor(&[z[0], z[1], y]) * self.model.drift(z, y)
    }
}
