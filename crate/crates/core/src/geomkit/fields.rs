use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Default central finite-difference step.
pub const DEFAULT_H_FD: f64 = 1e-5;

/// Axis-aligned box `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb<const D: usize> {
    pub lo: [f64; D],
    pub hi: [f64; D],
}

impl<const D: usize> Aabb<D> {
    pub fn new(lo: [f64; D], hi: [f64; D]) -> Result<Self> {
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::Input(format!("empty or non-finite box {lo:?}..{hi:?}")));
        }
        Ok(Self { lo, hi })
    }

    /// A box so large that it never constrains evaluation.
    pub fn unbounded() -> Self {
        Self {
            lo: [-1e300; D],
            hi: [1e300; D],
        }
    }

    pub fn contains(&self, p: &[f64; D]) -> bool {
        p.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| *v >= *a && *v <= *b)
    }

    /// True when `p` is at least `margin` away from every face.
    pub fn contains_with_margin(&self, p: &[f64; D], margin: f64) -> bool {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| *v >= *a + margin && *v <= *b - margin)
    }

    pub fn center(&self) -> [f64; D] {
        std::array::from_fn(|i| 0.5 * (self.lo[i] + self.hi[i]))
    }

    /// Uniform lattice with `n` points per axis, lexicographic order.
    pub fn lattice(&self, n: usize) -> Vec<[f64; D]> {
        let n = n.max(2);
        let total = n.pow(D as u32);
        (0..total)
            .map(|mut idx| {
                let mut p = [0.0; D];
                for k in (0..D).rev() {
                    let i = idx % n;
                    idx /= n;
                    p[k] = self.lo[k] + (self.hi[k] - self.lo[k]) * i as f64 / (n - 1) as f64;
                }
                p
            })
            .collect()
    }

    /// Box shrunk about its center by `factor` in every direction.
    pub fn shrunk(&self, factor: f64) -> Self {
        let c = self.center();
        Self {
            lo: std::array::from_fn(|i| c[i] - factor * (c[i] - self.lo[i])),
            hi: std::array::from_fn(|i| c[i] + factor * (self.hi[i] - c[i])),
        }
    }
}

type Map<const D: usize> = Arc<dyn Fn(&[f64; D]) -> [f64; D] + Send + Sync>;
type JacMap<const D: usize> = Arc<dyn Fn(&[f64; D]) -> [[f64; D]; D] + Send + Sync>;

/// A vector field in `D` coordinates with optional analytic Jacobian.
///
/// `jacobian(p)[i][j]` is `∂X^i/∂x_j`. Without it, central differences with
/// step `h_fd` are used.
#[derive(Clone)]
pub struct VectorField<const D: usize> {
    components: Map<D>,
    jacobian: Option<JacMap<D>>,
    pub domain: Aabb<D>,
    pub h_fd: f64,
}

impl<const D: usize> fmt::Debug for VectorField<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("dim", &D)
            .field("analytic_jets", &self.jacobian.is_some())
            .field("domain", &self.domain)
            .field("h_fd", &self.h_fd)
            .finish()
    }
}

impl<const D: usize> VectorField<D> {
    pub fn new(domain: Aabb<D>, f: impl Fn(&[f64; D]) -> [f64; D] + Send + Sync + 'static) -> Self {
        Self {
            components: Arc::new(f),
            jacobian: None,
            domain,
            h_fd: DEFAULT_H_FD,
        }
    }

    pub fn with_jacobian(
        mut self,
        j: impl Fn(&[f64; D]) -> [[f64; D]; D] + Send + Sync + 'static,
    ) -> Self {
        self.jacobian = Some(Arc::new(j));
        self
    }

    pub fn with_h_fd(mut self, h: f64) -> Self {
        self.h_fd = h;
        self
    }

    /// Drops analytic jets so that finite differences are used.
    pub fn without_jets(mut self) -> Self {
        self.jacobian = None;
        self
    }

    /// The constant coordinate field `∂/∂x_k`.
    pub fn coordinate(domain: Aabb<D>, k: usize) -> Self {
        let mut e = [0.0; D];
        e[k] = 1.0;
        Self::new(domain, move |_| e).with_jacobian(|_| [[0.0; D]; D])
    }

    pub fn has_jets(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn eval(&self, p: &[f64; D]) -> [f64; D] {
        (self.components)(p)
    }

    pub fn jacobian(&self, p: &[f64; D]) -> [[f64; D]; D] {
        match &self.jacobian {
            Some(j) => j(p),
            None => fd_jacobian(&*self.components, p, self.h_fd),
        }
    }

    /// Finite-difference Jacobian regardless of available jets.
    pub fn fd_jacobian(&self, p: &[f64; D]) -> [[f64; D]; D] {
        fd_jacobian(&*self.components, p, self.h_fd)
    }

    /// Pointwise product `g·X` with a scalar field.
    pub fn scaled(&self, g: &ScalarField<D>) -> Self {
        let x = self.clone();
        let g1 = g.clone();
        let mut out = Self::new(self.domain, move |p| {
            let s = g1.eval(p);
            x.eval(p).map(|v| s * v)
        })
        .with_h_fd(self.h_fd);
        if self.has_jets() && g.has_gradient() {
            let x = self.clone();
            let g = g.clone();
            out = out.with_jacobian(move |p| {
                let s = g.eval(p);
                let ds = g.gradient(p);
                let v = x.eval(p);
                let j = x.jacobian(p);
                std::array::from_fn(|i| std::array::from_fn(|k| s * j[i][k] + ds[k] * v[i]))
            });
        }
        out
    }

    /// Divergence `Σ ∂X^i/∂x_i` in coordinates.
    pub fn coordinate_divergence(&self, p: &[f64; D]) -> f64 {
        let j = self.jacobian(p);
        (0..D).map(|i| j[i][i]).sum()
    }
}

fn fd_jacobian<const D: usize>(
    f: &(dyn Fn(&[f64; D]) -> [f64; D] + Send + Sync),
    p: &[f64; D],
    h: f64,
) -> [[f64; D]; D] {
    let mut jac = [[0.0; D]; D];
    for k in 0..D {
        let mut a = *p;
        let mut b = *p;
        a[k] += h;
        b[k] -= h;
        let fa = f(&a);
        let fb = f(&b);
        for i in 0..D {
            jac[i][k] = (fa[i] - fb[i]) / (2.0 * h);
        }
    }
    jac
}

type Scalar<const D: usize> = Arc<dyn Fn(&[f64; D]) -> f64 + Send + Sync>;
type Grad<const D: usize> = Arc<dyn Fn(&[f64; D]) -> [f64; D] + Send + Sync>;
type Hess<const D: usize> = Arc<dyn Fn(&[f64; D]) -> [[f64; D]; D] + Send + Sync>;

/// A scalar function with optional analytic gradient and Hessian.
#[derive(Clone)]
pub struct ScalarField<const D: usize> {
    value: Scalar<D>,
    gradient: Option<Grad<D>>,
    hessian: Option<Hess<D>>,
    pub h_fd: f64,
}

impl<const D: usize> fmt::Debug for ScalarField<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("dim", &D)
            .field("gradient", &self.gradient.is_some())
            .field("hessian", &self.hessian.is_some())
            .finish()
    }
}

impl<const D: usize> ScalarField<D> {
    pub fn new(f: impl Fn(&[f64; D]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            value: Arc::new(f),
            gradient: None,
            hessian: None,
            h_fd: DEFAULT_H_FD,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| c)
            .with_gradient(|_| [0.0; D])
            .with_hessian(|_| [[0.0; D]; D])
    }

    pub fn with_gradient(mut self, g: impl Fn(&[f64; D]) -> [f64; D] + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(g));
        self
    }

    pub fn with_hessian(
        mut self,
        h: impl Fn(&[f64; D]) -> [[f64; D]; D] + Send + Sync + 'static,
    ) -> Self {
        self.hessian = Some(Arc::new(h));
        self
    }

    pub fn with_h_fd(mut self, h: f64) -> Self {
        self.h_fd = h;
        self
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn has_hessian(&self) -> bool {
        self.hessian.is_some()
    }

    pub fn eval(&self, p: &[f64; D]) -> f64 {
        (self.value)(p)
    }

    pub fn gradient(&self, p: &[f64; D]) -> [f64; D] {
        match &self.gradient {
            Some(g) => g(p),
            None => {
                let h = self.h_fd;
                std::array::from_fn(|k| {
                    let mut a = *p;
                    let mut b = *p;
                    a[k] += h;
                    b[k] -= h;
                    (self.eval(&a) - self.eval(&b)) / (2.0 * h)
                })
            }
        }
    }

    /// Hessian; falls back to differencing the gradient with a coarser step
    /// when no analytic second derivatives are available.
    pub fn hessian(&self, p: &[f64; D]) -> [[f64; D]; D] {
        if let Some(h) = &self.hessian {
            return h(p);
        }
        let h = if self.has_gradient() { self.h_fd } else { (self.h_fd * 10.0).max(1e-4) };
        let probe = |q: &[f64; D]| -> [f64; D] {
            match &self.gradient {
                Some(g) => g(q),
                None => std::array::from_fn(|k| {
                    let mut a = *q;
                    let mut b = *q;
                    a[k] += h;
                    b[k] -= h;
                    (self.eval(&a) - self.eval(&b)) / (2.0 * h)
                }),
            }
        };
        let mut out = [[0.0; D]; D];
        for k in 0..D {
            let mut a = *p;
            let mut b = *p;
            a[k] += h;
            b[k] -= h;
            let ga = probe(&a);
            let gb = probe(&b);
            for i in 0..D {
                out[i][k] = (ga[i] - gb[i]) / (2.0 * h);
            }
        }
        // symmetrize
        for i in 0..D {
            for k in (i + 1)..D {
                let m = 0.5 * (out[i][k] + out[k][i]);
                out[i][k] = m;
                out[k][i] = m;
            }
        }
        out
    }

    /// Directional derivative `L_X f = <df, X>`.
    pub fn lie_derivative(&self, x: &VectorField<D>, p: &[f64; D]) -> f64 {
        let g = self.gradient(p);
        let v = x.eval(p);
        (0..D).map(|i| g[i] * v[i]).sum()
    }
}

/// A positive density `weight · |dx_1 ∧ … ∧ dx_D|`.
#[derive(Clone, Debug)]
pub struct DensitySpec<const D: usize> {
    pub weight: ScalarField<D>,
}

impl<const D: usize> DensitySpec<D> {
    pub fn new(weight: ScalarField<D>) -> Self {
        Self { weight }
    }

    pub fn unit() -> Self {
        Self::new(ScalarField::constant(1.0))
    }

    /// Checks positivity on a lattice of the box.
    pub fn validate(&self, region: &Aabb<D>, n: usize) -> Result<()> {
        for p in region.lattice(n) {
            let w = self.weight.eval(&p);
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::Validation(format!(
                    "density weight {w} is not positive at {p:?}"
                )));
            }
        }
        Ok(())
    }
}
