use std::fmt;
use std::sync::Arc;

use super::fields::{Aabb, DensitySpec, ScalarField, VectorField, DEFAULT_H_FD};
use super::orientation::{OrientationRole, OrientationSign};
use crate::error::{Error, Result};

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Increasing index sets of size `p` in `0..dim`, lexicographic order.
pub fn basis(dim: usize, p: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, dim: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..dim {
            cur.push(i);
            rec(i + 1, dim, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, dim, p, &mut Vec::new(), &mut out);
    out
}

fn index_of(dim: usize, set: &[usize]) -> usize {
    basis(dim, set.len())
        .iter()
        .position(|s| s.as_slice() == set)
        .expect("index set belongs to the basis")
}

type Coeffs<const D: usize> = Arc<dyn Fn(&[f64; D]) -> Vec<f64> + Send + Sync>;
type Jets<const D: usize> = Arc<dyn Fn(&[f64; D]) -> Vec<[f64; D]> + Send + Sync>;

/// A differential form of degree `p` with coefficients in the lexicographic
/// basis `dx_I`, `I` increasing.
///
/// `jets(q)[k][j]` is `∂c_k/∂x_j` when supplied.
#[derive(Clone)]
pub struct FormField<const D: usize> {
    degree: usize,
    coefficients: Coeffs<D>,
    jets: Option<Jets<D>>,
    pub domain: Aabb<D>,
    pub h_fd: f64,
}

impl<const D: usize> fmt::Debug for FormField<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FormField")
            .field("dim", &D)
            .field("degree", &self.degree)
            .field("analytic_jets", &self.jets.is_some())
            .finish()
    }
}

impl<const D: usize> FormField<D> {
    pub fn new(
        degree: usize,
        domain: Aabb<D>,
        coefficients: impl Fn(&[f64; D]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        if degree > D {
            return Err(Error::Degree(format!("degree {degree} exceeds dimension {D}")));
        }
        Ok(Self {
            degree,
            coefficients: Arc::new(coefficients),
            jets: None,
            domain,
            h_fd: DEFAULT_H_FD,
        })
    }

    pub fn with_jets(mut self, j: impl Fn(&[f64; D]) -> Vec<[f64; D]> + Send + Sync + 'static) -> Self {
        self.jets = Some(Arc::new(j));
        self
    }

    pub fn with_h_fd(mut self, h: f64) -> Self {
        self.h_fd = h;
        self
    }

    pub fn without_jets(mut self) -> Self {
        self.jets = None;
        self
    }

    /// The zero form of the given degree.
    pub fn zero(degree: usize, domain: Aabb<D>) -> Result<Self> {
        let n = binomial(D, degree);
        Ok(Self::new(degree, domain, move |_| vec![0.0; n])?.with_jets(move |_| vec![[0.0; D]; n]))
    }

    /// A 0-form from a scalar field.
    pub fn from_scalar(f: ScalarField<D>, domain: Aabb<D>) -> Self {
        let g = f.clone();
        let has = f.has_gradient();
        let mut out = Self::new(0, domain, move |p| vec![f.eval(p)]).expect("degree 0");
        if has {
            out = out.with_jets(move |p| vec![g.gradient(p)]);
        }
        out
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn has_jets(&self) -> bool {
        self.jets.is_some()
    }

    pub fn len(&self) -> usize {
        binomial(D, self.degree)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn eval(&self, p: &[f64; D]) -> Vec<f64> {
        (self.coefficients)(p)
    }

    /// Coefficient gradients, analytic if available.
    pub fn jets(&self, p: &[f64; D]) -> Vec<[f64; D]> {
        match &self.jets {
            Some(j) => j(p),
            None => self.fd_jets(p),
        }
    }

    pub fn fd_jets(&self, p: &[f64; D]) -> Vec<[f64; D]> {
        let n = self.len();
        let h = self.h_fd;
        let mut out = vec![[0.0; D]; n];
        for k in 0..D {
            let mut a = *p;
            let mut b = *p;
            a[k] += h;
            b[k] -= h;
            let ca = self.eval(&a);
            let cb = self.eval(&b);
            for i in 0..n {
                out[i][k] = (ca[i] - cb[i]) / (2.0 * h);
            }
        }
        out
    }

    /// `dω` as a new form field, pointwise.
    pub fn differential(&self) -> Result<FormField<D>> {
        if self.degree >= D {
            return Err(Error::Degree(format!(
                "exterior derivative of a top-degree ({D}) form"
            )));
        }
        let me = self.clone();
        let mut out = FormField::new(self.degree + 1, self.domain, move |p| {
            d_from_jets::<D>(me.degree, &me.jets(p))
        })?
        .with_h_fd(self.h_fd);
        out.jets = None;
        Ok(out)
    }

    /// Pointwise sum with another form of the same degree.
    pub fn add(&self, other: &FormField<D>) -> Result<FormField<D>> {
        if self.degree != other.degree {
            return Err(Error::Degree("sum of forms of different degree".into()));
        }
        let a = self.clone();
        let b = other.clone();
        let mut out = FormField::new(self.degree, self.domain, move |p| {
            a.eval(p).iter().zip(b.eval(p)).map(|(x, y)| x + y).collect()
        })?
        .with_h_fd(self.h_fd);
        if self.has_jets() && other.has_jets() {
            let a = self.clone();
            let b = other.clone();
            out = out.with_jets(move |p| {
                a.jets(p)
                    .iter()
                    .zip(b.jets(p))
                    .map(|(x, y)| std::array::from_fn(|k| x[k] + y[k]))
                    .collect()
            });
        }
        Ok(out)
    }

    /// Pointwise scaling by a constant.
    pub fn scale(&self, c: f64) -> FormField<D> {
        let a = self.clone();
        let mut out = FormField::new(self.degree, self.domain, move |p| {
            a.eval(p).into_iter().map(|v| c * v).collect()
        })
        .expect("same degree")
        .with_h_fd(self.h_fd);
        if self.has_jets() {
            let a = self.clone();
            out = out.with_jets(move |p| {
                a.jets(p).into_iter().map(|g| g.map(|v| c * v)).collect()
            });
        }
        out
    }
}

fn d_from_jets<const D: usize>(p: usize, jets: &[[f64; D]]) -> Vec<f64> {
    let target = basis(D, p + 1);
    target
        .iter()
        .map(|set| {
            let mut acc = 0.0;
            for (pos, &j) in set.iter().enumerate() {
                let rest: Vec<usize> = set.iter().copied().filter(|&i| i != j).collect();
                let k = index_of(D, &rest);
                let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * jets[k][j];
            }
            acc
        })
        .collect()
}

/// `dω` at a point, using analytic jets when present.
pub fn exterior_derivative<const D: usize>(form: &FormField<D>, point: &[f64; D]) -> Result<Vec<f64>> {
    if form.degree() >= D {
        return Err(Error::Degree(format!("cannot differentiate a {D}-form in dimension {D}")));
    }
    if !form.has_jets() && !form.domain.contains_with_margin(point, form.h_fd) {
        return Err(Error::domain(point, "finite-difference stencil leaves the domain"));
    }
    Ok(d_from_jets::<D>(form.degree(), &form.jets(point)))
}

/// Contraction `i_X ω` in the first slot, from coefficient values.
pub fn contract<const D: usize>(x: &[f64; D], degree: usize, coeffs: &[f64]) -> Vec<f64> {
    let target = basis(D, degree - 1);
    target
        .iter()
        .map(|set| {
            let mut acc = 0.0;
            for j in 0..D {
                if set.contains(&j) || x[j] == 0.0 {
                    continue;
                }
                let mut full = set.clone();
                full.push(j);
                full.sort_unstable();
                let pos = full.iter().position(|&i| i == j).unwrap();
                let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * x[j] * coeffs[index_of(D, &full)];
            }
            acc
        })
        .collect()
}

/// `i_X ω` at a point.
pub fn interior_product<const D: usize>(
    x: &VectorField<D>,
    form: &FormField<D>,
    point: &[f64; D],
) -> Result<Vec<f64>> {
    if form.degree() == 0 {
        return Err(Error::Degree("interior product of a 0-form".into()));
    }
    Ok(contract(&x.eval(point), form.degree(), &form.eval(point)))
}

/// Lie bracket `[X, Y]^i = X^j ∂_j Y^i − Y^j ∂_j X^i`.
///
/// Analytic jets are used only when both fields carry them.
pub fn lie_bracket<const D: usize>(
    x: &VectorField<D>,
    y: &VectorField<D>,
    point: &[f64; D],
) -> Result<[f64; D]> {
    let margin = x.h_fd.max(y.h_fd);
    if !x.domain.contains_with_margin(point, margin) || !y.domain.contains_with_margin(point, margin) {
        return Err(Error::domain(point, "outside the bracket domain margin"));
    }
    let (jx, jy) = if x.has_jets() && y.has_jets() {
        (x.jacobian(point), y.jacobian(point))
    } else {
        (x.fd_jacobian(point), y.fd_jacobian(point))
    };
    let vx = x.eval(point);
    let vy = y.eval(point);
    Ok(std::array::from_fn(|i| {
        let a: f64 = (0..D).map(|j| vx[j] * jy[i][j]).sum();
        let b: f64 = (0..D).map(|j| vy[j] * jx[i][j]).sum();
        a - b
    }))
}

/// The bracket as a new vector field (finite-difference jets).
pub fn bracket_field<const D: usize>(x: &VectorField<D>, y: &VectorField<D>) -> VectorField<D> {
    let (a, b) = (x.clone(), y.clone());
    VectorField::new(x.domain, move |p| {
        lie_bracket(&a, &b, p).unwrap_or([f64::NAN; D])
    })
    .with_h_fd((x.h_fd * 10.0).max(1e-4))
}

/// `i_X(λ·μ·dx∧dt∧dy)`: the contracted product of a fiber weight and a
/// characteristic field with a base density, as an even 2-form paired with
/// the standard total-space orientation tag.
pub fn contracted_product(
    lambda: &ScalarField<3>,
    x: &VectorField<3>,
    mu: &DensitySpec<2>,
    domain: Aabb<3>,
) -> Result<(FormField<3>, OrientationSign)> {
    for p in domain.lattice(5) {
        let l = lambda.eval(&p);
        let m = mu.weight.eval(&[p[0], p[1]]);
        if !(l > 0.0 && m > 0.0) {
            return Err(Error::Validation(format!(
                "nonpositive weight (λ = {l}, μ = {m}) at {p:?}"
            )));
        }
    }
    let (lambda, x, mu) = (lambda.clone(), x.clone(), mu.clone());
    let form = FormField::new(2, domain, move |p| {
        let w = lambda.eval(p) * mu.weight.eval(&[p[0], p[1]]);
        contract(&x.eval(p), 3, &[w])
    })?;
    Ok((form, OrientationSign::plus(OrientationRole::Total)))
}
