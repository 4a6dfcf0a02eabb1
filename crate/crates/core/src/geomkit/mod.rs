//! Exterior calculus and orientation arithmetic on coordinate boxes in two
//! and three dimensions.
//!
//! Coordinates are ordered `(x, t, y)` on the total space and `(x, t)` on the
//! base. Wedge coefficient arrays use lexicographic index order, so a 2-form
//! on the total space is stored as `[dx∧dt, dx∧dy, dt∧dy]`.

mod fields;
mod forms;
mod orientation;

pub use fields::{Aabb, DensitySpec, ScalarField, VectorField, DEFAULT_H_FD};
pub use forms::{
    basis, binomial, bracket_field, contract, contracted_product, exterior_derivative,
    interior_product, lie_bracket,
    FormField,
};
pub use orientation::{orientation_compose, CompositionMode, OrientationRole, OrientationSign};

/// 3×3 determinant of the rows `a`, `b`, `c`.
pub fn det3(a: &[f64; 3], b: &[f64; 3], c: &[f64; 3]) -> f64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0])
}

/// Solves `M x = r` for the matrix with rows `m`, by Cramer's rule.
///
/// Returns `None` when `|det M|` is below `eps`.
pub fn solve3(m: &[[f64; 3]; 3], r: &[f64; 3], eps: f64) -> Option<[f64; 3]> {
    let d = det3(&m[0], &m[1], &m[2]);
    if !(d.abs() > eps) {
        return None;
    }
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut mk = *m;
        for i in 0..3 {
            mk[i][k] = r[i];
        }
        *o = det3(&mk[0], &mk[1], &mk[2]) / d;
    }
    Some(out)
}

pub(crate) fn norm<const D: usize>(v: &[f64; D]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}
