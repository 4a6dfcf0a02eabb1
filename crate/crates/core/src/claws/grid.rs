use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geomkit::{binomial, Aabb, FormField};

/// Node-valued field on a regular volume lattice, trilinear in between.
#[derive(Debug, Clone)]
pub struct GridField<const K: usize> {
    pub bbox: Aabb<3>,
    /// Nodes per axis, `(x, t, y)`.
    pub n: [usize; 3],
    /// `data[(k·n_t + j)·n_x + i]`.
    pub data: Vec<[f64; K]>,
}

impl<const K: usize> GridField<K> {
    pub fn spacing(&self) -> [f64; 3] {
        std::array::from_fn(|a| (self.bbox.hi[a] - self.bbox.lo[a]) / (self.n[a] - 1) as f64)
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.n[1] + j) * self.n[0] + i
    }

    pub fn node(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        let h = self.spacing();
        [
            self.bbox.lo[0] + h[0] * i as f64,
            self.bbox.lo[1] + h[1] * j as f64,
            self.bbox.lo[2] + h[2] * k as f64,
        ]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Evaluates `f` at every node in parallel.
    pub fn sample(bbox: Aabb<3>, n: [usize; 3], f: impl Fn(&[f64; 3]) -> Result<[f64; K]> + Sync) -> Result<Self> {
        if n.iter().any(|&v| v < 2) {
            return Err(Error::Input("volume grid needs at least 2 nodes per axis".into()));
        }
        let mut g = Self { bbox, n, data: vec![] };
        let total = n[0] * n[1] * n[2];
        let data: Result<Vec<[f64; K]>> = (0..total)
            .into_par_iter()
            .map(|m| {
                let (i, j, k) = (m % n[0], (m / n[0]) % n[1], m / (n[0] * n[1]));
                f(&g.node(i, j, k))
            })
            .collect();
        g.data = data?;
        Ok(g)
    }

    /// Trilinear interpolation; points outside the box are clamped.
    pub fn eval(&self, p: &[f64; 3]) -> [f64; K] {
        let h = self.spacing();
        let mut base = [0usize; 3];
        let mut w = [0.0; 3];
        for a in 0..3 {
            let f = ((p[a] - self.bbox.lo[a]) / h[a]).clamp(0.0, (self.n[a] - 1) as f64);
            let i = (f.floor() as usize).min(self.n[a] - 2);
            base[a] = i;
            w[a] = f - i as f64;
        }
        let mut out = [0.0; K];
        for c in 0..8 {
            let o = [c & 1, (c >> 1) & 1, (c >> 2) & 1];
            let wt: f64 = (0..3).map(|a| if o[a] == 1 { w[a] } else { 1.0 - w[a] }).product();
            if wt == 0.0 {
                continue;
            }
            let v = &self.data[self.index(base[0] + o[0], base[1] + o[1], base[2] + o[2])];
            for q in 0..K {
                out[q] += wt * v[q];
            }
        }
        out
    }

    /// Nodal derivative along `axis`: central differences inside, second
    /// order one-sided differences on the faces.
    pub fn derivative(&self, axis: usize) -> Self {
        let h = self.spacing()[axis];
        let n = self.n;
        let mut data = vec![[0.0; K]; self.data.len()];
        for k in 0..n[2] {
            for j in 0..n[1] {
                for i in 0..n[0] {
                    let idx = [i, j, k];
                    let at = |d: isize| -> &[f64; K] {
                        let mut q = idx;
                        q[axis] = (q[axis] as isize + d) as usize;
                        &self.data[self.index(q[0], q[1], q[2])]
                    };
                    let m = idx[axis];
                    let out = &mut data[self.index(i, j, k)];
                    for c in 0..K {
                        out[c] = if m == 0 {
                            (-3.0 * at(0)[c] + 4.0 * at(1)[c] - at(2)[c]) / (2.0 * h)
                        } else if m == n[axis] - 1 {
                            (3.0 * at(0)[c] - 4.0 * at(-1)[c] + at(-2)[c]) / (2.0 * h)
                        } else {
                            (at(1)[c] - at(-1)[c]) / (2.0 * h)
                        };
                    }
                }
            }
        }
        Self { bbox: self.bbox, n, data }
    }

    /// Pointwise map over node values.
    pub fn map<const L: usize>(&self, f: impl Fn(&[f64; 3], &[f64; K]) -> [f64; L]) -> GridField<L> {
        let mut data = Vec::with_capacity(self.data.len());
        for k in 0..self.n[2] {
            for j in 0..self.n[1] {
                for i in 0..self.n[0] {
                    data.push(f(&self.node(i, j, k), &self.data[self.index(i, j, k)]));
                }
            }
        }
        GridField { bbox: self.bbox, n: self.n, data }
    }

    /// Largest componentwise difference from `f` over the nodes.
    pub fn sup_error(&self, f: impl Fn(&[f64; 3]) -> [f64; K]) -> f64 {
        let mut e = 0.0f64;
        for k in 0..self.n[2] {
            for j in 0..self.n[1] {
                for i in 0..self.n[0] {
                    let p = self.node(i, j, k);
                    let (a, b) = (self.data[self.index(i, j, k)], f(&p));
                    for q in 0..K {
                        e = e.max((a[q] - b[q]).abs());
                    }
                }
            }
        }
        e
    }

    /// Interpolated form of the given degree with jets from the nodal
    /// derivative grids.
    pub fn to_form(&self, degree: usize) -> Result<FormField<3>> {
        if binomial(3, degree) != K {
            return Err(Error::Degree(format!("{K} coefficients do not make a {degree}-form in dimension 3")));
        }
        let me = self.clone();
        let d = [self.derivative(0), self.derivative(1), self.derivative(2)];
        Ok(FormField::new(degree, self.bbox, move |p| me.eval(p).to_vec())?.with_jets(move |p| {
            let g = [d[0].eval(p), d[1].eval(p), d[2].eval(p)];
            (0..K).map(|c| [g[0][c], g[1][c], g[2][c]]).collect()
        }))
    }
}
