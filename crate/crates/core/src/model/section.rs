use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type BoundFn = Arc<dyn Fn(&[f64; 2]) -> f64 + Send + Sync>;

/// An open layer `σ1(z) < y < σ2(z)` bounding a section.
#[derive(Clone)]
pub struct Layer {
    lower: BoundFn,
    upper: BoundFn,
}

impl std::fmt::Debug for Layer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("Layer")
    }
}

impl Layer {
    pub fn new(
        lower: impl Fn(&[f64; 2]) -> f64 + Send + Sync + 'static,
        upper: impl Fn(&[f64; 2]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            lower: Arc::new(lower),
            upper: Arc::new(upper),
        }
    }

    pub fn constant(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::Input(format!("empty layer ({lo}, {hi})")));
        }
        Ok(Self::new(move |_| lo, move |_| hi))
    }

    /// Hull of the section values padded by 0.5 on both sides.
    pub fn padded_hull(section: &PiecewiseSection) -> Self {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let traces = section
            .jumps
            .iter()
            .flat_map(|j| j.u_left.iter().chain(&j.u_right));
        for &v in section.values.iter().chain(traces) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Self::constant(lo - 0.5, hi + 0.5).expect("padded hull is nonempty")
    }

    pub fn bounds(&self, z: &[f64; 2]) -> (f64, f64) {
        ((self.lower)(z), (self.upper)(z))
    }

    pub fn contains(&self, z: &[f64; 2], y: f64) -> bool {
        let (a, b) = self.bounds(z);
        a < y && y < b
    }
}

/// Rectangular `(x, t)` lattice; node `(i, n)` sits at `(x0 + iΔx, t0 + nΔt)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2 {
    pub x0: f64,
    pub dx: f64,
    pub nx: usize,
    pub t0: f64,
    pub dt: f64,
    pub nt: usize,
}

impl Grid2 {
    pub fn new(x0: f64, dx: f64, nx: usize, t0: f64, dt: f64, nt: usize) -> Result<Self> {
        if !(dx > 0.0 && dt > 0.0) || nx < 2 || nt < 2 {
            return Err(Error::Input("grid needs positive spacings and ≥ 2 nodes per axis".into()));
        }
        Ok(Self { x0, dx, nx, t0, dt, nt })
    }

    /// Grid covering `[x_lo, x_hi] × [t_lo, t_hi]` with the given cell counts.
    pub fn covering(x_lo: f64, x_hi: f64, cells_x: usize, t_lo: f64, t_hi: f64, cells_t: usize) -> Result<Self> {
        Self::new(
            x_lo,
            (x_hi - x_lo) / cells_x as f64,
            cells_x + 1,
            t_lo,
            (t_hi - t_lo) / cells_t as f64,
            cells_t + 1,
        )
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + self.dx * i as f64
    }

    pub fn t(&self, n: usize) -> f64 {
        self.t0 + self.dt * n as f64
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.nx - 1)
    }

    pub fn t_max(&self) -> f64 {
        self.t(self.nt - 1)
    }

    pub fn len(&self) -> usize {
        self.nx * self.nt
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, n: usize) -> usize {
        n * self.nx + i
    }
}

/// A jump curve `t ↦ x_j(t)` stored as a polyline with one-sided traces at
/// each vertex. "Left" is the side `x < x_j(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpCurve {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub u_left: Vec<f64>,
    pub u_right: Vec<f64>,
}

impl JumpCurve {
    pub fn new(t: Vec<f64>, x: Vec<f64>, u_left: Vec<f64>, u_right: Vec<f64>) -> Result<Self> {
        let n = t.len();
        if n < 2 || x.len() != n || u_left.len() != n || u_right.len() != n {
            return Err(Error::Input("jump polyline needs ≥ 2 vertices and matching traces".into()));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Input("jump polyline times must increase".into()));
        }
        if let Some(k) = (0..n).find(|&k| u_left[k] == u_right[k]) {
            return Err(Error::Input(format!("degenerate jump at vertex {k}: u_l = u_r")));
        }
        Ok(Self { t, x, u_left, u_right })
    }

    /// Straight jump `x = x0 + s (t − t0)` with constant traces.
    pub fn straight(x0: f64, t0: f64, speed: f64, t1: f64, u_left: f64, u_right: f64) -> Result<Self> {
        Self::new(
            vec![t0, t1],
            vec![x0, x0 + speed * (t1 - t0)],
            vec![u_left; 2],
            vec![u_right; 2],
        )
    }

    pub fn t_range(&self) -> (f64, f64) {
        (self.t[0], *self.t.last().unwrap())
    }

    fn locate(&self, t: f64) -> Option<(usize, f64)> {
        let (lo, hi) = self.t_range();
        if t < lo || t > hi {
            return None;
        }
        let k = match self.t.partition_point(|&v| v <= t) {
            0 => 0,
            k => (k - 1).min(self.t.len() - 2),
        };
        let w = (t - self.t[k]) / (self.t[k + 1] - self.t[k]);
        Some((k, w))
    }

    /// Position at time `t`, `None` outside the curve's time span.
    pub fn position(&self, t: f64) -> Option<f64> {
        self.locate(t).map(|(k, w)| self.x[k] + w * (self.x[k + 1] - self.x[k]))
    }

    /// `(u_l, u_r)` at time `t`.
    pub fn traces(&self, t: f64) -> Option<(f64, f64)> {
        self.locate(t).map(|(k, w)| {
            (
                self.u_left[k] + w * (self.u_left[k + 1] - self.u_left[k]),
                self.u_right[k] + w * (self.u_right[k + 1] - self.u_right[k]),
            )
        })
    }

    /// `dx/dt` on the segment containing `t`.
    pub fn slope(&self, t: f64) -> Option<f64> {
        self.locate(t)
            .map(|(k, _)| (self.x[k + 1] - self.x[k]) / (self.t[k + 1] - self.t[k]))
    }
}

/// Grid-sampled candidate solution with explicit jump curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseSection {
    pub grid: Grid2,
    /// Node values, row-major in time: `values[n * nx + i]`.
    pub values: Vec<f64>,
    pub jumps: Vec<JumpCurve>,
}

impl PiecewiseSection {
    pub fn new(grid: Grid2, values: Vec<f64>, jumps: Vec<JumpCurve>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Input(format!(
                "expected {} node values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("section values must be finite".into()));
        }
        for (a, ja) in jumps.iter().enumerate() {
            for jb in jumps.iter().skip(a + 1) {
                let lo = ja.t_range().0.max(jb.t_range().0);
                let hi = ja.t_range().1.min(jb.t_range().1);
                if lo > hi {
                    continue;
                }
                let mut sign = 0.0f64;
                for k in 0..=64 {
                    let t = lo + (hi - lo) * k as f64 / 64.0;
                    let d = ja.position(t).unwrap() - jb.position(t).unwrap();
                    if d == 0.0 || (sign != 0.0 && d.signum() != sign) {
                        return Err(Error::Input("jump curves intersect".into()));
                    }
                    sign = d.signum();
                }
            }
        }
        Ok(Self { grid, values, jumps })
    }

    /// Samples `u(x, t)` at the nodes; jumps are attached separately.
    pub fn sample(grid: Grid2, jumps: Vec<JumpCurve>, u: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for n in 0..grid.nt {
            for i in 0..grid.nx {
                values.push(u(grid.x(i), grid.t(n)));
            }
        }
        Self::new(grid, values, jumps)
    }

    pub fn value(&self, i: usize, n: usize) -> f64 {
        self.values[self.grid.index(i, n)]
    }

    /// Bilinear interpolation of the node values (ignores jumps).
    pub fn interpolate(&self, x: f64, t: f64) -> Option<f64> {
        let g = &self.grid;
        let fx = (x - g.x0) / g.dx;
        let ft = (t - g.t0) / g.dt;
        if fx < -1e-12 || ft < -1e-12 || fx > (g.nx - 1) as f64 + 1e-12 || ft > (g.nt - 1) as f64 + 1e-12 {
            return None;
        }
        let i = (fx.floor().max(0.0) as usize).min(g.nx - 2);
        let n = (ft.floor().max(0.0) as usize).min(g.nt - 2);
        let a = fx - i as f64;
        let b = ft - n as f64;
        Some(
            (1.0 - a) * (1.0 - b) * self.value(i, n)
                + a * (1.0 - b) * self.value(i + 1, n)
                + (1.0 - a) * b * self.value(i, n + 1)
                + a * b * self.value(i + 1, n + 1),
        )
    }
}

/// A regular jump point: location, unit conormal pointing from the left
/// side to the right side, and the two traces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpData {
    pub point: [f64; 2],
    pub normal: [f64; 2],
    pub u_left: f64,
    pub u_right: f64,
}

impl JumpData {
    pub fn new(point: [f64; 2], normal: [f64; 2], u_left: f64, u_right: f64) -> Result<Self> {
        let n = (normal[0] * normal[0] + normal[1] * normal[1]).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Input("jump conormal must be nonzero".into()));
        }
        if u_left == u_right {
            return Err(Error::Input("degenerate jump: u_l = u_r".into()));
        }
        Ok(Self {
            point,
            normal: [normal[0] / n, normal[1] / n],
            u_left,
            u_right,
        })
    }

    /// Jump along a curve moving with speed `dx/dt = s`.
    pub fn with_speed(point: [f64; 2], speed: f64, u_left: f64, u_right: f64) -> Result<Self> {
        Self::new(point, [1.0, -speed], u_left, u_right)
    }

    /// `dx/dt` of the jump curve.
    pub fn speed(&self) -> Result<f64> {
        if self.normal[0] == 0.0 {
            return Err(Error::Input("jump curve has no finite speed (conormal along dt)".into()));
        }
        Ok(-self.normal[1] / self.normal[0])
    }
}

/// Violations of the layer bounds.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LayerReport {
    /// `(i, n, x, t, u)` of every offending node.
    pub nodes: Vec<(usize, usize, f64, f64, f64)>,
    /// `(curve, vertex)` pairs whose traces leave the layer.
    pub jump_vertices: Vec<(usize, usize)>,
}

impl LayerReport {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.jump_vertices.is_empty()
    }
}

pub fn validate_section(section: &PiecewiseSection, layer: &Layer) -> LayerReport {
    let g = &section.grid;
    let mut report = LayerReport::default();
    for n in 0..g.nt {
        for i in 0..g.nx {
            let z = [g.x(i), g.t(n)];
            let u = section.value(i, n);
            if !layer.contains(&z, u) {
                report.nodes.push((i, n, z[0], z[1], u));
            }
        }
    }
    for (c, j) in section.jumps.iter().enumerate() {
        for k in 0..j.t.len() {
            let z = [j.x[k], j.t[k]];
            if !layer.contains(&z, j.u_left[k]) || !layer.contains(&z, j.u_right[k]) {
                report.jump_vertices.push((c, k));
            }
        }
    }
    report
}
