use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::characteristics::rk4_step;
use crate::error::{Error, Result};
use crate::geomkit::{det3, norm, Aabb, VectorField};

type Embed = Arc<dyn Fn(&[f64; 2]) -> [f64; 3] + Send + Sync>;
type Tangents = Arc<dyn Fn(&[f64; 2]) -> [[f64; 3]; 2] + Send + Sync>;
type Level = Arc<dyn Fn(&[f64; 3]) -> f64 + Send + Sync>;
type Locate = Arc<dyn Fn(&[f64; 3]) -> [f64; 2] + Send + Sync>;
type Inside = Arc<dyn Fn(&[f64; 3]) -> bool + Send + Sync>;

/// A two-parameter surface patch given by an embedding, its tangents, a
/// level function vanishing on it and an inverse chart.
#[derive(Clone)]
pub struct SurfacePatch {
    embed: Embed,
    tangents: Tangents,
    level: Level,
    locate: Locate,
    pub params: Aabb<2>,
}

impl std::fmt::Debug for SurfacePatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SurfacePatch").field("params", &self.params).finish()
    }
}

impl SurfacePatch {
    pub fn new(
        params: Aabb<2>,
        embed: impl Fn(&[f64; 2]) -> [f64; 3] + Send + Sync + 'static,
        tangents: impl Fn(&[f64; 2]) -> [[f64; 3]; 2] + Send + Sync + 'static,
        level: impl Fn(&[f64; 3]) -> f64 + Send + Sync + 'static,
        locate: impl Fn(&[f64; 3]) -> [f64; 2] + Send + Sync + 'static,
    ) -> Self {
        Self {
            embed: Arc::new(embed),
            tangents: Arc::new(tangents),
            level: Arc::new(level),
            locate: Arc::new(locate),
            params,
        }
    }

    /// `S = {y = φ(x, t)}` parameterized by `(x, t)`.
    pub fn graph(
        params: Aabb<2>,
        phi: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        dphi: impl Fn(f64, f64) -> [f64; 2] + Send + Sync + 'static,
    ) -> Self {
        let phi = Arc::new(phi);
        let (p1, p2) = (phi.clone(), phi);
        Self::new(
            params,
            move |s| [s[0], s[1], p1(s[0], s[1])],
            move |s| {
                let d = dphi(s[0], s[1]);
                [[1.0, 0.0, d[0]], [0.0, 1.0, d[1]]]
            },
            move |p| p[2] - p2(p[0], p[1]),
            |p| [p[0], p[1]],
        )
    }

    pub fn embed(&self, s: &[f64; 2]) -> [f64; 3] {
        (self.embed)(s)
    }

    pub fn tangents(&self, s: &[f64; 2]) -> [[f64; 3]; 2] {
        (self.tangents)(s)
    }

    pub fn level(&self, p: &[f64; 3]) -> f64 {
        (self.level)(p)
    }

    pub fn locate(&self, p: &[f64; 3]) -> [f64; 2] {
        (self.locate)(p)
    }

    /// Pulls a 1-form back to the patch parameters.
    pub fn restrict(&self, coeffs: &[f64], s: &[f64; 2]) -> [f64; 2] {
        let e = self.tangents(s);
        let dot = |v: &[f64; 3]| v[0] * coeffs[0] + v[1] * coeffs[1] + v[2] * coeffs[2];
        [dot(&e[0]), dot(&e[1])]
    }

    fn same_as(&self, other: &SurfacePatch) -> bool {
        if self.params != other.params {
            return false;
        }
        let lat = self.params.shrunk(0.5).lattice(3);
        lat.iter().all(|s| {
            let (a, b) = (self.embed(s), other.embed(s));
            (0..3).all(|i| (a[i] - b[i]).abs() <= 1e-12 * (1.0 + a[i].abs()))
        })
    }
}

/// Open region given by a membership predicate inside a bounding box.
#[derive(Clone)]
pub struct Region {
    inside: Inside,
    pub bbox: Aabb<3>,
}

impl std::fmt::Debug for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Region").field("bbox", &self.bbox).finish()
    }
}

impl Region {
    pub fn new(bbox: Aabb<3>, inside: impl Fn(&[f64; 3]) -> bool + Send + Sync + 'static) -> Self {
        Self { inside: Arc::new(inside), bbox }
    }

    pub fn boxed(bbox: Aabb<3>) -> Self {
        Self::new(bbox, move |p| bbox.contains(p))
    }

    pub fn contains(&self, p: &[f64; 3]) -> bool {
        self.bbox.contains(p) && (self.inside)(p)
    }

    fn intersect(&self, b: Aabb<3>) -> Self {
        let me = self.clone();
        Self::new(b, move |p| me.contains(p))
    }
}

/// The wedge domain `{0 < |t| < x, x² + t² < 1, |y| < 1}` together with its
/// closure, in which leaves are counted.
pub fn wedge_domain() -> (Region, Region) {
    let bbox = Aabb::new([0.0, -1.0, -1.0], [1.0, 1.0, 1.0]).unwrap();
    let open = Region::new(bbox, |p| 0.0 < p[1].abs() && p[1].abs() < p[0] && p[0] * p[0] + p[1] * p[1] < 1.0 && p[2].abs() < 1.0);
    let closed = Region::new(bbox, |p| p[1].abs() <= p[0] && p[0] * p[0] + p[1] * p[1] <= 1.0 && p[2].abs() <= 1.0 && p[0] > 0.0);
    (open, closed)
}

/// The surface `y = −t/x` over the wedge.
pub fn wedge_surface() -> SurfacePatch {
    SurfacePatch::graph(
        Aabb::new([0.0, -1.0], [1.0, 1.0]).unwrap(),
        |x, t| -t / x,
        |x, t| [t / (x * x), -1.0 / x],
    )
}

/// Tuning of flow marching in a cut.
#[derive(Debug, Clone, Copy)]
pub struct CutOptions {
    /// RK4 step of the flow marching.
    pub step: f64,
    /// Longest flow time searched in each direction.
    pub max_time: f64,
    /// Surface samples per parameter axis.
    pub surface_samples: usize,
    /// Probes per flow line.
    pub probes: usize,
    /// Window halvings allowed before giving up.
    pub max_shrink: usize,
}

impl Default for CutOptions {
    fn default() -> Self {
        Self { step: 0.01, max_time: 10.0, surface_samples: 20, probes: 50, max_shrink: 6 }
    }
}

/// Flow-line foot on the cut surface.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Projection {
    pub param: [f64; 2],
    pub point: [f64; 3],
    /// Flow time from the input point to the surface.
    pub time: f64,
}

/// Neighbourhood of a foliation cut: a region, a surface meeting every flow
/// line of `field` once, and the projection along flow lines.
#[derive(Clone, Debug)]
pub struct FoliationCut {
    pub region: Region,
    pub surface: SurfacePatch,
    pub field: VectorField<3>,
    pub opts: CutOptions,
}

#[derive(Debug, Clone, Serialize)]
pub struct CutDiagnostics {
    pub samples: usize,
    pub max_identity_error: f64,
    pub max_kernel_error: f64,
    pub max_probe_error: f64,
    pub min_transversality: f64,
    pub shrinks: usize,
}

impl FoliationCut {
    /// Flow of the field for time `tau` with steps of at most `opts.step`.
    pub fn flow(&self, p: &[f64; 3], tau: f64) -> [f64; 3] {
        let n = (tau.abs() / self.opts.step).ceil().max(1.0) as usize;
        let h = tau / n as f64;
        let f = |q: &[f64; 3]| self.field.eval(q);
        let mut q = *p;
        for _ in 0..n {
            q = rk4_step(&f, &q, h);
        }
        q
    }

    /// Marches along the flow line in direction `dir` (±1) and returns the
    /// sampled `(time, point)` list up to the region boundary.
    fn march(&self, p: &[f64; 3], dir: f64) -> Vec<(f64, [f64; 3])> {
        let f = |q: &[f64; 3]| self.field.eval(q);
        let h = dir * self.opts.step;
        let mut out = vec![(0.0, *p)];
        let mut q = *p;
        let mut t = 0.0f64;
        while t.abs() < self.opts.max_time {
            let next = rk4_step(&f, &q, h);
            if !self.region.contains(&next) {
                // bisect the exit point
                let (mut a, mut b) = (0.0, 1.0);
                for _ in 0..50 {
                    let m = 0.5 * (a + b);
                    if self.region.contains(&rk4_step(&f, &q, m * h)) {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                if a > 0.0 {
                    out.push((t + a * h, rk4_step(&f, &q, a * h)));
                }
                break;
            }
            q = next;
            t += h;
            out.push((t, q));
        }
        out
    }

    /// Number of sign changes of the level function along the whole flow
    /// line through `p` inside the region.
    pub fn crossings(&self, p: &[f64; 3]) -> usize {
        let mut back = self.march(p, -1.0);
        back.reverse();
        back.pop();
        back.extend(self.march(p, 1.0));
        let sign = |q: &[f64; 3]| self.surface.level(q) >= 0.0;
        back.windows(2).filter(|w| sign(&w[0].1) != sign(&w[1].1)).count()
    }

    /// Projection `p(u)` along the flow onto the surface.
    pub fn project(&self, u: &[f64; 3]) -> Result<Projection> {
        if !self.region.contains(u) {
            return Err(Error::domain(u, "point outside the cut region"));
        }
        let l0 = self.surface.level(u);
        if l0 == 0.0 {
            return Ok(Projection { param: self.surface.locate(u), point: *u, time: 0.0 });
        }
        let f = |q: &[f64; 3]| self.field.eval(q);
        let fwd = self.march(u, 1.0);
        let bwd = self.march(u, -1.0);
        let mut best: Option<(f64, [f64; 3], f64, [f64; 3])> = None;
        for line in [&fwd, &bwd] {
            if let Some(w) = line.windows(2).find(|w| (self.surface.level(&w[0].1) >= 0.0) != (self.surface.level(&w[1].1) >= 0.0)) {
                let cand = (w[0].0, w[0].1, w[1].0, w[1].1);
                if best.map_or(true, |b| cand.0.abs() < b.0.abs()) {
                    best = Some(cand);
                }
            }
        }
        let (ta, pa, tb, _) = best.ok_or_else(|| Error::Coverage(format!("flow line through {u:?} does not reach the cut surface")))?;
        let la = self.surface.level(&pa);
        let (mut a, mut b) = (0.0, tb - ta);
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            let q = rk4_step(&f, &pa, m);
            if (self.surface.level(&q) >= 0.0) == (la >= 0.0) {
                a = m;
            } else {
                b = m;
            }
            if (b - a).abs() < 1e-15 {
                break;
            }
        }
        let tau = ta + 0.5 * (a + b);
        let q = rk4_step(&f, &pa, 0.5 * (a + b));
        Ok(Projection { param: self.surface.locate(&q), point: q, time: tau })
    }

    fn diagnose(&self, window: &Aabb<3>) -> Result<CutDiagnostics> {
        let n = self.opts.surface_samples.max(2);
        let ps = self.surface.params;
        let mut samples = vec![];
        for a in 0..n {
            for b in 0..n {
                let s = [
                    ps.lo[0] + (ps.hi[0] - ps.lo[0]) * (a as f64 + 0.5) / n as f64,
                    ps.lo[1] + (ps.hi[1] - ps.lo[1]) * (b as f64 + 0.5) / n as f64,
                ];
                let p = self.surface.embed(&s);
                if window.contains(&p) && self.region.contains(&p) {
                    samples.push(s);
                }
            }
        }
        if samples.is_empty() {
            return Err(Error::Coverage("no surface samples inside the window".into()));
        }
        let per: Vec<Result<[f64; 4]>> = samples
            .par_iter()
            .map(|s| {
                let p = self.surface.embed(s);
                let e = self.surface.tangents(s);
                let x = self.field.eval(&p);
                let tr = det3(&e[0], &e[1], &x).abs() / (1e-300 + norm(&x) * norm(&e[0]) * norm(&e[1]));
                if tr <= 1e-8 {
                    return Err(Error::Transversality { witness: p.to_vec(), reason: "surface tangent to the flow".into() });
                }
                let pj = self.project(&p)?;
                let id = (pj.param[0] - s[0]).abs().max((pj.param[1] - s[1]).abs());
                // kernel of Tp along the flow
                let eps = 1e-5;
                let shifted: [f64; 3] = std::array::from_fn(|i| p[i] + eps * x[i]);
                let ker = if self.region.contains(&shifted) {
                    let q = self.project(&shifted)?;
                    (q.param[0] - pj.param[0]).abs().max((q.param[1] - pj.param[1]).abs()) / eps
                } else {
                    0.0
                };
                // probes along the line must all project back to s and see one crossing
                let mut line = self.march(&p, -1.0);
                line.reverse();
                line.pop();
                line.extend(self.march(&p, 1.0));
                let stride = (line.len() / self.opts.probes.max(1)).max(1);
                let mut probe = 0.0f64;
                for (_, q) in line.iter().step_by(stride).filter(|(_, q)| self.region.contains(q)) {
                    if self.crossings(q) != 1 {
                        return Err(Error::Validation(format!("flow line through {q:?} meets the surface more than once")));
                    }
                    let r = self.project(q)?;
                    probe = probe.max((r.param[0] - s[0]).abs().max((r.param[1] - s[1]).abs()));
                }
                Ok([id, ker, probe, tr])
            })
            .collect();
        let mut d = CutDiagnostics {
            samples: samples.len(),
            max_identity_error: 0.0,
            max_kernel_error: 0.0,
            max_probe_error: 0.0,
            min_transversality: f64::INFINITY,
            shrinks: 0,
        };
        for r in per {
            let r = r?;
            d.max_identity_error = d.max_identity_error.max(r[0]);
            d.max_kernel_error = d.max_kernel_error.max(r[1]);
            d.max_probe_error = d.max_probe_error.max(r[2]);
            d.min_transversality = d.min_transversality.min(r[3]);
        }
        Ok(d)
    }
}

/// Builds a cut and verifies its defining conditions on samples. When a
/// condition fails the window is halved about its centre and the check is
/// repeated.
pub fn build_cut(
    field: VectorField<3>,
    surface: SurfacePatch,
    region: Region,
    window: Aabb<3>,
    opts: CutOptions,
) -> Result<(FoliationCut, CutDiagnostics)> {
    let mut w = window;
    let mut last = None;
    for shrinks in 0..=opts.max_shrink {
        let cut = FoliationCut { region: region.intersect(w), surface: surface.clone(), field: field.clone(), opts };
        match cut.diagnose(&w) {
            Ok(mut d) if d.max_identity_error <= 1e-8 && d.max_kernel_error <= 1e-4 && d.max_probe_error <= 1e-6 => {
                d.shrinks = shrinks;
                return Ok((cut, d));
            }
            Ok(d) => {
                last = Some(Error::Validation(format!("cut conditions not met: {d:?}")));
            }
            Err(e @ Error::Transversality { .. }) => return Err(e),
            Err(e) => last = Some(e),
        }
        w = w.shrunk(0.5);
    }
    Err(last.unwrap())
}

fn same_surface(a: &FoliationCut, b: &FoliationCut) -> bool {
    a.surface.same_as(&b.surface)
}

pub(crate) fn require_same_surface(a: &FoliationCut, b: &FoliationCut) -> Result<()> {
    if same_surface(a, b) {
        Ok(())
    } else {
        Err(Error::Input("the two cuts do not share their surface".into()))
    }
}
