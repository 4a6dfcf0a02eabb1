//! Subcommand implementations. Each returns `Ok(true)` when every check
//! passed and `Ok(false)` when one reported a violation.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use charentropy::characteristics::{classify_kappa, trace_characteristic, KappaRegime};
use charentropy::claws::{build_conservation_law, build_cut, wedge_domain, wedge_surface, CutOptions, VolumeGrid};
use charentropy::entropy::{
    entropy_residual, jump_admissibility, volpert_identity_check, weak_rh_residual, BaseTest, Bump, FiberTest, TotalTest,
};
use charentropy::integrability::check_frame_condition;
use charentropy::io::{load_model, load_section, read_rows, write_rows, write_section_csv};
use charentropy::model::{validate_section, Layer};
use charentropy::oriented::{oriented_existence_test, separability_test};
use charentropy::solver::{godunov_solve, riemann_exact, Boundary, NumericFlux};
use charentropy::{Aabb, DensitySpec, EntropyDensity, Error, FluxModel, JumpData, PiecewiseSection, Result, VectorField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::expr::Expr;
use crate::report::Reporter;
use crate::{Command, Common};

const XTY: [&str; 3] = ["x", "t", "y"];

pub fn dispatch(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Trace { common, from, span, step } => trace(&common, from, span, step),
        Command::Solve { common, u0, t_final, nx, cfl, x_range, boundary } => {
            solve(&common, &u0, t_final, nx, cfl, x_range, &boundary)
        }
        Command::Riemann { common, ul, ur, t_final, x_range, nx } => riemann(&common, ul, ur, t_final, x_range, nx),
        Command::VerifySection { common, section, jumps, tests, tol, seed } => {
            verify_section(&common, &section, jumps.as_deref(), &tests, tol, seed)
        }
        Command::CheckJump { common, jump, nu, ul, ur, tol } => check_jump(&common, jump, nu, ul, ur, tol),
        Command::Integrability { common, region, grid } => integrability(&common, region, grid),
        Command::BuildClaw { common, cut1, cut2, gamma, domain, spacing, grid_out, tol } => {
            build_claw(&common, &cut1, &cut2, &gamma, domain, spacing, grid_out.as_deref(), tol)
        }
        Command::OrientedTest { common, weight, scale, mu, domain, grid, grid_out } => {
            oriented_test(&common, &weight, &scale, &mu, domain, grid, grid_out.as_deref())
        }
        Command::Separability { common, f, domain, grid } => separability(&common, &f, domain, grid),
        Command::Volpert { common, section, jumps, phi, theta, tol } => {
            volpert(&common, &section, jumps.as_deref(), phi, theta, tol)
        }
    }
}

fn region(b: [f64; 6]) -> Result<Aabb<3>> {
    Aabb::new([b[0], b[2], b[4]], [b[1], b[3], b[5]])
}

fn csv_sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(std::io::stdout()),
    })
}

fn trace(common: &Common, from: [f64; 3], span: f64, step: f64) -> Result<bool> {
    let model = load_model(&common.model)?;
    let c = trace_characteristic(&model, from, span, step)?;
    let rows = c.s.iter().zip(&c.states).map(|(s, p)| vec![*s, p[0], p[1], p[2]]);
    write_rows(csv_sink(common.out.as_deref())?, &["s", "x", "t", "y"], rows)?;
    Ok(true)
}

/// Initial data from an expression in `x`, or from an `x,u` table with
/// linear interpolation and constant extension.
fn initial_data(spec: &str) -> Result<Box<dyn Fn(f64) -> f64>> {
    let path = Path::new(spec);
    if path.is_file() {
        let (header, rows) = read_rows(File::open(path)?)?;
        if header != ["x", "u"] || rows.len() < 2 {
            return Err(Error::Parse("initial data table needs header x,u and at least two rows".into()));
        }
        if rows.windows(2).any(|w| !(w[1][0] > w[0][0])) {
            return Err(Error::Parse("initial data abscissae must increase".into()));
        }
        return Ok(Box::new(move |x| {
            let k = rows.partition_point(|r| r[0] <= x);
            if k == 0 {
                return rows[0][1];
            }
            if k == rows.len() {
                return rows[k - 1][1];
            }
            let (a, b) = (&rows[k - 1], &rows[k]);
            a[1] + (x - a[0]) / (b[0] - a[0]) * (b[1] - a[1])
        }));
    }
    let e = Expr::parse(spec, &["x"])?;
    Ok(Box::new(move |x| e.eval(&[x])))
}

fn solve(common: &Common, u0: &str, t_final: f64, nx: usize, cfl: f64, xr: [f64; 2], boundary: &str) -> Result<bool> {
    let model = load_model(&common.model)?;
    let flux = NumericFlux::from_model(&model)?;
    let u0 = initial_data(u0)?;
    let boundary = match boundary {
        "outflow" => Boundary::Outflow,
        "periodic" => Boundary::Periodic,
        other => return Err(Error::Input(format!("unknown boundary '{other}'"))),
    };
    let run = godunov_solve(&flux, &*u0, xr[0], xr[1], nx, t_final, cfl, boundary)?;
    write_section_csv(&run.section, csv_sink(common.out.as_deref())?)?;
    Ok(true)
}

fn riemann(common: &Common, ul: f64, ur: f64, t_final: f64, xr: [f64; 2], nx: usize) -> Result<bool> {
    if !(t_final > 0.0) || nx < 2 || !(xr[1] > xr[0]) {
        return Err(Error::Input("need T > 0, nx ≥ 2 and an increasing x range".into()));
    }
    let model = load_model(&common.model)?;
    let flux = NumericFlux::from_model(&model)?;
    let mut rows = Vec::with_capacity(nx);
    for i in 0..nx {
        let x = xr[0] + (xr[1] - xr[0]) * i as f64 / (nx - 1) as f64;
        rows.push(vec![x, riemann_exact(&flux, ul, ur, x / t_final)?]);
    }
    write_rows(csv_sink(common.out.as_deref())?, &["x", "u"], rows)?;
    Ok(true)
}

#[derive(Debug, Default, Deserialize)]
struct TestFile {
    #[serde(default)]
    base: Vec<BaseTest>,
    #[serde(default)]
    total: Vec<TotalTest>,
}

/// Base bumps inside the section's grid and fiber bumps over its value hull.
fn auto_tests(section: &PiecewiseSection, seed: Option<u64>) -> Result<TestFile> {
    let g = &section.grid;
    let (ex, et) = (g.x_max() - g.x0, g.t_max() - g.t0);
    let mut base = Vec::new();
    match seed {
        None => {
            for fx in [0.25, 0.5, 0.75] {
                for ft in [0.25, 0.5, 0.75] {
                    base.push(Bump::new([g.x0 + fx * ex, g.t0 + ft * et], [0.2 * ex, 0.2 * et], 1.0)?);
                }
            }
        }
        Some(s) => {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            for _ in 0..9 {
                let c = [g.x0 + rng.gen_range(0.25..0.75) * ex, g.t0 + rng.gen_range(0.25..0.75) * et];
                let r = [rng.gen_range(0.1..0.2) * ex, rng.gen_range(0.1..0.2) * et];
                base.push(Bump::new(c, r, 1.0)?);
            }
        }
    }
    let lo = section.values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = section.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(0.2);
    let mut total = Vec::new();
    for phi in &base {
        for fy in [0.25, 0.5, 0.75] {
            let th: FiberTest = Bump::new([lo + fy * span], [0.5 * span], 1.0)?;
            total.push(phi.times_fiber(&th));
        }
    }
    Ok(TestFile { base, total })
}

fn verify_section(
    common: &Common,
    section: &Path,
    jumps: Option<&Path>,
    tests: &str,
    tol: f64,
    seed: Option<u64>,
) -> Result<bool> {
    let model = load_model(&common.model)?;
    let sec = load_section(section, jumps)?;
    let tests = if tests == "auto" {
        auto_tests(&sec, seed)?
    } else {
        serde_json::from_str(&std::fs::read_to_string(tests)?).map_err(|e| Error::Parse(e.to_string()))?
    };
    let mut rep = Reporter::open(common.out.as_deref())?;
    let layer = Layer::padded_hull(&sec);
    let lr = validate_section(&sec, &layer);
    rep.emit("layer", lr.is_empty(), &json!({ "node_violations": lr.nodes.len(), "jump_violations": lr.jump_vertices.len() }))?;
    for (k, phi) in tests.base.iter().enumerate() {
        let r = weak_rh_residual(&model, &sec, phi)?;
        rep.emit("weak_rh", r.abs() <= tol, &json!({ "test": k, "residual": r, "phi": phi }))?;
    }
    for (k, psi) in tests.total.iter().enumerate() {
        let r = entropy_residual(&model, &sec, psi)?;
        rep.emit("entropy", r >= -tol, &json!({ "test": k, "residual": r, "psi": psi }))?;
    }
    for (j, curve) in sec.jumps.iter().enumerate() {
        for k in 0..curve.t.len() - 1 {
            let t = 0.5 * (curve.t[k] + curve.t[k + 1]);
            let (ul, ur) = curve.traces(t).expect("inside the span");
            let x = curve.position(t).expect("inside the span");
            let s = curve.slope(t).expect("inside the span");
            let jump = JumpData::with_speed([x, t], s, ul, ur)?;
            let r = jump_admissibility(&model, &jump)?;
            let pass = r.rh_residual.abs() <= tol && r.entropic;
            rep.emit("jump", pass, &json!({ "curve": j, "segment": k, "point": [x, t], "report": r }))?;
        }
    }
    rep.finish()
}

fn check_jump(common: &Common, point: [f64; 2], nu: [f64; 2], ul: f64, ur: f64, tol: f64) -> Result<bool> {
    let model = load_model(&common.model)?;
    let jump = JumpData::new(point, nu, ul, ur)?;
    let r = jump_admissibility(&model, &jump)?;
    let mut rep = Reporter::open(common.out.as_deref())?;
    let pass = r.rh_residual.abs() <= tol && r.entropic;
    rep.emit("jump", pass, &r)?;
    rep.finish()
}

fn integrability(common: &Common, region_box: Option<[f64; 6]>, grid: usize) -> Result<bool> {
    let model = load_model(&common.model)?;
    let region = match region_box {
        Some(b) => region(b)?,
        None => model.domain.shrunk(0.9),
    };
    let frame = check_frame_condition(&model, &region, grid)?;
    let regime = classify_kappa(&model, &region, grid, 1e-8)?;
    let classification = match regime {
        KappaRegime::Distinguishing => "distinguishing",
        KappaRegime::Degenerate => "degenerate",
        KappaRegime::Mixed => "mixed",
    };
    let mut rep = Reporter::open(common.out.as_deref())?;
    rep.emit("frame", true, &json!({ "report": frame, "classification": classification }))?;
    rep.finish()
}

fn field_named(model: &FluxModel, name: &str) -> Result<VectorField<3>> {
    match name {
        "characteristic" => Ok(model.characteristic_field()),
        "fiber" => Ok(model.fiber_field()),
        other => Err(Error::Input(format!("unknown cut field '{other}' (characteristic or fiber)"))),
    }
}

#[derive(Debug, Deserialize)]
struct GammaFile {
    dx: String,
    dt: String,
    #[serde(default = "zero")]
    dy: String,
}

fn zero() -> String {
    "0".into()
}

#[allow(clippy::too_many_arguments)]
fn build_claw(
    common: &Common,
    cut1: &str,
    cut2: &str,
    gamma: &str,
    domain: [f64; 6],
    spacing: f64,
    grid_out: Option<&Path>,
    tol: f64,
) -> Result<bool> {
    let model = load_model(&common.model)?;
    let spec = if gamma == "burgers" {
        GammaFile { dx: "-y".into(), dt: "y^2/2".into(), dy: zero() }
    } else {
        toml::from_str(&std::fs::read_to_string(gamma)?).map_err(|e| Error::Parse(e.to_string()))?
    };
    let coeffs = [
        Expr::parse(&spec.dx, &XTY)?,
        Expr::parse(&spec.dt, &XTY)?,
        Expr::parse(&spec.dy, &XTY)?,
    ];
    let (_, closed) = wedge_domain();
    let mut rep = Reporter::open(common.out.as_deref())?;
    let mut cuts = Vec::new();
    for (k, name) in [cut1, cut2].into_iter().enumerate() {
        let (cut, diag) = build_cut(field_named(&model, name)?, wedge_surface(), closed.clone(), closed.bbox, CutOptions::default())?;
        rep.emit("cut", true, &json!({ "cut": k + 1, "field": name, "diagnostics": diag }))?;
        cuts.push(cut);
    }
    let surface = wedge_surface();
    let gamma_fn = move |q: &[f64; 2]| {
        let p = surface.embed(q);
        let c = [coeffs[0].eval(&p), coeffs[1].eval(&p), coeffs[2].eval(&p)];
        surface.restrict(&c, q)
    };
    let grid = VolumeGrid::with_spacing(region(domain)?, spacing);
    let r = build_conservation_law(&cuts[0], &cuts[1], &gamma_fn, grid, 200)?;
    let v = &r.validation;
    let pass = v.fiber_contraction <= tol && v.characteristic_contraction <= tol && v.boundary <= tol;
    rep.emit("conservation_law", pass, &json!({ "nondegenerate": r.nondegenerate, "validation": v, "nodes": r.alpha.n }))?;
    if let Some(path) = grid_out {
        let a = &r.alpha;
        let mut rows = Vec::with_capacity(a.data.len());
        for k in 0..a.n[2] {
            for j in 0..a.n[1] {
                for i in 0..a.n[0] {
                    let p = a.node(i, j, k);
                    let c = a.data[(k * a.n[1] + j) * a.n[0] + i];
                    rows.push(vec![p[0], p[1], p[2], c[0], c[1], c[2]]);
                }
            }
        }
        write_rows(File::create(path)?, &["x", "t", "y", "a_x", "a_t", "a_y"], rows)?;
    }
    rep.finish()
}

#[derive(Serialize)]
struct OrientedLine {
    closed: bool,
    residual: f64,
    fiber_component: f64,
    verification_residual: Option<f64>,
    tolerance: f64,
    witness: [f64; 3],
    candidate_f_grid: Option<String>,
}

fn oriented_test(
    common: &Common,
    weight: &str,
    scale: &str,
    mu: &str,
    domain: [f64; 6],
    grid: usize,
    grid_out: Option<&Path>,
) -> Result<bool> {
    let model = load_model(&common.model)?;
    let mut rho = EntropyDensity::from_model(model);
    if weight.trim() != "1" {
        rho = rho.with_weight(Expr::parse(weight, &XTY)?.scalar3())?;
    }
    if scale.trim() != "1" {
        rho = rho.with_field_scale(Expr::parse(scale, &XTY)?.scalar3())?;
    }
    let mu = DensitySpec::new(Expr::parse(mu, &["x", "t"])?.scalar2());
    let dom = region(domain)?;
    let r = oriented_existence_test(&rho, &mu, &dom, grid)?;
    let mut written = None;
    if let (Some(c), Some(path)) = (&r.candidate, grid_out) {
        let inner = dom.shrunk(0.9);
        let mut rows = Vec::new();
        for j in 0..grid {
            for i in 0..grid {
                let fx = i as f64 / (grid - 1).max(1) as f64;
                let ft = j as f64 / (grid - 1).max(1) as f64;
                let z = [
                    inner.lo[0] + fx * (inner.hi[0] - inner.lo[0]),
                    inner.lo[1] + ft * (inner.hi[1] - inner.lo[1]),
                ];
                rows.push(vec![z[0], z[1], c.eval(z)?]);
            }
        }
        write_rows(File::create(path)?, &["x", "t", "f"], rows)?;
        written = Some(path.display().to_string());
    }
    let line = OrientedLine {
        closed: r.closed,
        residual: r.closedness_residual,
        fiber_component: r.fiber_component,
        verification_residual: r.verification_residual,
        tolerance: r.tolerance,
        witness: r.witness,
        candidate_f_grid: written,
    };
    let mut rep = Reporter::open(common.out.as_deref())?;
    rep.emit("oriented_existence", r.closed, &line)?;
    rep.finish()
}

fn separability(common: &Common, f: &str, domain: [f64; 6], grid: usize) -> Result<bool> {
    let model = load_model(&common.model)?;
    let f = Expr::parse(f, &XTY)?.scalar3();
    let r = separability_test(&f, &model.characteristic_field(), &model.fiber_field(), &region(domain)?, grid)?;
    let mut rep = Reporter::open(common.out.as_deref())?;
    rep.emit("separability", r.separable, &r)?;
    rep.finish()
}

fn volpert(common: &Common, section: &Path, jumps: Option<&Path>, phi: [f64; 4], theta: [f64; 2], tol: f64) -> Result<bool> {
    let model = load_model(&common.model)?;
    let sec = load_section(section, jumps)?;
    let phi: BaseTest = Bump::new([phi[0], phi[1]], [phi[2], phi[3]], 1.0)?;
    let theta: FiberTest = Bump::new([theta[0]], [theta[1]], 1.0)?;
    let r = volpert_identity_check(&model, &sec, &theta, &phi)?;
    let mut rep = Reporter::open(common.out.as_deref())?;
    rep.emit("volpert", r.difference <= tol, &r)?;
    rep.finish()
}
