use crate::characteristics::{check_transversality, kappa, TransversalityOptions};
use crate::entropy::{jump_admissibility, JumpReport};
use crate::error::{Error, Result};
use crate::model::{Flux, FluxModel, Grid2, JumpCurve, JumpData, PiecewiseSection};

/// Glued section plus the checks run along its jump curve.
#[derive(Debug, Clone)]
pub struct GlueResult {
    pub section: PiecewiseSection,
    pub checks: Vec<JumpReport>,
    pub admissible: bool,
}

/// Joins `σ₁` (left, `x < x(t)`) and `σ₂` (right) along the curve through
/// `Σ₀` with RH slope `dx/dt = ΔZ^x / ΔZ^t`.
///
/// The pair is accepted only when characteristics of both solutions enter
/// the curve: `κ(σ₁) > s > κ(σ₂)` at `Σ₀`.
pub fn glue_classical_pair(
    model: &FluxModel,
    sigma1: &dyn Fn(f64, f64) -> f64,
    sigma2: &dyn Fn(f64, f64) -> f64,
    sigma0: [f64; 2],
    grid: Grid2,
) -> Result<GlueResult> {
    model.require_supported()?;
    let (x0, t0) = (sigma0[0], sigma0[1]);
    let (a, b) = (sigma1(x0, t0), sigma2(x0, t0));
    if a == b {
        return Err(Error::Validation(format!("σ₁ = σ₂ = {a} at the base point")));
    }
    let slope = |x: f64, t: f64| -> Result<f64> {
        let z = [x, t];
        let (u1, u2) = (sigma1(x, t), sigma2(x, t));
        let (z1, z2) = (model.flux(&z, u1), model.flux(&z, u2));
        let dt = z1[1] - z2[1];
        if dt == 0.0 || !dt.is_finite() {
            return Err(Error::Degenerate { what: "jump of the time flux".into(), witness: vec![x, t, u1, u2] });
        }
        Ok((z1[0] - z2[0]) / dt)
    };
    let s = slope(x0, t0)?;
    let field = model.characteristic_field();
    let (k1, k2) = (kappa(&field, &[x0, t0, a])?, kappa(&field, &[x0, t0, b])?);
    if !(k1 > s && s > k2) {
        return Err(Error::NoAdmissibleShock(format!(
            "characteristics do not enter the curve from both sides (κ₁ = {k1}, s = {s}, κ₂ = {k2})"
        )));
    }
    let tp = check_transversality(model, sigma0, (a.min(b), a.max(b)), None, TransversalityOptions::default())?;
    if !tp.tp1 || !tp.tp2 {
        return Err(Error::Transversality {
            witness: vec![x0, t0],
            reason: format!("tp1 = {}, tp2 = {}", tp.tp1, tp.tp2),
        });
    }

    // RK4 in both directions with the grid time step
    let rk = |x: f64, t: f64, h: f64| -> Result<f64> {
        let k1 = slope(x, t)?;
        let k2 = slope(x + 0.5 * h * k1, t + 0.5 * h)?;
        let k3 = slope(x + 0.5 * h * k2, t + 0.5 * h)?;
        let k4 = slope(x + h * k3, t + h)?;
        Ok(x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
    };
    let march = |t_end: f64| -> Result<Vec<(f64, f64)>> {
        let span = t_end - t0;
        let n = (span.abs() / grid.dt).ceil() as usize;
        let mut out = vec![];
        if n == 0 {
            return Ok(out);
        }
        let h = span / n as f64;
        let mut x = x0;
        for k in 0..n {
            x = rk(x, t0 + h * k as f64, h)?;
            out.push((t0 + h * (k + 1) as f64, x));
        }
        Ok(out)
    };
    let mut path: Vec<(f64, f64)> = march(grid.t0)?.into_iter().rev().collect();
    path.push((t0, x0));
    path.extend(march(grid.t_max())?);
    let (ts, xs): (Vec<f64>, Vec<f64>) = path.into_iter().unzip();
    let ul: Vec<f64> = ts.iter().zip(&xs).map(|(&t, &x)| sigma1(x, t)).collect();
    let ur: Vec<f64> = ts.iter().zip(&xs).map(|(&t, &x)| sigma2(x, t)).collect();
    let curve = JumpCurve::new(ts, xs, ul, ur)?;

    let (ta, tb) = curve.t_range();
    let mut checks = Vec::with_capacity(20);
    for k in 0..20 {
        let t = ta + (tb - ta) * (k as f64 + 0.5) / 20.0;
        let x = curve.position(t).unwrap();
        let s = slope(x, t)?;
        checks.push(jump_admissibility(model, &JumpData::with_speed([x, t], s, sigma1(x, t), sigma2(x, t))?)?);
    }
    let admissible = checks.iter().all(|c| c.entropic && c.rh_residual.abs() <= 1e-9);
    let c2 = curve.clone();
    let section = PiecewiseSection::sample(grid, vec![curve], |x, t| match c2.position(t) {
        Some(p) if x >= p => sigma2(x, t),
        _ => sigma1(x, t),
    })?;
    Ok(GlueResult { section, checks, admissible })
}
