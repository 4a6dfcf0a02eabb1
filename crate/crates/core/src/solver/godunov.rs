use super::riemann::{godunov_flux, require_convex, ConvexFlux};
use crate::error::{Error, Result};
use crate::model::{Grid2, PiecewiseSection};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    Outflow,
}

#[derive(Debug, Clone)]
pub struct GodunovRun {
    /// Cell averages at cell centres, one row per time step.
    pub section: PiecewiseSection,
    pub dt: f64,
    pub steps: usize,
}

/// First-order Godunov scheme on `nx` cells of `[x_lo, x_hi]`.
///
/// `Δt = T / ⌈T / (cfl·Δx / max|F'|)⌉`, so the last step lands on `T`.
#[allow(clippy::too_many_arguments)]
pub fn godunov_solve(
    flux: &dyn ConvexFlux,
    u0: &dyn Fn(f64) -> f64,
    x_lo: f64,
    x_hi: f64,
    nx: usize,
    t_final: f64,
    cfl: f64,
    boundary: Boundary,
) -> Result<GodunovRun> {
    if !(cfl > 0.0 && cfl <= 0.9) {
        return Err(Error::Input(format!("cfl must lie in (0, 0.9], got {cfl}")));
    }
    if nx < 2 || !(x_hi > x_lo) || !(t_final > 0.0) {
        return Err(Error::Input("need nx ≥ 2, x_hi > x_lo and T > 0".into()));
    }
    let dx = (x_hi - x_lo) / nx as f64;
    let mut u: Vec<f64> = (0..nx).map(|i| u0(x_lo + (i as f64 + 0.5) * dx)).collect();
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("initial data must be bounded".into()));
    }
    let lo = u.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        require_convex(flux, lo, hi)?;
    }
    let smax = (0..=64)
        .map(|k| flux.df(lo + (hi - lo) * k as f64 / 64.0).abs())
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let steps = (t_final / (cfl * dx / smax)).ceil().max(1.0) as usize;
    let dt = t_final / steps as f64;
    let mut values = Vec::with_capacity(nx * (steps + 1));
    values.extend_from_slice(&u);
    let mut fl = vec![0.0; nx + 1];
    for _ in 0..steps {
        for (k, f) in fl.iter_mut().enumerate() {
            let (a, b) = match boundary {
                Boundary::Periodic => (u[(k + nx - 1) % nx], u[k % nx]),
                Boundary::Outflow => (u[k.saturating_sub(1)], u[k.min(nx - 1)]),
            };
            *f = godunov_flux(flux, a, b);
        }
        let r = dt / dx;
        for i in 0..nx {
            u[i] -= r * (fl[i + 1] - fl[i]);
        }
        values.extend_from_slice(&u);
    }
    let grid = Grid2::new(x_lo + 0.5 * dx, dx, nx, 0.0, dt, steps + 1)?;
    Ok(GodunovRun {
        section: PiecewiseSection::new(grid, values, vec![])?,
        dt,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{riemann_exact, Burgers};

    fn l1_error(nx: usize) -> f64 {
        let run = godunov_solve(&Burgers, &|x| if x < 0.0 { 1.0 } else { 0.0 }, -1.0, 1.0, nx, 0.5, 0.8, Boundary::Outflow).unwrap();
        let g = run.section.grid;
        let n = g.nt - 1;
        (0..g.nx)
            .map(|i| (run.section.value(i, n) - riemann_exact(&Burgers, 1.0, 0.0, g.x(i) / 0.5).unwrap()).abs() * g.dx)
            .sum()
    }

    #[test]
    fn riemann_convergence() {
        let (a, b) = (l1_error(200), l1_error(400));
        assert!(b < 5.0 * 2.0 / 400.0);
        let order = (a / b).log2();
        assert!(order >= 0.8, "order {order}");
    }

    #[test]
    fn periodic_conservation() {
        let run = godunov_solve(&Burgers, &|x: f64| (std::f64::consts::PI * x).sin() + 0.5, -1.0, 1.0, 128, 1.0, 0.9, Boundary::Periodic).unwrap();
        let g = run.section.grid;
        let mass = |n: usize| -> f64 { (0..g.nx).map(|i| run.section.value(i, n)).sum::<f64>() * g.dx };
        let m0 = mass(0);
        for n in 1..g.nt {
            assert!((mass(n) - mass(n - 1)).abs() < 1e-12);
        }
        assert!((mass(g.nt - 1) - m0).abs() < 1e-11);
    }

    #[test]
    fn cfl_limit() {
        assert!(godunov_solve(&Burgers, &|_| 0.0, 0.0, 1.0, 10, 1.0, 0.95, Boundary::Outflow).is_err());
    }
}
