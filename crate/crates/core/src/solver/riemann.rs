use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::FluxModel;

/// Scalar flux `F(u)` for `u_t + F(u)_x = 0`.
pub trait ConvexFlux: Send + Sync {
    fn f(&self, u: f64) -> f64;
    fn df(&self, u: f64) -> f64;
    fn ddf(&self, u: f64) -> f64;
    /// Inverse of `F'` on `[lo, hi]`.
    fn inv_df(&self, v: f64, lo: f64, hi: f64) -> f64 {
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if self.df(m) < v {
                a = m;
            } else {
                b = m;
            }
            if b - a <= 1e-15 * (1.0 + m.abs()) {
                break;
            }
        }
        0.5 * (a + b)
    }
}

/// `F(u) = u²/2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Burgers;

impl ConvexFlux for Burgers {
    fn f(&self, u: f64) -> f64 {
        0.5 * u * u
    }
    fn df(&self, u: f64) -> f64 {
        u
    }
    fn ddf(&self, _u: f64) -> f64 {
        1.0
    }
    fn inv_df(&self, v: f64, lo: f64, hi: f64) -> f64 {
        v.clamp(lo, hi)
    }
}

type Fn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Flux given by closures for `F`, `F'` and `F''`.
#[derive(Clone)]
pub struct NumericFlux {
    f: Fn1,
    df: Fn1,
    ddf: Fn1,
}

impl NumericFlux {
    pub fn new(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
        ddf: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { f: Arc::new(f), df: Arc::new(df), ddf: Arc::new(ddf) }
    }

    /// Extracts `F` from a model of the form `Z = (F(y), y)` with no source.
    pub fn from_model(model: &FluxModel) -> Result<Self> {
        use crate::model::Flux;
        let d = &model.domain;
        let zs = [[d.center()[0], d.center()[1]], [d.lo[0], d.lo[1]], [d.hi[0], d.hi[1]]];
        let ys: Vec<f64> = (0..9).map(|k| d.lo[2] + (d.hi[2] - d.lo[2]) * k as f64 / 8.0).collect();
        for z in &zs {
            for &y in &ys {
                let zz = model.flux(z, y);
                let z0 = model.flux(&zs[0], y);
                if (zz[1] - y).abs() > 1e-12 || (zz[0] - z0[0]).abs() > 1e-12 || model.source(z, y).abs() > 1e-12 {
                    return Err(Error::UnsupportedFlux(
                        "solver needs a homogeneous law with Z = (F(y), y)".into(),
                    ));
                }
            }
        }
        let (m1, m2, m3) = (model.clone(), model.clone(), model.clone());
        let z = zs[0];
        let h = 1e-4;
        Ok(Self::new(
            move |u| m1.flux(&z, u)[0],
            move |u| m2.flux_y(&z, u)[0],
            move |u| (m3.flux_y(&z, u + h)[0] - m3.flux_y(&z, u - h)[0]) / (2.0 * h),
        ))
    }
}

impl ConvexFlux for NumericFlux {
    fn f(&self, u: f64) -> f64 {
        (self.f)(u)
    }
    fn df(&self, u: f64) -> f64 {
        (self.df)(u)
    }
    fn ddf(&self, u: f64) -> f64 {
        (self.ddf)(u)
    }
}

/// Checks `F'' > 0` on 33 samples of `[a, b]`.
pub fn require_convex(flux: &dyn ConvexFlux, a: f64, b: f64) -> Result<()> {
    let (lo, hi) = (a.min(b), a.max(b));
    for k in 0..=32 {
        let u = lo + (hi - lo) * k as f64 / 32.0;
        if !(flux.ddf(u) > 0.0) {
            return Err(Error::UnsupportedFlux(format!("flux is not strictly convex at u = {u}")));
        }
    }
    Ok(())
}

/// Self-similar solution `u(ξ)`, `ξ = x/t`, of the Riemann problem.
pub fn riemann_exact(flux: &dyn ConvexFlux, ul: f64, ur: f64, xi: f64) -> Result<f64> {
    if ul == ur {
        return Ok(ul);
    }
    require_convex(flux, ul, ur)?;
    Ok(riemann_unchecked(flux, ul, ur, xi))
}

pub(crate) fn riemann_unchecked(flux: &dyn ConvexFlux, ul: f64, ur: f64, xi: f64) -> f64 {
    if ul == ur {
        return ul;
    }
    if ul > ur {
        let s = (flux.f(ul) - flux.f(ur)) / (ul - ur);
        if xi < s {
            ul
        } else {
            ur
        }
    } else if xi <= flux.df(ul) {
        ul
    } else if xi >= flux.df(ur) {
        ur
    } else {
        flux.inv_df(xi, ul, ur)
    }
}

/// Godunov interface flux `F(u(0; u_l, u_r))`.
pub fn godunov_flux(flux: &dyn ConvexFlux, ul: f64, ur: f64) -> f64 {
    flux.f(riemann_unchecked(flux, ul, ur, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn burgers_examples() {
        let b = Burgers;
        assert_eq!(riemann_exact(&b, 1.0, 0.0, 0.49).unwrap(), 1.0);
        assert_eq!(riemann_exact(&b, 1.0, 0.0, 0.51).unwrap(), 0.0);
        assert_eq!(riemann_exact(&b, -1.0, 1.0, 0.3).unwrap(), 0.3);
        assert_eq!(riemann_exact(&b, -1.0, 1.0, -2.0).unwrap(), -1.0);
        assert_eq!(riemann_exact(&b, 0.4, 0.4, 9.0).unwrap(), 0.4);
    }

    #[test]
    fn numeric_fan_inverts_the_derivative() {
        let f = NumericFlux::new(|u| u.exp(), |u| u.exp(), |u| u.exp());
        let u = riemann_exact(&f, 0.0, 1.0, 1.5).unwrap();
        assert!((u - 1.5f64.ln()).abs() < 1e-12);
        let concave = NumericFlux::new(|u| -u * u, |u| -2.0 * u, |_| -2.0);
        assert!(matches!(riemann_exact(&concave, 0.0, 1.0, 0.0), Err(Error::UnsupportedFlux(_))));
    }

    #[test]
    fn model_extraction() {
        let f = NumericFlux::from_model(&FluxModel::flat_projective()).unwrap();
        assert!((f.f(0.6) - 0.18).abs() < 1e-14 && (f.ddf(0.3) - 1.0).abs() < 1e-8);
        let adv = FluxModel::linear_advection(crate::model::Poly3::new([(1.0, [1, 0, 0])])).unwrap();
        assert!(NumericFlux::from_model(&adv).is_err());
    }
}
