use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geomkit::Aabb;

fn profile(s: f64) -> (f64, f64) {
    if s.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let q = 1.0 - s * s;
    let b = (-1.0 / q).exp();
    (b, -2.0 * s / (q * q) * b)
}

/// Tensor-product bump `a·Π exp(−1/(1−s_i²))`, `s_i = (p_i − c_i)/r_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump<const D: usize> {
    #[serde(with = "arr")]
    pub center: [f64; D],
    #[serde(with = "arr")]
    pub radii: [f64; D],
    pub amplitude: f64,
}

mod arr {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer, const D: usize>(a: &[f64; D], s: S) -> Result<S::Ok, S::Error> {
        a.as_slice().serialize(s)
    }

    pub fn deserialize<'de, De: Deserializer<'de>, const D: usize>(d: De) -> Result<[f64; D], De::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        v.try_into()
            .map_err(|v: Vec<f64>| serde::de::Error::invalid_length(v.len(), &"fixed-length array"))
    }
}

/// Test function on the base.
pub type BaseTest = Bump<2>;
/// Test function on the total space.
pub type TotalTest = Bump<3>;
/// Fiber test density `θ(y)`.
pub type FiberTest = Bump<1>;

impl<const D: usize> Bump<D> {
    pub fn new(center: [f64; D], radii: [f64; D], amplitude: f64) -> Result<Self> {
        if radii.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::Input("bump radii must be positive".into()));
        }
        if !amplitude.is_finite() {
            return Err(Error::Input("bump amplitude must be finite".into()));
        }
        Ok(Self { center, radii, amplitude })
    }

    pub fn support(&self) -> Aabb<D> {
        Aabb {
            lo: std::array::from_fn(|i| self.center[i] - self.radii[i]),
            hi: std::array::from_fn(|i| self.center[i] + self.radii[i]),
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.amplitude >= 0.0
    }

    pub fn eval(&self, p: &[f64; D]) -> f64 {
        let mut v = self.amplitude;
        for i in 0..D {
            v *= profile((p[i] - self.center[i]) / self.radii[i]).0;
            if v == 0.0 {
                return 0.0;
            }
        }
        v
    }

    /// Value and gradient.
    pub fn jet(&self, p: &[f64; D]) -> (f64, [f64; D]) {
        let pr: [(f64, f64); D] = std::array::from_fn(|i| profile((p[i] - self.center[i]) / self.radii[i]));
        let v = self.amplitude * pr.iter().map(|q| q.0).product::<f64>();
        let g = std::array::from_fn(|i| {
            let mut d = self.amplitude * pr[i].1 / self.radii[i];
            for (k, q) in pr.iter().enumerate() {
                if k != i {
                    d *= q.0;
                }
            }
            d
        });
        (v, g)
    }
}

impl Bump<2> {
    /// `φ(z)·θ(y)` as a total-space bump.
    pub fn times_fiber(&self, theta: &FiberTest) -> TotalTest {
        Bump {
            center: [self.center[0], self.center[1], theta.center[0]],
            radii: [self.radii[0], self.radii[1], theta.radii[0]],
            amplitude: self.amplitude * theta.amplitude,
        }
    }
}
