//! One-dimensional quadrature rules shared by the residual evaluators.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Computes the `n`-point rule by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, z);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Integrates `f` over `[a, b]` split into `panels` equal panels.
    pub fn integrate(&self, a: f64, b: f64, panels: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
        if a == b {
            return 0.0;
        }
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        let mut total = 0.0;
        for k in 0..panels {
            let lo = a + h * k as f64;
            let mid = lo + 0.5 * h;
            let mut acc = 0.0;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                acc += w * f(mid + 0.5 * h * x);
            }
            total += 0.5 * h * acc;
        }
        total
    }

    /// Vector-valued variant of [`GaussLegendre::integrate`].
    pub fn integrate_vec<const N: usize>(
        &self,
        a: f64,
        b: f64,
        panels: usize,
        mut f: impl FnMut(f64) -> [f64; N],
    ) -> [f64; N] {
        let mut total = [0.0; N];
        if a == b {
            return total;
        }
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        for k in 0..panels {
            let mid = a + h * (k as f64 + 0.5);
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                let v = f(mid + 0.5 * h * x);
                for i in 0..N {
                    total[i] += 0.5 * h * w * v[i];
                }
            }
        }
        total
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Simpson rule with `nodes` points (forced odd, at least 3).
pub fn simpson(a: f64, b: f64, nodes: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let n = if nodes % 2 == 0 { nodes + 1 } else { nodes.max(3) };
    let intervals = n - 1;
    let h = (b - a) / intervals as f64;
    let mut acc = f(a) + f(b);
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * i as f64);
    }
    acc * h / 3.0
}

/// Vector-valued composite Simpson rule.
pub fn simpson_vec<const N: usize>(
    a: f64,
    b: f64,
    nodes: usize,
    mut f: impl FnMut(f64) -> [f64; N],
) -> [f64; N] {
    let n = if nodes % 2 == 0 { nodes + 1 } else { nodes.max(3) };
    let intervals = n - 1;
    let h = (b - a) / intervals as f64;
    let mut acc = [0.0; N];
    for i in 0..=intervals {
        let w = if i == 0 || i == intervals {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let v = f(a + h * i as f64);
        for k in 0..N {
            acc[k] += w * v[k];
        }
    }
    acc.map(|v| v * h / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let gl = GaussLegendre::new(5);
        let v = gl.integrate(-1.0, 2.0, 1, |x| x.powi(9) - 3.0 * x.powi(4) + 1.0);
        let exact = (2f64.powi(10) - 1.0) / 10.0 - 3.0 * (32.0 + 1.0) / 5.0 + 3.0;
        assert!((v - exact).abs() < 1e-11, "{v} vs {exact}");
        let s: f64 = gl.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn simpson_is_exact_on_cubics() {
        let v = simpson(0.0, 1.0, 3, |x| x * x * x);
        assert!((v - 0.25).abs() < 1e-15);
        let w = simpson_vec(0.0, 1.0, 129, |x| [x.sin(), 1.0]);
        assert!((w[0] - (1.0 - 1f64.cos())).abs() < 1e-10);
        assert!((w[1] - 1.0).abs() < 1e-14);
    }
}
