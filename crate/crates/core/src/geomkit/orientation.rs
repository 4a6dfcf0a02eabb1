//! Sign arithmetic for orientations of a subspace `W ⊂ V`, of `V/W` and of `V`.
//!
//! In a chart with base coordinates first and the fiber last, every
//! orientation is a sign relative to the coordinate orientation. With
//! `p = dim W` and `d = dim V`:
//!
//! * `θ ⋉ o = θ·o` (quotient first, matching the coordinate order),
//! * `o ⋊ θ = (−1)^{p(d−p)} θ·o`,
//! * `ω / o` solves `o ⋊ (ω/o) = ω`, and `o \ ω` solves `(o\ω) ⋉ o = ω`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OrientationRole {
    /// Orientation `o` of the fibers.
    Fiber,
    /// Orientation `θ` of the base (the quotient `V/W`).
    Base,
    /// Orientation `ω` of the total space.
    Total,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OrientationSign {
    positive: bool,
    pub role: OrientationRole,
}

impl OrientationSign {
    pub fn new(value: i8, role: OrientationRole) -> Self {
        Self {
            positive: value >= 0,
            role,
        }
    }

    pub fn plus(role: OrientationRole) -> Self {
        Self::new(1, role)
    }

    pub fn minus(role: OrientationRole) -> Self {
        Self::new(-1, role)
    }

    pub fn value(&self) -> i8 {
        if self.positive {
            1
        } else {
            -1
        }
    }

    pub fn as_f64(&self) -> f64 {
        f64::from(self.value())
    }

    pub fn flipped(&self) -> Self {
        Self {
            positive: !self.positive,
            role: self.role,
        }
    }
}

impl std::ops::Neg for OrientationSign {
    type Output = OrientationSign;
    fn neg(self) -> Self::Output {
        self.flipped()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompositionMode {
    /// `o ⋊ θ`, arguments `(o, θ)`.
    FiberFirst,
    /// `θ ⋉ o`, arguments `(o, θ)`.
    QuotientFirst,
    /// `ω / o`, arguments `(o, ω)`.
    Over,
    /// `o \ ω`, arguments `(o, ω)`.
    Under,
}

fn swap_sign(p: usize, d: usize) -> i8 {
    if (p * (d - p)) % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Composes or divides orientations, `0 ≤ p ≤ d`.
pub fn orientation_compose(
    o: OrientationSign,
    other: OrientationSign,
    p: usize,
    d: usize,
    mode: CompositionMode,
) -> OrientationSign {
    assert!(p <= d, "subspace dimension exceeds the ambient dimension");
    let prod = o.value() * other.value();
    match mode {
        CompositionMode::QuotientFirst => OrientationSign::new(prod, OrientationRole::Total),
        CompositionMode::FiberFirst => {
            OrientationSign::new(prod * swap_sign(p, d), OrientationRole::Total)
        }
        CompositionMode::Over => OrientationSign::new(prod * swap_sign(p, d), OrientationRole::Base),
        CompositionMode::Under => OrientationSign::new(prod, OrientationRole::Base),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use CompositionMode::*;
    use OrientationRole::*;

    fn all() -> [OrientationSign; 2] {
        [OrientationSign::plus(Fiber), OrientationSign::minus(Fiber)]
    }

    #[test]
    fn swap_factor_examples() {
        let o = OrientationSign::plus(Fiber);
        let th = OrientationSign::plus(Base);
        assert_eq!(
            orientation_compose(o, th, 1, 3, FiberFirst),
            orientation_compose(o, th, 1, 3, QuotientFirst)
        );
        assert_eq!(orientation_compose(o, th, 1, 2, FiberFirst).value(), -1);
        assert_eq!(orientation_compose(o, th, 1, 2, QuotientFirst).value(), 1);
    }

    #[test]
    fn exhaustive_identities() {
        for d in 0..=3usize {
            for p in 0..=d {
                for o in all() {
                    for s in [1i8, -1] {
                        let th = OrientationSign::new(s, Base);
                        let om = OrientationSign::new(s, Total);
                        let lhs = orientation_compose(o, th, p, d, QuotientFirst).value();
                        let rhs = orientation_compose(o, th, p, d, FiberFirst).value();
                        assert_eq!(lhs, swap_sign(p, d) * rhs);
                        let over = orientation_compose(o, om, p, d, Over);
                        let under = orientation_compose(o, om, p, d, Under);
                        assert_eq!(under.value(), swap_sign(p, d) * over.value());
                        assert_eq!(orientation_compose(o, over, p, d, FiberFirst).value(), om.value());
                        assert_eq!(orientation_compose(o, under, p, d, QuotientFirst).value(), om.value());
                    }
                }
            }
        }
    }

    #[test]
    fn value_squares_to_one() {
        for o in all() {
            assert_eq!(o.value() * o.value(), 1);
            assert_eq!((-o).value(), -o.value());
        }
    }
}
