use serde::{Deserialize, Serialize};

/// One monomial `coef · x^a t^b y^c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coef: f64,
    pub powers: [u32; 3],
}

/// A polynomial in the total-space coordinates `(x, t, y)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Poly3 {
    pub terms: Vec<Term>,
}

impl Poly3 {
    pub fn new(terms: impl IntoIterator<Item = (f64, [u32; 3])>) -> Self {
        Self {
            terms: terms
                .into_iter()
                .filter(|(c, _)| *c != 0.0)
                .map(|(coef, powers)| Term { coef, powers })
                .collect(),
        }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn eval(&self, p: &[f64; 3]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.coef
                    * p[0].powi(t.powers[0] as i32)
                    * p[1].powi(t.powers[1] as i32)
                    * p[2].powi(t.powers[2] as i32)
            })
            .sum()
    }

    pub fn derivative(&self, k: usize) -> Poly3 {
        Poly3 {
            terms: self
                .terms
                .iter()
                .filter(|t| t.powers[k] > 0)
                .map(|t| {
                    let mut powers = t.powers;
                    powers[k] -= 1;
                    Term {
                        coef: t.coef * f64::from(t.powers[k]),
                        powers,
                    }
                })
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coef == 0.0)
    }
}
