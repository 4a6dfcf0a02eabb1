//! Closed-form expressions in the chart coordinates `x, t, y`.

use std::sync::Arc;

use charentropy::{Error, Result, ScalarField};
use exmex::prelude::*;

/// A parsed expression; unknown variables are rejected at parse time.
#[derive(Clone)]
pub struct Expr {
    flat: Arc<exmex::FlatEx<f64>>,
    slots: Vec<usize>,
}

impl Expr {
    pub fn parse(text: &str, allowed: &[&str]) -> Result<Self> {
        let flat = exmex::parse::<f64>(text).map_err(|e| Error::Parse(format!("expression '{text}': {e}")))?;
        let mut slots = Vec::new();
        for name in flat.var_names() {
            match allowed.iter().position(|a| a == name) {
                Some(k) => slots.push(k),
                None => {
                    return Err(Error::Parse(format!(
                        "expression '{text}' uses '{name}', expected variables among {allowed:?}"
                    )))
                }
            }
        }
        Ok(Self {
            flat: Arc::new(flat),
            slots,
        })
    }

    pub fn eval(&self, vars: &[f64]) -> f64 {
        let vals: Vec<f64> = self.slots.iter().map(|&k| vars[k]).collect();
        self.flat.eval(&vals).unwrap_or(f64::NAN)
    }

    pub fn scalar3(&self) -> ScalarField<3> {
        let e = self.clone();
        ScalarField::new(move |p| e.eval(p))
    }

    pub fn scalar2(&self) -> ScalarField<2> {
        let e = self.clone();
        ScalarField::new(move |p| e.eval(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variables_map_to_their_slots() {
        let e = Expr::parse("y*exp(x) - t/2", &["x", "t", "y"]).unwrap();
        assert!((e.eval(&[0.0, 1.0, 3.0]) - 2.5).abs() < 1e-15);
        assert!(Expr::parse("z + 1", &["x", "t"]).is_err());
        assert!(Expr::parse("sin(", &["x"]).is_err());
    }
}
