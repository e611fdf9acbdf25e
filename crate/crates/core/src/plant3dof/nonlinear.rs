use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One monomial `coeff · w[i₀] · w[i₁] (· w[i₂])` added to `row`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub row: usize,
    pub coeff: f64,
    pub factors: Vec<usize>,
}

/// Sparse quadratic plus cubic residual `F_NL(w) = F₂(w, w) + F₃(w, w, w)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PolynomialNonlinearity {
    pub dim: usize,
    pub quadratic: Vec<Monomial>,
    pub cubic: Vec<Monomial>,
}

impl PolynomialNonlinearity {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            quadratic: Vec::new(),
            cubic: Vec::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.quadratic.iter().chain(&self.cubic).all(|m| m.coeff == 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        for (degree, terms, field) in [(2, &self.quadratic, "quadratic"), (3, &self.cubic, "cubic")] {
            for (k, m) in terms.iter().enumerate() {
                let path = format!("nonlinearity.{field}[{k}]");
                if m.factors.len() != degree {
                    return Err(Error::schema(
                        format!("{path}.factors"),
                        format!("expected {degree} factors, got {}", m.factors.len()),
                    ));
                }
                if m.row >= self.dim || m.factors.iter().any(|&i| i >= self.dim) {
                    return Err(Error::schema(path, format!("index out of range for dimension {}", self.dim)));
                }
                if !m.coeff.is_finite() {
                    return Err(Error::schema(format!("{path}.coeff"), "non-finite coefficient"));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, w: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim);
        self.eval_into(w.as_slice(), out.as_mut_slice());
        out
    }

    /// Adds `F_NL(w)` to `out`.
    pub fn eval_into(&self, w: &[f64], out: &mut [f64]) {
        for m in self.quadratic.iter().chain(&self.cubic) {
            out[m.row] += m.factors.iter().fold(m.coeff, |acc, &i| acc * w[i]);
        }
    }

    /// Jacobian `∂F_NL/∂w` at `w`.
    pub fn jacobian(&self, w: &DVector<f64>) -> nalgebra::DMatrix<f64> {
        let mut j = nalgebra::DMatrix::zeros(self.dim, self.dim);
        for m in self.quadratic.iter().chain(&self.cubic) {
            for (k, &i) in m.factors.iter().enumerate() {
                let rest = m
                    .factors
                    .iter()
                    .enumerate()
                    .filter(|&(l, _)| l != k)
                    .fold(m.coeff, |acc, (_, &f)| acc * w[f]);
                j[(m.row, i)] += rest;
            }
        }
        j
    }
}
