use nalgebra::{DMatrix, DVector};

use super::PolynomialNonlinearity;
use crate::error::{Error, Result};
use crate::numerics::ensure_finite;

/// First-order plant `w' = A w + B_c u_c + B_g u_d + F_NL(w)` with physical
/// outputs `y = C_out w`.
#[derive(Debug, Clone)]
pub struct FullOrderModel {
    pub a: DMatrix<f64>,
    pub b_c: DMatrix<f64>,
    pub b_g: DMatrix<f64>,
    pub c_out: DMatrix<f64>,
    pub nonlinearity: PolynomialNonlinearity,
    pub state_labels: Vec<String>,
    pub output_labels: Vec<String>,
    /// Outputs measured in radians (reported in degrees at the CLI).
    pub output_is_angle: Vec<bool>,
}

impl FullOrderModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a: DMatrix<f64>,
        b_c: DMatrix<f64>,
        b_g: DMatrix<f64>,
        c_out: DMatrix<f64>,
        nonlinearity: PolynomialNonlinearity,
        state_labels: Vec<String>,
        output_labels: Vec<String>,
        output_is_angle: Vec<bool>,
    ) -> Result<Self> {
        let n = crate::numerics::ensure_square(&a, "A")?;
        for (name, m, rows) in [("B_c", &b_c, n), ("B_g", &b_g, n)] {
            if m.nrows() != rows {
                return Err(Error::dim(format!("{name} has {} rows, expected {rows}", m.nrows())));
            }
            ensure_finite(m, name)?;
        }
        if c_out.ncols() != n {
            return Err(Error::dim(format!("C_out has {} columns, expected {n}", c_out.ncols())));
        }
        ensure_finite(&c_out, "C_out")?;
        if nonlinearity.dim != n {
            return Err(Error::dim(format!(
                "nonlinearity acts on {} states, expected {n}",
                nonlinearity.dim
            )));
        }
        nonlinearity.validate()?;
        if state_labels.len() != n {
            return Err(Error::dim(format!("{} state labels for {n} states", state_labels.len())));
        }
        if output_labels.len() != c_out.nrows() || output_is_angle.len() != c_out.nrows() {
            return Err(Error::dim("output labels must match the rows of C_out"));
        }
        Ok(Self {
            a,
            b_c,
            b_g,
            c_out,
            nonlinearity,
            state_labels,
            output_labels,
            output_is_angle,
        })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_controls(&self) -> usize {
        self.b_c.ncols()
    }

    pub fn n_gusts(&self) -> usize {
        self.b_g.ncols()
    }

    pub fn eval_nonlinear(&self, w: &DVector<f64>) -> DVector<f64> {
        self.nonlinearity.eval(w)
    }

    /// Full residual; `nonlinear = false` drops `F_NL`.
    pub fn rhs(&self, w: &DVector<f64>, u_c: &[f64], u_d: &[f64], nonlinear: bool) -> DVector<f64> {
        let mut dw = &self.a * w;
        for (j, u) in u_c.iter().enumerate() {
            dw.axpy(*u, &self.b_c.column(j), 1.0);
        }
        for (j, g) in u_d.iter().enumerate() {
            dw.axpy(*g, &self.b_g.column(j), 1.0);
        }
        if nonlinear {
            self.nonlinearity.eval_into(w.as_slice(), dw.as_mut_slice());
        }
        dw
    }

    pub fn outputs(&self, w: &DVector<f64>) -> DVector<f64> {
        &self.c_out * w
    }
}
