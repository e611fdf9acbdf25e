//! Dense small-matrix kernels: Lyapunov solves, biorthogonal eigenbases,
//! invariant zeros and Bass–Gura pole placement.
//!
//! Complex arithmetic stays inside this module and `romgen::realify`; every
//! matrix handed to the control code is real.

mod eigen;
mod lyapunov;
mod placement;
mod poly;
mod zeros;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub use eigen::{eig_biorthogonal, eig_biorthogonal_with, EigOptions, SpectralDecomposition};
pub use lyapunov::solve_lyapunov;
pub use placement::{bass_gura_place, controllability_rank, is_controllable};
pub(crate) use placement::{controllability_matrix, spectral_scale};
pub use poly::{char_poly, poly_eval, poly_from_roots};
pub use zeros::{relative_degree, transmission_zeros};

pub type CMatrix = DMatrix<Complex64>;

/// Symmetry tolerance used when a routine requires a symmetric input.
pub const SYMMETRY_TOL: f64 = 1e-12;

pub(crate) fn ensure_square(m: &DMatrix<f64>, name: &str) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::dim(format!(
            "{name} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() == 0 {
        return Err(Error::dim(format!("{name} must have dimension >= 1")));
    }
    ensure_finite(m, name)?;
    Ok(m.nrows())
}

pub(crate) fn ensure_finite(m: &DMatrix<f64>, name: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(name.to_string()))
    }
}

/// Largest absolute entry of `M - M^T`, scaled by `max(1, max|M|)`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let scale = m.amax().max(1.0);
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst / scale
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Induced 2-norm.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Ratio of extreme singular values; `inf` for a singular matrix.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

pub fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    m.nrows() == m.ncols() && asymmetry(m) <= 1e-10 && symmetrize(m).cholesky().is_some()
}

/// Eigenvalues of a real square matrix (unordered).
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex64> {
    m.complex_eigenvalues().iter().cloned().collect()
}

/// Spectral abscissa: the largest real part over the spectrum.
pub fn spectral_abscissa(m: &DMatrix<f64>) -> f64 {
    eigenvalues(m)
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Moore–Penrose pseudo-inverse with a relative singular-value cutoff.
pub fn pseudo_inverse(m: &DMatrix<f64>, rcond: f64) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = rcond * smax;
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let mut out = DMatrix::zeros(m.ncols(), m.nrows());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            out += v_t.row(k).transpose() * u.column(k).transpose() / s;
        }
    }
    out
}

/// Numerical rank with a relative singular-value cutoff.
pub fn rank(m: &DMatrix<f64>, rtol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rtol * smax).count()
}

pub(crate) fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|v| Complex64::new(v, 0.0))
}

/// Deterministic eigenvalue ordering: |Im| ascending, then Re descending,
/// positive imaginary part before its conjugate.
pub(crate) fn spectral_order(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    a.im.abs()
        .total_cmp(&b.im.abs())
        .then(b.re.total_cmp(&a.re))
        .then(b.im.total_cmp(&a.im))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pseudo_inverse_of_tall_matrix_is_left_inverse() {
        let b = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 2.0]);
        let pinv = pseudo_inverse(&b, 1e-12);
        assert!(((&pinv * &b)[(0, 0)] - 1.0).abs() < 1e-14);
        assert!((pinv[(0, 1)] - 2.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn spectral_order_puts_reals_first_and_positive_imag_before_conjugate() {
        let mut v = vec![
            Complex64::new(-0.1, -2.0),
            Complex64::new(-3.0, 0.0),
            Complex64::new(-0.1, 2.0),
            Complex64::new(-1.0, 0.0),
        ];
        v.sort_by(spectral_order);
        assert_eq!(v[0], Complex64::new(-1.0, 0.0));
        assert_eq!(v[1], Complex64::new(-3.0, 0.0));
        assert_eq!(v[2], Complex64::new(-0.1, 2.0));
        assert_eq!(v[3], Complex64::new(-0.1, -2.0));
    }

    #[test]
    fn asymmetry_detects_skew_part() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0 + 1e-6, 1.0]);
        assert!(asymmetry(&m) > 1e-7);
        assert_eq!(asymmetry(&symmetrize(&m)), 0.0);
    }
}
