//! Real polynomials as coefficient vectors in descending powers.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Monic polynomial with the given roots. Complex roots must come in
/// conjugate pairs for the result to be real; the imaginary residue is dropped.
pub fn poly_from_roots(roots: &[Complex64]) -> Vec<f64> {
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
        for (k, &c) in coeffs.iter().enumerate() {
            next[k] += c;
            next[k + 1] -= c * r;
        }
        coeffs = next;
    }
    coeffs.into_iter().map(|c| c.re).collect()
}

/// Characteristic polynomial det(sI - A), descending powers, leading 1.
pub fn char_poly(a: &DMatrix<f64>) -> Vec<f64> {
    poly_from_roots(&super::eigenvalues(a))
}

pub fn poly_eval(coeffs: &[f64], s: Complex64) -> Complex64 {
    coeffs
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
}
