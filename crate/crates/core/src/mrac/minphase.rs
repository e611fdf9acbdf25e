use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{
    char_poly, controllability_matrix, is_controllable, poly_from_roots, relative_degree, spectral_scale,
    transmission_zeros,
};

/// Zeros closer than this (relative to the spectral radius) to the imaginary
/// axis cannot be mirrored.
const AXIS_TOL: f64 = 1e-10;

/// Result of the minimum-phase correction of a SISO channel `(A, b, c)`.
///
/// The plant matrix is `A + b K0`; `c_corrected` is the output row whose
/// transfer function from `b` has every right-half-plane zero of the
/// original reflected into the left half-plane, with the poles and the
/// high-frequency gain left unchanged.
#[derive(Debug, Clone)]
pub struct MinimumPhaseCorrection {
    pub k0: DMatrix<f64>,
    pub a_modified: DMatrix<f64>,
    pub c_corrected: DMatrix<f64>,
    pub zeros_before: Vec<Complex64>,
    pub zeros_after: Vec<Complex64>,
    pub corrected: bool,
}

/// Numerator coefficients of `c (sI - A)⁻¹ b` in descending powers, padded to
/// length `n`, are `c T` with `T = [b, Ab, …] W` and `W` the upper Toeplitz
/// matrix of the characteristic polynomial of `A`.
fn numerator_map(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let coeffs = char_poly(a);
    let w = DMatrix::from_fn(n, n, |j, k| if j <= k { coeffs[k - j] } else { 0.0 });
    controllability_matrix(a, b) * w
}

/// Reflects the right-half-plane zeros of the channel `(A, b_c, c)` by
/// redefining the output row. The state-feedback gain `K0` is zero: zeros are
/// invariant under state feedback.
pub fn minimum_phase_correct(a: &DMatrix<f64>, b_c: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<MinimumPhaseCorrection> {
    let n = crate::numerics::ensure_square(a, "A")?;
    if b_c.shape() != (n, 1) || c.shape() != (1, n) {
        return Err(Error::dim(format!(
            "minimum-phase correction needs a SISO channel, got b {:?} and c {:?}",
            b_c.shape(),
            c.shape()
        )));
    }
    if !is_controllable(a, b_c)? {
        let rank = crate::numerics::controllability_rank(a, b_c)?;
        return Err(Error::Uncontrollable { rank, dim: n });
    }
    let d = DMatrix::zeros(1, 1);
    let zeros_before = transmission_zeros(a, b_c, c, &d)?;
    let rho = spectral_scale(a);
    if let Some(z) = zeros_before.iter().find(|z| z.re.abs() <= AXIS_TOL * rho) {
        return Err(Error::Degenerate(format!("zero {z} lies on the imaginary axis")));
    }
    let unchanged = |zeros_before: Vec<Complex64>| MinimumPhaseCorrection {
        k0: DMatrix::zeros(1, n),
        a_modified: a.clone(),
        c_corrected: c.clone(),
        zeros_after: zeros_before.clone(),
        zeros_before,
        corrected: false,
    };
    if zeros_before.iter().all(|z| z.re < 0.0) {
        return Ok(unchanged(zeros_before));
    }

    let r = relative_degree(a, b_c, c, &d)?[0];
    let a_hat = a / rho;
    let t = numerator_map(&a_hat, b_c);
    let current = c * &t;
    let lead = current[(0, r - 1)];
    let mirrored: Vec<Complex64> = zeros_before
        .iter()
        .map(|z| if z.re > 0.0 { Complex64::new(-z.re, z.im) } else { *z })
        .collect();
    let scaled: Vec<Complex64> = mirrored.iter().map(|z| z / rho).collect();
    let poly = poly_from_roots(&scaled);
    let mut target = DMatrix::zeros(1, n);
    for (k, p) in poly.iter().enumerate() {
        target[(0, r - 1 + k)] = lead * p;
    }
    let c_corrected = t
        .transpose()
        .lu()
        .solve(&target.transpose())
        .ok_or_else(|| Error::Degenerate("numerator map is singular".into()))?
        .transpose();
    let zeros_after = transmission_zeros(a, b_c, &c_corrected, &d)?;
    Ok(MinimumPhaseCorrection {
        k0: DMatrix::zeros(1, n),
        a_modified: a.clone(),
        c_corrected,
        zeros_before,
        zeros_after,
        corrected: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn response(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, w: f64) -> Complex64 {
        let n = a.nrows();
        let m = DMatrix::<Complex64>::identity(n, n) * Complex64::new(0.0, w) - crate::numerics::to_complex(a);
        let x = m.lu().solve(&crate::numerics::to_complex(b)).unwrap();
        (crate::numerics::to_complex(c) * x)[(0, 0)]
    }

    // (s - 1) / ((s + 1)(s + 2)(s + 3)) in companion form.
    fn zero_at_plus_one() -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let a = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, -6.0, -11.0, -6.0]);
        let b = DMatrix::from_column_slice(3, 1, &[0.0, 0.0, 1.0]);
        let c = DMatrix::from_row_slice(1, 3, &[-1.0, 1.0, 0.0]);
        (a, b, c)
    }

    #[test]
    fn reflects_zero_at_plus_one() {
        let (a, b, c) = zero_at_plus_one();
        let m = minimum_phase_correct(&a, &b, &c).unwrap();
        assert!(m.corrected);
        assert_eq!(m.zeros_before.len(), 1);
        assert!((m.zeros_before[0].re - 1.0).abs() < 1e-10);
        assert!((m.zeros_after[0].re + 1.0).abs() < 1e-10);
        // companion form: numerator (s + 1) reads off directly.
        assert!((m.c_corrected[(0, 0)] - 1.0).abs() < 1e-12 && (m.c_corrected[(0, 1)] - 1.0).abs() < 1e-12);
        assert!(m.k0.iter().all(|&k| k == 0.0));
        assert_eq!(m.a_modified, a);
    }

    #[test]
    fn two_state_plant_with_zero_at_plus_one() {
        // (s - 1) / (s² + 0.4 s + 2), non-companion realization
        let a = DMatrix::from_row_slice(2, 2, &[-0.2, 1.0, -1.96, -0.2]);
        let b = DMatrix::from_column_slice(2, 1, &[1.0, 0.5]);
        let t = numerator_map(&a, &b);
        let c = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]) * t.clone().try_inverse().unwrap();
        let m = minimum_phase_correct(&a, &b, &c).unwrap();
        assert!(m.corrected);
        assert!((m.zeros_before[0].re - 1.0).abs() < 1e-10);
        assert!(m.zeros_after.iter().all(|z| z.re < 0.0));
        let num = &m.c_corrected * t;
        assert!((num[(0, 0)] - 1.0).abs() < 1e-12 && (num[(0, 1)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn corrected_plant_admits_ideal_gains() {
        let (a, b, c) = zero_at_plus_one();
        let m = minimum_phase_correct(&a, &b, &c).unwrap();
        let poles = [Complex64::new(-2.0, 0.0), Complex64::new(-3.0, 1.0), Complex64::new(-3.0, -1.0)];
        let r = crate::mrac::matched_reference_model(&m.a_modified, &b, &poles).unwrap();
        let g = crate::mrac::ideal_gains(&m.a_modified, &b, &m.k0, &r).unwrap();
        assert!(g.exact, "{}", g.residual);
    }

    #[test]
    fn magnitude_response_is_preserved() {
        let (a, b, c) = zero_at_plus_one();
        let m = minimum_phase_correct(&a, &b, &c).unwrap();
        for w in [0.01, 0.3, 1.0, 7.0, 100.0] {
            let g0 = response(&a, &b, &c, w).norm();
            let g1 = response(&a, &b, &m.c_corrected, w).norm();
            assert!((g0 - g1).abs() <= 1e-12 * g0.max(1e-300), "{w}: {g0} vs {g1}");
        }
    }

    #[test]
    fn minimum_phase_channel_is_unchanged() {
        let (a, b, _) = zero_at_plus_one();
        let c = DMatrix::from_row_slice(1, 3, &[2.0, 1.0, 0.0]);
        let m = minimum_phase_correct(&a, &b, &c).unwrap();
        assert!(!m.corrected);
        assert_eq!(m.c_corrected, c);
    }

    #[test]
    fn mimo_is_rejected() {
        let (a, _, c) = zero_at_plus_one();
        let b = DMatrix::identity(3, 2);
        assert!(matches!(minimum_phase_correct(&a, &b, &c), Err(Error::Dimension(_))));
    }

    #[test]
    fn zero_on_axis_is_reported() {
        let (a, b, _) = zero_at_plus_one();
        let c = DMatrix::from_row_slice(1, 3, &[0.0, 1.0, 0.0]);
        assert!(matches!(minimum_phase_correct(&a, &b, &c), Err(Error::Degenerate(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn random_channels_become_minimum_phase(seed in any::<u64>(), n in 2usize..7) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0)) - DMatrix::identity(n, n) * 1.5;
            let b = DMatrix::from_fn(n, 1, |_, _| rng.random_range(-1.0..1.0));
            let c = DMatrix::from_fn(1, n, |_, _| rng.random_range(-1.0..1.0));
            let Ok(m) = minimum_phase_correct(&a, &b, &c) else { return Ok(()); };
            for z in &m.zeros_after {
                prop_assert!(z.re < 0.0, "{z}");
            }
            prop_assert_eq!(m.zeros_after.len(), m.zeros_before.len());
            for w in [0.1, 1.0, 10.0] {
                let g0 = response(&a, &b, &c, w).norm();
                let g1 = response(&a, &b, &m.c_corrected, w).norm();
                prop_assert!((g0 - g1).abs() <= 1e-6 * g0.max(1e-12));
            }
        }
    }
}
