use nalgebra::{DMatrix, RowDVector};

use super::{ensure_square, poly_from_roots, rank};
use crate::error::{Error, Result};

const CONTROLLABILITY_RTOL: f64 = 1e-10;

/// Krylov matrix `[b, Ab, …, A^{n-1}b]`.
pub(crate) fn controllability_matrix(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let m = b.ncols();
    let mut c = DMatrix::zeros(n, n * m);
    let mut block = b.clone();
    for k in 0..n {
        c.columns_mut(k * m, m).copy_from(&block);
        block = a * block;
    }
    c
}

pub(crate) fn spectral_scale(a: &DMatrix<f64>) -> f64 {
    let rho = super::eigenvalues(a)
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if rho > 0.0 {
        rho
    } else {
        a.amax().max(1.0)
    }
}

/// Rank of the controllability matrix of `(A/ρ, B)`, ρ the spectral radius,
/// with a relative singular-value cutoff of 1e-10.
pub fn controllability_rank(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<usize> {
    let n = ensure_square(a, "A")?;
    if b.nrows() != n {
        return Err(Error::dim(format!("B has {} rows, A is {n}x{n}", b.nrows())));
    }
    let scaled = a / spectral_scale(a);
    Ok(rank(&controllability_matrix(&scaled, b), CONTROLLABILITY_RTOL))
}

pub fn is_controllable(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<bool> {
    Ok(controllability_rank(a, b)? == a.nrows())
}

/// Bass–Gura gain `K` such that `det(sI - (A - bK))` equals `desired_poly`.
///
/// `desired_poly` holds `[1, α₁, …, αₙ]` in descending powers; a non-monic
/// leading coefficient is divided out. For `A` in controllable companion form
/// with `b = eₙ` the result is `[αₙ - aₙ, …, α₁ - a₁]`, where `aₖ` are the
/// coefficients of the open-loop characteristic polynomial.
pub fn bass_gura_place(a: &DMatrix<f64>, b: &DMatrix<f64>, desired_poly: &[f64]) -> Result<RowDVector<f64>> {
    let n = ensure_square(a, "A")?;
    if b.nrows() != n || b.ncols() != 1 {
        return Err(Error::dim(format!(
            "b must be {n}x1, got {}x{}",
            b.nrows(),
            b.ncols()
        )));
    }
    if desired_poly.len() != n + 1 {
        return Err(Error::dim(format!(
            "desired polynomial needs {} coefficients, got {}",
            n + 1,
            desired_poly.len()
        )));
    }
    let lead = desired_poly[0];
    if lead == 0.0 || !desired_poly.iter().all(|c| c.is_finite()) {
        return Err(Error::InvalidParameter(
            "desired polynomial must have a finite, nonzero leading coefficient".into(),
        ));
    }

    // Work on A/ρ so the Krylov columns stay comparable in size.
    let rho = spectral_scale(a);
    let a_hat = a / rho;
    let ctrb = controllability_matrix(&a_hat, b);
    let r = rank(&ctrb, CONTROLLABILITY_RTOL);
    if r < n {
        return Err(Error::Uncontrollable { rank: r, dim: n });
    }

    let open = poly_from_roots(&super::eigenvalues(&a_hat));
    let alpha: Vec<f64> = desired_poly
        .iter()
        .enumerate()
        .map(|(k, c)| c / lead / rho.powi(k as i32))
        .collect();

    let coeff = |k: isize| -> f64 {
        if k < 0 {
            0.0
        } else {
            open[k as usize]
        }
    };
    let w = DMatrix::from_fn(n, n, |i, j| coeff(n as isize - 1 - i as isize - j as isize));
    let diff = RowDVector::from_fn(n, |_, j| alpha[n - j] - open[n - j]);

    let t = ctrb * w;
    let t_inv = t
        .try_inverse()
        .ok_or(Error::Uncontrollable { rank: n - 1, dim: n })?;
    Ok(diff * t_inv * rho)
}
