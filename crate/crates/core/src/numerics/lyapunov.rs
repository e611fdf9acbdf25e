use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use super::{asymmetry, ensure_square, symmetrize, to_complex, SYMMETRY_TOL};
use crate::error::{Error, Result};

/// Solves `Amᵀ P + P Am = -Q` for a Hurwitz `Am`.
///
/// Bartels–Stewart on the complex Schur form `Am = U T Uᴴ`: the transformed
/// unknown `X = Uᴴ P U` satisfies `Tᴴ X + X T = -Uᴴ Q U`, which is solved
/// entry by entry because `Tᴴ` is lower and `T` upper triangular.
pub fn solve_lyapunov(am: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = ensure_square(am, "Am")?;
    if ensure_square(q, "Q")? != n {
        return Err(Error::dim(format!(
            "Q is {}x{} but Am is {n}x{n}",
            q.nrows(),
            q.ncols()
        )));
    }
    let asym = asymmetry(q);
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }

    let schur = Schur::new(to_complex(am));
    let (u, t) = schur.unpack();

    for i in 0..n {
        let lambda = t[(i, i)];
        if lambda.re >= 0.0 {
            return Err(Error::NotHurwitz { eigenvalue: lambda });
        }
    }

    let c = u.adjoint() * to_complex(q) * &u;
    let mut x = DMatrix::<Complex64>::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            let mut rhs = -c[(i, j)];
            for k in 0..i {
                rhs -= t[(k, i)].conj() * x[(k, j)];
            }
            for k in 0..j {
                rhs -= x[(i, k)] * t[(k, j)];
            }
            x[(i, j)] = rhs / (t[(i, i)].conj() + t[(j, j)]);
        }
    }

    let p = (&u * x * u.adjoint()).map(|z| z.re);
    Ok(symmetrize(&p))
}
