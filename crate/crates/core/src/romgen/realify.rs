use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::CMatrix;

/// One diagonal block of a real modal form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModalBlock {
    pub offset: usize,
    /// 1 for a real eigenvalue, 2 for a conjugate pair.
    pub size: usize,
    /// The eigenvalue with non-negative imaginary part.
    pub eigenvalue: Complex64,
}

/// Real block-diagonal similarity form of a complex modal decomposition.
#[derive(Debug, Clone)]
pub struct RealModalForm {
    pub a: DMatrix<f64>,
    pub phi: DMatrix<f64>,
    pub psi: DMatrix<f64>,
    pub blocks: Vec<ModalBlock>,
}

/// Converts complex modal data into real form.
///
/// A pair `σ ± jω` (ω > 0) with right vector `φ` and left vector `ψ` becomes
/// columns `[Re φ, Im φ]`, rows `[2 Re ψ; -2 Im ψ]` and the block
/// `[[σ, ω], [-ω, σ]]`. Real eigenvalues keep their (real) vectors. Blocks
/// appear in input order, each pair at the position of its `+jω` member.
pub fn realify(eigenvalues: &[Complex64], phi: &CMatrix, psi: &CMatrix) -> Result<RealModalForm> {
    let k = eigenvalues.len();
    if phi.ncols() != k || psi.nrows() != k || phi.nrows() != psi.ncols() {
        return Err(Error::dim(format!(
            "{k} eigenvalues with Φ {}x{} and Ψ {}x{}",
            phi.nrows(),
            phi.ncols(),
            psi.nrows(),
            psi.ncols()
        )));
    }
    let big_n = phi.nrows();
    let mut used = vec![false; k];
    let mut blocks = Vec::new();
    let mut cols: Vec<usize> = Vec::new();
    let mut offset = 0;
    for i in 0..k {
        if used[i] {
            continue;
        }
        let z = eigenvalues[i];
        used[i] = true;
        if z.im == 0.0 {
            blocks.push(ModalBlock {
                offset,
                size: 1,
                eigenvalue: z,
            });
            cols.push(i);
            offset += 1;
            continue;
        }
        if z.im < 0.0 {
            return Err(Error::NotConjugateClosed(format!(
                "{z} appears before its conjugate"
            )));
        }
        let Some(j) = (i + 1..k).find(|&j| !used[j] && eigenvalues[j] == z.conj()) else {
            return Err(Error::NotConjugateClosed(format!("{z} has no conjugate partner")));
        };
        used[j] = true;
        blocks.push(ModalBlock {
            offset,
            size: 2,
            eigenvalue: z,
        });
        cols.push(i);
        offset += 2;
    }

    let n = offset;
    let mut a = DMatrix::zeros(n, n);
    let mut phi_r = DMatrix::zeros(big_n, n);
    let mut psi_r = DMatrix::zeros(n, big_n);
    for (b, &src) in blocks.iter().zip(&cols) {
        let o = b.offset;
        let (sigma, omega) = (b.eigenvalue.re, b.eigenvalue.im);
        if b.size == 1 {
            a[(o, o)] = sigma;
            for r in 0..big_n {
                phi_r[(r, o)] = phi[(r, src)].re;
                psi_r[(o, r)] = psi[(src, r)].re;
            }
        } else {
            a[(o, o)] = sigma;
            a[(o, o + 1)] = omega;
            a[(o + 1, o)] = -omega;
            a[(o + 1, o + 1)] = sigma;
            for r in 0..big_n {
                phi_r[(r, o)] = phi[(r, src)].re;
                phi_r[(r, o + 1)] = phi[(r, src)].im;
                psi_r[(o, r)] = 2.0 * psi[(src, r)].re;
                psi_r[(o + 1, r)] = -2.0 * psi[(src, r)].im;
            }
        }
    }
    Ok(RealModalForm {
        a,
        phi: phi_r,
        psi: psi_r,
        blocks,
    })
}
