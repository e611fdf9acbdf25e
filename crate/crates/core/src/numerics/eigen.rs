use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{ensure_square, spectral_order, to_complex, CMatrix};
use crate::error::{Error, Result};

/// Tolerances for [`eig_biorthogonal_with`]. All are relative to the largest
/// absolute entry of the input matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigOptions {
    /// Largest accepted 2-norm condition number of the right basis.
    pub max_condition: f64,
    /// Eigenvalues closer than this are treated as one repeated eigenvalue.
    pub cluster_tol: f64,
    /// Imaginary parts below this are set to zero.
    pub real_tol: f64,
    /// Largest singular value of `A - λI` accepted inside an eigenspace.
    pub null_tol: f64,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self {
            max_condition: 1e8,
            cluster_tol: 1e-9,
            real_tol: 1e-12,
            null_tol: 1e-6,
        }
    }
}

/// `A = Φ Λ Ψ` with `Ψ Φ = I`. Columns of `phi` are unit-norm right
/// eigenvectors; rows of `psi` are the matching left eigenvectors.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<Complex64>,
    pub phi: CMatrix,
    pub psi: CMatrix,
    /// 2-norm condition number of `phi`.
    pub condition: f64,
}

impl SpectralDecomposition {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `Φ Λ Ψ`, real part.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let lambda = CMatrix::from_diagonal(&DVector::from_vec(self.eigenvalues.clone()));
        (&self.phi * lambda * &self.psi).map(|z| z.re)
    }

    /// Largest entry of `|Ψ Φ - I|`.
    pub fn biorthogonality_error(&self) -> f64 {
        let n = self.len();
        (&self.psi * &self.phi - CMatrix::identity(n, n))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

pub fn eig_biorthogonal(a: &DMatrix<f64>) -> Result<SpectralDecomposition> {
    eig_biorthogonal_with(a, &EigOptions::default())
}

pub fn eig_biorthogonal_with(a: &DMatrix<f64>, opts: &EigOptions) -> Result<SpectralDecomposition> {
    let n = ensure_square(a, "A")?;
    let scale = a.amax().max(f64::MIN_POSITIVE);

    let raw = conjugate_paired(a, opts.real_tol * scale)?;
    let clusters = cluster(&raw, opts.cluster_tol * scale);

    let mut eigenvalues = Vec::with_capacity(n);
    let mut phi = CMatrix::zeros(n, n);
    let mut psi = CMatrix::zeros(n, n);
    let mut col = 0;
    for cl in &clusters {
        let m = cl.members.len();
        let lambda = cl.value;
        let (right, left) = if lambda.im < 0.0 {
            // Conjugate of the cluster already handled: reuse its bases exactly.
            let twin = clusters
                .iter()
                .position(|c| c.value == lambda.conj())
                .expect("clusters are conjugate closed");
            let start = clusters[..twin].iter().map(|c| c.members.len()).sum::<usize>();
            (
                phi.columns(start, m).map(|z| z.conj()),
                psi.rows(start, m).map(|z| z.conj()),
            )
        } else {
            eigenspace(a, lambda, m, opts.null_tol * scale)?
        };
        phi.columns_mut(col, m).copy_from(&right);
        psi.rows_mut(col, m).copy_from(&left);
        eigenvalues.extend(std::iter::repeat(lambda).take(m));
        col += m;
    }

    let condition = complex_condition(&phi);
    if !(condition <= opts.max_condition) {
        return Err(Error::DefectiveEigenbasis {
            condition,
            cluster: closest_group(&raw),
        });
    }

    // One global rescaling makes Ψ Φ = I to working precision; the blocks are
    // already near-diagonal so this only removes rounding.
    let gram = &psi * &phi;
    let psi = gram
        .lu()
        .solve(&psi)
        .ok_or_else(|| Error::DefectiveEigenbasis {
            condition: f64::INFINITY,
            cluster: closest_group(&raw),
        })?;

    Ok(SpectralDecomposition {
        eigenvalues,
        phi,
        psi,
        condition,
    })
}

struct Cluster {
    value: Complex64,
    members: Vec<Complex64>,
}

/// Eigenvalues with exact conjugate pairing, sorted by the deterministic rule.
fn conjugate_paired(a: &DMatrix<f64>, real_tol: f64) -> Result<Vec<Complex64>> {
    let raw = super::eigenvalues(a);
    let mut reals = Vec::new();
    let mut upper = Vec::new();
    let mut lower = 0usize;
    for z in raw {
        if z.im.abs() <= real_tol {
            reals.push(Complex64::new(z.re, 0.0));
        } else if z.im > 0.0 {
            upper.push(z);
        } else {
            lower += 1;
        }
    }
    if lower != upper.len() {
        return Err(Error::NotConjugateClosed(format!(
            "{} eigenvalues above the real axis, {lower} below",
            upper.len()
        )));
    }
    let mut out = reals;
    for z in upper {
        out.push(z);
        out.push(z.conj());
    }
    // Stable sort keeps index order on ties.
    out.sort_by(spectral_order);
    Ok(out)
}

/// Greedy clustering in sorted order. A conjugate cluster mirrors its twin.
fn cluster(values: &[Complex64], tol: f64) -> Vec<Cluster> {
    let mut used = vec![false; values.len()];
    let mut out = Vec::new();
    for i in 0..values.len() {
        if used[i] {
            continue;
        }
        let mut members = vec![values[i]];
        used[i] = true;
        for j in (i + 1)..values.len() {
            if !used[j] && (values[j] - values[i]).norm() <= tol {
                members.push(values[j]);
                used[j] = true;
            }
        }
        let mean = members.iter().sum::<Complex64>() / members.len() as f64;
        let value = if members.iter().all(|z| z.im == 0.0) {
            Complex64::new(mean.re, 0.0)
        } else {
            mean
        };
        out.push(Cluster { value, members });
    }
    // Make conjugate clusters exact mirrors of each other.
    for i in 0..out.len() {
        if out[i].value.im > 0.0 {
            let v = out[i].value;
            if let Some(j) = out
                .iter()
                .position(|c| c.value.im < 0.0 && (c.value - v.conj()).norm() <= tol)
            {
                out[j].value = v.conj();
            }
        }
    }
    out
}

/// Right and left bases of the eigenspace of `lambda` with multiplicity `m`.
/// Left rows are biorthogonalised against the right columns.
fn eigenspace(a: &DMatrix<f64>, lambda: Complex64, m: usize, null_tol: f64) -> Result<(CMatrix, CMatrix)> {
    let n = a.nrows();
    let shifted = to_complex(a) - CMatrix::identity(n, n) * lambda;
    let right = null_space(&shifted, m, null_tol, lambda, lambda.im == 0.0)?;
    let left_cols = null_space(&shifted.transpose(), m, null_tol, lambda, lambda.im == 0.0)?;
    let left = left_cols.transpose();
    let gram = &left * &right;
    let left = gram.lu().solve(&left).ok_or_else(|| Error::DefectiveEigenbasis {
        condition: f64::INFINITY,
        cluster: vec![lambda; m],
    })?;
    Ok((right, left))
}

/// `m` orthonormal null vectors of `s`, each with unit norm and its largest
/// component real and positive. Real shifts are handled in real arithmetic.
fn null_space(s: &CMatrix, m: usize, tol: f64, lambda: Complex64, real: bool) -> Result<CMatrix> {
    let n = s.nrows();
    let (sv, vectors): (Vec<f64>, CMatrix) = if real {
        let re = s.map(|z| z.re);
        let svd = re.svd(false, true);
        let v = svd.v_t.expect("v_t requested").transpose();
        (svd.singular_values.iter().cloned().collect(), to_complex(&v))
    } else {
        let svd = s.clone().svd(false, true);
        let v = svd.v_t.expect("v_t requested").adjoint();
        (svd.singular_values.iter().cloned().collect(), v)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sv[i].total_cmp(&sv[j]));
    if sv[order[m - 1]] > tol {
        return Err(Error::DefectiveEigenbasis {
            condition: f64::INFINITY,
            cluster: vec![lambda; m],
        });
    }
    let mut basis = CMatrix::zeros(n, m);
    // Keep the within-cluster order stable: smallest singular value first.
    for (k, &idx) in order.iter().take(m).enumerate() {
        let mut v = vectors.column(idx).into_owned();
        normalize_phase(&mut v);
        basis.set_column(k, &v);
    }
    Ok(basis)
}

fn normalize_phase(v: &mut DVector<Complex64>) {
    let norm = v.norm();
    if norm == 0.0 {
        return;
    }
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].norm() > v[best].norm() * (1.0 + 1e-12) {
            best = i;
        }
    }
    let phase = v[best] / v[best].norm();
    for z in v.iter_mut() {
        *z /= phase * norm;
    }
}

fn complex_condition(m: &CMatrix) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// The pair of eigenvalues closest to each other, for error messages.
fn closest_group(values: &[Complex64]) -> Vec<Complex64> {
    let mut best = (f64::INFINITY, 0, 0);
    for i in 0..values.len() {
        for j in (i + 1)..values.len() {
            let d = (values[i] - values[j]).norm();
            if d < best.0 {
                best = (d, i, j);
            }
        }
    }
    if values.len() < 2 {
        values.to_vec()
    } else {
        vec![values[best.1], values[best.2]]
    }
}
