//! Nonlinear reduced-order models by biorthogonal modal projection.

mod realify;
mod validate;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{eig_biorthogonal, CMatrix, SpectralDecomposition};
use crate::plant3dof::{FullOrderModel, PolynomialNonlinearity};

pub use realify::{realify, ModalBlock, RealModalForm};
pub use validate::{validate_rom, RomValidation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeKind {
    Oscillatory,
    RealGust,
}

/// How many states the ROM keeps and how many of them are real modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeCriteria {
    pub n_states: usize,
    pub real_states: usize,
}

impl Default for ModeCriteria {
    fn default() -> Self {
        Self {
            n_states: 8,
            real_states: 2,
        }
    }
}

impl ModeCriteria {
    /// Keeps every mode of `decomp`.
    pub fn all(decomp: &SpectralDecomposition) -> Self {
        Self {
            n_states: decomp.len(),
            real_states: decomp.eigenvalues.iter().filter(|z| z.im == 0.0).count(),
        }
    }
}

/// A group of modes that is selected or dropped as a whole: a cluster of
/// equal real eigenvalues, or a complex cluster with its conjugate.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeUnit {
    pub indices: Vec<usize>,
    pub eigenvalue: Complex64,
    pub kind: ModeKind,
    /// Frobenius norm of the left-eigenvector rows times `B_g`.
    pub gust_participation: f64,
    pub control_participation: f64,
}

impl ModeUnit {
    pub fn frequency(&self) -> f64 {
        self.eigenvalue.im.abs()
    }
}

fn participation(psi: &CMatrix, rows: &[usize], b: &DMatrix<f64>) -> f64 {
    let mut sum = 0.0;
    for &r in rows {
        for c in 0..b.ncols() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..b.nrows() {
                acc += psi[(r, k)] * b[(k, c)];
            }
            sum += acc.norm_sqr();
        }
    }
    sum.sqrt()
}

/// Groups the decomposition into selectable units, in decomposition order.
pub fn mode_units(decomp: &SpectralDecomposition, b_g: &DMatrix<f64>, b_c: &DMatrix<f64>) -> Result<Vec<ModeUnit>> {
    let ev = &decomp.eigenvalues;
    let mut used = vec![false; ev.len()];
    let mut units = Vec::new();
    for i in 0..ev.len() {
        if used[i] {
            continue;
        }
        let z = ev[i];
        let mut indices: Vec<usize> = (i..ev.len()).filter(|&j| !used[j] && ev[j] == z).collect();
        let kind = if z.im == 0.0 {
            ModeKind::RealGust
        } else {
            if z.im < 0.0 {
                return Err(Error::NotConjugateClosed(format!("{z} precedes its conjugate")));
            }
            let twins: Vec<usize> = (i..ev.len()).filter(|&j| !used[j] && ev[j] == z.conj()).collect();
            if twins.len() != indices.len() {
                return Err(Error::NotConjugateClosed(format!("{z} has unmatched conjugates")));
            }
            indices.extend(twins);
            ModeKind::Oscillatory
        };
        for &j in &indices {
            used[j] = true;
        }
        units.push(ModeUnit {
            gust_participation: participation(&decomp.psi, &indices, b_g),
            control_participation: participation(&decomp.psi, &indices, b_c),
            indices,
            eigenvalue: z,
            kind,
        });
    }
    Ok(units)
}

/// Units ordered by gust participation, then control participation, then
/// decomposition order.
pub fn rank_by_participation(units: &[ModeUnit]) -> Vec<ModeUnit> {
    let mut out = units.to_vec();
    out.sort_by(|a, b| {
        b.gust_participation
            .total_cmp(&a.gust_participation)
            .then(b.control_participation.total_cmp(&a.control_participation))
    });
    out
}

/// Picks `criteria.real_states` real modes by gust participation and fills
/// the rest with the lowest-frequency oscillatory modes. Returns
/// decomposition indices in ROM order: real modes first, then pairs by
/// increasing frequency.
pub fn select_modes(
    decomp: &SpectralDecomposition,
    b_g: &DMatrix<f64>,
    b_c: &DMatrix<f64>,
    criteria: &ModeCriteria,
) -> Result<Vec<usize>> {
    let big_n = decomp.len();
    if criteria.n_states > big_n {
        return Err(Error::ModeSelection(format!(
            "requested {} states from a {big_n}-state model",
            criteria.n_states
        )));
    }
    if criteria.real_states > criteria.n_states {
        return Err(Error::ModeSelection(format!(
            "{} real states exceed the ROM size {}",
            criteria.real_states, criteria.n_states
        )));
    }
    let units = mode_units(decomp, b_g, b_c)?;

    let take = |candidates: Vec<ModeUnit>, budget: usize| -> (Vec<ModeUnit>, usize) {
        let mut chosen = Vec::new();
        let mut count = 0;
        for u in candidates {
            if count + u.indices.len() <= budget {
                count += u.indices.len();
                chosen.push(u);
            }
        }
        (chosen, count)
    };

    let reals: Vec<ModeUnit> = units.iter().filter(|u| u.kind == ModeKind::RealGust).cloned().collect();
    let (mut real_pick, real_count) = take(rank_by_participation(&reals), criteria.real_states);
    if real_count != criteria.real_states {
        return Err(Error::ModeSelection(format!(
            "cannot pick exactly {} real states from clusters of sizes {:?}",
            criteria.real_states,
            reals.iter().map(|u| u.indices.len()).collect::<Vec<_>>()
        )));
    }
    real_pick.sort_by_key(|u| u.indices[0]);

    let mut osc: Vec<ModeUnit> = units.iter().filter(|u| u.kind == ModeKind::Oscillatory).cloned().collect();
    osc.sort_by(|a, b| a.frequency().total_cmp(&b.frequency()).then(b.eigenvalue.re.total_cmp(&a.eigenvalue.re)));
    let budget = criteria.n_states - criteria.real_states;
    let (osc_pick, osc_count) = take(osc, budget);
    if osc_count != budget {
        return Err(Error::ModeSelection(format!(
            "cannot fill {budget} oscillatory states with conjugate pairs (got {osc_count})"
        )));
    }

    Ok(real_pick.iter().chain(&osc_pick).flat_map(|u| u.indices.clone()).collect())
}

/// Metadata for one diagonal block of the ROM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeInfo {
    pub offset: usize,
    pub size: usize,
    pub eigenvalue_re: f64,
    pub eigenvalue_im: f64,
    pub frequency: f64,
    pub damping_ratio: f64,
    pub kind: ModeKind,
    pub gust_participation: f64,
}

impl ModeInfo {
    pub fn eigenvalue(&self) -> Complex64 {
        Complex64::new(self.eigenvalue_re, self.eigenvalue_im)
    }
}

/// `x' = A x + B_c u_c + B_g u_d + Ψ F_NL(Φ x)`, `y = C_out x`.
#[derive(Debug, Clone)]
pub struct ReducedOrderModel {
    pub a: DMatrix<f64>,
    pub b_c: DMatrix<f64>,
    pub b_g: DMatrix<f64>,
    pub c_out: DMatrix<f64>,
    pub phi: DMatrix<f64>,
    pub psi: DMatrix<f64>,
    pub modes: Vec<ModeInfo>,
    pub nonlinearity: PolynomialNonlinearity,
    pub output_labels: Vec<String>,
    pub output_is_angle: Vec<bool>,
    /// SHA-256 of the parameter file the FOM came from, when known.
    pub source_hash: Option<String>,
    lift: Lift,
}

/// Sparse lift-evaluate-project plan: only the full-order coordinates the
/// polynomial reads are reconstructed, and only the rows it writes are
/// projected back.
#[derive(Debug, Clone, Default)]
struct Lift {
    inputs: Vec<usize>,
    outputs: Vec<usize>,
}

impl Lift {
    fn new(f: &PolynomialNonlinearity) -> Self {
        let mut inputs: Vec<usize> = f.quadratic.iter().chain(&f.cubic).flat_map(|m| m.factors.clone()).collect();
        inputs.sort_unstable();
        inputs.dedup();
        let mut outputs: Vec<usize> = f.quadratic.iter().chain(&f.cubic).map(|m| m.row).collect();
        outputs.sort_unstable();
        outputs.dedup();
        Self { inputs, outputs }
    }
}

impl ReducedOrderModel {
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        a: DMatrix<f64>,
        b_c: DMatrix<f64>,
        b_g: DMatrix<f64>,
        c_out: DMatrix<f64>,
        phi: DMatrix<f64>,
        psi: DMatrix<f64>,
        modes: Vec<ModeInfo>,
        nonlinearity: PolynomialNonlinearity,
        output_labels: Vec<String>,
        output_is_angle: Vec<bool>,
        source_hash: Option<String>,
    ) -> Result<Self> {
        let n = crate::numerics::ensure_square(&a, "A")?;
        let big_n = phi.nrows();
        let checks = [
            ("b_c", b_c.nrows() == n),
            ("b_g", b_g.nrows() == n),
            ("c_out", c_out.ncols() == n),
            ("phi", phi.ncols() == n),
            ("psi", psi.nrows() == n && psi.ncols() == big_n),
            ("nonlinearity", nonlinearity.dim == big_n),
            ("output_labels", output_labels.len() == c_out.nrows() && output_is_angle.len() == c_out.nrows()),
            ("modes", modes.iter().map(|m| m.size).sum::<usize>() == n),
        ];
        for (name, ok) in checks {
            if !ok {
                return Err(Error::dim(format!("inconsistent ROM field `{name}` for n = {n}, N = {big_n}")));
            }
        }
        for (name, m) in [("a", &a), ("b_c", &b_c), ("b_g", &b_g), ("c_out", &c_out), ("phi", &phi), ("psi", &psi)] {
            crate::numerics::ensure_finite(m, name)?;
        }
        nonlinearity.validate()?;
        let lift = Lift::new(&nonlinearity);
        Ok(Self {
            a,
            b_c,
            b_g,
            c_out,
            phi,
            psi,
            modes,
            nonlinearity,
            output_labels,
            output_is_angle,
            source_hash,
            lift,
        })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn full_dim(&self) -> usize {
        self.phi.nrows()
    }

    /// Adds `Ψ F_NL(Φ x)` to `out`.
    pub fn add_f_nr(&self, x: &[f64], out: &mut [f64]) {
        if self.lift.outputs.is_empty() {
            return;
        }
        let big_n = self.full_dim();
        let mut w = vec![0.0; big_n];
        for &i in &self.lift.inputs {
            w[i] = self.phi.row(i).iter().zip(x).map(|(p, v)| p * v).sum();
        }
        let mut f = vec![0.0; big_n];
        self.nonlinearity.eval_into(&w, &mut f);
        for &r in &self.lift.outputs {
            let fr = f[r];
            if fr != 0.0 {
                for (k, o) in out.iter_mut().enumerate() {
                    *o += self.psi[(k, r)] * fr;
                }
            }
        }
    }

    /// Reconstructed full-order state `Φ x`.
    pub fn lift(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.phi * x
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        let mut out = Vec::new();
        for m in &self.modes {
            let z = m.eigenvalue();
            out.push(z);
            if m.size == 2 {
                out.push(z.conj());
            }
        }
        out
    }
}

/// `F_NR(x) = Ψ F_NL(Φ x)`.
pub fn eval_f_nr(rom: &ReducedOrderModel, x: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(rom.dim());
    rom.add_f_nr(x.as_slice(), out.as_mut_slice());
    out
}

/// Projects `fom` onto the modes `modes` of `decomp` (indices into the
/// decomposition, closed under conjugation).
pub fn build_nrom(fom: &FullOrderModel, decomp: &SpectralDecomposition, modes: &[usize]) -> Result<ReducedOrderModel> {
    if decomp.len() != fom.dim() {
        return Err(Error::dim("decomposition does not belong to this model"));
    }
    if modes.is_empty() {
        return Err(Error::ModeSelection("no modes selected".into()));
    }
    let ev: Vec<Complex64> = modes.iter().map(|&i| decomp.eigenvalues[i]).collect();
    let phi = decomp.phi.select_columns(modes);
    let psi = decomp.psi.select_rows(modes);
    let real = realify(&ev, &phi, &psi)?;

    let b_c = &real.psi * &fom.b_c;
    let b_g = &real.psi * &fom.b_g;
    let c_out = &fom.c_out * &real.phi;
    let infos = real
        .blocks
        .iter()
        .map(|b| {
            let z = b.eigenvalue;
            let rows = b.offset..b.offset + b.size;
            let gust = b_g.rows(rows.start, rows.len()).norm();
            ModeInfo {
                offset: b.offset,
                size: b.size,
                eigenvalue_re: z.re,
                eigenvalue_im: z.im,
                frequency: z.im,
                damping_ratio: if z.norm() > 0.0 { -z.re / z.norm() } else { 0.0 },
                kind: if b.size == 2 { ModeKind::Oscillatory } else { ModeKind::RealGust },
                gust_participation: gust,
            }
        })
        .collect();

    ReducedOrderModel::from_parts(
        real.a,
        b_c,
        b_g,
        c_out,
        real.phi,
        real.psi,
        infos,
        fom.nonlinearity.clone(),
        fom.output_labels.clone(),
        fom.output_is_angle.clone(),
        None,
    )
}

/// Decomposes, selects and projects in one call.
pub fn reduce(fom: &FullOrderModel, criteria: &ModeCriteria) -> Result<ReducedOrderModel> {
    let decomp = eig_biorthogonal(&fom.a)?;
    let modes = select_modes(&decomp, &fom.b_g, &fom.b_c, criteria)?;
    build_nrom(fom, &decomp, &modes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::eigenvalues;
    use crate::plant3dof::{assemble_fom, AerofoilParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fom() -> FullOrderModel {
        assemble_fom(&AerofoilParams::default_section()).unwrap()
    }

    fn contains(hay: &[Complex64], z: Complex64, tol: f64) -> bool {
        hay.iter().any(|h| (h - z).norm() <= tol)
    }

    #[test]
    fn default_rom_keeps_three_pairs_and_kussner_modes() {
        let rom = reduce(&fom(), &ModeCriteria::default()).unwrap();
        assert_eq!(rom.dim(), 8);
        let reals: Vec<&ModeInfo> = rom.modes.iter().filter(|m| m.kind == ModeKind::RealGust).collect();
        assert_eq!(reals.len(), 2);
        for m in reals {
            assert!((m.eigenvalue_re + 0.1393).abs() < 1e-6);
        }
        assert_eq!(rom.modes.iter().filter(|m| m.kind == ModeKind::Oscillatory).count(), 3);
        // Real modes lead, pairs follow by increasing frequency.
        assert_eq!(rom.modes[0].size, 1);
        assert_eq!(rom.modes[1].size, 1);
        assert!(rom.modes[2].frequency < rom.modes[3].frequency && rom.modes[3].frequency < rom.modes[4].frequency);
    }

    #[test]
    fn rom_spectrum_is_a_subset_of_fom_spectrum() {
        let f = fom();
        let full = eigenvalues(&f.a);
        for (n, real) in [(2, 2), (4, 2), (6, 2), (8, 2), (10, 4), (12, 6), (14, 8)] {
            let crit = ModeCriteria { n_states: n, real_states: real };
            let rom = reduce(&f, &crit).unwrap();
            for z in eigenvalues(&rom.a) {
                assert!(contains(&full, z, 1e-8), "n = {n}: {z}");
            }
        }
    }

    #[test]
    fn projection_identities() {
        let f = fom();
        let rom = reduce(&f, &ModeCriteria::default()).unwrap();
        let n = rom.dim();
        assert!((&rom.psi * &rom.phi - DMatrix::identity(n, n)).amax() < 1e-10);
        assert!((&rom.psi * &f.a * &rom.phi - &rom.a).amax() < 1e-9);
        assert!((&rom.psi * &f.b_g - &rom.b_g).amax() == 0.0);
        let w = DVector::from_fn(14, |i, _| (i as f64 * 0.37).sin());
        let x = &rom.psi * &w;
        let lhs = &rom.c_out * &x;
        let rhs = &f.c_out * (&rom.phi * (&rom.psi * &w));
        assert!((lhs - rhs).amax() < 1e-12);
    }

    #[test]
    fn full_selection_is_exact_change_of_basis() {
        let f = fom();
        let d = eig_biorthogonal(&f.a).unwrap();
        let rom = reduce(&f, &ModeCriteria::all(&d)).unwrap();
        assert!((&rom.phi * &rom.a * &rom.psi - &f.a).amax() < 1e-9);
        let x = DVector::from_fn(14, |i, _| 0.1 * (i as f64 - 7.0));
        let got = eval_f_nr(&rom, &x);
        let want = &rom.psi * f.eval_nonlinear(&(&rom.phi * &x));
        assert!((got - want).amax() < 1e-14);
    }

    #[test]
    fn f_nr_matches_dense_cubic_tensor() {
        let f = fom();
        let rom = reduce(&f, &ModeCriteria::default()).unwrap();
        let big_n = 14;
        // Dense F₃[r][i][j][k] built from the monomials.
        let mut t = vec![0.0; big_n * big_n * big_n * big_n];
        for m in &f.nonlinearity.cubic {
            let (i, j, k) = (m.factors[0], m.factors[1], m.factors[2]);
            t[((m.row * big_n + i) * big_n + j) * big_n + k] += m.coeff;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let x = DVector::from_fn(8, |_, _| rng.random_range(-0.5..0.5));
            let w = &rom.phi * &x;
            let mut fw = DVector::zeros(big_n);
            for r in 0..big_n {
                for i in 0..big_n {
                    for j in 0..big_n {
                        for k in 0..big_n {
                            fw[r] += t[((r * big_n + i) * big_n + j) * big_n + k] * w[i] * w[j] * w[k];
                        }
                    }
                }
            }
            let want = &rom.psi * fw;
            let got = eval_f_nr(&rom, &x);
            assert!((got - want).amax() <= 1e-10);
        }
        assert!(eval_f_nr(&rom, &DVector::zeros(8)).amax() == 0.0);
    }

    #[test]
    fn zero_participation_mode_ranks_last() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let t = DMatrix::from_fn(6, 6, |_, _| rng.random_range(-1.0..1.0));
        let t_inv = t.clone().try_inverse().unwrap();
        let lam = [-0.5, -1.0, -1.5, -2.0, -2.5, -3.0];
        let a = &t * DMatrix::from_diagonal(&DVector::from_row_slice(&lam)) * &t_inv;
        let mut g = DVector::from_fn(6, |_, _| rng.random_range(0.5..1.5));
        let mut c = DVector::from_fn(6, |_, _| rng.random_range(0.5..1.5));
        g[3] = 0.0;
        c[3] = 0.0;
        let b_g = DMatrix::from_column_slice(6, 1, (&t * &g).as_slice());
        let b_c = DMatrix::from_column_slice(6, 1, (&t * &c).as_slice());
        let d = eig_biorthogonal(&a).unwrap();
        let ranked = rank_by_participation(&mode_units(&d, &b_g, &b_c).unwrap());
        let last = ranked.last().unwrap();
        assert!((last.eigenvalue.re + 2.0).abs() < 1e-9);
        // Exhaustive oracle: |row k of T⁻¹ B_g| scaled by the column norm of T.
        let mut oracle: Vec<(f64, f64)> = (0..6)
            .map(|k| (lam[k], g[k].abs() * t.column(k).norm()))
            .collect();
        oracle.sort_by(|x, y| y.1.total_cmp(&x.1));
        for (u, (l, p)) in ranked.iter().zip(&oracle) {
            assert!((u.eigenvalue.re - l).abs() < 1e-9);
            assert!((u.gust_participation - p).abs() < 1e-8 * p.max(1.0));
        }
    }

    #[test]
    fn oversized_request_is_rejected() {
        let f = fom();
        let d = eig_biorthogonal(&f.a).unwrap();
        let crit = ModeCriteria { n_states: 15, real_states: 2 };
        assert!(matches!(select_modes(&d, &f.b_g, &f.b_c, &crit), Err(Error::ModeSelection(_))));
        let odd = ModeCriteria { n_states: 7, real_states: 2 };
        assert!(matches!(select_modes(&d, &f.b_g, &f.b_c, &odd), Err(Error::ModeSelection(_))));
    }
}
