use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{bass_gura_place, eigenvalues, poly_from_roots};
use crate::romgen::{ModeKind, ReducedOrderModel};

/// Target for one oscillatory mode of the reference model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModeTarget {
    /// Multiply the decay rate σ by `factor`; the damped frequency is kept.
    Factor { factor: f64 },
    /// Place the pair at `-sigma ± j omega`.
    Explicit { sigma: f64, omega: f64 },
}

/// Damping augmentation of the open-loop modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DampingSpec {
    /// σ-factor for every oscillatory mode without an override.
    pub factor: f64,
    /// Per oscillatory mode (in ROM order) overrides.
    #[serde(default)]
    pub overrides: Vec<Option<ModeTarget>>,
    /// σ-factor for real modes; 1 keeps them at their open-loop values.
    #[serde(default = "one")]
    pub real_factor: f64,
    /// Accept factors below 1.
    #[serde(default)]
    pub allow_destabilizing: bool,
    /// Include `F_NR(x_m)` in the reference dynamics.
    #[serde(default = "yes")]
    pub nonlinear: bool,
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

impl Default for DampingSpec {
    fn default() -> Self {
        Self {
            factor: 3.0,
            overrides: Vec::new(),
            real_factor: 1.0,
            allow_destabilizing: false,
            nonlinear: true,
        }
    }
}

impl DampingSpec {
    pub fn uniform(factor: f64) -> Self {
        Self {
            factor,
            ..Self::default()
        }
    }
}

/// Desired closed-loop dynamics `x_m' = A_m x_m + B_m r + B_g u_d (+ F_NR(x_m))`.
#[derive(Debug, Clone)]
pub struct ReferenceModel {
    pub a_m: DMatrix<f64>,
    pub b_m: DMatrix<f64>,
    /// `(σ_m, ω_m)` per ROM block, with `ω_m = 0` for real modes.
    pub targets: Vec<(f64, f64)>,
    pub nonlinear: bool,
}

fn check_factor(f: f64, allow: bool, what: &str) -> Result<()> {
    if !f.is_finite() || f <= 0.0 {
        return Err(Error::InvalidParameter(format!("{what} must be positive, got {f}")));
    }
    if f < 1.0 && !allow {
        return Err(Error::InvalidParameter(format!(
            "{what} {f} < 1 would reduce damping; set allow_destabilizing to accept"
        )));
    }
    Ok(())
}

fn ensure_hurwitz(a: &DMatrix<f64>) -> Result<()> {
    if let Some(z) = eigenvalues(a).into_iter().find(|z| z.re >= 0.0) {
        return Err(Error::NotHurwitz { eigenvalue: z });
    }
    Ok(())
}

/// Damping-augmented reference model in the ROM's block-modal coordinates.
/// `B_m` defaults to `B_c`.
pub fn build_reference_model(rom: &ReducedOrderModel, spec: &DampingSpec) -> Result<ReferenceModel> {
    check_factor(spec.factor, spec.allow_destabilizing, "damping factor")?;
    check_factor(spec.real_factor, spec.allow_destabilizing, "real-mode factor")?;
    let mut a_m = rom.a.clone();
    let mut targets = Vec::with_capacity(rom.modes.len());
    let mut osc = 0usize;
    for m in &rom.modes {
        let o = m.offset;
        match m.kind {
            ModeKind::RealGust => {
                a_m[(o, o)] = rom.a[(o, o)] * spec.real_factor;
                targets.push((-a_m[(o, o)], 0.0));
            }
            ModeKind::Oscillatory => {
                let target = spec.overrides.get(osc).copied().flatten().unwrap_or(ModeTarget::Factor {
                    factor: spec.factor,
                });
                osc += 1;
                let (sigma, omega) = match target {
                    ModeTarget::Factor { factor } => {
                        check_factor(factor, spec.allow_destabilizing, "damping factor")?;
                        (-rom.a[(o, o)] * factor, rom.a[(o, o + 1)])
                    }
                    ModeTarget::Explicit { sigma, omega } => {
                        if !(sigma > 0.0 || spec.allow_destabilizing) {
                            return Err(Error::InvalidParameter(format!(
                                "explicit decay rate must be positive, got {sigma}"
                            )));
                        }
                        (sigma, omega)
                    }
                };
                a_m[(o, o)] = -sigma;
                a_m[(o + 1, o + 1)] = -sigma;
                a_m[(o, o + 1)] = omega;
                a_m[(o + 1, o)] = -omega;
                targets.push((sigma, omega));
            }
        }
    }
    if spec.overrides.len() > osc {
        return Err(Error::InvalidParameter(format!(
            "{} mode overrides for {osc} oscillatory modes",
            spec.overrides.len()
        )));
    }
    ensure_hurwitz(&a_m)?;
    Ok(ReferenceModel {
        a_m,
        b_m: rom.b_c.clone(),
        targets,
        nonlinear: spec.nonlinear,
    })
}

/// Reference model reachable by state feedback: `A_m = A - b K` with `K`
/// from Bass–Gura placing `poles`. Matching is then exact.
pub fn matched_reference_model(a: &DMatrix<f64>, b_c: &DMatrix<f64>, poles: &[Complex64]) -> Result<ReferenceModel> {
    let k = bass_gura_place(a, b_c, &poly_from_roots(poles))?;
    let a_m = a - b_c * &k;
    ensure_hurwitz(&a_m)?;
    Ok(ReferenceModel {
        a_m,
        b_m: b_c.clone(),
        targets: poles.iter().filter(|z| z.im >= 0.0).map(|z| (-z.re, z.im)).collect(),
        nonlinear: false,
    })
}

/// Relative size of `B_c` rows below which a modal block counts as
/// unreachable from the control input.
const REACH_TOL: f64 = 1e-10;

/// Matching-feasible counterpart of [`build_reference_model`]: the targets
/// of `spec` are placed by Bass–Gura on the modal blocks the control input
/// reaches, and blocks it cannot reach keep their open-loop dynamics.
/// `A_m = A - b K`, so the ideal gains are exact. Single input only.
pub fn matched_modal_reference(rom: &ReducedOrderModel, spec: &DampingSpec) -> Result<ReferenceModel> {
    if rom.b_c.ncols() != 1 {
        return Err(Error::dim("matched reference needs a single control input"));
    }
    let target = build_reference_model(rom, spec)?;
    let scale = rom.b_c.amax();
    let mut idx = Vec::new();
    let mut poles = Vec::new();
    for (m, &(sigma, omega)) in rom.modes.iter().zip(&target.targets) {
        let rows = rom.b_c.rows(m.offset, m.size);
        if rows.amax() <= REACH_TOL * scale {
            continue;
        }
        idx.extend(m.offset..m.offset + m.size);
        poles.push(Complex64::new(-sigma, omega));
        if m.size == 2 {
            poles.push(Complex64::new(-sigma, -omega));
        }
    }
    if idx.is_empty() {
        return Err(Error::Uncontrollable {
            rank: 0,
            dim: rom.dim(),
        });
    }
    let a_sub = rom.a.select_rows(&idx).select_columns(&idx);
    let b_sub = rom.b_c.select_rows(&idx);
    let k_sub = bass_gura_place(&a_sub, &b_sub, &poly_from_roots(&poles))?;
    let mut k = DMatrix::zeros(1, rom.dim());
    for (j, &i) in idx.iter().enumerate() {
        k[(0, i)] = k_sub[j];
    }
    let a_m = &rom.a - &rom.b_c * &k;
    ensure_hurwitz(&a_m)?;
    Ok(ReferenceModel {
        a_m,
        b_m: rom.b_c.clone(),
        targets: target.targets,
        nonlinear: spec.nonlinear,
    })
}
