use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ReferenceModel;
use crate::error::{Error, Result};
use crate::numerics::{is_positive_definite, pseudo_inverse, solve_lyapunov};

/// Matching residual below which the ideal gains are reported as exact.
pub const MATCHING_TOL: f64 = 1e-8;

/// Named weighting matrices for the Lyapunov equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QPreset {
    /// `diag(10, 10, 30, 30, 30, 10, 30, 30)` for the 8-state aerofoil ROM.
    Aerofoil,
    /// `1e-4 I`.
    Uav,
    Identity,
}

impl QPreset {
    pub fn matrix(self, n: usize) -> Result<DMatrix<f64>> {
        match self {
            QPreset::Aerofoil => {
                const W: [f64; 8] = [10.0, 10.0, 30.0, 30.0, 30.0, 10.0, 30.0, 30.0];
                if n != W.len() {
                    return Err(Error::dim(format!("aerofoil Q preset is 8x8, ROM has {n} states")));
                }
                Ok(DMatrix::from_diagonal(&DVector::from_row_slice(&W)))
            }
            QPreset::Uav => Ok(DMatrix::identity(n, n) * 1e-4),
            QPreset::Identity => Ok(DMatrix::identity(n, n)),
        }
    }
}

/// Shape of the adaptation gain.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaMode {
    /// `Γ = γ · blockdiag(Q, I_m)`.
    #[default]
    QBlock,
    /// `Γ = γ I`.
    Identity,
}

/// `P` from `A_mᵀ P + P A_m = -Q` and the adaptation gain `Γ`.
#[derive(Debug, Clone)]
pub struct LyapunovDesign {
    pub q: DMatrix<f64>,
    pub p: DMatrix<f64>,
    pub gamma: DMatrix<f64>,
    pub gamma_scalar: f64,
    pub gamma_mode: GammaMode,
}

impl LyapunovDesign {
    pub fn new(reference: &ReferenceModel, q: DMatrix<f64>, gamma_scalar: f64, n_controls: usize) -> Result<Self> {
        Self::with_mode(reference, q, gamma_scalar, n_controls, GammaMode::QBlock)
    }

    pub fn with_mode(
        reference: &ReferenceModel,
        q: DMatrix<f64>,
        gamma_scalar: f64,
        n_controls: usize,
        gamma_mode: GammaMode,
    ) -> Result<Self> {
        if !(gamma_scalar >= 0.0 && gamma_scalar.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "adaptation rate must be finite and non-negative, got {gamma_scalar}"
            )));
        }
        if !is_positive_definite(&q) {
            return Err(Error::NotPositiveDefinite("Q".into()));
        }
        let p = solve_lyapunov(&reference.a_m, &q)?;
        let n = q.nrows();
        let mut gamma = DMatrix::zeros(n + n_controls, n + n_controls);
        match gamma_mode {
            GammaMode::QBlock => gamma.view_mut((0, 0), (n, n)).copy_from(&(&q * gamma_scalar)),
            GammaMode::Identity => gamma.fill_diagonal(gamma_scalar),
        }
        for i in n..n + n_controls {
            gamma[(i, i)] = gamma_scalar;
        }
        Ok(Self {
            q,
            p,
            gamma,
            gamma_scalar,
            gamma_mode,
        })
    }

    pub fn with_gamma(&self, reference: &ReferenceModel, gamma_scalar: f64) -> Result<Self> {
        Self::with_mode(
            reference,
            self.q.clone(),
            gamma_scalar,
            self.gamma.nrows() - self.q.nrows(),
            self.gamma_mode,
        )
    }

    /// `Γ⁻¹`, or `None` when adaptation is frozen.
    pub fn gamma_inverse(&self) -> Option<DMatrix<f64>> {
        if self.gamma_scalar == 0.0 {
            return None;
        }
        self.gamma.clone().try_inverse()
    }
}

/// Gains achieving exact (or least-squares) model matching.
#[derive(Debug, Clone)]
pub struct IdealGains {
    /// `n × m`; the state part of `θ*`.
    pub kx: DMatrix<f64>,
    /// `m × m`; the reference part of `θ*`.
    pub kr: DMatrix<f64>,
    /// `‖A + B_c(K0 + K_xᵀ) - A_m‖_F + ‖B_c K_rᵀ - B_m‖_F`, relative to
    /// `max(‖A_m‖_F, 1)`.
    pub residual: f64,
    pub exact: bool,
}

impl IdealGains {
    pub fn theta_star(&self) -> DMatrix<f64> {
        let (n, m) = self.kx.shape();
        let mut t = DMatrix::zeros(n + m, m);
        t.view_mut((0, 0), (n, m)).copy_from(&self.kx);
        t.view_mut((n, 0), (m, m)).copy_from(&self.kr);
        t
    }
}

/// Least-squares solution of the matching conditions through `B_c⁺`.
pub fn ideal_gains(
    a: &DMatrix<f64>,
    b_c: &DMatrix<f64>,
    k0: &DMatrix<f64>,
    reference: &ReferenceModel,
) -> Result<IdealGains> {
    let n = a.nrows();
    let m = b_c.ncols();
    if b_c.nrows() != n || k0.shape() != (m, n) || reference.a_m.shape() != (n, n) || reference.b_m.shape() != (n, m) {
        return Err(Error::dim("plant, K0 and reference model shapes disagree"));
    }
    if crate::numerics::rank(b_c, 1e-12) == 0 {
        return Err(Error::Degenerate("B_c has rank 0; no gain can act on the plant".into()));
    }
    let a0 = a + b_c * k0;
    let pinv = pseudo_inverse(b_c, 1e-12);
    let kx = (&pinv * (&reference.a_m - &a0)).transpose();
    let kr = (&pinv * &reference.b_m).transpose();
    let rx = (&a0 + b_c * kx.transpose() - &reference.a_m).norm();
    let rr = (b_c * kr.transpose() - &reference.b_m).norm();
    let residual = (rx + rr) / reference.a_m.norm().max(1.0);
    Ok(IdealGains {
        kx,
        kr,
        residual,
        exact: residual <= MATCHING_TOL,
    })
}

/// Regressor `φ = [x; r]`.
pub fn regressor(x: &[f64], r: &[f64]) -> DVector<f64> {
    DVector::from_iterator(x.len() + r.len(), x.iter().chain(r).copied())
}

/// `θ' = -Γ φ (eᵀ P B_c)`.
pub fn theta_dot(design: &LyapunovDesign, b_c: &DMatrix<f64>, e: &DVector<f64>, phi: &DVector<f64>) -> DMatrix<f64> {
    let epb = e.transpose() * &design.p * b_c;
    -(&design.gamma * phi) * epb
}

/// One explicit Euler step of the adaptive law.
pub fn adapt_step(
    theta: &DMatrix<f64>,
    design: &LyapunovDesign,
    b_c: &DMatrix<f64>,
    e: &DVector<f64>,
    phi: &DVector<f64>,
    dt: f64,
) -> DMatrix<f64> {
    theta + theta_dot(design, b_c, e, phi) * dt
}

/// `u = θᵀ φ + K0 x`.
pub fn control_input(theta: &DMatrix<f64>, k0: &DMatrix<f64>, x: &[f64], r: &[f64]) -> DVector<f64> {
    let xv = DVector::from_column_slice(x);
    theta.transpose() * regressor(x, r) + k0 * xv
}

/// Everything the closed-loop integrator needs from the controller.
#[derive(Debug, Clone)]
pub struct MracController {
    pub reference: ReferenceModel,
    pub design: LyapunovDesign,
    pub k0: DMatrix<f64>,
    pub theta0: DMatrix<f64>,
    /// Constant reference command `r`.
    pub command: DVector<f64>,
    pub theta_star: Option<DMatrix<f64>>,
}

impl MracController {
    pub fn new(reference: ReferenceModel, design: LyapunovDesign, n_controls: usize) -> Self {
        let n = reference.a_m.nrows();
        Self {
            reference,
            design,
            k0: DMatrix::zeros(n_controls, n),
            theta0: DMatrix::zeros(n + n_controls, n_controls),
            command: DVector::zeros(n_controls),
            theta_star: None,
        }
    }

    pub fn n_controls(&self) -> usize {
        self.theta0.ncols()
    }

    pub fn with_theta_star(mut self, theta_star: DMatrix<f64>) -> Self {
        self.theta_star = Some(theta_star);
        self
    }

    pub fn with_initial_gains(mut self, theta0: DMatrix<f64>) -> Self {
        self.theta0 = theta0;
        self
    }
}
