use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::LyapunovDesign;
use crate::error::{Error, Result};
use crate::numerics::{min_symmetric_eigenvalue, spectral_norm};
use crate::sim::{Plant, SimulationTrace};

/// `L_F = λ_min(Q) / (2 ‖P‖₂)`.
pub fn lipschitz_bound(design: &LyapunovDesign) -> f64 {
    min_symmetric_eigenvalue(&design.q) / (2.0 * spectral_norm(&design.p))
}

/// Below this `‖x - x_m‖` the ratio is not evaluated.
pub const RATIO_FLOOR: f64 = 1e-12;

/// `‖F(x) - F(x_m)‖ / ‖x - x_m‖`; reported as 0 (skipped) when
/// `‖x - x_m‖ < 1e-12`.
pub fn lipschitz_ratio<P: Plant + ?Sized>(plant: &P, x: &[f64], x_m: &[f64]) -> f64 {
    let e: f64 = x.iter().zip(x_m).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    if e < RATIO_FLOOR {
        return 0.0;
    }
    let df = plant.nonlinear(x) - plant.nonlinear(x_m);
    df.norm() / e
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzMonitor {
    pub l_f: f64,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub violated: bool,
    pub first_violation_time: Option<f64>,
}

impl LipschitzMonitor {
    fn from_ratios(l_f: f64, t: &[f64], ratios: Vec<f64>) -> Self {
        let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
        let first_violation_time = ratios.iter().position(|&r| r > l_f).map(|i| t[i]);
        Self {
            l_f,
            max_ratio,
            violated: first_violation_time.is_some(),
            first_violation_time,
            ratios,
        }
    }

    /// Monitor built from the ratios logged during the run.
    pub fn from_trace(design: &LyapunovDesign, trace: &SimulationTrace) -> Result<Self> {
        if trace.lipschitz_ratio.len() != trace.len() {
            return Err(Error::InvalidParameter("trace was recorded without the Lipschitz monitor".into()));
        }
        Ok(Self::from_ratios(lipschitz_bound(design), &trace.t, trace.lipschitz_ratio.clone()))
    }
}

/// Recomputes the Lipschitz ratio from the logged states of a closed-loop run
/// that included the plant nonlinearity.
pub fn lipschitz_margin<P: Plant + ?Sized>(
    plant: &P,
    design: &LyapunovDesign,
    trace: &SimulationTrace,
) -> Result<LipschitzMonitor> {
    if !trace.is_closed_loop() {
        return Err(Error::InvalidParameter("Lipschitz margin needs a closed-loop trace".into()));
    }
    let ratios = trace.x.iter().zip(&trace.x_m).map(|(x, m)| lipschitz_ratio(plant, x, m)).collect();
    Ok(LipschitzMonitor::from_ratios(lipschitz_bound(design), &trace.t, ratios))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateMode {
    /// `V = eᵀ P e + tr(θ̃ᵀ Γ⁻¹ θ̃)`; needs `θ*` and `γ > 0`.
    Full,
    /// `V = eᵀ P e` only.
    ErrorOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LyapunovCertificate {
    pub mode: CertificateMode,
    pub t: Vec<f64>,
    pub v: Vec<f64>,
    /// Allowed per-sample increase, `1e-8 V(0)`.
    pub slack: f64,
    pub worst_increase: f64,
    pub non_increasing: bool,
    pub error_norms: Vec<f64>,
}

impl LyapunovCertificate {
    pub fn error_peak(&self) -> f64 {
        self.error_norms.iter().copied().fold(0.0, f64::max)
    }

    /// Largest `‖e‖` at or after `t0`, relative to the peak.
    pub fn residual_error_ratio(&self, t0: f64) -> f64 {
        let peak = self.error_peak();
        if peak == 0.0 {
            return 0.0;
        }
        self.t
            .iter()
            .zip(&self.error_norms)
            .filter(|(t, _)| **t >= t0)
            .map(|(_, e)| *e)
            .fold(0.0, f64::max)
            / peak
    }

    /// Copies `V(t)` into the trace so it is exported with it.
    pub fn attach(&self, trace: &mut SimulationTrace) {
        trace.lyapunov = self.v.clone();
    }

    pub fn report(&self) -> String {
        format!(
            "mode {:?}\nV(0) {:.6e}\nV(end) {:.6e}\nslack {:.3e}\nworst increase {:.3e}\nnon-increasing {}\npeak |e| {:.6e}\n",
            self.mode,
            self.v.first().copied().unwrap_or(0.0),
            self.v.last().copied().unwrap_or(0.0),
            self.slack,
            self.worst_increase,
            self.non_increasing,
            self.error_peak()
        )
    }
}

pub const CERTIFICATE_SLACK: f64 = 1e-8;

/// Evaluates the Lyapunov function along a closed-loop trace and checks that
/// it never grows by more than `1e-8 V(0)` between samples.
pub fn lyapunov_certificate(
    trace: &SimulationTrace,
    design: &LyapunovDesign,
    theta_star: Option<&DMatrix<f64>>,
    mode: CertificateMode,
) -> Result<LyapunovCertificate> {
    if !trace.is_closed_loop() || trace.theta.len() != trace.len() {
        return Err(Error::Certificate("certificate needs a closed-loop trace with logged gains".into()));
    }
    let full = match mode {
        CertificateMode::ErrorOnly => None,
        CertificateMode::Full => {
            let star = theta_star.ok_or_else(|| {
                Error::Certificate("ideal gains unavailable; only the error-only certificate applies".into())
            })?;
            let ginv = design.gamma_inverse().ok_or_else(|| {
                Error::Certificate("adaptation is frozen (γ = 0); only the error-only certificate applies".into())
            })?;
            if star.shape() != trace.theta[0].shape() {
                return Err(Error::dim("θ* does not match the logged gains"));
            }
            Some((star, ginv))
        }
    };
    let error_norms = trace.error_norms();
    let v: Vec<f64> = (0..trace.len())
        .map(|i| {
            let e = DVector::from_iterator(trace.x[i].len(), trace.x[i].iter().zip(&trace.x_m[i]).map(|(a, b)| a - b));
            let mut v = (e.transpose() * &design.p * &e)[(0, 0)];
            if let Some((star, ginv)) = &full {
                let dt = &trace.theta[i] - *star;
                v += (dt.transpose() * ginv * &dt).trace();
            }
            v
        })
        .collect();
    let slack = CERTIFICATE_SLACK * v.first().copied().unwrap_or(0.0);
    let worst_increase = v.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    Ok(LyapunovCertificate {
        mode,
        t: trace.t.clone(),
        non_increasing: worst_increase <= slack,
        worst_increase,
        slack,
        v,
        error_norms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mrac::ReferenceModel;

    fn design_half_identity() -> LyapunovDesign {
        // A_m = -I, Q = I gives P = I/2.
        let r = ReferenceModel {
            a_m: -DMatrix::identity(3, 3),
            b_m: DMatrix::from_column_slice(3, 1, &[0.0, 0.0, 1.0]),
            targets: vec![],
            nonlinear: false,
        };
        LyapunovDesign::new(&r, DMatrix::identity(3, 3), 1.0, 1).unwrap()
    }

    #[test]
    fn unit_bound_for_identity_weights() {
        let d = design_half_identity();
        assert!((d.p.clone() - DMatrix::identity(3, 3) * 0.5).amax() < 1e-15);
        assert!((lipschitz_bound(&d) - 1.0).abs() < 1e-15);
    }

    fn closed_trace(e: f64, theta: DMatrix<f64>) -> SimulationTrace {
        SimulationTrace {
            t: vec![0.0, 1.0],
            x: vec![vec![e, 0.0, 0.0]; 2],
            x_m: vec![vec![0.0; 3]; 2],
            theta: vec![theta; 2],
            ..Default::default()
        }
    }

    #[test]
    fn ideal_gains_and_zero_error_give_zero_v() {
        let d = design_half_identity();
        let star = DMatrix::from_column_slice(4, 1, &[0.1, 0.2, 0.3, 1.0]);
        let c = lyapunov_certificate(&closed_trace(0.0, star.clone()), &d, Some(&star), CertificateMode::Full).unwrap();
        assert!(c.v.iter().all(|&v| v == 0.0));
        assert!(c.non_increasing);
    }

    #[test]
    fn v_adds_error_and_gain_terms() {
        let d = design_half_identity();
        let star = DMatrix::zeros(4, 1);
        let th = DMatrix::from_column_slice(4, 1, &[1.0, 0.0, 0.0, 2.0]);
        let c = lyapunov_certificate(&closed_trace(2.0, th), &d, Some(&star), CertificateMode::Full).unwrap();
        // eᵀPe = 0.5·4, tr(θ̃ᵀΓ⁻¹θ̃) = 1 + 4
        assert!((c.v[0] - 7.0).abs() < 1e-14);
        let e_only = lyapunov_certificate(&closed_trace(2.0, DMatrix::zeros(4, 1)), &d, None, CertificateMode::ErrorOnly).unwrap();
        assert!((e_only.v[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn full_mode_without_ideal_gains_is_an_error() {
        let d = design_half_identity();
        let r = lyapunov_certificate(&closed_trace(1.0, DMatrix::zeros(4, 1)), &d, None, CertificateMode::Full);
        assert!(matches!(r, Err(Error::Certificate(_))));
    }

    #[test]
    fn increase_beyond_slack_fails_the_verdict() {
        let d = design_half_identity();
        let mut tr = closed_trace(1.0, DMatrix::zeros(4, 1));
        tr.x[1][0] = 1.1;
        let c = lyapunov_certificate(&tr, &d, None, CertificateMode::ErrorOnly).unwrap();
        assert!(!c.non_increasing);
    }

    #[test]
    fn monitor_flags_first_exceeding_sample() {
        let m = LipschitzMonitor::from_ratios(1.0, &[0.0, 1.0, 2.0, 3.0], vec![0.0, 0.5, 1.5, 2.0]);
        assert!(m.violated);
        assert_eq!(m.first_violation_time, Some(2.0));
        assert_eq!(m.max_ratio, 2.0);
    }
}
