//! Reference model, Lyapunov design, adaptive law and run diagnostics.

mod design;
mod minphase;
mod monitor;
mod reference;

pub use design::{
    adapt_step, control_input, ideal_gains, regressor, theta_dot, GammaMode, IdealGains, LyapunovDesign, MracController, QPreset,
    MATCHING_TOL,
};
pub use minphase::{minimum_phase_correct, MinimumPhaseCorrection};
pub use monitor::{
    lipschitz_bound, lipschitz_margin, lipschitz_ratio, lyapunov_certificate, CertificateMode, LipschitzMonitor,
    LyapunovCertificate, CERTIFICATE_SLACK,
};
pub use reference::{build_reference_model, matched_modal_reference, matched_reference_model, DampingSpec, ModeTarget, ReferenceModel};
