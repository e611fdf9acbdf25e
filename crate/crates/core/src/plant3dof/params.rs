use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PARAMS_SCHEMA_VERSION: u32 = 1;

/// Typical-section parameters in nondimensional form: semichord, freestream
/// speed and mass per span are all 1, and time is reduced time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AerofoilParams {
    pub schema_version: u32,
    #[serde(default = "default_name")]
    pub name: String,
    pub flow: Flow,
    pub geometry: Geometry,
    pub inertia: Inertia,
    pub stiffness: Stiffness,
    pub aero: LagConstants,
    #[serde(default)]
    pub control: Control,
}

fn default_name() -> String {
    "aerofoil".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Flow {
    /// U* = U / (b ω_α).
    pub reduced_velocity: f64,
    /// μ = m / (π ρ b²).
    pub mass_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    /// Elastic axis `a`, semichords aft of midchord.
    pub elastic_axis: f64,
    /// Flap hinge `c`, semichords aft of midchord.
    pub hinge: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inertia {
    pub x_alpha: f64,
    pub x_beta: f64,
    pub r_alpha_sq: f64,
    pub r_beta_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stiffness {
    /// ω_ξ / ω_α.
    pub plunge_freq_ratio: f64,
    /// ω_β / ω_α.
    pub flap_freq_ratio: f64,
    pub k_alpha_1: f64,
    pub k_xi_1: f64,
    pub k_alpha_3: f64,
    pub k_xi_3: f64,
}

/// Exponential approximations `1 - Σ wᵢ e^{pᵢ s}` of the Wagner and Küssner
/// functions. Poles are continuous-time eigenvalues (negative).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LagConstants {
    pub wagner_weights: [f64; 2],
    pub wagner_poles: [f64; 2],
    pub kussner_weights: [f64; 2],
    pub kussner_poles: [f64; 2],
}

impl LagConstants {
    /// Jones' Wagner coefficients and a two-term Küssner fit whose slow pole
    /// is -0.1393.
    pub fn standard() -> Self {
        Self {
            wagner_weights: [0.165, 0.335],
            wagner_poles: [-0.0455, -0.3],
            kussner_weights: [0.5792, 0.4208],
            kussner_poles: [-0.1393, -1.802],
        }
    }

    pub fn wagner(&self, s: f64) -> f64 {
        indicial(&self.wagner_weights, &self.wagner_poles, s)
    }

    pub fn kussner(&self, s: f64) -> f64 {
        indicial(&self.kussner_weights, &self.kussner_poles, s)
    }
}

fn indicial(w: &[f64; 2], p: &[f64; 2], s: f64) -> f64 {
    1.0 - w[0] * (p[0] * s).exp() - w[1] * (p[1] * s).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum AngleUnit {
    Rad,
    #[default]
    Deg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Control {
    /// Unit of the commanded flap angle `u_c`.
    #[serde(default)]
    pub flap_command_units: AngleUnit,
}

impl AerofoilParams {
    /// The repository default, identical to `data/aerofoil_default.toml`.
    pub fn default_section() -> Self {
        Self::from_toml_str(DEFAULT_TOML).expect("embedded default parameters are valid")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let p: Self = toml::from_str(text).map_err(|e| Error::Config(format!("aerofoil parameters: {e}")))?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("parameters serialize")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version > PARAMS_SCHEMA_VERSION {
            return Err(Error::Version {
                found: self.schema_version,
                supported: PARAMS_SCHEMA_VERSION,
            });
        }
        let positive = [
            ("flow.reduced_velocity", self.flow.reduced_velocity),
            ("flow.mass_ratio", self.flow.mass_ratio),
            ("inertia.r_alpha_sq", self.inertia.r_alpha_sq),
            ("inertia.r_beta_sq", self.inertia.r_beta_sq),
            ("stiffness.plunge_freq_ratio", self.stiffness.plunge_freq_ratio),
            ("stiffness.flap_freq_ratio", self.stiffness.flap_freq_ratio),
            ("stiffness.k_alpha_1", self.stiffness.k_alpha_1),
            ("stiffness.k_xi_1", self.stiffness.k_xi_1),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("stiffness.k_alpha_3", self.stiffness.k_alpha_3),
            ("stiffness.k_xi_3", self.stiffness.k_xi_3),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be non-negative (hardening), got {v}"
                )));
            }
        }
        for (name, v) in [
            ("geometry.elastic_axis", self.geometry.elastic_axis),
            ("geometry.hinge", self.geometry.hinge),
        ] {
            if !(v.is_finite() && v > -1.0 && v < 1.0) {
                return Err(Error::InvalidParameter(format!("{name} must lie in (-1, 1), got {v}")));
            }
        }
        if self.geometry.hinge <= self.geometry.elastic_axis {
            return Err(Error::InvalidParameter("geometry.hinge must lie aft of the elastic axis".into()));
        }
        for (name, v) in [
            ("inertia.x_alpha", self.inertia.x_alpha),
            ("inertia.x_beta", self.inertia.x_beta),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite")));
            }
        }
        let lag = &self.aero;
        for (name, poles) in [("aero.wagner_poles", lag.wagner_poles), ("aero.kussner_poles", lag.kussner_poles)] {
            if poles.iter().any(|p| !(p.is_finite() && *p < 0.0)) {
                return Err(Error::InvalidParameter(format!("{name} must be strictly negative, got {poles:?}")));
            }
        }
        for (name, w) in [
            ("aero.wagner_weights", lag.wagner_weights),
            ("aero.kussner_weights", lag.kussner_weights),
        ] {
            if w.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    /// Pitch frequency in reduced time.
    pub fn omega_alpha(&self) -> f64 {
        1.0 / self.flow.reduced_velocity
    }

    pub fn omega_xi(&self) -> f64 {
        self.stiffness.plunge_freq_ratio / self.flow.reduced_velocity
    }

    pub fn omega_beta(&self) -> f64 {
        self.stiffness.flap_freq_ratio / self.flow.reduced_velocity
    }

    pub fn with_reduced_velocity(&self, u_star: f64) -> Self {
        let mut p = self.clone();
        p.flow.reduced_velocity = u_star;
        p
    }
}

pub(crate) const DEFAULT_TOML: &str = include_str!("../../../../data/aerofoil_default.toml");

/// Returns the Wagner and Küssner constants used by the assembly.
pub fn wagner_kussner_coeffs(params: &AerofoilParams) -> LagConstants {
    params.aero.clone()
}
