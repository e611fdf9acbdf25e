use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gusts::{von_karman_realization, GustSignal, VonKarmanSpec};
use crate::mrac::{GammaMode, QPreset};
use crate::romgen::ModeCriteria;
use crate::sim::SimulationConfig;

pub const RUN_SCHEMA_VERSION: u32 = 1;

fn one() -> u32 {
    1
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "one")]
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub plant: PlantConfig,
    #[serde(default)]
    pub rom: ModeCriteria,
    #[serde(default)]
    pub controller: ControllerConfig,
    #[serde(default)]
    pub gust: GustConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub validation: ValidationConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: RUN_SCHEMA_VERSION,
            seed: 0,
            out: None,
            plant: PlantConfig::default(),
            rom: ModeCriteria::default(),
            controller: ControllerConfig::default(),
            gust: GustConfig::default(),
            simulation: SimulationConfig::default(),
            sweep: SweepConfig::default(),
            validation: ValidationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlantSource {
    /// Pitch-plunge-flap section assembled from a parameter file.
    #[default]
    Aerofoil,
    /// State-space bundle from `plant.bundle`.
    Bundle,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    #[serde(default)]
    pub source: PlantSource,
    /// Aerofoil parameter file; the built-in section when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<PathBuf>,
    /// Overrides `flow.reduced_velocity` of the parameter file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduced_velocity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bundle: Option<PathBuf>,
    /// Use this saved ROM instead of reducing the plant again.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rom_cache: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceKind {
    /// Damping-augmented modal blocks; matching may be approximate.
    #[default]
    Modal,
    /// Same targets, placed by state feedback on the reachable modes.
    MatchedModal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QSpec {
    Preset(QPreset),
    Diagonal(Vec<f64>),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialGains {
    #[default]
    Zero,
    /// `θ(0) = θ*`.
    Ideal,
}

fn three() -> f64 {
    3.0
}

fn unit() -> f64 {
    1.0
}

fn plunge() -> String {
    "plunge".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    #[serde(default)]
    pub reference: ReferenceKind,
    /// Damping factor on oscillatory modes.
    #[serde(default = "three")]
    pub damping_factor: f64,
    /// Decay factor on real modes.
    #[serde(default = "unit")]
    pub real_factor: f64,
    #[serde(default = "default_q")]
    pub q: QSpec,
    #[serde(default = "unit")]
    pub gamma: f64,
    #[serde(default)]
    pub gamma_mode: GammaMode,
    /// `B_m` row-major, `n x m`; `B_c` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_m: Option<Vec<f64>>,
    /// Include the plant nonlinearity in the reference model.
    #[serde(default = "yes")]
    pub reference_nonlinear: bool,
    /// Report (and reflect) right-half-plane zeros of the metric channel.
    #[serde(default)]
    pub zero_correction: bool,
    #[serde(default)]
    pub initial_gains: InitialGains,
    /// Output the reduction figures refer to.
    #[serde(default = "plunge")]
    pub metric_output: String,
}

fn default_q() -> QSpec {
    QSpec::Preset(QPreset::Aerofoil)
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            reference: ReferenceKind::Modal,
            damping_factor: 3.0,
            real_factor: 1.0,
            q: default_q(),
            gamma: 1.0,
            gamma_mode: GammaMode::QBlock,
            b_m: None,
            reference_nonlinear: true,
            zero_correction: false,
            initial_gains: InitialGains::Zero,
            metric_output: plunge(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GustConfig {
    None,
    OneCosine { w_gmax: f64, h_g: f64, u_inf: f64 },
    VonKarman { sigma: f64, length_scale: f64, u_inf: f64 },
}

impl Default for GustConfig {
    fn default() -> Self {
        GustConfig::OneCosine {
            w_gmax: 0.14,
            h_g: 55.0,
            u_inf: 1.0,
        }
    }
}

impl GustConfig {
    /// Time signal over the simulation window; Von Kármán records use `seed`.
    pub fn signal(&self, sim: &SimulationConfig, seed: u64) -> Result<GustSignal> {
        match *self {
            GustConfig::None => Ok(GustSignal::Zero),
            GustConfig::OneCosine { w_gmax, h_g, u_inf } => GustSignal::one_cosine(w_gmax, h_g, u_inf),
            GustConfig::VonKarman { sigma, length_scale, u_inf } => {
                let spec = VonKarmanSpec { sigma, length_scale, u_inf };
                let g = von_karman_realization(&spec, sim.dt, sim.duration, seed)?;
                if let Some(w) = &g.warning {
                    log::warn!("{w}");
                }
                Ok(GustSignal::Sampled(g))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, count: usize },
}

impl Grid {
    pub fn points(&self) -> Result<Vec<f64>> {
        let pts = match self {
            Grid::List(v) => v.clone(),
            Grid::Range { start, stop, count } => match count {
                0 => Vec::new(),
                1 => vec![*start],
                n => (0..*n).map(|k| start + (stop - start) * k as f64 / (n - 1) as f64).collect(),
            },
        };
        if pts.is_empty() {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        if pts.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("sweep grid has non-finite points".into()));
        }
        Ok(pts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Adaptation rates `γ`.
    #[serde(default = "default_gamma_grid")]
    pub gamma: Grid,
    /// One-cosine gradients `H_g`; amplitude and speed come from `[gust]`.
    #[serde(default = "default_gradient_grid")]
    pub gust_gradient: Grid,
}

fn default_gamma_grid() -> Grid {
    Grid::List(vec![0.1, 0.5, 1.0])
}

fn default_gradient_grid() -> Grid {
    Grid::Range {
        start: 5.0,
        stop: 100.0,
        count: 20,
    }
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            gamma: default_gamma_grid(),
            gust_gradient: default_gradient_grid(),
        }
    }
}

fn five_pct() -> f64 {
    0.05
}

fn two_pct() -> f64 {
    0.02
}

fn checked_outputs() -> Vec<String> {
    vec!["pitch".into(), "plunge".into()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationConfig {
    /// Relative peak error allowed between ROM and full model.
    #[serde(default = "five_pct")]
    pub peak_tol: f64,
    /// RMS error over the full-model range.
    #[serde(default = "two_pct")]
    pub nrmse_tol: f64,
    #[serde(default = "checked_outputs")]
    pub outputs: Vec<String>,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            peak_tol: five_pct(),
            nrmse_tol: two_pct(),
            outputs: checked_outputs(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    /// Reads a config; relative paths inside it are taken relative to the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut c = Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut c.plant.params, &mut c.plant.bundle, &mut c.plant.rom_cache].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version > RUN_SCHEMA_VERSION {
            return Err(Error::Version {
                found: self.schema_version,
                supported: RUN_SCHEMA_VERSION,
            });
        }
        if self.plant.source == PlantSource::Bundle && self.plant.bundle.is_none() {
            return Err(Error::Config("plant.source = \"bundle\" needs plant.bundle".into()));
        }
        let c = &self.controller;
        if !(c.gamma >= 0.0 && c.gamma.is_finite()) {
            return Err(Error::Config(format!("controller.gamma must be >= 0, got {}", c.gamma)));
        }
        self.simulation
            .validate()
            .map_err(|e| Error::Config(format!("simulation: {e}")))?;
        Ok(())
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }
}
