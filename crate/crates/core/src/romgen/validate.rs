use serde::Serialize;

use super::ReducedOrderModel;
use crate::error::Result;
use crate::gusts::GustSignal;
use crate::plant3dof::FullOrderModel;
use crate::sim::{integrate_open_loop, SimulationConfig, SimulationTrace};

/// Per-output agreement between full- and reduced-order open-loop runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RomValidation {
    pub labels: Vec<String>,
    pub peak_fom: Vec<f64>,
    pub peak_rom: Vec<f64>,
    /// `|peak_rom - peak_fom| / peak_fom`.
    pub peak_error: Vec<f64>,
    /// RMS of the difference over the range of the full-order output.
    pub nrmse: Vec<f64>,
    #[serde(skip)]
    pub fom_trace: SimulationTrace,
    #[serde(skip)]
    pub rom_trace: SimulationTrace,
}

impl RomValidation {
    pub fn passes(&self, outputs: &[&str], peak_tol: f64, nrmse_tol: f64) -> bool {
        outputs.iter().all(|name| match self.labels.iter().position(|l| l == name) {
            Some(k) => self.peak_error[k] <= peak_tol && self.nrmse[k] <= nrmse_tol,
            None => false,
        })
    }

    pub fn report(&self) -> String {
        let mut s = String::from("output    peak_fom        peak_rom        peak_err_%  nrmse_%\n");
        for k in 0..self.labels.len() {
            s.push_str(&format!(
                "{:<10}{:<16.6e}{:<16.6e}{:<12.4}{:.4}\n",
                self.labels[k],
                self.peak_fom[k],
                self.peak_rom[k],
                100.0 * self.peak_error[k],
                100.0 * self.nrmse[k]
            ));
        }
        s
    }
}

fn compare(fom: &SimulationTrace, rom: &SimulationTrace) -> RomValidation {
    let p = fom.output_labels.len();
    let mut out = RomValidation {
        labels: fom.output_labels.clone(),
        peak_fom: Vec::with_capacity(p),
        peak_rom: Vec::with_capacity(p),
        peak_error: Vec::with_capacity(p),
        nrmse: Vec::with_capacity(p),
        fom_trace: SimulationTrace::default(),
        rom_trace: SimulationTrace::default(),
    };
    for k in 0..p {
        let pf = fom.peak_abs(k);
        let pr = rom.peak_abs(k);
        let (lo, hi) = fom
            .outputs
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| (lo.min(y[k]), hi.max(y[k])));
        let mse = fom
            .outputs
            .iter()
            .zip(&rom.outputs)
            .map(|(a, b)| (a[k] - b[k]).powi(2))
            .sum::<f64>()
            / fom.outputs.len().max(1) as f64;
        let range = hi - lo;
        out.peak_fom.push(pf);
        out.peak_rom.push(pr);
        out.peak_error.push(if pf > 0.0 { (pr - pf).abs() / pf } else { pr.abs() });
        out.nrmse.push(if range > 0.0 { mse.sqrt() / range } else { mse.sqrt() });
    }
    out
}

/// Runs the full- and reduced-order models under the same gust (and optional
/// control signal) and compares their outputs.
pub fn validate_rom(
    fom: &FullOrderModel,
    rom: &ReducedOrderModel,
    gust: &GustSignal,
    control: Option<&dyn Fn(f64) -> Vec<f64>>,
    cfg: &SimulationConfig,
) -> Result<RomValidation> {
    let rom_cfg = SimulationConfig {
        initial_state: Vec::new(),
        ..cfg.clone()
    };
    let f = integrate_open_loop(fom, gust, control, cfg)?;
    let r = integrate_open_loop(rom, gust, control, &rom_cfg)?;
    let mut v = compare(&f, &r);
    v.fom_trace = f;
    v.rom_trace = r;
    Ok(v)
}
