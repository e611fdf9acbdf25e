use serde::Serialize;

use super::SimulationTrace;
use crate::error::{Error, Result};

/// Open- versus closed-loop load alleviation figures. Peaks and RMS are
/// absolute values in internal units (radians for angles).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GlaMetrics {
    pub labels: Vec<String>,
    pub output_is_angle: Vec<bool>,
    pub peak_open: Vec<f64>,
    pub peak_closed: Vec<f64>,
    /// `100 (1 - peak_closed / peak_open)`.
    pub peak_reduction_pct: Vec<f64>,
    pub rms_open: Vec<f64>,
    pub rms_closed: Vec<f64>,
    pub rms_reduction_pct: Vec<f64>,
    /// Largest `|u_c|` over the closed-loop run, in command units.
    pub max_control: f64,
    /// Largest closed-loop flap deflection, radians, when the plant has a
    /// `flap` output.
    pub max_flap: Option<f64>,
    /// First time after which the closed-loop output stays within 2% of its
    /// peak; `None` if it never settles inside the window.
    pub settling_time: Vec<Option<f64>>,
}

/// Band, relative to the closed-loop peak, used for the settling time.
pub const SETTLING_BAND: f64 = 0.02;

fn settling_time(trace: &SimulationTrace, k: usize) -> Option<f64> {
    let peak = trace.peak_abs(k);
    if peak == 0.0 {
        return trace.t.first().copied();
    }
    let band = SETTLING_BAND * peak;
    let last_out = trace.outputs.iter().rposition(|y| y[k].abs() > band)?;
    trace.t.get(last_out + 1).copied()
}

impl GlaMetrics {
    pub fn index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::InvalidParameter(format!("no output named `{label}`")))
    }

    pub fn report(&self) -> String {
        let mut s = String::new();
        s.push_str("output            peak_open       peak_closed     reduction_%     rms_reduction_%\n");
        for k in 0..self.labels.len() {
            let (scale, unit) = if self.output_is_angle[k] {
                (180.0 / std::f64::consts::PI, " [deg]")
            } else {
                (1.0, "")
            };
            s.push_str(&format!(
                "{:<18}{:<16.6e}{:<16.6e}{:<16.4}{:.4}\n",
                format!("{}{}", self.labels[k], unit),
                self.peak_open[k] * scale,
                self.peak_closed[k] * scale,
                self.peak_reduction_pct[k],
                self.rms_reduction_pct[k]
            ));
        }
        s.push_str(&format!("max |u_c|         {:.6e}\n", self.max_control));
        if let Some(f) = self.max_flap {
            s.push_str(&format!("max |flap| [deg]  {:.6e}\n", f.to_degrees()));
        }
        s
    }
}

fn reduction(open: f64, closed: f64) -> f64 {
    if open > 0.0 {
        100.0 * (1.0 - closed / open)
    } else {
        0.0
    }
}

pub fn compute_metrics(open: &SimulationTrace, closed: &SimulationTrace) -> Result<GlaMetrics> {
    if open.output_labels != closed.output_labels {
        return Err(Error::dim("open- and closed-loop traces have different outputs"));
    }
    if open.t != closed.t {
        return Err(Error::dim("open- and closed-loop traces are on different time grids"));
    }
    let p = open.output_labels.len();
    let peak_open: Vec<f64> = (0..p).map(|k| open.peak_abs(k)).collect();
    let peak_closed: Vec<f64> = (0..p).map(|k| closed.peak_abs(k)).collect();
    let rms_open: Vec<f64> = (0..p).map(|k| open.rms(k)).collect();
    let rms_closed: Vec<f64> = (0..p).map(|k| closed.rms(k)).collect();
    Ok(GlaMetrics {
        labels: open.output_labels.clone(),
        output_is_angle: open.output_is_angle.clone(),
        peak_reduction_pct: (0..p).map(|k| reduction(peak_open[k], peak_closed[k])).collect(),
        rms_reduction_pct: (0..p).map(|k| reduction(rms_open[k], rms_closed[k])).collect(),
        peak_open,
        peak_closed,
        rms_open,
        rms_closed,
        max_control: closed.u_c.iter().flatten().map(|u| u.abs()).fold(0.0, f64::max),
        max_flap: closed.flap_index().map(|k| closed.peak_abs(k)),
        settling_time: (0..p).map(|k| settling_time(closed, k)).collect(),
    })
}
