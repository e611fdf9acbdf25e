//! Discrete "1-cosine" gusts and seeded Von Kármán turbulence.

mod von_karman;
mod welch;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use von_karman::{von_karman_realization, VonKarmanFilter, VonKarmanSpec};
pub use welch::welch_psd;

/// `(w/2)(1 - cos(π U t / H))` on `[0, 2H/U]`, zero elsewhere.
pub fn one_cosine(t: f64, w_gmax: f64, h_g: f64, u_inf: f64) -> f64 {
    let s = u_inf * t / h_g;
    if !(0.0..=2.0).contains(&s) {
        return 0.0;
    }
    0.5 * w_gmax * (1.0 - (PI * s).cos())
}

/// A sampled disturbance, linearly interpolated between samples and zero
/// outside the sampled window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledGust {
    pub dt: f64,
    pub samples: Vec<f64>,
    /// Set when the record is too short for the spectral check.
    pub warning: Option<String>,
    pub seed: u64,
}

impl SampledGust {
    pub fn duration(&self) -> f64 {
        self.dt * (self.samples.len().saturating_sub(1)) as f64
    }

    pub fn eval(&self, t: f64) -> f64 {
        if self.samples.is_empty() || t < 0.0 {
            return 0.0;
        }
        let pos = t / self.dt;
        let k = pos.floor() as usize;
        if k + 1 >= self.samples.len() {
            return if k + 1 == self.samples.len() && pos == k as f64 {
                self.samples[k]
            } else {
                0.0
            };
        }
        let frac = pos - k as f64;
        self.samples[k] + frac * (self.samples[k + 1] - self.samples[k])
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.samples.len()).map(move |k| k as f64 * self.dt)
    }
}

/// Time-domain gust velocity `u_d(t)` for a single gust channel.
#[derive(Debug, Clone, PartialEq)]
pub enum GustSignal {
    Zero,
    OneCosine { w_gmax: f64, h_g: f64, u_inf: f64 },
    Sampled(SampledGust),
}

impl GustSignal {
    pub fn one_cosine(w_gmax: f64, h_g: f64, u_inf: f64) -> Result<Self> {
        if !(h_g > 0.0 && h_g.is_finite()) {
            return Err(Error::InvalidParameter(format!("gust gradient must be positive, got {h_g}")));
        }
        if !(u_inf > 0.0 && u_inf.is_finite()) {
            return Err(Error::InvalidParameter(format!("freestream speed must be positive, got {u_inf}")));
        }
        if !w_gmax.is_finite() {
            return Err(Error::InvalidParameter("gust amplitude must be finite".into()));
        }
        Ok(GustSignal::OneCosine { w_gmax, h_g, u_inf })
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            GustSignal::Zero => 0.0,
            GustSignal::OneCosine { w_gmax, h_g, u_inf } => one_cosine(t, *w_gmax, *h_g, *u_inf),
            GustSignal::Sampled(s) => s.eval(t),
        }
    }

    /// Length of the interval on which the gust is active.
    pub fn active_duration(&self) -> f64 {
        match self {
            GustSignal::Zero => 0.0,
            GustSignal::OneCosine { h_g, u_inf, .. } => 2.0 * h_g / u_inf,
            GustSignal::Sampled(s) => s.duration(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        match self {
            GustSignal::Zero => GustSignal::Zero,
            GustSignal::OneCosine { w_gmax, h_g, u_inf } => GustSignal::OneCosine {
                w_gmax: c * w_gmax,
                h_g: *h_g,
                u_inf: *u_inf,
            },
            GustSignal::Sampled(s) => GustSignal::Sampled(SampledGust {
                samples: s.samples.iter().map(|v| c * v).collect(),
                ..s.clone()
            }),
        }
    }
}

/// Result of a gust-gradient sweep: every `(H_g, peak)` pair and the worst one.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSweep {
    pub table: Vec<(f64, f64)>,
    pub worst_index: usize,
}

impl GradientSweep {
    pub fn worst_gradient(&self) -> f64 {
        self.table[self.worst_index].0
    }

    pub fn worst_peak(&self) -> f64 {
        self.table[self.worst_index].1
    }
}

/// Evaluates `peak(gust)` for a one-cosine gust at each gradient in `h_grid`
/// and returns the gradient giving the largest peak (first one on ties).
pub fn worst_case_gradient_sweep<F>(h_grid: &[f64], w0: f64, u_inf: f64, mut peak: F) -> Result<GradientSweep>
where
    F: FnMut(&GustSignal) -> Result<f64>,
{
    if h_grid.is_empty() {
        return Err(Error::InvalidParameter("gust-gradient range is empty".into()));
    }
    let mut table = Vec::with_capacity(h_grid.len());
    for &h in h_grid {
        let gust = GustSignal::one_cosine(w0, h, u_inf)?;
        table.push((h, peak(&gust)?));
    }
    let worst_index = table
        .iter()
        .enumerate()
        .fold(0, |best, (i, row)| if row.1 > table[best].1 { i } else { best });
    Ok(GradientSweep { table, worst_index })
}
