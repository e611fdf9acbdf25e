use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::SampledGust;
use crate::error::{Error, Result};
use crate::numerics::{solve_lyapunov, symmetrize};

/// Von Kármán scale constant in `1 + (1.339 L Ω)²`.
const VK_SCALE: f64 = 1.339;

/// Low-frequency section of the fractional-order fit, in normalized
/// frequency `ν = 1.339 L ω / U`.
const HEAD_POLES: [f64; 3] = [1.04709941, 2.38301273, 7.54070494];
const HEAD_ZEROS: [f64; 3] = [1.99856217, 6.19867436, 19.8799262];
/// First tail pole; the tail then repeats pole/zero pairs at two per decade
/// with zero/pole ratio `10^(5/12)` (an average slope of -5/6 in amplitude).
const TAIL_START: f64 = 24.084852188569315;

/// Vertical Von Kármán spectrum parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VonKarmanSpec {
    pub sigma: f64,
    pub length_scale: f64,
    pub u_inf: f64,
}

impl VonKarmanSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::InvalidParameter(format!("turbulence intensity must be >= 0, got {}", self.sigma)));
        }
        if !(self.length_scale.is_finite() && self.length_scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "turbulence length scale must be positive, got {}",
                self.length_scale
            )));
        }
        if !(self.u_inf.is_finite() && self.u_inf > 0.0) {
            return Err(Error::InvalidParameter(format!("freestream speed must be positive, got {}", self.u_inf)));
        }
        Ok(())
    }

    /// One-sided PSD per rad/s; integrates to `σ²` over `ω ∈ [0, ∞)`.
    pub fn psd_omega(&self, omega: f64) -> f64 {
        let t = self.length_scale / self.u_inf;
        let nu = VK_SCALE * t * omega;
        self.sigma * self.sigma * t / PI * (1.0 + 8.0 / 3.0 * nu * nu) / (1.0 + nu * nu).powf(11.0 / 6.0)
    }

    /// One-sided PSD per Hz.
    pub fn psd_hz(&self, f: f64) -> f64 {
        2.0 * PI * self.psd_omega(2.0 * PI * f)
    }
}

/// Rational shaping filter `ẋ = F x + G η`, `w = H x` driven by unit white
/// noise. Real poles and zeros in `ν`, scaled to rad/s by `U / (1.339 L)`.
#[derive(Debug, Clone)]
pub struct VonKarmanFilter {
    pub f: DMatrix<f64>,
    pub g: DVector<f64>,
    pub h: DVector<f64>,
    pub poles: Vec<f64>,
    pub zeros: Vec<f64>,
}

impl VonKarmanFilter {
    /// Filter accurate up to at least `nu_max` in normalized frequency.
    pub fn design(spec: &VonKarmanSpec, nu_max: f64) -> Result<Self> {
        spec.validate()?;
        let rho = 10f64.sqrt();
        let ratio = 10f64.powf(5.0 / 12.0);
        let mut tail_poles = Vec::new();
        let mut tail_zeros = Vec::new();
        let mut p = TAIL_START;
        loop {
            tail_poles.push(p);
            if p * rho > nu_max {
                break;
            }
            tail_zeros.push(p * ratio);
            p *= rho;
        }
        // Strictly proper section first so the output has no feedthrough.
        let last = tail_poles.pop().expect("tail has at least one pole");
        let mut sections: Vec<(f64, Option<f64>)> = vec![(last, None), (1.0, Some((3.0f64 / 8.0).sqrt()))];
        sections.extend(HEAD_POLES.iter().zip(HEAD_ZEROS).map(|(&p, z)| (p, Some(z))));
        sections.extend(tail_poles.iter().zip(&tail_zeros).map(|(&p, &z)| (p, Some(z))));

        let to_rad = spec.u_inf / (VK_SCALE * spec.length_scale);
        let n = sections.len();
        let mut f = DMatrix::zeros(n, n);
        let mut g = DVector::zeros(n);
        // The running signal is c·x + d·η.
        let mut c = DVector::<f64>::zeros(n);
        let mut d = spec.sigma * (spec.length_scale / spec.u_inf).sqrt();
        for (j, &(pole, zero)) in sections.iter().enumerate() {
            let p = pole * to_rad;
            f[(j, j)] = -p;
            for k in 0..n {
                f[(j, k)] += c[k];
            }
            g[j] = d;
            match zero {
                None => {
                    c.fill(0.0);
                    c[j] = p;
                    d = 0.0;
                }
                Some(z) => {
                    let z = z * to_rad;
                    let gain = p / z;
                    c *= gain;
                    c[j] += gain * (z - p);
                    d *= gain;
                }
            }
        }
        debug_assert_eq!(d, 0.0);
        let mut poles: Vec<f64> = sections.iter().map(|s| s.0).collect();
        let mut zeros: Vec<f64> = sections.iter().filter_map(|s| s.1).collect();
        poles.sort_by(f64::total_cmp);
        zeros.sort_by(f64::total_cmp);
        Ok(Self { f, g, h: c, poles, zeros })
    }

    /// One-sided PSD per Hz of the filter output, from the realization.
    pub fn psd_hz(&self, freq: f64) -> f64 {
        let n = self.f.nrows();
        let s = num_complex::Complex64::new(0.0, 2.0 * PI * freq);
        let m = DMatrix::from_fn(n, n, |i, j| {
            let v = -self.f[(i, j)];
            if i == j {
                s + v
            } else {
                num_complex::Complex64::new(v, 0.0)
            }
        });
        let g = self.g.map(|v| num_complex::Complex64::new(v, 0.0));
        let x = m.lu().solve(&g).expect("filter resolvent is regular off the real axis");
        let resp: num_complex::Complex64 = self.h.iter().zip(x.iter()).map(|(h, v)| v * *h).sum();
        2.0 * resp.norm_sqr()
    }

    /// Stationary state covariance.
    pub fn stationary_covariance(&self) -> Result<DMatrix<f64>> {
        let q = &self.g * self.g.transpose();
        solve_lyapunov(&self.f.transpose(), &q)
    }

    pub fn variance(&self) -> Result<f64> {
        let p = self.stationary_covariance()?;
        Ok((self.h.transpose() * p * &self.h)[(0, 0)])
    }
}

fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = symmetrize(m).symmetric_eigen();
    let mut l = eig.eigenvectors.clone();
    for (j, lam) in eig.eigenvalues.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        l.column_mut(j).scale_mut(s);
    }
    l
}

/// Samples a stationary Von Kármán realization on `t = 0, dt, …, duration`.
///
/// The shaping filter is discretized exactly (`Φ = e^{F dt}`, process
/// covariance `P - Φ P Φᵀ` with `P` the stationary covariance) and started
/// from a stationary draw, so there is no start-up transient. Output is a
/// deterministic function of `(spec, dt, duration, seed)`.
pub fn von_karman_realization(spec: &VonKarmanSpec, dt: f64, duration: f64, seed: u64) -> Result<SampledGust> {
    spec.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
    }
    if !(duration >= dt && duration.is_finite()) {
        return Err(Error::InvalidParameter(format!("duration must be at least one step, got {duration}")));
    }
    let n_samples = (duration / dt).round() as usize + 1;
    let min_duration = 200.0 * spec.length_scale / spec.u_inf;
    let warning = (duration < min_duration).then(|| {
        format!("duration {duration} is shorter than 200 L/U = {min_duration}; spectral accuracy is not assured")
    });
    if spec.sigma == 0.0 {
        return Ok(SampledGust {
            dt,
            samples: vec![0.0; n_samples],
            warning,
            seed,
        });
    }

    let nyquist_nu = VK_SCALE * spec.length_scale / spec.u_inf * PI / dt;
    let filter = VonKarmanFilter::design(spec, (10.0 * nyquist_nu).max(100.0))?;
    let phi = (&filter.f * dt).exp();
    let p = filter.stationary_covariance()?;
    let q = &p - &phi * &p * phi.transpose();
    let l_p = psd_sqrt(&p);
    let l_q = psd_sqrt(&q);

    let n = filter.f.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
    let mut x = &l_p * draw(&mut rng);
    let mut samples = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        samples.push(filter.h.dot(&x));
        x = &phi * x + &l_q * draw(&mut rng);
    }
    Ok(SampledGust {
        dt,
        samples,
        warning,
        seed,
    })
}
