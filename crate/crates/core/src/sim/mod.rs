//! Fixed-step RK4 integration of open-loop and MRAC closed-loop runs.

mod metrics;
mod trace;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gusts::GustSignal;
use crate::mrac::{lipschitz_bound, lipschitz_ratio, MracController};
use crate::plant3dof::FullOrderModel;
use crate::romgen::ReducedOrderModel;

pub use metrics::{compute_metrics, GlaMetrics};
pub use trace::SimulationTrace;

/// A state-space plant `x' = A x + B_c u_c + B_g u_d + F(x)`.
pub trait Plant: Sync {
    fn a(&self) -> &DMatrix<f64>;
    fn b_c(&self) -> &DMatrix<f64>;
    fn b_g(&self) -> &DMatrix<f64>;
    fn c_out(&self) -> &DMatrix<f64>;
    /// Adds `F(x)` to `out`.
    fn add_nonlinear(&self, x: &[f64], out: &mut [f64]);
    fn output_labels(&self) -> &[String];
    fn output_is_angle(&self) -> &[bool];

    fn dim(&self) -> usize {
        self.a().nrows()
    }

    fn n_controls(&self) -> usize {
        self.b_c().ncols()
    }

    fn n_gusts(&self) -> usize {
        self.b_g().ncols()
    }

    fn nonlinear(&self, x: &[f64]) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        self.add_nonlinear(x, out.as_mut_slice());
        out
    }
}

impl Plant for FullOrderModel {
    fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    fn b_c(&self) -> &DMatrix<f64> {
        &self.b_c
    }
    fn b_g(&self) -> &DMatrix<f64> {
        &self.b_g
    }
    fn c_out(&self) -> &DMatrix<f64> {
        &self.c_out
    }
    fn add_nonlinear(&self, x: &[f64], out: &mut [f64]) {
        self.nonlinearity.eval_into(x, out);
    }
    fn output_labels(&self) -> &[String] {
        &self.output_labels
    }
    fn output_is_angle(&self) -> &[bool] {
        &self.output_is_angle
    }
}

impl Plant for ReducedOrderModel {
    fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    fn b_c(&self) -> &DMatrix<f64> {
        &self.b_c
    }
    fn b_g(&self) -> &DMatrix<f64> {
        &self.b_g
    }
    fn c_out(&self) -> &DMatrix<f64> {
        &self.c_out
    }
    fn add_nonlinear(&self, x: &[f64], out: &mut [f64]) {
        self.add_f_nr(x, out);
    }
    fn output_labels(&self) -> &[String] {
        &self.output_labels
    }
    fn output_is_angle(&self) -> &[bool] {
        &self.output_is_angle
    }
}

fn default_stride() -> usize {
    1
}

fn default_bound() -> f64 {
    1e8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub dt: f64,
    pub duration: f64,
    /// Include the structural nonlinearity in the plant (and in the reference
    /// model when it asks for it).
    #[serde(default)]
    pub nonlinear: bool,
    /// Log every `log_stride`-th step; the last step is always logged.
    #[serde(default = "default_stride")]
    pub log_stride: usize,
    /// Abort once the augmented state norm exceeds this.
    #[serde(default = "default_bound")]
    pub divergence_bound: f64,
    /// Track the Lipschitz ratio of closed-loop runs.
    #[serde(default)]
    pub monitor_lipschitz: bool,
    /// Initial plant state; empty means zero.
    #[serde(default)]
    pub initial_state: Vec<f64>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            duration: 1100.0,
            nonlinear: false,
            log_stride: 1,
            divergence_bound: 1e8,
            monitor_lipschitz: false,
            initial_state: Vec::new(),
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {}", self.dt)));
        }
        if !(self.duration >= self.dt && self.duration.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "duration must be at least one step, got {} with dt = {}",
                self.duration, self.dt
            )));
        }
        if self.log_stride == 0 {
            return Err(Error::InvalidParameter("log stride must be at least 1".into()));
        }
        if !(self.divergence_bound > 0.0) {
            return Err(Error::InvalidParameter("divergence bound must be positive".into()));
        }
        Ok((self.duration / self.dt).round() as usize)
    }

    /// Warns when `dt > 0.1 / max|λ(A)|`; returns whether the step passes.
    pub fn check_step(&self, a: &DMatrix<f64>) -> bool {
        let rho = crate::numerics::eigenvalues(a).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let ok = rho == 0.0 || self.dt <= 0.1 / rho;
        if !ok {
            log::warn!("dt = {} exceeds 0.1 / max|λ| = {:.4e}", self.dt, 0.1 / rho);
        }
        ok
    }

    fn x0(&self, n: usize) -> Result<Vec<f64>> {
        if self.initial_state.is_empty() {
            return Ok(vec![0.0; n]);
        }
        if self.initial_state.len() != n {
            return Err(Error::dim(format!("initial state has {} entries, plant has {n}", self.initial_state.len())));
        }
        Ok(self.initial_state.clone())
    }
}

struct Rk4 {
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Rk4 {
    fn new(n: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
        }
    }

    fn step<F: FnMut(f64, &[f64], &mut [f64])>(&mut self, f: &mut F, t: f64, z: &mut [f64], dt: f64) {
        let [k1, k2, k3, k4] = &mut self.k;
        let tmp = &mut self.tmp;
        f(t, z, k1);
        for i in 0..z.len() {
            tmp[i] = z[i] + 0.5 * dt * k1[i];
        }
        f(t + 0.5 * dt, tmp, k2);
        for i in 0..z.len() {
            tmp[i] = z[i] + 0.5 * dt * k2[i];
        }
        f(t + 0.5 * dt, tmp, k3);
        for i in 0..z.len() {
            tmp[i] = z[i] + dt * k3[i];
        }
        f(t + dt, tmp, k4);
        for i in 0..z.len() {
            z[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
}

fn mat_vec_add(m: &DMatrix<f64>, v: &[f64], out: &mut [f64]) {
    for j in 0..m.ncols() {
        let vj = v[j];
        if vj != 0.0 {
            for (i, o) in out.iter_mut().enumerate() {
                *o += m[(i, j)] * vj;
            }
        }
    }
}

fn outputs<P: Plant + ?Sized>(plant: &P, x: &[f64]) -> Vec<f64> {
    let c = plant.c_out();
    (0..c.nrows()).map(|i| (0..c.ncols()).map(|j| c[(i, j)] * x[j]).sum()).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn empty_trace<P: Plant + ?Sized>(plant: &P) -> SimulationTrace {
    SimulationTrace {
        output_labels: plant.output_labels().to_vec(),
        output_is_angle: plant.output_is_angle().to_vec(),
        ..Default::default()
    }
}

/// Open-loop run with an optional prescribed control signal `u_c(t)`.
pub fn integrate_open_loop<P: Plant + ?Sized>(
    plant: &P,
    gust: &GustSignal,
    control: Option<&dyn Fn(f64) -> Vec<f64>>,
    cfg: &SimulationConfig,
) -> Result<SimulationTrace> {
    let steps = cfg.validate()?;
    cfg.check_step(plant.a());
    let n = plant.dim();
    let m = plant.n_controls();
    let g = plant.n_gusts();
    let u_at = |t: f64| -> Vec<f64> {
        match control {
            Some(c) => c(t),
            None => vec![0.0; m],
        }
    };
    let mut f = |t: f64, x: &[f64], dx: &mut [f64]| {
        dx.fill(0.0);
        mat_vec_add(plant.a(), x, dx);
        mat_vec_add(plant.b_c(), &u_at(t), dx);
        mat_vec_add(plant.b_g(), &vec![gust.eval(t); g], dx);
        if cfg.nonlinear {
            plant.add_nonlinear(x, dx);
        }
    };
    let mut x = cfg.x0(n)?;
    let mut trace = empty_trace(plant);
    let log = |trace: &mut SimulationTrace, t: f64, x: &[f64]| {
        trace.t.push(t);
        trace.x.push(x.to_vec());
        trace.u_c.push(u_at(t));
        trace.u_d.push(vec![gust.eval(t); g]);
        trace.outputs.push(outputs(plant, x));
    };
    log(&mut trace, 0.0, &x);
    let mut rk = Rk4::new(n);
    for k in 0..steps {
        let t = k as f64 * cfg.dt;
        rk.step(&mut f, t, &mut x, cfg.dt);
        let t1 = (k + 1) as f64 * cfg.dt;
        let nx = norm(&x);
        if !nx.is_finite() || nx > cfg.divergence_bound {
            log(&mut trace, t1, &x);
            return Err(Error::Diverged {
                time: t1,
                norm: nx,
                partial: Box::new(trace),
            });
        }
        if (k + 1) % cfg.log_stride == 0 || k + 1 == steps {
            log(&mut trace, t1, &x);
        }
    }
    Ok(trace)
}

/// MRAC closed loop: plant, reference model and adaptive gains integrated
/// together with one RK4 step on `z = [x, x_m, vec θ]`.
pub fn integrate_closed_loop<P: Plant + ?Sized>(
    plant: &P,
    ctrl: &MracController,
    gust: &GustSignal,
    cfg: &SimulationConfig,
) -> Result<SimulationTrace> {
    let steps = cfg.validate()?;
    cfg.check_step(plant.a());
    let n = plant.dim();
    let m = plant.n_controls();
    let g = plant.n_gusts();
    let nt = (n + m) * m;
    let refm = &ctrl.reference;
    if refm.a_m.nrows() != n || ctrl.theta0.shape() != (n + m, m) || ctrl.k0.shape() != (m, n) {
        return Err(Error::dim(format!("controller does not fit a plant with {n} states and {m} controls")));
    }
    let r: Vec<f64> = ctrl.command.iter().copied().collect();
    // P B_c, n x m, is constant.
    let pb = &ctrl.design.p * plant.b_c();
    let gamma = &ctrl.design.gamma;
    let ref_nonlinear = cfg.nonlinear && refm.nonlinear;
    let l_f = lipschitz_bound(&ctrl.design);

    let control = |x: &[f64], th: &[f64]| -> Vec<f64> {
        (0..m)
            .map(|j| {
                let col = &th[j * (n + m)..(j + 1) * (n + m)];
                let mut u: f64 = col[..n].iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
                    + col[n..].iter().zip(&r).map(|(a, b)| a * b).sum::<f64>();
                u += (0..n).map(|i| ctrl.k0[(j, i)] * x[i]).sum::<f64>();
                u
            })
            .collect()
    };

    let mut f = |t: f64, z: &[f64], dz: &mut [f64]| {
        let (x, rest) = z.split_at(n);
        let (xm, th) = rest.split_at(n);
        dz.fill(0.0);
        let ud = vec![gust.eval(t); g];
        let u = control(x, th);
        {
            let dx = &mut dz[..n];
            mat_vec_add(plant.a(), x, dx);
            mat_vec_add(plant.b_c(), &u, dx);
            mat_vec_add(plant.b_g(), &ud, dx);
            if cfg.nonlinear {
                plant.add_nonlinear(x, dx);
            }
        }
        {
            let dxm = &mut dz[n..2 * n];
            mat_vec_add(&refm.a_m, xm, dxm);
            mat_vec_add(&refm.b_m, &r, dxm);
            mat_vec_add(plant.b_g(), &ud, dxm);
            if ref_nonlinear {
                plant.add_nonlinear(xm, dxm);
            }
        }
        // θ' = -Γ φ (eᵀ P B_c)
        let epb: Vec<f64> = (0..m)
            .map(|j| (0..n).map(|i| (x[i] - xm[i]) * pb[(i, j)]).sum())
            .collect();
        if epb.iter().all(|&v| v == 0.0) {
            return;
        }
        let phi: Vec<f64> = x.iter().chain(&r).copied().collect();
        let mut gphi = vec![0.0; n + m];
        mat_vec_add(gamma, &phi, &mut gphi);
        let dth = &mut dz[2 * n..];
        for j in 0..m {
            for k in 0..n + m {
                dth[j * (n + m) + k] = -gphi[k] * epb[j];
            }
        }
    };

    let mut z = cfg.x0(n)?;
    z.extend_from_slice(&z.clone());
    z.extend(ctrl.theta0.iter().copied());
    debug_assert_eq!(z.len(), 2 * n + nt);

    let mut trace = empty_trace(plant);
    let mut warned = false;
    // A linear run has no differential nonlinearity to bound.
    let ratio_at = |z: &[f64]| if cfg.nonlinear { lipschitz_ratio(plant, &z[..n], &z[n..2 * n]) } else { 0.0 };
    let log = |trace: &mut SimulationTrace, t: f64, z: &[f64]| {
        let (x, rest) = z.split_at(n);
        let (xm, th) = rest.split_at(n);
        trace.t.push(t);
        trace.x.push(x.to_vec());
        trace.x_m.push(xm.to_vec());
        trace.theta.push(DMatrix::from_column_slice(n + m, m, th));
        trace.u_c.push(control(x, th));
        trace.u_d.push(vec![gust.eval(t); g]);
        trace.outputs.push(outputs(plant, x));
        if cfg.monitor_lipschitz {
            trace.lipschitz_ratio.push(ratio_at(z));
        }
    };
    log(&mut trace, 0.0, &z);
    let mut rk = Rk4::new(z.len());
    for k in 0..steps {
        let t = k as f64 * cfg.dt;
        rk.step(&mut f, t, &mut z, cfg.dt);
        let t1 = (k + 1) as f64 * cfg.dt;
        let nz = norm(&z);
        if !nz.is_finite() || nz > cfg.divergence_bound {
            log(&mut trace, t1, &z);
            return Err(Error::Diverged {
                time: t1,
                norm: nz,
                partial: Box::new(trace),
            });
        }
        if (k + 1) % cfg.log_stride == 0 || k + 1 == steps {
            log(&mut trace, t1, &z);
        }
        if cfg.monitor_lipschitz && !warned {
            let ratio = ratio_at(&z);
            if ratio > l_f {
                warned = true;
                log::warn!("Lipschitz ratio {ratio:.3e} exceeds L_F = {l_f:.3e} at t = {t1}");
            }
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mrac::{build_reference_model, ideal_gains, DampingSpec, LyapunovDesign, QPreset};
    use crate::plant3dof::{assemble_fom, AerofoilParams};
    use crate::romgen::{reduce, ModeCriteria};

    fn rom() -> ReducedOrderModel {
        reduce(&assemble_fom(&AerofoilParams::default_section()).unwrap(), &ModeCriteria::default()).unwrap()
    }

    fn gust() -> GustSignal {
        GustSignal::one_cosine(0.14, 55.0, 1.0).unwrap()
    }

    fn cfg(dt: f64, duration: f64) -> SimulationConfig {
        SimulationConfig {
            dt,
            duration,
            ..Default::default()
        }
    }

    #[test]
    fn zero_input_gives_zero_trace() {
        let r = rom();
        let tr = integrate_open_loop(&r, &GustSignal::Zero, None, &cfg(0.05, 10.0)).unwrap();
        assert_eq!(tr.len(), 201);
        assert!(tr.outputs.iter().flatten().all(|&y| y == 0.0));
    }

    #[test]
    fn linear_response_scales_with_amplitude() {
        let r = rom();
        let c = cfg(0.05, 150.0);
        let a = integrate_open_loop(&r, &gust(), None, &c).unwrap();
        let b = integrate_open_loop(&r, &gust().scaled(3.0), None, &c).unwrap();
        for (ya, yb) in a.outputs.iter().zip(&b.outputs) {
            for (p, q) in ya.iter().zip(yb) {
                assert!((3.0 * p - q).abs() <= 1e-12 * (1.0 + q.abs()));
            }
        }
    }

    #[test]
    fn rk4_matches_matrix_exponential_for_free_decay() {
        let r = rom();
        let x0: Vec<f64> = (0..r.dim()).map(|k| 0.01 * (k as f64 + 1.0)).collect();
        let c = SimulationConfig {
            initial_state: x0.clone(),
            ..cfg(0.01, 20.0)
        };
        let tr = integrate_open_loop(&r, &GustSignal::Zero, None, &c).unwrap();
        let exact = (&r.a * 20.0).exp() * DVector::from_vec(x0);
        let last = tr.x.last().unwrap();
        for (a, b) in last.iter().zip(exact.iter()) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn richardson_ratio_is_fourth_order() {
        let r = rom();
        let end = |dt: f64| {
            let c = SimulationConfig {
                nonlinear: true,
                ..cfg(dt, 120.0)
            };
            integrate_open_loop(&r, &gust(), None, &c).unwrap().x.last().unwrap().clone()
        };
        let (a, b, c) = (end(0.04), end(0.02), end(0.01));
        let num: f64 = a.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        let den: f64 = b.iter().zip(&c).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        let ratio = num / den;
        assert!((10.0..=24.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn ideal_initial_gains_track_reference_exactly_when_matched() {
        let r = rom();
        // A_m built by state feedback on the ROM itself is always matchable.
        let refm = crate::mrac::matched_modal_reference(&r, &DampingSpec::default()).unwrap();
        let design = LyapunovDesign::new(&refm, QPreset::Aerofoil.matrix(8).unwrap(), 1.0, 1).unwrap();
        let gains = ideal_gains(&r.a, &r.b_c, &DMatrix::zeros(1, 8), &refm).unwrap();
        assert!(gains.exact);
        let ctrl = MracController::new(refm, design, 1).with_initial_gains(gains.theta_star());
        let tr = integrate_closed_loop(&r, &ctrl, &gust(), &cfg(0.02, 200.0)).unwrap();
        let e = tr.error_norms().into_iter().fold(0.0, f64::max);
        assert!(e < 1e-9, "{e}");
    }

    #[test]
    fn zero_adaptation_with_zero_gains_reproduces_open_loop() {
        let r = rom();
        let refm = build_reference_model(&r, &DampingSpec::default()).unwrap();
        let design = LyapunovDesign::new(&refm, QPreset::Aerofoil.matrix(8).unwrap(), 0.0, 1).unwrap();
        let ctrl = MracController::new(refm, design, 1);
        let c = cfg(0.05, 150.0);
        let closed = integrate_closed_loop(&r, &ctrl, &gust(), &c).unwrap();
        let open = integrate_open_loop(&r, &gust(), None, &c).unwrap();
        assert_eq!(closed.outputs, open.outputs);
    }

    #[test]
    fn divergence_returns_partial_trace() {
        let r = rom();
        let c = SimulationConfig {
            initial_state: vec![1.0; 8],
            divergence_bound: 1e-3,
            ..cfg(0.01, 10.0)
        };
        match integrate_open_loop(&r, &GustSignal::Zero, None, &c) {
            Err(Error::Diverged { time, partial, .. }) => {
                assert_eq!(partial.t.last().copied(), Some(time));
                assert!(time > 0.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_step_is_rejected() {
        let r = rom();
        assert!(integrate_open_loop(&r, &gust(), None, &cfg(0.0, 1.0)).is_err());
    }

    #[test]
    fn step_heuristic_and_short_duration() {
        let r = rom();
        assert!(cfg(0.01, 1.0).check_step(&r.a));
        assert!(!cfg(10.0, 100.0).check_step(&r.a));
        assert!(integrate_open_loop(&r, &gust(), None, &cfg(0.1, 0.05)).is_err());
    }

    // Plunge hardening pulls the plunge peak down and pushes energy into
    // pitch, so with both cubic terms the pitch peak rises; pitch hardening on
    // its own lowers it.
    #[test]
    fn hardening_lowers_peaks_of_the_stiffened_dof() {
        let lin = cfg(0.02, 400.0);
        let nl = SimulationConfig { nonlinear: true, ..lin.clone() };
        let peaks = |p: &AerofoilParams, k: &str| {
            let f = assemble_fom(p).unwrap();
            let a = integrate_open_loop(&f, &gust(), None, &lin).unwrap();
            let b = integrate_open_loop(&f, &gust(), None, &nl).unwrap();
            let i = a.output_index(k).unwrap();
            (a.peak_abs(i), b.peak_abs(i))
        };
        let (l, n) = peaks(&AerofoilParams::default_section(), "plunge");
        assert!(n < l, "plunge {n} vs {l}");
        let mut pitch_only = AerofoilParams::default_section();
        pitch_only.stiffness.k_xi_3 = 0.0;
        let (l, n) = peaks(&pitch_only, "pitch");
        assert!(n < l, "pitch {n} vs {l}");
    }

    #[test]
    fn free_decay_respects_log_norm_and_spectral_rate() {
        let r = rom();
        let sym = (&r.a + r.a.transpose()) * 0.5;
        let mu = sym.symmetric_eigenvalues().max();
        let alpha = crate::numerics::eigenvalues(&r.a).iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        let x0: Vec<f64> = (0..r.dim()).map(|k| 1.0 / (k as f64 + 1.0)).collect();
        let n0 = norm(&x0);
        let c = SimulationConfig {
            initial_state: x0,
            log_stride: 10,
            ..cfg(0.01, 1600.0)
        };
        let tr = integrate_open_loop(&r, &GustSignal::Zero, None, &c).unwrap();
        for (t, x) in tr.t.iter().zip(&tr.x) {
            assert!(norm(x) <= 1.1 * (mu * t).exp() * n0, "t = {t}");
        }
        // late-time envelope decays at the slowest modal rate
        let env = |t0: f64, t1: f64| {
            tr.t.iter().zip(&tr.x).filter(|(t, _)| **t >= t0 && **t < t1).map(|(_, x)| norm(x)).fold(0.0, f64::max)
        };
        let rate = (env(1500.0, 1600.0) / env(700.0, 800.0)).ln() / 800.0;
        assert!((rate - alpha).abs() <= 0.1 * alpha.abs(), "{rate} vs {alpha}");
    }

    fn adaptive(gamma: f64) -> MracController {
        let r = rom();
        let refm = build_reference_model(&r, &DampingSpec::default()).unwrap();
        let design = LyapunovDesign::new(&refm, QPreset::Aerofoil.matrix(8).unwrap(), gamma, 1).unwrap();
        MracController::new(refm, design, 1)
    }

    #[test]
    fn closed_loop_richardson_ratio() {
        let r = rom();
        let ctrl = adaptive(1.0);
        let end = |dt: f64| {
            let tr = integrate_closed_loop(&r, &ctrl, &gust(), &cfg(dt, 120.0)).unwrap();
            let mut z = tr.x.last().unwrap().clone();
            z.extend(tr.x_m.last().unwrap());
            z.extend(tr.theta.last().unwrap().iter());
            z
        };
        let (a, b, c) = (end(0.04), end(0.02), end(0.01));
        let d = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
        let ratio = d(&a, &b) / d(&b, &c);
        assert!((10.0..=24.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn gains_move_with_the_gust_and_then_settle() {
        let r = rom();
        let ctrl = adaptive(1.0);
        let c = SimulationConfig { log_stride: 10, ..cfg(0.01, 700.0) };
        let tr = integrate_closed_loop(&r, &ctrl, &gust(), &c).unwrap();
        let drift: Vec<f64> = tr.theta.iter().map(|th| (th - &tr.theta[0]).norm()).collect();
        let gust_end = 110.0;
        // θ' changes sign with e, so the drift wobbles; most of it still
        // accrues while the gust acts.
        let at_exit = drift[tr.t.iter().position(|&t| t >= gust_end).unwrap()];
        assert!(at_exit >= 0.5 * drift.last().unwrap(), "{at_exit}");
        let rates: Vec<(f64, f64)> = tr.t.windows(2).zip(tr.theta.windows(2)).map(|(t, th)| (t[1], (&th[1] - &th[0]).norm() / (t[1] - t[0]))).collect();
        let peak = rates.iter().map(|r| r.1).fold(0.0, f64::max);
        let late = rates.iter().filter(|r| r.0 >= gust_end + 5.0 * gust_end).map(|r| r.1).fold(0.0, f64::max);
        assert!(late < 0.01 * peak, "{late} vs {peak}");
    }
}
