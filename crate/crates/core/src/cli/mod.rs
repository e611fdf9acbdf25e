//! Batch front end: `rom-build`, `simulate`, `sweep`, `gust-gen`, `validate`.
//!
//! Exit codes: 0 success, 2 a validation check failed, 3 configuration or
//! model error, 4 the simulation diverged.

mod config;
mod output;

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use rayon::prelude::*;

pub use config::{
    ControllerConfig, GustConfig, Grid, InitialGains, PlantConfig, PlantSource, QSpec, ReferenceKind, RunConfig,
    SweepConfig, ValidationConfig, RUN_SCHEMA_VERSION,
};
use output::{gains_csv, metrics_csv, plot_script, Curve, OutputDir};

use crate::error::{Error, Result};
use crate::gusts::{welch_psd, GustSignal, VonKarmanSpec};
use crate::mrac::{
    build_reference_model, ideal_gains, lipschitz_bound, lipschitz_margin, lyapunov_certificate,
    matched_modal_reference, minimum_phase_correct, CertificateMode, DampingSpec, IdealGains, LipschitzMonitor,
    LyapunovDesign, MracController,
};
use crate::numerics::transmission_zeros;
use crate::plant3dof::{assemble_fom, AerofoilParams, FullOrderModel, PolynomialNonlinearity};
use crate::plantio::{file_sha256, load_plant, load_rom, save_rom};
use crate::romgen::{reduce, validate_rom, ReducedOrderModel};
use crate::sim::{compute_metrics, integrate_closed_loop, integrate_open_loop, GlaMetrics, SimulationTrace};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_DIVERGED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "mrac-gla", version, about = "MRAC gust load alleviation on nonlinear aeroelastic ROMs")]
pub struct Cli {
    /// Run configuration (TOML); built-in defaults when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `out` in the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for stochastic gusts; overrides `seed` in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Concurrent sweep points.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepAxis {
    Gamma,
    GustGradient,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reduce the plant, check the ROM against the full model and save it.
    RomBuild,
    /// Open- and closed-loop runs under the configured gust.
    Simulate,
    /// Repeat `simulate` over a grid of adaptation rates or gust gradients.
    Sweep {
        #[arg(value_enum)]
        axis: SweepAxis,
    },
    /// Write the configured gust signal (and its spectrum for turbulence).
    GustGen,
    /// ROM fidelity, Lyapunov certificate and Lipschitz monitor checks.
    Validate,
}

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    ValidationFailed,
}

pub fn exit_code(result: &Result<Status>) -> i32 {
    match result {
        Ok(Status::Ok) => EXIT_OK,
        Ok(Status::ValidationFailed) => EXIT_VALIDATION,
        Err(Error::Diverged { .. }) => EXIT_DIVERGED,
        Err(_) => EXIT_CONFIG,
    }
}

/// Parses nothing; resolves the config from `cli` and runs the subcommand.
pub fn run(cli: &Cli) -> Result<Status> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let out = cli.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    cfg.out = Some(out.clone());
    let dir = OutputDir::create(&out)?;
    dir.write("resolved_config.toml", &resolved_header(&cfg)?)?;
    let workers = cli.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        return Err(Error::Config("--workers must be at least 1".into()));
    }
    match cli.command {
        Command::RomBuild => cmd_rom_build(&cfg, &dir),
        Command::Simulate => cmd_simulate(&cfg, &dir),
        Command::Sweep { axis } => cmd_sweep(&cfg, &dir, axis, workers),
        Command::GustGen => cmd_gust_gen(&cfg, &dir),
        Command::Validate => cmd_validate(&cfg, &dir),
    }
}

fn resolved_header(cfg: &RunConfig) -> Result<String> {
    let mut s = format!("# mrac-gla {} resolved configuration\n", env!("CARGO_PKG_VERSION"));
    if let Some(p) = &cfg.plant.params {
        let _ = writeln!(s, "# plant.params sha256 = {}", file_sha256(p)?);
    }
    if let Some(p) = &cfg.plant.bundle {
        let _ = writeln!(s, "# plant.bundle sha256 = {}", file_sha256(p)?);
    }
    s.push_str(&cfg.to_toml_string());
    Ok(s)
}

/// Plant, ROM and controller as configured.
pub struct Pipeline {
    pub fom: FullOrderModel,
    pub rom: ReducedOrderModel,
    pub controller: MracController,
    pub ideal: IdealGains,
}

pub fn load_fom(cfg: &RunConfig) -> Result<FullOrderModel> {
    match cfg.plant.source {
        PlantSource::Aerofoil => {
            let mut p = match &cfg.plant.params {
                Some(path) => AerofoilParams::load(path)?,
                None => AerofoilParams::default_section(),
            };
            if let Some(u) = cfg.plant.reduced_velocity {
                p = p.with_reduced_velocity(u);
                p.validate()?;
            }
            assemble_fom(&p)
        }
        PlantSource::Bundle => {
            let path = cfg.plant.bundle.as_ref().ok_or_else(|| Error::Config("plant.bundle is not set".into()))?;
            let b = load_plant(path)?;
            let n = b.a.nrows();
            FullOrderModel::new(
                b.a,
                b.b_c,
                b.b_g,
                b.c_out,
                b.nonlinearity.unwrap_or_else(|| PolynomialNonlinearity::zero(n)),
                (0..n).map(|i| format!("x{i}")).collect(),
                b.output_labels,
                b.output_is_angle,
            )
        }
    }
}

pub fn load_or_reduce(cfg: &RunConfig, fom: &FullOrderModel) -> Result<ReducedOrderModel> {
    if let Some(path) = &cfg.plant.rom_cache {
        let loaded = load_rom(path)?;
        if loaded.stale == Some(true) {
            log::warn!("using stale ROM {}", path.display());
        }
        return Ok(loaded.rom);
    }
    let mut rom = reduce(fom, &cfg.rom)?;
    if let Some(p) = &cfg.plant.params {
        rom.source_hash = Some(file_sha256(p)?);
    }
    Ok(rom)
}

pub fn build_controller(c: &ControllerConfig, rom: &ReducedOrderModel, gamma: f64) -> Result<(MracController, IdealGains)> {
    let (n, m) = rom.b_c.shape();
    let spec = DampingSpec {
        factor: c.damping_factor,
        real_factor: c.real_factor,
        nonlinear: c.reference_nonlinear,
        ..DampingSpec::default()
    };
    let mut refm = match c.reference {
        ReferenceKind::Modal => build_reference_model(rom, &spec)?,
        ReferenceKind::MatchedModal => matched_modal_reference(rom, &spec)?,
    };
    if let Some(bm) = &c.b_m {
        if bm.len() != n * m {
            return Err(Error::Config(format!("controller.b_m has {} entries, expected {n} x {m}", bm.len())));
        }
        refm.b_m = DMatrix::from_row_slice(n, m, bm);
    }
    let q = match &c.q {
        QSpec::Preset(p) => p.matrix(n)?,
        QSpec::Diagonal(d) => {
            if d.len() != n {
                return Err(Error::Config(format!("controller.q has {} entries for {n} states", d.len())));
            }
            DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d))
        }
    };
    let design = LyapunovDesign::with_mode(&refm, q, gamma, m, c.gamma_mode)?;
    let ideal = ideal_gains(&rom.a, &rom.b_c, &DMatrix::zeros(m, n), &refm)?;
    let mut ctrl = MracController::new(refm, design, m);
    if ideal.exact {
        ctrl = ctrl.with_theta_star(ideal.theta_star());
    }
    if c.initial_gains == InitialGains::Ideal {
        if !ideal.exact {
            log::warn!("θ(0) = θ* requested but matching residual is {:.3e}", ideal.residual);
        }
        ctrl = ctrl.with_initial_gains(ideal.theta_star());
    }
    Ok((ctrl, ideal))
}

pub fn build_pipeline(cfg: &RunConfig) -> Result<Pipeline> {
    let fom = load_fom(cfg)?;
    let rom = load_or_reduce(cfg, &fom)?;
    let (controller, ideal) = build_controller(&cfg.controller, &rom, cfg.controller.gamma)?;
    Ok(Pipeline {
        fom,
        rom,
        controller,
        ideal,
    })
}

fn metric_index(trace: &SimulationTrace, name: &str) -> Result<usize> {
    trace
        .output_index(name)
        .ok_or_else(|| Error::Config(format!("controller.metric_output `{name}` is not an output of the plant")))
}

/// One closed-loop point: the trace plus its metrics against `open`.
struct PointResult {
    closed: SimulationTrace,
    metrics: GlaMetrics,
}

fn run_point(
    rom: &ReducedOrderModel,
    ctrl: &MracController,
    gust: &GustSignal,
    cfg: &RunConfig,
    open: &SimulationTrace,
) -> Result<PointResult> {
    let closed = integrate_closed_loop(rom, ctrl, gust, &cfg.simulation)?;
    let metrics = compute_metrics(open, &closed)?;
    Ok(PointResult { closed, metrics })
}

const SUMMARY_HEADER: &str = "status,peak_open,peak_closed,reduction_pct,rms_reduction_pct,max_flap_deg,max_control";

fn summary_fields(r: &Result<PointResult>, k: usize, angle: bool) -> String {
    match r {
        Ok(p) => {
            let m = &p.metrics;
            let scale = if angle { 180.0 / std::f64::consts::PI } else { 1.0 };
            format!(
                "ok,{},{},{},{},{},{}",
                m.peak_open[k] * scale,
                m.peak_closed[k] * scale,
                m.peak_reduction_pct[k],
                m.rms_reduction_pct[k],
                m.max_flap.map_or(f64::NAN, f64::to_degrees),
                m.max_control
            )
        }
        Err(e) => {
            let status = match e {
                Error::Diverged { .. } => "diverged",
                _ => "failed",
            };
            format!("{status},NaN,NaN,NaN,NaN,NaN,NaN")
        }
    }
}

fn trace_plot(trace: &SimulationTrace, files: &[(&str, &str)], title: &str) -> String {
    let names: Vec<String> = (0..trace.output_labels.len()).map(|k| trace.column_name(k)).collect();
    let panels: Vec<(&str, Vec<Curve<'_>>)> = names
        .iter()
        .map(|n| {
            let curves = files
                .iter()
                .map(|(file, label)| Curve {
                    file,
                    x: "t",
                    y: n,
                    title: label,
                })
                .collect();
            (n.as_str(), curves)
        })
        .collect();
    plot_script(title, "t", &panels)
}

fn write_divergence(dir: &OutputDir, name: &str, e: &Error) -> Result<()> {
    if let Error::Diverged { partial, .. } = e {
        dir.write(name, &partial.to_csv())?;
    }
    Ok(())
}

fn cmd_simulate(cfg: &RunConfig, dir: &OutputDir) -> Result<Status> {
    let pipe = build_pipeline(cfg)?;
    let gust = cfg.gust.signal(&cfg.simulation, cfg.seed)?;
    let open = match integrate_open_loop(&pipe.rom, &gust, None, &cfg.simulation) {
        Ok(t) => t,
        Err(e) => {
            write_divergence(dir, "open_loop_partial.csv", &e)?;
            return Err(e);
        }
    };
    let k = metric_index(&open, &cfg.controller.metric_output)?;
    let mut closed = match integrate_closed_loop(&pipe.rom, &pipe.controller, &gust, &cfg.simulation) {
        Ok(t) => t,
        Err(e) => {
            dir.write("open_loop.csv", &open.to_csv())?;
            write_divergence(dir, "closed_loop_partial.csv", &e)?;
            return Err(e);
        }
    };
    let metrics = compute_metrics(&open, &closed)?;

    let mut report = String::new();
    let _ = writeln!(report, "plant states {} -> ROM states {}", pipe.fom.dim(), pipe.rom.dim());
    let _ = writeln!(report, "matching residual {:.6e} (exact: {})", pipe.ideal.residual, pipe.ideal.exact);
    let _ = writeln!(report, "gamma {}", cfg.controller.gamma);
    let _ = writeln!(report, "metric output {}", cfg.controller.metric_output);
    report.push('\n');
    report.push_str(&metrics.report());

    let mode = if pipe.controller.theta_star.is_some() && cfg.controller.gamma > 0.0 {
        CertificateMode::Full
    } else {
        CertificateMode::ErrorOnly
    };
    let cert = lyapunov_certificate(&closed, &pipe.controller.design, pipe.controller.theta_star.as_ref(), mode)?;
    cert.attach(&mut closed);
    dir.write("certificate.txt", &cert.report())?;

    if cfg.simulation.monitor_lipschitz {
        let mon = LipschitzMonitor::from_trace(&pipe.controller.design, &closed)?;
        dir.write("lipschitz.txt", &monitor_report(&mon))?;
    }
    if cfg.controller.zero_correction {
        report.push('\n');
        report.push_str(&zero_report(&pipe.rom, k)?);
    }

    dir.write("open_loop.csv", &open.to_csv())?;
    dir.write("closed_loop.csv", &closed.to_csv())?;
    dir.write("gains.csv", &gains_csv(&closed))?;
    dir.write("metrics.csv", &metrics_csv(&metrics))?;
    let angle = open.output_is_angle[k];
    let point = Ok(PointResult { closed, metrics });
    dir.write(
        "summary.csv",
        &format!("gamma,{SUMMARY_HEADER}\n{},{}\n", cfg.controller.gamma, summary_fields(&point, k, angle)),
    )?;
    dir.write("report.txt", &report)?;
    dir.write(
        "simulate.gp",
        &trace_plot(&open, &[("open_loop.csv", "open loop"), ("closed_loop.csv", "MRAC")], "open vs closed loop"),
    )?;
    Ok(Status::Ok)
}

fn monitor_report(m: &LipschitzMonitor) -> String {
    format!(
        "L_F {:.6e}\nmax ratio {:.6e}\nviolated {}\nfirst violation t {}\n",
        m.l_f,
        m.max_ratio,
        m.violated,
        m.first_violation_time.map_or_else(|| "none".into(), |t| t.to_string())
    )
}

fn zero_report(rom: &ReducedOrderModel, k: usize) -> Result<String> {
    let c = rom.c_out.rows(k, 1).into_owned();
    let zeros = transmission_zeros(&rom.a, &rom.b_c, &c, &DMatrix::zeros(1, rom.b_c.ncols()))?;
    let mut s = String::from("metric channel zeros:");
    for z in &zeros {
        let _ = write!(s, " {:.6}{:+.6}i", z.re, z.im);
    }
    s.push('\n');
    if zeros.iter().any(|z| z.re >= 0.0) {
        let m = minimum_phase_correct(&rom.a, &rom.b_c, &c)?;
        s.push_str("corrected zeros:");
        for z in &m.zeros_after {
            let _ = write!(s, " {:.6}{:+.6}i", z.re, z.im);
        }
        s.push('\n');
    } else {
        s.push_str("channel is minimum phase; no correction applied\n");
    }
    Ok(s)
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))
}

fn cmd_sweep(cfg: &RunConfig, dir: &OutputDir, axis: SweepAxis, workers: usize) -> Result<Status> {
    let fom = load_fom(cfg)?;
    let rom = load_or_reduce(cfg, &fom)?;
    let pool = pool(workers)?;
    let points_dir = dir.sub("points")?;
    let (name, grid) = match axis {
        SweepAxis::Gamma => ("gamma", cfg.sweep.gamma.points()?),
        SweepAxis::GustGradient => ("h_g", cfg.sweep.gust_gradient.points()?),
    };

    // Every point needs its own open-loop baseline only on the gradient axis.
    let shared_open = match axis {
        SweepAxis::Gamma => {
            let gust = cfg.gust.signal(&cfg.simulation, cfg.seed)?;
            Some((integrate_open_loop(&rom, &gust, None, &cfg.simulation)?, gust))
        }
        SweepAxis::GustGradient => None,
    };
    let (w_gmax, u_inf) = match (&axis, &cfg.gust) {
        (SweepAxis::GustGradient, GustConfig::OneCosine { w_gmax, u_inf, .. }) => (*w_gmax, *u_inf),
        (SweepAxis::GustGradient, _) => {
            return Err(Error::Config("gust-gradient sweep needs a one-cosine [gust]".into()));
        }
        _ => (0.0, 1.0),
    };

    let results: Vec<(Result<SimulationTrace>, Result<PointResult>)> = pool.install(|| {
        grid.par_iter()
            .map(|&v| match axis {
                SweepAxis::Gamma => {
                    let (open, gust) = shared_open.as_ref().expect("shared baseline");
                    let r = build_controller(&cfg.controller, &rom, v)
                        .and_then(|(ctrl, _)| run_point(&rom, &ctrl, gust, cfg, open));
                    (Ok(SimulationTrace::default()), r)
                }
                SweepAxis::GustGradient => {
                    let gust = match GustSignal::one_cosine(w_gmax, v, u_inf) {
                        Ok(g) => g,
                        Err(e) => return (Err(e), Err(Error::Config("invalid gust".into()))),
                    };
                    let open = integrate_open_loop(&rom, &gust, None, &cfg.simulation);
                    let r = match &open {
                        Ok(o) => build_controller(&cfg.controller, &rom, cfg.controller.gamma)
                            .and_then(|(ctrl, _)| run_point(&rom, &ctrl, &gust, cfg, o)),
                        Err(_) => Err(Error::Config("open-loop run failed".into())),
                    };
                    (open, r)
                }
            })
            .collect()
    });

    let sample_labels = match &shared_open {
        Some((o, _)) => o.clone(),
        None => results
            .iter()
            .find_map(|(o, _)| o.as_ref().ok().cloned())
            .ok_or_else(|| Error::Config("every sweep point failed".into()))?,
    };
    let k = metric_index(&sample_labels, &cfg.controller.metric_output)?;
    let angle = sample_labels.output_is_angle[k];

    let worst = match axis {
        SweepAxis::GustGradient => results
            .iter()
            .enumerate()
            .filter_map(|(i, (_, r))| r.as_ref().ok().map(|p| (i, p.metrics.peak_open[k])))
            .fold(None, |best: Option<(usize, f64)>, (i, p)| match best {
                Some((_, bp)) if bp >= p => best,
                _ => Some((i, p)),
            })
            .map(|(i, _)| i),
        SweepAxis::Gamma => None,
    };

    let mut table = format!("{name},{SUMMARY_HEADER}");
    if axis == SweepAxis::GustGradient {
        table.push_str(",worst");
    }
    table.push('\n');
    let mut report = format!("sweep over {name}, metric output {}\n", cfg.controller.metric_output);
    let mut failures = 0;
    for (i, (v, (_, r))) in grid.iter().zip(&results).enumerate() {
        let _ = write!(table, "{v},{}", summary_fields(r, k, angle));
        if axis == SweepAxis::GustGradient {
            let _ = write!(table, ",{}", u8::from(worst == Some(i)));
        }
        table.push('\n');
        let pdir = points_dir.sub(&format!("{name}_{i:03}"))?;
        match r {
            Ok(p) => {
                pdir.write("closed_loop.csv", &p.closed.to_csv())?;
                pdir.write("metrics.csv", &metrics_csv(&p.metrics))?;
            }
            Err(e) => {
                failures += 1;
                let _ = writeln!(report, "{name} = {v}: {e}");
                write_divergence(&pdir, "closed_loop_partial.csv", e)?;
            }
        }
    }
    if let Some(i) = worst {
        let _ = writeln!(report, "worst-case {name} = {}", grid[i]);
    }
    let _ = writeln!(report, "{} points, {failures} failed", grid.len());
    dir.write(&format!("sweep_{name}.csv"), &table)?;
    dir.write("sweep_report.txt", &report)?;
    let csv = format!("sweep_{name}.csv");
    dir.write(
        &format!("sweep_{name}.gp"),
        &plot_script(
            &format!("sweep over {name}"),
            name,
            &[
                ("reduction %", vec![Curve { file: &csv, x: name, y: "reduction_pct", title: "peak reduction" }]),
                ("max flap [deg]", vec![Curve { file: &csv, x: name, y: "max_flap_deg", title: "max flap" }]),
            ],
        ),
    )?;
    Ok(Status::Ok)
}

fn cmd_rom_build(cfg: &RunConfig, dir: &OutputDir) -> Result<Status> {
    let fom = load_fom(cfg)?;
    let rom = load_or_reduce(cfg, &fom)?;
    let gust = cfg.gust.signal(&cfg.simulation, cfg.seed)?;
    let v = validate_rom(&fom, &rom, &gust, None, &cfg.simulation)?;
    let rom_path = dir.path("rom.json");
    save_rom(&rom, "rom", cfg.plant.params.as_deref(), &rom_path)?;

    let outs: Vec<&str> = cfg.validation.outputs.iter().map(String::as_str).collect();
    let pass = v.passes(&outs, cfg.validation.peak_tol, cfg.validation.nrmse_tol);
    let mut report = format!("full model {} states, ROM {} states\n\nretained modes:\n", fom.dim(), rom.dim());
    for m in &rom.modes {
        let _ = writeln!(
            report,
            "  {:+.6} {:+.6}i  zeta {:.4}  {:?}  gust participation {:.4e}",
            m.eigenvalue_re, m.eigenvalue_im, m.damping_ratio, m.kind, m.gust_participation
        );
    }
    report.push('\n');
    report.push_str(&v.report());
    let _ = writeln!(
        report,
        "\ncheck on {:?}: peak <= {}%, nrmse <= {}% -> {}",
        cfg.validation.outputs,
        100.0 * cfg.validation.peak_tol,
        100.0 * cfg.validation.nrmse_tol,
        if pass { "PASS" } else { "FAIL" }
    );
    dir.write("rom_report.txt", &report)?;
    dir.write("fom_response.csv", &v.fom_trace.to_csv())?;
    dir.write("rom_response.csv", &v.rom_trace.to_csv())?;
    dir.write(
        "rom_validation.gp",
        &trace_plot(&v.fom_trace, &[("fom_response.csv", "full model"), ("rom_response.csv", "ROM")], "ROM validation"),
    )?;
    Ok(if pass { Status::Ok } else { Status::ValidationFailed })
}

fn cmd_gust_gen(cfg: &RunConfig, dir: &OutputDir) -> Result<Status> {
    let gust = cfg.gust.signal(&cfg.simulation, cfg.seed)?;
    let steps = cfg.simulation.validate()?;
    let samples: Vec<f64> = (0..=steps).map(|k| gust.eval(k as f64 * cfg.simulation.dt)).collect();
    let mut csv = String::from("t,u_d\n");
    for (k, v) in samples.iter().enumerate() {
        let _ = writeln!(csv, "{},{v}", k as f64 * cfg.simulation.dt);
    }
    dir.write("gust.csv", &csv)?;
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let peak = samples.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let mut report = format!("{:?}\nsamples {}\nmean {mean:.6e}\nvariance {var:.6e}\npeak {peak:.6e}\n", cfg.gust, samples.len());
    let mut panels = vec![("u_d", vec![Curve { file: "gust.csv", x: "t", y: "u_d", title: "gust" }])];
    if let GustConfig::VonKarman { sigma, length_scale, u_inf } = cfg.gust {
        let spec = VonKarmanSpec { sigma, length_scale, u_inf };
        let fs = 1.0 / cfg.simulation.dt;
        let nperseg = (samples.len() / 8).next_power_of_two().clamp(256, 1 << 16).min(samples.len());
        let (f, p) = welch_psd(&samples, fs, nperseg);
        let mut psd = String::from("f,welch,analytic\n");
        for (fi, pi) in f.iter().zip(&p).skip(1) {
            let _ = writeln!(psd, "{fi},{pi},{}", spec.psd_hz(*fi));
        }
        dir.write("psd.csv", &psd)?;
        let _ = writeln!(report, "target variance {:.6e}\nWelch segment {nperseg}", sigma * sigma);
        panels.push((
            "PSD",
            vec![
                Curve { file: "psd.csv", x: "f", y: "welch", title: "Welch" },
                Curve { file: "psd.csv", x: "f", y: "analytic", title: "Von Karman" },
            ],
        ));
    }
    dir.write("gust_report.txt", &report)?;
    let mut script = plot_script("gust", "t", &panels[..1]);
    if panels.len() > 1 {
        script.push_str("\npause -1\nset logscale xy\n");
        script.push_str(&plot_script("gust spectrum", "f [Hz]", &panels[1..]));
    }
    dir.write("gust.gp", &script)?;
    Ok(Status::Ok)
}

fn cmd_validate(cfg: &RunConfig, dir: &OutputDir) -> Result<Status> {
    let pipe = build_pipeline(cfg)?;
    let gust = cfg.gust.signal(&cfg.simulation, cfg.seed)?;
    let mut report = String::new();
    let mut ok = true;

    let v = validate_rom(&pipe.fom, &pipe.rom, &gust, None, &cfg.simulation)?;
    let outs: Vec<&str> = cfg.validation.outputs.iter().map(String::as_str).collect();
    let rom_ok = v.passes(&outs, cfg.validation.peak_tol, cfg.validation.nrmse_tol);
    ok &= rom_ok;
    let _ = writeln!(report, "[{}] ROM fidelity\n{}", verdict(rom_ok), v.report());

    let linear = crate::sim::SimulationConfig {
        nonlinear: false,
        monitor_lipschitz: false,
        ..cfg.simulation.clone()
    };
    match (&pipe.controller.theta_star, cfg.controller.gamma > 0.0) {
        (Some(star), true) => {
            let tr = integrate_closed_loop(&pipe.rom, &pipe.controller, &gust, &linear)?;
            let cert = lyapunov_certificate(&tr, &pipe.controller.design, Some(star), CertificateMode::Full)?;
            let settle = 5.0 * gust.active_duration();
            let decay = (linear.duration >= settle).then(|| cert.residual_error_ratio(settle));
            let decay_ok = decay.is_none_or(|r| r <= 1e-4);
            ok &= cert.non_increasing && decay_ok;
            let _ = writeln!(report, "[{}] linear Lyapunov certificate\n{}", verdict(cert.non_increasing && decay_ok), cert.report());
            match decay {
                Some(r) => {
                    let _ = writeln!(report, "max |e| from 5 gust durations on / peak {r:.3e}\n");
                }
                None => report.push_str("run too short for the error-decay check\n\n"),
            }
        }
        _ => {
            let _ = writeln!(
                report,
                "[n/a] linear Lyapunov certificate: matching residual {:.3e}, gamma {}\n",
                pipe.ideal.residual, cfg.controller.gamma
            );
        }
    }

    let nl = crate::sim::SimulationConfig {
        nonlinear: true,
        monitor_lipschitz: true,
        ..cfg.simulation.clone()
    };
    let tr = integrate_closed_loop(&pipe.rom, &pipe.controller, &gust, &nl)?;
    let online = LipschitzMonitor::from_trace(&pipe.controller.design, &tr)?;
    let offline = lipschitz_margin(&pipe.rom, &pipe.controller.design, &tr)?;
    let diff = online
        .ratios
        .iter()
        .zip(&offline.ratios)
        .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
        .fold(0.0, f64::max);
    let consistent = diff <= 1e-12 && online.violated == offline.violated;
    ok &= consistent;
    let _ = writeln!(
        report,
        "[{}] Lipschitz monitor vs offline recomputation (max relative difference {diff:.3e})\n{}",
        verdict(consistent),
        monitor_report(&online)
    );
    let _ = writeln!(report, "L_F = {:.6e}", lipschitz_bound(&pipe.controller.design));
    dir.write("validate_report.txt", &report)?;
    Ok(if ok { Status::Ok } else { Status::ValidationFailed })
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(dir: &std::path::Path) -> RunConfig {
        let mut c = RunConfig::default();
        c.simulation.dt = 0.05;
        c.simulation.duration = 300.0;
        c.out = Some(dir.to_path_buf());
        c
    }

    fn cli(cmd: Command, config: Option<PathBuf>, out: &std::path::Path) -> Cli {
        Cli {
            config,
            out: Some(out.to_path_buf()),
            seed: None,
            workers: Some(2),
            command: cmd,
        }
    }

    fn write_config(dir: &std::path::Path, c: &RunConfig) -> PathBuf {
        let p = dir.join("run.toml");
        std::fs::write(&p, c.to_toml_string()).unwrap();
        p
    }

    #[test]
    fn frozen_zero_gains_give_zero_reduction() {
        let tmp = tempfile::tempdir().unwrap();
        let mut c = quick(tmp.path());
        c.controller.gamma = 0.0;
        let p = write_config(tmp.path(), &c);
        let out = tmp.path().join("sim");
        assert_eq!(run(&cli(Command::Simulate, Some(p), &out)).unwrap(), Status::Ok);
        let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
        let row: Vec<&str> = summary.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(row[1], "ok");
        assert_eq!(row[4], "0");
        assert!(out.join("resolved_config.toml").exists());
        assert!(out.join("simulate.gp").exists());
    }

    #[test]
    fn single_point_sweep_matches_simulate() {
        let tmp = tempfile::tempdir().unwrap();
        let mut c = quick(tmp.path());
        c.sweep.gamma = Grid::List(vec![c.controller.gamma]);
        let p = write_config(tmp.path(), &c);
        let a = tmp.path().join("a");
        let b = tmp.path().join("b");
        run(&cli(Command::Simulate, Some(p.clone()), &a)).unwrap();
        run(&cli(Command::Sweep { axis: SweepAxis::Gamma }, Some(p), &b)).unwrap();
        let sim = std::fs::read_to_string(a.join("summary.csv")).unwrap();
        let sweep = std::fs::read_to_string(b.join("sweep_gamma.csv")).unwrap();
        assert_eq!(sim.lines().nth(1), sweep.lines().nth(1));
        assert_eq!(
            std::fs::read_to_string(a.join("closed_loop.csv")).unwrap().lines().count(),
            std::fs::read_to_string(b.join("points/gamma_000/closed_loop.csv")).unwrap().lines().count()
        );
    }

    #[test]
    fn missing_parameter_file_is_a_config_error() {
        let tmp = tempfile::tempdir().unwrap();
        let mut c = quick(tmp.path());
        c.plant.params = Some(tmp.path().join("nope.toml"));
        let p = write_config(tmp.path(), &c);
        let r = run(&cli(Command::RomBuild, Some(p), &tmp.path().join("o")));
        assert_eq!(exit_code(&r), EXIT_CONFIG);
        assert!(r.unwrap_err().to_string().contains("nope.toml"));
    }

    #[test]
    fn divergence_exits_with_four_and_keeps_partial_trace() {
        let tmp = tempfile::tempdir().unwrap();
        let mut c = quick(tmp.path());
        c.simulation.divergence_bound = 1e-3;
        let p = write_config(tmp.path(), &c);
        let out = tmp.path().join("o");
        let r = run(&cli(Command::Simulate, Some(p), &out));
        assert_eq!(exit_code(&r), EXIT_DIVERGED);
        assert!(out.join("open_loop_partial.csv").exists());
    }

    #[test]
    fn full_order_rom_build_is_exact() {
        let tmp = tempfile::tempdir().unwrap();
        let mut c = quick(tmp.path());
        c.rom = crate::romgen::ModeCriteria { n_states: 14, real_states: 8 };
        let p = write_config(tmp.path(), &c);
        let out = tmp.path().join("o");
        assert_eq!(run(&cli(Command::RomBuild, Some(p), &out)).unwrap(), Status::Ok);
        assert!(crate::plantio::load_rom(out.join("rom.json")).unwrap().rom.dim() == 14);
    }

    #[test]
    fn gradient_sweep_flag_agrees_with_finer_grid() {
        let tmp = tempfile::tempdir().unwrap();
        let mut c = quick(tmp.path());
        c.simulation.nonlinear = false;
        c.simulation.duration = 400.0;
        let coarse = Grid::Range { start: 5.0, stop: 105.0, count: 11 };
        c.sweep.gust_gradient = coarse.clone();
        let p = write_config(tmp.path(), &c);
        let out = tmp.path().join("o");
        run(&cli(Command::Sweep { axis: SweepAxis::GustGradient }, Some(p), &out)).unwrap();
        let table = std::fs::read_to_string(out.join("sweep_h_g.csv")).unwrap();
        let flagged: f64 = table
            .lines()
            .skip(1)
            .find(|l| l.ends_with(",1"))
            .and_then(|l| l.split(',').next())
            .unwrap()
            .parse()
            .unwrap();
        // brute force on a 5x finer grid, open loop only
        let fom = load_fom(&c).unwrap();
        let rom = load_or_reduce(&c, &fom).unwrap();
        let k = rom.output_labels.iter().position(|l| l == "plunge").unwrap();
        let fine = Grid::Range { start: 5.0, stop: 105.0, count: 51 }.points().unwrap();
        let best = fine
            .iter()
            .map(|&h| {
                let g = GustSignal::one_cosine(0.14, h, 1.0).unwrap();
                (h, integrate_open_loop(&rom, &g, None, &c.simulation).unwrap().peak_abs(k))
            })
            .fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        assert!((flagged - best.0).abs() <= 10.0, "{flagged} vs {}", best.0);
    }
}
