use std::path::PathBuf;

use gla::cli::{self, Cli, Command, RunConfig};
use gla::gusts::GustSignal;
use gla::numerics::{eigenvalues, solve_lyapunov};
use gla::sim::{compute_metrics, integrate_closed_loop, integrate_open_loop};
use nalgebra::DMatrix;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: gla::Error) -> PyErr {
    match e {
        gla::Error::Diverged { .. } => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(PyValueError::new_err("ragged matrix"));
    }
    Ok(DMatrix::from_row_iterator(n, m, rows.into_iter().flatten()))
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Solves `A^T P + P A = -Q` for Hurwitz `A` and symmetric `Q`.
#[pyfunction]
fn lyapunov(a: Vec<Vec<f64>>, q: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    let p = solve_lyapunov(&matrix(a)?, &matrix(q)?).map_err(to_py)?;
    Ok(rows(&p))
}

fn load(config: Option<PathBuf>) -> PyResult<RunConfig> {
    match config {
        Some(p) => RunConfig::load(&p).map_err(to_py),
        None => Ok(RunConfig::default()),
    }
}

/// Eigenvalues `(re, im)` of the full model and of the ROM for a run config.
#[pyfunction]
#[pyo3(signature = (config=None))]
fn spectra(config: Option<PathBuf>) -> PyResult<(Vec<(f64, f64)>, Vec<(f64, f64)>)> {
    let cfg = load(config)?;
    let fom = cli::load_fom(&cfg).map_err(to_py)?;
    let rom = cli::load_or_reduce(&cfg, &fom).map_err(to_py)?;
    let pairs = |m: &DMatrix<f64>| eigenvalues(m).into_iter().map(|z| (z.re, z.im)).collect();
    Ok((pairs(&fom.a), pairs(&rom.a)))
}

/// One-cosine gust velocity sampled at `t`.
#[pyfunction]
fn one_cosine(w_gmax: f64, h_g: f64, u_inf: f64, t: Vec<f64>) -> PyResult<Vec<f64>> {
    let g = GustSignal::one_cosine(w_gmax, h_g, u_inf).map_err(to_py)?;
    Ok(t.into_iter().map(|s| g.eval(s)).collect())
}

/// Open- and closed-loop run without writing files; returns peak and RMS
/// reductions (percent) per output plus the largest control command.
#[pyfunction]
#[pyo3(signature = (config=None, gamma=None))]
fn simulate<'py>(py: Python<'py>, config: Option<PathBuf>, gamma: Option<f64>) -> PyResult<Bound<'py, PyDict>> {
    let mut cfg = load(config)?;
    if let Some(g) = gamma {
        cfg.controller.gamma = g;
    }
    let metrics = py
        .allow_threads(|| {
            let pipe = cli::build_pipeline(&cfg)?;
            let gust = cfg.gust.signal(&cfg.simulation, cfg.seed)?;
            let open = integrate_open_loop(&pipe.rom, &gust, None, &cfg.simulation)?;
            let closed = integrate_closed_loop(&pipe.rom, &pipe.controller, &gust, &cfg.simulation)?;
            compute_metrics(&open, &closed)
        })
        .map_err(to_py)?;
    let d = PyDict::new(py);
    let peak = PyDict::new(py);
    let rms = PyDict::new(py);
    for (k, l) in metrics.labels.iter().enumerate() {
        peak.set_item(l, metrics.peak_reduction_pct[k])?;
        rms.set_item(l, metrics.rms_reduction_pct[k])?;
    }
    d.set_item("peak_reduction_pct", peak)?;
    d.set_item("rms_reduction_pct", rms)?;
    d.set_item("max_control", metrics.max_control)?;
    d.set_item("max_flap_deg", metrics.max_flap.map(f64::to_degrees))?;
    Ok(d)
}

/// Runs a CLI subcommand; returns the process exit code.
#[pyfunction]
#[pyo3(signature = (command, config=None, out=None, seed=None, workers=None))]
fn run(
    py: Python<'_>,
    command: &str,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    workers: Option<usize>,
) -> PyResult<i32> {
    let command = match command {
        "rom-build" => Command::RomBuild,
        "simulate" => Command::Simulate,
        "sweep-gamma" => Command::Sweep { axis: cli::SweepAxis::Gamma },
        "sweep-gust-gradient" => Command::Sweep { axis: cli::SweepAxis::GustGradient },
        "gust-gen" => Command::GustGen,
        "validate" => Command::Validate,
        other => return Err(PyValueError::new_err(format!("unknown command `{other}`"))),
    };
    let c = Cli {
        config,
        out,
        seed,
        workers,
        command,
    };
    Ok(py.allow_threads(|| cli::exit_code(&cli::run(&c))))
}

#[pymodule]
#[pyo3(name = "mrac_gla")]
fn mrac_gla_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(lyapunov, m)?)?;
    m.add_function(wrap_pyfunction!(spectra, m)?)?;
    m.add_function(wrap_pyfunction!(one_cosine, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
