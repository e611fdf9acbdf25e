use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::sim::{GlaMetrics, SimulationTrace};

/// Writes into one output directory, creating it on first use.
pub struct OutputDir {
    pub root: PathBuf,
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        Ok(Self { root })
    }

    pub fn sub(&self, name: &str) -> Result<Self> {
        Self::create(self.root.join(name))
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, text: &str) -> Result<PathBuf> {
        let p = self.path(name);
        std::fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        Ok(p)
    }
}

/// One curve of a gnuplot script: `(csv file, x column, y column, title)`.
pub struct Curve<'a> {
    pub file: &'a str,
    pub x: &'a str,
    pub y: &'a str,
    pub title: &'a str,
}

/// A gnuplot script reading only CSV files in its own directory.
pub fn plot_script(title: &str, xlabel: &str, panels: &[(&str, Vec<Curve<'_>>)]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# {title}");
    s.push_str("# Reads the CSV files next to this script; run it from this directory.\n");
    s.push_str("set datafile separator \",\"\n");
    s.push_str("set grid\n");
    let _ = writeln!(s, "set xlabel \"{xlabel}\"");
    if panels.len() > 1 {
        let _ = writeln!(s, "set multiplot layout {},1 title \"{title}\"", panels.len());
    } else {
        let _ = writeln!(s, "set title \"{title}\"");
    }
    for (ylabel, curves) in panels {
        let _ = writeln!(s, "set ylabel \"{ylabel}\"");
        let parts: Vec<String> = curves
            .iter()
            .map(|c| format!("\"{}\" using \"{}\":\"{}\" with lines title \"{}\"", c.file, c.x, c.y, c.title))
            .collect();
        let _ = writeln!(s, "plot {}", parts.join(", \\\n     "));
    }
    if panels.len() > 1 {
        s.push_str("unset multiplot\n");
    }
    s
}

/// Per-output metrics, angles in degrees.
pub fn metrics_csv(m: &GlaMetrics) -> String {
    let mut s = String::from(
        "output,peak_open,peak_closed,peak_reduction_pct,rms_open,rms_closed,rms_reduction_pct,settling_time\n",
    );
    for k in 0..m.labels.len() {
        let (scale, name) = if m.output_is_angle[k] {
            (180.0 / std::f64::consts::PI, format!("{}_deg", m.labels[k]))
        } else {
            (1.0, m.labels[k].clone())
        };
        let settle = m.settling_time[k].map_or_else(|| "NaN".to_string(), |t| t.to_string());
        let _ = writeln!(
            s,
            "{name},{},{},{},{},{},{},{settle}",
            m.peak_open[k] * scale,
            m.peak_closed[k] * scale,
            m.peak_reduction_pct[k],
            m.rms_open[k] * scale,
            m.rms_closed[k] * scale,
            m.rms_reduction_pct[k],
        );
    }
    s
}

/// `t` plus every entry of `θ` (column-major).
pub fn gains_csv(trace: &SimulationTrace) -> String {
    let mut s = String::from("t");
    let len = trace.theta.first().map_or(0, |t| t.len());
    for k in 0..len {
        let _ = write!(s, ",theta{k}");
    }
    s.push('\n');
    for (t, th) in trace.t.iter().zip(&trace.theta) {
        let _ = write!(s, "{t}");
        for v in th.iter() {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}
