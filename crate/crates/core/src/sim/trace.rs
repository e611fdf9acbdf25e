use std::fmt::Write as _;

use nalgebra::DMatrix;

/// Logged samples of a run. Closed-loop fields are empty for open-loop runs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimulationTrace {
    pub t: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub x_m: Vec<Vec<f64>>,
    pub theta: Vec<DMatrix<f64>>,
    pub u_c: Vec<Vec<f64>>,
    pub u_d: Vec<Vec<f64>>,
    /// `C x`, radians for angle outputs.
    pub outputs: Vec<Vec<f64>>,
    pub output_labels: Vec<String>,
    pub output_is_angle: Vec<bool>,
    /// `‖F_NR(x) - F_NR(x_m)‖ / ‖x - x_m‖` per logged sample, when monitored.
    pub lipschitz_ratio: Vec<f64>,
    /// Lyapunov function `V(t)` when a certificate was attached.
    pub lyapunov: Vec<f64>,
}

impl SimulationTrace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn is_closed_loop(&self) -> bool {
        !self.x_m.is_empty()
    }

    pub fn output_index(&self, label: &str) -> Option<usize> {
        self.output_labels.iter().position(|l| l == label)
    }

    /// Output `k` over time, converted to degrees for angles.
    pub fn output_display(&self, k: usize) -> Vec<f64> {
        let scale = if self.output_is_angle[k] { 180.0 / std::f64::consts::PI } else { 1.0 };
        self.outputs.iter().map(|y| y[k] * scale).collect()
    }

    pub fn peak_abs(&self, k: usize) -> f64 {
        self.outputs.iter().map(|y| y[k].abs()).fold(0.0, f64::max)
    }

    pub fn rms(&self, k: usize) -> f64 {
        if self.outputs.is_empty() {
            return 0.0;
        }
        (self.outputs.iter().map(|y| y[k] * y[k]).sum::<f64>() / self.outputs.len() as f64).sqrt()
    }

    /// Tracking error `e = x - x_m` per sample (empty for open loop).
    pub fn errors(&self) -> Vec<Vec<f64>> {
        self.x
            .iter()
            .zip(&self.x_m)
            .map(|(x, m)| x.iter().zip(m).map(|(a, b)| a - b).collect())
            .collect()
    }

    /// Tracking error norms `‖x - x_m‖` per sample.
    pub fn error_norms(&self) -> Vec<f64> {
        self.x
            .iter()
            .zip(&self.x_m)
            .map(|(x, m)| x.iter().zip(m).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
            .collect()
    }

    /// CSV column name of output `k`; angles carry a `_deg` suffix.
    pub fn column_name(&self, k: usize) -> String {
        if self.output_is_angle[k] {
            format!("{}_deg", self.output_labels[k])
        } else {
            self.output_labels[k].clone()
        }
    }

    /// CSV with time, outputs (degrees for angles), control and gust columns.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t");
        for k in 0..self.output_labels.len() {
            s.push(',');
            s.push_str(&self.column_name(k));
        }
        let m = self.u_c.first().map_or(0, Vec::len);
        let g = self.u_d.first().map_or(0, Vec::len);
        for j in 0..m {
            let _ = write!(s, ",u_c{j}");
        }
        for j in 0..g {
            let _ = write!(s, ",u_d{j}");
        }
        if !self.lyapunov.is_empty() {
            s.push_str(",V");
        }
        if !self.lipschitz_ratio.is_empty() {
            s.push_str(",lipschitz_ratio");
        }
        s.push('\n');
        let to_deg = 180.0 / std::f64::consts::PI;
        for i in 0..self.t.len() {
            let _ = write!(s, "{}", self.t[i]);
            for (k, y) in self.outputs[i].iter().enumerate() {
                let v = if self.output_is_angle[k] { y * to_deg } else { *y };
                let _ = write!(s, ",{v}");
            }
            for v in self.u_c[i].iter().chain(&self.u_d[i]) {
                let _ = write!(s, ",{v}");
            }
            if let Some(v) = self.lyapunov.get(i) {
                let _ = write!(s, ",{v}");
            }
            if let Some(r) = self.lipschitz_ratio.get(i) {
                let _ = write!(s, ",{r}");
            }
            s.push('\n');
        }
        s
    }

    /// Index of the `flap` output, if the plant has one.
    pub fn flap_index(&self) -> Option<usize> {
        self.output_index("flap")
    }

    /// CSV of the plant state (and reference state when closed loop).
    pub fn states_csv(&self) -> String {
        let n = self.x.first().map_or(0, Vec::len);
        let mut s = String::from("t");
        for j in 0..n {
            let _ = write!(s, ",x{j}");
        }
        if self.is_closed_loop() {
            for j in 0..n {
                let _ = write!(s, ",xm{j}");
            }
        }
        s.push('\n');
        for i in 0..self.t.len() {
            let _ = write!(s, "{}", self.t[i]);
            for v in self.x[i].iter().chain(self.x_m.get(i).into_iter().flatten()) {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        s
    }
}
