use num_complex::Complex64;
use thiserror::Error;

use crate::sim::SimulationTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix contains non-finite entries ({0})")]
    NonFinite(String),

    #[error("matrix is not Hurwitz: eigenvalue {eigenvalue} has non-negative real part")]
    NotHurwitz { eigenvalue: Complex64 },

    #[error("matrix is not symmetric: max |M - M^T| = {asymmetry:e}")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("eigenbasis is defective or ill-conditioned (condition {condition:e}); clustered eigenvalues: {}", fmt_list(.cluster))]
    DefectiveEigenbasis {
        condition: f64,
        cluster: Vec<Complex64>,
    },

    #[error("spectrum is not closed under conjugation: {0}")]
    NotConjugateClosed(String),

    #[error("pair (A, B) is not controllable: controllability matrix rank {rank} < {dim}")]
    Uncontrollable { rank: usize, dim: usize },

    #[error("zero computation needs a square system, got {inputs} inputs and {outputs} outputs")]
    NonSquareSystem { inputs: usize, outputs: usize },

    #[error("degenerate system: {0}")]
    Degenerate(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mode selection: {0}")]
    ModeSelection(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("{0}")]
    Certificate(String),

    #[error("simulation diverged at t = {time} (state norm {norm:e})")]
    Diverged {
        time: f64,
        norm: f64,
        partial: Box<SimulationTrace>,
    },

    #[error("schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("unsupported format version {found} (this build reads up to {supported})")]
    Version { found: u32, supported: u32 },

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

fn fmt_list(values: &[Complex64]) -> String {
    values
        .iter()
        .map(|z| format!("{:.6}{:+.6}i", z.re, z.im))
        .collect::<Vec<_>>()
        .join(", ")
}
