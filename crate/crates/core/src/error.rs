use std::fmt;

use thiserror::Error;

/// Which artificial boundary a quantity lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Face {
    /// Face z = +h, normal (0, 0, 1).
    Upper,
    /// Face z = -h, normal (0, 0, -1).
    Lower,
}

impl fmt::Display for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Face::Upper => write!(f, "upper"),
            Face::Lower => write!(f, "lower"),
        }
    }
}

#[derive(Debug, Error)]
pub enum HopeError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(
        "Wood anomaly at mode (p={p}, q={q}) in the {face} half-space: |gamma| = {gamma_abs:.3e}"
    )]
    WoodAnomaly {
        p: i64,
        q: i64,
        face: Face,
        gamma_abs: f64,
    },

    #[error(
        "divergence-closure resonance at mode (p={p}, q={q}): |sin(2 gamma h)| = {sin_abs:.3e} (2 gamma h = {phase})"
    )]
    ClosureResonance {
        p: i64,
        q: i64,
        sin_abs: f64,
        phase: f64,
    },

    #[error(
        "singular boundary-value system at mode (p={p}, q={q}): condition estimate {condition:.3e}"
    )]
    SingularMode { p: i64, q: i64, condition: f64 },

    #[error("base permittivity too close to zero: min |eps0| = {min:.3e} < floor {floor:.3e}")]
    PermittivityFloor { min: f64, floor: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("no convergence after {iterations} iterations (last relative update {last:.3e})")]
    NonConvergence {
        iterations: usize,
        history: Vec<f64>,
        last: f64,
    },

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("envelope is not laminar: max transverse deviation {deviation:.3e}")]
    NotLaminar { deviation: f64 },

    #[error("order {0} norm is not finite")]
    Overflow(usize),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = HopeError> = std::result::Result<T, E>;

impl HopeError {
    /// Process exit status used by the command-line front-end.
    pub fn exit_code(&self) -> u8 {
        match self {
            HopeError::InvalidConfig(_)
            | HopeError::Parse(_)
            | HopeError::PermittivityFloor { .. }
            | HopeError::NotLaminar { .. }
            | HopeError::ShapeMismatch(_) => 2,
            HopeError::WoodAnomaly { .. } => 3,
            HopeError::ClosureResonance { .. } => 4,
            HopeError::SingularMode { .. } => 5,
            HopeError::NonConvergence { .. }
            | HopeError::DegenerateSeries(_)
            | HopeError::Overflow(_) => 6,
            HopeError::Io(_) => 1,
        }
    }
}
