use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter lies outside the domain where the model is defined.
    #[error("parameter out of domain: {0}")]
    Domain(String),

    /// Evaluation exactly on the band-edge branch point.
    #[error("self-energy is singular at z = {0} (band edge)")]
    Singular(Complex64),

    /// The resolvent denominator vanishes.
    #[error("resolvent pole at z = {0}")]
    Pole(Complex64),

    /// Band curvature vanishes, so the effective mass is undefined.
    #[error("degenerate band curvature: {0}")]
    DegenerateCurvature(String),

    /// An amplitude could not be evaluated on a quadrature node.
    #[error("amplitude evaluation failed at node x = {x}: {source}")]
    Node {
        x: f64,
        #[source]
        source: Box<Error>,
    },

    /// NaN or infinity produced by a numerical routine.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A result violates a physical invariant by more than the tolerance.
    #[error("accuracy check failed: {0}; refine the quadrature settings")]
    Accuracy(String),

    /// The explicit stepper blew up.
    #[error("stepper instability: {0}")]
    Stepper(String),

    #[error("time grids do not match: {0}")]
    GridMismatch(String),

    /// `1 - gamma * pi_b(z)` vanished on the transform contour.
    #[error("resummation pole on the transform contour at index {0}")]
    ResummationPole(usize),

    /// Malformed input data handed to a routine (not a config problem).
    #[error("invalid input: {0}")]
    Input(String),

    #[error("config error at line {line}, key `{key}`: {message}")]
    Config {
        line: usize,
        key: String,
        message: String,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn accuracy(msg: impl Into<String>) -> Self {
        Error::Accuracy(msg.into())
    }

    /// Process exit status the CLI reports for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Domain(_) | Error::DegenerateCurvature(_) => 2,
            Error::Accuracy(_)
            | Error::Numerical(_)
            | Error::Stepper(_)
            | Error::Pole(_)
            | Error::Singular(_)
            | Error::Node { .. }
            | Error::ResummationPole(_) => 3,
            Error::GridMismatch(_) | Error::Input(_) | Error::Io(_) => 1,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
